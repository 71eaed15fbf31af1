#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace bookpipe::prompts {

// Built-in template for a pipeline step. Throws std::out_of_range for an
// unknown step name.
const std::string& builtin(const std::string& step);

// Loads overrides from <dir>/<step>.txt when present, falling back to the
// builtin text.
class TemplateSet {
 public:
  TemplateSet() = default;
  explicit TemplateSet(std::filesystem::path override_dir);
  std::string get(const std::string& step) const;

 private:
  std::optional<std::filesystem::path> dir_;
};

// Replaces {{key}} placeholders. Unknown placeholders are left intact.
std::string render(const std::string& tmpl,
                   const std::map<std::string, std::string>& values);

}  // namespace bookpipe::prompts
