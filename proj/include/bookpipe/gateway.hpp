#pragma once

#include <condition_variable>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace bookpipe::gw {

struct ModelProfile {
  std::string name;
  std::string endpoint = "mock";  // URL or "mock"
  bool reasoning = false;
  double temperature = 0.0;
  int max_output_tokens = 8192;
  int max_retries = 3;
  std::string api_key_env;  // env var holding the bearer token, may be empty
};

void to_json(nlohmann::json& j, const ModelProfile& p);
void from_json(const nlohmann::json& j, ModelProfile& p);

// Identifies one logical model call. The ordinal separates ensemble runs
// and repair attempts so the mock backend can serve distinct fixtures.
struct CallKey {
  std::string step;
  std::string book_id;
  std::string unit_id;
  int ordinal = 0;

  CallKey with_ordinal(int o) const {
    CallKey k = *this;
    k.ordinal = o;
    return k;
  }
};

// SHA-256 of "step|book|unit|ordinal", lowercase hex, first 16 chars.
std::string fixture_key(const CallKey& key);

std::string sha256_hex(std::string_view data);

class Transport : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MissingFixture : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SchemaFailure : public std::runtime_error {
 public:
  SchemaFailure(const std::string& what, std::vector<std::string> attempts);
  std::vector<std::string> raw_attempts;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string complete(const ModelProfile& profile,
                               const std::string& prompt,
                               const CallKey& key) = 0;
};

// Serves canned responses from fixtures/<key>.txt or fixtures/<key>.json.
class MockBackend : public Backend {
 public:
  explicit MockBackend(std::filesystem::path fixtures_dir);
  std::string complete(const ModelProfile& profile, const std::string& prompt,
                       const CallKey& key) override;

 private:
  std::filesystem::path dir_;
};

// Chat-completions POST client with bounded retry and backoff.
class HttpBackend : public Backend {
 public:
  HttpBackend() = default;
  std::string complete(const ModelProfile& profile, const std::string& prompt,
                       const CallKey& key) override;
};

// Parses raw model text into a validated value, throwing on violations.
struct Schema {
  std::string name;
  std::function<nlohmann::json(const std::string& raw)> parse;
};

struct StructuredResponse {
  std::string raw_text;
  nlohmann::json parsed;
  int attempts = 1;
};

class Gateway {
 public:
  explicit Gateway(std::shared_ptr<Backend> backend, int max_in_flight = 4);

  static Gateway with_fixtures(const std::filesystem::path& fixtures_dir,
                               int max_in_flight = 4);

  std::string complete(const ModelProfile& profile, const std::string& prompt,
                       const CallKey& key);

  // k completions at ordinals key.ordinal .. key.ordinal + k - 1.
  std::vector<std::string> ensemble_complete(const ModelProfile& profile,
                                             const std::string& prompt,
                                             const CallKey& key, int k);

  // Re-prompts with the validation error appended until the schema accepts,
  // spending one ordinal per attempt; at most max_retries re-prompts.
  StructuredResponse complete_structured(const ModelProfile& profile,
                                         const std::string& prompt,
                                         const CallKey& key,
                                         const Schema& schema);

 private:
  struct Slot;
  std::shared_ptr<Backend> backend_;
  int max_in_flight_;
  int in_flight_ = 0;
  std::mutex mu_;
  std::condition_variable cv_;
};

}  // namespace bookpipe::gw
