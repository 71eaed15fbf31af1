#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bookpipe::tok {

struct TokenizerUnavailable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::vector<int> encode(std::string_view text) const = 0;
  virtual const std::string& name() const = 0;
};

// Token id = byte value; T equals the byte count of the input.
class ByteTokenizer final : public Tokenizer {
 public:
  std::vector<int> encode(std::string_view text) const override;
  const std::string& name() const override;
};

// Byte-level BPE driven by a merge table loaded from a file. Each
// non-comment line holds two token ids "left right"; the merge defined on
// line k (0-based among merges) produces token id 256 + k. Both ids must
// already exist (a byte or an earlier merge). Merges apply lowest rank
// first, repeatedly, over the raw byte sequence.
class MergeTableTokenizer final : public Tokenizer {
 public:
  static MergeTableTokenizer load(const std::string& path);
  static MergeTableTokenizer from_merges(
      std::vector<std::pair<int, int>> merges);

  std::vector<int> encode(std::string_view text) const override;
  const std::string& name() const override;
  std::size_t vocab_size() const { return 256 + merges_.size(); }

 private:
  MergeTableTokenizer() = default;
  std::vector<std::pair<int, int>> merges_;
  std::string name_ = "merge_table";
};

struct TokenizerSpec {
  std::string type = "byte";  // "byte" | "merge_table"
  std::string path;           // merge table file for merge_table
};

std::shared_ptr<const Tokenizer> make_tokenizer(const TokenizerSpec& spec);

}  // namespace bookpipe::tok
