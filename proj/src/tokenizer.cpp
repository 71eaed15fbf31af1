#include "bookpipe/tokenizer.hpp"

#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace bookpipe::tok {

std::vector<int> ByteTokenizer::encode(std::string_view text) const {
  std::vector<int> out;
  out.reserve(text.size());
  for (unsigned char c : text) out.push_back(static_cast<int>(c));
  return out;
}

const std::string& ByteTokenizer::name() const {
  static const std::string kName = "byte";
  return kName;
}

MergeTableTokenizer MergeTableTokenizer::load(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw TokenizerUnavailable("cannot open merge table: " + path);
  std::vector<std::pair<int, int>> merges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    int a = -1, b = -1;
    if (!(ls >> a >> b))
      throw TokenizerUnavailable("bad merge table line " +
                                 std::to_string(lineno) + " in " + path);
    int next_id = 256 + static_cast<int>(merges.size());
    if (a < 0 || b < 0 || a >= next_id || b >= next_id)
      throw TokenizerUnavailable("merge references undefined token at line " +
                                 std::to_string(lineno) + " in " + path);
    merges.emplace_back(a, b);
  }
  MergeTableTokenizer t = from_merges(std::move(merges));
  t.name_ = "merge_table:" + path;
  return t;
}

MergeTableTokenizer MergeTableTokenizer::from_merges(
    std::vector<std::pair<int, int>> merges) {
  MergeTableTokenizer t;
  t.merges_ = std::move(merges);
  return t;
}

std::vector<int> MergeTableTokenizer::encode(std::string_view text) const {
  std::vector<int> toks;
  toks.reserve(text.size());
  for (unsigned char c : text) toks.push_back(static_cast<int>(c));

  std::map<std::pair<int, int>, int> rank;
  for (std::size_t i = 0; i < merges_.size(); ++i)
    rank.emplace(merges_[i], static_cast<int>(i));

  while (toks.size() >= 2) {
    int best_rank = std::numeric_limits<int>::max();
    for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
      auto it = rank.find({toks[i], toks[i + 1]});
      if (it != rank.end() && it->second < best_rank) best_rank = it->second;
    }
    if (best_rank == std::numeric_limits<int>::max()) break;
    auto [a, b] = merges_[static_cast<std::size_t>(best_rank)];
    int merged = 256 + best_rank;
    std::vector<int> next;
    next.reserve(toks.size());
    for (std::size_t i = 0; i < toks.size();) {
      if (i + 1 < toks.size() && toks[i] == a && toks[i + 1] == b) {
        next.push_back(merged);
        i += 2;
      } else {
        next.push_back(toks[i]);
        i += 1;
      }
    }
    toks.swap(next);
  }
  return toks;
}

const std::string& MergeTableTokenizer::name() const { return name_; }

std::shared_ptr<const Tokenizer> make_tokenizer(const TokenizerSpec& spec) {
  if (spec.type == "byte") return std::make_shared<ByteTokenizer>();
  if (spec.type == "merge_table")
    return std::make_shared<MergeTableTokenizer>(
        MergeTableTokenizer::load(spec.path));
  throw TokenizerUnavailable("unknown tokenizer type: " + spec.type);
}

}  // namespace bookpipe::tok
