#include <string>
#include <vector>

#include "bookpipe/tokenizer.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace bookpipe;

TEST_SUITE("tokenizer") {

TEST_CASE("byte tokenizer maps bytes to ids") {
  tok::ByteTokenizer t;
  CHECK(t.encode("") == std::vector<int>{});
  CHECK(t.encode("Ab ") == std::vector<int>{65, 98, 32});
  // multibyte UTF-8 stays byte-per-token
  std::string s = "\xC3\xA9";
  CHECK(t.encode(s) == std::vector<int>{0xC3, 0xA9});
  CHECK(t.name() == "byte");
}

TEST_CASE("merge table applies lowest rank first, repeatedly") {
  // merge 0: 'h''i' -> 256; merge 1: 256 '!' -> 257
  auto t = tok::MergeTableTokenizer::from_merges({{104, 105}, {256, 33}});
  CHECK(t.vocab_size() == 258);
  CHECK(t.encode("hi") == std::vector<int>{256});
  CHECK(t.encode("hihi") == std::vector<int>{256, 256});
  CHECK(t.encode("hi!hi") == std::vector<int>{257, 256});
  CHECK(t.encode("ih") == std::vector<int>{105, 104});
  CHECK(t.encode("") == std::vector<int>{});
}

TEST_CASE("rank order matters when merges overlap") {
  // 'a''b' ranks before 'b''c', so "abc" pairs left first
  auto t1 = tok::MergeTableTokenizer::from_merges({{97, 98}, {98, 99}});
  CHECK(t1.encode("abc") == std::vector<int>{256, 99});
  // reversed table: 'b''c' wins instead
  auto t2 = tok::MergeTableTokenizer::from_merges({{98, 99}, {97, 98}});
  CHECK(t2.encode("abc") == std::vector<int>{97, 256});
}

TEST_CASE("merge table file loader skips comments and validates ids") {
  testutil::TempDir dir("merges");
  auto file = dir.path / "merges.txt";
  testutil::write_file(file,
                       "# byte pair merges\n"
                       "\n"
                       "104 105\n"
                       "256 33\n");
  auto t = tok::MergeTableTokenizer::load(file.string());
  CHECK(t.encode("hi!") == std::vector<int>{257});
  CHECK(t.name() == "merge_table:" + file.string());

  // forward reference to an id that does not exist yet
  auto bad = dir.path / "bad.txt";
  testutil::write_file(bad, "300 301\n");
  CHECK_THROWS_AS(tok::MergeTableTokenizer::load(bad.string()),
                  tok::TokenizerUnavailable);
  CHECK_THROWS_AS(tok::MergeTableTokenizer::load(
                      (dir.path / "absent.txt").string()),
                  tok::TokenizerUnavailable);
}

TEST_CASE("factory builds byte and merge_table tokenizers") {
  tok::TokenizerSpec byte_spec;
  auto bt = tok::make_tokenizer(byte_spec);
  CHECK(bt->name() == "byte");

  testutil::TempDir dir("spec");
  auto file = dir.path / "m.txt";
  testutil::write_file(file, "104 105\n");
  tok::TokenizerSpec merge_spec;
  merge_spec.type = "merge_table";
  merge_spec.path = file.string();
  auto mt = tok::make_tokenizer(merge_spec);
  CHECK(mt->encode("hi") == std::vector<int>{256});

  tok::TokenizerSpec unknown;
  unknown.type = "sentencepiece";
  CHECK_THROWS_AS(tok::make_tokenizer(unknown), tok::TokenizerUnavailable);
}

TEST_CASE("property: merged ids decode back to the original bytes") {
  // expanding token ids through the merge table must reproduce the input
  auto t = tok::MergeTableTokenizer::from_merges(
      {{116, 104}, {256, 101}, {32, 257}, {101, 114}});
  testutil::Rng rng(99);
  const std::string alphabet = "the quick export rather ";
  for (int iter = 0; iter < 200; ++iter) {
    std::string s;
    for (int i = rng.range(0, 40); i > 0; --i)
      s += alphabet[rng.below(alphabet.size())];
    auto ids = t.encode(s);
    // expand ids recursively
    std::vector<std::pair<int, int>> merges = {
        {116, 104}, {256, 101}, {32, 257}, {101, 114}};
    std::string expanded;
    std::vector<int> stack(ids.rbegin(), ids.rend());
    while (!stack.empty()) {
      int id = stack.back();
      stack.pop_back();
      if (id < 256) {
        expanded.push_back(static_cast<char>(id));
      } else {
        auto [l, r] = merges[static_cast<std::size_t>(id - 256)];
        stack.push_back(r);
        stack.push_back(l);
      }
    }
    CHECK(expanded == s);
  }
}

}  // TEST_SUITE
