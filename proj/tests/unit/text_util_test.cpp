#include <string>
#include <vector>

#include "bookpipe/text_util.hpp"
#include "doctest.h"

using namespace bookpipe;

TEST_SUITE("text_util") {

TEST_CASE("word_count counts maximal nonspace runs") {
  CHECK(text::word_count("") == 0);
  CHECK(text::word_count("   \t\n") == 0);
  CHECK(text::word_count("a") == 1);
  CHECK(text::word_count("a  b\tc\n") == 3);
  CHECK(text::word_count("one two  three") == 3);
}

TEST_CASE("words returns views into the caller's buffer") {
  std::string s = "alpha beta";
  auto ws = text::words(s);
  REQUIRE(ws.size() == 2);
  CHECK(ws[0] == "alpha");
  CHECK(ws[1] == "beta");
  CHECK(ws[0].data() >= s.data());
  CHECK(ws[1].data() + ws[1].size() <= s.data() + s.size());
}

TEST_CASE("trim, collapse, lower") {
  CHECK(text::trim("  x  ") == "x");
  CHECK(text::trim("\t\r\n") == "");
  CHECK(text::trim("") == "");
  CHECK(text::collapse_whitespace("a   b\t\nc") == "a b c");
  CHECK(text::collapse_whitespace("  a  ") == "a");
  CHECK(text::collapse_whitespace("   ") == "");
  CHECK(text::to_lower("MiXeD 123") == "mixed 123");
}

TEST_CASE("sentence boundaries with abbreviations, runs, and closers") {
  // offsets: one past the punctuation run plus trailing closers
  std::string s = "Hello there. Mr. Smith left! \"Done?\" Yes.";
  auto b = text::sentence_boundaries(s);
  CHECK(b == std::vector<std::size_t>{12, 28, 36, 41});
  CHECK(text::sentence_count(s) == 4);

  CHECK(text::sentence_boundaries("Wait...") ==
        std::vector<std::size_t>{7});
  CHECK(text::sentence_boundaries("Really?! Yes.") ==
        std::vector<std::size_t>{8, 13});
  // no boundary when punctuation is not followed by space or end
  CHECK(text::sentence_boundaries("3.14 is pi") ==
        std::vector<std::size_t>{});
  CHECK(text::sentence_boundaries("See Dr. Jones") ==
        std::vector<std::size_t>{});
  // right double quote U+201D counts as a closer
  std::string uq = "\"Go.\xE2\x80\x9D Now.";
  CHECK(text::sentence_boundaries(uq) == std::vector<std::size_t>{7, 12});
}

TEST_CASE("snap_to_sentence_boundary picks the nearest, ties low") {
  std::string s = "Hello there. Mr. Smith left! \"Done?\" Yes.";
  // boundaries plus {0, len}: 0, 12, 28, 36, 41
  CHECK(text::snap_to_sentence_boundary(s, 0) == 0);
  // nearest is 12, then the leading space is skipped
  CHECK(text::snap_to_sentence_boundary(s, 14) == 13);
  CHECK(text::snap_to_sentence_boundary(s, 40) == 41);
  CHECK(text::snap_to_sentence_boundary(s, 200) == 41);
  // equidistant between 12 and 28 snaps to 12 (then skips the space)
  CHECK(text::snap_to_sentence_boundary(s, 20) == 13);
}

TEST_CASE("strip_honorifics") {
  const auto& h = text::default_honorifics();
  CHECK(text::strip_honorifics("Mr. Anna Darcy", h) == "Anna Darcy");
  CHECK(text::strip_honorifics("Dr Mrs Helen Figg", h) == "Helen Figg");
  CHECK(text::strip_honorifics("  Plain   Name ", h) == "Plain Name");
  // prefix match must be the whole first word
  CHECK(text::strip_honorifics("Missy Elliot", h) == "Missy Elliot");
  // never strips down to nothing
  CHECK(text::strip_honorifics("Dr.", h) == "Dr.");
}

TEST_CASE("canonical_name_key folds case and honorifics") {
  const auto& h = text::default_honorifics();
  CHECK(text::canonical_name_key("Dr.  ANNA  Reyes", h) ==
        text::canonical_name_key("anna reyes", h));
  CHECK(text::canonical_name_key("Bo Li", h) !=
        text::canonical_name_key("Bo Lin", h));
}

TEST_CASE("contains_word is whole-word and case-insensitive") {
  CHECK(text::contains_word("It's Ann's book", "ann's"));
  CHECK(text::contains_word("ANN said hi", "ann"));
  CHECK(text::contains_word("ann-marie", "ann"));
  CHECK_FALSE(text::contains_word("Manny spoke", "ann"));
  CHECK_FALSE(text::contains_word("channel", "ann"));
  CHECK_FALSE(text::contains_word("", "ann"));
  CHECK(text::contains_word("word.", "word"));
}

}  // TEST_SUITE
