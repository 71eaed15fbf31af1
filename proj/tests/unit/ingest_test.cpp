#include <string>
#include <vector>

#include "bookpipe/ingest.hpp"
#include "bookpipe/text_util.hpp"
#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"

using namespace bookpipe;

namespace {

ingest::IngestConfig small_cfg() {
  ingest::IngestConfig cfg;
  cfg.min_words = 3;
  return cfg;
}

}  // namespace

TEST_SUITE("ingest") {

TEST_CASE("utf8 decode passes clean text through") {
  std::size_t replaced = 7;
  CHECK(ingest::decode_utf8_lossy("plain ascii", replaced) == "plain ascii");
  CHECK(replaced == 0);
  // 2-, 3-, 4-byte sequences
  std::string s = "caf\xC3\xA9 \xE2\x80\x94 \xF0\x9F\x98\x80";
  CHECK(ingest::decode_utf8_lossy(s, replaced) == s);
  CHECK(replaced == 0);
}

TEST_CASE("utf8 decode replaces invalid sequences and counts them") {
  std::size_t replaced = 0;
  // lone continuation byte
  CHECK(ingest::decode_utf8_lossy("a\x80b", replaced) == "a\xEF\xBF\xBDb");
  CHECK(replaced == 1);
  // truncated 3-byte lead at end of input
  ingest::decode_utf8_lossy("x\xE2\x80", replaced);
  CHECK(replaced == 1);
  // overlong encoding of '/' must not decode
  std::string out = ingest::decode_utf8_lossy("\xC0\xAF", replaced);
  CHECK(out.find('/') == std::string::npos);
  // lead byte above U+10FFFF
  ingest::decode_utf8_lossy("\xF5\x80\x80\x80", replaced);
  CHECK(replaced >= 1);
}

TEST_CASE("utf8 decode rejects NUL bytes") {
  std::size_t replaced = 0;
  std::string s = "ab";
  s.push_back('\0');
  CHECK_THROWS_AS(ingest::decode_utf8_lossy(s, replaced),
                  ingest::DecodeError);
}

TEST_CASE("ingest strips front and back matter between markers") {
  std::string src =
      "Title: The Lantern\n"
      "Some front matter.\n"
      "*** START OF THE BOOK ***\n"
      "Chapter 1\nIt began at dusk with rain.\n"
      "*** END OF THE BOOK ***\n"
      "license trailer\n";
  auto book = ingest::ingest_book(src, "b1", small_cfg());
  CHECK(book.book_id == "b1");
  REQUIRE(book.title.has_value());
  CHECK(*book.title == "The Lantern");
  CHECK(book.body ==
        "Chapter 1\nIt began at dusk with rain.");
  CHECK(book.replaced_chars == 0);
}

TEST_CASE("ingest without markers keeps everything, drops the title") {
  std::string src = "Title: X\nJust a body with enough words here.\n";
  auto book = ingest::ingest_book(src, "b2", small_cfg());
  CHECK_FALSE(book.title.has_value());
  CHECK(text::word_count(book.body) >= 3);
}

TEST_CASE("ingest normalizes CRLF and lone CR") {
  std::string src = "line one\r\nline two\rline three and more\r\n";
  auto book = ingest::ingest_book(src, "b3", small_cfg());
  CHECK(book.body.find('\r') == std::string::npos);
  CHECK(book.body == "line one\nline two\nline three and more");
}

TEST_CASE("ingest rejects bodies under the word floor") {
  ingest::IngestConfig cfg;
  cfg.min_words = 100;
  CHECK_THROWS_AS(ingest::ingest_book("too short to pass", "b4", cfg),
                  ingest::EmptyBody);
}

TEST_CASE("heading patterns match the documented shapes") {
  const auto& ps = ingest::default_heading_patterns();
  REQUIRE(ps.size() == 3);
  auto matches = [&](std::string_view line) {
    for (const auto& p : ps)
      if (p.match(line)) return true;
    return false;
  };
  CHECK(matches("Chapter 1"));
  CHECK(matches("CHAPTER XII."));
  CHECK(matches("Chapter One"));
  CHECK(matches("Part the First"));
  CHECK(matches("Stave Two"));
  CHECK(matches("IV."));
  CHECK(matches("12"));
  CHECK_FALSE(matches("Chapter"));
  CHECK_FALSE(matches("The Chapter House"));
  CHECK_FALSE(matches("chapter and verse"));
  CHECK_FALSE(matches("01"));
  CHECK_FALSE(matches("It was a dark night."));
}

TEST_CASE("split keeps headings inside the chapter text") {
  ingest::RawBook book;
  book.book_id = "b";
  book.body =
      "Preface text.\n"
      "Chapter 1\nFirst body.\n"
      "Chapter 2\nSecond body.";
  auto ch = ingest::split_chapters(book);
  REQUIRE(ch.size() == 3);
  CHECK_FALSE(ch[0].heading.has_value());
  CHECK(ch[0].text == "Preface text.\n");
  CHECK(ch[1].heading == "Chapter 1");
  CHECK(ch[1].index == 2);
  CHECK(ch[1].text == "Chapter 1\nFirst body.\n");
  CHECK(ch[2].text == "Chapter 2\nSecond body.");
  CHECK(ingest::reconstruct_body(ch) == book.body);
}

TEST_CASE("split without headings yields one chapter") {
  ingest::RawBook book;
  book.body = "no headings anywhere, just prose";
  auto ch = ingest::split_chapters(book);
  REQUIRE(ch.size() == 1);
  CHECK_FALSE(ch[0].heading.has_value());
  CHECK(ch[0].text == book.body);
}

TEST_CASE("property: reconstruction and word counts over random books") {
  testutil::Rng rng(0x1A2B3C4Dull);
  const std::vector<std::string> headings = {
      "Chapter 1", "Chapter 2", "Chapter Three", "IV", "Part Two", "VII."};
  const std::vector<std::string> fragments = {
      "The rain kept on.",      "Nobody answered the bell.",
      "She counted the steps.", "A lamp guttered low.",
      "Maps covered the desk.", "He said nothing at all."};
  for (int iter = 0; iter < 50; ++iter) {
    ingest::RawBook book;
    book.book_id = "r" + std::to_string(iter);
    int chapters = rng.range(1, 6);
    bool front = rng.chance(0.5);
    if (front) {
      for (int i = rng.range(1, 3); i > 0; --i)
        book.body += fragments[rng.below(fragments.size())] + "\n";
    }
    for (int c = 0; c < chapters; ++c) {
      book.body += headings[static_cast<std::size_t>(c) % headings.size()];
      book.body += "\n";
      for (int i = rng.range(1, 4); i > 0; --i)
        book.body += fragments[rng.below(fragments.size())] + "\n";
    }
    auto ch = ingest::split_chapters(book);
    CHECK(ch.size() == static_cast<std::size_t>(chapters + (front ? 1 : 0)));
    CHECK(ingest::reconstruct_body(ch) == book.body);
    std::size_t words = 0;
    for (std::size_t i = 0; i < ch.size(); ++i) {
      CHECK(ch[i].index == static_cast<int>(i) + 1);
      CHECK(ch[i].word_count == text::word_count(ch[i].text));
      words += ch[i].word_count;
    }
    CHECK(words == text::word_count(book.body));
  }
}

TEST_CASE("raw book and chapter json round-trips") {
  ingest::RawBook book;
  book.book_id = "id";
  book.title = "T";
  book.body = "B";
  book.replaced_chars = 2;
  nlohmann::json j;
  to_json(j, book);
  ingest::RawBook back;
  from_json(j, back);
  CHECK(back.book_id == book.book_id);
  CHECK(back.title == book.title);
  CHECK(back.body == book.body);
  CHECK(back.replaced_chars == 2);

  ingest::ChapterSplit cs;
  cs.index = 3;
  cs.heading = std::nullopt;
  cs.text = "body";
  cs.word_count = 1;
  nlohmann::json jc;
  to_json(jc, cs);
  ingest::ChapterSplit back_cs;
  from_json(jc, back_cs);
  CHECK(back_cs.index == 3);
  CHECK_FALSE(back_cs.heading.has_value());
  CHECK(back_cs.text == "body");
}

}  // TEST_SUITE
