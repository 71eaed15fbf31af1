#include "bookpipe/ingest.hpp"

#include <algorithm>
#include <cctype>

#include "json.hpp"

#include "bookpipe/text_util.hpp"

namespace bookpipe::ingest {

namespace {

constexpr std::string_view kReplacement = "\xEF\xBF\xBD";  // U+FFFD

// Expected continuation-byte count for a UTF-8 lead byte, or -1 if invalid.
int utf8_tail_len(unsigned char b) {
  if (b < 0x80) return 0;
  if ((b & 0xE0) == 0xC0) return (b & 0x1F) >= 0x02 ? 1 : -1;  // no overlongs
  if ((b & 0xF0) == 0xE0) return 2;
  if ((b & 0xF8) == 0xF0) return (b & 0x07) <= 0x04 ? 3 : -1;
  return -1;
}

}  // namespace

std::string decode_utf8_lossy(std::string_view bytes, std::size_t& replaced) {
  replaced = 0;
  std::string out;
  out.reserve(bytes.size());
  std::size_t i = 0;
  while (i < bytes.size()) {
    unsigned char b = static_cast<unsigned char>(bytes[i]);
    if (b == 0)
      throw DecodeError("NUL byte at offset " + std::to_string(i) +
                        ": input is not a text stream");
    int tail = utf8_tail_len(b);
    if (tail == 0) {
      out += static_cast<char>(b);
      ++i;
      continue;
    }
    if (tail < 0 || i + static_cast<std::size_t>(tail) >= bytes.size()) {
      out += kReplacement;
      ++replaced;
      ++i;
      continue;
    }
    bool ok = true;
    for (int k = 1; k <= tail; ++k) {
      unsigned char c = static_cast<unsigned char>(bytes[i + k]);
      if ((c & 0xC0) != 0x80) {
        ok = false;
        break;
      }
    }
    if (!ok) {
      out += kReplacement;
      ++replaced;
      ++i;
      continue;
    }
    out.append(bytes.substr(i, 1 + tail));
    i += 1 + tail;
  }
  return out;
}

namespace {

std::string normalize_newlines(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\r') {
      out += '\n';
      if (i + 1 < s.size() && s[i + 1] == '\n') ++i;
    } else {
      out += s[i];
    }
  }
  return out;
}

bool is_marker_line(std::string_view trimmed, std::string_view token) {
  if (trimmed.substr(0, 3) != "***") return false;
  return trimmed.find(token) != std::string_view::npos;
}

}  // namespace

RawBook ingest_book(std::string_view source, const std::string& book_id,
                    const IngestConfig& cfg) {
  RawBook book;
  book.book_id = book_id;
  std::string text = decode_utf8_lossy(source, book.replaced_chars);
  text = normalize_newlines(text);

  // Locate boilerplate markers; the body is the region strictly between
  // them. Header lines before the start marker may carry the title.
  std::size_t body_begin = 0;
  std::size_t body_end = text.size();
  std::size_t pos = 0;
  bool saw_start = false;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::size_t line_end = nl == std::string::npos ? text.size() : nl;
    std::string_view line(text.data() + pos, line_end - pos);
    std::string trimmed = bookpipe::text::trim(line);
    if (!saw_start && is_marker_line(trimmed, "START OF")) {
      saw_start = true;
      body_begin = nl == std::string::npos ? text.size() : nl + 1;
    } else if (saw_start && is_marker_line(trimmed, "END OF")) {
      body_end = pos;
      break;
    } else if (!saw_start && trimmed.rfind("Title:", 0) == 0) {
      book.title = bookpipe::text::trim(trimmed.substr(6));
    }
    if (nl == std::string::npos) break;
    pos = nl + 1;
  }
  if (!saw_start) {
    body_begin = 0;
    body_end = text.size();
    book.title.reset();
  }

  std::string_view body(text.data() + body_begin, body_end - body_begin);
  book.body = std::string(bookpipe::text::trim(body));

  std::size_t words = bookpipe::text::word_count(book.body);
  if (words < cfg.min_words)
    throw EmptyBody("stripped body has " + std::to_string(words) +
                    " words (minimum " + std::to_string(cfg.min_words) + ")");
  return book;
}

namespace {

bool roman_numeral_line(std::string_view t) {
  if (t.empty() || t.size() > 12) return false;
  if (t.back() == '.') t.remove_suffix(1);
  if (t.empty()) return false;
  for (char c : t)
    if (std::string_view("IVXLCDM").find(c) == std::string_view::npos)
      return false;
  return true;
}

bool arabic_numeral_line(std::string_view t) {
  if (t.empty() || t.size() > 6) return false;
  if (t.back() == '.') t.remove_suffix(1);
  if (t.empty() || t[0] == '0') return false;
  return std::all_of(t.begin(), t.end(),
                     [](char c) { return c >= '0' && c <= '9'; });
}

bool counted_token(std::string_view w) {
  if (w.empty()) return false;
  while (!w.empty() && (w.back() == '.' || w.back() == ':' || w.back() == ','))
    w.remove_suffix(1);
  if (w.empty()) return false;
  if (std::all_of(w.begin(), w.end(),
                  [](char c) { return c >= '0' && c <= '9'; }))
    return true;
  if (roman_numeral_line(w)) return true;
  std::string lower = bookpipe::text::to_lower(std::string(w));
  static const char* kWords[] = {
      "the",   "one",    "two",   "three", "four",   "five",   "six",
      "seven", "eight",  "nine",  "ten",   "eleven", "twelve", "thirteen",
      "first", "second", "third", "fourth", "fifth",  "sixth",  "seventh",
      "last"};
  for (const char* k : kWords)
    if (lower == k) return true;
  return false;
}

bool chapter_keyword_line(std::string_view t) {
  if (t.empty() || t.size() > 80) return false;
  auto ws = bookpipe::text::words(t);
  if (ws.size() < 2) return false;
  std::string head = bookpipe::text::to_lower(ws[0]);
  static const char* kKeywords[] = {"chapter", "book",  "part",
                                    "canto",   "stave", "letter"};
  bool kw = false;
  for (const char* k : kKeywords)
    if (head == k) kw = true;
  if (!kw) return false;
  return counted_token(ws[1]);
}

}  // namespace

const std::vector<HeadingPattern>& default_heading_patterns() {
  static const std::vector<HeadingPattern> patterns = {
      {"chapter_keyword", chapter_keyword_line},
      {"roman_numeral", roman_numeral_line},
      {"arabic_numeral", arabic_numeral_line},
  };
  return patterns;
}

std::vector<ChapterSplit> split_chapters(
    const RawBook& book, const std::vector<HeadingPattern>& patterns) {
  const std::string& body = book.body;

  // Chapter text keeps its heading line; the heading field carries a trimmed
  // copy for display. Concatenating texts gives back the body exactly, and
  // chapter word counts sum to the body word count.
  struct HeadingHit {
    std::size_t line_start;
    std::string heading;
  };
  std::vector<HeadingHit> hits;
  std::size_t pos = 0;
  while (pos < body.size()) {
    std::size_t nl = body.find('\n', pos);
    std::size_t line_end = nl == std::string::npos ? body.size() : nl;
    std::string trimmed =
        bookpipe::text::trim(std::string_view(body).substr(pos, line_end - pos));
    for (const auto& p : patterns) {
      if (p.match(trimmed)) {
        hits.push_back({pos, trimmed});
        break;
      }
    }
    if (nl == std::string::npos) break;
    pos = nl + 1;
  }

  std::vector<ChapterSplit> chapters;
  auto push = [&](std::optional<std::string> heading, std::size_t begin,
                  std::size_t end) {
    ChapterSplit c;
    c.index = static_cast<int>(chapters.size()) + 1;
    c.heading = std::move(heading);
    c.text = body.substr(begin, end - begin);
    c.word_count = bookpipe::text::word_count(c.text);
    chapters.push_back(std::move(c));
  };

  if (hits.empty()) {
    push(std::nullopt, 0, body.size());
    return chapters;
  }
  if (hits.front().line_start > 0)
    push(std::nullopt, 0, hits.front().line_start);
  for (std::size_t i = 0; i < hits.size(); ++i) {
    std::size_t end =
        i + 1 < hits.size() ? hits[i + 1].line_start : body.size();
    push(hits[i].heading, hits[i].line_start, end);
  }
  return chapters;
}

std::string reconstruct_body(const std::vector<ChapterSplit>& chapters) {
  std::string out;
  for (const auto& c : chapters) out += c.text;
  return out;
}

using nlohmann::json;

void to_json(json& j, const RawBook& b) {
  j = json{{"book_id", b.book_id},
           {"title", b.title ? json(*b.title) : json(nullptr)},
           {"body", b.body},
           {"replaced_chars", b.replaced_chars}};
}

void from_json(const json& j, RawBook& b) {
  j.at("book_id").get_to(b.book_id);
  if (j.at("title").is_null())
    b.title.reset();
  else
    b.title = j.at("title").get<std::string>();
  j.at("body").get_to(b.body);
  j.at("replaced_chars").get_to(b.replaced_chars);
}

void to_json(json& j, const ChapterSplit& c) {
  j = json{{"index", c.index},
           {"heading", c.heading ? json(*c.heading) : json(nullptr)},
           {"text", c.text},
           {"word_count", c.word_count}};
}

void from_json(const json& j, ChapterSplit& c) {
  j.at("index").get_to(c.index);
  if (j.at("heading").is_null())
    c.heading.reset();
  else
    c.heading = j.at("heading").get<std::string>();
  j.at("text").get_to(c.text);
  j.at("word_count").get_to(c.word_count);
}

}  // namespace bookpipe::ingest
