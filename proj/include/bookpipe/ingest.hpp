#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace bookpipe::ingest {

struct RawBook {
  std::string book_id;
  std::optional<std::string> title;
  std::string body;
  std::size_t replaced_chars = 0;  // lossy UTF-8 decode repairs
};

struct ChapterSplit {
  int index = 0;  // 1-based
  std::optional<std::string> heading;
  std::string text;
  std::size_t word_count = 0;
};

class EmptyBody : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct IngestConfig {
  std::size_t min_words = 500;
};

// Replaces invalid UTF-8 sequences with U+FFFD and counts them. Throws
// DecodeError on embedded NUL bytes (binary input, not a text stream).
std::string decode_utf8_lossy(std::string_view bytes, std::size_t& replaced);

RawBook ingest_book(std::string_view source, const std::string& book_id,
                    const IngestConfig& cfg = {});

struct HeadingPattern {
  std::string name;
  // Matches a whole trimmed line; returns true on a chapter heading.
  bool (*match)(std::string_view line);
};

const std::vector<HeadingPattern>& default_heading_patterns();

std::vector<ChapterSplit> split_chapters(
    const RawBook& book,
    const std::vector<HeadingPattern>& patterns = default_heading_patterns());

// Inverse of split_chapters: chapter texts concatenated in index order give
// back the stripped body byte-for-byte.
std::string reconstruct_body(const std::vector<ChapterSplit>& chapters);

void to_json(nlohmann::json& j, const RawBook& b);
void from_json(const nlohmann::json& j, RawBook& b);
void to_json(nlohmann::json& j, const ChapterSplit& c);
void from_json(const nlohmann::json& j, ChapterSplit& c);

}  // namespace bookpipe::ingest
