#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace bookpipe::text {

// A word is a maximal run of non-whitespace bytes.
std::size_t word_count(std::string_view s);
std::vector<std::string_view> words(std::string_view s);

std::string trim(std::string_view s);
std::string collapse_whitespace(std::string_view s);
std::string to_lower(std::string_view s);

// Byte offsets one past each sentence end: terminal punctuation (. ! ? ...)
// plus any closing quotes/brackets, followed by whitespace or end of text.
// Offsets in the abbreviation list ("Mr.", "Dr." ...) are exempt.
std::vector<std::size_t> sentence_boundaries(std::string_view s);
std::size_t sentence_count(std::string_view s);

// Snaps a proposed char offset to the nearest sentence boundary (0 and
// s.size() count as boundaries).
std::size_t snap_to_sentence_boundary(std::string_view s, std::size_t offset);

// "Mr. Anna Darcy" -> "Anna Darcy"; also trims and collapses whitespace.
std::string strip_honorifics(std::string_view name,
                             const std::vector<std::string>& honorifics);
const std::vector<std::string>& default_honorifics();

// Case-insensitive canonical key for name merging.
std::string canonical_name_key(std::string_view name,
                               const std::vector<std::string>& honorifics);

// True if `text` contains `word` as a whole word, ignoring case.
bool contains_word(std::string_view text, std::string_view word);

}  // namespace bookpipe::text
