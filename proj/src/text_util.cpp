#include "bookpipe/text_util.hpp"

#include <algorithm>
#include <cctype>

namespace bookpipe::text {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

// Abbreviations whose trailing '.' does not end a sentence.
const std::vector<std::string>& sentence_abbreviations() {
  static const std::vector<std::string> kAbbrev = {
      "Mr.", "Mrs.", "Ms.", "Dr.", "St.", "Prof.", "Rev.", "Capt.", "Col.",
      "Gen.", "Lt.", "Sgt.", "Jr.", "Sr.", "vs.", "etc.", "e.g.", "i.e.",
      "No.", "Vol.", "Ch.", "p.", "pp."};
  return kAbbrev;
}

bool ends_with_abbreviation(std::string_view s, std::size_t dot_pos) {
  for (const auto& abbr : sentence_abbreviations()) {
    if (dot_pos + 1 < abbr.size()) continue;
    std::size_t start = dot_pos + 1 - abbr.size();
    if (s.compare(start, abbr.size(), abbr) != 0) continue;
    // Must begin a word.
    if (start == 0 || is_space(s[start - 1]) || s[start - 1] == '"' ||
        s[start - 1] == '(')
      return true;
  }
  return false;
}

bool is_terminal_punct(char c) { return c == '.' || c == '!' || c == '?'; }

bool is_closer(char c) {
  return c == '"' || c == '\'' || c == ')' || c == ']' || c == '\xE2';
}

}  // namespace

std::size_t word_count(std::string_view s) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : s) {
    if (is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++n;
    }
  }
  return n;
}

std::vector<std::string_view> words(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    std::size_t start = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (is_space(c)) {
      pending_space = !out.empty();
    } else {
      if (pending_space) out.push_back(' ');
      pending_space = false;
      out.push_back(c);
    }
  }
  return out;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

std::vector<std::size_t> sentence_boundaries(std::string_view s) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!is_terminal_punct(s[i])) continue;
    if (s[i] == '.' && ends_with_abbreviation(s, i)) continue;
    // Swallow runs of terminal punctuation ("?!", "...").
    std::size_t j = i;
    while (j + 1 < s.size() && is_terminal_punct(s[j + 1])) ++j;
    if (s[j] == '.' && j != i && ends_with_abbreviation(s, j)) continue;
    // Closing quotes/brackets belong to the sentence.
    std::size_t k = j;
    while (k + 1 < s.size() && is_closer(s[k + 1])) {
      if (s[k + 1] == '\xE2') {  // UTF-8 right quotes U+2019/U+201D
        if (k + 3 < s.size() && s[k + 2] == '\x80' &&
            (s[k + 3] == '\x99' || s[k + 3] == '\x9D')) {
          k += 3;
          continue;
        }
        break;
      }
      ++k;
    }
    if (k + 1 >= s.size() || is_space(s[k + 1])) {
      out.push_back(k + 1);
      i = k;
    } else {
      i = j;
    }
  }
  return out;
}

std::size_t sentence_count(std::string_view s) {
  std::size_t n = sentence_boundaries(s).size();
  // Trailing text without terminal punctuation still counts as a sentence.
  std::string tail = trim(n == 0 ? s : s.substr(sentence_boundaries(s).back()));
  if (!tail.empty()) ++n;
  return n;
}

std::size_t snap_to_sentence_boundary(std::string_view s, std::size_t offset) {
  offset = std::min(offset, s.size());
  std::vector<std::size_t> bounds = sentence_boundaries(s);
  bounds.push_back(0);
  bounds.push_back(s.size());
  std::size_t best = 0;
  std::size_t best_dist = s.size() + 1;
  for (std::size_t b : bounds) {
    std::size_t d = b > offset ? b - offset : offset - b;
    if (d < best_dist || (d == best_dist && b < best)) {
      best = b;
      best_dist = d;
    }
  }
  // Boundary sits one past the whitespace-free sentence end; skip the gap so
  // the next scene starts on text.
  while (best < s.size() && is_space(s[best]) && best_dist > 0) ++best;
  return best;
}

const std::vector<std::string>& default_honorifics() {
  static const std::vector<std::string> kHonorifics = {
      "Mr",   "Mrs",  "Miss", "Ms",   "Dr",    "Sir",  "Lady", "Lord",
      "St",   "Prof", "Rev",  "Capt", "Col",   "Gen",  "Lt",   "Sgt",
      "Dame", "Madam", "Madame", "Master", "Fr", "Don", "Doña"};
  return kHonorifics;
}

std::string strip_honorifics(std::string_view name,
                             const std::vector<std::string>& honorifics) {
  std::string s = collapse_whitespace(trim(name));
  bool stripped = true;
  while (stripped) {
    stripped = false;
    for (const auto& h : honorifics) {
      if (s.size() <= h.size()) continue;
      if (to_lower(s.substr(0, h.size())) != to_lower(h)) continue;
      std::size_t rest = h.size();
      if (rest < s.size() && s[rest] == '.') ++rest;
      if (rest < s.size() && s[rest] == ' ') {
        s = s.substr(rest + 1);
        stripped = true;
        break;
      }
    }
  }
  return s;
}

std::string canonical_name_key(std::string_view name,
                               const std::vector<std::string>& honorifics) {
  return to_lower(strip_honorifics(name, honorifics));
}

bool contains_word(std::string_view text, std::string_view word) {
  if (word.empty()) return false;
  std::string lt = to_lower(text);
  std::string lw = to_lower(word);
  std::size_t pos = 0;
  auto is_word_char = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '\'';
  };
  while ((pos = lt.find(lw, pos)) != std::string::npos) {
    bool left_ok = pos == 0 || !is_word_char(lt[pos - 1]);
    std::size_t end = pos + lw.size();
    bool right_ok = end >= lt.size() || !is_word_char(lt[end]);
    if (left_ok && right_ok) return true;
    pos += 1;
  }
  return false;
}

}  // namespace bookpipe::text
