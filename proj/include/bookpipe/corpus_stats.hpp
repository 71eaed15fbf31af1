#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "bookpipe/scaffold.hpp"

namespace bookpipe::stats {

struct SequenceLengths {
  std::string id;
  std::uint64_t p = 0;  // prompt tokens
  std::uint64_t s = 0;  // scaffold tokens
  std::uint64_t b = 0;  // book-text tokens
  std::uint64_t total() const { return p + s + b; }
};

class EmptyCorpus : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BadWidth : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Decomposes a tokenized example by role span: UserPrompt tokens count as
// prompt, ChapterText tokens as book text, everything else as scaffold.
SequenceLengths measure(const scaffold::TokenizedExample& ex,
                        std::string id = "");

struct CorpusSummary {
  std::size_t n_books = 0;
  std::uint64_t total_tokens = 0;
  std::uint64_t min_len = 0;
  std::uint64_t max_len = 0;
  double mean_len = 0;
  std::uint64_t median_len = 0;
  std::uint64_t p90 = 0;
  std::uint64_t p95 = 0;
  std::uint64_t p99 = 0;
  std::uint64_t over_100k = 0;
  std::uint64_t over_clip = 0;  // > 262,144
  std::uint64_t over_500k = 0;
  std::uint64_t over_1m = 0;
  double global_share_p = 0;  // percent of all tokens
  double global_share_s = 0;
  double global_share_b = 0;
  double book_median_share_p = 0;  // medians of per-book share triples,
  double book_median_share_s = 0;  // computed independently
  double book_median_share_b = 0;
};

// Nearest-rank percentile: the ceil(pct/100 * n)-th smallest value (1-based).
std::uint64_t nearest_rank(std::vector<std::uint64_t> sorted_values,
                           double pct);

CorpusSummary summarize(const std::vector<SequenceLengths>& lengths);

// Associative partial aggregate so corpora can be reduced in any
// partitioning order.
struct Accumulator {
  std::vector<SequenceLengths> rows;
  void add(SequenceLengths row) { rows.push_back(std::move(row)); }
  void merge(const Accumulator& other) {
    rows.insert(rows.end(), other.rows.begin(), other.rows.end());
  }
  CorpusSummary finish() const { return summarize(rows); }
};

struct HistogramBin {
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;  // exclusive
  std::uint64_t count = 0;
};

std::vector<HistogramBin> histogram(const std::vector<SequenceLengths>& lengths,
                                    std::uint64_t bucket_width);

struct EnvelopeEntry {
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;
  SequenceLengths lengths;  // the longest example in the bucket
};

// Per non-empty bucket, the example with maximal total length; ties go to
// the lexicographically smallest id.
std::vector<EnvelopeEntry> bucket_envelope(
    const std::vector<SequenceLengths>& lengths, std::uint64_t bucket_width);

// One {"id","p","s","b"} object per line.
std::vector<SequenceLengths> load_manifest(std::istream& in);

std::string histogram_csv(const std::vector<HistogramBin>& bins);
std::string envelope_csv(const std::vector<EnvelopeEntry>& entries);

void to_json(nlohmann::json& j, const CorpusSummary& s);
void to_json(nlohmann::json& j, const SequenceLengths& s);
void from_json(const nlohmann::json& j, SequenceLengths& s);

}  // namespace bookpipe::stats
