#include <sstream>
#include <string>
#include <vector>

#include "bookpipe/corpus_stats.hpp"
#include "bookpipe/scaffold.hpp"
#include "bookpipe/tokenizer.hpp"
#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"

using namespace bookpipe;
using stats::SequenceLengths;

namespace {

// Ten books with shares chosen so every summary field is hand-checkable.
// Rows 1-5 split 10/40/50 percent, rows 6-10 split 20/30/50.
std::vector<SequenceLengths> oracle_rows() {
  return {
      {"b01", 100, 400, 500},      {"b02", 200, 800, 1000},
      {"b03", 300, 1200, 1500},    {"b04", 400, 1600, 2000},
      {"b05", 500, 2000, 2500},    {"b06", 1200, 1800, 3000},
      {"b07", 1400, 2100, 3500},   {"b08", 1600, 2400, 4000},
      {"b09", 1800, 2700, 4500},   {"b10", 50000, 75000, 125000},
  };
}

}  // namespace

TEST_SUITE("stats") {

TEST_CASE("measure splits tokens by role") {
  tok::ByteTokenizer t;
  scaffold::TrainingExample ex;
  ex.chapter_count = 2;
  using K = scaffold::ComponentKind;
  ex.components = {
      {K::UserPrompt, 0, "a prompt"},
      {K::BookPlan, 0, "plans"},
      {K::EarlyFirstChapterPlan, 0, "early"},
      {K::ChapterText, 1, "chapter one body"},
      {K::FullBookChapterPlans, 0, "more plans"},
      {K::ChapterText, 2, "chapter two"},
  };
  auto te = scaffold::tokenize_and_mask(ex, t);
  auto m = stats::measure(te, "book");
  CHECK(m.id == "book");
  CHECK(m.p + m.s + m.b == te.size());
  CHECK(m.p == te.role_spans[0].end - te.role_spans[0].start);
  std::uint64_t book_tokens = 0;
  for (const auto& sp : te.role_spans)
    if (sp.kind == K::ChapterText) book_tokens += sp.end - sp.start;
  CHECK(m.b == book_tokens);
  CHECK(m.total() == te.size());
}

TEST_CASE("nearest rank percentiles") {
  std::vector<std::uint64_t> v = {10, 20, 30, 40};
  CHECK(stats::nearest_rank(v, 50.0) == 20);
  CHECK(stats::nearest_rank(v, 90.0) == 40);
  CHECK(stats::nearest_rank(v, 100.0) == 40);
  CHECK(stats::nearest_rank(v, 1.0) == 10);
  CHECK(stats::nearest_rank(v, 25.0) == 10);
  CHECK(stats::nearest_rank({7}, 99.0) == 7);
}

TEST_CASE("summary matches the hand-computed corpus") {
  auto s = stats::summarize(oracle_rows());
  CHECK(s.n_books == 10);
  CHECK(s.total_tokens == 295000);
  CHECK(s.min_len == 1000);
  CHECK(s.max_len == 250000);
  CHECK(s.mean_len == 29500.0);
  CHECK(s.median_len == 5000);
  CHECK(s.p90 == 9000);
  CHECK(s.p95 == 250000);
  CHECK(s.p99 == 250000);
  CHECK(s.over_100k == 1);
  CHECK(s.over_clip == 0);
  CHECK(s.over_500k == 0);
  CHECK(s.over_1m == 0);
  CHECK(s.global_share_p == 100.0 * 57500.0 / 295000.0);
  CHECK(s.global_share_s == 100.0 * 90000.0 / 295000.0);
  CHECK(s.global_share_b == 50.0);
  // per-book share lists are {10 x5, 20 x5}, {40 x5, 30 x5}, {50 x10}
  CHECK(s.book_median_share_p == 10.0);
  CHECK(s.book_median_share_s == 30.0);
  CHECK(s.book_median_share_b == 50.0);
}

TEST_CASE("threshold counters are strict") {
  std::vector<SequenceLengths> rows = {
      {"a", 0, 0, 100000},  {"b", 0, 0, 100001},  {"c", 0, 0, 262144},
      {"d", 0, 0, 262145},  {"e", 0, 0, 500001},  {"f", 0, 0, 1000001},
  };
  auto s = stats::summarize(rows);
  CHECK(s.over_100k == 5);
  CHECK(s.over_clip == 3);
  CHECK(s.over_500k == 2);
  CHECK(s.over_1m == 1);
}

TEST_CASE("summarize rejects an empty corpus") {
  CHECK_THROWS_AS(stats::summarize({}), stats::EmptyCorpus);
}

TEST_CASE("accumulator merge order does not change the summary") {
  auto rows = oracle_rows();
  stats::Accumulator left, right, merged;
  for (std::size_t i = 0; i < rows.size(); ++i)
    (i % 2 ? left : right).add(rows[i]);
  merged.merge(left);
  merged.merge(right);
  auto a = merged.finish();
  auto b = stats::summarize(rows);
  CHECK(a.total_tokens == b.total_tokens);
  CHECK(a.median_len == b.median_len);
  CHECK(a.p95 == b.p95);
  CHECK(a.global_share_p == b.global_share_p);
  CHECK(a.book_median_share_s == b.book_median_share_s);
}

TEST_CASE("histogram buckets by total length") {
  auto bins = stats::histogram(oracle_rows(), 4096);
  REQUIRE(bins.size() == 4);
  CHECK(bins[0].lo == 0);
  CHECK(bins[0].hi == 4096);
  CHECK(bins[0].count == 4);
  CHECK(bins[1].lo == 4096);
  CHECK(bins[1].count == 4);
  CHECK(bins[2].lo == 8192);
  CHECK(bins[2].count == 1);
  CHECK(bins[3].lo == 249856);
  CHECK(bins[3].hi == 253952);
  CHECK(bins[3].count == 1);

  CHECK_THROWS_AS(stats::histogram(oracle_rows(), 0), stats::BadWidth);

  CHECK(stats::histogram_csv(bins) ==
        "bucket_lo,bucket_hi,count\n"
        "0,4096,4\n"
        "4096,8192,4\n"
        "8192,12288,1\n"
        "249856,253952,1\n");
}

TEST_CASE("envelope keeps the longest example per bucket") {
  auto entries = stats::bucket_envelope(oracle_rows(), 4096);
  REQUIRE(entries.size() == 4);
  CHECK(entries[0].lengths.id == "b04");
  CHECK(entries[1].lengths.id == "b08");
  CHECK(entries[2].lengths.id == "b09");
  CHECK(entries[3].lengths.id == "b10");
  CHECK(entries[3].lengths.total() == 250000);

  CHECK(stats::envelope_csv(entries) ==
        "bucket_lo,bucket_hi,id,p,s,b,total\n"
        "0,4096,b04,400,1600,2000,4000\n"
        "4096,8192,b08,1600,2400,4000,8000\n"
        "8192,12288,b09,1800,2700,4500,9000\n"
        "249856,253952,b10,50000,75000,125000,250000\n");
}

TEST_CASE("envelope ties go to the lexicographically smaller id") {
  std::vector<SequenceLengths> rows = {
      {"zeta", 10, 10, 80},
      {"alpha", 20, 20, 60},
  };
  auto entries = stats::bucket_envelope(rows, 1024);
  REQUIRE(entries.size() == 1);
  CHECK(entries[0].lengths.id == "alpha");
}

TEST_CASE("manifest loader reads one object per line") {
  std::istringstream in(
      "{\"id\":\"x\",\"p\":1,\"s\":2,\"b\":3}\n"
      "{\"id\":\"y\",\"p\":10,\"s\":20,\"b\":30}\n");
  auto rows = stats::load_manifest(in);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].id == "x");
  CHECK(rows[0].total() == 6);
  CHECK(rows[1].p == 10);
}

TEST_CASE("summary serializes every reported field") {
  nlohmann::json j;
  to_json(j, stats::summarize(oracle_rows()));
  for (const char* key :
       {"n_books", "total_tokens", "min_len", "max_len", "mean_len",
        "median_len", "p90", "p95", "p99", "over_100k", "over_clip",
        "over_500k", "over_1m", "global_share_p", "global_share_s",
        "global_share_b", "book_median_share_p", "book_median_share_s",
        "book_median_share_b"})
    CHECK(j.contains(key));
}

}  // TEST_SUITE
