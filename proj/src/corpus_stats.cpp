#include "bookpipe/corpus_stats.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <sstream>

namespace bookpipe::stats {

using nlohmann::json;

SequenceLengths measure(const scaffold::TokenizedExample& ex, std::string id) {
  SequenceLengths out;
  out.id = std::move(id);
  for (const auto& span : ex.role_spans) {
    std::uint64_t n = span.end - span.start;
    switch (span.kind) {
      case scaffold::ComponentKind::UserPrompt: out.p += n; break;
      case scaffold::ComponentKind::ChapterText: out.b += n; break;
      default: out.s += n; break;
    }
  }
  return out;
}

std::uint64_t nearest_rank(std::vector<std::uint64_t> values, double pct) {
  if (values.empty()) throw EmptyCorpus("no values for percentile");
  std::sort(values.begin(), values.end());
  auto n = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * n));
  if (rank < 1) rank = 1;
  if (rank > values.size()) rank = values.size();
  return values[rank - 1];
}

namespace {

double median_double(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  auto n = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(0.5 * n));
  if (rank < 1) rank = 1;
  return values[rank - 1];
}

}  // namespace

CorpusSummary summarize(const std::vector<SequenceLengths>& lengths) {
  if (lengths.empty()) throw EmptyCorpus("corpus has no examples");
  CorpusSummary s;
  s.n_books = lengths.size();

  std::vector<std::uint64_t> totals;
  totals.reserve(lengths.size());
  std::uint64_t sum_p = 0, sum_s = 0, sum_b = 0;
  std::vector<double> share_p, share_s, share_b;
  for (const auto& row : lengths) {
    std::uint64_t t = row.total();
    totals.push_back(t);
    sum_p += row.p;
    sum_s += row.s;
    sum_b += row.b;
    double d = t > 0 ? static_cast<double>(t) : 1.0;
    share_p.push_back(100.0 * static_cast<double>(row.p) / d);
    share_s.push_back(100.0 * static_cast<double>(row.s) / d);
    share_b.push_back(100.0 * static_cast<double>(row.b) / d);
    if (t > 100'000) ++s.over_100k;
    if (t > scaffold::kMaxSequenceTokens) ++s.over_clip;
    if (t > 500'000) ++s.over_500k;
    if (t > 1'000'000) ++s.over_1m;
  }
  s.total_tokens = sum_p + sum_s + sum_b;
  s.min_len = *std::min_element(totals.begin(), totals.end());
  s.max_len = *std::max_element(totals.begin(), totals.end());
  s.mean_len = static_cast<double>(s.total_tokens) /
               static_cast<double>(s.n_books);
  s.median_len = nearest_rank(totals, 50.0);
  s.p90 = nearest_rank(totals, 90.0);
  s.p95 = nearest_rank(totals, 95.0);
  s.p99 = nearest_rank(totals, 99.0);
  double all = s.total_tokens > 0 ? static_cast<double>(s.total_tokens) : 1.0;
  s.global_share_p = 100.0 * static_cast<double>(sum_p) / all;
  s.global_share_s = 100.0 * static_cast<double>(sum_s) / all;
  s.global_share_b = 100.0 * static_cast<double>(sum_b) / all;
  s.book_median_share_p = median_double(share_p);
  s.book_median_share_s = median_double(share_s);
  s.book_median_share_b = median_double(share_b);
  return s;
}

std::vector<HistogramBin> histogram(const std::vector<SequenceLengths>& lengths,
                                    std::uint64_t bucket_width) {
  if (bucket_width == 0) throw BadWidth("bucket width must be positive");
  std::map<std::uint64_t, std::uint64_t> counts;
  for (const auto& row : lengths) counts[row.total() / bucket_width] += 1;
  std::vector<HistogramBin> out;
  for (const auto& [bucket, count] : counts)
    out.push_back({bucket * bucket_width, (bucket + 1) * bucket_width, count});
  return out;
}

std::vector<EnvelopeEntry> bucket_envelope(
    const std::vector<SequenceLengths>& lengths, std::uint64_t bucket_width) {
  if (bucket_width == 0) throw BadWidth("bucket width must be positive");
  std::map<std::uint64_t, const SequenceLengths*> best;
  for (const auto& row : lengths) {
    std::uint64_t bucket = row.total() / bucket_width;
    auto [it, fresh] = best.try_emplace(bucket, &row);
    if (fresh) continue;
    const SequenceLengths* cur = it->second;
    if (row.total() > cur->total() ||
        (row.total() == cur->total() && row.id < cur->id))
      it->second = &row;
  }
  std::vector<EnvelopeEntry> out;
  for (const auto& [bucket, row] : best)
    out.push_back({bucket * bucket_width, (bucket + 1) * bucket_width, *row});
  return out;
}

std::vector<SequenceLengths> load_manifest(std::istream& in) {
  std::vector<SequenceLengths> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line).get<SequenceLengths>());
    } catch (const std::exception& e) {
      throw std::runtime_error("manifest line " + std::to_string(lineno) +
                               ": " + e.what());
    }
  }
  return out;
}

std::string histogram_csv(const std::vector<HistogramBin>& bins) {
  std::ostringstream out;
  out << "bucket_lo,bucket_hi,count\n";
  for (const auto& b : bins)
    out << b.lo << "," << b.hi << "," << b.count << "\n";
  return out.str();
}

std::string envelope_csv(const std::vector<EnvelopeEntry>& entries) {
  std::ostringstream out;
  out << "bucket_lo,bucket_hi,id,p,s,b,total\n";
  for (const auto& e : entries)
    out << e.lo << "," << e.hi << "," << e.lengths.id << "," << e.lengths.p
        << "," << e.lengths.s << "," << e.lengths.b << ","
        << e.lengths.total() << "\n";
  return out.str();
}

void to_json(json& j, const CorpusSummary& s) {
  j = json{{"n_books", s.n_books},
           {"total_tokens", s.total_tokens},
           {"min", s.min_len},
           {"max", s.max_len},
           {"mean", s.mean_len},
           {"median", s.median_len},
           {"p90", s.p90},
           {"p95", s.p95},
           {"p99", s.p99},
           {"over_100k", s.over_100k},
           {"over_262144", s.over_clip},
           {"over_500k", s.over_500k},
           {"over_1m", s.over_1m},
           {"global_share_percent",
            {{"prompt", s.global_share_p},
             {"scaffold", s.global_share_s},
             {"book", s.global_share_b}}},
           {"book_median_share_percent",
            {{"prompt", s.book_median_share_p},
             {"scaffold", s.book_median_share_s},
             {"book", s.book_median_share_b}}}};
}

void to_json(json& j, const SequenceLengths& s) {
  j = json{{"id", s.id}, {"p", s.p}, {"s", s.s}, {"b", s.b}};
}

void from_json(const json& j, SequenceLengths& s) {
  s.id = j.value("id", std::string());
  j.at("p").get_to(s.p);
  j.at("s").get_to(s.s);
  j.at("b").get_to(s.b);
}

}  // namespace bookpipe::stats
