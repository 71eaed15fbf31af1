#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <tuple>
#include <vector>

#include "bookpipe/gateway.hpp"

namespace testutil {

// splitmix64; stable across platforms, unlike std:: distributions.
struct Rng {
  std::uint64_t state;
  explicit Rng(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  // Modulo bias is irrelevant at test sample sizes.
  std::uint64_t below(std::uint64_t n) { return n ? next() % n : 0; }
  int range(int lo, int hi) {  // inclusive
    return lo +
           static_cast<int>(below(static_cast<std::uint64_t>(hi - lo + 1)));
  }
  bool chance(double p) { return uniform() < p; }
};

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& hint);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, const std::string& content);

// Regularized upper incomplete gamma Q(a, x).
double gamma_q(double a, double x);

// p-value of the Pearson statistic against expected counts, df = k - 1.
double chi_square_p(const std::vector<double>& observed,
                    const std::vector<double>& expected);

// Backend scripted by (step, unit, ordinal); a missing entry throws
// MissingFixture like the real mock. Records every call it sees.
struct ScriptedBackend : bookpipe::gw::Backend {
  struct Call {
    bookpipe::gw::CallKey key;
    std::string prompt;
  };

  std::map<std::tuple<std::string, std::string, int>, std::string> responses;
  std::vector<Call> calls;
  std::mutex mu;

  void script(const std::string& step, const std::string& unit, int ordinal,
              const std::string& body) {
    responses[{step, unit, ordinal}] = body;
  }
  std::string complete(const bookpipe::gw::ModelProfile& profile,
                       const std::string& prompt,
                       const bookpipe::gw::CallKey& key) override;
};

}  // namespace testutil
