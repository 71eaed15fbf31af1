#include "helpers.hpp"

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace testutil {

TempDir::TempDir(const std::string& hint) {
  static std::atomic<unsigned> counter{0};
  path = std::filesystem::temp_directory_path() /
         ("bookpipe_test_" + hint + "_" + std::to_string(::getpid()) + "_" +
          std::to_string(counter.fetch_add(1)));
  std::filesystem::create_directories(path);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path, ec);
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& p, const std::string& content) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << content;
  if (!out) throw std::runtime_error("cannot write " + p.string());
}

namespace {

// Series for P(a, x); converges quickly when x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < 500; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Lentz continued fraction for Q(a, x), x >= a + 1.
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw std::invalid_argument("gamma_q domain");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_cf(a, x);
}

double chi_square_p(const std::vector<double>& observed,
                    const std::vector<double>& expected) {
  if (observed.size() != expected.size() || observed.empty())
    throw std::invalid_argument("chi_square_p sizes");
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    double diff = observed[i] - expected[i];
    stat += diff * diff / expected[i];
  }
  double df = static_cast<double>(observed.size() - 1);
  return gamma_q(df / 2.0, stat / 2.0);
}

std::string ScriptedBackend::complete(const bookpipe::gw::ModelProfile&,
                                      const std::string& prompt,
                                      const bookpipe::gw::CallKey& key) {
  std::lock_guard<std::mutex> lock(mu);
  calls.push_back({key, prompt});
  auto it = responses.find({key.step, key.unit_id, key.ordinal});
  if (it == responses.end())
    throw bookpipe::gw::MissingFixture(
        "no scripted response for (" + key.step + ", " + key.unit_id + ", " +
        std::to_string(key.ordinal) + ")");
  return it->second;
}

}  // namespace testutil
