#include "bookpipe/precision.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

namespace bookpipe::precision {

namespace {

constexpr std::uint32_t kLowMask = 0x0000FFFFu;
constexpr std::uint32_t kGridMask = 0xFFFF0000u;

std::uint32_t bits_of(float x) { return std::bit_cast<std::uint32_t>(x); }
float float_of(std::uint32_t b) { return std::bit_cast<float>(b); }

// splitmix64 finalizer; full avalanche per stage.
std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

double BfConfig::epsilon() const { return std::ldexp(1.0, -epsilon_exponent); }

bool is_bf16(float x) {
  if (std::isnan(x)) return false;
  return (bits_of(x) & kLowMask) == 0;
}

float nearest_bf16(float x) {
  if (!std::isfinite(x)) return x;
  std::uint32_t b = bits_of(x);
  std::uint32_t bias = ((b >> 16) & 1u) + 0x7FFFu;
  return float_of((b + bias) & kGridMask);
}

float bf16_pred(float x) {
  if (!std::isfinite(x)) return x;
  std::uint32_t b = bits_of(x);
  std::uint32_t lo = b & kGridMask;  // magnitude truncated toward zero
  if ((b & kLowMask) == 0) return x;
  bool negative = (b & 0x80000000u) != 0;
  return float_of(negative ? lo + 0x10000u : lo);
}

float bf16_succ(float x) {
  if (!std::isfinite(x)) return x;
  std::uint32_t b = bits_of(x);
  std::uint32_t lo = b & kGridMask;
  if ((b & kLowMask) == 0) return x;
  bool negative = (b & 0x80000000u) != 0;
  return float_of(negative ? lo : lo + 0x10000u);
}

float sr_bf16(float x, double u) {
  if (!std::isfinite(x) || is_bf16(x)) return x;
  float lo = bf16_pred(x);
  float hi = bf16_succ(x);
  double p_up = (static_cast<double>(x) - lo) / (static_cast<double>(hi) - lo);
  return u < p_up ? hi : lo;
}

double resolution_scale(float x, const BfConfig& cfg) {
  double tiny = std::numeric_limits<float>::min();  // 2^-126
  return std::max(std::abs(static_cast<double>(x)) * cfg.epsilon(), tiny);
}

double alpha(double eta_t, double eta_max, double eta_floor) {
  if (!(eta_max > eta_floor)) throw BadSchedule("alpha: eta_max must exceed eta_floor");
  double a = (eta_t - eta_floor) / (eta_max - eta_floor);
  return std::clamp(a, 0.0, 1.0);
}

double DowncastSchedule::alpha() const {
  return precision::alpha(eta_t, eta_max, eta_floor);
}

double dither_uniform(const DitherKey& key, std::uint64_t local_index) {
  std::uint64_t global_index = key.dp_offset + key.tp_offset + local_index;
  std::uint64_t h = mix64(key.step);
  h = mix64(h ^ key.param_id);
  h = mix64(h ^ global_index);
  // 53-bit mantissa, offset by half a quantum: strictly inside (0,1).
  return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

TrainCopy dithered_downcast(std::span<const float> theta,
                            const DowncastSchedule& schedule,
                            const DitherKey& key, const BfConfig& cfg,
                            bool record_dither) {
  double a = schedule.alpha();
  TrainCopy out;
  out.values.resize(theta.size());
  if (record_dither) out.dither.assign(theta.size(), 0.0f);
  if (a == 0.0) {
    for (std::size_t i = 0; i < theta.size(); ++i)
      out.values[i] = nearest_bf16(theta[i]);
    return out;
  }
  for (std::size_t i = 0; i < theta.size(); ++i) {
    double u = dither_uniform(key, i);
    double delta = a * (u - 0.5) * resolution_scale(theta[i], cfg);
    float perturbed = static_cast<float>(static_cast<double>(theta[i]) + delta);
    out.values[i] = nearest_bf16(perturbed);
    if (record_dither) out.dither[i] = static_cast<float>(delta);
  }
  return out;
}

std::vector<float> downcast_partitioned(std::span<const float> theta,
                                        const DowncastSchedule& schedule,
                                        const DitherKey& base_key,
                                        std::span<const std::size_t> chunk_sizes,
                                        std::span<const std::size_t> eval_order,
                                        const BfConfig& cfg) {
  std::size_t total = std::accumulate(chunk_sizes.begin(), chunk_sizes.end(),
                                      std::size_t{0});
  if (total != theta.size())
    throw std::invalid_argument("downcast_partitioned: chunk sizes mismatch");
  std::vector<std::size_t> offsets(chunk_sizes.size(), 0);
  for (std::size_t c = 1; c < chunk_sizes.size(); ++c)
    offsets[c] = offsets[c - 1] + chunk_sizes[c - 1];
  std::vector<float> out(theta.size());
  for (std::size_t ord : eval_order) {
    DitherKey k = base_key;
    k.dp_offset += offsets[ord];
    TrainCopy w = dithered_downcast(theta.subspan(offsets[ord], chunk_sizes[ord]),
                                    schedule, k, cfg);
    std::copy(w.values.begin(), w.values.end(), out.begin() + offsets[ord]);
  }
  return out;
}

}  // namespace bookpipe::precision
