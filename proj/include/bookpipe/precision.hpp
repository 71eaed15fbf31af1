#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace bookpipe::precision {

// Software bfloat16: the representable set is exactly the fp32 values whose
// low 16 mantissa bits are zero (1 sign, 8 exponent, 7 stored mantissa bits,
// subnormals and infinities included). Values are kept widened as fp32.

struct BfConfig {
  // ULP of 1.0 for a 7-bit stored mantissa. The 2^-8 convention is selectable.
  int epsilon_exponent = 7;
  double epsilon() const;
};

bool is_bf16(float x);

// Round-to-nearest, ties-to-even on the 7-bit mantissa boundary.
// NaN and infinities pass through unmodified.
float nearest_bf16(float x);

// Adjacent representable values q-(x) <= x <= q+(x). For representable x
// both equal x. Overflowing magnitudes yield the same-signed infinity.
float bf16_pred(float x);
float bf16_succ(float x);

// Ideal stochastic rounding: q+ iff u < (x - q-) / (q+ - q-).
float sr_bf16(float x, double u);

// Local resolution scale r(x) = max(|x| * eps, tiny_fp32). Always positive.
double resolution_scale(float x, const BfConfig& cfg = {});

struct BadSchedule : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr double kEtaFloor = 7e-7;

struct DowncastSchedule {
  double eta_t = 0.0;
  double eta_max = 0.0;
  double eta_floor = kEtaFloor;
  // clip((eta_t - eta_floor) / (eta_max - eta_floor), 0, 1)
  double alpha() const;
};

double alpha(double eta_t, double eta_max, double eta_floor = kEtaFloor);

// Key for the counter-based dither stream. Identical keys and element
// indices reproduce identical uniforms regardless of work partitioning.
struct DitherKey {
  std::uint64_t step = 0;
  std::uint64_t param_id = 0;
  std::uint64_t dp_offset = 0;
  std::uint64_t tp_offset = 0;
};

// Uniform in (0,1), derived by a stateless counter-based hash of
// (step, param_id, global element index). The shard offsets contribute
// additively to the global index.
double dither_uniform(const DitherKey& key, std::uint64_t local_index);

struct MasterParams {
  std::vector<float> values;
};

struct TrainCopy {
  std::vector<float> values;   // every element bf16-representable
  std::vector<float> dither;   // applied perturbations, filled on request
};

// W = Q_nr(theta + alpha * r(theta) * (u - 1/2)) elementwise. The alpha = 0
// path is bit-identical to nearest_bf16.
TrainCopy dithered_downcast(std::span<const float> theta,
                            const DowncastSchedule& schedule,
                            const DitherKey& key, const BfConfig& cfg = {},
                            bool record_dither = false);

// Downcasts a vector shard-by-shard (chunk c starts at the running offset,
// which is added to dp_offset) visiting chunks in eval_order. Bit-identical
// to the single-shard result for any chunking and order.
std::vector<float> downcast_partitioned(std::span<const float> theta,
                                        const DowncastSchedule& schedule,
                                        const DitherKey& base_key,
                                        std::span<const std::size_t> chunk_sizes,
                                        std::span<const std::size_t> eval_order,
                                        const BfConfig& cfg = {});

}  // namespace bookpipe::precision
