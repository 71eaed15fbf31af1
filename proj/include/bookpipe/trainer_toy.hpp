#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace bookpipe::toy {

// Bigram logit model trained with a full-precision master and a low-precision
// working copy materialized once per step. Small enough that one step is a
// few thousand flops, so ULP-scale effects can be probed over long runs.

struct NonFiniteLoss : std::runtime_error {
  explicit NonFiniteLoss(int step_index);
  int step = 0;
};

enum class Materialization {
  kDeterministicNearest,
  kLrScaledStochastic,
};

std::string_view materialization_name(Materialization m);
Materialization parse_materialization(std::string_view name);

struct MaskedSequence {
  std::vector<int> tokens;
  std::vector<int> mask;  // nonzero = position contributes to the loss
};

// Mask-weighted bigram transition counts. Position i >= 1 with mask[i] != 0
// contributes one count at (tokens[i-1], tokens[i]); position 0 has no
// context and never contributes.
struct BigramCounts {
  int vocab = 0;
  std::vector<double> count;  // vocab*vocab, row = context token
  double total = 0.0;

  static BigramCounts from_corpus(int vocab,
                                  const std::vector<MaskedSequence>& corpus);
};

struct TrainConfig {
  int vocab = 16;  // at most 64
  int steps = 400;
  double eta_max = 1e-4;
  double eta_end = 0.0;   // schedule endpoint reached at decay_steps - 1
  int decay_steps = 0;    // schedule horizon; 0 means equal to steps. A run
                          // may stop before the horizon, leaving eta (and
                          // with it the dither strength) partway down.
  double init_base = 0.0;  // logit offset; large values coarsen the grid
                           // relative to the O(1) logit structure
  Materialization mode = Materialization::kDeterministicNearest;
  std::uint64_t seed = 1;
  bool force_alpha_zero = false;
};

double eta_at(const TrainConfig& cfg, int step);

// base + (sign random, magnitude in [0.5, 1.5]), snapped to the bf16 grid.
// Magnitudes are kept away from zero so every entry sees a comparable
// rounding step.
std::vector<float> init_theta(int vocab, std::uint64_t seed, double base = 0.0);

// Masked cross entropy of the bigram table w over the counts, and its
// gradient (scaled by 1/total). Row softmax uses a max-shifted log-sum-exp.
double masked_ce_and_grad(const BigramCounts& counts, std::span<const float> w,
                          std::span<double> grad);
double masked_ce(const BigramCounts& counts, std::span<const float> w);

struct StepRecord {
  int step = 0;
  double loss = 0.0;   // measured on the materialized copy
  double alpha = 0.0;  // 0 in deterministic mode
  int w_changes = 0;   // entries differing from the previous copy
};

struct TrainResult {
  std::vector<StepRecord> trace;
  std::vector<float> theta;  // final master
  std::vector<float> w;      // final materialized copy
  bool stalled = false;      // no copy entry changed over the last 50 steps

  double final_loss() const;
  double mean_loss_tail(int steps) const;
};

TrainResult train(const TrainConfig& cfg, const BigramCounts& counts);
TrainResult train(const TrainConfig& cfg,
                  const std::vector<MaskedSequence>& corpus);

struct ModeReport {
  TrainResult deterministic;
  TrainResult stochastic;
};

// Both runs share the seed, hence initialization and data.
ModeReport compare_modes(const TrainConfig& cfg, const BigramCounts& counts);

// Synthetic corpus: mostly a +1 cycle over the vocabulary with occasional
// uniform jumps. The first prompt_len positions of each sequence are masked
// out of the objective.
std::vector<MaskedSequence> make_cycle_corpus(int vocab, int sequences,
                                              int length, int prompt_len,
                                              double jump_prob,
                                              std::uint64_t seed);

// Entropy in nats of the visit frequencies along a greedy argmax walk.
double greedy_continuation_entropy(std::span<const float> w, int vocab,
                                   int start, int length);

std::string trace_csv(const TrainResult& r);
nlohmann::json report_json(const ModeReport& report);

}  // namespace bookpipe::toy
