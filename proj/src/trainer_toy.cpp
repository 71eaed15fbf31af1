#include "bookpipe/trainer_toy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include "bookpipe/precision.hpp"

namespace bookpipe::toy {

NonFiniteLoss::NonFiniteLoss(int step_index)
    : std::runtime_error("non-finite loss at step " +
                         std::to_string(step_index)),
      step(step_index) {}

std::string_view materialization_name(Materialization m) {
  switch (m) {
    case Materialization::kDeterministicNearest:
      return "deterministic_nearest";
    case Materialization::kLrScaledStochastic:
      return "lr_scaled_stochastic";
  }
  return "";
}

Materialization parse_materialization(std::string_view name) {
  if (name == "deterministic_nearest")
    return Materialization::kDeterministicNearest;
  if (name == "lr_scaled_stochastic")
    return Materialization::kLrScaledStochastic;
  throw std::invalid_argument("unknown materialization mode: " +
                              std::string(name));
}

BigramCounts BigramCounts::from_corpus(
    int vocab, const std::vector<MaskedSequence>& corpus) {
  if (vocab < 2 || vocab > 64)
    throw std::invalid_argument("vocab size must be in [2, 64]");
  BigramCounts out;
  out.vocab = vocab;
  out.count.assign(static_cast<std::size_t>(vocab) * vocab, 0.0);
  for (const auto& seq : corpus) {
    if (seq.mask.size() != seq.tokens.size())
      throw std::invalid_argument("mask length differs from token length");
    for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
      int t = seq.tokens[i];
      if (t < 0 || t >= vocab)
        throw std::invalid_argument("token out of vocabulary range");
      if (i == 0 || seq.mask[i] == 0) continue;
      int c = seq.tokens[i - 1];
      out.count[static_cast<std::size_t>(c) * vocab + t] += 1.0;
      out.total += 1.0;
    }
  }
  if (out.total <= 0.0)
    throw std::invalid_argument("corpus contributes no masked targets");
  return out;
}

double eta_at(const TrainConfig& cfg, int step) {
  int horizon = cfg.decay_steps > 0 ? cfg.decay_steps : cfg.steps;
  if (horizon <= 1) return cfg.eta_max;
  if (step >= horizon) return cfg.eta_end;
  double frac = static_cast<double>(step) / (horizon - 1);
  return cfg.eta_max + (cfg.eta_end - cfg.eta_max) * frac;
}

std::vector<float> init_theta(int vocab, std::uint64_t seed, double base) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> mag(0.5, 1.5);
  std::vector<float> theta(static_cast<std::size_t>(vocab) * vocab);
  for (auto& v : theta) {
    double m = mag(gen);
    double sign = (gen() & 1) ? 1.0 : -1.0;
    v = precision::nearest_bf16(static_cast<float>(base + sign * m));
  }
  return theta;
}

double masked_ce_and_grad(const BigramCounts& counts, std::span<const float> w,
                          std::span<double> grad) {
  const int V = counts.vocab;
  const std::size_t n = static_cast<std::size_t>(V) * V;
  if (w.size() != n) throw std::invalid_argument("logit table size mismatch");
  if (!grad.empty() && grad.size() != n)
    throw std::invalid_argument("gradient buffer size mismatch");
  double loss = 0.0;
  for (int c = 0; c < V; ++c) {
    const std::size_t row = static_cast<std::size_t>(c) * V;
    double row_count = 0.0;
    for (int t = 0; t < V; ++t) row_count += counts.count[row + t];
    double mx = w[row];
    for (int t = 1; t < V; ++t) mx = std::max(mx, double(w[row + t]));
    double z = 0.0;
    for (int t = 0; t < V; ++t) z += std::exp(double(w[row + t]) - mx);
    double lse = mx + std::log(z);
    for (int t = 0; t < V; ++t) {
      double logit = w[row + t];
      double cnt = counts.count[row + t];
      if (cnt > 0.0) loss -= cnt * (logit - lse);
      if (!grad.empty()) {
        double p = std::exp(logit - lse);
        grad[row + t] = (row_count * p - cnt) / counts.total;
      }
    }
  }
  return loss / counts.total;
}

double masked_ce(const BigramCounts& counts, std::span<const float> w) {
  return masked_ce_and_grad(counts, w, {});
}

double TrainResult::final_loss() const {
  return trace.empty() ? std::numeric_limits<double>::quiet_NaN()
                       : trace.back().loss;
}

double TrainResult::mean_loss_tail(int steps) const {
  if (trace.empty() || steps <= 0)
    return std::numeric_limits<double>::quiet_NaN();
  std::size_t take = std::min<std::size_t>(trace.size(), steps);
  double sum = 0.0;
  for (std::size_t i = trace.size() - take; i < trace.size(); ++i)
    sum += trace[i].loss;
  return sum / static_cast<double>(take);
}

TrainResult train(const TrainConfig& cfg, const BigramCounts& counts) {
  if (cfg.vocab != counts.vocab)
    throw std::invalid_argument("config vocab differs from corpus vocab");
  if (cfg.vocab < 2 || cfg.vocab > 64)
    throw std::invalid_argument("vocab size must be in [2, 64]");
  if (cfg.steps < 0) throw std::invalid_argument("steps must be nonnegative");
  if (!(cfg.eta_max > 0.0)) throw std::invalid_argument("eta_max must be > 0");
  if (cfg.eta_end < 0.0 || cfg.eta_end > cfg.eta_max)
    throw std::invalid_argument("eta_end must be in [0, eta_max]");
  if (cfg.decay_steps < 0)
    throw std::invalid_argument("decay_steps must be nonnegative");
  if (cfg.decay_steps > 0 && cfg.decay_steps < cfg.steps)
    throw std::invalid_argument("decay horizon shorter than the run");

  const std::size_t n = static_cast<std::size_t>(cfg.vocab) * cfg.vocab;
  TrainResult out;
  out.theta = init_theta(cfg.vocab, cfg.seed, cfg.init_base);
  out.w = out.theta;  // init is on the bf16 grid already
  out.trace.reserve(static_cast<std::size_t>(cfg.steps));
  std::vector<double> grad(n, 0.0);
  std::vector<float> prev_w = out.w;

  for (int step = 0; step < cfg.steps; ++step) {
    double eta = eta_at(cfg, step);
    double alpha = 0.0;
    if (cfg.mode == Materialization::kDeterministicNearest) {
      for (std::size_t i = 0; i < n; ++i)
        out.w[i] = precision::nearest_bf16(out.theta[i]);
    } else {
      precision::DowncastSchedule sched;
      sched.eta_t = cfg.force_alpha_zero ? precision::kEtaFloor : eta;
      sched.eta_max = cfg.eta_max;
      precision::DitherKey key;
      key.step = static_cast<std::uint64_t>(step);
      key.param_id = cfg.seed;
      auto copy = precision::dithered_downcast(out.theta, sched, key);
      out.w = std::move(copy.values);
      alpha = sched.alpha();
    }

    int changed = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (out.w[i] != prev_w[i]) ++changed;
    prev_w = out.w;

    double loss = masked_ce_and_grad(counts, out.w, grad);
    if (!std::isfinite(loss)) throw NonFiniteLoss(step);
    out.trace.push_back({step, loss, alpha, changed});

    for (std::size_t i = 0; i < n; ++i)
      out.theta[i] =
          static_cast<float>(double(out.theta[i]) - eta * grad[i]);
  }

  if (!out.trace.empty()) {
    std::size_t window = std::min<std::size_t>(out.trace.size(), 50);
    int tail_changes = 0;
    for (std::size_t i = out.trace.size() - window; i < out.trace.size(); ++i)
      tail_changes += out.trace[i].w_changes;
    out.stalled = tail_changes == 0;
  }
  return out;
}

TrainResult train(const TrainConfig& cfg,
                  const std::vector<MaskedSequence>& corpus) {
  return train(cfg, BigramCounts::from_corpus(cfg.vocab, corpus));
}

ModeReport compare_modes(const TrainConfig& cfg, const BigramCounts& counts) {
  ModeReport report;
  TrainConfig det = cfg;
  det.mode = Materialization::kDeterministicNearest;
  report.deterministic = train(det, counts);
  TrainConfig sto = cfg;
  sto.mode = Materialization::kLrScaledStochastic;
  report.stochastic = train(sto, counts);
  return report;
}

std::vector<MaskedSequence> make_cycle_corpus(int vocab, int sequences,
                                              int length, int prompt_len,
                                              double jump_prob,
                                              std::uint64_t seed) {
  if (vocab < 2) throw std::invalid_argument("vocab size must be at least 2");
  if (length < 2) throw std::invalid_argument("sequence length too short");
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> tok(0, vocab - 1);
  std::vector<MaskedSequence> corpus;
  corpus.reserve(static_cast<std::size_t>(sequences));
  for (int s = 0; s < sequences; ++s) {
    MaskedSequence seq;
    seq.tokens.resize(static_cast<std::size_t>(length));
    seq.mask.resize(static_cast<std::size_t>(length));
    seq.tokens[0] = tok(gen);
    for (int i = 1; i < length; ++i) {
      int prev = seq.tokens[static_cast<std::size_t>(i) - 1];
      seq.tokens[static_cast<std::size_t>(i)] =
          coin(gen) < jump_prob ? tok(gen) : (prev + 1) % vocab;
    }
    for (int i = 0; i < length; ++i)
      seq.mask[static_cast<std::size_t>(i)] = i < prompt_len ? 0 : 1;
    corpus.push_back(std::move(seq));
  }
  return corpus;
}

double greedy_continuation_entropy(std::span<const float> w, int vocab,
                                   int start, int length) {
  if (vocab < 1 || w.size() != static_cast<std::size_t>(vocab) * vocab)
    throw std::invalid_argument("logit table size mismatch");
  if (start < 0 || start >= vocab)
    throw std::invalid_argument("start token out of range");
  if (length <= 0) return 0.0;
  std::vector<int> visits(static_cast<std::size_t>(vocab), 0);
  int cur = start;
  for (int i = 0; i < length; ++i) {
    const std::size_t row = static_cast<std::size_t>(cur) * vocab;
    int best = 0;
    for (int t = 1; t < vocab; ++t)
      if (w[row + t] > w[row + best]) best = t;
    cur = best;
    ++visits[static_cast<std::size_t>(cur)];
  }
  double h = 0.0;
  for (int v : visits) {
    if (v == 0) continue;
    double p = static_cast<double>(v) / length;
    h -= p * std::log(p);
  }
  return h;
}

std::string trace_csv(const TrainResult& r) {
  std::string out = "step,loss,alpha,w_changes\n";
  char buf[128];
  for (const auto& rec : r.trace) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%d\n", rec.step, rec.loss,
                  rec.alpha, rec.w_changes);
    out += buf;
  }
  return out;
}

static nlohmann::json run_json(const TrainResult& r) {
  nlohmann::json j;
  j["steps"] = r.trace.size();
  j["final_loss"] = r.final_loss();
  j["stalled"] = r.stalled;
  return j;
}

nlohmann::json report_json(const ModeReport& report) {
  nlohmann::json j;
  j["deterministic"] = run_json(report.deterministic);
  j["stochastic"] = run_json(report.stochastic);
  return j;
}

}  // namespace bookpipe::toy
