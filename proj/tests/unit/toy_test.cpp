#include <cmath>
#include <string>
#include <vector>

#include "bookpipe/precision.hpp"
#include "bookpipe/trainer_toy.hpp"
#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"

using namespace bookpipe;

namespace {

toy::TrainConfig small_cfg() {
  toy::TrainConfig cfg;
  cfg.vocab = 8;
  cfg.steps = 120;
  cfg.eta_max = 0.05;
  cfg.eta_end = 0.0;
  cfg.seed = 7;
  return cfg;
}

std::vector<toy::MaskedSequence> small_corpus(std::uint64_t seed = 17) {
  return toy::make_cycle_corpus(8, 4, 64, 8, 0.0, seed);
}

}  // namespace

TEST_SUITE("toy") {

TEST_CASE("materialization mode names round-trip") {
  using M = toy::Materialization;
  CHECK(toy::parse_materialization(
            toy::materialization_name(M::kDeterministicNearest)) ==
        M::kDeterministicNearest);
  CHECK(toy::parse_materialization(
            toy::materialization_name(M::kLrScaledStochastic)) ==
        M::kLrScaledStochastic);
  CHECK_THROWS_AS(toy::parse_materialization("half_even"),
                  std::invalid_argument);
}

TEST_CASE("learning rate decays linearly over the horizon") {
  toy::TrainConfig cfg;
  cfg.steps = 10;
  cfg.eta_max = 1.0;
  cfg.eta_end = 0.0;
  cfg.decay_steps = 0;  // horizon = steps
  CHECK(toy::eta_at(cfg, 0) == 1.0);
  CHECK(toy::eta_at(cfg, 9) == 0.0);
  CHECK(toy::eta_at(cfg, 5) == doctest::Approx(1.0 - 5.0 / 9.0).epsilon(1e-12));

  cfg.decay_steps = 20;  // run stops partway down the schedule
  CHECK(toy::eta_at(cfg, 9) == doctest::Approx(1.0 - 9.0 / 19.0).epsilon(1e-12));
  CHECK(toy::eta_at(cfg, 19) == 0.0);
  CHECK(toy::eta_at(cfg, 25) == 0.0);

  cfg.eta_end = 0.25;
  CHECK(toy::eta_at(cfg, 0) == 1.0);
  CHECK(toy::eta_at(cfg, 19) == 0.25);
}

TEST_CASE("initialization keeps magnitudes off zero on the coarse grid") {
  auto a = toy::init_theta(16, 5);
  auto b = toy::init_theta(16, 5);
  CHECK(a == b);
  CHECK(a.size() == 256);
  bool saw_pos = false, saw_neg = false;
  for (float v : a) {
    CHECK(precision::is_bf16(v));
    CHECK(std::fabs(v) >= 0.49);
    CHECK(std::fabs(v) <= 1.51);
    saw_pos |= v > 0;
    saw_neg |= v < 0;
  }
  CHECK(saw_pos);
  CHECK(saw_neg);

  auto c = toy::init_theta(16, 6);
  CHECK(a != c);

  // a large base shifts every entry near the offset; the grid step there is 2
  auto d = toy::init_theta(4, 5, 384.0);
  for (float v : d) {
    CHECK(v >= 382.0f);
    CHECK(v <= 386.0f);
    CHECK(precision::is_bf16(v));
  }
}

TEST_CASE("bigram counts ignore position zero and masked targets") {
  toy::MaskedSequence seq;
  seq.tokens = {0, 1, 2, 0};
  seq.mask = {1, 1, 1, 1};
  auto counts = toy::BigramCounts::from_corpus(3, {seq});
  CHECK(counts.vocab == 3);
  CHECK(counts.total == 3.0);
  CHECK(counts.count[0 * 3 + 1] == 1.0);
  CHECK(counts.count[1 * 3 + 2] == 1.0);
  CHECK(counts.count[2 * 3 + 0] == 1.0);

  seq.mask = {1, 0, 1, 1};
  auto masked = toy::BigramCounts::from_corpus(3, {seq});
  CHECK(masked.total == 2.0);
  CHECK(masked.count[0 * 3 + 1] == 0.0);

  toy::MaskedSequence bad;
  bad.tokens = {0, 5};
  bad.mask = {1, 1};
  CHECK_THROWS_AS(toy::BigramCounts::from_corpus(3, {bad}),
                  std::invalid_argument);
}

TEST_CASE("uniform logits give ln(vocab) loss and zero row gradient sums") {
  auto counts = toy::BigramCounts::from_corpus(8, small_corpus());
  std::vector<float> w(64, 0.0f);
  std::vector<double> grad(64, 1.0);
  double loss = toy::masked_ce_and_grad(counts, w, grad);
  CHECK(loss == doctest::Approx(std::log(8.0)).epsilon(1e-12));
  CHECK(toy::masked_ce(counts, w) == loss);
  for (int row = 0; row < 8; ++row) {
    double sum = 0.0;
    for (int j = 0; j < 8; ++j) sum += grad[row * 8 + j];
    CHECK(sum == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("gradient matches central finite differences") {
  auto counts = toy::BigramCounts::from_corpus(8, small_corpus());
  testutil::Rng rng(21);
  std::vector<float> w(64);
  for (auto& v : w) v = static_cast<float>(rng.uniform() * 2.0 - 1.0);
  std::vector<double> grad(64);
  toy::masked_ce_and_grad(counts, w, grad);

  const double h = 1e-4;
  for (int probe = 0; probe < 12; ++probe) {
    auto i = rng.below(64);
    auto wp = w;
    auto wm = w;
    wp[i] = static_cast<float>(wp[i] + h);
    wm[i] = static_cast<float>(wm[i] - h);
    // divide by the realized float step, not the nominal one
    double span = double(wp[i]) - double(wm[i]);
    double fd = (toy::masked_ce(counts, wp) - toy::masked_ce(counts, wm)) / span;
    CHECK(grad[i] == doctest::Approx(fd).epsilon(5e-3));
  }
}

TEST_CASE("cycle corpus walks plus one with the prompt masked out") {
  auto corpus = toy::make_cycle_corpus(8, 4, 64, 8, 0.0, 3);
  REQUIRE(corpus.size() == 4);
  for (const auto& seq : corpus) {
    REQUIRE(seq.tokens.size() == 64);
    REQUIRE(seq.mask.size() == 64);
    for (int i = 0; i < 8; ++i) CHECK(seq.mask[static_cast<std::size_t>(i)] == 0);
    for (std::size_t i = 8; i < 64; ++i) CHECK(seq.mask[i] == 1);
    for (std::size_t i = 0; i + 1 < 64; ++i) {
      CHECK(seq.tokens[i] >= 0);
      CHECK(seq.tokens[i] < 8);
      CHECK(seq.tokens[i + 1] == (seq.tokens[i] + 1) % 8);
    }
  }
  // jumps break the cycle somewhere
  auto jumpy = toy::make_cycle_corpus(8, 8, 128, 8, 0.5, 3);
  bool broke = false;
  for (const auto& seq : jumpy)
    for (std::size_t i = 0; i + 1 < seq.tokens.size(); ++i)
      if (seq.tokens[i + 1] != (seq.tokens[i] + 1) % 8) broke = true;
  CHECK(broke);
}

TEST_CASE("training records a full trace and a bf16 working copy") {
  auto cfg = small_cfg();
  auto result = toy::train(cfg, small_corpus());
  REQUIRE(result.trace.size() == 120);
  CHECK(result.trace.front().loss > result.trace.back().loss);
  for (const auto& rec : result.trace) {
    CHECK(std::isfinite(rec.loss));
    CHECK(rec.alpha == 0.0);  // deterministic mode
  }
  for (float v : result.w) CHECK(precision::is_bf16(v));
  CHECK(result.final_loss() == result.trace.back().loss);

  // loss landscape: learned table beats uniform
  auto counts = toy::BigramCounts::from_corpus(8, small_corpus());
  std::vector<float> uniform(64, 0.0f);
  CHECK(result.final_loss() < toy::masked_ce(counts, uniform));
}

TEST_CASE("stochastic mode follows the alpha schedule") {
  auto cfg = small_cfg();
  cfg.mode = toy::Materialization::kLrScaledStochastic;
  auto result = toy::train(cfg, small_corpus());
  for (int i : {0, 30, 119}) {
    double expect =
        precision::alpha(toy::eta_at(cfg, i), cfg.eta_max);
    CHECK(result.trace[static_cast<std::size_t>(i)].alpha ==
          doctest::Approx(expect).epsilon(1e-12));
  }
  CHECK(result.trace.front().alpha == 1.0);
}

TEST_CASE("forcing alpha to zero reproduces the deterministic run") {
  auto cfg = small_cfg();
  cfg.force_alpha_zero = true;
  auto counts = toy::BigramCounts::from_corpus(8, small_corpus());
  auto report = toy::compare_modes(cfg, counts);
  REQUIRE(report.deterministic.trace.size() ==
          report.stochastic.trace.size());
  for (std::size_t i = 0; i < report.deterministic.trace.size(); ++i)
    CHECK(report.deterministic.trace[i].loss ==
          report.stochastic.trace[i].loss);
  CHECK(report.deterministic.w == report.stochastic.w);
}

TEST_CASE("tiny learning rates on a coarse grid stall the copy") {
  toy::TrainConfig cfg;
  cfg.vocab = 4;
  cfg.steps = 80;
  cfg.eta_max = 1e-5;
  cfg.eta_end = 1e-5;
  cfg.init_base = 384.0;
  cfg.seed = 3;
  auto corpus = toy::make_cycle_corpus(4, 4, 64, 8, 0.0, 4);
  auto result = toy::train(cfg, corpus);
  CHECK(result.stalled);
  for (std::size_t i = 1; i < result.trace.size(); ++i)
    CHECK(result.trace[i].w_changes == 0);

  // a healthy configuration keeps crossing grid points
  auto lively = small_cfg();
  lively.eta_max = 0.5;
  lively.eta_end = 0.5;
  auto ok = toy::train(lively, small_corpus());
  CHECK_FALSE(ok.stalled);
}

TEST_CASE("config validation") {
  auto cfg = small_cfg();
  cfg.decay_steps = 50;  // shorter than steps
  CHECK_THROWS_AS(toy::train(cfg, small_corpus()), std::invalid_argument);
  cfg.decay_steps = -1;
  CHECK_THROWS_AS(toy::train(cfg, small_corpus()), std::invalid_argument);

  auto cfg2 = small_cfg();
  cfg2.vocab = 65;
  CHECK_THROWS_AS(toy::train(cfg2, small_corpus()), std::invalid_argument);
}

TEST_CASE("loss tail helpers") {
  toy::TrainResult r;
  for (int i = 1; i <= 4; ++i) {
    toy::StepRecord rec;
    rec.step = i - 1;
    rec.loss = i;
    r.trace.push_back(rec);
  }
  CHECK(r.final_loss() == 4.0);
  CHECK(r.mean_loss_tail(2) == 3.5);
  CHECK(r.mean_loss_tail(100) == 2.5);
}

TEST_CASE("greedy walk entropy of a strong cycle is ln(vocab)") {
  const int v = 8;
  std::vector<float> w(static_cast<std::size_t>(v) * v, 0.0f);
  for (int i = 0; i < v; ++i)
    w[static_cast<std::size_t>(i) * v + (i + 1) % v] = 10.0f;
  double h = toy::greedy_continuation_entropy(w, v, 0, v * 50);
  CHECK(h == doctest::Approx(std::log(static_cast<double>(v))).epsilon(1e-9));

  // a self-absorbing table visits one state only
  std::vector<float> sink(static_cast<std::size_t>(v) * v, 0.0f);
  for (int i = 0; i < v; ++i) sink[static_cast<std::size_t>(i) * v + 3] = 5.0f;
  CHECK(toy::greedy_continuation_entropy(sink, v, 0, 100) ==
        doctest::Approx(0.0));
}

TEST_CASE("trace csv carries one row per step") {
  auto result = toy::train(small_cfg(), small_corpus());
  auto csv = toy::trace_csv(result);
  CHECK(csv.rfind("step,loss,alpha,w_changes\n", 0) == 0);
  std::size_t rows = 0;
  for (char c : csv)
    if (c == '\n') ++rows;
  CHECK(rows == result.trace.size() + 1);
}

TEST_CASE("mode report json has both runs") {
  auto counts = toy::BigramCounts::from_corpus(8, small_corpus());
  auto report = toy::compare_modes(small_cfg(), counts);
  auto j = toy::report_json(report);
  CHECK(j.contains("deterministic"));
  CHECK(j.contains("stochastic"));
}

}  // TEST_SUITE
