#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "bookpipe/precision.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace bookpipe;

namespace {

float from_bits(std::uint32_t b) { return std::bit_cast<float>(b); }
std::uint32_t to_bits(float f) { return std::bit_cast<std::uint32_t>(f); }

// random finite float (any exponent below the inf/nan band)
float random_finite(testutil::Rng& rng) {
  for (;;) {
    auto b = static_cast<std::uint32_t>(rng.next());
    if (((b >> 23) & 0xFF) != 0xFF) return from_bits(b);
  }
}

}  // namespace

TEST_SUITE("precision") {

TEST_CASE("nearest cast rounds to nearest with ties to even") {
  // representable values pass through
  CHECK(to_bits(precision::nearest_bf16(1.0f)) == 0x3F800000u);
  CHECK(to_bits(precision::nearest_bf16(-2.5f)) == to_bits(-2.5f));

  // exactly halfway, low grid bit even: rounds down
  CHECK(to_bits(precision::nearest_bf16(from_bits(0x3F808000u))) ==
        0x3F800000u);
  // exactly halfway, low grid bit odd: rounds up to the even neighbor
  CHECK(to_bits(precision::nearest_bf16(from_bits(0x3F818000u))) ==
        0x3F820000u);
  // just above halfway rounds up
  CHECK(to_bits(precision::nearest_bf16(from_bits(0x3F808001u))) ==
        0x3F810000u);
  // just below rounds down
  CHECK(to_bits(precision::nearest_bf16(from_bits(0x3F807FFFu))) ==
        0x3F800000u);
  // negative mirror
  CHECK(to_bits(precision::nearest_bf16(from_bits(0xBF808000u))) ==
        0xBF800000u);

  // subnormal grid follows the same rule
  CHECK(to_bits(precision::nearest_bf16(from_bits(0x00008000u))) ==
        0x00000000u);
  CHECK(to_bits(precision::nearest_bf16(from_bits(0x00018000u))) ==
        0x00020000u);
  CHECK(to_bits(precision::nearest_bf16(from_bits(0x80008000u))) ==
        0x80000000u);

  // top of the fp32 range rounds over to infinity
  CHECK(precision::nearest_bf16(std::numeric_limits<float>::max()) ==
        std::numeric_limits<float>::infinity());

  // non-finite passes through
  CHECK(precision::nearest_bf16(std::numeric_limits<float>::infinity()) ==
        std::numeric_limits<float>::infinity());
  CHECK(std::isnan(precision::nearest_bf16(
      std::numeric_limits<float>::quiet_NaN())));
}

TEST_CASE("is_bf16 tracks the 16-bit mantissa boundary") {
  CHECK(precision::is_bf16(1.0f));
  CHECK(precision::is_bf16(0.0f));
  CHECK(precision::is_bf16(-0.0f));
  CHECK(precision::is_bf16(from_bits(0x3F810000u)));
  CHECK_FALSE(precision::is_bf16(from_bits(0x3F800001u)));
  CHECK_FALSE(precision::is_bf16(from_bits(0x3F80FFFFu)));
}

TEST_CASE("neighbors bracket the input") {
  // representable: both neighbors equal the value
  CHECK(precision::bf16_pred(1.0f) == 1.0f);
  CHECK(precision::bf16_succ(1.0f) == 1.0f);

  float x = from_bits(0x3F808000u);  // between 1.0 and the next grid point
  CHECK(to_bits(precision::bf16_pred(x)) == 0x3F800000u);
  CHECK(to_bits(precision::bf16_succ(x)) == 0x3F810000u);

  // past the largest representable magnitude
  CHECK(precision::bf16_succ(std::numeric_limits<float>::max()) ==
        std::numeric_limits<float>::infinity());
  CHECK(precision::bf16_pred(-std::numeric_limits<float>::max()) ==
        -std::numeric_limits<float>::infinity());

  testutil::Rng rng(42);
  for (int i = 0; i < 20000; ++i) {
    float v = random_finite(rng);
    float lo = precision::bf16_pred(v);
    float hi = precision::bf16_succ(v);
    CHECK(precision::is_bf16(lo));
    CHECK(precision::is_bf16(hi));
    CHECK(lo <= v);
    CHECK(v <= hi);
    if (precision::is_bf16(v)) {
      CHECK(lo == v);
      CHECK(hi == v);
    } else if (std::isfinite(hi) && std::isfinite(lo)) {
      // adjacent grid points: nothing representable strictly between
      CHECK_FALSE(precision::is_bf16(from_bits(to_bits(lo) + 0x8000u)));
    }
    // the nearest cast lands on one of the two neighbors
    float q = precision::nearest_bf16(v);
    CHECK((q == lo || q == hi));
  }
}

TEST_CASE("stochastic rounding picks the neighbor by threshold") {
  float x = from_bits(0x3F808000u);  // exactly halfway
  float lo = 1.0f;
  float hi = from_bits(0x3F810000u);
  CHECK(precision::sr_bf16(x, 0.49) == hi);
  CHECK(precision::sr_bf16(x, 0.5) == lo);
  CHECK(precision::sr_bf16(x, 0.51) == lo);
  // representable input ignores u
  CHECK(precision::sr_bf16(1.0f, 0.0) == 1.0f);
  CHECK(precision::sr_bf16(1.0f, 0.999) == 1.0f);
}

TEST_CASE("resolution scale is |x| * eps with a positive floor") {
  precision::BfConfig cfg;
  CHECK(cfg.epsilon() == 0x1.0p-7);
  CHECK(precision::resolution_scale(1.0f) == 0x1.0p-7);
  CHECK(precision::resolution_scale(-2.0f) == 2.0 * 0x1.0p-7);
  CHECK(precision::resolution_scale(0.0f) ==
        static_cast<double>(std::numeric_limits<float>::min()));
  CHECK(precision::resolution_scale(0.0f) > 0.0);

  precision::BfConfig cfg8;
  cfg8.epsilon_exponent = 8;
  CHECK(precision::resolution_scale(1.0f, cfg8) == 0x1.0p-8);
}

TEST_CASE("alpha schedule clips to [0, 1] and validates") {
  const double floor = precision::kEtaFloor;
  CHECK(precision::alpha(1e-3, 1e-3) == 1.0);
  CHECK(precision::alpha(2e-3, 1e-3) == 1.0);
  CHECK(precision::alpha(floor, 1e-3) == 0.0);
  CHECK(precision::alpha(floor / 2, 1e-3) == 0.0);
  CHECK(precision::alpha(0.0, 1e-3) == 0.0);

  double mid = floor + 0.5 * (1e-3 - floor);
  CHECK(precision::alpha(mid, 1e-3) == doctest::Approx(0.5).epsilon(1e-12));

  CHECK_THROWS_AS(precision::alpha(1e-3, floor), precision::BadSchedule);
  CHECK_THROWS_AS(precision::alpha(1e-3, floor / 10), precision::BadSchedule);

  precision::DowncastSchedule s;
  s.eta_t = mid;
  s.eta_max = 1e-3;
  CHECK(s.alpha() == precision::alpha(mid, 1e-3));
}

TEST_CASE("dither stream is keyed, additive over shard offsets, in (0,1)") {
  precision::DitherKey k{7, 11, 0, 0};
  double u = precision::dither_uniform(k, 5);
  CHECK(u == precision::dither_uniform(k, 5));
  CHECK(u > 0.0);
  CHECK(u < 1.0);

  testutil::Rng rng(3);
  for (int i = 0; i < 5000; ++i) {
    precision::DitherKey base{rng.next(), rng.next(), 0, 0};
    std::uint64_t dp = rng.below(1u << 20);
    std::uint64_t tp = rng.below(1u << 20);
    std::uint64_t local = rng.below(1u << 20);
    precision::DitherKey sharded{base.step, base.param_id, dp, tp};
    CHECK(precision::dither_uniform(sharded, local) ==
          precision::dither_uniform(base, dp + tp + local));
    double v = precision::dither_uniform(sharded, local);
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }

  // key components matter
  precision::DitherKey k2{8, 11, 0, 0};
  precision::DitherKey k3{7, 12, 0, 0};
  CHECK(precision::dither_uniform(k, 5) != precision::dither_uniform(k2, 5));
  CHECK(precision::dither_uniform(k, 5) != precision::dither_uniform(k3, 5));

  // moments look uniform over a big sample
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i)
    sum += precision::dither_uniform(k, static_cast<std::uint64_t>(i));
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("alpha zero downcast is bitwise the nearest cast") {
  testutil::Rng rng(11);
  std::vector<float> theta(4096);
  for (auto& v : theta) v = random_finite(rng);

  precision::DowncastSchedule sched;
  sched.eta_t = precision::kEtaFloor / 2;  // clamps to alpha = 0
  sched.eta_max = 1e-3;
  REQUIRE(sched.alpha() == 0.0);

  precision::DitherKey key{3, 9, 0, 0};
  auto copy = precision::dithered_downcast(theta, sched, key);
  REQUIRE(copy.values.size() == theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i)
    CHECK(to_bits(copy.values[i]) == to_bits(precision::nearest_bf16(theta[i])));
  CHECK(copy.dither.empty());
}

TEST_CASE("dithered downcast emits representable values near the input") {
  testutil::Rng rng(13);
  std::vector<float> theta(2048);
  for (auto& v : theta) v = static_cast<float>(rng.uniform() * 8.0 - 4.0);

  precision::DowncastSchedule sched;
  sched.eta_t = 1e-3;
  sched.eta_max = 1e-3;
  REQUIRE(sched.alpha() == 1.0);

  precision::DitherKey key{17, 23, 0, 0};
  auto copy = precision::dithered_downcast(theta, sched, key, {}, true);
  REQUIRE(copy.values.size() == theta.size());
  REQUIRE(copy.dither.size() == theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    CHECK(precision::is_bf16(copy.values[i]));
    double r = precision::resolution_scale(theta[i]);
    // perturbation bounded by half a resolution step
    CHECK(std::fabs(static_cast<double>(copy.dither[i])) <= 0.5 * r);
    // result within one step of the input
    CHECK(std::fabs(static_cast<double>(copy.values[i]) - theta[i]) <=
          1.5 * r * std::max(1.0, std::fabs(theta[i])));
  }

  // deterministic in the key
  auto again = precision::dithered_downcast(theta, sched, key, {}, true);
  CHECK(again.values == copy.values);
  CHECK(again.dither == copy.dither);

  // a different step changes at least some entries
  precision::DitherKey other{18, 23, 0, 0};
  auto moved = precision::dithered_downcast(theta, sched, other);
  CHECK(moved.values != copy.values);
}

TEST_CASE("partitioned downcast matches the single shard result") {
  testutil::Rng rng(29);
  std::vector<float> theta(1000);
  for (auto& v : theta) v = static_cast<float>(rng.uniform() * 2.0 - 1.0);

  precision::DowncastSchedule sched;
  sched.eta_t = 5e-4;
  sched.eta_max = 1e-3;
  precision::DitherKey key{100, 5, 0, 0};

  auto whole = precision::dithered_downcast(theta, sched, key);

  std::vector<std::size_t> chunks = {300, 1, 450, 249};
  std::vector<std::size_t> order = {2, 0, 3, 1};
  auto split =
      precision::downcast_partitioned(theta, sched, key, chunks, order);
  REQUIRE(split.size() == whole.values.size());
  for (std::size_t i = 0; i < split.size(); ++i)
    CHECK(to_bits(split[i]) == to_bits(whole.values[i]));
}

}  // TEST_SUITE
