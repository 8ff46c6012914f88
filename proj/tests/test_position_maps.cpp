#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "crpa/position_maps.hpp"
#include "oracles.hpp"

using crpa::FrequencySchedule;
using crpa::PiecewiseMap;
using crpa::RegionSpec;

namespace {

// 11-token two-resolution layout: cells 0..8, cells 3..4 upsampled x2.
std::vector<RegionSpec> toy_regions() { return crpa::make_block_upsampled_regions(9, 3, 5, 2); }

}  // namespace

TEST_CASE("fractional map keeps original fractional indices") {
  const auto regions = toy_regions();
  const auto mapped = crpa::map_tokens(crpa::build_fractional_map(regions), regions);
  const std::vector<double> want = {0, 1, 2, 3.0, 3.5, 4.0, 4.5, 5, 6, 7, 8};
  REQUIRE(mapped.size() == want.size());
  for (std::size_t i = 0; i < want.size(); ++i) CHECK(mapped[i] == want[i]);
}

TEST_CASE("integerized map lands every token on consecutive fine indices") {
  const auto regions = toy_regions();
  const auto mapped = crpa::map_tokens(crpa::build_integerized_map(regions), regions);
  const std::vector<double> want = {0, 2, 4, 6, 7, 8, 9, 10, 12, 14, 16};
  REQUIRE(mapped.size() == want.size());
  for (std::size_t i = 0; i < want.size(); ++i) CHECK(mapped[i] == want[i]);
}

TEST_CASE("piecewise map evaluates the owning region") {
  const PiecewiseMap map = crpa::build_integerized_map(toy_regions());
  CHECK(map(0.0) == 0.0);
  CHECK(map(2.999) == doctest::Approx(5.998).epsilon(1e-12));
  CHECK(map(3.0) == 6.0);
  CHECK(map(4.5) == 9.0);
  CHECK(map(5.0) == 10.0);
  CHECK(map(8.0) == 16.0);
}

TEST_CASE("map construction enforces ordering and continuity") {
  // Continuous two-region map: [0,2) at scale 1 then [2,4) at scale 2.
  CHECK_NOTHROW(PiecewiseMap({RegionSpec{0, 2, 1, 0, 1}, RegionSpec{2, 4, 2, 2, 1}}));
  // Offset jump breaks continuity.
  CHECK_THROWS_WITH_AS(PiecewiseMap({RegionSpec{0, 2, 1, 0, 1}, RegionSpec{2, 4, 1, 3, 1}}),
                       "map not continuous", std::invalid_argument);
  // Overlap and gap are rejected.
  CHECK_THROWS_AS(PiecewiseMap({RegionSpec{0, 2, 1, 0, 1}, RegionSpec{1, 4, 1, 1, 1}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(PiecewiseMap({RegionSpec{0, 2, 1, 0, 1}, RegionSpec{3, 4, 1, 3, 1}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(PiecewiseMap({}), std::invalid_argument);
  CHECK_THROWS_AS(PiecewiseMap({RegionSpec{2, 2, 1, 0, 1}}), std::invalid_argument);
}

TEST_CASE("block layout builder validates its arguments") {
  CHECK_THROWS_AS(crpa::make_block_upsampled_regions(9, 5, 3, 2), std::invalid_argument);
  CHECK_THROWS_AS(crpa::make_block_upsampled_regions(9, -1, 3, 2), std::invalid_argument);
  CHECK_THROWS_AS(crpa::make_block_upsampled_regions(9, 3, 10, 2), std::invalid_argument);
  CHECK_THROWS_AS(crpa::make_block_upsampled_regions(9, 3, 5, 0), std::invalid_argument);
  // Block at the very start or end still yields a valid map.
  const auto head = crpa::make_block_upsampled_regions(4, 0, 1, 2);
  CHECK(crpa::map_tokens(crpa::build_fractional_map(head), head).size() == 5);
  const auto tail = crpa::make_block_upsampled_regions(4, 3, 4, 3);
  CHECK(crpa::map_tokens(crpa::build_integerized_map(tail), tail).size() == 6);
}

TEST_CASE("ntk parameters follow the closed-form exponent") {
  const auto p = crpa::NtkParams::for_dim(2.0, 4);
  CHECK(p.lambda == doctest::Approx(4.0).epsilon(1e-15));  // 2^(4/2)
  const auto p8 = crpa::NtkParams::for_dim(3.0, 8);
  CHECK(p8.lambda == doctest::Approx(std::pow(3.0, 8.0 / 6.0)).epsilon(1e-15));
  CHECK_THROWS_AS(crpa::NtkParams::for_dim(2.0, 2), std::domain_error);
  CHECK_THROWS_AS(crpa::NtkParams::for_dim(-1.0, 4), std::invalid_argument);
}

TEST_CASE("ntk rescale keeps the fastest frequency and slows the rest") {
  const FrequencySchedule fs(4, 10000.0);
  const FrequencySchedule out = crpa::ntk_rescale(fs, crpa::NtkParams::for_dim(2.0, 4));
  // New base 40000: omega_0 = 1 exactly, omega_1 = 40000^(-1/2) = 0.005.
  CHECK(out.freq(0) == 1.0);
  CHECK(out.freq(1) == doctest::Approx(0.005).epsilon(1e-15));
  CHECK(out.base().has_value());
  CHECK(*out.base() == doctest::Approx(40000.0).epsilon(1e-15));

  // Slowest-pair wavelength stretches by about the extension factor as
  // dim grows; at dim = 4 the stretch equals lambda^(1/2) = s exactly.
  CHECK(fs.freq(1) / out.freq(1) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("ntk rescale needs a geometric schedule") {
  const FrequencySchedule explicit_fs(4, Eigen::Vector2d(1.0, 0.3));
  CHECK_THROWS_AS(crpa::ntk_rescale(explicit_fs, crpa::NtkParams::for_dim(2.0, 4)),
                  std::invalid_argument);
}

TEST_CASE("yarn gamma is a clamped linear ramp") {
  crpa::YarnParams yp;
  yp.alpha = 1.0;
  yp.beta = 32.0;
  CHECK(crpa::yarn_gamma(0.5, yp) == 0.0);
  CHECK(crpa::yarn_gamma(1.0, yp) == 0.0);
  CHECK(crpa::yarn_gamma(32.0, yp) == 1.0);
  CHECK(crpa::yarn_gamma(100.0, yp) == 1.0);
  CHECK(crpa::yarn_gamma(16.5, yp) == doctest::Approx(0.5).epsilon(1e-15));
  yp.beta = 1.0;
  CHECK_THROWS_AS(crpa::yarn_gamma(2.0, yp), std::invalid_argument);
}

TEST_CASE("yarn rescale blends between untouched and interpolated frequencies") {
  const int dim = 64;
  const FrequencySchedule fs(dim, 10000.0);
  crpa::YarnParams yp;
  yp.train_length = 64.0;
  yp.extension_factor = 2.0;
  const FrequencySchedule out = crpa::yarn_rescale(fs, yp);
  const double two_pi = 2.0 * std::numbers::pi;
  for (int i = 0; i < fs.num_pairs(); ++i) {
    const double r = yp.train_length * fs.freq(i) / two_pi;
    const double g = crpa::yarn_gamma(r, yp);
    const double want = g * fs.freq(i) + (1.0 - g) * fs.freq(i) / yp.extension_factor;
    CHECK(out.freq(i) == doctest::Approx(want).epsilon(1e-15));
    if (r >= yp.beta) CHECK(out.freq(i) == fs.freq(i));
    if (r <= yp.alpha) CHECK(out.freq(i) == doctest::Approx(fs.freq(i) / 2.0).epsilon(1e-15));
  }
  // A pair exactly halfway up the ramp blends half and half.
  const double mid_rot = (yp.alpha + yp.beta) / 2.0;
  const double omega_mid = mid_rot * two_pi / yp.train_length;
  const FrequencySchedule single(2, Eigen::VectorXd::Constant(1, omega_mid));
  const FrequencySchedule blended = crpa::yarn_rescale(single, yp);
  CHECK(blended.freq(0) ==
        doctest::Approx(0.5 * omega_mid + 0.5 * omega_mid / 2.0).epsilon(1e-14));
}

TEST_CASE("yarn rescale validates parameters") {
  const FrequencySchedule fs(8);
  crpa::YarnParams yp;
  yp.train_length = 0.0;
  CHECK_THROWS_AS(crpa::yarn_rescale(fs, yp), std::invalid_argument);
  yp.train_length = 32.0;
  yp.extension_factor = -2.0;
  CHECK_THROWS_AS(crpa::yarn_rescale(fs, yp), std::invalid_argument);
  yp.extension_factor = 2.0;
  yp.temperature = 0.0;
  CHECK_THROWS_AS(crpa::yarn_rescale(fs, yp), std::invalid_argument);
}

TEST_CASE("stride re-indexing expresses keys in query units") {
  // Coarse key against a fine query: indices stretch by the ratio.
  const crpa::StrideRatio lift{0.5, 1.0};
  CHECK(crpa::crpa_remap(3.0, lift) == 6.0);
  // Fine key against a coarse query: indices shrink.
  const crpa::StrideRatio pool{1.0, 0.5};
  CHECK(crpa::crpa_remap(6.0, pool) == 3.0);
  // Equal strides are the identity.
  const crpa::StrideRatio same{1.0, 1.0};
  CHECK(crpa::crpa_remap(7.0, same) == 7.0);
  CHECK_THROWS_AS(crpa::crpa_remap(1.0, crpa::StrideRatio{0.0, 1.0}), std::invalid_argument);
}

TEST_CASE("relative score under exact re-indexing matches the physical offset") {
  // A coarse key lifted into fine units produces the same score as the
  // physical offset evaluated in fine units.
  oracle::Lcg rng(53);
  const FrequencySchedule fs(16);
  for (int rep = 0; rep < 50; ++rep) {
    const Eigen::VectorXd q = rng.vector(16);
    const Eigen::VectorXd k = rng.vector(16);
    const double q_native = std::floor(20.0 * rng.uniform());  // fine index
    const double k_native = std::floor(10.0 * rng.uniform());  // coarse index
    const crpa::StrideRatio sr{0.5, 1.0};
    const double delta = crpa::crpa_remap(k_native, sr) - q_native;
    const double physical_delta = (k_native * 1.0 - q_native * 0.5) / 0.5;
    CHECK(std::abs(delta - physical_delta) < 1e-12);
    CHECK(std::abs(crpa::score_relative(q, k, delta, fs) -
                   oracle::score_relative(q, k, physical_delta, fs)) < 1e-12);
  }
}
