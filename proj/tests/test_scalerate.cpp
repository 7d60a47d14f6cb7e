#include <cmath>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "tfscat/error.hpp"
#include "tfscat/scalerate.hpp"

using namespace tfs;

namespace {

ScatteringConfig small_config() {
  ScatteringConfig cfg;
  cfg.sample_rate = 22050.0;
  cfg.Q = 8;
  cfg.octaves = 6;
  cfg.T = 4096.0 / 22050.0;
  return cfg;
}

// Non-negative random coefficients on the network's path table.
Coefficients random_coefficients(const ScatteringNetwork& net, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> e(1.0);
  Coefficients c;
  c.s1.frames = net.frames();
  c.s1.n_lambda = net.n_lambda();
  c.s1.valid_frames = net.valid_frames();
  c.s1.frame_rate = net.frame_rate();
  c.s1.values.resize(c.s1.frames * c.s1.n_lambda);
  for (auto& v : c.s1.values) v = e(rng);
  c.s2.paths = net.paths();
  c.s2.frames = net.frames();
  c.s2.n_lambda = net.n_lambda();
  c.s2.valid_frames = net.valid_frames();
  c.s2.frame_rate = net.frame_rate();
  c.s2.order = TensorOrder::S2;
  c.s2.values.resize(c.s2.paths.size() * c.s2.path_size());
  for (auto& v : c.s2.values) v = e(rng);
  return c;
}

std::size_t mirror_of(const ScatteringTensor& s, std::size_t p) {
  auto m = s.paths[p];
  m.beta = -m.beta;
  return s.find(m);
}

}  // namespace

TEST_CASE("sigmoid schedule") {
  const std::vector<double> t = {-100.0, -1.0, 0.0, 1.0, 2.0, 100.0};
  const auto s = sigma_sigmoid(1.0, 0.0, t, 0.1);
  CHECK(s.sigma[2] == 0.0);
  CHECK(s.sigma[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.sigma[5] == doctest::Approx(-1.0).epsilon(1e-12));
  const double e = std::exp(1.0);
  CHECK(s.sigma[3] == doctest::Approx((1.0 - e) / (1.0 + e)).epsilon(1e-14));
  CHECK(s.sigma[3] == doctest::Approx(-0.462117).epsilon(1e-6));
  CHECK(s.sigma[1] == doctest::Approx(-s.sigma[3]).epsilon(1e-14));
  for (double v : s.sigma) CHECK(std::abs(v) <= 1.0);

  // Shifted origin; slope bound |d sigma| <= frame / tau.
  std::vector<double> grid(200);
  for (std::size_t k = 0; k < grid.size(); ++k) grid[k] = 0.01 * static_cast<double>(k);
  const auto g = sigma_sigmoid(0.5, 1.0, grid, 0.1);
  CHECK(g.sigma[100] == 0.0);
  for (std::size_t k = 1; k < grid.size(); ++k) CHECK(std::abs(g.sigma[k] - g.sigma[k - 1]) <= 0.01 / 0.5);

  CHECK_THROWS_AS(sigma_sigmoid(0.0, 0.0, t, 0.1), ConfigError);
  CHECK_NOTHROW(sigma_sigmoid(0.1, 0.0, t, 0.1));  // warns only
  CHECK_THROWS_AS(sigma_constant(1.5, 4), ConfigError);
}

TEST_CASE("frame times wrap the second half of the margin") {
  const auto t = frame_times(8, 4, 2.0);
  CHECK(t == std::vector<double>{0.0, 0.5, 1.0, 1.5, 2.0, 2.5, -1.0, -0.5});
}

TEST_CASE("chirp inversion algebra is exact") {
  const auto cfg = small_config();
  const ScatteringNetwork net(cfg, 8192);
  const auto c = random_coefficients(net, 1);
  const auto& s2 = c.s2;

  const auto same = chirp_inversion(s2, sigma_constant(1.0, s2.frames));
  CHECK(same.values == s2.values);

  const auto flip = chirp_inversion(s2, sigma_constant(-1.0, s2.frames));
  for (std::size_t p = 0; p < s2.paths.size(); ++p) {
    const auto src = s2.paths[p].beta == 0.0 ? p : mirror_of(s2, p);
    REQUIRE(src != ScatteringTensor::npos);
    const auto a = flip.path(p);
    const auto b = s2.path(src);
    CHECK(std::equal(a.begin(), a.end(), b.begin()));
  }
  CHECK(chirp_inversion(flip, sigma_constant(-1.0, s2.frames)).values == s2.values);

  const auto mid = chirp_inversion(s2, sigma_constant(0.0, s2.frames));
  for (std::size_t p = 0; p < s2.paths.size(); ++p) {
    if (s2.paths[p].beta == 0.0) continue;
    const auto a = mid.path(p);
    const auto b = mid.path(mirror_of(s2, p));
    CHECK(std::equal(a.begin(), a.end(), b.begin()));
  }
}

TEST_CASE("chirp inversion mixes within each pair") {
  const auto cfg = small_config();
  const ScatteringNetwork net(cfg, 8192);
  const auto s2 = random_coefficients(net, 2).s2;
  std::vector<double> times(s2.frames);
  for (std::size_t k = 0; k < times.size(); ++k) times[k] = static_cast<double>(k) / s2.frame_rate - 1.0;
  const auto sched = sigma_sigmoid(4.0 * cfg.T, 0.0, times, cfg.T);
  const auto out = chirp_inversion(s2, sched);
  for (std::size_t p = 0; p < s2.paths.size(); ++p) {
    const auto a = s2.path(p);
    const auto o = out.path(p);
    if (s2.paths[p].beta == 0.0) {
      CHECK(std::equal(a.begin(), a.end(), o.begin()));
      continue;
    }
    const auto b = s2.path(mirror_of(s2, p));
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(o[i] <= std::max(a[i], b[i]) * (1.0 + 1e-15));
      CHECK(o[i] >= 0.0);
    }
  }
  CHECK_THROWS_AS(chirp_inversion(s2, sigma_constant(1.0, s2.frames + 1)), DataError);

  auto lonely = s2;
  lonely.paths.back().beta = 3.0;
  CHECK_THROWS_AS(chirp_inversion(lonely, sigma_constant(0.0, s2.frames)), DataError);
}

TEST_CASE("functional primitives") {
  const auto cfg = small_config();
  const ScatteringNetwork net(cfg, 8192);
  const auto c = random_coefficients(net, 3);

  SUBCASE("identity") {
    const auto r = apply_functional(c, {}, cfg.T);
    CHECK(r.coefficients.s1.values == c.s1.values);
    CHECK(r.coefficients.s2.values == c.s2.values);
    CHECK(r.provenance.empty());
  }
  SUBCASE("gain") {
    const auto r = apply_functional(c, {{Gain{2.0, 2}}}, cfg.T);
    CHECK(r.coefficients.s1.values == c.s1.values);
    for (std::size_t i = 0; i < c.s2.values.size(); ++i) CHECK(r.coefficients.s2.values[i] == 2.0 * c.s2.values[i]);
    CHECK_THROWS_AS(apply_functional(c, {{Gain{-1.0, 0}}}, cfg.T), ConfigError);
    CHECK_THROWS_AS(apply_functional(c, {{Gain{1.0, 3}}}, cfg.T), ConfigError);
  }
  SUBCASE("alpha translation round trip") {
    const auto r = apply_functional(c, {{Translate{ShiftAxis::alpha, 1, 2}, Translate{ShiftAxis::alpha, -1, 2}}}, cfg.T);
    CHECK(r.provenance.size() == 2);
    const double top = net.alpha_bank().grid.back();
    for (std::size_t p = 0; p < c.s2.paths.size(); ++p) {
      const auto a = r.coefficients.s2.path(p);
      const auto b = c.s2.path(p);
      if (c.s2.paths[p].alpha == top) {
        for (double v : a) CHECK(v == 0.0);
      } else {
        CHECK(std::equal(a.begin(), a.end(), b.begin()));
      }
    }
  }
  SUBCASE("beta translation keeps the sign and the low-pass") {
    const auto r = apply_functional(c, {{Translate{ShiftAxis::beta, 1, 2}}}, cfg.T);
    for (std::size_t p = 0; p < c.s2.paths.size(); ++p) {
      const auto& path = c.s2.paths[p];
      const auto a = r.coefficients.s2.path(p);
      if (path.beta == 0.0) {
        CHECK(std::equal(a.begin(), a.end(), c.s2.path(p).begin()));
      } else if (std::abs(path.beta) == 1.0) {
        for (double v : a) CHECK(v == 0.0);
      } else {
        auto src = path;
        src.beta /= 2.0;
        const auto b = c.s2.path(c.s2.find(src));
        CHECK(std::equal(a.begin(), a.end(), b.begin()));
      }
    }
  }
  SUBCASE("lambda translation") {
    const auto r = apply_functional(c, {{Translate{ShiftAxis::lambda, 2, 1}}}, cfg.T);
    CHECK(r.coefficients.s2.values == c.s2.values);
    const auto& s1 = r.coefficients.s1;
    for (std::size_t t = 0; t < s1.frames; t += 97) {
      CHECK(s1.at(t, 0) == 0.0);
      CHECK(s1.at(t, 1) == 0.0);
      for (std::size_t l = 2; l < s1.n_lambda; ++l) CHECK(s1.at(t, l) == c.s1.at(t, l - 2));
    }
  }
}

TEST_CASE("identity effect reproduces plain resynthesis") {
  const auto cfg = small_config();
  AudioBuffer x;
  x.sample_rate = cfg.sample_rate;
  x.samples = fixtures::am_tone(8192, cfg.sample_rate, 1200.0, 16.0);
  SynthesisOptions o;
  o.iterations = 4;
  o.seed = 11;
  const auto plain = synthesize(x, cfg, o);
  const auto fx = render_effect(x, {}, cfg, o);
  CHECK(fx.output.samples == plain.output.samples);

  CoefficientFunctional keep{{BetaFlipMix{{ScheduleSpec::Kind::constant, 1.0, 1.0, 0.0}}}};
  const auto kept = render_effect(x, keep, cfg, o);
  CHECK(kept.output.samples == plain.output.samples);
  CHECK(kept.provenance.size() == 1);
}
