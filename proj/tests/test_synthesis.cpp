#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "tfscat/error.hpp"
#include "tfscat/synthesis.hpp"

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

Coefficients coefficients_of(std::span<const double> x, const ScatteringNetwork& net) {
  auto r = scatter(x, net);
  return {std::move(r.s1), std::move(r.s2)};
}

}  // namespace

TEST_CASE("synthesis options are validated") {
  SynthesisOptions o;
  CHECK_NOTHROW(o.validate());
  auto bad = o;
  bad.momentum = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = o;
  bad.initial_rate = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = o;
  bad.bold_driver.grow = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = o;
  bad.bold_driver.shrink = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = o;
  bad.iterations = -1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("colored noise from silent coefficients is silent") {
  const auto cfg = small_config();
  const ScatteringNetwork net(cfg, 8192);
  const auto c = coefficients_of(std::vector<double>(8192, 0.0), net);
  const auto y = init_colored_noise(c.s1, net, 1);
  REQUIRE(y.samples.size() == 8192);
  for (double v : y.samples) CHECK(v == 0.0);
}

TEST_CASE("colored noise is seeded") {
  const auto cfg = small_config();
  const ScatteringNetwork net(cfg, 8192);
  const auto c = coefficients_of(fixtures::pink_noise(8192, 2), net);
  const auto a = init_colored_noise(c.s1, net, 5);
  const auto b = init_colored_noise(c.s1, net, 5);
  const auto d = init_colored_noise(c.s1, net, 6);
  CHECK(a.samples == b.samples);
  CHECK(a.samples != d.samples);
}

TEST_CASE("colored noise matches the target band levels") {
  ScatteringConfig cfg;
  const std::size_t n = 44100;
  const ScatteringNetwork net(cfg, n);
  for (const auto& x : {fixtures::pink_noise(n, 1), fixtures::white_noise(n, 2)}) {
    const auto c = coefficients_of(x, net);
    const auto y = init_colored_noise(c.s1, net, 9);
    const auto u = cqt(std::span<const double>(y.samples), net.lambda_bank(), net.hop());
    // Bands below four octaves up are too narrow for one second of noise to
    // average out; the top octave sits where interpolation turns flat.
    for (std::size_t l = 4 * cfg.Q; l + cfg.Q < net.n_lambda(); ++l) {
      double want = 0.0, got = 0.0;
      for (std::size_t t = 0; t < c.s1.valid_frames; ++t) {
        want += c.s1.at(t, l);
        got += u.at(t, l);
      }
      CAPTURE(l);
      CHECK(std::abs(got / want - 1.0) < 0.25);
    }
  }
}

TEST_CASE("zero gradient leaves the state unchanged") {
  const auto cfg = small_config();
  const ScatteringNetwork net(cfg, 8192);
  const auto x = fixtures::am_tone(8192, cfg.sample_rate, 1000.0, 8.0);
  const auto target = coefficients_of(x, net);
  SynthesisOptions o;
  AudioBuffer y0;
  y0.sample_rate = cfg.sample_rate;
  y0.samples = x;
  auto s = start(target, y0, net, o);
  const auto next = step(s, target, net, o);
  CHECK(next.iterate.samples == x);
  for (double v : next.velocity) CHECK(v == 0.0);
  REQUIRE(next.loss_trace.size() == 1);
  CHECK(next.loss_trace[0].loss.total == 0.0);
  CHECK_FALSE(next.loss_trace[0].accepted);
  CHECK(next.rate == doctest::Approx(o.initial_rate * o.bold_driver.shrink));
}

TEST_CASE("zero iterations return the initial noise") {
  const auto cfg = small_config();
  const ScatteringNetwork net(cfg, 8192);
  const auto target = coefficients_of(fixtures::pink_noise(8192, 4), net);
  SynthesisOptions o;
  o.iterations = 0;
  o.seed = 7;
  const auto r = synthesize(target, net, o);
  CHECK(r.output.samples == init_colored_noise(target.s1, net, 7).samples);
  CHECK(r.state.loss_trace.empty());
}

TEST_CASE("descent is monotone, deterministic and snapshots on schedule") {
  const auto cfg = small_config();
  const ScatteringNetwork net(cfg, 8192);
  const auto target = coefficients_of(fixtures::pink_noise(8192, 5), net);
  SynthesisOptions o;
  o.iterations = 12;
  o.seed = 2;
  o.snapshot_every = 4;
  std::vector<int> seen;
  const auto a = synthesize(target, net, o, [&](const SynthesisState& s) { seen.push_back(s.iteration); });
  CHECK(seen == std::vector<int>{0, 4, 8, 12});
  REQUIRE(a.state.loss_trace.size() == 12);

  double last = start(target, init_colored_noise(target.s1, net, 2), net, o).current.total;
  const double first = last;
  for (const auto& e : a.state.loss_trace) {
    CHECK(e.mu > 0.0);
    if (e.accepted) {
      CHECK(e.loss.total < last);
      last = e.loss.total;
    } else {
      CHECK(e.loss.total == last);
    }
  }
  CHECK(a.state.current.total < first);
  for (double v : a.output.samples) CHECK(std::isfinite(v));

  const auto b = synthesize(target, net, o);
  CHECK(a.output.samples == b.output.samples);
}

TEST_CASE("rejections shrink the rate geometrically") {
  const auto cfg = small_config();
  const ScatteringNetwork net(cfg, 8192);
  const auto target = coefficients_of(fixtures::pink_noise(8192, 6), net);
  SynthesisOptions o;
  o.initial_rate = 1e6;
  auto s = start(target, init_colored_noise(target.s1, net, 1), net, o);
  int rejected = 0;
  for (int i = 0; i < 6; ++i) {
    const double mu = s.rate;
    s = step(std::move(s), target, net, o);
    if (!s.accepted) {
      ++rejected;
      CHECK(s.rate == doctest::Approx(mu * o.bold_driver.shrink));
    }
  }
  CHECK(rejected > 0);
  CHECK(s.rate > 0.0);
}
