#include "tfscat/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "tfscat/error.hpp"
#include "tfscat/fft.hpp"

namespace tfs {
namespace {

using cplx = std::complex<double>;

// Passes of the band-gain refinement in init_colored_noise.
constexpr int kGainPasses = 4;

bool finite(const LossReport& r) { return std::isfinite(r.total); }

TapePolicy tape_policy(const SynthesisOptions& opts) {
  return opts.tape == TapePolicy::none ? TapePolicy::store : opts.tape;
}

// Per-bin amplitude from per-band gains: log-gain linear in log-frequency
// between centers, flat outside the grid.
std::vector<double> bin_gains(const std::vector<double>& log_gain, const std::vector<double>& centers,
                              std::size_t n, double fs) {
  std::vector<double> g(n, 0.0);
  const std::size_t half = n / 2;
  for (std::size_t k = 1; k <= half; ++k) {
    const double f = static_cast<double>(k) * fs / static_cast<double>(n);
    double lg;
    if (f <= centers.front()) {
      lg = log_gain.front();
    } else if (f >= centers.back()) {
      lg = log_gain.back();
    } else {
      const auto it = std::upper_bound(centers.begin(), centers.end(), f);
      const std::size_t j = static_cast<std::size_t>(it - centers.begin());
      const double t = std::log(f / centers[j - 1]) / std::log(centers[j] / centers[j - 1]);
      lg = (1.0 - t) * log_gain[j - 1] + t * log_gain[j];
    }
    g[k] = std::exp(lg);
    g[n - k] = g[k];
  }
  return g;
}

}  // namespace

void SynthesisOptions::validate() const {
  if (iterations < 0) throw ConfigError("iterations must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (!(initial_rate > 0.0)) throw ConfigError("initial rate must be positive");
  if (!(bold_driver.grow > 1.0)) throw ConfigError("bold-driver grow factor must exceed 1");
  if (!(bold_driver.shrink > 0.0 && bold_driver.shrink < 1.0))
    throw ConfigError("bold-driver shrink factor must lie in (0, 1)");
  if (snapshot_every < 0) throw ConfigError("snapshot_every must be >= 0");
}

AudioBuffer init_colored_noise(const Scalogram& s1, const ScatteringNetwork& net, std::uint64_t seed) {
  const auto& bank = net.lambda_bank();
  const std::size_t n_lambda = net.n_lambda();
  if (s1.n_lambda != n_lambda || s1.frames == 0) throw DataError("S1 does not match the network");
  const std::size_t n = net.signal_length();
  const double fs = net.config().sample_rate;
  AudioBuffer out;
  out.sample_rate = fs;
  out.samples.assign(n, 0.0);

  // Target mean modulus per band, over the frames that overlap the signal.
  const std::size_t frames = std::max<std::size_t>(1, std::min(s1.valid_frames, s1.frames));
  std::vector<double> mean(n_lambda, 0.0);
  for (std::size_t t = 0; t < frames; ++t)
    for (std::size_t l = 0; l < n_lambda; ++l) mean[l] += s1.at(t, l);
  double peak = 0.0;
  for (auto& m : mean) peak = std::max(peak, m /= static_cast<double>(frames));
  if (peak <= 0.0) return out;

  // The CQT modulus of Gaussian noise is Rayleigh: E|z| = sqrt(pi/4 E|z|^2).
  const double floor = 1e-12 * peak;
  std::vector<double> want(n_lambda);
  for (std::size_t l = 0; l < n_lambda; ++l) {
    const double m = std::max(mean[l], floor);
    want[l] = 4.0 / std::numbers::pi * m * m;
  }

  // Band filters sampled at length n, as |psi|^2 / n, the contribution of a
  // unit-variance white bin to E|z|^2.
  const std::size_t bank_n = bank.length();
  std::vector<double> centers(n_lambda);
  for (std::size_t l = 0; l < n_lambda; ++l) centers[l] = bank.filters[l].center_frequency;
  std::vector<std::vector<std::pair<std::size_t, double>>> response(n_lambda);
  for (std::size_t l = 0; l < n_lambda; ++l) {
    bank.filters[l].for_each([&](std::size_t k, cplx v) {
      const double f = static_cast<double>(k <= bank_n / 2 ? k : bank_n - k) * fs / static_cast<double>(bank_n);
      const auto kn = static_cast<std::size_t>(std::lround(f * static_cast<double>(n) / fs));
      if (kn == 0 || kn > n / 2) return;
      response[l].push_back({kn, std::norm(v) / static_cast<double>(bank_n)});
    });
  }

  std::vector<double> log_gain(n_lambda, 0.0);
  std::vector<double> gains;
  for (int pass = 0; pass < kGainPasses; ++pass) {
    gains = bin_gains(log_gain, centers, n, fs);
    for (std::size_t l = 0; l < n_lambda; ++l) {
      double got = 0.0;
      for (const auto& [k, w] : response[l]) got += gains[k] * gains[k] * w;
      if (got > 0.0) log_gain[l] += 0.5 * std::log(want[l] / got);
    }
  }
  gains = bin_gains(log_gain, centers, n, fs);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<cplx> spectrum(n);
  for (auto& v : spectrum) v = normal(rng);
  fft::forward(spectrum);
  for (std::size_t k = 0; k < n; ++k) spectrum[k] *= gains[k];
  fft::inverse(spectrum);
  for (std::size_t i = 0; i < n; ++i) {
    out.samples[i] = spectrum[i].real();
    if (!std::isfinite(out.samples[i])) throw NumericalError("initial noise overflowed; target S1 is too large");
  }
  return out;
}

SynthesisState start(const Coefficients& target, AudioBuffer y0, const ScatteringNetwork& net,
                     const SynthesisOptions& opts) {
  opts.validate();
  if (y0.samples.size() != net.signal_length()) throw DataError("initial iterate has the wrong length");
  SynthesisState s;
  s.forward = scatter(y0.samples, net, {tape_policy(opts), false});
  s.current = loss(target, {s.forward->s1, s.forward->s2});
  if (!finite(s.current)) throw NumericalError("initial loss is not finite");
  s.velocity.assign(y0.samples.size(), 0.0);
  s.iterate = std::move(y0);
  s.rate = opts.initial_rate;
  s.accepted = true;
  return s;
}

SynthesisState step(SynthesisState state, const Coefficients& target, const ScatteringNetwork& net,
                    const SynthesisOptions& opts) {
  if (!state.forward) state.forward = scatter(state.iterate.samples, net, {tape_policy(opts), false});
  const auto back = backscatter(target, *state.forward, net);
  if (!finite(back.loss)) throw NumericalError("loss is not finite at iteration " + std::to_string(state.iteration));

  const std::size_t n = state.iterate.samples.size();
  std::vector<double> u(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    u[i] = opts.momentum * state.velocity[i] + state.rate * back.gradient[i];
    y[i] = state.iterate.samples[i] + u[i];
  }
  auto fwd = scatter(y, net, {tape_policy(opts), false});
  const auto candidate = loss(target, {fwd.s1, fwd.s2});

  TraceEntry entry;
  entry.iteration = state.iteration;
  entry.mu = state.rate;
  if (finite(candidate) && candidate.total < back.loss.total) {
    state.iterate.samples = std::move(y);
    state.velocity = std::move(u);
    state.current = candidate;
    state.forward = std::move(fwd);
    state.rate *= opts.bold_driver.grow;
    entry.accepted = true;
  } else {
    std::fill(state.velocity.begin(), state.velocity.end(), 0.0);
    state.current = back.loss;
    state.rate *= opts.bold_driver.shrink;
    entry.accepted = false;
  }
  entry.loss = state.current;
  state.accepted = entry.accepted;
  state.loss_trace.push_back(entry);
  ++state.iteration;
  return state;
}

SynthesisResult synthesize(const Coefficients& target, const ScatteringNetwork& net,
                           const SynthesisOptions& opts, const SnapshotCallback& snapshot) {
  opts.validate();
  auto state = start(target, init_colored_noise(target.s1, net, opts.seed), net, opts);
  const auto report = [&] {
    if (snapshot && opts.snapshot_every > 0 && state.iteration % opts.snapshot_every == 0) snapshot(state);
  };
  report();
  for (int i = 0; i < opts.iterations; ++i) {
    state = step(std::move(state), target, net, opts);
    report();
  }
  state.forward.reset();
  return {state.iterate, std::move(state)};
}

SynthesisResult synthesize(const AudioBuffer& x, const ScatteringConfig& cfg, const SynthesisOptions& opts,
                           const SnapshotCallback& snapshot) {
  auto c = cfg;
  c.sample_rate = x.sample_rate;
  const ScatteringNetwork net(c, x.samples.size());
  auto fwd = scatter(x.samples, net);
  return synthesize({std::move(fwd.s1), std::move(fwd.s2)}, net, opts, snapshot);
}

}  // namespace tfs
