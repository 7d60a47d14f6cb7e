#include "fixtures.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace fixtures {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

std::vector<double> white_noise(std::size_t n, std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, scale);
  std::vector<double> x(n);
  for (auto& v : x) v = dist(rng);
  return x;
}

std::vector<double> pink_noise(std::size_t n, std::uint64_t seed) {
  // Paul Kellet's refined filter.
  auto w = white_noise(n, seed, 1.0);
  double b0 = 0, b1 = 0, b2 = 0, b3 = 0, b4 = 0, b5 = 0, b6 = 0;
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double white = w[i];
    b0 = 0.99886 * b0 + white * 0.0555179;
    b1 = 0.99332 * b1 + white * 0.0750759;
    b2 = 0.96900 * b2 + white * 0.1538520;
    b3 = 0.86650 * b3 + white * 0.3104856;
    b4 = 0.55000 * b4 + white * 0.5329522;
    b5 = -0.7616 * b5 - white * 0.0168980;
    x[i] = 0.02 * (b0 + b1 + b2 + b3 + b4 + b5 + b6 + white * 0.5362);
    b6 = white * 0.115926;
  }
  return x;
}

std::vector<double> am_tone(std::size_t n, double fs, double carrier, double rate, double depth) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    x[i] = 0.3 * (1.0 + depth * std::sin(kTwoPi * rate * t)) * std::sin(kTwoPi * carrier * t);
  }
  return x;
}

std::vector<double> chirp(std::size_t n, double fs, double f0, double f1) {
  std::vector<double> x(n);
  const double dur = static_cast<double>(n) / fs;
  const double k = std::log(f1 / f0) / dur;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    const double phase = kTwoPi * f0 * (std::exp(k * t) - 1.0) / k;
    x[i] = 0.3 * std::sin(phase);
  }
  return x;
}

std::vector<double> chirp_train(std::size_t n, double fs, double f_low, double octaves,
                                double event_seconds, double spacing_seconds) {
  std::vector<double> x(n, 0.0);
  const auto len = static_cast<std::size_t>(event_seconds * fs);
  const auto hop = static_cast<std::size_t>(spacing_seconds * fs);
  const double k = octaves * std::log(2.0) / event_seconds;
  int index = 0;
  for (std::size_t start = hop / 2; start + len < n; start += hop, ++index) {
    const bool up = index % 2 == 0;
    const double f0 = up ? f_low : f_low * std::exp2(octaves);
    const double kk = up ? k : -k;
    for (std::size_t i = 0; i < len; ++i) {
      const double t = static_cast<double>(i) / fs;
      const double phase = kTwoPi * f0 * (std::exp(kk * t) - 1.0) / kk;
      const double win = 0.5 - 0.5 * std::cos(kTwoPi * static_cast<double>(i) / static_cast<double>(len));
      x[start + i] += 0.4 * win * std::sin(phase);
    }
  }
  return x;
}

std::vector<double> speech_like(std::size_t n, double fs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> jitter(0.0, 0.002);
  std::vector<double> x(n, 0.0);
  double phase = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    const double f0 = 120.0 * (1.0 + 0.1 * std::sin(kTwoPi * 2.0 * t)) * (1.0 + jitter(rng));
    phase += kTwoPi * f0 / fs;
    const double formant = 700.0 + 400.0 * std::sin(kTwoPi * 3.0 * t);
    double v = 0.0;
    for (int h = 1; h * f0 < fs / 2.5 && h < 40; ++h) {
      const double fh = h * f0;
      const double d = (fh - formant) / 300.0;
      v += std::exp(-0.5 * d * d) * std::sin(h * phase) / std::sqrt(h);
    }
    const double envelope = 0.5 + 0.5 * std::sin(kTwoPi * 4.0 * t);
    x[i] = 0.1 * envelope * v;
  }
  return x;
}

double rms(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return x.empty() ? 0.0 : std::sqrt(s / static_cast<double>(x.size()));
}

}  // namespace fixtures
