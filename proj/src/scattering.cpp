#include "tfscat/scattering.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "detail.hpp"
#include "tfscat/error.hpp"
#include "tfscat/fft.hpp"
#include "tfscat/parallel.hpp"

namespace tfs {
namespace {

using cplx = std::complex<double>;

constexpr double kPhaseFloor = 1e-12;

std::size_t support_samples(double bandwidth, double rate) {
  const double std_samples = rate / (2.0 * std::numbers::pi * bandwidth);
  return 2 * static_cast<std::size_t>(std::ceil(4.0 * std_samples)) + 1;
}

// Width of the beta wavelet (or of the beta = 0 low-pass) on a log-frequency
// axis sampled at Q bins per octave.
std::size_t beta_support(double beta, int Q) {
  if (beta == 0.0) return support_samples(std::sqrt(0.5) / std::sqrt(std::log(2.0)), Q);
  const double q_env = envelope_quality(1, kModulationOverlap);
  return support_samples(std::abs(beta) / (2.0 * std::numbers::pi * q_env), Q);
}

void require_finite(std::span<const double> x) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]))
      throw DataError("non-finite sample at index " + std::to_string(i));
  }
}

// Low-pass of one or two real frames x n_lambda blocks. Both transfers are
// real and even, so b rides in the imaginary part of a shared transform.
void lowpass_block(const double* a, const double* b, double* out_a, double* out_b, std::size_t frames,
                   std::size_t n_lambda, const Filter& phi_t, const Filter* phi_f) {
  const std::size_t size = frames * n_lambda;
  std::vector<cplx> buf(size);
  for (std::size_t i = 0; i < size; ++i) buf[i] = {a[i], b ? b[i] : 0.0};
  fft::forward_many(buf.data(), frames, n_lambda, n_lambda, 1);
  const auto rows = detail::support_rows(phi_t);
  std::vector<char> kept(frames, 0);
  if (!phi_f) {
    for (const auto& [kt, g] : rows) {
      kept[kt] = 1;
      for (std::size_t l = 0; l < n_lambda; ++l) buf[kt * n_lambda + l] *= g;
    }
  } else {
    const std::size_t cols = phi_f->length();
    const auto col_gain = phi_f->dense();
    std::vector<cplx> work(rows.size() * cols, cplx(0.0, 0.0));
    for (std::size_t i = 0; i < rows.size(); ++i)
      std::copy_n(buf.begin() + static_cast<std::ptrdiff_t>(rows[i].first * n_lambda), n_lambda,
                  work.begin() + static_cast<std::ptrdiff_t>(i * cols));
    fft::forward_many(work.data(), cols, rows.size(), 1, cols);
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t k = 0; k < cols; ++k) work[i * cols + k] *= rows[i].second * col_gain[k];
    fft::inverse_many(work.data(), cols, rows.size(), 1, cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      kept[rows[i].first] = 1;
      std::copy_n(work.begin() + static_cast<std::ptrdiff_t>(i * cols), n_lambda,
                  buf.begin() + static_cast<std::ptrdiff_t>(rows[i].first * n_lambda));
    }
  }
  for (std::size_t kt = 0; kt < frames; ++kt)
    if (!kept[kt]) std::fill_n(buf.begin() + static_cast<std::ptrdiff_t>(kt * n_lambda), n_lambda, cplx(0.0, 0.0));
  fft::inverse_many(buf.data(), frames, n_lambda, n_lambda, 1);
  for (std::size_t i = 0; i < size; ++i) {
    out_a[i] = buf[i].real();
    if (out_b) out_b[i] = buf[i].imag();
  }
}

void check_lowpass_shapes(std::size_t frames, std::size_t n_lambda, const Filter& phi_t,
                          const Filter* phi_f) {
  if (phi_t.length() != frames)
    throw DataError("phi_T length " + std::to_string(phi_t.length()) + " does not match " +
                    std::to_string(frames) + " frames");
  if (phi_f && phi_f->length() < n_lambda)
    throw DataError("phi_F is shorter than the frequency axis");
}

}  // namespace

namespace detail {

// Replaces z by z/|z|, or 0 below the floor relative to `peak`.
void normalize_phases(std::vector<cplx>& z, double peak) {
  const double floor = kPhaseFloor * peak;
  for (auto& v : z) {
    const double m = std::abs(v);
    v = m > floor && m > 0.0 ? v / m : cplx(0.0, 0.0);
  }
}

std::vector<std::pair<std::size_t, cplx>> support_rows(const Filter& f) {
  std::vector<std::pair<std::size_t, cplx>> rows;
  rows.reserve(f.values().size());
  f.for_each([&](std::size_t k, cplx v) { rows.emplace_back(k, v); });
  return rows;
}

std::vector<cplx> padded_spectrum(const Scalogram& u1, std::size_t cols) {
  if (cols < u1.n_lambda) throw DataError("log-frequency axis shorter than the scalogram");
  std::vector<cplx> buf(u1.frames * cols, cplx(0.0, 0.0));
  for (std::size_t t = 0; t < u1.frames; ++t)
    for (std::size_t l = 0; l < u1.n_lambda; ++l) buf[t * cols + l] = u1.at(t, l);
  // Time transforms over the occupied columns only, then the rows.
  fft::forward_many(buf.data(), u1.frames, u1.n_lambda, cols, 1);
  fft::forward_many(buf.data(), cols, u1.frames, 1, cols);
  return buf;
}

// Rows outside the alpha support are zero, so the inverse runs along
// log-frequency on those rows only and along time on the kept columns.
std::vector<cplx> convolve_from_spectrum(const std::vector<cplx>& spectrum, std::size_t frames,
                                         std::size_t cols, std::size_t n_lambda,
                                         const Filter& alpha, const Filter& beta) {
  const auto rows = support_rows(alpha);
  std::vector<cplx> work(rows.size() * cols, cplx(0.0, 0.0));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto [kt, a] = rows[i];
    beta.for_each([&](std::size_t kl, cplx b) { work[i * cols + kl] = spectrum[kt * cols + kl] * a * b; });
  }
  fft::inverse_many(work.data(), cols, rows.size(), 1, cols);
  std::vector<cplx> out(frames * n_lambda, cplx(0.0, 0.0));
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy_n(work.begin() + static_cast<std::ptrdiff_t>(i * cols), n_lambda,
                out.begin() + static_cast<std::ptrdiff_t>(rows[i].first * n_lambda));
  fft::inverse_many(out.data(), frames, n_lambda, n_lambda, 1);
  return out;
}

}  // namespace detail

using detail::convolve_from_spectrum;
using detail::normalize_phases;
using detail::padded_spectrum;

double ScatteringConfig::resolved_T() const { return T > 0.0 ? T : 8192.0 / sample_rate; }

std::size_t ScatteringConfig::resolved_hop() const {
  return u1_hop > 0 ? u1_hop : default_hop(sample_rate);
}

double ScatteringConfig::resolved_alpha_max() const {
  return alpha_max > 0.0 ? alpha_max : u1_rate() / 4.0;
}

void ScatteringConfig::validate() const {
  if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) throw ConfigError("sample_rate must be positive");
  if (Q < 1) throw ConfigError("Q must be at least 1");
  if (octaves < 1) throw ConfigError("octaves must be at least 1");
  if (T < 0.0 || !std::isfinite(T)) throw ConfigError("T must be positive");
  if (F < 0.0 || !std::isfinite(F)) throw ConfigError("F must be non-negative");
  if (u1_hop != 0 && !fft::is_power_of_two(u1_hop)) throw ConfigError("u1_hop must be a power of two");
  if (q_mod < 1) throw ConfigError("q_mod must be at least 1");
  if (alpha_max < 0.0) throw ConfigError("alpha_max must be non-negative");
  if (!(u1_rate() > 2.0 * resolved_alpha_max())) {
    throw ConfigError("U1 rate " + std::to_string(u1_rate()) + " Hz must exceed twice alpha_max (" +
                      std::to_string(resolved_alpha_max()) + " Hz)");
  }
  if (spiral_enabled && gammas.empty()) throw ConfigError("spiral scattering needs a gamma grid");
  for (double g : gammas) {
    if (g == 0.0 || !(std::abs(g) < 0.5))
      throw ConfigError("gamma must satisfy 0 < |gamma| < 1/2 cycles per octave");
  }
}

std::size_t default_hop(double sample_rate) {
  std::size_t hop = 1;
  while (sample_rate / static_cast<double>(hop * 2) >= 256.0) hop *= 2;
  return hop;
}

std::string describe(const ScatteringPath& path) {
  std::ostringstream os;
  os << "alpha=" << path.alpha << " beta=" << path.beta;
  if (path.gamma) os << " gamma=" << *path.gamma;
  return os.str();
}

std::size_t ScatteringTensor::find(const ScatteringPath& path) const {
  const auto it = std::find(paths.begin(), paths.end(), path);
  return it == paths.end() ? npos : static_cast<std::size_t>(it - paths.begin());
}

std::vector<ScatteringPath> enumerate_paths(const ScatteringConfig& cfg,
                                            std::vector<ScatteringPath>* dropped) {
  cfg.validate();
  const auto alphas = alpha_grid(cfg.resolved_T(), cfg.q_mod, cfg.resolved_alpha_max());
  if (alphas.empty()) throw ConfigError("empty path table: no modulation rate above 1/T");
  std::vector<double> betas = beta_grid(cfg.Q);
  betas.push_back(0.0);
  std::sort(betas.begin(), betas.end());
  const auto n_lambda = static_cast<std::size_t>(cfg.Q) * static_cast<std::size_t>(cfg.octaves);
  std::vector<ScatteringPath> paths;
  for (double a : alphas) {
    for (double b : betas) {
      if (beta_support(b, cfg.Q) > n_lambda) {
        if (dropped) dropped->push_back({a, b, std::nullopt});
        continue;
      }
      paths.push_back({a, b, std::nullopt});
    }
  }
  if (paths.empty()) throw ConfigError("empty path table: every beta wavelet is wider than the frequency axis");
  return paths;
}

ScatteringNetwork::ScatteringNetwork(const ScatteringConfig& cfg, std::size_t signal_length)
    : cfg_(cfg), signal_length_(signal_length) {
  cfg_.validate();
  if (signal_length == 0) throw DataError("empty signal");
  const double T = cfg_.resolved_T();
  hop_ = cfg_.resolved_hop();
  const auto t_samples = static_cast<std::size_t>(std::ceil(T * cfg_.sample_rate));
  padded_length_ = fft::next_power_of_two(signal_length + t_samples);
  padded_length_ = std::max(padded_length_, hop_ * 8);
  if (padded_length_ > (std::size_t{1} << 30)) throw DataError("signal too long");

  lambda_bank_ = build_cqt_bank(cfg_.sample_rate, cfg_.Q, cfg_.octaves, padded_length_, 1.0 / T);
  paths_ = enumerate_paths(cfg_, &dropped_);

  ModulationBankSpec spec;
  spec.T = T;
  spec.q_mod = cfg_.q_mod;
  spec.u1_rate = cfg_.u1_rate();
  spec.n_lambda = n_lambda();
  spec.lambda_q = cfg_.Q;
  spec.alpha_max = cfg_.resolved_alpha_max();
  spec.time_length = frames();
  spec.transposition_F = cfg_.F;
  modulation_ = build_modulation_banks(spec);
  lambda_axis_length_ = modulation_.beta.length();
  if (cfg_.F > 0.0) phi_f_ = build_transposition_lowpass(cfg_.F, cfg_.Q, lambda_axis_length_);

  for (const auto& p : paths_) {
    const auto& ag = modulation_.alpha.grid;
    alpha_index_.push_back(static_cast<std::size_t>(std::find(ag.begin(), ag.end(), p.alpha) - ag.begin()));
    if (p.beta == 0.0) {
      beta_index_.push_back(-1);
    } else {
      const auto& bg = modulation_.beta.grid;
      beta_index_.push_back(std::find(bg.begin(), bg.end(), p.beta) - bg.begin());
    }
  }
}

std::size_t ScatteringNetwork::valid_frames() const { return (signal_length_ + hop_ - 1) / hop_; }

const Filter& ScatteringNetwork::alpha_filter(std::size_t p) const {
  return modulation_.alpha.filters.at(alpha_index_.at(p));
}

const Filter& ScatteringNetwork::beta_filter(std::size_t p) const {
  const auto b = beta_index_.at(p);
  return b < 0 ? *modulation_.beta.lowpass : modulation_.beta.filters.at(static_cast<std::size_t>(b));
}

std::vector<cplx> cqt_transform(std::span<const double> x, const FilterBank& bank, std::size_t hop) {
  const std::size_t n = bank.length();
  if (x.size() > n) throw DataError("signal longer than the filterbank length");
  if (!fft::is_power_of_two(hop) || n % hop != 0) throw ConfigError("hop must be a power of two dividing the bank length");
  require_finite(x);
  const std::size_t frames = n / hop;
  const std::size_t n_lambda = bank.filters.size();

  std::vector<cplx> spectrum(n, cplx(0.0, 0.0));
  std::copy(x.begin(), x.end(), spectrum.begin());
  fft::forward(spectrum);

  std::vector<cplx> z(frames * n_lambda);
  const double inv_hop = 1.0 / static_cast<double>(hop);
  parallel_for(n_lambda, [&](std::size_t l) {
    std::vector<cplx> folded(frames, cplx(0.0, 0.0));
    bank.filters[l].for_each([&](std::size_t k, cplx v) { folded[k % frames] += spectrum[k] * v * inv_hop; });
    fft::inverse(folded);
    for (std::size_t t = 0; t < frames; ++t) z[t * n_lambda + l] = folded[t];
  });
  return z;
}

Scalogram cqt(std::span<const double> x, const FilterBank& bank, std::size_t hop,
              std::vector<cplx>* phase) {
  auto z = cqt_transform(x, bank, hop);
  Scalogram u1;
  u1.frames = bank.length() / hop;
  u1.n_lambda = bank.filters.size();
  u1.frame_rate = bank.sample_rate() / static_cast<double>(hop);
  u1.lambda_grid = bank.grid;
  u1.valid_frames = (x.size() + hop - 1) / hop;
  u1.values.resize(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) u1.values[i] = std::abs(z[i]);
  if (phase) {
    normalize_phases(z, u1.values.empty() ? 0.0 : *std::max_element(u1.values.begin(), u1.values.end()));
    *phase = std::move(z);
  }
  return u1;
}

Scalogram cqt(const AudioBuffer& x, const FilterBank& bank, std::size_t hop) {
  return cqt(std::span<const double>(x.samples), bank, hop);
}

Scalogram average_s1(const Scalogram& u1, const Filter& phi_t, const Filter* phi_f) {
  check_lowpass_shapes(u1.frames, u1.n_lambda, phi_t, phi_f);
  Scalogram s1 = u1;
  lowpass_block(u1.values.data(), nullptr, s1.values.data(), nullptr, u1.frames, u1.n_lambda, phi_t, phi_f);
  return s1;
}

ScatteringTensor average_s2(const ScatteringTensor& u2, const Filter& phi_t, const Filter* phi_f) {
  check_lowpass_shapes(u2.frames, u2.n_lambda, phi_t, phi_f);
  ScatteringTensor s2 = u2;
  s2.order = TensorOrder::S2;
  const std::size_t n_paths = u2.paths.size();
  parallel_for((n_paths + 1) / 2, [&](std::size_t i) {
    const std::size_t p = 2 * i;
    const bool pair = p + 1 < n_paths;
    lowpass_block(u2.path(p).data(), pair ? u2.path(p + 1).data() : nullptr, s2.path(p).data(),
                  pair ? s2.path(p + 1).data() : nullptr, u2.frames, u2.n_lambda, phi_t, phi_f);
  });
  return s2;
}

std::vector<cplx> modulation_convolve(const Scalogram& u1, const Filter& alpha, const Filter& beta,
                                      std::size_t lambda_axis_length) {
  if (alpha.length() != u1.frames) throw DataError("alpha filter length does not match the frame count");
  if (beta.length() != lambda_axis_length) throw DataError("beta filter length does not match the padded axis");
  const auto spectrum = padded_spectrum(u1, lambda_axis_length);
  return convolve_from_spectrum(spectrum, u1.frames, lambda_axis_length, u1.n_lambda, alpha, beta);
}

ScatteringTensor strf(const Scalogram& u1, const ScatteringNetwork& net,
                      std::vector<std::vector<cplx>>* phases) {
  if (u1.frames != net.frames() || u1.n_lambda != net.n_lambda())
    throw DataError("scalogram shape does not match the network");
  const std::size_t cols = net.lambda_axis_length();
  const auto spectrum = padded_spectrum(u1, cols);
  const std::size_t n_paths = net.paths().size();

  ScatteringTensor u2;
  u2.paths = net.paths();
  u2.frames = u1.frames;
  u2.n_lambda = u1.n_lambda;
  u2.frame_rate = u1.frame_rate;
  u2.valid_frames = u1.valid_frames;
  u2.order = TensorOrder::U2;
  u2.values.assign(n_paths * u2.path_size(), 0.0);
  if (phases) phases->assign(n_paths, {});

  parallel_for(n_paths, [&](std::size_t p) {
    auto z = convolve_from_spectrum(spectrum, u1.frames, cols, u1.n_lambda, net.alpha_filter(p), net.beta_filter(p));
    auto out = u2.path(p);
    for (std::size_t i = 0; i < z.size(); ++i) out[i] = std::abs(z[i]);
    if (phases) (*phases)[p] = std::move(z);
  });
  if (phases) {
    const double peak = u2.values.empty() ? 0.0 : *std::max_element(u2.values.begin(), u2.values.end());
    for (auto& z : *phases) normalize_phases(z, peak);
  }
  return u2;
}

std::size_t spiral_axis_length(int octaves, const std::vector<double>& gammas) {
  std::size_t support = 1;
  const double q_env = envelope_quality(1, kModulationOverlap);
  for (double g : gammas) {
    if (g == 0.0) continue;
    support = std::max(support, support_samples(std::abs(g) / (2.0 * std::numbers::pi * q_env), 1.0));
  }
  return fft::next_power_of_two(static_cast<std::size_t>(octaves) + support);
}

FilterBank default_gamma_bank(const ScatteringConfig& cfg) {
  return build_gamma_bank(cfg.gammas, spiral_axis_length(cfg.octaves, cfg.gammas));
}

ScatteringTensor spiral_scatter(const Scalogram& u1, const ScatteringNetwork& net,
                                const FilterBank& gamma_bank) {
  const int Q = net.config().Q;
  if (u1.n_lambda == 0 || u1.n_lambda % static_cast<std::size_t>(Q) != 0)
    throw DataError("frequency axis of " + std::to_string(u1.n_lambda) +
                    " bins does not reshape into whole octaves of " + std::to_string(Q));
  if (u1.frames != net.frames() || u1.n_lambda != net.n_lambda())
    throw DataError("scalogram shape does not match the network");
  if (gamma_bank.filters.empty()) throw ConfigError("empty gamma bank");
  const std::size_t chroma = static_cast<std::size_t>(Q);
  const std::size_t octaves = u1.n_lambda / chroma;
  const std::size_t g_len = gamma_bank.length();
  if (g_len < octaves) throw ConfigError("gamma axis shorter than the octave count");

  const std::size_t cols = net.lambda_axis_length();
  const auto spectrum = padded_spectrum(u1, cols);
  const std::size_t n_base = net.paths().size();
  const std::size_t n_gamma = gamma_bank.filters.size();

  ScatteringTensor out;
  out.frames = u1.frames;
  out.n_lambda = u1.n_lambda;
  out.frame_rate = u1.frame_rate;
  out.valid_frames = u1.valid_frames;
  out.order = TensorOrder::U2;
  for (std::size_t p = 0; p < n_base; ++p) {
    for (std::size_t g = 0; g < n_gamma; ++g) {
      ScatteringPath path = net.paths()[p];
      path.gamma = gamma_bank.grid.empty() ? 0.0 : gamma_bank.grid[g];
      out.paths.push_back(path);
    }
  }
  out.values.assign(out.paths.size() * out.path_size(), 0.0);

  parallel_for(n_base, [&](std::size_t p) {
    const auto z = convolve_from_spectrum(spectrum, u1.frames, cols, u1.n_lambda, net.alpha_filter(p), net.beta_filter(p));
    // [frame][chroma][octave], octave axis padded to g_len.
    std::vector<cplx> base(u1.frames * chroma * g_len, cplx(0.0, 0.0));
    for (std::size_t t = 0; t < u1.frames; ++t)
      for (std::size_t o = 0; o < octaves; ++o)
        for (std::size_t c = 0; c < chroma; ++c) base[(t * chroma + c) * g_len + o] = z[t * u1.n_lambda + o * chroma + c];
    fft::forward_many(base.data(), g_len, u1.frames * chroma, 1, g_len);
    std::vector<cplx> work(base.size());
    for (std::size_t g = 0; g < n_gamma; ++g) {
      const auto gain = gamma_bank.filters[g].dense();
      for (std::size_t i = 0; i < base.size(); ++i) work[i] = base[i] * gain[i % g_len];
      fft::inverse_many(work.data(), g_len, u1.frames * chroma, 1, g_len);
      auto dst = out.path(p * n_gamma + g);
      for (std::size_t t = 0; t < u1.frames; ++t)
        for (std::size_t o = 0; o < octaves; ++o)
          for (std::size_t c = 0; c < chroma; ++c)
            dst[t * u1.n_lambda + o * chroma + c] = std::abs(work[(t * chroma + c) * g_len + o]);
    }
  });
  return out;
}

ScatterResult scatter(std::span<const double> x, const ScatteringNetwork& net, const ScatterOptions& options) {
  if (x.size() != net.signal_length())
    throw DataError("signal of " + std::to_string(x.size()) + " samples does not match the network length " +
                    std::to_string(net.signal_length()));
  ScatterResult r;
  const Filter* phi_f = net.phi_f() ? &*net.phi_f() : nullptr;
  GradientTape tape;
  const bool want_tape = options.tape != TapePolicy::none;
  r.u1 = cqt(x, net.lambda_bank(), net.hop(), want_tape ? &tape.phase_u1 : nullptr);
  r.s1 = average_s1(r.u1, net.phi_t(), phi_f);
  const bool store_u2 = options.tape == TapePolicy::store;
  auto u2 = strf(r.u1, net, store_u2 ? &tape.phase_u2 : nullptr);
  r.s2 = average_s2(u2, net.phi_t(), phi_f);
  if (want_tape) tape.u2_peak = u2.values.empty() ? 0.0 : *std::max_element(u2.values.begin(), u2.values.end());
  if (net.config().spiral_enabled) r.spiral_u2 = spiral_scatter(r.u1, net, default_gamma_bank(net.config()));
  if (options.keep_u2) r.u2 = std::move(u2);
  if (want_tape) {
    tape.recompute_u2 = !store_u2;
    r.tape = std::move(tape);
  }
  return r;
}

ScatterResult scatter(const AudioBuffer& x, const ScatteringConfig& cfg, const ScatterOptions& options) {
  ScatteringConfig c = cfg;
  c.sample_rate = x.sample_rate;
  const ScatteringNetwork net(c, x.size());
  return scatter(std::span<const double>(x.samples), net, options);
}

double energy(const Scalogram& s, std::size_t hop) {
  double e = 0.0;
  for (double v : s.values) e += v * v;
  return e * static_cast<double>(hop);
}

double energy(const ScatteringTensor& s, std::size_t hop) {
  double e = 0.0;
  for (double v : s.values) e += v * v;
  return e * static_cast<double>(hop);
}

}  // namespace tfs
