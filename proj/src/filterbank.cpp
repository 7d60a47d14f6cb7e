#include "tfscat/filterbank.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tfscat/error.hpp"
#include "tfscat/fft.hpp"

namespace tfs {
namespace {

constexpr double kPi = std::numbers::pi;
// Transfer values below this fraction of the peak are outside the support.
constexpr double kSupportThreshold = 1e-20;
const double kSupportRadius = std::sqrt(2.0 * std::log(1.0 / kSupportThreshold));

double gauss(double x, double sigma) { return std::exp(-(x * x) / (2.0 * sigma * sigma)); }

void require_length(std::size_t length) {
  if (!fft::is_power_of_two(length))
    throw ConfigError("filter length " + std::to_string(length) + " is not a power of two");
}

// Samples fn over signed bins covering [lo, hi] on the axis, clipped to one
// period. The Nyquist bin holds the mean of both band edges so that
// mirrored filters stay exact mirrors.
template <typename Fn>
Filter sample_transfer(std::size_t length, double rate, double lo, double hi, Fn&& fn) {
  const auto n = static_cast<std::ptrdiff_t>(length);
  const double df = rate / static_cast<double>(length);
  const double nyquist = rate / 2.0;
  std::ptrdiff_t first = static_cast<std::ptrdiff_t>(std::floor(lo / df));
  std::ptrdiff_t last = static_cast<std::ptrdiff_t>(std::ceil(hi / df));
  first = std::clamp(first, -n / 2, n / 2);
  last = std::clamp(last, -n / 2, n / 2);
  if (first == -n / 2 && last == n / 2) last = n / 2 - 1;
  if (last < first) return Filter(length, rate, 0, {});
  std::vector<cplx> values;
  values.reserve(static_cast<std::size_t>(last - first + 1));
  for (std::ptrdiff_t j = first; j <= last; ++j) {
    if (j == -n / 2 || j == n / 2) {
      values.emplace_back(0.5 * (fn(-nyquist) + fn(nyquist)));
    } else {
      values.emplace_back(fn(static_cast<double>(j) * df));
    }
  }
  return Filter(length, rate, first, std::move(values));
}

struct Shape {
  double center;
  double sigma;
  double kappa;
  bool lowpass;
};

double shape_value(const Shape& s, double f) {
  if (s.lowpass) return gauss(f, s.sigma);
  return gauss(f - s.center, s.sigma) - s.kappa * gauss(f, s.sigma);
}

double lowpass_sigma(double cutoff) { return cutoff / std::sqrt(std::log(2.0)); }

// Per-filter power weights that flatten the coverage: each filter's cell
// (half way to its neighbours in log-frequency, clipped to the passband) is
// driven towards mid-range 1 - |phi|^2.
std::vector<double> equalization_weights(const std::vector<Shape>& shapes,
                                         const std::optional<Shape>& lowpass, bool paired,
                                         double grid_ratio) {
  const std::size_t nf = shapes.size();
  std::vector<double> weights(nf, 1.0);
  if (nf == 0) return weights;

  double pos_max = 0, neg_max = 0, pos_min = INFINITY;
  for (const auto& s : shapes) {
    if (s.center > 0) {
      pos_max = std::max(pos_max, s.center);
      pos_min = std::min(pos_min, s.center);
    } else {
      neg_max = std::max(neg_max, -s.center);
    }
  }

  constexpr std::size_t kPointsPerCell = 64;
  const double half_step = 0.5 * std::log(grid_ratio);
  std::vector<double> points;
  std::vector<std::size_t> cell_begin(nf + 1, 0);
  for (std::size_t j = 0; j < nf; ++j) {
    const double c = shapes[j].center;
    const double lc = std::log(std::abs(c));
    double lo = lc - half_step, hi = lc + half_step;
    for (const auto& other : shapes) {
      if ((other.center > 0) != (c > 0) || other.center == c) continue;
      const double lo2 = std::log(std::abs(other.center));
      if (lo2 < lc) lo = std::max(lo, 0.5 * (lc + lo2));
      if (lo2 > lc) hi = std::min(hi, 0.5 * (lc + lo2));
    }
    const double side_max = c > 0 ? pos_max : neg_max;
    hi = std::min(hi, std::log(side_max));
    if (paired) lo = std::max(lo, std::log(pos_min));
    cell_begin[j] = points.size();
    for (std::size_t p = 0; p < kPointsPerCell && lo <= hi; ++p) {
      const double t = static_cast<double>(p) / static_cast<double>(kPointsPerCell - 1);
      const double mag = std::exp(lo + t * (hi - lo));
      points.push_back(c > 0 ? mag : -mag);
    }
  }
  cell_begin[nf] = points.size();

  const std::size_t np = points.size();
  std::vector<double> power(nf * np);
  std::vector<double> headroom(np, 1.0);
  for (std::size_t p = 0; p < np; ++p) {
    const double f = points[p];
    if (lowpass) headroom[p] = 1.0 - std::pow(shape_value(*lowpass, f), 2);
    for (std::size_t j = 0; j < nf; ++j) {
      const double a = shape_value(shapes[j], f);
      const double b = shape_value(shapes[j], -f);
      power[j * np + p] = paired ? 0.5 * (a * a + b * b) : a * a;
    }
  }

  std::vector<double> sum(np);
  for (int iter = 0; iter < 200; ++iter) {
    std::fill(sum.begin(), sum.end(), 0.0);
    for (std::size_t j = 0; j < nf; ++j)
      for (std::size_t p = 0; p < np; ++p) sum[p] += weights[j] * power[j * np + p];
    for (std::size_t j = 0; j < nf; ++j) {
      if (cell_begin[j] == cell_begin[j + 1]) continue;
      double lo = INFINITY, hi = 0;
      for (std::size_t p = cell_begin[j]; p < cell_begin[j + 1]; ++p) {
        const double r = sum[p] / std::max(headroom[p], 1e-300);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
      }
      const double mid = 0.5 * (lo + hi);
      if (mid > 0) weights[j] /= std::sqrt(mid);
    }
  }
  return weights;
}

std::vector<double> bandpass_power(const FilterBank& bank) {
  const std::size_t n = bank.length();
  std::vector<double> power(n, 0.0);
  const bool paired = bank.axis == Axis::time;
  for (const auto& f : bank.filters) {
    f.for_each([&](std::size_t k, cplx v) {
      const double p = std::norm(v);
      if (paired) {
        power[k] += 0.5 * p;
        power[(n - k) % n] += 0.5 * p;
      } else {
        power[k] += p;
      }
    });
  }
  return power;
}

// Divides the band-pass filters so that the coverage including the low-pass
// peaks at exactly one.
void normalize(FilterBank& bank) {
  const auto power = bandpass_power(bank);
  std::vector<double> low(power.size(), 0.0);
  if (bank.lowpass) bank.lowpass->for_each([&](std::size_t k, cplx v) { low[k] = std::norm(v); });
  double bound = 0.0;
  for (std::size_t k = 0; k < power.size(); ++k) {
    const double room = 1.0 - low[k];
    if (room > 1e-12) bound = std::max(bound, power[k] / room);
  }
  if (bound <= 0.0) return;
  bank.normalization_gain = bound;
  for (auto& f : bank.filters) f.scale(1.0 / std::sqrt(bound));
}

// Solves the symmetric system a x = b in place; false if singular.
bool solve_dense(std::vector<double>& a, std::vector<double>& b, std::size_t n) {
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r * n + c]) > std::abs(a[piv * n + c])) piv = r;
    if (!(std::abs(a[piv * n + c]) > 1e-300)) return false;
    if (piv != c) {
      for (std::size_t k = 0; k < n; ++k) std::swap(a[c * n + k], a[piv * n + k]);
      std::swap(b[c], b[piv]);
    }
    for (std::size_t r = c + 1; r < n; ++r) {
      const double m = a[r * n + c] / a[c * n + c];
      for (std::size_t k = c; k < n; ++k) a[r * n + k] -= m * a[c * n + k];
      b[r] -= m * b[c];
    }
  }
  for (std::size_t c = n; c-- > 0;) {
    for (std::size_t k = c + 1; k < n; ++k) b[c] -= a[c * n + k] * b[k];
    b[c] /= a[c * n + c];
  }
  return true;
}

// Minimax fit of the band-pass power to 1 - |phi|^2 over the passband by
// Lawson's reweighted least squares. Returns an empty vector when the fit
// is unusable.
std::vector<double> minimax_weights(const std::vector<Shape>& shapes,
                                    const std::optional<Shape>& lowpass, bool paired) {
  const std::size_t nf = shapes.size();
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& s : shapes) {
    lo = std::min(lo, s.center);
    hi = std::max(hi, s.center);
  }
  if (!paired && lowpass) {
    const double reach = std::max(std::abs(lo), std::abs(hi));
    lo = std::min(lo, -reach);
    hi = std::max(hi, reach);
  }
  constexpr std::size_t kPoints = 1001;
  std::vector<double> power(kPoints * nf), target(kPoints);
  for (std::size_t p = 0; p < kPoints; ++p) {
    const double f = lo + (hi - lo) * static_cast<double>(p) / (kPoints - 1);
    target[p] = lowpass ? 1.0 - std::pow(shape_value(*lowpass, f), 2) : 1.0;
    for (std::size_t j = 0; j < nf; ++j) {
      const double a = shape_value(shapes[j], f);
      const double b = shape_value(shapes[j], -f);
      power[p * nf + j] = paired ? 0.5 * (a * a + b * b) : a * a;
    }
  }
  std::vector<double> nu(kPoints, 1.0 / kPoints), w(nf), gram(nf * nf);
  for (int iter = 0; iter < 300; ++iter) {
    std::fill(gram.begin(), gram.end(), 0.0);
    std::fill(w.begin(), w.end(), 0.0);
    for (std::size_t p = 0; p < kPoints; ++p) {
      const double* row = &power[p * nf];
      for (std::size_t i = 0; i < nf; ++i) {
        const double v = nu[p] * row[i];
        w[i] += v * target[p];
        for (std::size_t k = 0; k < nf; ++k) gram[i * nf + k] += v * row[k];
      }
    }
    for (std::size_t i = 0; i < nf; ++i) gram[i * nf + i] *= 1.0 + 1e-12;
    if (!solve_dense(gram, w, nf)) return {};
    double total = 0.0;
    for (std::size_t p = 0; p < kPoints; ++p) {
      double fit = 0.0;
      for (std::size_t i = 0; i < nf; ++i) fit += power[p * nf + i] * w[i];
      nu[p] *= std::abs(fit - target[p]) + 1e-15;
      total += nu[p];
    }
    if (!(total > 0.0)) break;
    for (auto& v : nu) v /= total;
  }
  for (double v : w)
    if (!(v > 0.0) || !std::isfinite(v)) return {};
  return w;
}

void equalize_and_normalize(FilterBank& bank, const std::vector<Shape>& shapes,
                            const std::optional<Shape>& lowpass) {
  const bool paired = bank.axis == Axis::time;
  std::vector<double> weights;
  if (shapes.size() <= 48) weights = minimax_weights(shapes, lowpass, paired);
  if (weights.empty()) weights = equalization_weights(shapes, lowpass, paired, bank.grid_ratio);
  for (std::size_t j = 0; j < bank.filters.size(); ++j) bank.filters[j].scale(std::sqrt(weights[j]));
  normalize(bank);
}

Shape shape_of(const Filter& f) {
  return Shape{f.center_frequency, f.bandwidth, f.corrective_kappa, f.is_lowpass};
}

std::size_t support_for_bandwidth(double bandwidth, double rate) {
  const double std_samples = rate / (2.0 * kPi * bandwidth);
  return 2 * static_cast<std::size_t>(std::ceil(4.0 * std_samples)) + 1;
}

}  // namespace

std::string to_string(Axis axis) {
  switch (axis) {
    case Axis::time: return "time";
    case Axis::log_frequency: return "log_frequency";
    case Axis::octave: return "octave";
  }
  return "unknown";
}

Filter::Filter(std::size_t length, double sample_rate, std::ptrdiff_t first_bin,
               std::vector<cplx> values)
    : length_(length), sample_rate_(sample_rate), first_bin_(first_bin), values_(std::move(values)) {}

cplx Filter::at_signed(std::ptrdiff_t bin) const {
  const auto n = static_cast<std::ptrdiff_t>(length_);
  std::ptrdiff_t offset = (bin - first_bin_) % n;
  if (offset < 0) offset += n;
  if (offset >= static_cast<std::ptrdiff_t>(values_.size())) return {0.0, 0.0};
  return values_[static_cast<std::size_t>(offset)];
}

cplx Filter::operator[](std::size_t bin) const { return at_signed(static_cast<std::ptrdiff_t>(bin)); }

std::vector<cplx> Filter::dense() const {
  std::vector<cplx> out(length_, {0.0, 0.0});
  for_each([&](std::size_t k, cplx v) { out[k] = v; });
  return out;
}

double Filter::peak() const {
  double p = 0.0;
  for (const auto& v : values_) p = std::max(p, std::abs(v));
  return p;
}

double Filter::energy() const {
  double e = 0.0;
  for (const auto& v : values_) e += std::norm(v);
  return e;
}

void Filter::scale(double factor) {
  for (auto& v : values_) v *= factor;
  gain *= factor;
}

Filter Filter::mirrored() const {
  std::vector<cplx> values(values_.rbegin(), values_.rend());
  const auto size = static_cast<std::ptrdiff_t>(values_.size());
  Filter out(length_, sample_rate_, -(first_bin_ + size - 1), std::move(values));
  out.center_frequency = -center_frequency;
  out.bandwidth = bandwidth;
  out.corrective_kappa = corrective_kappa;
  out.quality_factor = quality_factor;
  out.is_lowpass = is_lowpass;
  out.gain = gain;
  return out;
}

std::size_t FilterBank::length() const {
  if (!filters.empty()) return filters.front().length();
  return lowpass ? lowpass->length() : 0;
}

double FilterBank::sample_rate() const {
  if (!filters.empty()) return filters.front().sample_rate();
  return lowpass ? lowpass->sample_rate() : 1.0;
}

double morlet_kappa(double quality_factor) {
  return std::exp(-2.0 * kPi * kPi * quality_factor * quality_factor);
}

double envelope_quality(double filters_per_octave, double overlap) {
  return 1.0 / (2.0 * kPi * overlap * (std::exp2(1.0 / filters_per_octave) - 1.0));
}

Filter build_gaussian_lowpass(double cutoff, std::size_t length, double sample_rate) {
  require_length(length);
  if (!(cutoff > 0.0)) throw ConfigError("low-pass cutoff must be positive");
  const double sigma = lowpass_sigma(cutoff);
  const double reach = kSupportRadius * sigma;
  Filter f = sample_transfer(length, sample_rate, -reach, reach,
                             [&](double freq) { return cplx(gauss(freq, sigma), 0.0); });
  f.center_frequency = 0.0;
  f.bandwidth = sigma;
  f.is_lowpass = true;
  return f;
}

Filter build_all_pass(std::size_t length, double sample_rate) {
  require_length(length);
  const auto n = static_cast<std::ptrdiff_t>(length);
  Filter f(length, sample_rate, -n / 2, std::vector<cplx>(length, {1.0, 0.0}));
  f.bandwidth = INFINITY;
  f.is_lowpass = true;
  return f;
}

Filter build_morlet(const MorletSpec& spec) {
  require_length(spec.signal_length);
  if (!(spec.quality_factor > 0.0)) throw ConfigError("quality factor must be positive");
  if (!(spec.sample_rate > 0.0)) throw ConfigError("axis sample rate must be positive");
  if (spec.center_frequency == 0.0)
    return build_gaussian_lowpass(spec.lowpass_cutoff, spec.signal_length, spec.sample_rate);

  const double nyquist = spec.sample_rate / 2.0;
  const double center = spec.center_frequency;
  if (std::abs(center) > nyquist) {
    throw BandwidthError("center frequency " + std::to_string(center) +
                         " exceeds the Nyquist frequency " + std::to_string(nyquist));
  }
  const double q = spec.quality_factor;
  const double sigma = std::abs(center) / (2.0 * kPi * q);
  const double amplitude = q * std::sqrt(2.0 * kPi);
  // Same expression as the bump at f = 0, so transfer(0) cancels exactly.
  const double kappa = gauss(0.0 - center, sigma);

  double lo = center - kSupportRadius * sigma;
  double hi = center + kSupportRadius * sigma;
  if (kappa > kSupportThreshold) {
    const double r = sigma * std::sqrt(2.0 * std::log(kappa / kSupportThreshold));
    lo = std::min(lo, -r);
    hi = std::max(hi, r);
  }
  Filter f = sample_transfer(spec.signal_length, spec.sample_rate, lo, hi, [&](double freq) {
    return cplx(amplitude * (gauss(freq - center, sigma) - kappa * gauss(freq, sigma)), 0.0);
  });
  f.center_frequency = center;
  f.bandwidth = sigma;
  f.corrective_kappa = kappa;
  f.quality_factor = q;
  return f;
}

std::size_t filter_support(const Filter& filter) {
  if (!std::isfinite(filter.bandwidth)) return 1;
  return support_for_bandwidth(filter.bandwidth, filter.sample_rate());
}

FilterBank build_cqt_bank(double sample_rate, int Q, int octaves, std::size_t length,
                          double lowpass_cutoff) {
  if (Q < 1) throw ConfigError("Q must be at least 1");
  if (octaves < 1) throw ConfigError("octaves must be at least 1");
  if (!(sample_rate > 0.0)) throw ConfigError("sample rate must be positive");
  require_length(length);

  const int top = static_cast<int>(std::floor(Q * std::log2(sample_rate / 2.0) - 1.0 + 1e-9));
  const int count = Q * octaves;
  const double lowest = std::exp2(static_cast<double>(top - count + 1) / Q);
  const double resolution = sample_rate / static_cast<double>(length);
  if (lowest < 2.0 * resolution) {
    throw BandwidthError("CQT grid of " + std::to_string(octaves) +
                         " octaves reaches below the frequency resolution (" +
                         std::to_string(lowest) + " Hz)");
  }

  FilterBank bank;
  bank.axis = Axis::time;
  bank.grid_ratio = std::exp2(1.0 / Q);
  const double q_env = envelope_quality(Q, kLambdaOverlap);
  std::vector<Shape> shapes;
  for (int n = top - count + 1; n <= top; ++n) {
    const double center = std::exp2(static_cast<double>(n) / Q);
    bank.filters.push_back(build_morlet({center, q_env, length, sample_rate, 0.0}));
    bank.grid.push_back(center);
    shapes.push_back(shape_of(bank.filters.back()));
  }
  const double cutoff = lowpass_cutoff > 0.0 ? lowpass_cutoff : sample_rate / 8192.0;
  bank.lowpass = build_gaussian_lowpass(cutoff, length, sample_rate);
  equalize_and_normalize(bank, shapes, shape_of(*bank.lowpass));
  return bank;
}

std::vector<double> alpha_grid(double T, int q_mod, double alpha_max) {
  if (!(T > 0.0)) throw ConfigError("T must be positive");
  if (q_mod < 1) throw ConfigError("modulation Q must be at least 1");
  std::vector<double> grid;
  const int first = static_cast<int>(std::floor(q_mod * std::log2(1.0 / T))) - 1;
  for (int n = first;; ++n) {
    const double a = std::exp2(static_cast<double>(n) / q_mod);
    if (a > alpha_max) break;
    if (a > 1.0 / T) grid.push_back(a);
  }
  return grid;
}

std::vector<double> beta_grid(int lambda_q) {
  std::vector<double> magnitudes;
  for (int n = 0;; ++n) {
    const double b = std::exp2(static_cast<double>(n));
    // A center on the axis Nyquist would alias onto its own mirror.
    if (b >= lambda_q / 2.0) break;
    magnitudes.push_back(b);
  }
  std::vector<double> grid;
  for (auto it = magnitudes.rbegin(); it != magnitudes.rend(); ++it) grid.push_back(-*it);
  for (double b : magnitudes) grid.push_back(b);
  return grid;
}

namespace {

// Geometric midpoint between 0 and the first octave, in c/o.
const double kBetaLowpassCutoff = std::sqrt(0.5);

}  // namespace

std::size_t beta_axis_length(std::size_t n_lambda, int lambda_q, double transposition_F) {
  const double rate = lambda_q;
  std::size_t support = support_for_bandwidth(lowpass_sigma(kBetaLowpassCutoff), rate);
  const auto grid = beta_grid(lambda_q);
  if (!grid.empty()) {
    const double q_env = envelope_quality(1, kModulationOverlap);
    support = std::max(support, support_for_bandwidth(1.0 / (2.0 * kPi * q_env), rate));
  }
  if (transposition_F > 0.0)
    support = std::max(support, support_for_bandwidth(lowpass_sigma(1.0 / transposition_F), rate));
  return fft::next_power_of_two(n_lambda + support);
}

ModulationBanks build_modulation_banks(const ModulationBankSpec& spec) {
  if (!(spec.u1_rate > 0.0)) throw ConfigError("U1 rate must be positive");
  if (spec.n_lambda == 0) throw ConfigError("empty frequency axis");
  require_length(spec.time_length);
  const double alpha_max = spec.alpha_max > 0.0 ? spec.alpha_max : spec.u1_rate / 4.0;
  const auto alphas = alpha_grid(spec.T, spec.q_mod, alpha_max);
  if (alphas.empty()) {
    throw ConfigError("empty modulation rate grid: no power of two lies in (1/T, alpha_max] = (" +
                      std::to_string(1.0 / spec.T) + ", " + std::to_string(alpha_max) + "]");
  }
  const double q_env = envelope_quality(spec.q_mod, kModulationOverlap);

  ModulationBanks banks;
  auto& alpha = banks.alpha;
  alpha.axis = Axis::time;
  alpha.grid_ratio = std::exp2(1.0 / spec.q_mod);
  std::vector<Shape> alpha_shapes;
  for (double a : alphas) {
    alpha.filters.push_back(build_morlet({a, q_env, spec.time_length, spec.u1_rate, 0.0}));
    alpha.grid.push_back(a);
    alpha_shapes.push_back(shape_of(alpha.filters.back()));
  }
  alpha.lowpass = build_gaussian_lowpass(1.0 / spec.T, spec.time_length, spec.u1_rate);
  equalize_and_normalize(alpha, alpha_shapes, shape_of(*alpha.lowpass));

  auto& beta = banks.beta;
  beta.axis = Axis::log_frequency;
  beta.grid_ratio = 2.0;
  const std::size_t beta_length = beta_axis_length(spec.n_lambda, spec.lambda_q, spec.transposition_F);
  const double rate = spec.lambda_q;
  const double beta_q_env = envelope_quality(1, kModulationOverlap);
  std::vector<Shape> beta_shapes;
  for (double b : beta_grid(spec.lambda_q)) {
    beta.filters.push_back(build_morlet({b, beta_q_env, beta_length, rate, 0.0}));
    beta.grid.push_back(b);
    beta_shapes.push_back(shape_of(beta.filters.back()));
  }
  beta.lowpass = build_gaussian_lowpass(kBetaLowpassCutoff, beta_length, rate);
  equalize_and_normalize(beta, beta_shapes, shape_of(*beta.lowpass));
  return banks;
}

Filter build_transposition_lowpass(double F, int lambda_q, std::size_t length) {
  if (!(F > 0.0)) throw ConfigError("F must be positive for a transposition low-pass");
  return build_gaussian_lowpass(1.0 / F, length, static_cast<double>(lambda_q));
}

FilterBank build_gamma_bank(const std::vector<double>& gammas, std::size_t length) {
  if (gammas.empty()) throw ConfigError("empty gamma grid");
  std::vector<double> sorted = gammas;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw ConfigError("duplicate gamma values");
  FilterBank bank;
  bank.axis = Axis::octave;
  const double q_env = envelope_quality(1.0, kModulationOverlap);
  for (double g : sorted) {
    if (g == 0.0 || std::abs(g) >= 0.5)
      throw ConfigError("gamma must satisfy 0 < |gamma| < 1/2 cycles per octave");
    bank.filters.push_back(build_morlet({g, q_env, length, 1.0, 0.0}));
    bank.grid.push_back(g);
  }
  normalize(bank);
  return bank;
}

LittlewoodPaley littlewood_paley(const FilterBank& bank) {
  LittlewoodPaley lp;
  const std::size_t n = bank.length();
  if (n == 0) return lp;
  lp.profile = bandpass_power(bank);
  if (bank.lowpass) bank.lowpass->for_each([&](std::size_t k, cplx v) { lp.profile[k] += std::norm(v); });

  const double rate = bank.sample_rate();
  lp.frequencies.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto signed_k = k < n / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(n);
    lp.frequencies[k] = signed_k * rate / static_cast<double>(n);
  }

  lp.upper_bound = *std::max_element(lp.profile.begin(), lp.profile.end());
  double lo = INFINITY;
  if (!bank.grid.empty()) {
    const double band_lo = bank.grid.front();
    const double band_hi = bank.grid.back();
    for (std::size_t k = 0; k < n; ++k) {
      const double f = lp.frequencies[k];
      if (f >= band_lo && f <= band_hi) lo = std::min(lo, lp.profile[k]);
    }
  }
  if (!std::isfinite(lo)) lo = *std::min_element(lp.profile.begin(), lp.profile.end());
  lp.lower_bound = lo;
  return lp;
}

}  // namespace tfs
