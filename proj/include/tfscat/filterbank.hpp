#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace tfs {

using cplx = std::complex<double>;

/// Axis a bank filters along. Filters on the time axis see real inputs and
/// their coverage is measured with the analytic-pair convention; the
/// log-frequency and octave axes carry complex inputs.
enum class Axis { time, log_frequency, octave };

std::string to_string(Axis axis);

/// Parameters of one Morlet wavelet
///
///   psi(t) = lambda * exp(-lambda^2 t^2 / (2 Q^2)) * (exp(2 pi i lambda t) - kappa)
///
/// sampled in the Fourier domain on `signal_length` bins of an axis sampled
/// at `sample_rate` (Hz for time axes, bins per octave for log-frequency,
/// one per octave for the octave axis). A zero center denotes the Gaussian
/// low-pass of cutoff `lowpass_cutoff`.
struct MorletSpec {
  double center_frequency = 0.0;
  double quality_factor = 1.0;
  std::size_t signal_length = 0;
  double sample_rate = 1.0;
  double lowpass_cutoff = 0.0;
};

/// Fourier-domain filter stored over its support. Bins outside
/// [first_bin, first_bin + values.size()) (signed, modulo `length`) are zero.
class Filter {
 public:
  Filter() = default;
  Filter(std::size_t length, double sample_rate, std::ptrdiff_t first_bin,
         std::vector<cplx> values);

  std::size_t length() const { return length_; }
  double sample_rate() const { return sample_rate_; }
  std::ptrdiff_t first_bin() const { return first_bin_; }
  const std::vector<cplx>& values() const { return values_; }

  /// Transfer at DFT bin `bin` in [0, length).
  cplx operator[](std::size_t bin) const;
  /// Transfer at a signed bin; wraps modulo length.
  cplx at_signed(std::ptrdiff_t bin) const;
  std::vector<cplx> dense() const;

  /// Calls fn(bin, value) for every stored bin, bin in [0, length).
  template <typename Fn>
  void for_each(Fn&& fn) const {
    const auto n = static_cast<std::ptrdiff_t>(length_);
    for (std::size_t i = 0; i < values_.size(); ++i) {
      std::ptrdiff_t k = (first_bin_ + static_cast<std::ptrdiff_t>(i)) % n;
      if (k < 0) k += n;
      fn(static_cast<std::size_t>(k), values_[i]);
    }
  }

  double peak() const;
  double energy() const;
  void scale(double factor);
  /// Transfer reflected through bin 0: the filter of the time-reversed,
  /// conjugated impulse response. Maps psi_alpha onto psi_{-alpha}.
  Filter mirrored() const;

  double center_frequency = 0.0;
  /// Standard deviation of the Gaussian bump in the Fourier domain.
  double bandwidth = 0.0;
  double corrective_kappa = 0.0;
  double quality_factor = 0.0;
  bool is_lowpass = false;
  /// Amplitude factor applied by bank normalization.
  double gain = 1.0;

 private:
  std::size_t length_ = 0;
  double sample_rate_ = 1.0;
  std::ptrdiff_t first_bin_ = 0;
  std::vector<cplx> values_;
};

struct FilterBank {
  std::vector<Filter> filters;
  std::optional<Filter> lowpass;
  Axis axis = Axis::time;
  /// Center frequencies of `filters`, strictly increasing.
  std::vector<double> grid;
  /// Measured Littlewood-Paley bound the band-pass filters were divided by.
  double normalization_gain = 1.0;
  /// Spacing ratio between adjacent grid points of equal sign.
  double grid_ratio = 2.0;

  std::size_t length() const;
  double sample_rate() const;
};

struct LittlewoodPaley {
  /// Minimum over the passband (lowest to highest center).
  double lower_bound = 0.0;
  /// Maximum over all bins.
  double upper_bound = 0.0;
  std::vector<double> profile;
  /// Axis frequency of each profile bin.
  std::vector<double> frequencies;
};

/// kappa = exp(-2 pi^2 Q^2), the corrective term giving one vanishing moment.
double morlet_kappa(double quality_factor);

/// Envelope quality factor for a bank with `filters_per_octave` filters per
/// octave: Fourier std = overlap * (2^(1/filters_per_octave) - 1) * center.
double envelope_quality(double filters_per_octave, double overlap);

constexpr double kLambdaOverlap = 0.7;
constexpr double kModulationOverlap = 0.8;

Filter build_morlet(const MorletSpec& spec);
/// Unit-DC-gain Gaussian with |H(cutoff)|^2 = 1/2.
Filter build_gaussian_lowpass(double cutoff, std::size_t length, double sample_rate);
Filter build_all_pass(std::size_t length, double sample_rate);

/// Time-domain extent (samples) holding the filter's impulse response,
/// eight envelope standard deviations wide.
std::size_t filter_support(const Filter& filter);

/// Q filters per octave over `octaves` octaves below the top grid frequency
/// sample_rate * 2^(-1/Q) / 2. The low-pass has cutoff `lowpass_cutoff` Hz
/// (0 selects 1/T for T = 8192 samples).
FilterBank build_cqt_bank(double sample_rate, int Q, int octaves, std::size_t length,
                          double lowpass_cutoff = 0.0);

struct ModulationBankSpec {
  double T = 8192.0 / 44100.0;  ///< seconds
  int q_mod = 1;  ///< alpha filters per octave
  double u1_rate = 44100.0 / 128.0;
  std::size_t n_lambda = 108;
  int lambda_q = 12;  ///< bins per octave of the log-frequency axis
  double alpha_max = 0.0;  ///< 0 selects u1_rate / 4
  std::size_t time_length = 0;  ///< frames of the U1 time axis
  double transposition_F = 0.0;  ///< sizes the log-frequency padding for phi_F
};

struct ModulationBanks {
  FilterBank alpha;
  FilterBank beta;  ///< low-pass of the beta bank is the beta = 0 filter
};

std::vector<double> alpha_grid(double T, int q_mod, double alpha_max);
/// Octave-spaced: {+-2^n : 1 <= 2^n < lambda_q / 2}, ascending.
std::vector<double> beta_grid(int lambda_q);
/// Log-frequency padded length for a beta bank over n_lambda bins.
std::size_t beta_axis_length(std::size_t n_lambda, int lambda_q, double transposition_F = 0.0);

ModulationBanks build_modulation_banks(const ModulationBankSpec& spec);

/// phi_F along the log-frequency axis (cutoff 1/F cycles per octave).
Filter build_transposition_lowpass(double F, int lambda_q, std::size_t length);

/// Wavelets across the octave index of a spiral; |gamma| < 1/2.
FilterBank build_gamma_bank(const std::vector<double>& gammas, std::size_t length);

LittlewoodPaley littlewood_paley(const FilterBank& bank);

}  // namespace tfs
