#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tfscat/audio.hpp"
#include "tfscat/filterbank.hpp"

namespace tfs {

struct ScatteringConfig {
  double sample_rate = 44100.0;
  int Q = 12;
  int octaves = 9;
  /// Temporal averaging scale in seconds; 0 selects 8192 samples.
  double T = 0.0;
  /// Transposition invariance in octaves; 0 keeps the transform
  /// transposition-sensitive.
  double F = 0.0;
  /// U1 decimation in samples; 0 selects default_hop(sample_rate).
  std::size_t u1_hop = 0;
  int q_mod = 1;
  /// Highest rate in Hz; 0 selects a quarter of the U1 rate.
  double alpha_max = 0.0;
  bool spiral_enabled = false;
  std::vector<double> gammas = {-0.25, 0.25};

  double resolved_T() const;
  std::size_t resolved_hop() const;
  double u1_rate() const { return sample_rate / static_cast<double>(resolved_hop()); }
  double resolved_alpha_max() const;
  /// Throws ConfigError on violated invariants.
  void validate() const;
};

/// Largest power-of-two hop keeping the U1 rate at or above 256 Hz.
std::size_t default_hop(double sample_rate);

/// One second-order path class. The acoustic frequency lambda is a tensor
/// axis rather than part of the path.
struct ScatteringPath {
  double alpha = 0.0;  ///< Hz, > 1/T
  double beta = 0.0;   ///< cycles per octave, 0 = low-pass
  std::optional<double> gamma;  ///< cycles per octave, spiral only

  bool operator==(const ScatteringPath&) const = default;
};

std::string describe(const ScatteringPath& path);

/// Frames x lambda, row-major (frame-major).
struct Scalogram {
  std::vector<double> values;
  std::size_t frames = 0;
  std::size_t n_lambda = 0;
  double frame_rate = 0.0;
  std::vector<double> lambda_grid;
  /// Frames overlapping the unpadded signal; the rest is circular margin.
  std::size_t valid_frames = 0;

  double& at(std::size_t t, std::size_t l) { return values[t * n_lambda + l]; }
  double at(std::size_t t, std::size_t l) const { return values[t * n_lambda + l]; }
};

enum class TensorOrder { U2, S2 };

/// Paths x frames x lambda, path-major.
struct ScatteringTensor {
  std::vector<ScatteringPath> paths;
  std::vector<double> values;
  std::size_t frames = 0;
  std::size_t n_lambda = 0;
  double frame_rate = 0.0;
  TensorOrder order = TensorOrder::U2;
  std::size_t valid_frames = 0;

  std::size_t path_size() const { return frames * n_lambda; }
  std::span<double> path(std::size_t p) { return {values.data() + p * path_size(), path_size()}; }
  std::span<const double> path(std::size_t p) const {
    return {values.data() + p * path_size(), path_size()};
  }
  double& at(std::size_t p, std::size_t t, std::size_t l) { return values[(p * frames + t) * n_lambda + l]; }
  double at(std::size_t p, std::size_t t, std::size_t l) const {
    return values[(p * frames + t) * n_lambda + l];
  }
  /// Index of `path`, or npos.
  std::size_t find(const ScatteringPath& path) const;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

/// Path classes sorted by (alpha, beta, gamma). Paths whose beta wavelet is
/// wider than the log-frequency axis are left out and listed in `dropped`.
std::vector<ScatteringPath> enumerate_paths(const ScatteringConfig& cfg,
                                            std::vector<ScatteringPath>* dropped = nullptr);

/// Banks, sizes and path table for one configuration and signal length.
class ScatteringNetwork {
 public:
  ScatteringNetwork(const ScatteringConfig& cfg, std::size_t signal_length);

  const ScatteringConfig& config() const { return cfg_; }
  std::size_t signal_length() const { return signal_length_; }
  std::size_t padded_length() const { return padded_length_; }
  std::size_t hop() const { return hop_; }
  std::size_t frames() const { return padded_length_ / hop_; }
  std::size_t valid_frames() const;
  std::size_t n_lambda() const { return lambda_bank_.filters.size(); }
  /// Padded log-frequency length used by the beta and phi_F convolutions.
  std::size_t lambda_axis_length() const { return lambda_axis_length_; }
  double frame_rate() const { return cfg_.u1_rate(); }

  const FilterBank& lambda_bank() const { return lambda_bank_; }
  const FilterBank& alpha_bank() const { return modulation_.alpha; }
  const FilterBank& beta_bank() const { return modulation_.beta; }
  /// phi_T on the U1 time axis.
  const Filter& phi_t() const { return *modulation_.alpha.lowpass; }
  const std::optional<Filter>& phi_f() const { return phi_f_; }

  const std::vector<ScatteringPath>& paths() const { return paths_; }
  const std::vector<ScatteringPath>& dropped_paths() const { return dropped_; }
  /// Filters of path p; the beta filter is the bank low-pass when beta = 0.
  const Filter& alpha_filter(std::size_t p) const;
  const Filter& beta_filter(std::size_t p) const;

 private:
  ScatteringConfig cfg_;
  std::size_t signal_length_;
  std::size_t padded_length_;
  std::size_t hop_;
  std::size_t lambda_axis_length_;
  FilterBank lambda_bank_;
  ModulationBanks modulation_;
  std::optional<Filter> phi_f_;
  std::vector<ScatteringPath> paths_;
  std::vector<ScatteringPath> dropped_;
  std::vector<std::size_t> alpha_index_;
  std::vector<std::ptrdiff_t> beta_index_;
};

/// Phases kept from the forward pass for the adjoint. Points whose modulus is
/// below 1e-12 of the tensor maximum hold phase 0.
struct GradientTape {
  std::vector<std::complex<double>> phase_u1;  ///< frames x lambda
  /// Per path, frames x lambda; empty when recomputation was requested.
  std::vector<std::vector<std::complex<double>>> phase_u2;
  bool recompute_u2 = false;
  /// Maximum of U2, for the phase floor when recomputing.
  double u2_peak = 0.0;
};

enum class TapePolicy { none, store, recompute };

struct ScatterResult {
  Scalogram s1;
  ScatteringTensor s2;
  Scalogram u1;
  /// Kept only when requested.
  std::optional<ScatteringTensor> u2;
  std::optional<GradientTape> tape;
  std::optional<ScatteringTensor> spiral_u2;
};

struct ScatterOptions {
  TapePolicy tape = TapePolicy::none;
  bool keep_u2 = false;
};

/// |x * psi_lambda| sampled every `hop` samples. x is zero-padded to the bank
/// length. When `phase` is given it receives z/|z| (frames x lambda).
Scalogram cqt(std::span<const double> x, const FilterBank& bank, std::size_t hop,
              std::vector<std::complex<double>>* phase = nullptr);
Scalogram cqt(const AudioBuffer& x, const FilterBank& bank, std::size_t hop);

/// Low-pass along time with phi_T and, when given, along log-frequency with
/// phi_F (whose length is the padded lambda axis).
Scalogram average_s1(const Scalogram& u1, const Filter& phi_t, const Filter* phi_f = nullptr);
ScatteringTensor average_s2(const ScatteringTensor& u2, const Filter& phi_t,
                            const Filter* phi_f = nullptr);

/// Complex x * psi_lambda sampled every `hop` samples (frames x lambda).
std::vector<std::complex<double>> cqt_transform(std::span<const double> x, const FilterBank& bank,
                                                std::size_t hop);

/// U2 over the network's paths. When `phases` is given it receives one phase
/// array per path.
ScatteringTensor strf(const Scalogram& u1, const ScatteringNetwork& net,
                      std::vector<std::vector<std::complex<double>>>* phases = nullptr);

/// Complex second-order convolution U1 * psi_alpha * psi_beta (frames x
/// lambda) for arbitrary filters on the network axes.
std::vector<std::complex<double>> modulation_convolve(const Scalogram& u1, const Filter& alpha,
                                                      const Filter& beta,
                                                      std::size_t lambda_axis_length);

/// Spiral U2: the strf output further convolved across the octave index of
/// each chroma with every gamma filter. Requires n_lambda = Q * octaves.
ScatteringTensor spiral_scatter(const Scalogram& u1, const ScatteringNetwork& net,
                                const FilterBank& gamma_bank);
/// Octave-axis length used for the gamma convolution.
std::size_t spiral_axis_length(int octaves, const std::vector<double>& gammas);
FilterBank default_gamma_bank(const ScatteringConfig& cfg);

ScatterResult scatter(std::span<const double> x, const ScatteringNetwork& net,
                      const ScatterOptions& options = {});
ScatterResult scatter(const AudioBuffer& x, const ScatteringConfig& cfg,
                      const ScatterOptions& options = {});

/// Squared norms weighted by the hop, so that they compare with the
/// waveform energy sum(x^2).
double energy(const Scalogram& s, std::size_t hop);
double energy(const ScatteringTensor& s, std::size_t hop);

}  // namespace tfs
