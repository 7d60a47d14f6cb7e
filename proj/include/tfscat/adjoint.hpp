#pragma once

#include <complex>
#include <span>
#include <vector>

#include "tfscat/scattering.hpp"

namespace tfs {

struct LossReport {
  double total = 0.0;
  double first_order = 0.0;
  double second_order = 0.0;
};

/// Scattering coefficients of a target signal.
struct Coefficients {
  Scalogram s1;
  ScatteringTensor s2;
};

/// E = 1/2 (|S1x - S1y|^2 + |S2x - S2y|^2) over every frame, margin included.
LossReport loss(const Coefficients& x, const Coefficients& y);

/// Adjoint of average_s2: the Gaussians are real and even, so this is the
/// same averaging applied to the residual.
ScatteringTensor grad_s2_to_u2(const ScatteringTensor& residual_s2, const ScatteringNetwork& net);

/// grad U1 = avg*(residual S1) + sum_p Re(A_p^H (phase_p grad_u2_p)). `u1` is
/// needed only when the tape asks for recomputation of the U2 phases.
Scalogram grad_u2_to_u1(const ScatteringTensor& grad_u2, const GradientTape& tape,
                        const Scalogram& residual_s1, const Scalogram& u1,
                        const ScatteringNetwork& net);

/// Re(B^H (phase_u1 grad_u1)) cropped to the signal length.
std::vector<double> grad_u1_to_waveform(const Scalogram& grad_u1, const GradientTape& tape,
                                        const ScatteringNetwork& net);

struct BackscatterResult {
  /// Descent direction -dE/dy.
  std::vector<double> gradient;
  LossReport loss;
  /// Coefficients of y from the forward pass.
  Coefficients coefficients;
};

BackscatterResult backscatter(const Coefficients& target, std::span<const double> y,
                              const ScatteringNetwork& net, TapePolicy policy = TapePolicy::store);
/// Backward chain only, from a forward pass that recorded a tape.
BackscatterResult backscatter(const Coefficients& target, const ScatterResult& forward,
                              const ScatteringNetwork& net);

/// Adjoint of cqt_transform: complex signal of the bank length.
std::vector<std::complex<double>> cqt_adjoint(std::span<const std::complex<double>> v,
                                              const FilterBank& bank, std::size_t hop);

/// Adjoint of modulation_convolve on a frames x n_lambda complex array.
std::vector<std::complex<double>> modulation_adjoint(std::span<const std::complex<double>> v,
                                                     std::size_t frames, std::size_t n_lambda,
                                                     const Filter& alpha, const Filter& beta,
                                                     std::size_t lambda_axis_length);

}  // namespace tfs
