#pragma once

// Helpers shared by the forward and adjoint passes.

#include <complex>
#include <utility>
#include <vector>

#include "tfscat/filterbank.hpp"
#include "tfscat/scattering.hpp"

namespace tfs::detail {

/// Nonzero bins of a filter with their transfer values.
std::vector<std::pair<std::size_t, std::complex<double>>> support_rows(const Filter& f);

void normalize_phases(std::vector<std::complex<double>>& z, double peak);

/// 2-D spectrum of U1 with the frequency axis zero-padded to `cols`.
std::vector<std::complex<double>> padded_spectrum(const Scalogram& u1, std::size_t cols);

std::vector<std::complex<double>> convolve_from_spectrum(const std::vector<std::complex<double>>& spectrum,
                                                         std::size_t frames, std::size_t cols,
                                                         std::size_t n_lambda, const Filter& alpha,
                                                         const Filter& beta);

}  // namespace tfs::detail
