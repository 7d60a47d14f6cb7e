#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "tfscat/error.hpp"
#include "tfscat/filterbank.hpp"

using namespace tfs;

namespace {

constexpr double kPi = std::numbers::pi;

// kappa from the time domain: ratio of the Fourier transform of the Gaussian
// envelope at lambda to its integral, by brute-force quadrature.
double kappa_by_quadrature(double q) {
  const double lambda = 1.0;
  const double sigma_t = q / lambda;
  const double dt = sigma_t / 400.0;
  double num = 0.0, den = 0.0;
  for (double t = -12 * sigma_t; t <= 12 * sigma_t; t += dt) {
    const double g = std::exp(-t * t / (2 * sigma_t * sigma_t));
    num += g * std::cos(2 * kPi * lambda * t);
    den += g;
  }
  return num / den;
}

double max_dc_ratio(const Filter& f) { return std::abs(f.at_signed(0)) / f.peak(); }

}  // namespace

TEST_CASE("kappa for Q=1 matches the quadrature oracle") {
  const double oracle = kappa_by_quadrature(1.0);
  CHECK(oracle == doctest::Approx(2.6753e-9).epsilon(1e-3));
  CHECK(morlet_kappa(1.0) == doctest::Approx(oracle).epsilon(1e-6));
  const auto f = build_morlet({1000.0, 1.0, 4096, 44100.0});
  CHECK(f.corrective_kappa == doctest::Approx(oracle).epsilon(1e-6));
  CHECK(max_dc_ratio(f) < 1e-12);
}

TEST_CASE("kappa decreases with Q and stays finite") {
  double prev = 1.0;
  for (double q = 0.5; q <= 16.0; q += 0.5) {
    const double k = morlet_kappa(q);
    CHECK(std::isfinite(k));
    CHECK(k >= 0.0);
    // Strict until the double range underflows to zero.
    if (prev > 0.0) CHECK(k < prev);
    else CHECK(k == 0.0);
    prev = k;
  }
  CHECK(morlet_kappa(12.0) < 1e-100);
  const auto f = build_morlet({440.0, 12.0, 65536, 44100.0});
  for (const auto& v : f.values()) REQUIRE(std::isfinite(std::abs(v)));
}

TEST_CASE("440 Hz filter peaks within one bin") {
  const std::size_t n = 65536;
  const auto f = build_morlet({440.0, 12.0, n, 44100.0});
  const auto dense = f.dense();
  std::size_t best = 0;
  for (std::size_t k = 0; k < n; ++k)
    if (std::abs(dense[k]) > std::abs(dense[best])) best = k;
  const double df = 44100.0 / n;
  CHECK(std::abs(best * df - 440.0) <= df);
}

TEST_CASE("every filter is zero-mean") {
  const auto bank = build_cqt_bank(44100.0, 12, 9, 1 << 16);
  for (const auto& f : bank.filters) CHECK(max_dc_ratio(f) < 1e-12);
  const auto mods = build_modulation_banks({8192.0 / 44100.0, 1, 44100.0 / 128.0, 108, 12, 0.0, 4096});
  for (const auto& f : mods.alpha.filters) CHECK(max_dc_ratio(f) < 1e-12);
  for (const auto& f : mods.beta.filters) CHECK(max_dc_ratio(f) < 1e-12);
}

TEST_CASE("build_morlet rejects bad specs") {
  CHECK_THROWS_AS(build_morlet({30000.0, 12.0, 4096, 44100.0}), BandwidthError);
  CHECK_THROWS_AS(build_morlet({-30000.0, 12.0, 4096, 44100.0}), BandwidthError);
  CHECK_THROWS_AS(build_morlet({440.0, 0.0, 4096, 44100.0}), ConfigError);
  CHECK_THROWS_AS(build_morlet({440.0, 12.0, 1000, 44100.0}), ConfigError);
}

TEST_CASE("mirrored filter reflects the transfer") {
  const auto f = build_morlet({2.0, 1.0, 64, 12.0});
  const auto m = f.mirrored();
  for (std::ptrdiff_t k = -32; k < 32; ++k) CHECK(m.at_signed(k) == f.at_signed(-k));
  CHECK(m.center_frequency == -2.0);
}

TEST_CASE("construction is bit-identical") {
  const auto a = build_cqt_bank(22050.0, 8, 5, 1 << 14);
  const auto b = build_cqt_bank(22050.0, 8, 5, 1 << 14);
  REQUIRE(a.filters.size() == b.filters.size());
  for (std::size_t i = 0; i < a.filters.size(); ++i) CHECK(a.filters[i].values() == b.filters[i].values());
}

TEST_CASE("CQT bank grid") {
  const auto bank = build_cqt_bank(44100.0, 12, 9, 1 << 16);
  CHECK(bank.filters.size() == 108);
  CHECK(bank.grid.size() == 108);
  for (std::size_t i = 1; i < bank.grid.size(); ++i)
    CHECK(bank.grid[i] / bank.grid[i - 1] == doctest::Approx(std::exp2(1.0 / 12)).epsilon(1e-12));
  CHECK(std::exp2(1.0 / 12) == doctest::Approx(1.059463).epsilon(1e-6));
  // Highest grid point not above fs * 2^(-1/Q) / 2.
  const double limit = 44100.0 * std::exp2(-1.0 / 12) / 2.0;
  CHECK(bank.grid.back() <= limit);
  CHECK(bank.grid.back() * std::exp2(1.0 / 12) > limit);
  CHECK(bank.lowpass.has_value());
}

TEST_CASE("CQT bank rejects impossible grids") {
  CHECK_THROWS_AS(build_cqt_bank(44100.0, 12, 9, 4000), ConfigError);
  CHECK_THROWS_AS(build_cqt_bank(44100.0, 12, 14, 1 << 12), BandwidthError);
  CHECK_THROWS_AS(build_cqt_bank(44100.0, 0, 9, 1 << 16), ConfigError);
}

TEST_CASE("CQT bank Littlewood-Paley bounds") {
  const auto bank = build_cqt_bank(44100.0, 12, 9, 1 << 16);
  const auto lp = littlewood_paley(bank);
  CHECK(lp.upper_bound <= 1.0 + 1e-6);
  CHECK(lp.upper_bound >= 1.0 - 1e-6);
  CHECK(lp.lower_bound >= 0.9);
  CHECK(bank.normalization_gain > 0.0);
}

TEST_CASE("modulation grids") {
  const double T = 8192.0 / 44100.0;
  CHECK(1.0 / T == doctest::Approx(5.383).epsilon(1e-3));
  const auto alphas = alpha_grid(T, 1, 44100.0 / 128.0 / 4.0);
  REQUIRE(!alphas.empty());
  CHECK(alphas.front() == 8.0);
  CHECK(alphas == std::vector<double>{8, 16, 32, 64});
  const auto betas = beta_grid(12);
  CHECK(betas == std::vector<double>{-4, -2, -1, 1, 2, 4});
  // With the low-pass, seven beta values.
  CHECK(betas.size() + 1 == 7);
}

TEST_CASE("doubling T admits rates in (1/(2T), 1/T]") {
  const double T = 0.1;
  const auto a = alpha_grid(T, 1, 100.0);
  const auto b = alpha_grid(2 * T, 1, 100.0);
  CHECK(b.size() == a.size() + 1);
  CHECK(b.front() > 1.0 / (2 * T));
  CHECK(b.front() <= 1.0 / T);
}

TEST_CASE("modulation banks cover their passband") {
  const auto banks = build_modulation_banks({8192.0 / 44100.0, 1, 44100.0 / 128.0, 108, 12, 0.0, 4096});
  const auto a = littlewood_paley(banks.alpha);
  CHECK(a.upper_bound <= 1.0 + 1e-6);
  CHECK(a.lower_bound >= 0.9);
  const auto b = littlewood_paley(banks.beta);
  CHECK(b.upper_bound <= 1.0 + 1e-6);
  CHECK(b.lower_bound >= 0.9);
  CHECK(banks.beta.filters.size() == 6);
  CHECK(banks.beta.lowpass.has_value());
  CHECK(banks.alpha.grid.size() == 4);
}

TEST_CASE("finer Q_mod refines only the rate grid") {
  const auto banks = build_modulation_banks({0.2, 2, 344.53125, 60, 12, 0.0, 2048});
  CHECK(banks.alpha.grid.size() == 8);
  CHECK(banks.alpha.grid[1] / banks.alpha.grid[0] == doctest::Approx(std::sqrt(2.0)));
  CHECK(banks.beta.grid == beta_grid(12));
  const auto a = littlewood_paley(banks.alpha);
  CHECK(a.upper_bound <= 1.0 + 1e-6);
  CHECK(a.lower_bound >= 0.9);
  const auto b = littlewood_paley(banks.beta);
  CHECK(b.upper_bound <= 1.0 + 1e-6);
  CHECK(b.lower_bound >= 0.9);
}

TEST_CASE("beta bank for other Q") {
  for (int q : {4, 8, 16, 24}) {
    CAPTURE(q);
    const auto banks = build_modulation_banks({0.2, 1, 344.53125, static_cast<std::size_t>(q * 5), q, 0.0, 2048});
    const auto b = littlewood_paley(banks.beta);
    CHECK(b.upper_bound <= 1.0 + 1e-6);
    CHECK(b.lower_bound >= 0.9);
  }
}

TEST_CASE("empty alpha grid is an error") {
  CHECK_THROWS_AS(build_modulation_banks({10.0, 1, 0.3, 12, 12, 0.0, 64}), ConfigError);
}

TEST_CASE("single filter on an unpaired axis") {
  FilterBank bank;
  bank.axis = Axis::log_frequency;
  auto f = build_morlet({2.0, 1.0, 64, 12.0});
  f.scale(1.0 / f.peak());
  bank.filters.push_back(f);
  bank.grid.push_back(2.0);
  const auto lp = littlewood_paley(bank);
  double max_sq = 0.0;
  for (const auto& v : f.values()) max_sq = std::max(max_sq, std::norm(v));
  CHECK(lp.upper_bound == doctest::Approx(max_sq).epsilon(1e-12));
  CHECK(lp.upper_bound == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("gamma bank") {
  const auto bank = build_gamma_bank({0.25, -0.25}, 32);
  CHECK(bank.grid == std::vector<double>{-0.25, 0.25});
  CHECK(littlewood_paley(bank).upper_bound <= 1.0 + 1e-6);
  CHECK_THROWS_AS(build_gamma_bank({0.5}, 32), ConfigError);
  CHECK_THROWS_AS(build_gamma_bank({0.0}, 32), ConfigError);
}

TEST_CASE("low-pass is -3 dB at its cutoff") {
  const double fs = 1024.0;
  const auto f = build_gaussian_lowpass(8.0, 1024, fs);
  CHECK(std::norm(f.at_signed(8)) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(f.at_signed(0).real() == doctest::Approx(1.0));
  const auto phi_f = build_transposition_lowpass(2.0, 12, 64);
  CHECK(phi_f.bandwidth == doctest::Approx(0.5 / std::sqrt(std::log(2.0))));
}

TEST_CASE("support sizes") {
  const auto f = build_gaussian_lowpass(8.0, 1024, 1024.0);
  const std::size_t s = filter_support(f);
  CHECK(s % 2 == 1);
  CHECK(s > 1);
  CHECK(beta_axis_length(108, 12) >= 108 + filter_support(build_morlet({1.0, envelope_quality(1, kModulationOverlap), 256, 12.0})));
}
