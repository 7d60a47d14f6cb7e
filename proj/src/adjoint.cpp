#include "tfscat/adjoint.hpp"

#include <algorithm>
#include <cmath>

#include "detail.hpp"
#include "tfscat/error.hpp"
#include "tfscat/fft.hpp"
#include "tfscat/parallel.hpp"

namespace tfs {
namespace {

using cplx = std::complex<double>;

// Bands per reduction chunk in the waveform adjoint. Fixed so that the
// summation order does not depend on the worker count.
constexpr std::size_t kBandChunk = 12;

double half_squared_distance(std::span<const double> a, std::span<const double> b) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    e += d * d;
  }
  return 0.5 * e;
}

void check_same(const Coefficients& x, const Coefficients& y) {
  if (x.s1.frames != y.s1.frames || x.s1.n_lambda != y.s1.n_lambda)
    throw DataError("first-order shapes differ: " + std::to_string(x.s1.frames) + "x" +
                    std::to_string(x.s1.n_lambda) + " vs " + std::to_string(y.s1.frames) + "x" +
                    std::to_string(y.s1.n_lambda));
  if (x.s2.paths != y.s2.paths) throw DataError("second-order path tables differ");
  if (x.s2.frames != y.s2.frames || x.s2.n_lambda != y.s2.n_lambda)
    throw DataError("second-order shapes differ");
  if (x.s1.values.size() != x.s1.frames * x.s1.n_lambda ||
      y.s1.values.size() != y.s1.frames * y.s1.n_lambda ||
      x.s2.values.size() != x.s2.paths.size() * x.s2.path_size() ||
      y.s2.values.size() != y.s2.paths.size() * y.s2.path_size())
    throw DataError("coefficient payload does not match its shape");
}

// Correlation with paths that share one alpha filter. Only the rows in the
// alpha support carry energy, so the log-frequency transforms run on those
// rows and the time transforms on the n_lambda occupied columns.
class RowCorrelator {
 public:
  RowCorrelator(const Filter& alpha, std::size_t frames, std::size_t n_lambda, std::size_t cols)
      : rows_(detail::support_rows(alpha)), frames_(frames), n_lambda_(n_lambda), cols_(cols),
        acc_(rows_.size() * cols, cplx(0.0, 0.0)), work_(rows_.size() * cols), time_(frames * n_lambda) {}

  // acc += conj(alpha x beta) * FFT2(pad v) on the support rows.
  void add(std::span<const cplx> v, const Filter& beta) {
    std::copy(v.begin(), v.end(), time_.begin());
    fft::forward_many(time_.data(), frames_, n_lambda_, n_lambda_, 1);
    std::fill(work_.begin(), work_.end(), cplx(0.0, 0.0));
    for (std::size_t i = 0; i < rows_.size(); ++i)
      std::copy_n(time_.begin() + static_cast<std::ptrdiff_t>(rows_[i].first * n_lambda_), n_lambda_,
                  work_.begin() + static_cast<std::ptrdiff_t>(i * cols_));
    fft::forward_many(work_.data(), cols_, rows_.size(), 1, cols_);
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      const cplx a = std::conj(rows_[i].second);
      beta.for_each([&](std::size_t kl, cplx b) { acc_[i * cols_ + kl] += a * std::conj(b) * work_[i * cols_ + kl]; });
    }
  }

  // Inverse transform of the accumulated spectrum, cropped to n_lambda.
  std::vector<cplx> finish() {
    fft::inverse_many(acc_.data(), cols_, rows_.size(), 1, cols_);
    std::vector<cplx> out(frames_ * n_lambda_, cplx(0.0, 0.0));
    for (std::size_t i = 0; i < rows_.size(); ++i)
      std::copy_n(acc_.begin() + static_cast<std::ptrdiff_t>(i * cols_), n_lambda_,
                  out.begin() + static_cast<std::ptrdiff_t>(rows_[i].first * n_lambda_));
    fft::inverse_many(out.data(), frames_, n_lambda_, n_lambda_, 1);
    return out;
  }

 private:
  std::vector<std::pair<std::size_t, cplx>> rows_;
  std::size_t frames_, n_lambda_, cols_;
  std::vector<cplx> acc_, work_, time_;
};

}  // namespace

LossReport loss(const Coefficients& x, const Coefficients& y) {
  check_same(x, y);
  LossReport r;
  r.first_order = half_squared_distance(x.s1.values, y.s1.values);
  r.second_order = half_squared_distance(x.s2.values, y.s2.values);
  r.total = r.first_order + r.second_order;
  return r;
}

ScatteringTensor grad_s2_to_u2(const ScatteringTensor& residual_s2, const ScatteringNetwork& net) {
  const Filter* phi_f = net.phi_f() ? &*net.phi_f() : nullptr;
  auto g = average_s2(residual_s2, net.phi_t(), phi_f);
  g.order = TensorOrder::U2;
  return g;
}

std::vector<cplx> modulation_adjoint(std::span<const cplx> v, std::size_t frames, std::size_t n_lambda,
                                     const Filter& alpha, const Filter& beta, std::size_t lambda_axis_length) {
  if (v.size() != frames * n_lambda) throw DataError("adjoint input has the wrong size");
  RowCorrelator c(alpha, frames, n_lambda, lambda_axis_length);
  c.add(v, beta);
  return c.finish();
}

Scalogram grad_u2_to_u1(const ScatteringTensor& grad_u2, const GradientTape& tape,
                        const Scalogram& residual_s1, const Scalogram& u1, const ScatteringNetwork& net) {
  const std::size_t frames = net.frames();
  const std::size_t n_lambda = net.n_lambda();
  const std::size_t cols = net.lambda_axis_length();
  const std::size_t n_paths = net.paths().size();
  if (grad_u2.paths != net.paths() || grad_u2.frames != frames || grad_u2.n_lambda != n_lambda)
    throw DataError("U2 gradient does not match the network");
  if (!tape.recompute_u2 && tape.phase_u2.size() != n_paths) throw DataError("gradient tape is missing U2 phases");

  std::vector<cplx> u1_spectrum;
  if (tape.recompute_u2) {
    if (u1.frames != frames || u1.n_lambda != n_lambda) throw DataError("U1 needed to recompute U2 phases");
    u1_spectrum = detail::padded_spectrum(u1, cols);
  }

  // One accumulator per rate; paths are sorted by alpha so each chunk is a
  // contiguous run summed in path order.
  std::vector<std::size_t> chunk_begin;
  for (std::size_t p = 0; p < n_paths; ++p)
    if (p == 0 || net.paths()[p].alpha != net.paths()[p - 1].alpha) chunk_begin.push_back(p);
  chunk_begin.push_back(n_paths);
  const std::size_t n_chunks = chunk_begin.size() - 1;
  std::vector<std::vector<cplx>> partial(n_chunks);

  parallel_for(n_chunks, [&](std::size_t c) {
    RowCorrelator acc(net.alpha_filter(chunk_begin[c]), frames, n_lambda, cols);
    std::vector<cplx> v(frames * n_lambda);
    for (std::size_t p = chunk_begin[c]; p < chunk_begin[c + 1]; ++p) {
      std::vector<cplx> recomputed;
      if (tape.recompute_u2) {
        recomputed = detail::convolve_from_spectrum(u1_spectrum, frames, cols, n_lambda, net.alpha_filter(p),
                                                    net.beta_filter(p));
        detail::normalize_phases(recomputed, tape.u2_peak);
      }
      const auto& phase = tape.recompute_u2 ? recomputed : tape.phase_u2[p];
      const auto g = grad_u2.path(p);
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = phase[i] * g[i];
      acc.add(v, net.beta_filter(p));
    }
    partial[c] = acc.finish();
  });
  std::vector<cplx> back(frames * n_lambda, cplx(0.0, 0.0));
  for (const auto& part : partial)
    for (std::size_t i = 0; i < back.size(); ++i) back[i] += part[i];

  const Filter* phi_f = net.phi_f() ? &*net.phi_f() : nullptr;
  Scalogram g = average_s1(residual_s1, net.phi_t(), phi_f);
  for (std::size_t i = 0; i < back.size(); ++i) g.values[i] += back[i].real();
  return g;
}

std::vector<cplx> cqt_adjoint(std::span<const cplx> v, const FilterBank& bank, std::size_t hop) {
  const std::size_t n = bank.length();
  const std::size_t frames = n / hop;
  const std::size_t n_lambda = bank.filters.size();
  if (v.size() != frames * n_lambda) throw DataError("adjoint input has the wrong size");

  std::vector<cplx> spectra(v.begin(), v.end());
  fft::forward_many(spectra.data(), frames, n_lambda, n_lambda, 1);

  const std::size_t n_chunks = (n_lambda + kBandChunk - 1) / kBandChunk;
  std::vector<std::vector<cplx>> partial(n_chunks);
  parallel_for(n_chunks, [&](std::size_t c) {
    auto& acc = partial[c];
    acc.assign(n, cplx(0.0, 0.0));
    const std::size_t end = std::min(n_lambda, (c + 1) * kBandChunk);
    for (std::size_t l = c * kBandChunk; l < end; ++l) {
      bank.filters[l].for_each([&](std::size_t k, cplx psi) {
        acc[k] += std::conj(psi) * spectra[(k % frames) * n_lambda + l];
      });
    }
  });
  std::vector<cplx> total = std::move(partial[0]);
  for (std::size_t c = 1; c < n_chunks; ++c)
    for (std::size_t i = 0; i < n; ++i) total[i] += partial[c][i];
  fft::inverse(total);
  return total;
}

std::vector<double> grad_u1_to_waveform(const Scalogram& grad_u1, const GradientTape& tape,
                                        const ScatteringNetwork& net) {
  if (grad_u1.frames != net.frames() || grad_u1.n_lambda != net.n_lambda())
    throw DataError("U1 gradient does not match the network");
  if (tape.phase_u1.size() != grad_u1.values.size()) throw DataError("gradient tape is missing U1 phases");
  std::vector<cplx> v(grad_u1.values.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = tape.phase_u1[i] * grad_u1.values[i];
  const auto back = cqt_adjoint(v, net.lambda_bank(), net.hop());
  std::vector<double> g(net.signal_length());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = back[i].real();
  return g;
}

BackscatterResult backscatter(const Coefficients& target, std::span<const double> y,
                              const ScatteringNetwork& net, TapePolicy policy) {
  if (policy == TapePolicy::none) policy = TapePolicy::store;
  return backscatter(target, scatter(y, net, {policy, false}), net);
}

BackscatterResult backscatter(const Coefficients& target, const ScatterResult& fwd,
                              const ScatteringNetwork& net) {
  if (!fwd.tape) throw DataError("forward pass has no gradient tape");
  BackscatterResult r;
  r.coefficients = {fwd.s1, fwd.s2};
  r.loss = loss(target, r.coefficients);

  Scalogram ds1 = target.s1;
  for (std::size_t i = 0; i < ds1.values.size(); ++i) ds1.values[i] -= r.coefficients.s1.values[i];
  ScatteringTensor ds2 = target.s2;
  for (std::size_t i = 0; i < ds2.values.size(); ++i) ds2.values[i] -= r.coefficients.s2.values[i];

  const auto g2 = grad_s2_to_u2(ds2, net);
  const auto g1 = grad_u2_to_u1(g2, *fwd.tape, ds1, fwd.u1, net);
  r.gradient = grad_u1_to_waveform(g1, *fwd.tape, net);
  return r;
}

}  // namespace tfs
