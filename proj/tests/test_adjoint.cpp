#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "tfscat/adjoint.hpp"
#include "tfscat/error.hpp"
#include "tfscat/parallel.hpp"

using namespace tfs;
using cplx = std::complex<double>;

namespace {

// 2048 samples, Q=4, 3 octaves, T=512 samples.
ScatteringConfig gradient_config() {
  ScatteringConfig cfg;
  cfg.sample_rate = 44100.0;
  cfg.Q = 4;
  cfg.octaves = 3;
  cfg.T = 512.0 / 44100.0;
  cfg.u1_hop = 16;
  return cfg;
}

std::vector<cplx> random_complex(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<cplx> v(n);
  for (auto& z : v) z = {g(rng), g(rng)};
  return v;
}

cplx inner(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  cplx s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

Coefficients coefficients_of(std::span<const double> x, const ScatteringNetwork& net) {
  auto r = scatter(x, net);
  return {std::move(r.s1), std::move(r.s2)};
}

double loss_at(const Coefficients& target, std::span<const double> y, const ScatteringNetwork& net) {
  return loss(target, coefficients_of(y, net)).total;
}

}  // namespace

TEST_CASE("cqt adjoint passes the dot-product test") {
  const auto cfg = gradient_config();
  const ScatteringNetwork net(cfg, 2048);
  const auto& bank = net.lambda_bank();
  const std::size_t n = bank.length();
  const auto x = random_complex(n, 1);
  const auto v = random_complex(net.frames() * net.n_lambda(), 2);

  // cqt_transform takes real input; test real and imaginary parts separately.
  std::vector<double> re(n), im(n);
  for (std::size_t i = 0; i < n; ++i) re[i] = x[i].real(), im[i] = x[i].imag();
  const auto bre = cqt_transform(re, bank, net.hop());
  const auto bim = cqt_transform(im, bank, net.hop());
  std::vector<cplx> bx(bre.size());
  for (std::size_t i = 0; i < bx.size(); ++i) bx[i] = bre[i] + cplx(0, 1) * bim[i];

  const auto bhv = cqt_adjoint(v, bank, net.hop());
  const cplx lhs = inner(v, bx);
  const cplx rhs = inner(bhv, x);
  CHECK(std::abs(lhs - rhs) / std::abs(lhs) < 1e-10);
}

TEST_CASE("modulation adjoint passes the dot-product test for every path") {
  const auto cfg = gradient_config();
  const ScatteringNetwork net(cfg, 2048);
  const std::size_t frames = net.frames(), n_lambda = net.n_lambda();
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  Scalogram u;
  u.frames = frames;
  u.n_lambda = n_lambda;
  u.values.resize(frames * n_lambda);
  Scalogram ui = u;
  for (auto& s : u.values) s = g(rng);
  for (auto& s : ui.values) s = g(rng);
  const auto v = random_complex(frames * n_lambda, 4);

  for (std::size_t p = 0; p < net.paths().size(); ++p) {
    CAPTURE(describe(net.paths()[p]));
    const auto& a = net.alpha_filter(p);
    const auto& b = net.beta_filter(p);
    const auto ar = modulation_convolve(u, a, b, net.lambda_axis_length());
    const auto ai = modulation_convolve(ui, a, b, net.lambda_axis_length());
    std::vector<cplx> ax(ar.size()), x(ar.size());
    for (std::size_t i = 0; i < ax.size(); ++i) {
      ax[i] = ar[i] + cplx(0, 1) * ai[i];
      x[i] = {u.values[i], ui.values[i]};
    }
    const auto ahv = modulation_adjoint(v, frames, n_lambda, a, b, net.lambda_axis_length());
    const cplx lhs = inner(v, ax);
    const cplx rhs = inner(ahv, x);
    CHECK(std::abs(lhs - rhs) / std::abs(lhs) < 1e-10);
  }
}

TEST_CASE("averaging is self-adjoint") {
  auto cfg = gradient_config();
  cfg.F = 1.0;
  const ScatteringNetwork net(cfg, 2048);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  Scalogram a, b;
  a.frames = b.frames = net.frames();
  a.n_lambda = b.n_lambda = net.n_lambda();
  a.values.resize(net.frames() * net.n_lambda());
  b.values.resize(a.values.size());
  for (auto& s : a.values) s = g(rng);
  for (auto& s : b.values) s = g(rng);
  const Filter* phi_f = &*net.phi_f();
  const auto pa = average_s1(a, net.phi_t(), phi_f);
  const auto pb = average_s1(b, net.phi_t(), phi_f);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    lhs += pa.values[i] * b.values[i];
    rhs += a.values[i] * pb.values[i];
  }
  CHECK(std::abs(lhs - rhs) / std::abs(lhs) < 1e-10);
}

TEST_CASE("full-chain gradient matches central differences") {
  const auto cfg = gradient_config();
  const ScatteringNetwork net(cfg, 2048);
  const auto x = fixtures::chirp(2048, cfg.sample_rate, 2000.0, 8000.0);
  const auto y = fixtures::white_noise(2048, 11, 0.2);
  const auto target = coefficients_of(x, net);
  const auto r = backscatter(target, y, net);

  // Directional derivatives along random directions and coordinate axes.
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g;
  std::vector<std::vector<double>> dirs;
  for (int k = 0; k < 4; ++k) {
    std::vector<double> d(2048);
    for (auto& s : d) s = g(rng);
    dirs.push_back(d);
  }
  for (std::size_t i : {0u, 100u, 1024u, 2047u}) {
    std::vector<double> d(2048, 0.0);
    d[i] = 1.0;
    dirs.push_back(d);
  }
  double err2 = 0.0, ref2 = 0.0;
  for (const auto& d : dirs) {
    const double h = 1e-6;
    std::vector<double> yp(y), ym(y);
    for (std::size_t i = 0; i < y.size(); ++i) yp[i] += h * d[i], ym[i] -= h * d[i];
    const double fd = (loss_at(target, yp, net) - loss_at(target, ym, net)) / (2 * h);
    double an = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) an -= r.gradient[i] * d[i];
    err2 += (fd - an) * (fd - an);
    ref2 += fd * fd;
  }
  CHECK(std::sqrt(err2 / ref2) < 1e-4);
}

TEST_CASE("recomputed U2 phases give the stored-tape gradient") {
  const auto cfg = gradient_config();
  const ScatteringNetwork net(cfg, 2048);
  const auto target = coefficients_of(fixtures::am_tone(2048, cfg.sample_rate, 3000.0, 300.0), net);
  const auto y = fixtures::white_noise(2048, 7);
  const auto a = backscatter(target, y, net, TapePolicy::store);
  const auto b = backscatter(target, y, net, TapePolicy::recompute);
  REQUIRE(a.gradient.size() == b.gradient.size());
  for (std::size_t i = 0; i < a.gradient.size(); ++i) CHECK(a.gradient[i] == b.gradient[i]);
}

TEST_CASE("matching target gives zero loss and zero gradient") {
  const auto cfg = gradient_config();
  const ScatteringNetwork net(cfg, 2048);
  const auto x = fixtures::pink_noise(2048, 3);
  const auto r = backscatter(coefficients_of(x, net), x, net);
  CHECK(r.loss.total == 0.0);
  for (double v : r.gradient) CHECK(v == 0.0);
}

TEST_CASE("gradient step lowers the loss") {
  const auto cfg = gradient_config();
  const ScatteringNetwork net(cfg, 2048);
  const auto target = coefficients_of(fixtures::chirp(2048, cfg.sample_rate, 1500.0, 6000.0), net);
  auto y = fixtures::white_noise(2048, 5);
  const auto r = backscatter(target, y, net);
  double gn = 0.0;
  for (double v : r.gradient) gn += v * v;
  const double step = 1e-3 * r.loss.total / gn;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += step * r.gradient[i];
  CHECK(loss_at(target, y, net) < r.loss.total);
}

TEST_CASE("gradient is bit-identical across thread counts") {
  const auto cfg = gradient_config();
  const ScatteringNetwork net(cfg, 2048);
  const auto target = coefficients_of(fixtures::speech_like(2048, cfg.sample_rate, 1), net);
  const auto y = fixtures::white_noise(2048, 9);
  set_thread_count(1);
  const auto a = backscatter(target, y, net);
  set_thread_count(4);
  const auto b = backscatter(target, y, net);
  set_thread_count(0);
  CHECK(a.loss.total == b.loss.total);
  CHECK(a.gradient == b.gradient);
}

TEST_CASE("loss rejects mismatched coefficients") {
  const auto cfg = gradient_config();
  const ScatteringNetwork a(cfg, 2048), b(cfg, 4096);
  const auto x = fixtures::white_noise(2048, 1);
  const auto y = fixtures::white_noise(4096, 1);
  CHECK_THROWS_AS(loss(coefficients_of(x, a), coefficients_of(y, b)), DataError);
}

TEST_CASE("grad_s2_to_u2 is the adjoint of average_s2") {
  auto cfg = gradient_config();
  cfg.F = 1.0;
  const ScatteringNetwork net(cfg, 2048);
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g;
  ScatteringTensor a;
  a.paths = net.paths();
  a.frames = net.frames();
  a.n_lambda = net.n_lambda();
  a.values.resize(a.paths.size() * a.path_size());
  ScatteringTensor b = a;
  for (auto& s : a.values) s = g(rng);
  for (auto& s : b.values) s = g(rng);
  const auto pa = average_s2(a, net.phi_t(), &*net.phi_f());
  const auto gb = grad_s2_to_u2(b, net);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    lhs += pa.values[i] * b.values[i];
    rhs += a.values[i] * gb.values[i];
  }
  CHECK(std::abs(lhs - rhs) / std::abs(lhs) < 1e-10);
}

TEST_CASE("U1 gradient matches central differences") {
  const auto cfg = gradient_config();
  const ScatteringNetwork net(cfg, 2048);
  const auto target = coefficients_of(fixtures::chirp(2048, cfg.sample_rate, 2000.0, 8000.0), net);
  const auto fwd = scatter(fixtures::white_noise(2048, 21), net, {TapePolicy::store, false});

  auto loss_of_u1 = [&](const Scalogram& u1) {
    const auto s1 = average_s1(u1, net.phi_t());
    const auto s2 = average_s2(strf(u1, net), net.phi_t());
    return loss(target, {s1, s2}).total;
  };
  Scalogram ds1 = target.s1;
  for (std::size_t i = 0; i < ds1.values.size(); ++i) ds1.values[i] -= fwd.s1.values[i];
  ScatteringTensor ds2 = target.s2;
  for (std::size_t i = 0; i < ds2.values.size(); ++i) ds2.values[i] -= fwd.s2.values[i];
  const auto g = grad_u2_to_u1(grad_s2_to_u2(ds2, net), *fwd.tape, ds1, fwd.u1, net);

  const double eps = 1e-6;
  std::mt19937_64 rng(22);
  std::uniform_int_distribution<std::size_t> pick(0, fwd.u1.values.size() - 1);
  double err2 = 0.0, ref2 = 0.0;
  for (int k = 0; k < 16; ++k) {
    const std::size_t i = pick(rng);
    Scalogram up = fwd.u1, dn = fwd.u1;
    up.values[i] += eps;
    dn.values[i] -= eps;
    const double fd = (loss_of_u1(up) - loss_of_u1(dn)) / (2 * eps);
    err2 += (fd + g.values[i]) * (fd + g.values[i]);
    ref2 += fd * fd;
  }
  CHECK(std::sqrt(err2 / ref2) < 1e-4);
}
