#include "tfscat/scalerate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <spdlog/spdlog.h>

#include "tfscat/error.hpp"

namespace tfs {
namespace {

bool applies(int order, int which) { return order == 0 || order == which; }

void check_order(int order) {
  if (order < 0 || order > 2) throw ConfigError("primitive order must be 0, 1 or 2");
}

ChirpInversionSchedule resolve(const ScheduleSpec& spec, const ScatteringTensor& s2, double T) {
  if (spec.kind == ScheduleSpec::Kind::constant) return sigma_constant(spec.sigma, s2.frames);
  return sigma_sigmoid(spec.tau, spec.origin, frame_times(s2.frames, s2.valid_frames, s2.frame_rate), T);
}

void shift_lambda(std::span<double> v, std::size_t frames, std::size_t n_lambda, int steps) {
  std::vector<double> row(n_lambda);
  for (std::size_t t = 0; t < frames; ++t) {
    auto r = v.subspan(t * n_lambda, n_lambda);
    std::fill(row.begin(), row.end(), 0.0);
    for (std::size_t l = 0; l < n_lambda; ++l) {
      const auto src = static_cast<std::ptrdiff_t>(l) - steps;
      if (src >= 0 && src < static_cast<std::ptrdiff_t>(n_lambda)) row[l] = r[static_cast<std::size_t>(src)];
    }
    std::copy(row.begin(), row.end(), r.begin());
  }
}

// Source path of p after moving `steps` along the alpha or |beta| grid.
std::size_t shifted_source(const ScatteringTensor& s2, std::size_t p, ShiftAxis axis, int steps) {
  const auto& path = s2.paths[p];
  std::vector<double> grid;
  double coord;
  if (axis == ShiftAxis::alpha) {
    for (const auto& q : s2.paths) grid.push_back(q.alpha);
    coord = path.alpha;
  } else {
    if (path.beta == 0.0) return p;
    for (const auto& q : s2.paths)
      if (q.beta != 0.0) grid.push_back(std::abs(q.beta));
    coord = std::abs(path.beta);
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  const auto i = std::lower_bound(grid.begin(), grid.end(), coord) - grid.begin();
  const auto j = i - steps;
  if (j < 0 || j >= static_cast<std::ptrdiff_t>(grid.size())) return ScatteringTensor::npos;
  auto source = path;
  if (axis == ShiftAxis::alpha)
    source.alpha = grid[static_cast<std::size_t>(j)];
  else
    source.beta = std::copysign(grid[static_cast<std::size_t>(j)], path.beta);
  return s2.find(source);
}

std::string axis_name(ShiftAxis a) {
  switch (a) {
    case ShiftAxis::alpha: return "alpha";
    case ShiftAxis::beta: return "beta";
    case ShiftAxis::lambda: return "lambda";
  }
  return "?";
}

}  // namespace

std::vector<double> frame_times(std::size_t frames, std::size_t valid_frames, double frame_rate) {
  std::vector<double> t(frames);
  const std::size_t wrap = valid_frames + (frames - std::min(frames, valid_frames)) / 2;
  for (std::size_t k = 0; k < frames; ++k) {
    const double idx = k < wrap ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(frames);
    t[k] = idx / frame_rate;
  }
  return t;
}

ChirpInversionSchedule sigma_sigmoid(double tau, double origin, const std::vector<double>& times, double T) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("sigmoid time constant must be positive");
  if (!std::isfinite(origin)) throw ConfigError("sigmoid origin must be finite");
  if (tau < 4.0 * T)
    spdlog::warn("sigmoid time constant {:.4g} s is under 4 T = {:.4g} s; sigma varies within an averaging window",
                 tau, 4.0 * T);
  ChirpInversionSchedule s;
  s.tau = tau;
  s.origin = origin;
  s.sigma.resize(times.size());
  // (1 - e^x) / (1 + e^x) = -tanh(x / 2), which stays finite for large x.
  for (std::size_t k = 0; k < times.size(); ++k) s.sigma[k] = -std::tanh((times[k] - origin) / (2.0 * tau));
  return s;
}

ChirpInversionSchedule sigma_constant(double sigma, std::size_t frames) {
  if (!(sigma >= -1.0 && sigma <= 1.0)) throw ConfigError("sigma must lie in [-1, 1]");
  ChirpInversionSchedule s;
  s.sigma.assign(frames, sigma);
  return s;
}

ScatteringTensor chirp_inversion(const ScatteringTensor& s2, const ChirpInversionSchedule& schedule) {
  if (schedule.sigma.size() != s2.frames)
    throw DataError("schedule has " + std::to_string(schedule.sigma.size()) + " frames, S2 has " +
                    std::to_string(s2.frames));
  ScatteringTensor out = s2;
  const std::size_t nl = s2.n_lambda;
  for (std::size_t p = 0; p < s2.paths.size(); ++p) {
    const auto& path = s2.paths[p];
    if (path.beta == 0.0) continue;
    auto mirror = path;
    mirror.beta = -path.beta;
    const std::size_t q = s2.find(mirror);
    if (q == ScatteringTensor::npos) throw DataError("no mirror path for " + describe(path));
    const auto src = s2.path(p);
    const auto flip = s2.path(q);
    auto dst = out.path(p);
    for (std::size_t t = 0; t < s2.frames; ++t) {
      const double a = (1.0 + schedule.sigma[t]) / 2.0;
      const double b = (1.0 - schedule.sigma[t]) / 2.0;
      for (std::size_t l = 0; l < nl; ++l) dst[t * nl + l] = a * src[t * nl + l] + b * flip[t * nl + l];
    }
  }
  return out;
}

std::string describe(const Primitive& p) {
  std::ostringstream os;
  std::visit(
      [&](const auto& v) {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, BetaFlipMix>) {
          if (v.schedule.kind == ScheduleSpec::Kind::constant)
            os << "beta_flip_mix sigma=" << v.schedule.sigma;
          else
            os << "beta_flip_mix sigmoid tau=" << v.schedule.tau << " origin=" << v.schedule.origin;
        } else if constexpr (std::is_same_v<V, Translate>) {
          os << "translate axis=" << axis_name(v.axis) << " steps=" << v.steps << " order=" << v.order;
        } else {
          os << "gain factor=" << v.factor << " order=" << v.order;
        }
      },
      p);
  return os.str();
}

FunctionalResult apply_functional(const Coefficients& c, const CoefficientFunctional& f, double T) {
  FunctionalResult r{c, {}};
  auto& s1 = r.coefficients.s1;
  auto& s2 = r.coefficients.s2;
  for (const auto& prim : f.primitives) {
    std::visit(
        [&](const auto& v) {
          using V = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<V, BetaFlipMix>) {
            s2 = chirp_inversion(s2, resolve(v.schedule, s2, T));
          } else if constexpr (std::is_same_v<V, Translate>) {
            check_order(v.order);
            if (v.axis == ShiftAxis::lambda) {
              if (applies(v.order, 1)) shift_lambda(s1.values, s1.frames, s1.n_lambda, v.steps);
              if (applies(v.order, 2))
                for (std::size_t p = 0; p < s2.paths.size(); ++p)
                  shift_lambda(s2.path(p), s2.frames, s2.n_lambda, v.steps);
            } else if (applies(v.order, 2)) {
              ScatteringTensor out = s2;
              for (std::size_t p = 0; p < s2.paths.size(); ++p) {
                const std::size_t src = shifted_source(s2, p, v.axis, v.steps);
                auto dst = out.path(p);
                if (src == ScatteringTensor::npos)
                  std::fill(dst.begin(), dst.end(), 0.0);
                else
                  std::copy_n(s2.path(src).begin(), dst.size(), dst.begin());
              }
              s2 = std::move(out);
            }
          } else {
            check_order(v.order);
            if (!(v.factor >= 0.0) || !std::isfinite(v.factor))
              throw ConfigError("gain must be finite and non-negative");
            if (applies(v.order, 1))
              for (auto& x : s1.values) x *= v.factor;
            if (applies(v.order, 2))
              for (auto& x : s2.values) x *= v.factor;
          }
        },
        prim);
    r.provenance.push_back(describe(prim));
  }
  return r;
}

EffectResult render_effect(const AudioBuffer& x, const CoefficientFunctional& f, const ScatteringConfig& cfg,
                           const SynthesisOptions& opts, const SnapshotCallback& snapshot) {
  auto c = cfg;
  c.sample_rate = x.sample_rate;
  const ScatteringNetwork net(c, x.samples.size());
  auto fwd = scatter(x.samples, net);
  auto target = apply_functional({std::move(fwd.s1), std::move(fwd.s2)}, f, c.resolved_T());
  auto syn = synthesize(target.coefficients, net, opts, snapshot);
  return {std::move(syn.output), std::move(syn.state), std::move(target.provenance)};
}

}  // namespace tfs
