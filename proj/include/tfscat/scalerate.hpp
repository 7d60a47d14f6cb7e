#pragma once

#include <string>
#include <variant>
#include <vector>

#include "tfscat/synthesis.hpp"

namespace tfs {

/// sigma per S2 frame, in [-1, 1].
struct ChirpInversionSchedule {
  std::vector<double> sigma;
  double tau = 0.0;
  double origin = 0.0;
};

/// Time in seconds of each frame. Frames past the middle of the circular
/// margin stand for negative times.
std::vector<double> frame_times(std::size_t frames, std::size_t valid_frames, double frame_rate);

/// sigma(t) = (1 - e^(t/tau)) / (1 + e^(t/tau)) with t measured from `origin`.
/// Warns when tau < 4 T.
ChirpInversionSchedule sigma_sigmoid(double tau, double origin, const std::vector<double>& times, double T);
ChirpInversionSchedule sigma_constant(double sigma, std::size_t frames);

/// (1 + sigma)/2 S2(beta) + (1 - sigma)/2 S2(-beta), frame by frame.
ScatteringTensor chirp_inversion(const ScatteringTensor& s2, const ChirpInversionSchedule& schedule);

// Functional primitives. `order` selects S1 (1), S2 (2) or both (0) where it
// applies.

struct ScheduleSpec {
  enum class Kind { constant, sigmoid } kind = Kind::constant;
  double sigma = 1.0;
  double tau = 1.0;
  double origin = 0.0;
};

/// Chirp inversion on S2.
struct BetaFlipMix {
  ScheduleSpec schedule;
};

enum class ShiftAxis { alpha, beta, lambda };

/// Moves coefficients `steps` grid points up the given log axis, zero-filling
/// what enters from the edge. Beta shifts act on log2|beta| within each sign;
/// beta = 0 paths are left alone. Lambda shifts apply to S1 as well unless
/// `order` says otherwise.
struct Translate {
  ShiftAxis axis = ShiftAxis::alpha;
  int steps = 0;
  int order = 0;
};

struct Gain {
  double factor = 1.0;
  int order = 0;
};

using Primitive = std::variant<BetaFlipMix, Translate, Gain>;

struct CoefficientFunctional {
  std::vector<Primitive> primitives;
};

std::string describe(const Primitive& p);

struct FunctionalResult {
  Coefficients coefficients;
  /// One line per applied primitive.
  std::vector<std::string> provenance;
};

/// Applies the primitives in order. T is the averaging scale in seconds, used
/// for the sigmoid check.
FunctionalResult apply_functional(const Coefficients& c, const CoefficientFunctional& f, double T);

struct EffectResult {
  AudioBuffer output;
  SynthesisState state;
  std::vector<std::string> provenance;
};

/// Resynthesis against f(Sx).
EffectResult render_effect(const AudioBuffer& x, const CoefficientFunctional& f, const ScatteringConfig& cfg,
                           const SynthesisOptions& opts, const SnapshotCallback& snapshot = {});

}  // namespace tfs
