#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "tfscat/adjoint.hpp"
#include "tfscat/audio.hpp"

namespace tfs {

struct BoldDriver {
  double grow = 1.1;
  double shrink = 0.5;
};

struct SynthesisOptions {
  int iterations = 50;
  double momentum = 0.9;
  double initial_rate = 0.1;
  BoldDriver bold_driver;
  std::uint64_t seed = 0;
  /// Report every n-th iterate through the snapshot callback; 0 = off.
  int snapshot_every = 0;
  TapePolicy tape = TapePolicy::store;

  void validate() const;
};

struct TraceEntry {
  int iteration = 0;
  LossReport loss;
  bool accepted = false;
  /// Rate used for this step.
  double mu = 0.0;
};

struct SynthesisState {
  AudioBuffer iterate;
  std::vector<double> velocity;
  double rate = 0.0;
  std::vector<TraceEntry> loss_trace;
  int iteration = 0;
  bool accepted = false;
  /// Loss of the current iterate.
  LossReport current;
  /// Forward pass of the current iterate with its tape, when available.
  std::optional<ScatterResult> forward;
};

/// Seeded Gaussian noise whose expected CQT modulus per band matches the time
/// average of s1 (length = net.signal_length()).
AudioBuffer init_colored_noise(const Scalogram& s1, const ScatteringNetwork& net, std::uint64_t seed);

/// State at y0, with its loss evaluated.
SynthesisState start(const Coefficients& target, AudioBuffer y0, const ScatteringNetwork& net,
                     const SynthesisOptions& opts);

/// One momentum step with bold-driver acceptance.
SynthesisState step(SynthesisState state, const Coefficients& target, const ScatteringNetwork& net,
                    const SynthesisOptions& opts);

using SnapshotCallback = std::function<void(const SynthesisState&)>;

struct SynthesisResult {
  AudioBuffer output;
  SynthesisState state;
};

SynthesisResult synthesize(const Coefficients& target, const ScatteringNetwork& net,
                           const SynthesisOptions& opts, const SnapshotCallback& snapshot = {});
SynthesisResult synthesize(const AudioBuffer& x, const ScatteringConfig& cfg, const SynthesisOptions& opts,
                           const SnapshotCallback& snapshot = {});

}  // namespace tfs
