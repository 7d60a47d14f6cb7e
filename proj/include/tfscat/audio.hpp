#pragma once

#include <cstddef>
#include <vector>

namespace tfs {

/// Mono waveform. `source_channels` records the channel count of the file it
/// was read from (inputs are downmixed on ingestion).
struct AudioBuffer {
  std::vector<double> samples;
  double sample_rate = 44100.0;
  int source_channels = 1;

  std::size_t size() const { return samples.size(); }
  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
};

}  // namespace tfs
