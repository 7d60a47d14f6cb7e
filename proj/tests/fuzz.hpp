#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fuzz {

struct Report {
  std::size_t cases = 0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;  ///< structured tfs::DataError
  /// Exceptions of any other type, with their messages.
  std::vector<std::string> unexpected;
};

/// Mutates valid WAV files and feeds them to decode_wav.
Report wav(std::uint64_t seed, std::size_t iterations);
/// Mutates a valid SCT1 container (framing, header text and payload) and
/// feeds it to decode_coefficients.
Report container(std::uint64_t seed, std::size_t iterations);

}  // namespace fuzz
