#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "tfscat/io/config.hpp"

namespace tfs::io {

// SCT1 layout:
//
//   "SCT1" | u32 LE header length | UTF-8 JSON header | float32 LE payload
//
// The payload holds S1 (frames x lambda) followed by S2 (paths x frames x
// lambda), both row-major. The header carries the configuration, the path
// table, the shapes and the axis metadata needed to rebuild the tensors.

inline constexpr std::uint32_t kMaxHeaderBytes = 16u << 20;

struct CoefficientFile {
  ScatteringConfig config;
  std::size_t signal_length = 0;
  Coefficients coefficients;
  json provenance = json::object();
};

/// Values are stored as float32; encoding a decoded file reproduces its bytes.
std::vector<std::uint8_t> encode_coefficients(const CoefficientFile& file);
/// Validates magic, header length, header schema, shapes against the payload
/// size and finiteness of every value. Throws DataError; nothing partial is
/// returned.
CoefficientFile decode_coefficients(std::span<const std::uint8_t> bytes);
/// Header alone, after the same framing checks.
json decode_header(std::span<const std::uint8_t> bytes);

void write_coefficients(const CoefficientFile& file, const std::filesystem::path& path);
CoefficientFile read_coefficients(const std::filesystem::path& path);
json read_header(const std::filesystem::path& path);

}  // namespace tfs::io
