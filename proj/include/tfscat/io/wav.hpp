#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "tfscat/audio.hpp"

namespace tfs::io {

enum class SampleFormat { float32, pcm16, pcm24, pcm32 };

struct WavWriteOptions {
  SampleFormat format = SampleFormat::float32;
  /// TPDF dither of +-1 LSB before integer quantization.
  bool dither = false;
  std::uint64_t dither_seed = 0;
};

/// Parses RIFF/WAVE bytes: PCM 8/16/24/32-bit, IEEE float 32/64, plain or
/// WAVE_FORMAT_EXTENSIBLE. Channels are averaged to mono with a warning.
/// Throws DataError on malformed or unsupported input.
AudioBuffer decode_wav(std::span<const std::uint8_t> bytes);
AudioBuffer read_wav(const std::filesystem::path& path);

/// Float output keeps peaks above 1 as they are. Integer output of a buffer
/// whose peak exceeds 1 warns and soft-clips every sample beyond +-0.9 into
/// (0.9, 1) with a tanh knee; in-range buffers are quantized linearly.
/// Nothing wraps around.
std::vector<std::uint8_t> encode_wav(const AudioBuffer& buffer, const WavWriteOptions& options = {});
void write_wav(const AudioBuffer& buffer, const std::filesystem::path& path, const WavWriteOptions& options = {});

/// Knee of the integer soft clip.
constexpr double kSoftClipKnee = 0.9;
double soft_clip(double x);

}  // namespace tfs::io
