#include "tfscat/io/wav.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <string>

#include <spdlog/spdlog.h>

#include "bytes.hpp"
#include "tfscat/error.hpp"

namespace tfs::io {

namespace detail {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw DataError("read error on " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write error on " + path.string());
}

}  // namespace detail

namespace {

using detail::get_u16;
using detail::get_u32;

constexpr std::uint16_t kPcm = 1;
constexpr std::uint16_t kFloat = 3;
constexpr std::uint16_t kExtensible = 0xfffe;

struct Format {
  std::uint16_t codec = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t block_align = 0;
  std::uint16_t bits = 0;
};

Format parse_fmt(const std::uint8_t* p, std::uint32_t size) {
  if (size < 16) throw DataError("fmt chunk is " + std::to_string(size) + " bytes, need 16");
  Format f;
  f.codec = get_u16(p);
  f.channels = get_u16(p + 2);
  f.sample_rate = get_u32(p + 4);
  f.block_align = get_u16(p + 12);
  f.bits = get_u16(p + 14);
  if (f.codec == kExtensible) {
    if (size < 40) throw DataError("extensible fmt chunk is " + std::to_string(size) + " bytes, need 40");
    const std::uint16_t valid_bits = get_u16(p + 18);
    // The sub-format GUID starts with the plain codec tag.
    f.codec = get_u16(p + 24);
    if (valid_bits != 0 && valid_bits != f.bits)
      throw DataError("unsupported WAV: " + std::to_string(valid_bits) + " valid bits in " +
                      std::to_string(f.bits) + "-bit containers");
  }
  if (f.channels == 0) throw DataError("fmt chunk declares zero channels");
  if (f.sample_rate == 0) throw DataError("fmt chunk declares a zero sample rate");
  const bool pcm = f.codec == kPcm && (f.bits == 8 || f.bits == 16 || f.bits == 24 || f.bits == 32);
  const bool flt = f.codec == kFloat && (f.bits == 32 || f.bits == 64);
  if (!pcm && !flt)
    throw DataError("unsupported WAV codec " + std::to_string(f.codec) + " with " + std::to_string(f.bits) +
                    " bits per sample");
  if (f.block_align != f.channels * (f.bits / 8))
    throw DataError("fmt block align " + std::to_string(f.block_align) + " does not match " +
                    std::to_string(f.channels) + " channels of " + std::to_string(f.bits) + " bits");
  return f;
}

double sample_at(const std::uint8_t* p, const Format& f) {
  switch (f.bits) {
    case 8:
      if (f.codec == kPcm) return (static_cast<double>(p[0]) - 128.0) / 128.0;
      break;
    case 16:
      return static_cast<double>(static_cast<std::int16_t>(get_u16(p))) / 32768.0;
    case 24: {
      std::int32_t v = static_cast<std::int32_t>(p[0] | (p[1] << 8) | (p[2] << 16));
      if (v & 0x800000) v -= 0x1000000;
      return static_cast<double>(v) / 8388608.0;
    }
    case 32:
      if (f.codec == kFloat) return static_cast<double>(detail::get_f32(p));
      return static_cast<double>(static_cast<std::int32_t>(get_u32(p))) / 2147483648.0;
    case 64:
      if (f.codec == kFloat) {
        const std::uint64_t v = static_cast<std::uint64_t>(get_u32(p)) | (static_cast<std::uint64_t>(get_u32(p + 4)) << 32);
        double d;
        std::memcpy(&d, &v, 8);
        return d;
      }
      break;
  }
  throw DataError("unsupported sample layout");
}

int bytes_per_sample(SampleFormat f) {
  switch (f) {
    case SampleFormat::pcm16: return 2;
    case SampleFormat::pcm24: return 3;
    case SampleFormat::float32:
    case SampleFormat::pcm32: return 4;
  }
  return 4;
}

}  // namespace

double soft_clip(double x) {
  const double a = std::abs(x);
  if (a <= kSoftClipKnee) return x;
  const double room = 1.0 - kSoftClipKnee;
  return std::copysign(kSoftClipKnee + room * std::tanh((a - kSoftClipKnee) / room), x);
}

AudioBuffer decode_wav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12) throw DataError("truncated RIFF header: " + std::to_string(bytes.size()) + " bytes");
  if (std::memcmp(bytes.data(), "RIFF", 4) != 0) throw DataError("missing RIFF magic");
  if (std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) throw DataError("RIFF form type is not WAVE");

  std::optional<Format> fmt;
  const std::uint8_t* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* h = bytes.data() + pos;
    const std::uint32_t size = get_u32(h + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = bytes.size() - body;
    if (std::memcmp(h, "fmt ", 4) == 0) {
      if (size > avail) throw DataError("fmt chunk runs past the end of the file");
      fmt = parse_fmt(h + 8, size);
    } else if (std::memcmp(h, "data", 4) == 0) {
      // Streams written without a final size often leave a short count
      // or 0xffffffff; take what is there.
      data = h + 8;
      data_size = std::min<std::size_t>(size, avail);
      if (size > avail)
        spdlog::warn("data chunk declares {} bytes but {} remain; reading what is present", size, avail);
      if (fmt) break;
    }
    if (size > avail) break;
    pos = body + size + (size & 1u);
  }
  if (!fmt) throw DataError("missing fmt chunk");
  if (!data) throw DataError("missing data chunk");

  const std::size_t frames = data_size / fmt->block_align;
  if (frames == 0) throw DataError("data chunk holds no samples");
  const std::size_t width = fmt->bits / 8;

  AudioBuffer out;
  out.sample_rate = fmt->sample_rate;
  out.source_channels = fmt->channels;
  out.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < fmt->channels; ++c) acc += sample_at(data + i * fmt->block_align + c * width, *fmt);
    const double v = fmt->channels == 1 ? acc : acc / fmt->channels;
    if (!std::isfinite(v)) throw DataError("non-finite sample at frame " + std::to_string(i));
    out.samples[i] = v;
  }
  if (fmt->channels > 1) spdlog::warn("downmixing {} channels to mono by averaging", fmt->channels);
  return out;
}

AudioBuffer read_wav(const std::filesystem::path& path) {
  try {
    return decode_wav(detail::read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_wav(const AudioBuffer& buffer, const WavWriteOptions& options) {
  const auto& x = buffer.samples;
  double peak = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) throw NumericalError("non-finite sample at index " + std::to_string(i));
    peak = std::max(peak, std::abs(x[i]));
  }
  const bool is_float = options.format == SampleFormat::float32;
  if (peak > 1.0) {
    if (is_float)
      spdlog::warn("peak {:.3f} exceeds full scale; kept unclipped in float output", peak);
    else
      spdlog::warn("peak {:.3f} exceeds full scale; soft-clipping above {}", peak, kSoftClipKnee);
  }
  if (!(buffer.sample_rate > 0.0) || buffer.sample_rate > std::numeric_limits<std::uint32_t>::max())
    throw DataError("sample rate out of range for WAV");

  const int width = bytes_per_sample(options.format);
  const std::uint64_t data_bytes = static_cast<std::uint64_t>(x.size()) * static_cast<std::uint64_t>(width);
  if (data_bytes > 0xffffffffull - 36) throw DataError("audio too long for a RIFF file");

  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  detail::put_u32(out, static_cast<std::uint32_t>(36 + data_bytes));
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  detail::put_u32(out, 16);
  detail::put_u16(out, is_float ? kFloat : kPcm);
  detail::put_u16(out, 1);
  const auto rate = static_cast<std::uint32_t>(std::lround(buffer.sample_rate));
  detail::put_u32(out, rate);
  detail::put_u32(out, rate * static_cast<std::uint32_t>(width));
  detail::put_u16(out, static_cast<std::uint16_t>(width));
  detail::put_u16(out, static_cast<std::uint16_t>(8 * width));
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  detail::put_u32(out, static_cast<std::uint32_t>(data_bytes));

  if (is_float) {
    for (double v : x) detail::put_f32(out, static_cast<float>(v));
    return out;
  }
  const double scale = std::ldexp(1.0, 8 * width - 1);
  const double lo = -scale, hi = scale - 1.0;
  std::mt19937_64 rng(options.dither_seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const bool clip = peak > 1.0;
  for (double v : x) {
    double q = (clip ? soft_clip(v) : v) * scale;
    if (options.dither) q += u(rng) - u(rng);
    const auto s = static_cast<std::int64_t>(std::clamp(std::nearbyint(q), lo, hi));
    const auto bits = static_cast<std::uint32_t>(s);
    for (int b = 0; b < width; ++b) out.push_back(static_cast<std::uint8_t>((bits >> (8 * b)) & 0xff));
  }
  return out;
}

void write_wav(const AudioBuffer& buffer, const std::filesystem::path& path, const WavWriteOptions& options) {
  detail::write_file(path, encode_wav(buffer, options));
}

}  // namespace tfs::io
