#include "tfscat/io/container.hpp"

#include <cmath>
#include <cstring>
#include <limits>

#include "bytes.hpp"
#include "tfscat/error.hpp"

namespace tfs::io {

namespace {

constexpr char kMagic[4] = {'S', 'C', 'T', '1'};

struct Framing {
  json header;
  std::span<const std::uint8_t> payload;
};

Framing split(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8) throw DataError("SCT1: file is " + std::to_string(bytes.size()) + " bytes, too short");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw DataError("SCT1: magic mismatch");
  const std::uint32_t len = detail::get_u32(bytes.data() + 4);
  if (len == 0) throw DataError("SCT1: empty header");
  if (len > kMaxHeaderBytes) throw DataError("SCT1: header length " + std::to_string(len) + " exceeds the limit");
  if (len > bytes.size() - 8)
    throw DataError("SCT1: header length " + std::to_string(len) + " runs past the end of the file");
  const std::string_view text(reinterpret_cast<const char*>(bytes.data() + 8), len);
  json header = parse_json(text, "SCT1 header");
  if (!header.is_object()) throw DataError("SCT1: header must be a JSON object");
  return {std::move(header), bytes.subspan(8 + len)};
}

std::size_t as_size(const json& v, const char* what) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    throw DataError(std::string("SCT1: ") + what + " must be a non-negative integer");
  const auto u = v.get<std::uint64_t>();
  if (u > std::numeric_limits<std::uint32_t>::max())
    throw DataError(std::string("SCT1: ") + what + " is implausibly large");
  return static_cast<std::size_t>(u);
}

double as_number(const json& v, const char* what) {
  if (!v.is_number()) throw DataError(std::string("SCT1: ") + what + " must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw DataError(std::string("SCT1: ") + what + " must be finite");
  return d;
}

const json& field(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) throw DataError(std::string("SCT1: header is missing '") + key + "'");
  return *it;
}

std::vector<std::size_t> shape_of(const json& j, const char* key, std::size_t rank) {
  const json& s = field(j, key);
  if (!s.is_array() || s.size() != rank)
    throw DataError(std::string("SCT1: shape.") + key + " must have " + std::to_string(rank) + " entries");
  std::vector<std::size_t> out;
  for (const auto& d : s) out.push_back(as_size(d, "shape entry"));
  return out;
}

}  // namespace

std::vector<std::uint8_t> encode_coefficients(const CoefficientFile& file) {
  const auto& s1 = file.coefficients.s1;
  const auto& s2 = file.coefficients.s2;
  if (s2.paths.empty()) throw DataError("SCT1: refusing to write an empty path table");
  if (s1.values.size() != s1.frames * s1.n_lambda || s2.values.size() != s2.paths.size() * s2.path_size())
    throw DataError("SCT1: tensor sizes disagree with their shapes");
  if (s1.frames != s2.frames || s1.n_lambda != s2.n_lambda)
    throw DataError("SCT1: S1 and S2 shapes disagree");
  if (s1.lambda_grid.size() != s1.n_lambda) throw DataError("SCT1: lambda grid length disagrees with S1");

  json paths = json::array();
  for (const auto& p : s2.paths) paths.push_back(to_json(p));
  const json header = {{"format", "SCT1"},
                       {"dtype", "float32"},
                       {"endianness", "little"},
                       {"config", to_json(file.config)},
                       {"signal_length", file.signal_length},
                       {"frame_rate", s1.frame_rate},
                       {"valid_frames", s1.valid_frames},
                       {"lambda_grid", s1.lambda_grid},
                       {"paths", paths},
                       {"shape", {{"s1", {s1.frames, s1.n_lambda}}, {"s2", {s2.paths.size(), s2.frames, s2.n_lambda}}}},
                       {"provenance", file.provenance}};
  const std::string text = header.dump();
  if (text.size() > kMaxHeaderBytes) throw DataError("SCT1: header too large");

  std::vector<std::uint8_t> out;
  out.reserve(8 + text.size() + 4 * (s1.values.size() + s2.values.size()));
  out.insert(out.end(), kMagic, kMagic + 4);
  detail::put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  for (const auto* v : {&s1.values, &s2.values}) {
    for (double x : *v) {
      const float f = static_cast<float>(x);
      if (!std::isfinite(f)) throw NumericalError("SCT1: coefficient not representable as float32");
      detail::put_f32(out, f);
    }
  }
  return out;
}

json decode_header(std::span<const std::uint8_t> bytes) { return split(bytes).header; }

CoefficientFile decode_coefficients(std::span<const std::uint8_t> bytes) {
  auto [h, payload] = split(bytes);

  const json& dtype = field(h, "dtype");
  if (dtype != "float32") throw DataError("SCT1: unsupported dtype " + dtype.dump());

  CoefficientFile file;
  try {
    file.config = scattering_config_from_json(field(h, "config"));
  } catch (const ConfigError& e) {
    throw DataError(std::string("SCT1: bad config: ") + e.what());
  }
  file.signal_length = as_size(field(h, "signal_length"), "signal_length");
  if (const auto it = h.find("provenance"); it != h.end()) file.provenance = *it;

  const json& shape = field(h, "shape");
  if (!shape.is_object()) throw DataError("SCT1: shape must be an object");
  const auto s1_shape = shape_of(shape, "s1", 2);
  const auto s2_shape = shape_of(shape, "s2", 3);
  const std::size_t frames = s1_shape[0], n_lambda = s1_shape[1], n_paths = s2_shape[0];
  if (s2_shape[1] != frames || s2_shape[2] != n_lambda) throw DataError("SCT1: S1 and S2 shapes disagree");
  if (frames == 0 || n_lambda == 0) throw DataError("SCT1: zero-sized tensor");

  const json& paths = field(h, "paths");
  if (!paths.is_array()) throw DataError("SCT1: path table must be an array");
  if (paths.empty()) throw DataError("SCT1: empty path table");
  if (paths.size() != n_paths)
    throw DataError("SCT1: path table has " + std::to_string(paths.size()) + " entries, shape says " +
                    std::to_string(n_paths));

  const json& grid = field(h, "lambda_grid");
  if (!grid.is_array() || grid.size() != n_lambda) throw DataError("SCT1: lambda grid length disagrees with shape");

  // All factors are below 2^32, so these products fit in 64 bits only after
  // checking one step at a time.
  const unsigned __int128 s1_count = static_cast<unsigned __int128>(frames) * n_lambda;
  const unsigned __int128 total = s1_count * (1 + static_cast<unsigned __int128>(n_paths));
  if (total * 4 != payload.size())
    throw DataError("SCT1: payload is " + std::to_string(payload.size()) + " bytes but the shape needs " +
                    (total * 4 > std::numeric_limits<std::uint64_t>::max()
                         ? std::string("more than 2^64")
                         : std::to_string(static_cast<std::uint64_t>(total * 4))));

  const double frame_rate = as_number(field(h, "frame_rate"), "frame_rate");
  if (!(frame_rate > 0.0)) throw DataError("SCT1: frame_rate must be positive");
  const std::size_t valid = as_size(field(h, "valid_frames"), "valid_frames");
  if (valid > frames) throw DataError("SCT1: valid_frames exceeds frames");

  auto& s1 = file.coefficients.s1;
  auto& s2 = file.coefficients.s2;
  s1.frames = s2.frames = frames;
  s1.n_lambda = s2.n_lambda = n_lambda;
  s1.frame_rate = s2.frame_rate = frame_rate;
  s1.valid_frames = s2.valid_frames = valid;
  s2.order = TensorOrder::S2;
  for (const auto& g : grid) s1.lambda_grid.push_back(as_number(g, "lambda grid entry"));
  for (const auto& p : paths) s2.paths.push_back(path_from_json(p));

  const std::size_t n1 = static_cast<std::size_t>(s1_count);
  s1.values.resize(n1);
  s2.values.resize(n1 * n_paths);
  const std::uint8_t* p = payload.data();
  for (auto* v : {&s1.values, &s2.values}) {
    for (auto& x : *v) {
      const float f = detail::get_f32(p);
      p += 4;
      if (!std::isfinite(f)) throw DataError("SCT1: payload holds a non-finite value");
      x = f;
    }
  }
  return file;
}

void write_coefficients(const CoefficientFile& file, const std::filesystem::path& path) {
  detail::write_file(path, encode_coefficients(file));
}

CoefficientFile read_coefficients(const std::filesystem::path& path) {
  try {
    return decode_coefficients(detail::read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

json read_header(const std::filesystem::path& path) {
  try {
    return decode_header(detail::read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace tfs::io
