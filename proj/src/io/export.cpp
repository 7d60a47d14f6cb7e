#include "tfscat/io/export.hpp"

#include <spdlog/fmt/fmt.h>

#include "bytes.hpp"

namespace tfs::io {

std::string spectrogram_csv(const Scalogram& s) {
  std::string out = "frame,lambda_hz,value\n";
  const std::size_t frames = std::min(s.valid_frames, s.frames);
  for (std::size_t t = 0; t < frames; ++t)
    for (std::size_t l = 0; l < s.n_lambda; ++l) {
      const double hz = l < s.lambda_grid.size() ? s.lambda_grid[l] : 0.0;
      fmt::format_to(std::back_inserter(out), "{},{:.6g},{:.9g}\n", t, hz, s.at(t, l));
    }
  return out;
}

std::string loss_trace_csv(const std::vector<TraceEntry>& trace) {
  std::string out = "iteration,total,first_order,second_order,accepted,mu\n";
  for (const auto& e : trace)
    fmt::format_to(std::back_inserter(out), "{},{:.17g},{:.17g},{:.17g},{},{:.17g}\n", e.iteration, e.loss.total,
                   e.loss.first_order, e.loss.second_order, e.accepted ? 1 : 0, e.mu);
  return out;
}

std::string littlewood_paley_csv(const LittlewoodPaley& lp) {
  std::string out = "frequency_hz,lp\n";
  for (std::size_t k = 0; k < lp.profile.size() && k < lp.frequencies.size(); ++k) {
    if (lp.frequencies[k] < 0.0) continue;
    fmt::format_to(std::back_inserter(out), "{:.9g},{:.12g}\n", lp.frequencies[k], lp.profile[k]);
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  detail::write_file(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

void write_sidecar(const std::filesystem::path& artifact, const json& provenance) {
  auto p = artifact;
  p += ".json";
  write_text(p, provenance.dump(2) + "\n");
}

}  // namespace tfs::io
