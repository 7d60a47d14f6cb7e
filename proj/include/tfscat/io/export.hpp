#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tfscat/filterbank.hpp"
#include "tfscat/io/config.hpp"
#include "tfscat/scattering.hpp"
#include "tfscat/synthesis.hpp"

namespace tfs::io {

/// "frame,lambda_hz,value" rows for the valid frames only.
std::string spectrogram_csv(const Scalogram& s);
/// "iteration,total,first_order,second_order,accepted,mu".
std::string loss_trace_csv(const std::vector<TraceEntry>& trace);
/// "frequency_hz,lp" over the non-negative frequencies.
std::string littlewood_paley_csv(const LittlewoodPaley& lp);

void write_text(const std::filesystem::path& path, const std::string& text);
/// Writes `<artifact>.json` next to the artifact.
void write_sidecar(const std::filesystem::path& artifact, const json& provenance);

}  // namespace tfs::io
