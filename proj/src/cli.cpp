#include "tfscat/cli.hpp"

#include <atomic>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include <CLI11.hpp>
#include <spdlog/pattern_formatter.h>
#include <spdlog/spdlog.h>

#include "tfscat/error.hpp"
#include "tfscat/io/config.hpp"
#include "tfscat/io/container.hpp"
#include "tfscat/io/export.hpp"
#include "tfscat/io/wav.hpp"
#include "tfscat/parallel.hpp"
#include "tfscat/scalerate.hpp"

namespace tfs {

namespace {

using io::json;
namespace fs = std::filesystem;

thread_local std::string g_job_tag;

// %* in the log pattern expands to the tag of the job running on this thread.
class JobTagFlag : public spdlog::custom_flag_formatter {
 public:
  void format(const spdlog::details::log_msg&, const std::tm&, spdlog::memory_buf_t& dest) override {
    if (g_job_tag.empty()) return;
    dest.push_back('[');
    dest.append(g_job_tag.data(), g_job_tag.data() + g_job_tag.size());
    dest.append(std::string_view("] "));
  }
  std::unique_ptr<custom_flag_formatter> clone() const override { return std::make_unique<JobTagFlag>(); }
};

void install_log_format() {
  auto f = std::make_unique<spdlog::pattern_formatter>();
  f->add_flag<JobTagFlag>('*').set_pattern("[%l] %*%v");
  spdlog::set_formatter(std::move(f));
}

struct JobTag {
  explicit JobTag(std::string tag) { g_job_tag = std::move(tag); }
  ~JobTag() { g_job_tag.clear(); }
};

// Flags bind to a scratch JobConfig; after parsing, only the flags that were
// given are copied over the config file values.
class Overrides {
 public:
  template <typename Access>
  CLI::Option* option(CLI::App* app, const std::string& name, Access access, const std::string& help) {
    CLI::Option* opt = app->add_option(name, access(flags_), help);
    apply_.emplace_back(opt, [access](io::JobConfig& dst, io::JobConfig& src) { access(dst) = access(src); });
    return opt;
  }
  template <typename Access>
  CLI::Option* flag(CLI::App* app, const std::string& name, Access access, const std::string& help) {
    CLI::Option* opt = app->add_flag(name, access(flags_), help);
    apply_.emplace_back(opt, [access](io::JobConfig& dst, io::JobConfig& src) { access(dst) = access(src); });
    return opt;
  }
  void apply(io::JobConfig& job) {
    for (auto& [opt, fn] : apply_)
      if (opt->count() > 0) fn(job, flags_);
  }
  bool given(const std::string& prefix) const {
    for (const auto& [opt, _] : apply_)
      if (opt->count() > 0 && opt->get_name().rfind(prefix, 0) == 0) return true;
    return false;
  }
  io::JobConfig& flags() { return flags_; }

 private:
  io::JobConfig flags_;
  std::vector<std::pair<CLI::Option*, std::function<void(io::JobConfig&, io::JobConfig&)>>> apply_;
};

struct Common {
  std::string config_path;
  std::vector<std::string> inputs;
};

void add_io_options(CLI::App* sub, Overrides& ov, Common& common, bool needs_output) {
  sub->add_option("--config", common.config_path, "JSON job file; flags override its values")
      ->check(CLI::ExistingFile);
  auto* o = ov.option(sub, "-o,--output", [](io::JobConfig& j) -> fs::path& { return j.output_dir; },
                      "Output directory");
  if (!needs_output) o->description("Output directory (optional)");
  ov.option(sub, "--threads", [](io::JobConfig& j) -> std::size_t& { return j.threads; },
            "Worker threads (default $TFS_THREADS or all cores)");
  ov.option(sub, "--jobs", [](io::JobConfig& j) -> std::size_t& { return j.jobs; },
            "Input files processed concurrently");
}

void add_scattering_options(CLI::App* sub, Overrides& ov) {
  ov.option(sub, "--Q", [](io::JobConfig& j) -> int& { return j.scattering.Q; }, "Filters per octave");
  ov.option(sub, "--octaves", [](io::JobConfig& j) -> int& { return j.scattering.octaves; }, "Octaves");
  ov.option(sub, "--T", [](io::JobConfig& j) -> double& { return j.scattering.T; },
            "Averaging scale in seconds (0: 8192 samples)");
  ov.option(sub, "--F", [](io::JobConfig& j) -> double& { return j.scattering.F; },
            "Transposition invariance in octaves (0: off)");
  ov.option(sub, "--hop", [](io::JobConfig& j) -> std::size_t& { return j.scattering.u1_hop; },
            "Scalogram hop in samples (power of two; 0: automatic)");
  ov.option(sub, "--q-mod", [](io::JobConfig& j) -> int& { return j.scattering.q_mod; }, "Rate filters per octave");
  ov.option(sub, "--alpha-max", [](io::JobConfig& j) -> double& { return j.scattering.alpha_max; },
            "Highest rate in Hz (0: quarter of the scalogram rate)");
  ov.flag(sub, "--spiral", [](io::JobConfig& j) -> bool& { return j.scattering.spiral_enabled; },
          "Add spiral paths");
}

void add_synthesis_options(CLI::App* sub, Overrides& ov) {
  ov.option(sub, "--iterations", [](io::JobConfig& j) -> int& { return j.synthesis.iterations; }, "Descent steps");
  ov.option(sub, "--momentum", [](io::JobConfig& j) -> double& { return j.synthesis.momentum; }, "Momentum m");
  ov.option(sub, "--rate", [](io::JobConfig& j) -> double& { return j.synthesis.initial_rate; },
            "Initial learning rate");
  ov.option(sub, "--grow", [](io::JobConfig& j) -> double& { return j.synthesis.bold_driver.grow; },
            "Rate factor after an accepted step");
  ov.option(sub, "--shrink", [](io::JobConfig& j) -> double& { return j.synthesis.bold_driver.shrink; },
            "Rate factor after a rejected step");
  ov.option(sub, "--seed", [](io::JobConfig& j) -> std::uint64_t& { return j.synthesis.seed; },
            "Seed of the initial noise");
  ov.option(sub, "--snapshot-every", [](io::JobConfig& j) -> int& { return j.synthesis.snapshot_every; },
            "Write y_iterNNN.wav every n iterations (0: off)");
  ov.flag(sub, "--no-loss-trace{false}", [](io::JobConfig& j) -> bool& { return j.exports.loss_trace; },
          "Skip loss_trace.csv");
}

struct OutputFormat {
  std::string name = "float32";
  bool dither = false;
};

io::WavWriteOptions wav_options(const OutputFormat& f, std::uint64_t seed) {
  io::WavWriteOptions o;
  if (f.name == "float32") o.format = io::SampleFormat::float32;
  else if (f.name == "pcm16") o.format = io::SampleFormat::pcm16;
  else if (f.name == "pcm24") o.format = io::SampleFormat::pcm24;
  else throw ConfigError("unknown output format " + f.name);
  o.dither = f.dither;
  o.dither_seed = seed;
  return o;
}

void add_format_options(CLI::App* sub, OutputFormat& f) {
  sub->add_option("--format", f.name, "Output sample format")
      ->check(CLI::IsMember({"float32", "pcm16", "pcm24"}));
  sub->add_flag("--dither", f.dither, "TPDF dither for integer formats");
}

io::JobConfig resolve_job(const Common& common, Overrides& ov) {
  io::JobConfig job;
  if (!common.config_path.empty()) {
    try {
      job = io::job_config_from_json(io::read_json(common.config_path), job);
    } catch (const ConfigError& e) {
      throw ConfigError(common.config_path + ": " + e.what());
    }
  }
  ov.apply(job);
  if (!common.inputs.empty()) {
    job.inputs.clear();
    for (const auto& p : common.inputs) job.inputs.emplace_back(p);
  }
  if (job.synthesis.snapshot_every > 0) job.exports.snapshots = true;
  else if (job.exports.snapshots) job.synthesis.snapshot_every = 10;
  if (job.threads > 0) set_thread_count(job.threads);
  return job;
}

bool has_magic(const fs::path& p, const char* magic) {
  std::ifstream in(p, std::ios::binary);
  char buf[4] = {};
  in.read(buf, 4);
  return in.gcount() == 4 && std::memcmp(buf, magic, 4) == 0;
}

fs::path job_dir(const io::JobConfig& job, const fs::path& input) {
  if (job.inputs.size() == 1) return job.output_dir;
  auto d = job.output_dir / input.stem();
  fs::create_directories(d);
  return d;
}

// Runs fn(i) for each input, `jobs` at a time. The first failure, in input
// order, is rethrown after all jobs finish.
void for_each_input(const io::JobConfig& job, const std::function<void(std::size_t)>& fn) {
  std::set<std::string> stems;
  for (const auto& p : job.inputs)
    if (!stems.insert(p.stem().string()).second && job.inputs.size() > 1)
      throw ConfigError("two inputs share the name " + p.stem().string() + "; outputs would collide");
  const std::size_t n = job.inputs.size();
  std::vector<std::exception_ptr> errors(n);
  auto run = [&](std::size_t i) {
    JobTag tag(job.inputs[i].stem().string());
    try {
      fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const std::size_t workers = std::min(job.jobs, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) run(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) run(i);
      });
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

json base_provenance(const std::string& command, const io::JobConfig& job, const fs::path& input) {
  return io::provenance({{"command", command}, {"input", input.string()}, {"job", io::to_json(job)}});
}

// The analysis runs at the file's rate; T = 0 keeps 8192 samples at that rate.
ScatteringConfig config_for(const io::JobConfig& job, const AudioBuffer& x) {
  ScatteringConfig cfg = job.scattering;
  cfg.sample_rate = x.sample_rate;
  return cfg;
}

void write_audio(const AudioBuffer& y, const fs::path& path, const io::WavWriteOptions& wopt, const json& prov) {
  io::write_wav(y, path, wopt);
  io::write_sidecar(path, prov);
}

struct SynthesisOutputs {
  fs::path dir;
  json provenance;
  io::WavWriteOptions wav;
  const io::JobConfig* job;
};

SnapshotCallback snapshot_writer(const SynthesisOutputs& o) {
  if (!o.job->exports.snapshots) return {};
  return [o](const SynthesisState& s) {
    json p = o.provenance;
    p["iteration"] = s.iteration;
    p["loss"] = s.current.total;
    write_audio(s.iterate, o.dir / fmt::format("y_iter{:03}.wav", s.iteration), o.wav, p);
  };
}

void write_synthesis(const SynthesisOutputs& o, const AudioBuffer& y, const SynthesisState& state) {
  json p = o.provenance;
  p["iterations_run"] = state.iteration;
  p["final_loss"] = {{"total", state.current.total},
                     {"first_order", state.current.first_order},
                     {"second_order", state.current.second_order}};
  write_audio(y, o.dir / "y.wav", o.wav, p);
  if (o.job->exports.loss_trace) {
    io::write_text(o.dir / "loss_trace.csv", io::loss_trace_csv(state.loss_trace));
    io::write_sidecar(o.dir / "loss_trace.csv", p);
  }
  spdlog::info("{} iterations, loss {:.6g} -> {:.6g}", state.iteration,
               state.loss_trace.empty() ? state.current.total : state.loss_trace.front().loss.total,
               state.current.total);
}

int cmd_analyze(const io::JobConfig& job) {
  job.validate();
  for_each_input(job, [&](std::size_t i) {
    const auto& in = job.inputs[i];
    const AudioBuffer x = io::read_wav(in);
    const ScatteringConfig cfg = config_for(job, x);
    const ScatteringNetwork net(cfg, x.size());
    ScatterResult r = scatter(x.samples, net);
    const fs::path dir = job_dir(job, in);
    json p = base_provenance("analyze", job, in);
    p["scattering"] = io::to_json(cfg);
    if (job.exports.spectrogram) {
      io::write_text(dir / "scalogram.csv", io::spectrogram_csv(r.u1));
      io::write_sidecar(dir / "scalogram.csv", p);
    }
    if (job.exports.coefficients) {
      io::CoefficientFile file;
      file.config = cfg;
      file.signal_length = x.size();
      file.coefficients = {std::move(r.s1), std::move(r.s2)};
      file.provenance = p;
      io::write_coefficients(file, dir / "coefficients.sct");
    }
    spdlog::info("{} paths, {} frames x {} bands", net.paths().size(), net.frames(), net.n_lambda());
  });
  return 0;
}

int cmd_synthesize(const io::JobConfig& job, Overrides& ov, const OutputFormat& fmt_opt) {
  job.validate();
  for_each_input(job, [&](std::size_t i) {
    const auto& in = job.inputs[i];
    SynthesisOutputs o{job_dir(job, in), base_provenance("synthesize", job, in),
                       wav_options(fmt_opt, job.synthesis.seed), &job};
    if (has_magic(in, "SCT1")) {
      const io::CoefficientFile file = io::read_coefficients(in);
      if (ov.given("--Q") || ov.given("--octaves") || ov.given("--T") || ov.given("--F") || ov.given("--hop") ||
          ov.given("--q-mod") || ov.given("--alpha-max") || ov.given("--spiral"))
        spdlog::warn("scattering flags are ignored for coefficient targets; using the stored configuration");
      const ScatteringNetwork net(file.config, file.signal_length);
      const auto& t = file.coefficients;
      if (t.s1.frames != net.frames() || t.s1.n_lambda != net.n_lambda() || t.s2.paths != net.paths())
        throw DataError(in.string() + ": stored tensors do not match the network rebuilt from the stored config");
      o.provenance["scattering"] = io::to_json(file.config);
      auto r = synthesize(t, net, job.synthesis, snapshot_writer(o));
      r.output.sample_rate = file.config.sample_rate;
      write_synthesis(o, r.output, r.state);
    } else {
      const AudioBuffer x = io::read_wav(in);
      const ScatteringConfig cfg = config_for(job, x);
      o.provenance["scattering"] = io::to_json(cfg);
      auto r = synthesize(x, cfg, job.synthesis, snapshot_writer(o));
      write_synthesis(o, r.output, r.state);
    }
  });
  return 0;
}

int cmd_effect(const io::JobConfig& job, const OutputFormat& fmt_opt) {
  if (!job.effect) throw ConfigError("effect needs --fx");
  job.validate();
  const CoefficientFunctional f = io::read_functional(*job.effect);
  for_each_input(job, [&](std::size_t i) {
    const auto& in = job.inputs[i];
    const AudioBuffer x = io::read_wav(in);
    const ScatteringConfig cfg = config_for(job, x);
    SynthesisOutputs o{job_dir(job, in), base_provenance("effect", job, in), wav_options(fmt_opt, job.synthesis.seed),
                       &job};
    o.provenance["scattering"] = io::to_json(cfg);
    o.provenance["effect"] = io::to_json(f);
    EffectResult r = render_effect(x, f, cfg, job.synthesis, snapshot_writer(o));
    o.provenance["applied"] = r.provenance;
    write_synthesis(o, r.output, r.state);
  });
  return 0;
}

struct BankOptions {
  double sample_rate = 44100.0;
  int Q = 12;
  int octaves = 9;
  std::size_t length = 1u << 16;
  double T = 0.0;
  std::string output;
};

int cmd_check_bank(const BankOptions& b, std::ostream& out) {
  ScatteringConfig cfg;
  cfg.sample_rate = b.sample_rate;
  cfg.Q = b.Q;
  cfg.octaves = b.octaves;
  cfg.T = b.T;
  cfg.validate();
  if (b.length < 16) throw ConfigError("--length must be at least 16");
  const FilterBank bank = build_cqt_bank(b.sample_rate, b.Q, b.octaves, b.length, 1.0 / cfg.resolved_T());
  const LittlewoodPaley lp = littlewood_paley(bank);
  const bool ok = lp.upper_bound <= 1.0 + 1e-6 && lp.lower_bound >= 0.9;
  json report = {{"sample_rate", b.sample_rate}, {"Q", b.Q},          {"octaves", b.octaves},
                 {"length", b.length},           {"filters", bank.filters.size()},
                 {"lp_min", lp.lower_bound},     {"lp_max", lp.upper_bound}, {"frame_ok", ok}};
  if (!b.output.empty()) {
    const fs::path dir(b.output);
    fs::create_directories(dir);
    io::write_text(dir / "lp_profile.csv", io::littlewood_paley_csv(lp));
    io::write_sidecar(dir / "lp_profile.csv", io::provenance({{"command", "check-bank"}, {"report", report}}));
    report["profile"] = (dir / "lp_profile.csv").string();
  }
  out << report.dump() << "\n";
  return 0;
}

int cmd_info(const std::string& path, std::ostream& out) {
  const fs::path p(path);
  if (has_magic(p, "SCT1")) {
    const io::CoefficientFile file = io::read_coefficients(p);  // full validation
    json h = io::read_header(p);
    h["payload"] = {{"s1_values", file.coefficients.s1.values.size()},
                    {"s2_values", file.coefficients.s2.values.size()}};
    out << h.dump(2) << "\n";
  } else if (has_magic(p, "RIFF")) {
    const AudioBuffer x = io::read_wav(p);
    out << json{{"format", "WAV"},
                {"sample_rate", x.sample_rate},
                {"channels", x.source_channels},
                {"samples", x.size()},
                {"duration", x.duration()}}
               .dump(2)
        << "\n";
  } else {
    throw DataError(path + ": neither an SCT1 container nor a RIFF/WAVE file");
  }
  return 0;
}

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::usage: return 1;
    case ErrorKind::data: return 2;
    case ErrorKind::numerical: return 3;
  }
  return 2;
}

int fail(std::ostream& err, const char* kind, int code, const std::string& message) {
  err << json{{"error", kind}, {"exit_code", code}, {"message", message}}.dump() << "\n";
  return code;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  install_log_format();
  CLI::App app{"Time-frequency scattering analysis, resynthesis and effects", "tfscat"};
  app.set_version_flag("--version", io::kToolVersion);
  app.require_subcommand(1);

  Overrides ov;
  Common common;
  OutputFormat out_format;
  BankOptions bank;
  std::string info_path;

  auto* analyze = app.add_subcommand("analyze", "Scatter WAV files; writes coefficients.sct and scalogram.csv");
  analyze->add_option("inputs", common.inputs, "Input WAV files")->check(CLI::ExistingFile);
  add_io_options(analyze, ov, common, true);
  add_scattering_options(analyze, ov);
  ov.flag(analyze, "--coeffs", [](io::JobConfig& j) -> bool& { return j.exports.coefficients; },
          "Write the S1/S2 container");
  ov.flag(analyze, "--no-spectrogram{false}", [](io::JobConfig& j) -> bool& { return j.exports.spectrogram; },
          "Skip scalogram.csv");

  auto* synth = app.add_subcommand("synthesize", "Resynthesize from a WAV file or an SCT1 container");
  synth->add_option("inputs", common.inputs, "Target WAV or .sct files")->check(CLI::ExistingFile);
  add_io_options(synth, ov, common, true);
  add_scattering_options(synth, ov);
  add_synthesis_options(synth, ov);
  add_format_options(synth, out_format);

  auto* effect = app.add_subcommand("effect", "Resynthesize against transformed coefficients");
  effect->add_option("inputs", common.inputs, "Input WAV files")->check(CLI::ExistingFile);
  add_io_options(effect, ov, common, true);
  add_scattering_options(effect, ov);
  add_synthesis_options(effect, ov);
  add_format_options(effect, out_format);
  ov.option(effect, "--fx", [](io::JobConfig& j) -> std::optional<fs::path>& { return j.effect; },
            "Effect description (JSON)");

  auto* check = app.add_subcommand("check-bank", "Littlewood-Paley report of a wavelet bank");
  check->add_option("--sample-rate", bank.sample_rate, "Sample rate in Hz");
  check->add_option("--Q", bank.Q, "Filters per octave");
  check->add_option("--octaves", bank.octaves, "Octaves");
  check->add_option("--length", bank.length, "Fourier length");
  check->add_option("--T", bank.T, "Averaging scale in seconds (0: 8192 samples)");
  check->add_option("-o,--output", bank.output, "Directory for lp_profile.csv");

  auto* info = app.add_subcommand("info", "Print the header of an SCT1 container or WAV file");
  info->add_option("file", info_path, "File to inspect")->required()->check(CLI::ExistingFile);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    return fail(err, "usage", 1, e.what());
  }

  try {
    if (check->parsed()) return cmd_check_bank(bank, out);
    if (info->parsed()) return cmd_info(info_path, out);
    io::JobConfig job = resolve_job(common, ov);
    if (job.inputs.empty()) throw ConfigError("no input files");
    if (analyze->parsed()) return cmd_analyze(job);
    if (synth->parsed()) return cmd_synthesize(job, ov, out_format);
    return cmd_effect(job, out_format);
  } catch (const Error& e) {
    const int code = exit_code(e.kind());
    return fail(err, code == 1 ? "usage" : code == 2 ? "data" : "numerical", code, e.what());
  } catch (const fs::filesystem_error& e) {
    return fail(err, "data", 2, e.what());
  } catch (const std::bad_alloc&) {
    return fail(err, "data", 2, "out of memory");
  } catch (const std::exception& e) {
    return fail(err, "data", 2, e.what());
  }
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace tfs
