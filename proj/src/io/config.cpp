#include "tfscat/io/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "bytes.hpp"
#include "tfscat/error.hpp"

namespace tfs::io {

namespace {

void require_object(const json& j, const std::string& what) {
  if (!j.is_object()) throw ConfigError(what + " must be a JSON object");
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& what) {
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw ConfigError("unknown key '" + key + "' in " + what);
}

// Reads j[key] into out when present, checking the JSON type.
template <typename T>
void read_key(const json& j, const char* key, T& out, const std::string& what) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return;
  const std::string name = what + "." + key;
  if constexpr (std::is_same_v<T, bool>) {
    if (!it->is_boolean()) throw ConfigError(name + " must be a boolean");
    out = it->get<bool>();
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!it->is_number()) throw ConfigError(name + " must be a number");
    out = it->get<double>();
    if (!std::isfinite(out)) throw ConfigError(name + " must be finite");
  } else if constexpr (std::is_integral_v<T>) {
    if (!it->is_number_integer()) throw ConfigError(name + " must be an integer");
    if constexpr (std::is_unsigned_v<T>) {
      if (it->is_number_unsigned() || it->template get<std::int64_t>() >= 0)
        out = static_cast<T>(it->template get<std::uint64_t>());
      else
        throw ConfigError(name + " must be non-negative");
    } else {
      const auto v = it->template get<std::int64_t>();
      if (v < std::numeric_limits<T>::min() || v > std::numeric_limits<T>::max())
        throw ConfigError(name + " is out of range");
      out = static_cast<T>(v);
    }
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!it->is_string()) throw ConfigError(name + " must be a string");
    out = it->get<std::string>();
  } else {
    static_assert(sizeof(T) == 0, "unsupported key type");
  }
}

const char* tape_name(TapePolicy p) {
  switch (p) {
    case TapePolicy::none: return "none";
    case TapePolicy::store: return "store";
    case TapePolicy::recompute: return "recompute";
  }
  return "store";
}

const char* axis_name(ShiftAxis a) {
  switch (a) {
    case ShiftAxis::alpha: return "alpha";
    case ShiftAxis::beta: return "beta";
    case ShiftAxis::lambda: return "lambda";
  }
  return "alpha";
}

json schedule_to_json(const ScheduleSpec& s) {
  if (s.kind == ScheduleSpec::Kind::constant) return {{"kind", "constant"}, {"sigma", s.sigma}};
  return {{"kind", "sigmoid"}, {"tau", s.tau}, {"origin", s.origin}};
}

ScheduleSpec schedule_from_json(const json& j) {
  const std::string what = "schedule";
  require_object(j, what);
  std::string kind;
  read_key(j, "kind", kind, what);
  ScheduleSpec s;
  if (kind == "constant") {
    reject_unknown(j, {"kind", "sigma"}, what);
    s.kind = ScheduleSpec::Kind::constant;
    read_key(j, "sigma", s.sigma, what);
    if (s.sigma < -1.0 || s.sigma > 1.0) throw ConfigError("schedule.sigma must lie in [-1, 1]");
  } else if (kind == "sigmoid") {
    reject_unknown(j, {"kind", "tau", "origin"}, what);
    s.kind = ScheduleSpec::Kind::sigmoid;
    if (!j.contains("tau")) throw ConfigError("sigmoid schedule needs tau");
    read_key(j, "tau", s.tau, what);
    read_key(j, "origin", s.origin, what);
    if (!(s.tau > 0.0)) throw ConfigError("schedule.tau must be positive");
  } else {
    throw ConfigError("schedule.kind must be 'constant' or 'sigmoid'");
  }
  return s;
}

void check_order(int order, const std::string& what) {
  if (order < 0 || order > 2) throw ConfigError(what + ".order must be 0, 1 or 2");
}

}  // namespace

json to_json(const ScatteringConfig& cfg) {
  return {{"sample_rate", cfg.sample_rate},
          {"Q", cfg.Q},
          {"octaves", cfg.octaves},
          {"T", cfg.T},
          {"F", cfg.F},
          {"u1_hop", cfg.u1_hop},
          {"q_mod", cfg.q_mod},
          {"alpha_max", cfg.alpha_max},
          {"spiral", cfg.spiral_enabled},
          {"gammas", cfg.gammas}};
}

ScatteringConfig scattering_config_from_json(const json& j, ScatteringConfig cfg) {
  const std::string what = "scattering";
  require_object(j, what);
  reject_unknown(j, {"sample_rate", "Q", "octaves", "T", "F", "u1_hop", "q_mod", "alpha_max", "spiral", "gammas"},
                 what);
  read_key(j, "sample_rate", cfg.sample_rate, what);
  read_key(j, "Q", cfg.Q, what);
  read_key(j, "octaves", cfg.octaves, what);
  read_key(j, "T", cfg.T, what);
  read_key(j, "F", cfg.F, what);
  read_key(j, "u1_hop", cfg.u1_hop, what);
  read_key(j, "q_mod", cfg.q_mod, what);
  read_key(j, "alpha_max", cfg.alpha_max, what);
  read_key(j, "spiral", cfg.spiral_enabled, what);
  if (const auto it = j.find("gammas"); it != j.end()) {
    if (!it->is_array()) throw ConfigError("scattering.gammas must be an array");
    cfg.gammas.clear();
    for (const auto& g : *it) {
      if (!g.is_number()) throw ConfigError("scattering.gammas must hold numbers");
      cfg.gammas.push_back(g.get<double>());
    }
  }
  return cfg;
}

json to_json(const SynthesisOptions& o) {
  return {{"iterations", o.iterations},
          {"momentum", o.momentum},
          {"initial_rate", o.initial_rate},
          {"grow", o.bold_driver.grow},
          {"shrink", o.bold_driver.shrink},
          {"seed", o.seed},
          {"snapshot_every", o.snapshot_every},
          {"tape", tape_name(o.tape)}};
}

SynthesisOptions synthesis_options_from_json(const json& j, SynthesisOptions o) {
  const std::string what = "synthesis";
  require_object(j, what);
  reject_unknown(j, {"iterations", "momentum", "initial_rate", "grow", "shrink", "seed", "snapshot_every", "tape"},
                 what);
  read_key(j, "iterations", o.iterations, what);
  read_key(j, "momentum", o.momentum, what);
  read_key(j, "initial_rate", o.initial_rate, what);
  read_key(j, "grow", o.bold_driver.grow, what);
  read_key(j, "shrink", o.bold_driver.shrink, what);
  read_key(j, "seed", o.seed, what);
  read_key(j, "snapshot_every", o.snapshot_every, what);
  std::string tape;
  read_key(j, "tape", tape, what);
  if (tape == "store") o.tape = TapePolicy::store;
  else if (tape == "recompute") o.tape = TapePolicy::recompute;
  else if (!tape.empty()) throw ConfigError("synthesis.tape must be 'store' or 'recompute'");
  return o;
}

json to_json(const ScatteringPath& p) {
  json j = {{"alpha", p.alpha}, {"beta", p.beta}};
  if (p.gamma) j["gamma"] = *p.gamma;
  return j;
}

ScatteringPath path_from_json(const json& j) {
  if (!j.is_object()) throw DataError("path entry must be an object");
  ScatteringPath p;
  const auto number = [&](const char* key) {
    const auto it = j.find(key);
    if (it == j.end() || !it->is_number()) throw DataError(std::string("path entry needs numeric ") + key);
    const double v = it->get<double>();
    if (!std::isfinite(v)) throw DataError(std::string("path ") + key + " is not finite");
    return v;
  };
  p.alpha = number("alpha");
  p.beta = number("beta");
  if (j.contains("gamma")) p.gamma = number("gamma");
  return p;
}

json to_json(const CoefficientFunctional& f) {
  json prims = json::array();
  for (const auto& p : f.primitives) {
    std::visit(
        [&](const auto& v) {
          using V = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<V, BetaFlipMix>) {
            prims.push_back({{"type", "beta_flip_mix"}, {"schedule", schedule_to_json(v.schedule)}});
          } else if constexpr (std::is_same_v<V, Translate>) {
            prims.push_back({{"type", "translate"}, {"axis", axis_name(v.axis)}, {"steps", v.steps}, {"order", v.order}});
          } else {
            prims.push_back({{"type", "gain"}, {"factor", v.factor}, {"order", v.order}});
          }
        },
        p);
  }
  return {{"primitives", prims}};
}

CoefficientFunctional functional_from_json(const json& j) {
  require_object(j, "effect");
  reject_unknown(j, {"primitives", "description"}, "effect");
  const auto it = j.find("primitives");
  if (it == j.end() || !it->is_array()) throw ConfigError("effect needs a 'primitives' array");
  CoefficientFunctional f;
  for (std::size_t i = 0; i < it->size(); ++i) {
    const json& e = (*it)[i];
    const std::string what = "primitives[" + std::to_string(i) + "]";
    require_object(e, what);
    std::string type;
    read_key(e, "type", type, what);
    if (type == "beta_flip_mix") {
      reject_unknown(e, {"type", "schedule"}, what);
      if (!e.contains("schedule")) throw ConfigError(what + " needs a schedule");
      f.primitives.emplace_back(BetaFlipMix{schedule_from_json(e.at("schedule"))});
    } else if (type == "translate") {
      reject_unknown(e, {"type", "axis", "steps", "order"}, what);
      Translate t;
      std::string axis;
      read_key(e, "axis", axis, what);
      if (axis == "alpha") t.axis = ShiftAxis::alpha;
      else if (axis == "beta") t.axis = ShiftAxis::beta;
      else if (axis == "lambda") t.axis = ShiftAxis::lambda;
      else throw ConfigError(what + ".axis must be alpha, beta or lambda");
      read_key(e, "steps", t.steps, what);
      read_key(e, "order", t.order, what);
      check_order(t.order, what);
      f.primitives.emplace_back(t);
    } else if (type == "gain") {
      reject_unknown(e, {"type", "factor", "order"}, what);
      Gain g;
      read_key(e, "factor", g.factor, what);
      read_key(e, "order", g.order, what);
      if (!(g.factor >= 0.0)) throw ConfigError(what + ".factor must be non-negative");
      check_order(g.order, what);
      f.primitives.emplace_back(g);
    } else {
      throw ConfigError(what + ".type must be beta_flip_mix, translate or gain");
    }
  }
  return f;
}

json parse_json(std::string_view text, const std::string& what) {
  // Copying and printing recurse, so bound the depth at parse time.
  const auto limit = [](int depth, json::parse_event_t, json&) {
    if (depth > kMaxJsonDepth) throw DataError("nesting deeper than " + std::to_string(kMaxJsonDepth));
    return true;
  };
  try {
    return json::parse(text, limit);
  } catch (const json::exception& e) {
    throw DataError(what + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(what + ": " + e.what());
  }
}

json read_json(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  return parse_json(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()), path.string());
}

CoefficientFunctional read_functional(const std::filesystem::path& path) {
  try {
    return functional_from_json(read_json(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

json provenance(const json& extra) {
  json j = {{"tool", kToolName}, {"version", kToolVersion}};
  if (extra.is_object())
    for (const auto& [k, v] : extra.items()) j[k] = v;
  return j;
}

void JobConfig::validate() const {
  scattering.validate();
  synthesis.validate();
  if (jobs < 1) throw ConfigError("jobs must be at least 1");
  for (const auto& in : inputs)
    if (!std::filesystem::is_regular_file(in)) throw ConfigError("input file not found: " + in.string());
  if (effect && !std::filesystem::is_regular_file(*effect))
    throw ConfigError("effect file not found: " + effect->string());
  std::error_code ec;
  std::filesystem::create_directories(output_dir, ec);
  if (ec || !std::filesystem::is_directory(output_dir))
    throw ConfigError("cannot create output directory " + output_dir.string());
  const auto probe = output_dir / ".tfscat_write_probe";
  {
    std::ofstream out(probe);
    if (!out) throw ConfigError("output directory is not writable: " + output_dir.string());
  }
  std::filesystem::remove(probe, ec);
}

json to_json(const JobConfig& job) {
  json inputs = json::array();
  for (const auto& p : job.inputs) inputs.push_back(p.string());
  json j = {{"inputs", inputs},
            {"output_dir", job.output_dir.string()},
            {"scattering", to_json(job.scattering)},
            {"synthesis", to_json(job.synthesis)},
            {"exports",
             {{"coefficients", job.exports.coefficients},
              {"loss_trace", job.exports.loss_trace},
              {"snapshots", job.exports.snapshots},
              {"spectrogram", job.exports.spectrogram}}},
            {"threads", job.threads},
            {"jobs", job.jobs}};
  if (job.effect) j["effect"] = job.effect->string();
  return j;
}

JobConfig job_config_from_json(const json& j, JobConfig job) {
  const std::string what = "job";
  require_object(j, what);
  reject_unknown(j, {"inputs", "output_dir", "scattering", "synthesis", "effect", "exports", "threads", "jobs"}, what);
  if (const auto it = j.find("inputs"); it != j.end()) {
    if (!it->is_array()) throw ConfigError("job.inputs must be an array of paths");
    job.inputs.clear();
    for (const auto& p : *it) {
      if (!p.is_string()) throw ConfigError("job.inputs must be an array of paths");
      job.inputs.emplace_back(p.get<std::string>());
    }
  }
  std::string s;
  read_key(j, "output_dir", s, what);
  if (!s.empty()) job.output_dir = s;
  s.clear();
  read_key(j, "effect", s, what);
  if (!s.empty()) job.effect = s;
  if (j.contains("scattering")) job.scattering = scattering_config_from_json(j.at("scattering"), job.scattering);
  if (j.contains("synthesis")) job.synthesis = synthesis_options_from_json(j.at("synthesis"), job.synthesis);
  if (const auto it = j.find("exports"); it != j.end()) {
    require_object(*it, "job.exports");
    reject_unknown(*it, {"coefficients", "loss_trace", "snapshots", "spectrogram"}, "job.exports");
    read_key(*it, "coefficients", job.exports.coefficients, "job.exports");
    read_key(*it, "loss_trace", job.exports.loss_trace, "job.exports");
    read_key(*it, "snapshots", job.exports.snapshots, "job.exports");
    read_key(*it, "spectrogram", job.exports.spectrogram, "job.exports");
  }
  read_key(j, "threads", job.threads, what);
  read_key(j, "jobs", job.jobs, what);
  return job;
}

}  // namespace tfs::io
