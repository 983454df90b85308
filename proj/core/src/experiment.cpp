#include "singlet/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "singlet/analysis.hpp"
#include "singlet/errors.hpp"
#include "singlet/io.hpp"

#ifndef SINGLET_VERSION
#define SINGLET_VERSION "dev"
#endif

namespace singlet {

using nlohmann::json;

std::string_view version_tag() { return SINGLET_VERSION; }

std::string_view to_string(Command c) {
  switch (c) {
    case Command::decompose: return "decompose";
    case Command::trajectories: return "trajectories";
    case Command::scan: return "scan";
    case Command::physical: return "physical";
  }
  return "?";
}

namespace {

const std::map<std::string, std::string, std::less<>>& presets() {
  static const std::map<std::string, std::string, std::less<>> table = {
      {"fig2", R"({
        "model": {"variant": "tavis_cummings", "atoms": 10,
                  "dicke": {"omega": 0, "omega0": 0, "lambda_minus": 6, "lambda_plus": 0, "kappa": 1}},
        "initial_state": {"kind": "all_in_zero"},
        "trajectories": {"n_traj": 1000, "t_max": 10, "dt": 0.001, "sample_interval": 0.1, "seed": 2}
      })"},
      {"fig3", R"({
        "model": {"variant": "spinor", "atoms": 40,
                  "spinor": {"interaction_sign": 1, "decay_ratios": [0, 0.001, 0.005]}},
        "schedule": {"kind": "exponential", "q0": 7.0, "xi": 0.08, "t_max": 150},
        "initial_state": {"kind": "all_in_zero"},
        "trajectories": {"n_traj": 1000, "t_max": 150, "dt": 0.002, "sample_interval": 1, "seed": 3}
      })"},
      {"fig4a", R"({
        "scan": {"atoms": 40, "decay_ratio": 0.001, "kind": "exponential",
                 "q0_grid": {"log": [0.5, 20, 12]}, "xi_grid": [0.08], "t_max": 150, "dt": 0.002}
      })"},
      {"fig5", R"({
        "scan": {"atoms": 1000, "decay_ratio": 0.001, "kind": "exponential",
                 "q0_grid": {"log": [0.5, 20, 12]}, "xi_grid": [0.05], "t_max": 200, "dt": 0.002}
      })"},
      {"physical", R"({
        "physical": {"units": "hz", "sweep_duration": 200,
                     "effective": {"omega": 1.0e7, "omega0": 0, "lambda_minus": 3.0e5, "lambda_plus": 0,
                                   "kappa": 1.0e4, "atoms": 1000}}
      })"},
  };
  return table;
}

/// Typed access into the merged document; records one message per bad field.
class Fields {
 public:
  Fields(const json& root, std::vector<std::string>& errors) : root_(root), errors_(errors) {}

  const json* find(const std::string& path) const {
    const json* node = &root_;
    std::size_t start = 0;
    while (start <= path.size()) {
      const auto dot = path.find('.', start);
      const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      if (!node->is_object()) return nullptr;
      const auto it = node->find(key);
      if (it == node->end()) return nullptr;
      node = &*it;
      if (dot == std::string::npos) break;
      start = dot + 1;
    }
    return node;
  }

  bool has(const std::string& path) const { return find(path) != nullptr; }

  std::optional<double> number(const std::string& path, bool required) {
    const json* n = find(path);
    if (!n) return missing<double>(path, required);
    if (!n->is_number()) return bad<double>(path, "expected a number");
    return n->get<double>();
  }

  std::optional<std::int64_t> integer(const std::string& path, bool required) {
    const json* n = find(path);
    if (!n) return missing<std::int64_t>(path, required);
    if (!n->is_number_integer()) return bad<std::int64_t>(path, "expected an integer");
    return n->get<std::int64_t>();
  }

  std::optional<std::uint64_t> unsigned_integer(const std::string& path, bool required) {
    const json* n = find(path);
    if (!n) return missing<std::uint64_t>(path, required);
    if (!n->is_number_unsigned()) return bad<std::uint64_t>(path, "expected a nonnegative integer");
    return n->get<std::uint64_t>();
  }

  std::optional<std::string> text(const std::string& path, bool required) {
    const json* n = find(path);
    if (!n) return missing<std::string>(path, required);
    if (!n->is_string()) return bad<std::string>(path, "expected a string");
    return n->get<std::string>();
  }

  std::optional<bool> flag(const std::string& path) {
    const json* n = find(path);
    if (!n) return std::nullopt;
    if (!n->is_boolean()) return bad<bool>(path, "expected true or false");
    return n->get<bool>();
  }

  /// A list of numbers or {"log": [lo, hi, n]}.
  std::optional<std::vector<double>> grid(const std::string& path, bool required) {
    const json* n = find(path);
    if (!n) return missing<std::vector<double>>(path, required);
    if (n->is_array()) {
      std::vector<double> out;
      for (const auto& v : *n) {
        if (!v.is_number()) return bad<std::vector<double>>(path, "expected numbers");
        out.push_back(v.get<double>());
      }
      if (out.empty()) return bad<std::vector<double>>(path, "grid is empty");
      return out;
    }
    if (n->is_object() && n->contains("log")) {
      const json& spec = n->at("log");
      if (!spec.is_array() || spec.size() != 3 || !spec[0].is_number() || !spec[1].is_number() ||
          !spec[2].is_number_unsigned()) {
        return bad<std::vector<double>>(path, "expected {\"log\": [lo, hi, count]}");
      }
      try {
        return log_grid(spec[0].get<double>(), spec[1].get<double>(), spec[2].get<std::size_t>());
      } catch (const std::invalid_argument& e) {
        return bad<std::vector<double>>(path, e.what());
      }
    }
    return bad<std::vector<double>>(path, "expected a list of numbers or {\"log\": [lo, hi, count]}");
  }

  void allow_only(const std::string& path, std::initializer_list<std::string_view> keys) {
    const json* n = path.empty() ? &root_ : find(path);
    if (!n) return;
    if (!n->is_object()) {
      error(path, "expected an object");
      return;
    }
    const std::set<std::string_view> allowed(keys);
    for (const auto& [k, v] : n->items()) {
      if (!allowed.contains(k)) error(path.empty() ? k : path + "." + k, "unknown field");
    }
  }

  void error(const std::string& path, const std::string& message) { errors_.push_back(path + ": " + message); }

 private:
  template <typename T>
  std::optional<T> missing(const std::string& path, bool required) {
    if (required) error(path, "required field is missing");
    return std::nullopt;
  }
  template <typename T>
  std::optional<T> bad(const std::string& path, const std::string& message) {
    error(path, message);
    return std::nullopt;
  }

  const json& root_;
  std::vector<std::string>& errors_;
};

void read_dicke(Fields& f, const std::string& prefix, EffectiveDickeParams& d, bool require_atoms) {
  if (require_atoms) f.allow_only(prefix, {"omega", "omega0", "lambda_minus", "lambda_plus", "kappa", "atoms"});
  else f.allow_only(prefix, {"omega", "omega0", "lambda_minus", "lambda_plus", "kappa"});
  d.omega = f.number(prefix + ".omega", true).value_or(0.0);
  d.omega0 = f.number(prefix + ".omega0", false).value_or(0.0);
  d.lambda_minus = f.number(prefix + ".lambda_minus", true).value_or(0.0);
  d.lambda_plus = f.number(prefix + ".lambda_plus", false).value_or(0.0);
  d.kappa = f.number(prefix + ".kappa", true).value_or(1.0);
  if (require_atoms) d.atoms = static_cast<int>(f.integer(prefix + ".atoms", true).value_or(0));
}

void check(Fields& f, bool ok, const std::string& path, const std::string& message) {
  if (!ok) f.error(path, message);
}

void read_trajectories(Fields& f, TrajectoryExperiment& t) {
  f.allow_only("model", {"variant", "atoms", "n_max", "dicke", "spinor"});
  f.allow_only("trajectories", {"dt", "t_max", "sample_interval", "seed", "n_traj", "threads", "jump_time_tolerance",
                                "use_charge_sectors"});
  f.allow_only("schedule", {"kind", "q0", "xi", "t_max"});
  f.allow_only("initial_state", {"kind", "k"});

  const auto variant = f.text("model.variant", true);
  if (variant) {
    try {
      t.variant = model_variant_from_string(*variant);
    } catch (const std::invalid_argument&) {
      f.error("model.variant", "unknown variant '" + *variant + "'");
    }
    if (t.variant == ModelVariant::reduced) {
      f.error("model.variant", "the reduced model is propagated by the scan command");
    }
  }
  t.atoms = static_cast<int>(f.integer("model.atoms", true).value_or(0));
  check(f, !f.has("model.atoms") || t.atoms >= 1, "model.atoms", "must be >= 1");
  t.n_max = static_cast<int>(f.integer("model.n_max", false).value_or(0));

  auto& run = t.run;
  run.dt = f.number("trajectories.dt", false).value_or(run.dt);
  run.t_max = f.number("trajectories.t_max", true).value_or(1.0);
  run.sample_interval = f.number("trajectories.sample_interval", false).value_or(run.t_max / 100.0);
  run.seed = f.unsigned_integer("trajectories.seed", false).value_or(0);
  run.n_traj = static_cast<std::size_t>(f.unsigned_integer("trajectories.n_traj", true).value_or(1));
  run.threads = static_cast<int>(f.integer("trajectories.threads", false).value_or(1));
  run.jump_time_tolerance = f.number("trajectories.jump_time_tolerance", false).value_or(0.0);
  run.use_charge_sectors = f.flag("trajectories.use_charge_sectors").value_or(true);
  if (f.has("trajectories.t_max")) {
    try {
      run.validate();
    } catch (const std::invalid_argument& e) {
      f.error("trajectories", e.what());
    }
  }

  const bool dicke_like = t.variant == ModelVariant::dicke || t.variant == ModelVariant::tavis_cummings;
  if (variant && dicke_like) {
    read_dicke(f, "model.dicke", t.dicke, false);
    t.dicke.atoms = t.atoms;
    check(f, t.dicke.kappa > 0.0, "model.dicke.kappa", "must be > 0");
    if (t.variant == ModelVariant::tavis_cummings && t.dicke.lambda_plus != 0.0) {
      f.error("model.dicke.lambda_plus", "must be 0 for the tavis_cummings variant");
    }
  }
  if (variant && t.variant == ModelVariant::spinor) {
    f.allow_only("model.spinor", {"interaction_sign", "decay_ratio", "decay_ratios", "linear_shift"});
    t.interaction_sign = f.number("model.spinor.interaction_sign", false).value_or(1.0);
    check(f, t.interaction_sign == 1.0 || t.interaction_sign == -1.0, "model.spinor.interaction_sign",
          "must be +1 or -1");
    if (f.has("model.spinor.decay_ratios")) {
      t.decay_ratios = f.grid("model.spinor.decay_ratios", true).value_or(std::vector<double>{0.0});
    } else {
      t.decay_ratios = {f.number("model.spinor.decay_ratio", true).value_or(0.0)};
    }
    for (double g : t.decay_ratios) check(f, g >= 0.0, "model.spinor.decay_ratio", "must be >= 0");
    t.linear_shift = f.number("model.spinor.linear_shift", false).value_or(0.0);

    const auto kind = f.text("schedule.kind", true);
    if (kind) {
      try {
        t.schedule.kind = schedule_kind_from_string(*kind);
      } catch (const std::invalid_argument&) {
        f.error("schedule.kind", "unknown schedule kind '" + *kind + "'");
      }
    }
    t.schedule.q0 = f.number("schedule.q0", true).value_or(0.0);
    t.schedule.xi = f.number("schedule.xi", false).value_or(0.0);
    t.schedule.t_max = f.number("schedule.t_max", false).value_or(run.t_max);
    if (kind && f.has("schedule.q0")) {
      try {
        t.schedule.validate();
      } catch (const std::invalid_argument& e) {
        f.error("schedule", e.what());
      }
    }
  }

  const auto init = f.text("initial_state.kind", false).value_or("all_in_zero");
  if (init == "all_in_zero") {
    t.initial.kind = InitialKind::all_in_zero;
  } else if (init == "singlet") {
    t.initial.kind = InitialKind::singlet;
  } else if (init == "dicke") {
    t.initial.kind = InitialKind::dicke;
    t.initial.k = static_cast<int>(f.integer("initial_state.k", true).value_or(0));
    check(f, t.initial.k >= 0 && 2 * t.initial.k <= t.atoms, "initial_state.k", "must lie in [0, N/2]");
  } else {
    f.error("initial_state.kind", "expected all_in_zero, singlet or dicke");
  }
  if (t.initial.kind != InitialKind::all_in_zero && t.atoms % 2 != 0) {
    f.error("initial_state.kind", "even N required for singlet and Dicke initial states");
  }
}

void read_scan(Fields& f, ScanSpec& s) {
  f.allow_only("scan", {"atoms", "decay_ratio", "interaction_sign", "kind", "q0_grid", "xi_grid", "t_max", "dt",
                        "consistency_tolerance", "threads"});
  s.atoms = static_cast<int>(f.integer("scan.atoms", true).value_or(0));
  check(f, !f.has("scan.atoms") || (s.atoms >= 2 && s.atoms % 2 == 0), "scan.atoms", "even N required");
  s.decay_ratio = f.number("scan.decay_ratio", true).value_or(0.0);
  check(f, s.decay_ratio >= 0.0, "scan.decay_ratio", "must be >= 0");
  s.interaction_sign = f.number("scan.interaction_sign", false).value_or(1.0);
  check(f, s.interaction_sign == 1.0 || s.interaction_sign == -1.0, "scan.interaction_sign", "must be +1 or -1");
  const auto kind = f.text("scan.kind", false).value_or("exponential");
  try {
    s.kind = schedule_kind_from_string(kind);
  } catch (const std::invalid_argument&) {
    f.error("scan.kind", "unknown schedule kind '" + kind + "'");
  }
  if (auto g = f.grid("scan.q0_grid", false)) s.q0_grid = *g;
  if (auto g = f.grid("scan.xi_grid", false)) s.xi_grid = *g;
  s.t_max = f.number("scan.t_max", true).value_or(1.0);
  check(f, s.t_max > 0.0, "scan.t_max", "must be > 0");
  s.dt = f.number("scan.dt", false).value_or(s.dt);
  check(f, s.dt > 0.0, "scan.dt", "must be > 0");
  s.consistency_tolerance = f.number("scan.consistency_tolerance", false).value_or(s.consistency_tolerance);
  s.threads = static_cast<int>(f.integer("scan.threads", false).value_or(1));
}

void read_physical(Fields& f, PhysicalExperiment& p) {
  f.allow_only("physical", {"units", "microscopic", "effective", "sweep_duration"});
  const auto units = f.text("physical.units", false).value_or("rad_per_s");
  if (units == "hz") {
    p.angular_scale = 2.0 * std::numbers::pi;
  } else if (units == "rad_per_s") {
    p.angular_scale = 1.0;
  } else {
    f.error("physical.units", "expected hz or rad_per_s");
  }
  p.sweep_duration = f.number("physical.sweep_duration", false).value_or(200.0);
  const bool micro = f.has("physical.microscopic");
  const bool eff = f.has("physical.effective");
  if (micro == eff) {
    f.error("physical", "exactly one of microscopic or effective is required");
    return;
  }
  const double s = p.angular_scale;
  if (micro) {
    f.allow_only("physical.microscopic", {"g", "rabi_minus", "rabi_plus", "detuning", "cavity_frequency",
                                          "laser_minus", "laser_plus", "zeeman_splitting", "kappa", "atoms"});
    MicroscopicParams m;
    const std::string pre = "physical.microscopic.";
    m.g = s * f.number(pre + "g", true).value_or(0.0);
    m.rabi_minus = s * f.number(pre + "rabi_minus", true).value_or(0.0);
    m.rabi_plus = s * f.number(pre + "rabi_plus", false).value_or(0.0);
    m.detuning = s * f.number(pre + "detuning", true).value_or(0.0);
    m.cavity_frequency = s * f.number(pre + "cavity_frequency", true).value_or(0.0);
    m.laser_minus = s * f.number(pre + "laser_minus", true).value_or(0.0);
    m.laser_plus = s * f.number(pre + "laser_plus", false).value_or(0.0);
    m.zeeman_splitting = s * f.number(pre + "zeeman_splitting", false).value_or(0.0);
    m.kappa = s * f.number(pre + "kappa", true).value_or(0.0);
    m.atoms = static_cast<int>(f.integer(pre + "atoms", true).value_or(0));
    if (f.has(pre + "detuning")) check(f, m.detuning != 0.0, pre + "detuning", "must be nonzero");
    check(f, !f.has(pre + "kappa") || m.kappa > 0.0, pre + "kappa", "must be > 0");
    check(f, !f.has(pre + "atoms") || m.atoms >= 1, pre + "atoms", "must be >= 1");
    p.microscopic = m;
  } else {
    EffectiveDickeParams d;
    read_dicke(f, "physical.effective", d, true);
    d.omega *= s;
    d.omega0 *= s;
    d.lambda_minus *= s;
    d.lambda_plus *= s;
    d.kappa *= s;
    check(f, d.kappa > 0.0, "physical.effective.kappa", "must be > 0");
    check(f, d.atoms >= 1, "physical.effective.atoms", "must be >= 1");
    p.effective = d;
  }
}

json read_document(std::string_view text, const std::string& origin) {
  if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) return json::object();
  try {
    json doc = json::parse(text);
    if (!doc.is_object()) throw ConfigError(origin + ": top level must be a JSON object");
    return doc;
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": invalid JSON (" + std::string(e.what()) + ")");
  }
}

std::filesystem::path default_output_dir() {
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return "singlet_out";
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& [name, text] : presets()) out.push_back(name);
  return out;
}

std::string preset_json(std::string_view name) {
  const auto it = presets().find(name);
  if (it == presets().end()) {
    std::string known;
    for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("preset: unknown preset '" + std::string(name) + "' (known: " + known + ")");
  }
  return json::parse(it->second).dump(2);
}

ExperimentConfig parse_experiment(Command command, std::string_view json_text, const Overrides& overrides) {
  json user = read_document(json_text, overrides.config_path ? overrides.config_path->string() : "config");
  std::string preset_name;
  if (overrides.preset) {
    preset_name = *overrides.preset;
  } else if (user.contains("preset")) {
    if (!user["preset"].is_string()) throw ConfigError("preset: expected a string");
    preset_name = user["preset"].get<std::string>();
  }
  json doc = preset_name.empty() ? json::object() : json::parse(preset_json(preset_name));
  doc.merge_patch(user);
  doc.erase("preset");

  if (overrides.seed) doc["trajectories"]["seed"] = *overrides.seed;
  if (overrides.threads) {
    if (*overrides.threads < 0) throw ConfigError("--threads: must be >= 0");
    if (command == Command::trajectories) doc["trajectories"]["threads"] = *overrides.threads;
    if (command == Command::scan) doc["scan"]["threads"] = *overrides.threads;
  }
  if (overrides.atoms) doc["model"]["atoms"] = *overrides.atoms;
  if (overrides.out) doc["output_dir"] = overrides.out->string();

  std::vector<std::string> errors;
  Fields f(doc, errors);
  f.allow_only("", {"model", "schedule", "initial_state", "trajectories", "scan", "physical", "output_dir"});
  ExperimentConfig cfg;
  cfg.command = command;
  cfg.preset = preset_name;
  switch (command) {
    case Command::decompose:
      cfg.atoms = static_cast<int>(f.integer("model.atoms", true).value_or(0));
      if (f.has("model.atoms") && (cfg.atoms < 2 || cfg.atoms % 2 != 0)) f.error("model.atoms", "even N required");
      break;
    case Command::trajectories: read_trajectories(f, cfg.trajectories); break;
    case Command::scan: read_scan(f, cfg.scan); break;
    case Command::physical: read_physical(f, cfg.physical); break;
  }
  cfg.output_dir = f.text("output_dir", false).value_or(default_output_dir().string());
  if (!errors.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  cfg.snapshot = doc.dump(2);
  return cfg;
}

ExperimentConfig load_experiment(Command command, const Overrides& overrides) {
  std::string text;
  if (overrides.config_path) {
    std::ifstream in(*overrides.config_path);
    if (!in) throw ConfigError("--config: cannot read " + overrides.config_path->string());
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  return parse_experiment(command, text, overrides);
}

namespace {

class OutputSet {
 public:
  explicit OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

  template <typename Writer>
  void write(const std::string& name, Writer&& writer) {
    const auto path = dir_ / name;
    {
      std::ofstream out(path, std::ios::binary);
      if (!out) throw std::runtime_error("cannot write " + path.string());
      writer(out);
    }
    files_.push_back({path, sha256_file(path), std::filesystem::file_size(path)});
  }

  void write_json(const std::string& name, const json& j) {
    write(name, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
  }

  const std::vector<OutputFile>& files() const { return files_; }
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::vector<OutputFile> files_;
};

json nan_safe(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json histogram_json(const Histogram& h) {
  json bins = json::array();
  for (std::size_t i = 0; i < h.centers.size(); ++i) {
    if (h.counts[i] > 0) bins.push_back({{"center", h.centers[i]}, {"count", h.counts[i]}});
  }
  return bins;
}

json partition_json(const PartitionStats& p) {
  return {{"count", p.count},
          {"mean_S2", nan_safe(p.mean_s2)},
          {"mean_overlap", nan_safe(p.mean_overlap)},
          {"min_overlap", nan_safe(p.count ? p.min_overlap : std::nan(""))},
          {"max_overlap", nan_safe(p.count ? p.max_overlap : std::nan(""))},
          {"modal_S2_bin", nan_safe(p.s2_bins.mode())},
          {"S2_bins", histogram_json(p.s2_bins)}};
}

json witness_json(const EntanglementReport& r) {
  return {{"Sx2", r.sx2},
          {"Sy2", r.sy2},
          {"Sz2", r.sz2},
          {"S2", r.s2},
          {"margin", r.margin},
          {"entangled", r.entangled()},
          {"unentangled_bound_placeholder", r.unentangled_bound_placeholder}};
}

ComplexVector initial_state(const TrajectoryExperiment& t, const EffectiveModel& model, const BasisPtr& basis) {
  switch (t.initial.kind) {
    case InitialKind::all_in_zero: return model_state(model, all_in_zero(basis));
    case InitialKind::singlet: return model_state(model, singlet_vector(basis));
    case InitialKind::dicke: {
      const auto dec = dicke_decomposition(*basis);
      return model_state(model, embed_pair_amplitudes(basis, dec.at(static_cast<std::size_t>(t.initial.k)).pair_amplitudes));
    }
  }
  throw std::invalid_argument("unknown initial state");
}

int run_decompose(const ExperimentConfig& cfg, OutputSet& out, std::ostream& log, json& report) {
  const auto dec = dicke_decomposition(cfg.atoms);
  out.write("decomposition.csv", [&](std::ostream& os) { write_decomposition_csv(os, dec); });
  double total = 0.0;
  std::size_t peak = 0;
  for (std::size_t i = 0; i < dec.size(); ++i) {
    total += dec[i].weight;
    if (dec[i].weight > dec[peak].weight) peak = i;
  }
  report = {{"atoms", cfg.atoms},
            {"d0_squared", dec.front().weight},
            {"one_over_N_plus_1", 1.0 / (cfg.atoms + 1.0)},
            {"weight_sum", total},
            {"peak_k", dec[peak].k}};
  log << "N = " << cfg.atoms << ": |d_0|^2 = " << format_double(dec.front().weight)
      << ", 1/(N+1) = " << format_double(1.0 / (cfg.atoms + 1.0)) << ", peak at k = " << dec[peak].k << '\n';
  return exit_ok;
}

int run_trajectories(const ExperimentConfig& cfg, OutputSet& out, std::ostream& log, json& report) {
  const auto& t = cfg.trajectories;
  const auto basis = build_basis(t.atoms);
  const bool dicke_like = t.variant != ModelVariant::spinor;
  const std::vector<double> ratios = dicke_like ? std::vector<double>{0.0} : t.decay_ratios;
  report["runs"] = json::array();
  std::size_t usable = 0;
  for (double ratio : ratios) {
    EffectiveModel model;
    json run;
    if (dicke_like) {
      const CavitySpace cavity(t.n_max > 0 ? t.n_max : CavitySpace::default_truncation(t.atoms));
      model = build_dicke_model(t.dicke, basis, cavity);
      const auto regime = regime_check(t.dicke);
      run["regime"] = {{"ratio", regime.ratio}, {"pass", regime.pass}, {"message", regime.message}};
      if (!regime.pass) log << "warning: " << regime.message << '\n';
      run["n_max"] = cavity.n_max();
    } else {
      const SpinorModelParams params{t.interaction_sign, ratio, t.linear_shift, t.atoms};
      model = build_spinor_model(params, t.schedule, basis);
      run["decay_ratio"] = ratio;
    }
    const ComplexVector psi0 = initial_state(t, model, basis);
    const EnsembleResult ensemble = run_ensemble(model, psi0, t.run);
    const JumpSplit split = split_by_jumps(ensemble.records, t.atoms);

    const std::string suffix = ratios.size() > 1 ? "_gamma" + format_double(ratio) : "";
    std::vector<std::string> names;
    for (const auto& o : model.observables) names.push_back(o.name);
    out.write("trajectories" + suffix + ".csv", [&](std::ostream& os) { write_trajectory_csv(os, ensemble.records); });
    out.write("summary" + suffix + ".csv", [&](std::ostream& os) { write_summary_csv(os, ensemble.records); });
    out.write("average" + suffix + ".csv", [&](std::ostream& os) { write_average_csv(os, ensemble.average, names); });
    std::vector<double> lengths;
    for (const auto& r : ensemble.records) {
      if (r.valid()) lengths.push_back(spin_length(r.final_sample().s2));
    }
    out.write("spin_length_hist" + suffix + ".csv",
              [&](std::ostream& os) { write_histogram_csv(os, integer_histogram(lengths, t.atoms)); });
    out.write("s2_hist_jumps" + suffix + ".csv",
              [&](std::ostream& os) { write_histogram_csv(os, split.with_jumps.s2_bins); });

    json flagged = json::array();
    for (const auto& r : ensemble.records) {
      if (!r.valid()) flagged.push_back({{"traj_id", r.index}, {"diagnostic", r.diagnostic}});
    }
    const double final_s2 = ensemble.average.s2.empty() ? std::nan("") : ensemble.average.s2.back();
    run["n_traj"] = t.run.n_traj;
    run["flagged"] = flagged;
    run["no_jump_fraction"] = nan_safe(split.no_jump_fraction());
    run["without_jumps"] = partition_json(split.without_jumps);
    run["with_jumps"] = partition_json(split.with_jumps);
    run["final_mean_S2"] = nan_safe(final_s2);
    run["final_mean_overlap"] =
        nan_safe(ensemble.average.singlet_overlap.empty() ? std::nan("") : ensemble.average.singlet_overlap.back());
    // Witness on the ensemble state at t_max, i.e. without post-selection.
    ComplexMatrix rho;
    std::size_t used = 0;
    for (const auto& r : ensemble.records) {
      if (!r.valid()) continue;
      const ComplexMatrix part = spin_density(model, r.final_state);
      if (used++ == 0) rho = part;
      else rho += part;
    }
    if (used > 0) run["witness"] = witness_json(entanglement_witness(*basis, rho / double(used)));
    usable += split.without_jumps.count + split.with_jumps.count;
    report["runs"].push_back(run);

    log << to_string(model.descriptor.variant) << " N = " << t.atoms;
    if (!dicke_like) log << " Gamma/Lambda = " << format_double(ratio);
    log << ": " << t.run.n_traj << " trajectories, no-jump fraction " << format_double(split.no_jump_fraction())
        << ", final <S^2> " << format_double(final_s2) << ", flagged " << flagged.size() << '\n';
  }
  return usable == 0 ? exit_numerical : exit_ok;
}

int run_scan(const ExperimentConfig& cfg, OutputSet& out, std::ostream& log, json& report) {
  const ScanResult scan = scan_sweep(cfg.scan);
  out.write("scan.csv", [&](std::ostream& os) { write_scan_csv(os, scan); });
  json failures = json::array();
  for (const auto& p : scan.points) {
    if (!p.ok) {
      failures.push_back({{"q0", p.q0}, {"xi", p.xi}, {"error", p.error}});
      log << "point q0 = " << format_double(p.q0) << ", xi = " << format_double(p.xi) << " failed: " << p.error << '\n';
    }
  }
  report["points"] = scan.points.size();
  report["failures"] = failures;
  if (const auto best = scan.best()) {
    report["best"] = {{"q0", best->q0},         {"xi", best->xi},  {"p_s", best->survival},
                      {"overlap", best->singlet_overlap}, {"p", best->efficiency}};
    log << "N = " << cfg.scan.atoms << ": best p = " << format_double(best->efficiency) << " at q0 = "
        << format_double(best->q0) << ", xi = " << format_double(best->xi) << '\n';
  }
  if (scan.failures() == scan.points.size()) return exit_numerical;
  return scan.failures() > 0 ? exit_partial : exit_ok;
}

int run_physical(const ExperimentConfig& cfg, OutputSet& out, std::ostream& log, json& report) {
  const auto& p = cfg.physical;
  const EffectiveDickeParams d = p.microscopic ? effective_dicke_params(*p.microscopic) : *p.effective;
  std::vector<std::string> warnings;
  const SpinorModelParams s = spinor_params(d, &warnings);
  const RegimeReport regime = regime_check(d);
  const double scale = p.angular_scale;
  auto freq = [&](double w) { return w / scale; };
  report["input_units"] = scale == 1.0 ? "rad_per_s" : "hz";
  report["effective"] = {{"omega", freq(d.omega)},
                         {"omega0", freq(d.omega0)},
                         {"lambda_minus", freq(d.lambda_minus)},
                         {"lambda_plus", freq(d.lambda_plus)},
                         {"kappa", freq(d.kappa)},
                         {"atoms", d.atoms}};
  report["spinor"] = {{"Lambda", freq(s.interaction)},
                      {"Gamma", freq(s.decay)},
                      {"omega0_prime", freq(s.linear_shift)},
                      {"Gamma_over_abs_Lambda", s.interaction != 0.0 ? s.decay / std::abs(s.interaction) : std::nan("")}};
  report["regime"] = {{"ratio", regime.ratio}, {"pass", regime.pass}, {"message", regime.message}};
  report["warnings"] = warnings;
  const double lambda_rate = std::abs(s.interaction);
  json times = {{"inverse_kappa_s", 1.0 / d.kappa}};
  if (lambda_rate > 0.0) {
    times["inverse_Lambda_s"] = 1.0 / lambda_rate;
    times["sweep_Lambda_t"] = p.sweep_duration;
    times["sweep_s"] = p.sweep_duration / lambda_rate;
  }
  if (s.decay > 0.0) times["inverse_Gamma_s"] = 1.0 / s.decay;
  report["timescales"] = times;
  out.write_json("physical.json", report);

  log << "omega = " << format_double(freq(d.omega)) << ", omega0 = " << format_double(freq(d.omega0))
      << ", lambda_- = " << format_double(freq(d.lambda_minus)) << ", lambda_+ = " << format_double(freq(d.lambda_plus))
      << ", kappa = " << format_double(freq(d.kappa)) << '\n';
  log << "Lambda = " << format_double(freq(s.interaction)) << ", Gamma = " << format_double(freq(s.decay))
      << ", omega0' = " << format_double(freq(s.linear_shift)) << '\n';
  log << regime.message << (regime.pass ? "" : " (warning)") << '\n';
  for (const auto& w : warnings) log << "warning: " << w << '\n';
  if (lambda_rate > 0.0) {
    log << "Lambda t = " << format_double(p.sweep_duration) << " lasts " << format_double(1e3 * p.sweep_duration / lambda_rate)
        << " ms\n";
  }
  return exit_ok;
}

}  // namespace

RunOutcome run_experiment(const ExperimentConfig& config, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  OutputSet out(config.output_dir);
  json report;
  RunOutcome outcome;
  switch (config.command) {
    case Command::decompose: outcome.exit_code = run_decompose(config, out, log, report); break;
    case Command::trajectories: outcome.exit_code = run_trajectories(config, out, log, report); break;
    case Command::scan: outcome.exit_code = run_scan(config, out, log, report); break;
    case Command::physical: outcome.exit_code = run_physical(config, out, log, report); break;
  }
  if (config.command != Command::physical) out.write_json("report.json", report);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  json manifest;
  manifest["command"] = to_string(config.command);
  manifest["preset"] = config.preset;
  manifest["version"] = version_tag();
  manifest["config"] = json::parse(config.snapshot);
  manifest["outputs"] = json::array();
  for (const auto& f : out.files()) {
    manifest["outputs"].push_back({{"file", f.path.filename().string()}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  }
  manifest["wall_seconds"] = seconds;
  manifest["exit_code"] = outcome.exit_code;
  outcome.outputs = out.files();
  outcome.manifest = out.dir() / "manifest.json";
  std::ofstream(outcome.manifest) << manifest.dump(2) << '\n';
  return outcome;
}

int run_command(Command command, const Overrides& overrides, std::ostream& log, std::ostream& err) {
  try {
    const ExperimentConfig cfg = load_experiment(command, overrides);
    return run_experiment(cfg, log).exit_code;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return exit_config;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return exit_config;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_numerical;
  }
}

}  // namespace singlet
