// Acceptance suite: one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "singlet/analysis.hpp"
#include "singlet/experiment.hpp"
#include "singlet/master_equation.hpp"
#include "singlet/reduced_sweep.hpp"
#include "singlet/trajectory.hpp"

using namespace singlet;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 6) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

EffectiveModel dicke_model_for(const TrajectoryExperiment& t) {
  const CavitySpace cavity(t.n_max > 0 ? t.n_max : CavitySpace::default_truncation(t.atoms));
  return build_dicke_model(t.dicke, build_basis(t.atoms), cavity);
}

SpinStateVector dicke_state(const BasisPtr& basis, int k) {
  const auto dec = dicke_decomposition(*basis);
  auto s = embed_pair_amplitudes(basis, dec[static_cast<std::size_t>(k)].pair_amplitudes.cast<Complex>());
  s.amplitudes.normalize();
  s.normalized = true;
  return s;
}

Outcome initial_overlap() {
  double worst = 0.0;
  for (int n = 2; n <= 40; n += 2) {
    const double expected = 1.0 / (n + 1.0);
    const auto dec = dicke_decomposition(n);
    worst = std::max(worst, std::abs(dec.front().weight - expected));
    const auto basis = build_basis(n);
    const double direct = std::norm(singlet_vector(basis).amplitudes.dot(all_in_zero(basis).amplitudes));
    worst = std::max(worst, std::abs(direct - expected));
    if (n <= 4) worst = std::max(worst, std::abs(oracle::spin_length_weights(*basis)[0] - expected));
  }
  return {worst <= 1e-10, "max |d0^2 - 1/(N+1)| = " + fmt(worst, 3)};
}

Outcome fig2_projection() {
  auto cfg = parse_experiment(Command::trajectories, "", {.preset = "fig2", .threads = 0});
  const auto& t = cfg.trajectories;
  const auto model = dicke_model_for(t);
  const auto psi0 = model_state(model, all_in_zero(build_basis(t.atoms)));
  const auto ens = run_ensemble(model, psi0, t.run);

  std::size_t valid = 0, singlets = 0, ambiguous = 0, off_even = 0;
  double worst_distance = 0.0;
  for (const auto& r : ens.records) {
    if (!r.valid()) continue;
    ++valid;
    const auto& f = r.final_sample();
    if (f.singlet_overlap > 0.99) {
      ++singlets;
    } else if (f.singlet_overlap >= 1e-3) {
      ++ambiguous;
    }
    const double s = spin_length(f.s2);
    const double distance = std::abs(s - 2.0 * std::round(s / 2.0));
    worst_distance = std::max(worst_distance, distance);
    if (distance > 0.05) ++off_even;
  }
  const double fraction = valid ? double(singlets) / double(valid) : 0.0;
  const double target = 1.0 / 11.0;
  const bool a = ambiguous == 0 && valid == ens.records.size();
  const bool b = std::abs(fraction - target) <= 0.027;
  const bool c = off_even == 0;
  return {a && b && c, "valid " + std::to_string(valid) + "/" + std::to_string(ens.records.size()) +
                           ", ambiguous overlaps " + std::to_string(ambiguous) + ", singlet fraction " +
                           fmt(fraction, 4) + " (target 0.0909 +- 0.027), max distance to even S " +
                           fmt(worst_distance, 3)};
}

Outcome excitation_ledger() {
  const int n = 10;
  const auto basis = build_basis(n);
  TrajectoryExperiment t;
  t.atoms = n;
  t.dicke.lambda_minus = 6.0;
  t.dicke.kappa = 1.0;
  t.dicke.atoms = n;
  const auto model = dicke_model_for(t);
  const auto sz_index = static_cast<std::size_t>(model.find_observable("Sz") - model.observables.data());
  TrajectoryConfig run;
  run.dt = 1e-3;
  run.t_max = 30.0;
  run.sample_interval = 1.0;
  run.n_traj = 20;
  run.seed = 4;
  run.threads = 0;
  bool pass = true;
  std::string detail;
  for (int k = 1; k <= 4; ++k) {
    const auto ens = run_ensemble(model, model_state(model, dicke_state(basis, k)), run);
    std::size_t good = 0;
    for (const auto& r : ens.records) {
      const auto& f = r.final_sample();
      const bool ok = r.valid() && r.jumps.size() == static_cast<std::size_t>(2 * k) &&
                      std::abs(f.observables[sz_index] + 2.0 * k) < 1e-4 &&
                      std::abs(f.s2 - 2.0 * k * (2.0 * k + 1.0)) < 1e-4;
      if (ok) ++good;
    }
    pass = pass && good == ens.records.size();
    detail += (k > 1 ? ", " : "") + std::string("k=") + std::to_string(k) + ": " + std::to_string(good) + "/" +
              std::to_string(ens.records.size());
  }
  return {pass, detail + " trajectories reach |2k,-2k> after 2k jumps"};
}

/// Compares trajectory means with master-equation values at every nonzero sample time.
Outcome compare_with_master_equation(const EffectiveModel& model, const ComplexVector& psi0, TrajectoryConfig run,
                                     const std::function<double(const EnsembleAverage&, std::size_t)>& mean,
                                     const std::function<double(const EnsembleAverage&, std::size_t)>& stderr_of,
                                     const std::function<double(const DensitySample&)>& exact) {
  const auto ens = run_ensemble(model, psi0, run);
  MasterEquationConfig me;
  me.dt = run.dt;
  me.t_max = run.t_max;
  me.sample_interval = run.sample_interval;
  const auto rho = integrate_master_equation(model, DensityMatrix::pure(model.space, psi0), me);
  std::size_t inside = 0, total = 0;
  double worst = 0.0;
  for (std::size_t i = 1; i < rho.samples.size(); ++i) {
    const double se = stderr_of(ens.average, i);
    const double z = std::abs(mean(ens.average, i) - exact(rho.samples[i])) / std::max(se, 1e-12);
    worst = std::max(worst, z);
    ++total;
    if (z <= 3.0) ++inside;
  }
  return {inside == total && ens.average.contributing == run.n_traj,
          std::to_string(inside) + "/" + std::to_string(total) + " samples within 3 s.e. (max " + fmt(worst, 3) +
              " s.e.)"};
}

Outcome oracle_equivalence() {
  const int n = 4;
  const auto basis = build_basis(n);

  TrajectoryExperiment t;
  t.atoms = n;
  t.n_max = 6;
  t.dicke.lambda_minus = 6.0;
  t.dicke.kappa = 1.0;
  t.dicke.atoms = n;
  const auto tc = dicke_model_for(t);
  TrajectoryConfig run;
  run.dt = 1e-3;
  run.t_max = 4.0;
  run.sample_interval = 0.2;
  run.n_traj = 5000;
  run.seed = 21;
  run.threads = 0;
  const auto photon = compare_with_master_equation(
      tc, model_state(tc, all_in_zero(basis)), run,
      [](const EnsembleAverage& a, std::size_t i) { return a.observables[0][i]; },
      [](const EnsembleAverage& a, std::size_t i) { return a.observables_stderr[0][i]; },
      [](const DensitySample& s) { return s.observables[0]; });

  const SweepSchedule sched{ScheduleKind::exponential, 7.0, 0.08, 100.0};
  const auto spinor = build_spinor_model({1.0, 0.01, 0.0, n}, sched, basis);
  run.dt = 2e-3;
  run.t_max = 100.0;
  run.sample_interval = 5.0;
  run.seed = 22;
  const auto s2 = compare_with_master_equation(
      spinor, model_state(spinor, all_in_zero(basis)), run,
      [](const EnsembleAverage& a, std::size_t i) { return a.s2[i]; },
      [](const EnsembleAverage& a, std::size_t i) { return a.s2_stderr[i]; },
      [](const DensitySample& s) { return s.s2; });
  return {photon.pass && s2.pass, "Tavis-Cummings <a^dag a>: " + photon.detail + "; spinor <S^2>: " + s2.detail};
}

Outcome fig3_statistics() {
  auto cfg = parse_experiment(Command::trajectories, R"({"model": {"spinor": {"decay_ratios": [0.001]}}})",
                              {.preset = "fig3", .threads = 0});
  const auto& t = cfg.trajectories;
  const auto basis = build_basis(t.atoms);
  const auto model = build_spinor_model({t.interaction_sign, t.decay_ratios.front(), 0.0, t.atoms}, t.schedule, basis);
  const auto ens = run_ensemble(model, model_state(model, all_in_zero(basis)), t.run);
  const auto split = split_by_jumps(ens.records, t.atoms);
  const double fraction = split.no_jump_fraction();
  const bool fraction_ok = std::abs(fraction - 0.829) <= 0.036;
  const bool ordered = split.flagged == 0 && split.without_jumps.count > 0 && split.with_jumps.count > 0 &&
                       split.without_jumps.min_overlap > split.with_jumps.max_overlap;
  const double mode = split.with_jumps.s2_bins.mode();
  const bool mode_ok = mode == 6.0;
  return {fraction_ok && ordered && mode_ok,
          "no-jump fraction " + fmt(fraction, 4) + " (target 0.829 +- 0.036), min no-jump overlap " +
              fmt(split.without_jumps.min_overlap, 4) + " vs max jump overlap " +
              fmt(split.with_jumps.max_overlap, 4) + ", modal jump <S^2> bin " + fmt(mode, 3) + " over " +
              std::to_string(split.with_jumps.count) + " jump trajectories"};
}

Outcome witness_at_sweep_end() {
  const int n = 40;
  const auto basis = build_basis(n);
  const SweepSchedule sched{ScheduleKind::exponential, 7.0, 0.08, 150.0};
  const auto model = build_spinor_model({1.0, 0.0, 0.0, n}, sched, basis);
  TrajectoryConfig run;
  run.dt = 2e-3;
  run.t_max = 150.0;
  run.sample_interval = 150.0;
  const auto rec = run_trajectory(model, model_state(model, all_in_zero(basis)), run, 0);
  const auto report = entanglement_witness(model, rec.final_state);
  return {rec.valid() && rec.jumps.empty() && report.s2 < n && report.entangled(),
          "<S^2> = " + fmt(report.s2, 5) + " < N = 40, singlet overlap " +
              fmt(rec.final_sample().singlet_overlap, 5)};
}

Outcome reduced_consistency() {
  double worst = 0.0;
  for (int n : {4, 10, 20}) {
    const auto basis = build_basis(n);
    const SpinorModelParams params{1.0, 0.01, 0.0, n};
    const SweepSchedule sched{ScheduleKind::exponential, 7.0, 0.08, 40.0};
    const auto full = build_spinor_model(params, sched, basis);
    TrajectoryConfig run;
    run.dt = 1e-3;
    run.t_max = 40.0;
    run.sample_interval = 10.0;
    run.use_charge_sectors = false;
    const auto snaps = TrajectoryEngine(full, run).propagate_no_jump(model_state(full, all_in_zero(basis)));
    NoJumpConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_max = 40.0;
    cfg.sample_interval = 10.0;
    const auto reduced = propagate_no_jump(params, sched, cfg);
    const auto idx = basis->pair_indices();
    const ComplexVector& final_full = snaps.back().state;
    double off_pair = final_full.squaredNorm();
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const Complex a = final_full[Eigen::Index(idx[k])];
      off_pair -= std::norm(a);
      worst = std::max(worst, std::abs(a - reduced.final_state.amplitudes[Eigen::Index(k)]));
    }
    worst = std::max(worst, std::sqrt(std::max(off_pair, 0.0)));
  }

  std::vector<double> diffs;
  for (double dt : {0.01, 0.005, 0.0025}) {
    NoJumpConfig cfg;
    cfg.dt = dt;
    cfg.t_max = 40.0;
    cfg.consistency_tolerance = 1.0;
    diffs.push_back(propagate_no_jump({1.0, 0.01, 0.0, 20}, {ScheduleKind::exponential, 7.0, 0.08, 40.0}, cfg)
                        .relative_difference());
  }
  const double slope1 = std::log2(diffs[0] / diffs[1]);
  const double slope2 = std::log2(diffs[1] / diffs[2]);
  const bool converges = diffs[2] < diffs[1] && diffs[1] < diffs[0] && std::abs(slope1 - 1.0) < 0.1 &&
                         std::abs(slope2 - 1.0) < 0.1;
  return {worst <= 1e-6 && converges, "max pair-amplitude deviation " + fmt(worst, 3) +
                                          ", survival-estimate relative differences " + fmt(diffs[0], 3) + ", " +
                                          fmt(diffs[1], 3) + ", " + fmt(diffs[2], 3) + " (orders " +
                                          fmt(slope1, 3) + ", " + fmt(slope2, 3) + ")"};
}

Outcome fig5_headline() {
  auto cfg = parse_experiment(Command::scan, "", {.preset = "fig5", .threads = 0});
  const auto scan = scan_sweep(cfg.scan);
  const auto best = scan.best();
  if (!best) return {false, "every scan point failed"};
  const bool pass = scan.failures() == 0 && best->efficiency >= 0.10 && best->efficiency <= 0.20;
  return {pass, "max p = " + fmt(best->efficiency, 4) + " at q0 = " + fmt(best->q0, 4) + " (p_s " +
                    fmt(best->survival, 4) + ", overlap " + fmt(best->singlet_overlap, 4) + "), target [0.10, 0.20], " +
                    std::to_string(scan.failures()) + " failed points"};
}

Outcome herald_endpoints() {
  bool pass = true;
  double worst = 0.0;
  for (int n : {2, 10, 40, 1000}) {
    const auto dec = dicke_decomposition(n);
    const double at_one = heralded_fidelity(dec, 1.0).fidelity;
    const double at_zero = heralded_fidelity(dec, 0.0).fidelity;
    worst = std::max({worst, std::abs(at_one - 1.0), std::abs(at_zero - 1.0 / (n + 1.0))});
    double previous = -1.0;
    for (int i = 0; i <= 20; ++i) {
      const double f = heralded_fidelity(dec, i / 20.0).fidelity;
      if (!(f > previous)) pass = false;
      previous = f;
    }
  }
  pass = pass && worst <= 1e-10;
  return {pass, "endpoint error " + fmt(worst, 3) + ", strictly increasing on 21 points for N = 2, 10, 40, 1000"};
}

std::vector<std::pair<std::string, std::string>> csv_digests(const RunOutcome& outcome) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& f : outcome.outputs) {
    if (f.path.extension() == ".csv") out.emplace_back(f.path.filename().string(), f.sha256);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Outcome determinism() {
  const auto root = fs::temp_directory_path() / "singlet_acceptance_determinism";
  fs::remove_all(root);
  std::ostringstream log;
  const std::string traj = R"({"preset": "fig3", "model": {"atoms": 10, "spinor": {"decay_ratios": [0, 0.02]}},
    "schedule": {"t_max": 40}, "trajectories": {"n_traj": 64, "t_max": 40, "sample_interval": 1}})";
  const std::string scan = R"({"preset": "fig4a", "scan": {"atoms": 20, "t_max": 40, "xi_grid": [0.08, 0.2]}})";
  std::size_t files = 0;
  bool same = true;
  for (const auto& [command, text] : {std::pair{Command::trajectories, traj}, std::pair{Command::scan, scan}}) {
    std::vector<std::vector<std::pair<std::string, std::string>>> digests;
    int run = 0;
    for (int threads : {1, 4, 4}) {
      const auto dir = root / (std::string(to_string(command)) + std::to_string(run++));
      const auto cfg = parse_experiment(command, text, {.seed = 99, .out = dir, .threads = threads});
      digests.push_back(csv_digests(run_experiment(cfg, log)));
    }
    files += digests.front().size();
    same = same && !digests.front().empty() && digests[0] == digests[1] && digests[1] == digests[2];
  }
  fs::remove_all(root);
  return {same, std::to_string(files) + " CSV files byte-identical across threads 1, 4 and a rerun"};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {1, "initial singlet overlap 1/(N+1)", initial_overlap},
      {2, "fig2 projection statistics", fig2_projection},
      {3, "excitation ledger", excitation_ledger},
      {4, "trajectory vs master-equation averages", oracle_equivalence},
      {5, "fig3 trajectory statistics", fig3_statistics},
      {6, "entanglement witness at sweep end", witness_at_sweep_end},
      {7, "pair-basis consistency", reduced_consistency},
      {8, "fig5 headline efficiency", fig5_headline},
      {9, "heralded fidelity endpoints", herald_endpoints},
      {10, "determinism across thread counts", determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [PRIMARY] " << c.id << " " << c.name << ": " << o.detail << " ("
              << fmt(seconds, 3) << " s)" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
