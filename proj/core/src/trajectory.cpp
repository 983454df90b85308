#include "singlet/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "singlet/errors.hpp"
#include "singlet/parallel.hpp"
#include "singlet/philox.hpp"

namespace singlet {

namespace {

constexpr Complex kMinusI{0.0, -1.0};

/// Row-compressed complex block with y += alpha * A x.
struct Csr {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::vector<Eigen::Index> row_ptr{0};
  std::vector<Eigen::Index> col;
  std::vector<Complex> val;

  bool empty() const { return val.empty(); }

  // Real arithmetic avoids the NaN-recovery path of std::complex multiplication.
  void multiply_add(const ComplexVector& x, ComplexVector& y, Complex alpha = 1.0) const {
    for (Eigen::Index r = 0; r < rows; ++r) {
      double re = 0.0;
      double im = 0.0;
      for (Eigen::Index p = row_ptr[r]; p < row_ptr[r + 1]; ++p) {
        const Complex a = val[p];
        const Complex b = x[col[p]];
        re += a.real() * b.real() - a.imag() * b.imag();
        im += a.real() * b.imag() + a.imag() * b.real();
      }
      y[r] += Complex(alpha.real() * re - alpha.imag() * im, alpha.real() * im + alpha.imag() * re);
    }
  }
};

struct Sector {
  int charge = 0;
  std::vector<std::size_t> global;  // local -> global
  Eigen::VectorXd frame_diag;       // real diagonal of the static Hamiltonian
  Csr coupling;                     // static H_eff without its real diagonal
  std::vector<Eigen::VectorXd> driven_diag;
  std::vector<Csr> driven_coupling;
  std::vector<int> jump_target;     // per channel, -1 when the jump leaves the space
  std::vector<Csr> jump;            // per channel, rows in the target sector

  Eigen::Index size() const { return static_cast<Eigen::Index>(global.size()); }
};

struct Layout {
  std::vector<Sector> sectors;
  std::vector<int> sector_of;  // global -> sector
  std::vector<Eigen::Index> local_of;
  bool has_frame = false;
};

using Matrix = SparseOperator::Matrix;

/// Slices `m` into the sector blocks. Diagonal real parts go to `diag` when requested.
void slice_block(const Matrix& m, const Layout& layout, const Sector& sector, Csr& out,
                 Eigen::VectorXd* diag, const std::string& what) {
  out = Csr{};
  out.rows = sector.size();
  out.cols = sector.size();
  out.row_ptr.assign(1, 0);
  if (diag) *diag = Eigen::VectorXd::Zero(sector.size());
  const int self = static_cast<int>(&sector - layout.sectors.data());
  for (Eigen::Index r = 0; r < sector.size(); ++r) {
    const auto g = static_cast<Eigen::Index>(sector.global[static_cast<std::size_t>(r)]);
    for (Matrix::InnerIterator it(m, g); it; ++it) {
      if (it.value() == Complex(0.0)) continue;
      const auto c = static_cast<std::size_t>(it.col());
      if (layout.sector_of[c] != self) {
        throw std::logic_error(what + " does not conserve the declared charge");
      }
      Complex v = it.value();
      if (diag && it.col() == g) {
        (*diag)[r] = v.real();
        v = Complex(0.0, v.imag());
        if (v == Complex(0.0)) continue;
      }
      out.col.push_back(layout.local_of[c]);
      out.val.push_back(v);
    }
    out.row_ptr.push_back(static_cast<Eigen::Index>(out.val.size()));
  }
}

Layout build_layout(const EffectiveModel& model, const std::vector<int>& charges, const std::vector<int>& shifts) {
  Layout layout;
  const std::size_t dim = model.dimension();
  std::map<int, int> index_of_charge;
  for (int q : charges) index_of_charge.emplace(q, 0);
  int next = 0;
  for (auto& [q, idx] : index_of_charge) {
    idx = next++;
    layout.sectors.emplace_back();
    layout.sectors.back().charge = q;
  }
  layout.sector_of.resize(dim);
  layout.local_of.resize(dim);
  for (std::size_t g = 0; g < dim; ++g) {
    const int s = index_of_charge.at(charges[g]);
    layout.sector_of[g] = s;
    layout.local_of[g] = static_cast<Eigen::Index>(layout.sectors[static_cast<std::size_t>(s)].global.size());
    layout.sectors[static_cast<std::size_t>(s)].global.push_back(g);
  }

  Matrix static_eff = model.static_hamiltonian.matrix();
  static_eff += kMinusI * model.decay_operator().matrix();

  for (auto& sector : layout.sectors) {
    slice_block(static_eff, layout, sector, sector.coupling, &sector.frame_diag, "static Hamiltonian");
    if (sector.frame_diag.size() > 0 && sector.frame_diag.cwiseAbs().maxCoeff() > 0.0) layout.has_frame = true;
    for (const auto& term : model.driven_terms) {
      sector.driven_diag.emplace_back();
      sector.driven_coupling.emplace_back();
      slice_block(term.op.matrix(), layout, sector, sector.driven_coupling.back(), &sector.driven_diag.back(),
                  "driven term '" + term.op.label() + "'");
      if (sector.driven_diag.back().size() > 0 && sector.driven_diag.back().cwiseAbs().maxCoeff() > 0.0) {
        layout.has_frame = true;
      }
    }
    const int self = static_cast<int>(&sector - layout.sectors.data());
    for (std::size_t c = 0; c < model.channels.size(); ++c) {
      const auto it = index_of_charge.find(sector.charge + shifts[c]);
      const int target = it == index_of_charge.end() ? -1 : it->second;
      Csr block;
      if (target >= 0) {
        const Sector& tgt = layout.sectors[static_cast<std::size_t>(target)];
        block.rows = tgt.size();
        block.cols = sector.size();
        // Row-major op: walk target rows, keep columns in this sector.
        const Matrix& op = model.channels[c].op.matrix();
        for (Eigen::Index r = 0; r < tgt.size(); ++r) {
          const auto g = static_cast<Eigen::Index>(tgt.global[static_cast<std::size_t>(r)]);
          for (Matrix::InnerIterator jt(op, g); jt; ++jt) {
            const auto col = static_cast<std::size_t>(jt.col());
            if (layout.sector_of[col] != self || jt.value() == Complex(0.0)) continue;
            block.col.push_back(layout.local_of[col]);
            block.val.push_back(jt.value());
          }
          block.row_ptr.push_back(static_cast<Eigen::Index>(block.val.size()));
        }
      }
      sector.jump_target.push_back(target);
      sector.jump.push_back(std::move(block));
    }
  }

  // Every channel entry must land in the sector predicted by its shift.
  for (std::size_t c = 0; c < model.channels.size(); ++c) {
    const Matrix& op = model.channels[c].op.matrix();
    for (Eigen::Index r = 0; r < op.outerSize(); ++r) {
      for (Matrix::InnerIterator it(op, r); it; ++it) {
        if (it.value() == Complex(0.0)) continue;
        if (charges[static_cast<std::size_t>(r)] != charges[static_cast<std::size_t>(it.col())] + shifts[c]) {
          throw std::logic_error("jump channel '" + model.channels[c].op.label() +
                                 "' does not shift the declared charge uniformly");
        }
      }
    }
  }
  return layout;
}

struct Workspace {
  ComplexVector k1, k2, k3, k4, stage, scratch, phase_half, phase_full, phi_end;
  void resize(Eigen::Index n) {
    for (ComplexVector* v : {&k1, &k2, &k3, &k4, &stage, &scratch, &phase_half, &phase_full, &phi_end}) {
      if (v->size() != n) v->resize(n);
    }
  }
};

}  // namespace

void TrajectoryConfig::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("trajectory dt must be > 0");
  if (!(t_max > 0.0)) throw std::invalid_argument("trajectory t_max must be > 0");
  if (!(sample_interval >= dt)) throw std::invalid_argument("sample_interval must be >= dt");
  if (n_traj < 1) throw std::invalid_argument("n_traj must be >= 1");
  const double ratio = t_max / sample_interval;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio)) {
    throw std::invalid_argument("t_max must be an integer multiple of sample_interval");
  }
}

std::size_t TrajectoryConfig::sample_count() const {
  return static_cast<std::size_t>(std::llround(t_max / sample_interval));
}

std::size_t TrajectoryConfig::steps_per_sample() const {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(std::ceil(sample_interval / dt - 1e-9))));
}

struct TrajectoryEngine::Impl {
  EffectiveModel model;
  TrajectoryConfig config;
  Layout sectored;
  Layout flat;
  bool has_sectors = false;
  bool unitary = false;

  Impl(const EffectiveModel& m, TrajectoryConfig cfg) : model(m), config(std::move(cfg)) {
    config.validate();
    const std::size_t dim = model.dimension();
    if (static_cast<std::size_t>(model.static_hamiltonian.rows()) != dim) {
      throw std::invalid_argument("model Hamiltonian does not match its space");
    }
    flat = build_layout(model, std::vector<int>(dim, 0), std::vector<int>(model.channels.size(), 0));
    if (config.use_charge_sectors && model.charge) {
      if (model.charge->values.size() != dim || model.charge->channel_shifts.size() != model.channels.size()) {
        throw std::invalid_argument("conserved charge does not match the model");
      }
      sectored = build_layout(model, model.charge->values, model.charge->channel_shifts);
      has_sectors = true;
    }
    unitary = model.channels.empty() && !model.extra_decay;
  }

  const Layout& layout_for(const ComplexVector& psi0, int& sector) const {
    if (has_sectors) {
      int found = -1;
      bool single = true;
      for (Eigen::Index g = 0; g < psi0.size(); ++g) {
        if (psi0[g] == Complex(0.0)) continue;
        const int s = sectored.sector_of[static_cast<std::size_t>(g)];
        if (found < 0) found = s;
        else if (s != found) single = false;
      }
      if (single && found >= 0) {
        sector = found;
        return sectored;
      }
    }
    sector = 0;
    return flat;
  }

  void phases(const Sector& s, double t0, double t, ComplexVector& out) const {
    thread_local std::vector<double> weights;
    weights.resize(model.driven_terms.size());
    for (std::size_t i = 0; i < weights.size(); ++i) {
      const auto& f = model.driven_terms[i].coefficient_integral;
      weights[i] = f(t) - f(t0);
    }
    const double span = t - t0;
    for (Eigen::Index k = 0; k < s.size(); ++k) {
      double theta = s.frame_diag[k] * span;
      for (std::size_t i = 0; i < weights.size(); ++i) theta += weights[i] * s.driven_diag[i][k];
      out[k] = Complex(std::cos(theta), -std::sin(theta));
    }
  }

  // out = -i conj(P) R(t) (P phi), P = nullptr meaning identity.
  void derivative(const Sector& s, double t, const ComplexVector* phase, const ComplexVector& phi,
                  ComplexVector& out, ComplexVector& scratch) const {
    const ComplexVector* in = &phi;
    if (phase) {
      scratch = phase->cwiseProduct(phi);
      in = &scratch;
    }
    out.setZero();
    s.coupling.multiply_add(*in, out);
    for (std::size_t i = 0; i < model.driven_terms.size(); ++i) {
      if (!s.driven_coupling[i].empty()) {
        s.driven_coupling[i].multiply_add(*in, out, model.driven_terms[i].coefficient(t));
      }
    }
    if (phase) out = phase->conjugate().cwiseProduct(out);
    out *= kMinusI;
  }

  /// One integrating-factor RK4 step of size h from (t0, psi) into `out`.
  void step(const Layout& layout, const Sector& s, double t0, double h, const ComplexVector& psi,
            ComplexVector& out, Workspace& w) const {
    w.resize(s.size());
    const bool frame = layout.has_frame;
    if (frame) {
      phases(s, t0, t0 + 0.5 * h, w.phase_half);
      phases(s, t0, t0 + h, w.phase_full);
    }
    const ComplexVector* ph = frame ? &w.phase_half : nullptr;
    const ComplexVector* pf = frame ? &w.phase_full : nullptr;
    derivative(s, t0, nullptr, psi, w.k1, w.scratch);
    w.stage = psi + (0.5 * h) * w.k1;
    derivative(s, t0 + 0.5 * h, ph, w.stage, w.k2, w.scratch);
    w.stage = psi + (0.5 * h) * w.k2;
    derivative(s, t0 + 0.5 * h, ph, w.stage, w.k3, w.scratch);
    w.stage = psi + h * w.k3;
    derivative(s, t0 + h, pf, w.stage, w.k4, w.scratch);
    w.phi_end = psi + (h / 6.0) * (w.k1 + 2.0 * w.k2 + 2.0 * w.k3 + w.k4);
    if (frame) out = w.phase_full.cwiseProduct(w.phi_end);
    else out = w.phi_end;
  }

  ComplexVector embed(const Sector& s, const ComplexVector& local) const {
    ComplexVector full = ComplexVector::Zero(static_cast<Eigen::Index>(model.dimension()));
    for (Eigen::Index i = 0; i < s.size(); ++i) full[static_cast<Eigen::Index>(s.global[static_cast<std::size_t>(i)])] = local[i];
    return full;
  }

  TrajectorySample sample(double t, const ComplexVector& full, std::size_t jumps,
                          const std::vector<std::size_t>& per_channel) const {
    TrajectorySample out;
    out.time = t;
    out.norm = full.squaredNorm();
    out.s2 = model.expectation(model.spin_length_squared, full);
    out.singlet_overlap = model.singlet_overlap(full);
    out.jumps = jumps;
    out.channel_jumps = per_channel;
    out.observables.reserve(model.observables.size());
    for (const auto& o : model.observables) out.observables.push_back(model.expectation(o.op, full));
    return out;
  }

  static void check_initial(const EffectiveModel& model, const ComplexVector& psi0) {
    if (static_cast<std::size_t>(psi0.size()) != model.dimension()) {
      throw std::invalid_argument("initial state dimension does not match the model");
    }
    if (std::abs(psi0.squaredNorm() - 1.0) > 1e-8) throw std::invalid_argument("initial state must be normalized");
  }

  TrajectoryRecord run(const ComplexVector& psi0, std::size_t index) const {
    check_initial(model, psi0);
    if (model.extra_decay) {
      throw std::invalid_argument("model carries unmonitored decay; use propagate_no_jump");
    }
    int sector_id = 0;
    const Layout& layout = layout_for(psi0, sector_id);
    RandomStream rng(config.seed, index);
    Workspace w;

    TrajectoryRecord rec;
    rec.index = index;
    rec.seed = config.seed;
    std::vector<std::size_t> per_channel(model.channels.size(), 0);
    std::size_t total_jumps = 0;

    const Sector* sec = &layout.sectors[static_cast<std::size_t>(sector_id)];
    ComplexVector psi(sec->size());
    for (Eigen::Index i = 0; i < sec->size(); ++i) psi[i] = psi0[static_cast<Eigen::Index>(sec->global[static_cast<std::size_t>(i)])];
    ComplexVector trial;
    ComplexVector bracket;
    double threshold = rng.uniform_open();

    auto record_sample = [&](double t) {
      const ComplexVector full = embed(*sec, psi);
      rec.samples.push_back(sample(t, full, total_jumps, per_channel));
      if (rec.status == RecordStatus::ok && model.truncation_weights) {
        const double pop = model.truncation_population(full);
        if (pop > model.truncation_threshold) {
          rec.status = RecordStatus::truncation_violation;
          std::ostringstream msg;
          msg << "top Fock-level population " << pop << " exceeds " << model.truncation_threshold << " at t = " << t;
          rec.diagnostic = msg.str();
        }
      }
    };

    auto fail = [&](double t, const std::string& why) {
      rec.status = RecordStatus::unstable;
      std::ostringstream msg;
      msg << why << " at t = " << t;
      rec.diagnostic = msg.str();
    };

    auto do_jump = [&](double t) -> bool {
      std::vector<ComplexVector> candidates(model.channels.size());
      std::vector<double> weight(model.channels.size(), 0.0);
      double total = 0.0;
      for (std::size_t c = 0; c < model.channels.size(); ++c) {
        if (sec->jump_target[c] < 0) continue;
        candidates[c] = ComplexVector::Zero(sec->jump[c].rows);
        sec->jump[c].multiply_add(psi, candidates[c]);
        weight[c] = model.channels[c].rate * candidates[c].squaredNorm();
        total += weight[c];
      }
      const double u = rng.uniform_open() * total;
      if (!(total > 0.0)) {
        fail(t, "norm decayed but no jump channel has support");
        return false;
      }
      std::size_t chosen = 0;
      double acc = 0.0;
      for (std::size_t c = 0; c < weight.size(); ++c) {
        if (weight[c] <= 0.0) continue;
        chosen = c;
        acc += weight[c];
        if (u < acc) break;
      }
      psi = candidates[chosen] / candidates[chosen].norm();
      sec = &layout.sectors[static_cast<std::size_t>(sec->jump_target[chosen])];
      rec.jumps.push_back({t, static_cast<int>(chosen)});
      ++per_channel[chosen];
      ++total_jumps;
      threshold = rng.uniform_open();
      return true;
    };

    const std::size_t n_samples = config.sample_count();
    const std::size_t per_sample = config.steps_per_sample();
    const double h_grid = config.sample_interval / double(per_sample);
    const double tol = config.jump_tolerance();

    record_sample(0.0);
    bool alive = true;
    for (std::size_t si = 1; si <= n_samples && alive; ++si) {
      for (std::size_t j = 0; j < per_sample && alive; ++j) {
        const std::size_t step_index = (si - 1) * per_sample + j;
        const double t_end = j + 1 == per_sample ? double(si) * config.sample_interval
                                                 : double(step_index + 1) * h_grid;
        double t = double(step_index) * h_grid;
        while (t < t_end && alive) {
          const double h = t_end - t;
          const double n_old = psi.squaredNorm();
          step(layout, *sec, t, h, psi, trial, w);
          const double n_new = trial.squaredNorm();
          if (!std::isfinite(n_new) || n_new > n_old * (1.0 + config.norm_step_tolerance)) {
            fail(t, "norm increased during a step (integrator unstable; reduce dt)");
            alive = false;
            break;
          }
          if (unitary) {
            if (std::abs(n_new - n_old) > config.norm_step_tolerance * n_old) {
              fail(t, "norm drift in a unitary model (reduce dt)");
              alive = false;
              break;
            }
            psi.swap(trial);
            t = t_end;
            break;
          }
          if (n_new > threshold) {
            psi.swap(trial);
            t = t_end;
            break;
          }
          // The squared norm crosses the threshold inside (t, t + h]; bisect.
          double lo = 0.0;
          double hi = h;
          bracket = trial;
          while (hi - lo > tol) {
            const double mid = 0.5 * (lo + hi);
            step(layout, *sec, t, mid, psi, trial, w);
            if (trial.squaredNorm() > threshold) {
              lo = mid;
            } else {
              hi = mid;
              bracket = trial;
            }
          }
          psi.swap(bracket);
          t = (hi == h) ? t_end : t + hi;
          if (!do_jump(t)) alive = false;
        }
      }
      if (alive) record_sample(double(si) * config.sample_interval);
    }
    rec.final_state = embed(*sec, psi);
    rec.final_state /= rec.final_state.norm();
    return rec;
  }

  std::vector<NoJumpSnapshot> propagate_no_jump(const ComplexVector& psi0) const {
    check_initial(model, psi0);
    int sector_id = 0;
    const Layout& layout = layout_for(psi0, sector_id);
    const Sector& sec = layout.sectors[static_cast<std::size_t>(sector_id)];
    Workspace w;
    ComplexVector psi(sec.size());
    for (Eigen::Index i = 0; i < sec.size(); ++i) psi[i] = psi0[static_cast<Eigen::Index>(sec.global[static_cast<std::size_t>(i)])];
    ComplexVector trial;
    std::vector<NoJumpSnapshot> out;
    out.push_back({0.0, embed(sec, psi)});
    const std::size_t n_samples = config.sample_count();
    const std::size_t per_sample = config.steps_per_sample();
    const double h_grid = config.sample_interval / double(per_sample);
    for (std::size_t si = 1; si <= n_samples; ++si) {
      for (std::size_t j = 0; j < per_sample; ++j) {
        const std::size_t step_index = (si - 1) * per_sample + j;
        const double t0 = double(step_index) * h_grid;
        const double t1 = j + 1 == per_sample ? double(si) * config.sample_interval : double(step_index + 1) * h_grid;
        step(layout, sec, t0, t1 - t0, psi, trial, w);
        const double growth = trial.squaredNorm() - psi.squaredNorm();
        if (!std::isfinite(growth) || growth > config.norm_step_tolerance * psi.squaredNorm()) {
          std::ostringstream msg;
          msg << "no-jump propagation unstable at t = " << t0 << " (reduce dt)";
          throw NumericalError(msg.str());
        }
        psi.swap(trial);
      }
      out.push_back({double(si) * config.sample_interval, embed(sec, psi)});
    }
    return out;
  }
};

TrajectoryEngine::TrajectoryEngine(const EffectiveModel& model, TrajectoryConfig config)
    : impl_(std::make_unique<Impl>(model, std::move(config))) {}
TrajectoryEngine::~TrajectoryEngine() = default;
TrajectoryEngine::TrajectoryEngine(TrajectoryEngine&&) noexcept = default;
TrajectoryEngine& TrajectoryEngine::operator=(TrajectoryEngine&&) noexcept = default;

const TrajectoryConfig& TrajectoryEngine::config() const { return impl_->config; }

TrajectoryRecord TrajectoryEngine::run(const ComplexVector& psi0, std::size_t index) const {
  return impl_->run(psi0, index);
}

std::vector<NoJumpSnapshot> TrajectoryEngine::propagate_no_jump(const ComplexVector& psi0) const {
  return impl_->propagate_no_jump(psi0);
}

std::size_t TrajectoryEngine::sector_count() const {
  return impl_->has_sectors ? impl_->sectored.sectors.size() : 1;
}

TrajectoryRecord run_trajectory(const EffectiveModel& model, const ComplexVector& psi0,
                                const TrajectoryConfig& config, std::size_t index) {
  return TrajectoryEngine(model, config).run(psi0, index);
}

EnsembleAverage average_records(const std::vector<TrajectoryRecord>& records) {
  EnsembleAverage avg;
  std::vector<const TrajectoryRecord*> valid;
  for (const auto& r : records) {
    if (r.valid()) valid.push_back(&r);
  }
  avg.contributing = valid.size();
  if (valid.empty()) return avg;
  const std::size_t n_samples = valid.front()->samples.size();
  const std::size_t n_obs = valid.front()->samples.front().observables.size();
  const double n = double(valid.size());
  avg.observables.assign(n_obs, {});
  avg.observables_stderr.assign(n_obs, {});
  auto mean_and_err = [&](auto get, std::vector<double>& mean, std::vector<double>* err, std::size_t i) {
    double sum = 0.0;
    for (const auto* r : valid) sum += get(r->samples[i]);
    const double m = sum / n;
    mean.push_back(m);
    if (err) {
      double ss = 0.0;
      for (const auto* r : valid) ss += (get(r->samples[i]) - m) * (get(r->samples[i]) - m);
      err->push_back(valid.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0);
    }
  };
  for (std::size_t i = 0; i < n_samples; ++i) {
    avg.time.push_back(valid.front()->samples[i].time);
    mean_and_err([](const TrajectorySample& s) { return s.s2; }, avg.s2, &avg.s2_stderr, i);
    mean_and_err([](const TrajectorySample& s) { return s.singlet_overlap; }, avg.singlet_overlap, nullptr, i);
    mean_and_err([](const TrajectorySample& s) { return double(s.jumps); }, avg.jumps, nullptr, i);
    for (std::size_t o = 0; o < n_obs; ++o) {
      mean_and_err([o](const TrajectorySample& s) { return s.observables[o]; }, avg.observables[o],
                   &avg.observables_stderr[o], i);
    }
  }
  return avg;
}

EnsembleResult run_ensemble(const EffectiveModel& model, const ComplexVector& psi0, const TrajectoryConfig& config) {
  const TrajectoryEngine engine(model, config);
  EnsembleResult result;
  result.records.resize(config.n_traj);
  parallel_for(config.n_traj, config.threads, [&](std::size_t i) { result.records[i] = engine.run(psi0, i); });
  result.average = average_records(result.records);
  return result;
}

}  // namespace singlet
