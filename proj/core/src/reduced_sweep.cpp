#include "singlet/reduced_sweep.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <sstream>
#include <stdexcept>

#include "singlet/errors.hpp"
#include "singlet/parallel.hpp"

namespace singlet {

Eigen::MatrixXd TridiagonalOperator::dense() const {
  Eigen::MatrixXd m = diag.asDiagonal();
  for (Eigen::Index k = 0; k < off.size(); ++k) {
    m(k, k + 1) = off[k];
    m(k + 1, k) = off[k];
  }
  return m;
}

ReducedOperators reduced_operators(int n_atoms) {
  if (n_atoms < 2 || n_atoms % 2 != 0) throw std::invalid_argument("even N required");
  const Eigen::Index dim = n_atoms / 2 + 1;
  const double n = n_atoms;
  ReducedOperators ops;
  ops.atoms = n_atoms;
  ops.transverse.diag.resize(dim);
  ops.transverse.off.resize(dim - 1);
  ops.n0.resize(dim);
  for (Eigen::Index k = 0; k < dim; ++k) {
    const double kk = double(k);
    ops.transverse.diag[k] = 2.0 * ((kk + 1.0) * (n - 2.0 * kk) + kk * (n - 2.0 * kk + 1.0));
    ops.n0[k] = n - 2.0 * kk;
    if (k + 1 < dim) ops.transverse.off[k] = 2.0 * (kk + 1.0) * std::sqrt((n - 2.0 * kk) * (n - 2.0 * kk - 1.0));
  }
  return ops;
}

PairBasisState PairBasisState::all_in_zero(int n_atoms) {
  if (n_atoms < 2 || n_atoms % 2 != 0) throw std::invalid_argument("even N required");
  PairBasisState s;
  s.atoms = n_atoms;
  s.amplitudes = ComplexVector::Zero(n_atoms / 2 + 1);
  s.amplitudes[0] = 1.0;
  return s;
}

double pair_singlet_overlap(const ComplexVector& amplitudes) {
  const int n_atoms = 2 * static_cast<int>(amplitudes.size() - 1);
  const auto c = singlet_coefficients(n_atoms);
  Complex acc = 0.0;
  for (Eigen::Index k = 0; k < amplitudes.size(); ++k) acc += c[static_cast<std::size_t>(k)] * amplitudes[k];
  return std::norm(acc) / amplitudes.squaredNorm();
}

void NoJumpConfig::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  if (!(t_max > 0.0)) throw std::invalid_argument("t_max must be > 0");
  if (sample_interval < 0.0) throw std::invalid_argument("sample_interval must be >= 0");
  if (sample_interval > 0.0) {
    if (sample_interval < dt) throw std::invalid_argument("sample_interval must be >= dt");
    const double ratio = t_max / sample_interval;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio)) {
      throw std::invalid_argument("t_max must be an integer multiple of sample_interval");
    }
  }
}

double NoJumpResult::relative_difference() const {
  return std::abs(survival_norm - survival_product) / std::max(survival_norm, survival_product);
}

namespace {

/// y = B x where B is the transverse matrix with e^{-i theta} on the upper band
/// and e^{+i theta} on the lower band (theta = 0 gives the plain matrix).
void banded_product(const TridiagonalOperator& t, const ComplexVector& x, double theta, ComplexVector& y) {
  const Complex up = std::polar(1.0, -theta);
  const Complex down = std::conj(up);
  const Eigen::Index n = x.size();
  for (Eigen::Index k = 0; k < n; ++k) {
    Complex acc = t.diag[k] * x[k];
    if (k + 1 < n) acc += t.off[k] * up * x[k + 1];
    if (k > 0) acc += t.off[k - 1] * down * x[k - 1];
    y[k] = acc;
  }
}

ComplexVector lab_frame(const ComplexVector& phi, const Eigen::VectorXd& n0, double phase_rate) {
  ComplexVector psi(phi.size());
  for (Eigen::Index k = 0; k < phi.size(); ++k) psi[k] = std::polar(1.0, phase_rate * n0[k]) * phi[k];
  return psi;
}

}  // namespace

NoJumpResult propagate_no_jump(const SpinorModelParams& params, const SweepSchedule& schedule,
                               const NoJumpConfig& config, const std::optional<PairBasisState>& initial) {
  params.validate();
  schedule.validate();
  config.validate();
  if (params.interaction == 0.0) throw std::invalid_argument("Lambda must be nonzero");
  const ReducedOperators ops = reduced_operators(params.atoms);
  const double n = params.atoms;
  const double sign = params.interaction > 0.0 ? 1.0 : -1.0;
  const double gamma = params.decay / std::abs(params.interaction);
  // phi' = -i alpha B(t) phi
  const Complex alpha = Complex(0.0, -1.0) * Complex(sign, -gamma) / n;
  auto rhs = [&](const ComplexVector& x, double th, ComplexVector& y) {
    banded_product(ops.transverse, x, th, y);
    y *= alpha;
  };

  ComplexVector phi = initial ? initial->amplitudes : PairBasisState::all_in_zero(params.atoms).amplitudes;
  if (phi.size() != ops.n0.size()) throw std::invalid_argument("initial pair state has the wrong dimension");
  if (initial && initial->atoms != params.atoms) throw std::invalid_argument("initial pair state N mismatch");

  // psi_k = exp(i s Q(t) n0_k) phi_k, so the coupling phase between k and k+1 is 2 s Q(t).
  auto theta = [&](double t) { return 2.0 * sign * schedule.integral(t); };

  const double norm0 = phi.squaredNorm();
  const std::size_t per_sample =
      config.sample_interval > 0.0
          ? std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(config.sample_interval / config.dt - 1e-9)))
          : std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(config.t_max / config.dt - 1e-9)));
  const double interval = config.sample_interval > 0.0 ? config.sample_interval : config.t_max;
  const std::size_t n_samples = static_cast<std::size_t>(std::llround(config.t_max / interval));
  const double h = interval / double(per_sample);

  NoJumpResult out;
  double product = norm0;
  auto record = [&](double t) {
    const ComplexVector psi = lab_frame(phi, ops.n0, sign * schedule.integral(t));
    NoJumpSample s;
    s.time = t;
    s.survival_norm = phi.squaredNorm();
    s.survival_product = product;
    s.singlet_overlap = pair_singlet_overlap(psi);
    ComplexVector m_psi(psi.size());
    banded_product(ops.transverse, psi, 0.0, m_psi);
    s.s2 = psi.dot(m_psi).real() / s.survival_norm;
    out.samples.push_back(s);
  };

  ComplexVector k1(phi.size()), k2(phi.size()), k3(phi.size()), k4(phi.size()), stage(phi.size()), mphi(phi.size());
  record(0.0);
  for (std::size_t si = 1; si <= n_samples; ++si) {
    for (std::size_t j = 0; j < per_sample; ++j) {
      const double t = double((si - 1) * per_sample + j) * h;
      // <psi|M|psi> = <phi|B(theta)|phi>

      const double th0 = theta(t);
      const double th_half = theta(t + 0.5 * h);
      const double th1 = theta(t + h);
      banded_product(ops.transverse, phi, th0, mphi);
      const double sq = phi.squaredNorm();
      const double m_mean = phi.dot(mphi).real() / sq;
      product *= 1.0 - 2.0 * gamma / n * m_mean * h;

      rhs(phi, th0, k1);
      stage = phi + (0.5 * h) * k1;
      rhs(stage, th_half, k2);
      stage = phi + (0.5 * h) * k2;
      rhs(stage, th_half, k3);
      stage = phi + h * k3;
      rhs(stage, th1, k4);
      phi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      const double grown = phi.squaredNorm();
      if (!std::isfinite(grown) || grown > sq * (1.0 + 1e-9)) {
        std::ostringstream msg;
        msg << "pair-basis propagation unstable at t = " << t << " (dt = " << config.dt << ", N = " << params.atoms
            << "; reduce dt)";
        throw NumericalError(msg.str());
      }
    }
    record(double(si) * interval);
  }

  out.final_state = {params.atoms, lab_frame(phi, ops.n0, sign * schedule.integral(config.t_max))};
  out.survival_norm = out.final_state.squared_norm() / norm0;
  out.survival_product = product / norm0;
  out.singlet_overlap = out.samples.back().singlet_overlap;
  out.s2 = out.samples.back().s2;
  if (out.relative_difference() > config.consistency_tolerance) {
    std::ostringstream msg;
    msg << "survival estimates disagree: norm " << out.survival_norm << " vs product " << out.survival_product
        << " (reduce dt)";
    throw NumericalError(msg.str());
  }
  return out;
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi >= lo)) throw std::invalid_argument("log grid needs 0 < lo <= hi");
  if (n == 0) throw std::invalid_argument("log grid needs at least one point");
  if (n == 1) return {lo};
  std::vector<double> out(n);
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(a + (b - a) * double(i) / double(n - 1));
  out.back() = hi;
  return out;
}

void ScanSpec::validate() const {
  if (atoms < 2 || atoms % 2 != 0) throw std::invalid_argument("scan: even N required");
  if (decay_ratio < 0.0) throw std::invalid_argument("scan: Gamma/Lambda must be >= 0");
  if (interaction_sign != 1.0 && interaction_sign != -1.0) throw std::invalid_argument("scan: sign must be +1 or -1");
  if (q0_grid.empty() || xi_grid.empty()) throw std::invalid_argument("scan: grid is empty");
  if (!(t_max > 0.0) || !(dt > 0.0)) throw std::invalid_argument("scan: t_max and dt must be > 0");
}

std::size_t ScanResult::failures() const {
  return static_cast<std::size_t>(std::count_if(points.begin(), points.end(), [](const ScanPoint& p) { return !p.ok; }));
}

std::optional<ScanPoint> ScanResult::best() const {
  std::optional<ScanPoint> top;
  for (const auto& p : points) {
    if (p.ok && (!top || p.efficiency > top->efficiency)) top = p;
  }
  return top;
}

ScanResult scan_sweep(const ScanSpec& spec) {
  spec.validate();
  ScanResult result;
  result.spec = spec;
  const std::size_t nq = spec.q0_grid.size();
  result.points.resize(nq * spec.xi_grid.size());
  const SpinorModelParams params{spec.interaction_sign, spec.decay_ratio, 0.0, spec.atoms};
  parallel_for(result.points.size(), spec.threads, [&](std::size_t i) {
    ScanPoint& point = result.points[i];
    point.q0 = spec.q0_grid[i % nq];
    point.xi = spec.xi_grid[i / nq];
    try {
      const SweepSchedule schedule{spec.kind, point.q0, point.xi, spec.t_max};
      NoJumpConfig cfg;
      cfg.dt = spec.dt;
      cfg.t_max = spec.t_max;
      cfg.consistency_tolerance = spec.consistency_tolerance;
      const NoJumpResult r = propagate_no_jump(params, schedule, cfg);
      point.survival = r.survival_norm;
      point.survival_product = r.survival_product;
      point.singlet_overlap = r.singlet_overlap;
      point.efficiency = r.survival_norm * r.singlet_overlap;
      point.s2 = r.s2;
      point.ok = true;
    } catch (const std::exception& e) {
      point.ok = false;
      point.error = e.what();
    }
  });
  return result;
}

}  // namespace singlet
