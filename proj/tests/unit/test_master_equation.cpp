#include <doctest.h>

#include "oracles.hpp"
#include "singlet/master_equation.hpp"

using namespace singlet;

namespace {

std::vector<std::pair<double, ComplexMatrix>> channels_of(const EffectiveModel& m) {
  std::vector<std::pair<double, ComplexMatrix>> out;
  for (const auto& c : m.channels) out.emplace_back(c.rate, ComplexMatrix(c.op.matrix()));
  return out;
}

}  // namespace

TEST_CASE("spinor master equation matches the Liouvillian exponential") {
  const int n = 3;
  const auto basis = build_basis(n);
  const SweepSchedule sched{ScheduleKind::constant, 0.8, 0.0, 2.0};
  const auto m = build_spinor_model({1.0, 0.6, 0.0, n}, sched, basis);
  const auto rho0 = DensityMatrix::pure(m.space, model_state(m, all_in_zero(basis)));
  MasterEquationConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_max = 2.0;
  cfg.sample_interval = 0.5;
  const auto res = integrate_master_equation(m, rho0, cfg);
  REQUIRE(res.samples.size() == 5);
  const auto l = oracle::liouvillian(ComplexMatrix(m.hamiltonian(0.0).matrix()), channels_of(m));
  const ComplexMatrix exact = oracle::evolve_density(l, rho0.rho, 2.0);
  CHECK((exact - res.final_state.rho).cwiseAbs().maxCoeff() < 1e-9);
  for (const auto& s : res.samples) CHECK(s.trace == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(res.samples.back().s2 == doctest::Approx(trace_product(m.spin_length_squared, exact).real()).epsilon(1e-9));
}

TEST_CASE("Tavis-Cummings master equation matches the Liouvillian exponential") {
  EffectiveDickeParams d;
  d.lambda_minus = 2.0;
  d.omega = 0.3;
  d.kappa = 1.0;
  d.atoms = 2;
  const auto basis = build_basis(2);
  const auto m = build_dicke_model(d, basis, CavitySpace(3));
  const auto rho0 = DensityMatrix::pure(m.space, model_state(m, all_in_zero(basis)));
  MasterEquationConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_max = 1.5;
  cfg.sample_interval = 0.5;
  const auto res = integrate_master_equation(m, rho0, cfg);
  const auto l = oracle::liouvillian(ComplexMatrix(m.hamiltonian(0.0).matrix()), channels_of(m));
  const ComplexMatrix exact = oracle::evolve_density(l, rho0.rho, 1.5);
  CHECK((exact - res.final_state.rho).cwiseAbs().maxCoeff() < 1e-9);
  CHECK_NOTHROW(res.final_state.validate());
}

TEST_CASE("density matrix validation and limits") {
  const auto basis = build_basis(2);
  const SweepSchedule sched{ScheduleKind::constant, 0.8, 0.0, 2.0};
  const auto m = build_spinor_model({1.0, 0.1, 0.0, 2}, sched, basis);
  auto rho = DensityMatrix::pure(m.space, model_state(m, all_in_zero(basis)));
  CHECK(rho.trace() == doctest::Approx(1.0));
  rho.rho *= 1.1;
  CHECK_THROWS(rho.validate());

  MasterEquationConfig cfg;
  cfg.dimension_cap = 3;
  CHECK_THROWS(integrate_master_equation(m, DensityMatrix::pure(m.space, model_state(m, all_in_zero(basis))), cfg));

  const auto red = build_reduced_model({1.0, 0.1, 0.0, 2}, sched);
  ComplexVector v = ComplexVector::Zero(2);
  v[0] = 1.0;
  CHECK_THROWS(integrate_master_equation(red, DensityMatrix::pure(red.space, v), MasterEquationConfig{}));
}
