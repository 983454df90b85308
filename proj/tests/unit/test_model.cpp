#include <doctest.h>

#include <cmath>

#include <unsupported/Eigen/KroneckerProduct>

#include "oracles.hpp"
#include "singlet/model.hpp"

using namespace singlet;

namespace {

ComplexMatrix dense(const SparseOperator& op) { return ComplexMatrix(op.matrix()); }

}  // namespace

TEST_CASE("microscopic to Dicke parameters") {
  MicroscopicParams m;
  m.g = 1.0;
  m.rabi_minus = 6.0;
  m.detuning = 1.0;
  m.kappa = 1.0;
  m.atoms = 4;
  const auto d = effective_dicke_params(m);
  CHECK(d.lambda_minus == doctest::Approx(1.0));
  CHECK(d.lambda_plus == doctest::Approx(0.0));
  // omega picks up the dispersive shift N g^2 / (3 Delta)
  CHECK(d.omega == doctest::Approx(4.0 / 3.0));

  m.detuning = 0.0;
  CHECK_THROWS_AS(effective_dicke_params(m), std::invalid_argument);
}

TEST_CASE("adiabatic elimination formulas") {
  EffectiveDickeParams d;
  d.omega = 1.0;
  d.kappa = 1.0;
  d.lambda_minus = 2.0;
  d.atoms = 10;
  const auto p = spinor_params(d);
  CHECK(p.interaction == doctest::Approx(-1.0));
  CHECK(p.decay == doctest::Approx(1.0));

  std::vector<std::string> warnings;
  spinor_params(d, &warnings);
  CHECK_FALSE(warnings.empty());

  d.omega = 1000.0;
  warnings.clear();
  const auto far = spinor_params(d, &warnings);
  CHECK(warnings.empty());
  CHECK(far.decay / std::abs(far.interaction) == doctest::Approx(d.kappa / d.omega));

  d.omega = 0.0;
  CHECK_THROWS_AS(spinor_params(d), std::invalid_argument);
}

TEST_CASE("Tavis-Cummings model structure") {
  EffectiveDickeParams d;
  d.lambda_minus = 6.0;
  d.kappa = 1.0;
  d.atoms = 3;
  const auto basis = build_basis(3);
  const CavitySpace cav(4);
  const auto m = build_dicke_model(d, basis, cav);
  CHECK(m.descriptor.variant == ModelVariant::tavis_cummings);
  CHECK(m.dimension() == 10 * 5);
  CHECK(m.static_hamiltonian.hermiticity_defect() < 1e-12);
  REQUIRE(m.channels.size() == 1);
  CHECK(m.channels[0].rate == doctest::Approx(1.0));
  REQUIRE(m.charge.has_value());
  CHECK_FALSE(m.singlet.has_value());

  // H = (6 / sqrt(2N)) (a S+ + a^dag S-), checked against an independent assembly
  const ComplexMatrix sp = oracle::collective(*basis, CollectiveOp::Splus);
  const ComplexMatrix a = ComplexMatrix(cav.annihilation().matrix());
  const ComplexMatrix expected =
      (6.0 / std::sqrt(6.0)) * (Eigen::kroneckerProduct(sp, a).eval() + Eigen::kroneckerProduct(sp, a).eval().adjoint());
  CHECK((dense(m.static_hamiltonian) - expected).cwiseAbs().maxCoeff() < 1e-12);

  // excitation number commutes with H
  const auto* exc = m.find_observable("excitation");
  REQUIRE(exc != nullptr);
  CHECK(commutator(m.static_hamiltonian, exc->op).max_abs() < 1e-12);
  for (std::size_t i = 0; i < m.dimension(); ++i) {
    CHECK(dense(exc->op)(Eigen::Index(i), Eigen::Index(i)).real() == doctest::Approx(m.charge->values[i]));
  }
}

TEST_CASE("Dicke model with lambda_+ has no charge") {
  EffectiveDickeParams d;
  d.lambda_minus = 1.0;
  d.lambda_plus = 1.0;
  d.omega = 0.5;
  d.omega0 = 0.2;
  d.kappa = 2.0;
  d.atoms = 2;
  const auto m = build_dicke_model(d, build_basis(2), CavitySpace(3));
  CHECK(m.descriptor.variant == ModelVariant::dicke);
  CHECK_FALSE(m.charge.has_value());
  CHECK(m.static_hamiltonian.hermiticity_defect() < 1e-12);
}

TEST_CASE("spinor model conserves Sz and decays through S-") {
  const SpinorModelParams p{1.0, 0.01, 0.0, 6};
  const SweepSchedule sched{ScheduleKind::exponential, 7.0, 0.08, 10.0};
  const auto basis = build_basis(6);
  const auto m = build_spinor_model(p, sched, basis);
  const SparseOperator sz = collective_operator(*basis, CollectiveOp::Sz);
  for (double t : {0.0, 1.3, 7.5}) {
    const auto h = m.hamiltonian(t);
    CHECK(h.hermiticity_defect() < 1e-12);
    CHECK(commutator(h, sz).max_abs() < 1e-11);
  }
  REQUIRE(m.channels.size() == 1);
  CHECK(m.channels[0].rate == doctest::Approx(0.01 / 6.0));
  CHECK((dense(m.channels[0].op) - oracle::collective(*basis, CollectiveOp::Sminus)).cwiseAbs().maxCoeff() < 1e-12);

  // H(0) = (S^2 - Sz^2)/N - q0 N0
  const ComplexMatrix s2 = oracle::collective(*basis, CollectiveOp::S2);
  const ComplexMatrix z = oracle::collective(*basis, CollectiveOp::Sz);
  const ComplexMatrix n0 = oracle::collective(*basis, CollectiveOp::N0);
  const ComplexMatrix expected = (s2 - z * z) / 6.0 - 7.0 * n0;
  CHECK((dense(m.hamiltonian(0.0)) - expected).cwiseAbs().maxCoeff() < 1e-11);

  // the product state dominates the ground state at large q
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(expected);
  const auto psi = all_in_zero(basis);
  CHECK(std::abs(eig.eigenvectors().col(0).dot(psi.amplitudes)) > 0.99);

  CHECK_THROWS(build_spinor_model({0.0, 0.0, 0.0, 6}, sched, basis));
  CHECK_THROWS(build_spinor_model({1.0, -1.0, 0.0, 6}, sched, basis));
}

TEST_CASE("reduced model is the projected spinor model") {
  const SpinorModelParams p{1.0, 0.02, 0.0, 8};
  const SweepSchedule sched{ScheduleKind::exponential, 3.0, 0.1, 10.0};
  const auto basis = build_basis(8);
  const auto full = build_spinor_model(p, sched, basis);
  const auto red = build_reduced_model(p, sched);
  CHECK(red.dimension() == 5);
  for (double t : {0.0, 2.0}) {
    const ComplexMatrix projected = project_onto_pairs(full.effective_hamiltonian(t), *basis);
    CHECK((projected - dense(red.effective_hamiltonian(t))).cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK(red.channels.empty());
  REQUIRE(red.extra_decay.has_value());
  CHECK_THROWS(build_reduced_model({1.0, 0.0, 0.0, 7}, sched));
}

TEST_CASE("initial state embedding") {
  const auto basis = build_basis(4);
  EffectiveDickeParams d;
  d.lambda_minus = 1.0;
  d.kappa = 1.0;
  d.atoms = 4;
  const auto m = build_dicke_model(d, basis, CavitySpace(3));
  const auto v = model_state(m, all_in_zero(basis));
  CHECK(v.size() == 15 * 4);
  CHECK(v.squaredNorm() == doctest::Approx(1.0));
  CHECK(m.singlet_overlap(v) == doctest::Approx(1.0 / 5.0));
  CHECK(m.expectation(m.spin_length_squared, v) == doctest::Approx(8.0));
  CHECK(m.truncation_population(v) == doctest::Approx(0.0));
}

TEST_CASE("schedules") {
  const SweepSchedule e{ScheduleKind::exponential, 7.0, 0.08, 150.0};
  CHECK(e.q(0.0) == doctest::Approx(7.0));
  CHECK(e.q(10.0) == doctest::Approx(7.0 * std::exp(-0.8)));
  // integral checked against a fine midpoint rule
  for (auto kind : {ScheduleKind::exponential, ScheduleKind::linear, ScheduleKind::reciprocal, ScheduleKind::constant}) {
    const SweepSchedule s{kind, 2.0, 0.3, 12.0};
    const int n = 200000;
    const double t = 15.0;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += s.q((i + 0.5) * t / n) * t / n;
    CHECK(s.integral(t) == doctest::Approx(acc).epsilon(1e-6));
  }
  CHECK(schedule_kind_from_string("linear") == ScheduleKind::linear);
  CHECK_THROWS(schedule_kind_from_string("cubic"));
  CHECK_THROWS((SweepSchedule{ScheduleKind::exponential, 1.0, -0.1, 1.0}.validate()));
}

TEST_CASE("physical unit conversion") {
  const double two_pi = 2.0 * M_PI;
  EffectiveDickeParams d;
  d.lambda_minus = two_pi * 300e3;
  d.kappa = two_pi * 10e3;
  d.omega = two_pi * 10e6;
  d.atoms = 1000;
  const auto p = spinor_params(d);
  const double expected_lambda = d.omega * d.lambda_minus * d.lambda_minus / (2.0 * (d.omega * d.omega + d.kappa * d.kappa));
  CHECK(std::abs(p.interaction) == doctest::Approx(expected_lambda));
  CHECK(p.decay / std::abs(p.interaction) == doctest::Approx(1e-3));
  const double duration_ms = 200.0 / std::abs(p.interaction) * 1e3;
  CHECK(duration_ms == doctest::Approx(7.07).epsilon(1e-2));
}
