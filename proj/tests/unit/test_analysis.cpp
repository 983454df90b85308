#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "singlet/analysis.hpp"

using namespace singlet;

TEST_CASE("spin length from S^2") {
  CHECK(spin_length(6.0) == doctest::Approx(2.0));
  CHECK(spin_length(0.0) == 0.0);
  CHECK(spin_length(-1e-12) == 0.0);
  CHECK(spin_length(20.0) == doctest::Approx(4.0));
  CHECK_THROWS(spin_length(-0.1));
}

TEST_CASE("witness on the product state and the singlet") {
  for (int n : {2, 4, 6}) {
    const auto basis = build_basis(n);
    const auto product = entanglement_witness(all_in_zero(basis));
    CHECK(product.s2 == doctest::Approx(2.0 * n));
    CHECK(product.margin == doctest::Approx(-double(n)));
    CHECK_FALSE(product.entangled());
    // Sz^2 vanishes on |0,N,0>, the transverse moments carry N each
    CHECK(product.sz2 == doctest::Approx(0.0));
    CHECK(product.sx2 == doctest::Approx(double(n)));

    const auto s = entanglement_witness(singlet_vector(basis));
    CHECK(std::abs(s.s2) < 1e-10);
    CHECK(s.entangled());
  }
}

TEST_CASE("witness agrees with the product-space moments") {
  const auto basis = build_basis(3);
  ComplexVector v = ComplexVector::Random(10);
  v.normalize();
  const SpinStateVector state{basis, v, true};
  const auto r = entanglement_witness(state);
  const ComplexMatrix sx = oracle::collective(*basis, CollectiveOp::Sx);
  CHECK(r.sx2 == doctest::Approx(v.dot(sx * sx * v).real()).epsilon(1e-12));
  CHECK(r.sx2 + r.sy2 + r.sz2 == doctest::Approx(r.s2).epsilon(1e-12));
}

TEST_CASE("spin density traces out the cavity") {
  EffectiveDickeParams d;
  d.lambda_minus = 1.0;
  d.kappa = 1.0;
  d.atoms = 2;
  const auto basis = build_basis(2);
  const auto m = build_dicke_model(d, basis, CavitySpace(2));
  ComplexVector psi = ComplexVector::Zero(18);
  psi[0 * 3 + 1] = std::sqrt(0.5);  // |spin 0> |n=1>
  psi[2 * 3 + 0] = std::sqrt(0.5);  // |spin 2> |n=0>
  const ComplexMatrix rho = spin_density(m, psi);
  CHECK(rho.trace().real() == doctest::Approx(1.0));
  CHECK(rho(0, 0).real() == doctest::Approx(0.5));
  CHECK(rho(2, 2).real() == doctest::Approx(0.5));
  CHECK(std::abs(rho(0, 2)) < 1e-15);
}

TEST_CASE("heralded fidelity") {
  CHECK(heralded_fidelity(2, 0.5).fidelity == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  for (int n : {2, 10, 40}) {
    CHECK(heralded_fidelity(n, 1.0).fidelity == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(heralded_fidelity(n, 0.0).fidelity == doctest::Approx(1.0 / (n + 1.0)).epsilon(1e-10));
    double previous = 0.0;
    for (int i = 0; i <= 20; ++i) {
      const double f = heralded_fidelity(n, i / 20.0).fidelity;
      CHECK(f > previous);
      previous = f;
    }
  }
  CHECK_THROWS(heralded_fidelity(4, 1.5));
}

TEST_CASE("histograms") {
  const auto h = integer_histogram({0.1, 0.9, 1.2, 2.6, 7.0}, 3);
  CHECK(h.counts == std::vector<std::size_t>{1, 2, 0, 1});
  CHECK(h.total() == 4);
  CHECK(h.mode() == 1.0);
  CHECK(std::isnan(integer_histogram({}, 2).mode()));

  const auto s = s2_histogram({6.1, 5.9, 0.0, 20.0, 6.0}, 4);
  CHECK(s.centers == std::vector<double>{0.0, 2.0, 6.0, 12.0, 20.0});
  CHECK(s.counts == std::vector<std::size_t>{1, 0, 3, 0, 1});
  CHECK(s.mode() == 6.0);
}

TEST_CASE("split by jumps") {
  auto make = [](std::size_t jumps, double s2, double overlap, RecordStatus st = RecordStatus::ok) {
    TrajectoryRecord r;
    r.status = st;
    r.jumps.resize(jumps);
    TrajectorySample s;
    s.s2 = s2;
    s.singlet_overlap = overlap;
    s.jumps = jumps;
    r.samples = {s};
    return r;
  };
  const std::vector<TrajectoryRecord> recs{make(0, 0.01, 0.99), make(0, 0.02, 0.98), make(1, 6.0, 0.0),
                                           make(3, 6.1, 0.001), make(0, 0.0, 1.0, RecordStatus::unstable)};
  const auto split = split_by_jumps(recs, 10);
  CHECK(split.total == 5);
  CHECK(split.flagged == 1);
  CHECK(split.without_jumps.count == 2);
  CHECK(split.with_jumps.count == 2);
  CHECK(split.no_jump_fraction() == doctest::Approx(0.5));
  CHECK(split.without_jumps.min_overlap == doctest::Approx(0.98));
  CHECK(split.with_jumps.max_overlap == doctest::Approx(0.001));
  CHECK(split.with_jumps.s2_bins.mode() == 6.0);
}

TEST_CASE("regime check") {
  EffectiveDickeParams d;
  d.lambda_minus = 6.0;
  d.kappa = 1.0;
  d.atoms = 10;
  const auto r = regime_check(d);
  CHECK(r.ratio == doctest::Approx(6.0 * std::sqrt(0.3)));
  CHECK(r.ratio == doctest::Approx(3.29).epsilon(1e-3));
  CHECK_FALSE(r.pass);
  d.lambda_minus = 60.0;
  CHECK(regime_check(d).pass);
}

TEST_CASE("protocol efficiency") {
  const auto single = protocol_efficiency(1.0, 1.0 / 1001.0);
  CHECK(single.single_shot == doctest::Approx(0.000999).epsilon(1e-3));
  const auto repeated = protocol_efficiency(1.0, 0.15, 10);
  CHECK(repeated.cumulative == doctest::Approx(1.0 - std::pow(0.85, 10)));
  CHECK(repeated.cumulative == doctest::Approx(0.803).epsilon(1e-3));
  CHECK_THROWS(protocol_efficiency(1.2, 0.5));
  CHECK_THROWS(protocol_efficiency(0.5, 0.5, 0));
}
