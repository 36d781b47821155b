#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "lbo/measures.hpp"

using namespace lbo;

namespace {

RealVector periodic(const std::vector<double>& word, std::size_t len) {
  std::vector<double> v(len);
  for (std::size_t i = 0; i < len; ++i) v[i] = word[i % word.size()];
  return RealVector(std::move(v), SpaceKind::Omega);
}

// Both integrals summed term by term.
double brute_defect(const Orbit<double>& o, const EmpiricalMeasure& mu, const TestFunctional<double>& f) {
  double a = 0.0, b = 0.0;
  for (std::size_t n = mu.start; n <= mu.last(); ++n) {
    a += f(o.points[n + 1]);
    b += f(o.points[n]);
  }
  return std::abs(a - b) / static_cast<double>(mu.length);
}

}  // namespace

TEST(EmpiricalMeasure, WindowAndMass) {
  const EmpiricalMeasure mu = empirical_measure(100, 11, 30);
  EXPECT_EQ(mu.last(), 40u);
  EXPECT_EQ(mu.weight(), Rational(1, 30));
  EXPECT_EQ(mu.total_mass(), Rational(1));
  EXPECT_EQ(mu.atoms().front(), 11u);
  EXPECT_EQ(mu.atoms().size(), 30u);
  try {
    empirical_measure(100, 80, 30);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::WindowOutOfRange);
  }
  EXPECT_THROW(empirical_measure(100, 0, 3), Error);
}

TEST(InvarianceDefect, TelescopedFormMatchesBruteForce) {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> U(-3, 3);
  std::vector<double> v(600);
  for (auto& e : v) e = U(rng);
  const RealVector x(v, SpaceKind::Omega);
  const OperatorSpec B = OperatorSpec::backward_shift();
  const Orbit<double> o = orbit(B, x, 500);
  const std::vector<TestFunctional<double>> fs{cosine_functional<double>({1, 3}, {1.0, 0.5}, 1.0),
                                               tanh_functional<double>(2, 0.7, 2.0),
                                               clip_functional<double>(1, 1.0)};
  for (const auto& f : fs)
    for (std::size_t N : {1u, 7u, 64u, 300u}) {
      const EmpiricalMeasure mu = empirical_measure(o, 5, N);
      OrbitView<double> view(B, x);
      const double d = invariance_defect(view, mu, f);
      EXPECT_NEAR(d, brute_defect(o, mu, f), 1e-12);
      EXPECT_DOUBLE_EQ(d, invariance_defect(o, mu, f));
      EXPECT_LE(d, 2.0 * f.sup_bound / double(N));
    }
}

TEST(InvarianceDefect, PeriodicWindowHasZeroDefect) {
  for (std::size_t p : {1u, 2u, 5u, 7u}) {
    std::vector<double> word(p);
    for (std::size_t i = 0; i < p; ++i) word[i] = double(i * i % 3) - 0.5;
    const RealVector x = periodic(word, 400);
    OrbitView<double> view(OperatorSpec::backward_shift(), x);
    const EmpiricalMeasure mu = empirical_measure(300, 3, 10 * p);
    EXPECT_EQ(invariance_defect(view, mu, cosine_functional<double>({1, 2}, {1.0, 2.0}, 1.0)), 0.0);
  }
}

TEST(InvarianceDefect, NeedsOnePointPastWindow) {
  const RealVector x = periodic({1, 2}, 100);
  OrbitView<double> view(OperatorSpec::backward_shift(), x);
  const EmpiricalMeasure mu = empirical_measure(50, 1, 50);
  EXPECT_THROW(invariance_defect(view, mu, clip_functional<double>(1, 1.0)), Error);
}

TEST(MeasureOfBall, CountsWindowMembers) {
  const RealVector x = periodic({1, 2, 3}, 500);
  const SpaceSpec w = SpaceSpec::omega();
  const OperatorSpec B = OperatorSpec::backward_shift();
  OrbitView<double> view(B, x);
  const EmpiricalMeasure mu = empirical_measure(400, 1, 300);
  const NeighborhoodSpec<double> V(x, 2, 0.5);
  EXPECT_EQ(measure_of_ball(w, view, mu, V), Rational(1, 3));
  const Orbit<double> o = orbit(B, x, 300);
  EXPECT_EQ(measure_of_ball(w, o, mu, V), Rational(1, 3));
}

TEST(Mixture, DyadicWeightsSumToOne) {
  std::vector<EmpiricalMeasure> mus;
  for (std::size_t n = 1; n <= 20; ++n) {
    mus.push_back(empirical_measure(1000, n, 10 * n));
    const MeasureMixture m = dyadic_mixture(mus);
    EXPECT_EQ(m.total(), Rational(1));
    EXPECT_EQ(m.tail_mass, Rational(1, std::uint64_t{1} << n));
    EXPECT_EQ(m.components.back().weight, Rational(1, std::uint64_t{1} << n));
  }
}

TEST(Functionals, DeclaredBoundsHold) {
  const auto c = cosine_functional<Complex>({1, 2}, {1.0, -2.0}, 0.5);
  const auto t = tanh_functional<Complex>(1, 3.0, 1.0);
  const auto k = clip_functional<double>(2, 2.0);
  for (std::uint64_t s : {1u, 2u, 3u}) {
    const FunctionalCheck fc = validate_functional(c, s);
    EXPECT_TRUE(fc.sup_ok && fc.lipschitz_ok);
    const FunctionalCheck ft = validate_functional(t, s);
    EXPECT_TRUE(ft.sup_ok && ft.lipschitz_ok);
    const FunctionalCheck fk = validate_functional(k, s);
    EXPECT_TRUE(fk.sup_ok && fk.lipschitz_ok);
  }
  TestFunctional<double> liar = clip_functional<double>(1, 5.0);
  liar.sup_bound = 1.0;
  EXPECT_FALSE(validate_functional(liar, 7).sup_ok);
}

TEST(InvariantCandidate, PeriodicVector) {
  const RealVector x = periodic({1, 2, 3, 4}, 3000);
  std::vector<NeighborhoodSpec<double>> basis;
  for (std::size_t k = 1; k <= 4; ++k) basis.push_back(NeighborhoodSpec<double>(x, k, 1.0 / double(k)));
  const std::vector<TestFunctional<double>> battery{cosine_functional<double>({1}, {1.0}, 1.0),
                                                    clip_functional<double>(2, 1.5)};
  const auto cand = build_invariant_candidate(SpaceSpec::omega(), OperatorSpec::backward_shift(), x, basis,
                                              2048, battery);
  EXPECT_EQ(cand.mixture.total(), Rational(1));
  EXPECT_TRUE(cand.support_local);
  ASSERT_EQ(cand.components.size(), 4u);
  for (const ComponentReport& r : cand.components) {
    EXPECT_NEAR(r.bd_est, 0.25, 1.0 / 16);
    EXPECT_TRUE(r.mass_ok);
    EXPECT_GE(r.ball_mass.convert_to<double>(), 0.9 * r.witness_density.convert_to<double>());
  }
  for (const DefectRow& d : cand.defects) {
    EXPECT_TRUE(d.ok);
    EXPECT_LE(d.defect, d.bound);
    EXPECT_LE(d.bound, d.bound_min_window);
  }
}

TEST(InvariantCandidate, LowDensityBasisFails) {
  const RealVector e1 = unit_vector<double>(1);
  const std::vector<NeighborhoodSpec<double>> basis{NeighborhoodSpec<double>(e1, 1, 0.5)};
  try {
    build_invariant_candidate(SpaceSpec::omega(), OperatorSpec::backward_shift(), e1, basis, 256,
                              std::vector<TestFunctional<double>>{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::HypothesisFailed);
    EXPECT_EQ(e.detail(), 1u);
  }
}
