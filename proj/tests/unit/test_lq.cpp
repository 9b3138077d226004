#include <gtest/gtest.h>

#include <cmath>

#include "support/brute_force.hpp"
#include "support/catalog.hpp"

using namespace substspec;

namespace {

/// phi_k(q) from brute-force level distributions and the 2x2 quadratic formula.
double brute_phi(const RandomSubstitution& s, int k, double q) {
  const Matrix m = substitution_matrix(s);
  const auto [lam, r] = brute::perron_2x2(m(0, 0), m(0, 1), m(1, 0), m(1, 1));
  double out = 0.0;
  for (std::size_t a = 0; a < 2; ++a) out -= r[a] * brute::log_sum_pow(brute::level(s, s.names[a], k), q);
  return out;
}

double log2sum(double p, double q) { return std::log(std::pow(p, q) + std::pow(1 - p, q)); }

const std::vector<double> kQs{-3.0, -1.0, 0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 4.0};

}  // namespace

TEST(Phi, MatchesBruteForce) {
  for (const auto& s : {catalog::fibonacci(0.3), catalog::period_doubling(0.25), catalog::recog(0.2),
                        catalog::three_realisation(0.2)}) {
    InflationSpectrum spec(s);
    for (int k = 1; k <= 3; ++k)
      for (double q : kQs)
        EXPECT_NEAR(spec.phi(k, q), brute_phi(s, k, q), 1e-10 * std::max(1.0, std::abs(spec.phi(k, q))))
            << s.label << " k=" << k << " q=" << q;
  }
}

TEST(Phi, ZeroAtQOne) {
  InflationSpectrum spec(catalog::recog(0.3));
  for (int k = 1; k <= 4; ++k) EXPECT_NEAR(spec.phi(k, 1.0), 0.0, 1e-12);
}

TEST(Phi, ConcaveAndNondecreasingInQ) {
  InflationSpectrum spec(catalog::fibonacci(0.3));
  SpectrumCurve c;
  for (double q : grid(-4, 4, 0.1)) c.samples.emplace_back(q, spec.phi(4, q));
  EXPECT_TRUE(c.is_concave(1e-10));
  EXPECT_TRUE(c.is_nondecreasing());
}

TEST(Brackets, OrientationByRegime) {
  const auto mid = bracket_from_phi(-2.0, 2.0, 1, 0.5);
  EXPECT_DOUBLE_EQ(mid.lower, -2.0);
  EXPECT_DOUBLE_EQ(*mid.upper, -1.0);
  const auto big = bracket_from_phi(3.0, 2.0, 1, 2.0);
  EXPECT_DOUBLE_EQ(big.lower, 1.5);
  EXPECT_DOUBLE_EQ(*big.upper, 3.0);
  const auto neg = bracket_from_phi(-5.0, 2.0, 2, -1.0);
  EXPECT_DOUBLE_EQ(neg.lower, -5.0 / 3.0);
  EXPECT_FALSE(neg.upper.has_value());
}

TEST(Brackets, NestedAndContainClosedForm) {
  for (const auto& s : {catalog::period_doubling(0.3), catalog::recog(0.2)}) {
    InflationSpectrum spec(s);
    const auto rep = assess_conditions(s, 3, 12);
    const auto cf = ClosedFormSpectrum::from_regime(spec, rep, Regime::DSC);
    for (double q : {0.0, 0.3, 0.7, 1.5, 3.0}) {
      TauBracket prev = tau_bounds(spec, 1, q);
      for (int k = 1; k <= 4; ++k) {
        const auto b = tau_bounds(spec, k, q);
        const double tol = 1e-12 * std::max(1.0, std::abs(cf.tau(q)));
        EXPECT_LE(b.lower, cf.tau(q) + tol) << s.label << " q=" << q << " k=" << k;
        EXPECT_GE(*b.upper, cf.tau(q) - tol) << s.label << " q=" << q << " k=" << k;
        EXPECT_GE(b.lower, prev.lower - tol);
        EXPECT_LE(*b.upper, *prev.upper + tol);
        prev = b;
      }
    }
  }
}

TEST(Brackets, FibonacciBracketsHoldEmptyIntervalsNever) {
  InflationSpectrum spec(catalog::fibonacci(0.4));
  for (int k = 1; k <= 4; ++k)
    for (double q : {0.0, 0.5, 2.0}) {
      const auto b = tau_bounds(spec, k, q);
      EXPECT_LE(b.lower, *b.upper + 1e-14);
    }
}

TEST(Brackets, NeedCompatibility) {
  InflationSpectrum spec(catalog::full_shift());
  EXPECT_THROW(tau_bounds(spec, 1, 0.5), NotCompatible);
}

TEST(ClosedForm, RecogMatchesHandFormula) {
  for (double p : {0.2, 0.4, 0.5}) {
    const auto s = catalog::recog(p);
    InflationSpectrum spec(s);
    const auto rep = assess_conditions(s, 3, 12);
    ASSERT_EQ(strongest_regime(rep), Regime::Recognisable);
    const double lam = (1 + std::sqrt(17.0)) / 2;
    const double ra = 2.0 / (2.0 + (lam - 1.0));
    const auto cf = ClosedFormSpectrum::from_regime(spec, rep, Regime::Recognisable, true);
    for (double q : kQs) {
      const double ref = -ra * log2sum(p, q) / (lam - 1);
      EXPECT_NEAR(cf.tau(q), ref, 1e-13);
      EXPECT_NEAR(closed_form_tau(spec, rep, Regime::Recognisable, q), ref, 1e-13);
    }
  }
}

TEST(ClosedForm, PeriodDoublingDsc) {
  const auto s = catalog::period_doubling(0.25);
  InflationSpectrum spec(s);
  const auto rep = assess_conditions(s, 3, 6);
  ASSERT_EQ(strongest_regime(rep), Regime::DSC);
  for (double q : {0.0, 0.5, 1.0, 2.0, 5.0})
    EXPECT_NEAR(closed_form_tau(spec, rep, Regime::DSC, q), -(2.0 / 3.0) * log2sum(0.25, q), 1e-13);
  EXPECT_THROW(closed_form_tau(spec, rep, Regime::DSC, -1.0), NegativeQWithoutRecognisability);
  EXPECT_THROW(closed_form_tau(spec, rep, Regime::Recognisable, 0.5), ConditionNotEstablished);
}

TEST(ClosedForm, IscUsesInverseLambda) {
  const auto s = catalog::isc(0.3);
  InflationSpectrum spec(s);
  const auto rep = assess_conditions(s, 3, 6);
  ASSERT_EQ(strongest_regime(rep), Regime::ISC_IPP);
  for (double q : {0.0, 0.5, 1.0, 2.0})
    EXPECT_NEAR(closed_form_tau(spec, rep, Regime::ISC_IPP, q), -0.5 * log2sum(0.3, q), 1e-13);
  // lambda^{-k} phi_k is constant in k under ISC with IPP
  for (int k = 1; k <= 5; ++k) EXPECT_NEAR(spec.normalised_phi(k, 2.0), spec.normalised_phi(1, 2.0), 1e-13);
}

TEST(ClosedForm, ThreeRealisationEndpoints) {
  const double p = 0.2;
  const auto s = catalog::three_realisation(p);
  InflationSpectrum spec(s);
  EXPECT_NEAR(spec.lambda(), 3.0, 1e-13);
  const auto rep = assess_conditions(s, 3, 8);
  ASSERT_TRUE(rep.dsc_verified());
  EXPECT_FALSE(rep.recognisable());
  const auto cf = ClosedFormSpectrum::from_regime(spec, rep, Regime::DSC);
  for (double q : kQs)
    EXPECT_NEAR(cf.tau(q), -0.3 * std::log(2 * std::pow(p, q) + std::pow(1 - 2 * p, q)), 1e-13);
  EXPECT_NEAR(cf.alpha_min(), -0.3 * std::log(0.6), 1e-14);
  EXPECT_NEAR(cf.alpha_max(), -0.3 * std::log(0.2), 1e-14);
  EXPECT_NEAR(cf.f_at_alpha_min(), 0.0, 1e-15);
  EXPECT_NEAR(cf.f_at_alpha_max(), 0.3 * std::log(2.0), 1e-14);
  EXPECT_NEAR(cf.conjugate(cf.alpha_max()), 0.3 * std::log(2.0), 1e-14);
}

TEST(ClosedForm, DerivativeMatchesFiniteDifference) {
  const auto s = catalog::recog(0.3);
  InflationSpectrum spec(s);
  const ClosedFormSpectrum cf(s, spec.perron(), 1.0 / (spec.lambda() - 1));
  for (double q : kQs) {
    const double h = 1e-5;
    EXPECT_NEAR(cf.dtau(q), (cf.tau(q + h) - cf.tau(q - h)) / (2 * h), 1e-8);
  }
}

TEST(Conjugate, MatchesNumericalLegendre) {
  const auto s = catalog::recog(0.3);
  InflationSpectrum spec(s);
  const ClosedFormSpectrum cf(s, spec.perron(), 1.0 / (spec.lambda() - 1));
  auto g = [&](double q) { return cf.tau(q); };
  const double lo = cf.alpha_min(), hi = cf.alpha_max();
  for (int i = 1; i < 20; ++i) {
    const double a = lo + (hi - lo) * i / 20.0;
    EXPECT_NEAR(cf.conjugate(a), concave_conjugate(g, a), 1e-9) << a;
  }
  EXPECT_EQ(cf.conjugate(hi + 0.1), kNegInf);
  EXPECT_EQ(cf.conjugate(lo - 0.1), kNegInf);
}

TEST(Conjugate, ShapeOfSpectrum) {
  const auto s = catalog::recog(0.3);
  InflationSpectrum spec(s);
  const auto rep = assess_conditions(s, 3, 12);
  const auto ar = alpha_range(spec, rep);
  std::vector<double> alphas;
  for (int i = 0; i <= 200; ++i) alphas.push_back(ar.alpha_min + (ar.alpha_max - ar.alpha_min) * i / 200.0);
  const auto f = multifractal_spectrum(spec, rep, alphas);
  std::vector<std::pair<double, double>> pts = f.samples;
  SpectrumCurve c;
  c.samples = pts;
  EXPECT_TRUE(c.is_concave(1e-9));
  double fmax = -INFINITY;
  for (const auto& [a, v] : pts) {
    EXPECT_LE(v, a + 1e-12);  // f(alpha) <= alpha
    fmax = std::max(fmax, v);
  }
  // max f = tau(0) negated = topological entropy of the closed form
  const auto cf = ClosedFormSpectrum::from_regime(spec, rep, Regime::Recognisable, true);
  EXPECT_NEAR(fmax, -cf.tau(0.0), 1e-4);
  // parametric points lie on the conjugate
  for (double q : {-2.0, 0.0, 1.0, 3.0}) {
    const auto [a, v] = cf.parametric(q);
    EXPECT_NEAR(cf.conjugate(a), v, 1e-10);
  }
  // f(alpha(1)) = alpha(1)
  const auto [a1, f1] = cf.parametric(1.0);
  EXPECT_NEAR(a1, f1, 1e-12);
}

TEST(Conjugate, EqualProbabilitiesCollapseToAPoint) {
  const auto s = catalog::recog(0.5);
  InflationSpectrum spec(s);
  const auto rep = assess_conditions(s, 3, 12);
  const auto ar = alpha_range(spec, rep);
  EXPECT_NEAR(ar.alpha_min, ar.alpha_max, 1e-15);
  EXPECT_NEAR(ar.f_min, ar.alpha_min, 1e-14);
}

TEST(Entropy, IntrinsicTopologicalEntropy) {
  InflationSpectrum spec(catalog::intrinsic());
  const auto e = topological_entropy(spec, 3);
  for (double v : e.normalised) EXPECT_NEAR(v, std::log(2.0) / 2.0, 1e-12);
  EXPECT_TRUE(e.monotone);
}

TEST(Entropy, DscMeasureEntropyIsGeometric) {
  const auto s = catalog::recog(0.2);
  InflationSpectrum spec(s);
  const auto e = measure_entropy(spec, 4);
  for (int k = 1; k <= 4; ++k)
    EXPECT_NEAR(spec.rho(k), spec.rho(1) * (std::pow(spec.lambda(), k) - 1) / (spec.lambda() - 1),
                1e-10 * spec.rho(k));
  EXPECT_TRUE(e.monotone);
}

TEST(Tilting, IsProbabilityAndIdentityAtOne) {
  const auto s = catalog::three_realisation(0.2);
  const auto t1 = tilted_probabilities(s, 1.0);
  for (std::size_t a = 0; a < s.size(); ++a)
    for (std::size_t j = 0; j < s.rules[a].size(); ++j)
      EXPECT_NEAR(t1.rules[a][j].prob, s.rules[a][j].prob, 1e-15);
  const auto t2 = tilted_probabilities(s, 2.0);
  EXPECT_TRUE(validate(t2).ok());
  EXPECT_NEAR(t2.rules[0][0].prob, 0.04 / (0.04 + 0.04 + 0.36), 1e-15);
}

TEST(RelativeEntropy, SelfIsMeasureEntropy) {
  InflationSpectrum p(catalog::recog(0.2)), q(catalog::recog(0.2));
  const auto seq = relative_entropy_sequence(p, q, 4);
  for (int m = 1; m <= 4; ++m) EXPECT_NEAR(seq[m - 1], p.rho(m) / std::pow(p.lambda(), m), 1e-12);
}

TEST(RelativeEntropy, TiltedLimitIsDerivative) {
  const auto s = catalog::recog(0.3);
  InflationSpectrum p(s);
  const double lam = p.lambda();
  const ClosedFormSpectrum cf(s, p.perron(), 1.0 / (lam - 1));
  for (double qv : {-1.0, 0.5, 2.0}) {
    InflationSpectrum q(tilted_probabilities(s, qv));
    const auto seq = relative_entropy_sequence(p, q, 4);
    for (int m = 1; m <= 4; ++m) {
      const double lm = std::pow(lam, m);
      EXPECT_NEAR(seq[m - 1], cf.dtau(qv) * (lm - 1) / lm, 1e-11) << qv << " m=" << m;
    }
  }
  InflationSpectrum other(catalog::fibonacci());
  EXPECT_THROW(relative_entropy_vector(p, other, 1), ValidationError);
}
