#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support/brute_force.hpp"
#include "support/catalog.hpp"

using namespace substspec;

TEST(Substitution, EncodeDecodeRoundTrip) {
  const auto s = catalog::fibonacci();
  EXPECT_EQ(s.decode(s.encode("abaab")), "abaab");
  EXPECT_THROW(s.encode("abc"), ValidationError);
}

TEST(Substitution, ValidExamplesPass) {
  for (const auto& s : {catalog::fibonacci(), catalog::period_doubling(), catalog::recog(0.2),
                        catalog::isc(0.3), catalog::intrinsic(), catalog::full_shift(),
                        catalog::three_realisation()})
    EXPECT_TRUE(validate(s).ok()) << s.label;
}

TEST(Substitution, ProbabilitiesSummingTo09AreRejected) {
  const auto s = from_strings("ab", {{{"ab", 0.4}, {"ba", 0.5}}, {{"a", 1.0}}});
  const auto rep = validate(s);
  ASSERT_FALSE(rep.ok());
  EXPECT_NE(rep.violations.front().find("sum to 0.9"), std::string::npos);
  EXPECT_THROW(require_valid(s), ValidationError);
}

TEST(Substitution, RejectsZeroProbabilityEmptyWordAndDuplicates) {
  EXPECT_FALSE(validate(from_strings("ab", {{{"ab", 1.0}, {"ba", 0.0}}, {{"a", 1.0}}})).ok());
  EXPECT_FALSE(validate(from_strings("ab", {{{"", 1.0}}, {{"a", 1.0}}})).ok());
  EXPECT_FALSE(validate(from_strings("ab", {{{"ab", 0.5}, {"ab", 0.5}}, {{"a", 1.0}}})).ok());
  EXPECT_FALSE(validate(from_strings("aa", {{{"a", 1.0}}, {{"a", 1.0}}})).ok());
}

TEST(Substitution, SumToleranceIs1e12) {
  EXPECT_TRUE(validate(from_strings("ab", {{{"ab", 0.5 + 4e-13}, {"ba", 0.5}}, {{"a", 1.0}}})).ok());
  EXPECT_FALSE(validate(from_strings("ab", {{{"ab", 0.5 + 4e-12}, {"ba", 0.5}}, {{"a", 1.0}}})).ok());
}

TEST(Matrix, ExpectedCountsFibonacci) {
  const Matrix m = substitution_matrix(catalog::fibonacci());
  EXPECT_EQ(m, (Matrix{{1, 1}, {1, 0}}));
}

TEST(Matrix, PeriodDoublingColumnsAreImageCounts) {
  // column a: theta(a) in {ab, ba} has one a and one b; column b: aa.
  const Matrix m = substitution_matrix(catalog::period_doubling(0.3));
  EXPECT_EQ(m, (Matrix{{1, 2}, {1, 0}}));
}

TEST(Matrix, PowerOfMatrixIsMatrixOfPower) {
  // Period doubling is compatible, so M(theta^2) counts letters in level-2 words.
  const auto s = catalog::period_doubling();
  const Matrix m2 = substitution_matrix(s).power(2);
  for (char a : {'a', 'b'}) {
    const auto lv = brute::level(s, a, 2);
    for (const auto& [w, p] : lv) {
      const auto counts = abelianise(s.encode(w), 2);
      const int j = s.letter_index(a);
      EXPECT_DOUBLE_EQ(m2(0, j), static_cast<double>(counts[0]));
      EXPECT_DOUBLE_EQ(m2(1, j), static_cast<double>(counts[1]));
    }
  }
}

TEST(Word, AbelianiseIsAdditive) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 200; ++t) {
    Word u, v;
    for (int i = 0; i < 7; ++i) u.push_back(static_cast<char>(rng() % 3));
    for (int i = 0; i < 5; ++i) v.push_back(static_cast<char>(rng() % 3));
    const auto a = abelianise(u + v, 3), b = abelianise(u, 3), c = abelianise(v, 3);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(a[i], b[i] + c[i]);
  }
}

TEST(Distribution, LogSumExpHandlesUnderflow) {
  const std::vector<double> xs{-2000.0, -2000.0};
  EXPECT_NEAR(log_sum_exp(xs), -2000.0 + std::log(2.0), 1e-12);
  EXPECT_EQ(log_add_exp(-INFINITY, -5.0), -5.0);
}

TEST(Distribution, AggregateMergesDuplicates) {
  auto d = WordDistribution::aggregate(
      {{"x", std::log(0.25)}, {"y", std::log(0.5)}, {"x", std::log(0.25)}});
  ASSERT_EQ(d.size(), 2u);
  EXPECT_NEAR(std::exp(d.log_prob("x")), 0.5, 1e-15);
  EXPECT_FALSE(d.contains("z"));
}

TEST(Distribution, LevelsMatchBruteForceEnumeration) {
  for (const auto& s : {catalog::fibonacci(0.3), catalog::period_doubling(0.25), catalog::recog(0.2),
                        catalog::intrinsic(0.3, 0.6, 0.5)}) {
    for (int k = 1; k <= 4; ++k) {
      for (std::size_t a = 0; a < s.size(); ++a) {
        if (s.size() == 3 && k == 4) continue;
        const auto lib = iterate_distribution(s, static_cast<Letter>(a), k);
        const auto ref = brute::level(s, s.names[a], k);
        ASSERT_EQ(lib.size(), ref.size()) << s.label << " k=" << k;
        for (const auto& [w, p] : ref)
          EXPECT_NEAR(std::exp(lib.log_prob(s.encode(w))) / p, 1.0, 1e-12) << s.label << " " << w;
      }
    }
  }
}

TEST(Distribution, ChapmanKolmogorov) {
  const auto s = catalog::fibonacci(0.3);
  const auto rules = rule_distributions(s);
  for (int k = 1; k <= 5; ++k) {
    const auto dk = iterate_distribution(s, 0, k);
    const auto dk1 = iterate_distribution(s, 0, k + 1);
    std::vector<WordDistribution::Entry> raw;
    for (const auto& [w, lp] : dk.entries()) {
      const auto image = push_forward(rules, w);
      for (const auto& [img, lq] : image.entries()) raw.emplace_back(img, lp + lq);
    }
    const auto pushed = WordDistribution::aggregate(std::move(raw));
    ASSERT_EQ(pushed.size(), dk1.size());
    for (std::size_t i = 0; i < pushed.size(); ++i) {
      EXPECT_EQ(pushed.entries()[i].first, dk1.entries()[i].first);
      EXPECT_NEAR(std::exp(pushed.entries()[i].second - dk1.entries()[i].second), 1.0, 1e-12);
    }
  }
}

TEST(Distribution, MassOneAndLogSpaceSurvivesDeepLevels) {
  const auto s = catalog::period_doubling(1e-15);
  const auto d = iterate_distribution(s, 0, 5);
  EXPECT_NEAR(d.log_total(), 0.0, 1e-12);
  double smallest = 0.0;
  for (const auto& e : d.entries()) smallest = std::min(smallest, e.second);
  EXPECT_LT(smallest, std::log(1e-300));  // would underflow as a plain double
}

TEST(Distribution, CapExceededIsRaisedNotTruncated) {
  const auto s = catalog::fibonacci();
  EXPECT_THROW(iterate_distribution(s, 0, 9, 1000), CapExceeded);
}

TEST(Distribution, ApplyDistributionOfWord) {
  const auto s = catalog::period_doubling();
  const auto d = apply_distribution(s, s.encode("ab"));
  const auto ref = brute::apply_once(s, "ab");
  ASSERT_EQ(d.size(), ref.size());
  for (const auto& [w, p] : ref) EXPECT_NEAR(std::exp(d.log_prob(s.encode(w))), p, 1e-15);
}

TEST(Sampling, DeterministicPerSeedAndInSupport) {
  const auto s = catalog::recog(0.2);
  const Word u = s.encode("abba");
  EXPECT_EQ(sample_realisation(s, u, 11), sample_realisation(s, u, 11));
  const auto support = apply_distribution(s, u);
  for (std::uint64_t seed = 0; seed < 50; ++seed)
    EXPECT_TRUE(support.contains(sample_realisation(s, u, seed)));
}

TEST(Sampling, EmpiricalRuleFrequencies) {
  const auto s = catalog::recog(0.2);
  RealisationSampler sampler(s);
  std::mt19937_64 rng(5);
  int first = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) first += sampler.pick(0, rng) == 0;
  const double se = std::sqrt(0.2 * 0.8 / n);
  EXPECT_NEAR(first / static_cast<double>(n), 0.2, 5 * se);
}

TEST(Substitution, SumAboveOneIsReported) {
  const auto rep = validate(from_strings("ab", {{{"ab", 0.6}, {"ba", 0.5}}, {{"a", 1.0}}}));
  ASSERT_FALSE(rep.ok());
  EXPECT_NE(rep.violations.front().find("sum to 1.1"), std::string::npos);
}

TEST(Matrix, RecogAndSingleLetter) {
  EXPECT_EQ(substitution_matrix(catalog::recog(0.3)), (Matrix{{1, 2}, {2, 0}}));
  EXPECT_EQ(substitution_matrix(from_strings("a", {{{"aa", 1.0}}})), (Matrix{{2}}));
}

TEST(Word, AbelianiseExamples) {
  EXPECT_EQ(abelianise(Word{0, 1}, 2), (CountVector{1, 1}));
  EXPECT_EQ(abelianise(Word{0, 0, 0}, 2), (CountVector{3, 0}));
  EXPECT_EQ(abelianise(Word{0, 1, 1}, 2), (CountVector{1, 2}));
}

TEST(Distribution, FibonacciSmallCases) {
  const auto s = catalog::fibonacci();
  const auto ab = apply_distribution(s, s.encode("ab"));
  ASSERT_EQ(ab.size(), 2u);
  EXPECT_NEAR(std::exp(ab.log_prob(s.encode("aba"))), 0.5, 1e-15);
  EXPECT_NEAR(std::exp(ab.log_prob(s.encode("baa"))), 0.5, 1e-15);
  const auto bb = apply_distribution(s, s.encode("bb"));
  ASSERT_EQ(bb.size(), 1u);
  EXPECT_EQ(bb.log_prob(s.encode("aa")), 0.0);
  const auto b1 = iterate_distribution(s, 1, 1);
  EXPECT_EQ(b1.size(), 1u);
  EXPECT_EQ(sample_realisation(s, s.encode("b"), 99), s.encode("a"));
}

TEST(Sampling, FibonacciFractionOfAb) {
  const auto s = catalog::fibonacci();
  const Word a = s.encode("a"), ab = s.encode("ab");
  RealisationSampler sampler(s);
  std::mt19937_64 rng(17);
  int hits = 0;
  for (int i = 0; i < 100000; ++i) hits += sampler.apply(a, rng) == ab;
  EXPECT_NEAR(hits / 1e5, 0.5, 0.01);
}
