#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "lbo/densities.hpp"

using namespace lbo;

namespace {

ReturnSet dyadic_blocks(std::size_t H) {
  return ReturnSet::where(H, [](std::size_t n) {
    for (std::size_t k = 1; (std::size_t{1} << k) <= n; ++k) {
      const std::size_t s = std::size_t{1} << k;
      if (n >= s && n <= s + k - 1) return true;
    }
    return false;
  });
}

ReturnSet random_set(std::mt19937_64& rng, std::size_t H, double p) {
  std::bernoulli_distribution B(p);
  return ReturnSet::where(H, [&](std::size_t) { return B(rng); });
}

// Direct window counting, no prefix sums.
double brute_window_max(const ReturnSet& A, std::size_t N) {
  std::vector<char> in(A.horizon + 2, 0);
  for (std::size_t n : A.elems) in[n] = 1;
  std::size_t best = 0;
  for (std::size_t m = 0; m + N <= A.horizon; ++m) {
    std::size_t c = 0;
    for (std::size_t n = m + 1; n <= m + N; ++n) c += in[n];
    best = std::max(best, c);
  }
  return static_cast<double>(best) / static_cast<double>(N);
}

}  // namespace

TEST(LowerDensity, Examples) {
  const auto evens = ReturnSet::where(10000, [](std::size_t n) { return n % 2 == 0; });
  EXPECT_NEAR(lower_density_curve(evens).estimate, 0.5, 1e-4);

  const std::size_t H = 1 << 20;
  const auto pow2 = ReturnSet::where(H, [](std::size_t n) { return (n & (n - 1)) == 0; });
  EXPECT_LE(lower_density_curve(pow2).estimate, 2.0 * std::log2(double(H)) / double(H));

  const ReturnSet blocks = dyadic_blocks(H);
  const double est = lower_density_curve(blocks).estimate;
  EXPECT_LT(est, 0.01);
  // Oracle: count members of [1, N] by brute force at the tail-window end points.
  double oracle = 1.0;
  for (std::size_t N = H / 2; N <= H; N += 997) {
    std::size_t c = 0;
    for (std::size_t n : blocks.elems) c += n <= N;
    oracle = std::min(oracle, double(c) / double(N));
  }
  EXPECT_LE(est, oracle);
}

TEST(BanachDensity, Examples) {
  const auto evens = ReturnSet::where(4096, [](std::size_t n) { return n % 2 == 0; });
  EXPECT_NEAR(banach_density_curve(evens).estimate, 0.5, 1.0 / 16);
  const ReturnSet blocks = dyadic_blocks(1 << 20);
  EXPECT_GE(banach_density_curve(blocks).estimate, 1.0 - 1.0 / 19);
  EXPECT_EQ(banach_density_curve(ReturnSet({}, 4096)).estimate, 0.0);
  EXPECT_THROW(banach_density_curve(ReturnSet({}, 8)), Error);
}

TEST(BanachDensity, MatchesBruteForceWindows) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 10; ++t) {
    const ReturnSet A = random_set(rng, 300, 0.2 + 0.05 * t);
    const BanachDensity b = banach_density_curve(A, {4, true});
    for (std::size_t i = 0; i < b.curve.n.size(); ++i)
      EXPECT_EQ(b.curve.value[i], brute_window_max(A, b.curve.n[i]));
    EXPECT_TRUE(b.sanity_ok);
  }
}

TEST(BanachDensity, DominatesPrefixDensity) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 10; ++t) {
    const ReturnSet A = random_set(rng, 2048, 0.1);
    const LowerDensity ld = lower_density_curve(A);
    const BanachDensity b = banach_density_curve(A);
    for (std::size_t i = 0; i < b.curve.n.size(); ++i)
      EXPECT_LE(ld.curve.value[b.curve.n[i] - 1], b.curve.value[i]);
  }
}

TEST(BanachDensity, TranslationInvariantUpToEdge) {
  std::mt19937_64 rng(6);
  const std::size_t H = 8192;
  for (std::size_t t : {1u, 7u, 50u}) {
    const ReturnSet A = random_set(rng, H - t, 0.3);
    std::vector<std::size_t> shifted;
    for (std::size_t n : A.elems) shifted.push_back(n + t);
    const ReturnSet At(shifted, H);
    const ReturnSet A0(A.elems, H);
    const double tol = 2.0 * double(t) / 16.0;  // windows of length >= n_min lose at most t members
    EXPECT_NEAR(banach_density_curve(A0).estimate, banach_density_curve(At).estimate, tol);
  }
}

TEST(Sucheston, EqualsBanachCurveOnIndicators) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 10; ++t) {
    const ReturnSet A = random_set(rng, 4096, 0.05 * (t + 1));
    EXPECT_EQ(sucheston_M(indicator(A)).curve.value, banach_density_curve(A).curve.value);
  }
  const auto evens = ReturnSet::where(4096, [](std::size_t n) { return n % 2 == 0; });
  EXPECT_NEAR(sucheston_M(indicator(evens)).estimate, 0.5, 1.0 / 16);
}

TEST(Sucheston, ConvergentAndConstantSequences) {
  std::vector<double> phi(4096);
  for (std::size_t n = 1; n <= phi.size(); ++n) phi[n - 1] = 0.3 + 1.0 / double(n);
  EXPECT_NEAR(sucheston_M(phi).estimate, 0.3, 2.0 / 16);
  EXPECT_EQ(sucheston_M(std::vector<double>(1000, 1.0)).estimate, 1.0);
  std::vector<double> big(100, 0.0);
  big[5] = 1e9;
  try {
    sucheston_M(big);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnboundedInput);
  }
}

TEST(Family, Examples) {
  const auto m3 = ReturnSet::where(3000, [](std::size_t n) { return n % 3 == 0; });
  const Membership s = family_member(m3, FamilySpec::syndetic(3));
  EXPECT_TRUE(s.verdict);
  EXPECT_EQ(s.evidence.values, (std::vector<std::size_t>{3}));
  const Membership ap = family_member(m3, FamilySpec::ap_b(3, 100));
  EXPECT_TRUE(ap.verdict);
  EXPECT_EQ(ap.evidence.values, (std::vector<std::size_t>{3, 3, 100}));  // start, difference, length
  EXPECT_FALSE(family_member(m3, FamilySpec::ap_b(2, 3)).verdict);

  const std::size_t H = 1 << 20;
  const auto pow2 = ReturnSet::where(H, [](std::size_t n) { return (n & (n - 1)) == 0; });
  // The max over N >= 16 sees the cluster 1, 2, 4, 8, 16 in the first window.
  const Membership early = family_member(pow2, FamilySpec::upper_banach(0.05));
  EXPECT_TRUE(early.verdict);
  EXPECT_EQ(early.evidence.value, 5.0 / 16.0);
  // Long windows alone see the sparse set: at most log2(N) + 1 powers in any N.
  EXPECT_FALSE(family_member(pow2, FamilySpec::upper_banach(0.05), {1024, false}).verdict);
}

TEST(Family, APDynamicProgrammeMatchesBruteForce) {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 30; ++t) {
    const ReturnSet A = random_set(rng, 120, 0.45);
    for (std::size_t d_max : {1u, 3u, 5u})
      for (std::size_t len : {3u, 4u, 6u}) {
        bool brute = false;
        for (std::size_t d = 1; d <= d_max && !brute; ++d)
          for (std::size_t a : A.elems) {
            std::size_t k = 0;
            while (k < len && A.contains(a + k * d)) ++k;
            if (k == len) {
              brute = true;
              break;
            }
          }
        EXPECT_EQ(family_member(A, FamilySpec::ap_b(d_max, len)).verdict, brute);
      }
  }
}

TEST(Family, SyndeticImpliesBanachPositive) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::size_t> G(1, 12);
  for (int t = 0; t < 50; ++t) {
    std::vector<std::size_t> e;
    for (std::size_t n = G(rng); n <= 5000; n += G(rng)) e.push_back(n);
    const ReturnSet A(e, 5000);
    const std::size_t g = max_gap(A);
    ASSERT_TRUE(family_member(A, FamilySpec::syndetic(g)).verdict);
    EXPECT_TRUE(family_member(A, FamilySpec::upper_banach(1.0 / double(g + 1))).verdict);
  }
}

TEST(MaxGap, CountsBothEdges) {
  EXPECT_EQ(max_gap(ReturnSet({5, 6}, 8)), 5u);
  EXPECT_EQ(max_gap(ReturnSet({1, 2}, 12)), 10u);
  EXPECT_EQ(max_gap(ReturnSet({}, 12)), 13u);
}

TEST(BlockMember, Examples) {
  const ReturnSet W = ReturnSet::all(64);
  const BlockMembership all = block_member(ReturnSet::all(64), W, 10);
  EXPECT_TRUE(all.verdict);
  EXPECT_EQ(all.translations, std::vector<std::size_t>(10, 0));

  const std::size_t H = 1 << 20;
  const ReturnSet blocks = dyadic_blocks(H);
  const BlockMembership b = block_member(blocks, ReturnSet::all(H), 10);
  EXPECT_TRUE(b.verdict);
  // Oracle: the first run of ten consecutive members, by exhaustive scan.
  std::size_t first = 0;
  for (std::size_t n = 1; n + 9 <= H && !first; ++n) {
    bool ok = true;
    for (std::size_t k = 0; k < 10 && ok; ++k) ok = blocks.contains(n + k);
    if (ok) first = n;
  }
  EXPECT_EQ(b.translations.back(), first - 1);
  EXPECT_EQ(first, 1024u);

  const auto evens = ReturnSet::where(100, [](std::size_t n) { return n % 2 == 0; });
  const BlockMembership p = block_member(evens, ReturnSet({1, 2}, 2), 2);
  EXPECT_FALSE(p.verdict);
  EXPECT_EQ(p.failed_scale, 2u);
}

TEST(BlockMember, InnerWitnessInsideSetNeedsNoTranslation) {
  std::mt19937_64 rng(19);
  for (int t = 0; t < 20; ++t) {
    const ReturnSet B = random_set(rng, 500, 0.4);
    if (B.size() < 5) continue;
    const ReturnSet W(std::vector<std::size_t>(B.elems.begin(), B.elems.begin() + 5), 500);
    const BlockMembership m = block_member(B, W, 5);
    EXPECT_TRUE(m.verdict);
    EXPECT_EQ(m.translations, std::vector<std::size_t>(5, 0));
  }
}

TEST(StarFamily, GeneratedFamiliesSatisfyInvariants) {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<std::size_t> K(1, 12), D(2, 30);
  for (int t = 0; t < 40; ++t) {
    const std::size_t k_max = K(rng), spacing = D(rng);
    const StarFamily s = gen_star_family(k_max, spacing, 3000);
    // Exhaustive pairwise oracle.
    for (std::size_t k = 1; k <= k_max; ++k) {
      ASSERT_FALSE(s.sets[k - 1].empty());
      EXPECT_GT(s.sets[k - 1].front(), k);
      for (std::size_t k2 = 1; k2 <= k_max; ++k2)
        for (std::size_t a : s.sets[k - 1])
          for (std::size_t b : s.sets[k2 - 1]) {
            if (k == k2 && a == b) continue;
            EXPECT_NE(a, b);
            EXPECT_GE(a > b ? a - b : b - a, std::max(k, k2));
          }
    }
    EXPECT_TRUE(star_violation(s).empty());
  }
  const StarFamily one = gen_star_family(1, 2, 100);
  EXPECT_GT(one.sets[0].front(), 1u);
}

TEST(StarFamily, ViolationsAreReported) {
  StarFamily s;
  s.horizon = 100;
  s.sets = {{5, 10}, {11, 20}};
  EXPECT_FALSE(star_violation(s).empty());  // 10 and 11 closer than 2
  s.sets = {{1, 10}};
  EXPECT_FALSE(star_violation(s).empty());  // min(A_1) = 1
}

TEST(ReturnSetType, RejectsBadInput) {
  EXPECT_THROW(ReturnSet({3, 2}, 5), Error);
  EXPECT_THROW(ReturnSet({0}, 5), Error);
  EXPECT_THROW(ReturnSet({6}, 5), Error);
}
