// Acceptance run: one PASS/FAIL line per criterion, tolerances and time
// limits fixed below. Exit status is the number of failed criteria.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "lbo/lbo.hpp"

using namespace lbo;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double limit_s;
  std::function<Outcome()> run;
};

ReturnSet dyadic_blocks(std::size_t H) {
  std::vector<std::size_t> e;
  for (std::size_t k = 1; (std::size_t{1} << k) <= H; ++k)
    for (std::size_t n = std::size_t{1} << k; n <= (std::size_t{1} << k) + k - 1 && n <= H; ++n)
      e.push_back(n);
  std::sort(e.begin(), e.end());
  e.erase(std::unique(e.begin(), e.end()), e.end());
  return ReturnSet(std::move(e), H);
}

// Literal word list of one extension pass for a prefix of length N.
Outcome c1_phi() {
  for (std::uint64_t N = 1; N <= 12; ++N) {
    std::vector<std::vector<std::uint64_t>> words;
    for (std::uint64_t M = 1; M <= N; ++M)
      for (std::uint64_t i = 1; i <= M; ++i) {
        std::vector<std::uint64_t> w;
        for (std::uint64_t r = 1; r <= i; ++r) w.push_back(r);
        w.push_back(M);
        words.push_back(std::move(w));
      }
    std::uint64_t total = 0;
    for (const auto& w : words) total += w.size();
    if (phi_length(N) != total)
      return {false, "N=" + std::to_string(N) + ": " + std::to_string(phi_length(N)) + " vs " + std::to_string(total)};
  }
  return {true, "N=1..12 exact"};
}

Outcome c2_sucheston() {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> P(0.001, 0.6);
  const std::size_t H = std::size_t{1} << 16;
  for (int t = 0; t < 50; ++t) {
    std::bernoulli_distribution B(P(rng));
    const ReturnSet A = ReturnSet::where(H, [&](std::size_t) { return B(rng); });
    const auto s = sucheston_M(indicator(A));
    const auto b = banach_density_curve(A);
    if (s.curve.n != b.curve.n || s.curve.value != b.curve.value)
      return {false, "set " + std::to_string(t) + " differs"};
  }
  return {true, "50 sets at H=65536, entrywise equal"};
}

Outcome c3_blocks() {
  const std::size_t H = std::size_t{1} << 20;
  const ReturnSet A = dyadic_blocks(H);
  const double d = lower_density_curve(A).estimate;
  const double bd = banach_density_curve(A).estimate;
  const BlockMembership m = block_member(A, ReturnSet::all(H), 18);
  char buf[160];
  std::snprintf(buf, sizeof buf, "d_lower_est=%.3g bd_est=%.4f block scale 18 %s", d, bd,
                m.verdict ? "found" : "missing");
  return {d < 0.01 && bd >= 0.94 && m.verdict, buf};
}

Outcome c4_word_embedding() {
  const std::vector<double> seed{1, 1, 1, 1};
  const WordEmbedding y(seed, 3);
  const std::uint64_t m_max = y.m_max(3);
  const SpaceSpec w = SpaceSpec::omega();
  const OperatorSpec B = OperatorSpec::backward_shift();

  // z = (-1, y): (B^n z)_1 = y_n >= min y, so |y_n + 1| >= 1 + min y > 0.5 for
  // every n of the implicit 3-round sequence; the scan below confirms it on
  // the materialized rounds.
  const double y_min = y.value_bounds().first;
  const bool z_empty_all = y_min + 1.0 >= 0.5;
  const RealVector y2 = build_word_embedding_sequence(seed, 2).y;
  const RealVector z2 = build_z_from_y(y2);
  LboSearchOptions oz;
  oz.J = 64;
  const LboSearchResult zr = lbo_search(w, B, z2, z2.size() - oz.J, {1}, {0.5}, oz);
  const bool z_ok = z_empty_all && zr.certificate && zr.certificate->vacuous;

  // y: the round-3 words (y_1..y_i, M_max) put M_max at coordinate i + 1
  // of B^{start-1} y while the first coordinate matches y_1 exactly.
  const GrowthBound below = [m_max](std::size_t) { return static_cast<double>(m_max) - 0.5; };
  std::vector<std::size_t> cand;
  for (std::uint64_t i = 1; i < 64; ++i) cand.push_back(y.word_start(3, m_max, i) - 1);
  bool y_ok = true;
  std::size_t min_count = SIZE_MAX;
  for (int e = 1; e <= 6; ++e) {
    const double eps = std::ldexp(1.0, -e);
    const auto wit = lbo_falsify_shift(y, cand, 1, eps, below, 64);
    double top = 0.0;
    for (const auto& f : wit) top = std::max(top, f.magnitude);
    y_ok = y_ok && !wit.empty() && top >= static_cast<double>(m_max);
    min_count = std::min(min_count, wit.size());
  }
  return {z_ok && y_ok, "L3=" + std::to_string(y.length()) + " z vacuous=" + (z_ok ? "yes" : "no") +
                            ", y witnesses>=" + std::to_string(min_count) + " per eps at magnitude " +
                            std::to_string(m_max)};
}

Outcome c5_star() {
  const std::size_t H = std::size_t{1} << 18;
  const std::size_t k_max = 9;
  const StarFamily star = gen_star_family(k_max, 9, H + 128);
  // Exhaustive invariants over merged elements (sorted, so neighbours suffice
  // for the spacing test after the pairwise check on each set).
  const auto all = merged(star);
  for (std::size_t s = 0; s < all.size(); ++s) {
    const auto [n, k] = all[s];
    if (n <= k) return {false, "min(A_k) <= k"};
    if (s + 1 < all.size()) {
      const auto [n2, k2] = all[s + 1];
      if (n2 == n) return {false, "sets intersect"};
      if (n2 - n < std::max(k, k2)) return {false, "spacing violated at " + std::to_string(n)};
    }
  }
  const StarOutput out = build_star_recurrent(star, H + 128);
  const RealVector& x = out.x;
  for (std::size_t k = 0; k <= 4; ++k) {
    const std::size_t l = 2 * k + 1;
    for (std::size_t n : star.sets[l - 1]) {
      if (n > H) break;
      double dev = 0.0;
      for (std::size_t j = 1; j <= l; ++j) dev = std::max(dev, std::abs(x[n + j - 1] - x[j - 1]));
      if (dev != 0.0) return {false, "A_" + std::to_string(l) + " word at " + std::to_string(n)};
    }
  }
  double sup = 0.0;
  for (double v : x.valid()) sup = std::max(sup, std::abs(v));
  LboSearchOptions o;
  o.J = 64;
  o.growth = [](std::size_t j) { return static_cast<double>(j); };
  const LboSearchResult r = lbo_search(SpaceSpec::omega(), OperatorSpec::backward_shift(), x, H, {1}, {0.3}, o);
  const bool cert = r.certificate && !r.certificate->vacuous &&
                    certificate_violations(SpaceSpec::omega(), OperatorSpec::backward_shift(), x, *r.certificate) == 0;
  return {sup >= 8.0 && cert, "sup|x_j|=" + format_double(sup) + ", certificate " + (cert ? "found" : "missing") +
                                  (r.certificate ? " with " + std::to_string(r.certificate->returns) + " returns" : "")};
}

Outcome c6_defect() {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> U(-4, 4);
  std::uniform_int_distribution<int> kind(0, 2);
  std::uniform_int_distribution<std::size_t> Nd(1, 400), Sd(1, 200), Cd(1, 3);
  const OperatorSpec B = OperatorSpec::backward_shift();
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    std::vector<double> v(1000);
    for (auto& e : v) e = U(rng);
    const RealVector x(v, SpaceKind::Omega);
    TestFunctional<double> f;
    switch (kind(rng)) {
      case 0: f = cosine_functional<double>({Cd(rng), Cd(rng)}, {U(rng), U(rng)}, U(rng)); break;
      case 1: f = tanh_functional<double>(Cd(rng), U(rng), U(rng)); break;
      default: f = clip_functional<double>(Cd(rng), std::abs(U(rng)) + 0.1); break;
    }
    const std::size_t N = Nd(rng), s = Sd(rng);
    OrbitView<double> view(B, x);
    const double d = invariance_defect(view, empirical_measure(s + N, s, N), f);
    const double bound = 2.0 * f.sup_bound / static_cast<double>(N);
    if (!(d <= bound)) return {false, "triple " + std::to_string(t) + " exceeds 2 sup/N"};
    worst = std::max(worst, d / bound);
  }
  for (std::size_t p = 1; p <= 12; ++p) {
    std::vector<double> v(400);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sin(static_cast<double>(i % p) * 1.7);
    OrbitView<double> view(B, RealVector(v, SpaceKind::Omega));
    const auto f = cosine_functional<double>({1, 2}, {0.9, -1.3}, 1.0);
    for (std::size_t s = 1; s <= 3; ++s)
      if (invariance_defect(view, empirical_measure(s + 5 * p, s, 5 * p), f) != 0.0)
        return {false, "period " + std::to_string(p) + " window has nonzero defect"};
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "100 triples, max defect/bound=%.3f; periodic windows exact 0", worst);
  return {true, buf};
}

Outcome c7_ball_mass() {
  const std::size_t H = std::size_t{1} << 16;
  const StarFamily star = gen_star_family(9, 9, H + 128);
  const RealVector x = build_star_recurrent(star, H + 128).x;
  std::vector<NeighborhoodSpec<double>> basis;
  for (std::size_t k = 0; k <= 4; ++k) basis.push_back(NeighborhoodSpec<double>(x, 2 * k + 1, 0.3));
  try {
    const auto cand = build_invariant_candidate(SpaceSpec::omega(), OperatorSpec::backward_shift(), x, basis, H,
                                                std::vector<TestFunctional<double>>{});
    double worst = INFINITY;
    for (const auto& c : cand.components) {
      const double ratio = (c.ball_mass / c.witness_density).convert_to<double>();
      worst = std::min(worst, ratio);
      if (!(c.ball_mass.convert_to<double>() >= 0.9 * c.witness_density.convert_to<double>()))
        return {false, "component " + std::to_string(c.index) + " mass below 0.9 x witness"};
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "5 components, min mass/witness=%.3f, total mass %s", worst,
                  to_string(cand.mixture.total()).c_str());
    return {true, buf};
  } catch (const Error& e) {
    return {false, e.what()};
  }
}

Outcome c8_coverage() {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<std::size_t> Gmax(1, 40), H(200, 5000);
  for (int t = 0; t < 200; ++t) {
    const std::size_t gmax = Gmax(rng), h = H(rng);
    std::uniform_int_distribution<std::size_t> G(1, gmax);
    std::vector<std::size_t> e;
    for (std::size_t n = G(rng); n <= h; n += G(rng)) e.push_back(n);
    const ReturnSet R(e, h);
    std::size_t gap = e.front();
    for (std::size_t i = 1; i < e.size(); ++i) gap = std::max(gap, e[i] - e[i - 1]);
    const Coverage c = urec_coverage(R, true);
    if (!c.covered || c.n_used != gap) return {false, "set " + std::to_string(t)};
    // Explicit decomposition m = n + j, n ∈ {0} ∪ R, 0 <= j <= N.
    std::size_t i = 0, pred = 0;
    for (std::size_t m = 1; m + gap <= h; ++m) {
      while (i < e.size() && e[i] <= m) pred = e[i++];
      if (m - pred > gap) return {false, "index " + std::to_string(m) + " not decomposed"};
    }
  }
  return {true, "200 syndetic sets covered with N_used = max gap"};
}

Outcome c9_operators() {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> Nd;
  double worst = 0.0;
  for (Complex a : {Complex(0.5), Complex(1.0), Complex(0.3, 0.8), Complex(-2.0)})
    for (int t = 0; t < 10; ++t) {
      std::vector<Complex> c(31);
      double f = 1.0;
      for (std::size_t i = 0; i <= 30; ++i) {
        if (i > 0) f /= static_cast<double>(i);
        c[i] = Complex(Nd(rng), Nd(rng)) * f;
      }
      const Vector p = polynomial(c);
      const Vector back = lbo::apply(OperatorSpec::birkhoff(-a), lbo::apply(OperatorSpec::birkhoff(a), p));
      for (std::size_t i = 0; i <= 30; ++i) worst = std::max(worst, std::abs(back.at(i) - c[i]));
    }
  double eig = 0.0;
  eig = std::max(eig, eigencheck_diffop({0.0, 1.0}, 1.0, 40));
  eig = std::max(eig, eigencheck_diffop({0.0, 0.0, 1.0}, 2.0, 40));
  eig = std::max(eig, eigencheck_diffop({1.0, 1.0}, Complex(0.0, 1.0), 40));
  char buf[96];
  std::snprintf(buf, sizeof buf, "round trip %.2e, eigen residual %.2e", worst, eig);
  return {worst < 1e-10 && eig < 1e-10, buf};
}

Outcome c10_determinism() {
  const ExperimentConfig c = parse_config_file(LBOLAB_EXAMPLE_CONFIG);
  const RunResult a = run_experiment(c);
  const RunResult b = run_experiment(c);
  const std::string ja = a.report.dump(2), jb = b.report.dump(2);
  const bool same = ja == jb && a.files == b.files;
  return {same && a.exit_code == 0,
          std::string(same ? "identical" : "different") + " reports (" + std::to_string(ja.size()) + " bytes), exit " +
              std::to_string(a.exit_code)};
}

}  // namespace

int main() {
  const std::vector<Criterion> cs{
      {1, "phi(N) closed form vs word enumeration", 1, c1_phi},
      {2, "Sucheston functional equals Banach-density curve", 30, c2_sucheston},
      {3, "dyadic blocks: low lower density, high Banach density, blocks", 10, c3_blocks},
      {4, "word-embedding pair z certified, y falsified", 5, c4_word_embedding},
      {5, "(*)-construction invariants, returns and lbo certificate", 20, c5_star},
      {6, "invariance defect <= 2 sup/N, zero on full periods", 30, c6_defect},
      {7, "invariant candidate ball masses on the (*)-vector", 30, c7_ball_mass},
      {8, "coverage identity on syndetic sets", 5, c8_coverage},
      {9, "Birkhoff round trip and phi(D) eigenfunctions", 2, c9_operators},
      {10, "example config runs are byte-identical", 60, c10_determinism},
  };
  int failed = 0;
  for (const Criterion& c : cs) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool ok = o.ok && s < c.limit_s;
    if (o.ok && !ok) o.detail += "; over time limit";
    failed += !ok;
    std::printf("%s %2d %s: %s [%.2fs / %.0fs]\n", ok ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), s,
                c.limit_s);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(cs.size()) - failed, cs.size());
  return failed;
}
