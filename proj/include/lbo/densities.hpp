#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/dynamic_bitset.hpp>

#include "lbo/error.hpp"

namespace lbo {

/// Visit times N_T(x, E) ∩ [1, horizon], strictly increasing.
struct ReturnSet {
  std::vector<std::size_t> elems;
  std::size_t horizon = 0;

  ReturnSet() = default;
  ReturnSet(std::vector<std::size_t> e, std::size_t h) : elems(std::move(e)), horizon(h) {
    validate();
  }

  void validate() const {
    for (std::size_t i = 0; i < elems.size(); ++i) {
      require(elems[i] >= 1, ErrorCode::InvalidParameter, "return times start at 1");
      require(elems[i] <= horizon, ErrorCode::InvalidParameter,
              "return time " + std::to_string(elems[i]) + " beyond horizon " +
                  std::to_string(horizon));
      require(i == 0 || elems[i - 1] < elems[i], ErrorCode::InvalidParameter,
              "return times must be strictly increasing");
    }
  }

  bool empty() const noexcept { return elems.empty(); }
  std::size_t size() const noexcept { return elems.size(); }
  bool contains(std::size_t n) const { return std::binary_search(elems.begin(), elems.end(), n); }

  /// Bit n set iff n is a member; size horizon + 1 (bit 0 unused).
  boost::dynamic_bitset<std::uint64_t> bits() const {
    boost::dynamic_bitset<std::uint64_t> b(horizon + 1);
    for (std::size_t n : elems) b.set(n);
    return b;
  }

  /// P[N] = #(A ∩ [1, N]) for N = 0..horizon.
  std::vector<std::size_t> prefix_counts() const {
    std::vector<std::size_t> p(horizon + 1, 0);
    std::size_t i = 0;
    for (std::size_t n = 1; n <= horizon; ++n) {
      p[n] = p[n - 1];
      if (i < elems.size() && elems[i] == n) {
        ++p[n];
        ++i;
      }
    }
    return p;
  }

  /// {1, ..., h}
  static ReturnSet all(std::size_t h) {
    std::vector<std::size_t> e(h);
    for (std::size_t i = 0; i < h; ++i) e[i] = i + 1;
    return {std::move(e), h};
  }

  template <class Pred>
  static ReturnSet where(std::size_t h, Pred pred) {
    std::vector<std::size_t> e;
    for (std::size_t n = 1; n <= h; ++n)
      if (pred(n)) e.push_back(n);
    return {std::move(e), h};
  }

  friend bool operator==(const ReturnSet&, const ReturnSet&) = default;
};

/// Sampled curve of (N, value) pairs.
struct Curve {
  std::vector<std::size_t> n;
  std::vector<double> value;
};

struct DensityOptions {
  std::size_t n_min = 16;
  bool exhaustive = false;  // every N in [n_min, H] instead of the geometric grid
};

/// Window lengths examined by the Banach-density and Sucheston estimators:
/// n_min, 2 n_min, 4 n_min, ... below H, then H itself.
inline std::vector<std::size_t> window_grid(std::size_t horizon, const DensityOptions& opt) {
  require(opt.n_min >= 1, ErrorCode::InvalidParameter, "n_min must be >= 1");
  require(horizon >= opt.n_min, ErrorCode::HorizonTooSmall,
          "horizon " + std::to_string(horizon) + " below n_min " + std::to_string(opt.n_min));
  std::vector<std::size_t> g;
  if (opt.exhaustive) {
    for (std::size_t N = opt.n_min; N <= horizon; ++N) g.push_back(N);
    return g;
  }
  for (std::size_t N = opt.n_min; N < horizon; N *= 2) g.push_back(N);
  g.push_back(horizon);
  return g;
}

struct LowerDensity {
  Curve curve;  // every N = 1..H
  double estimate = 0.0;
  std::size_t argmin_n = 0;
};

/// d_N = #(A ∩ [1,N]) / N; the liminf surrogate is the minimum over N ∈ [H/2, H].
inline LowerDensity lower_density_curve(const ReturnSet& A) {
  require(A.horizon >= 1, ErrorCode::HorizonTooSmall, "lower density needs horizon >= 1");
  LowerDensity out;
  const std::size_t H = A.horizon;
  out.curve.n.resize(H);
  out.curve.value.resize(H);
  std::size_t count = 0, i = 0;
  for (std::size_t N = 1; N <= H; ++N) {
    if (i < A.elems.size() && A.elems[i] == N) {
      ++count;
      ++i;
    }
    out.curve.n[N - 1] = N;
    out.curve.value[N - 1] = static_cast<double>(count) / static_cast<double>(N);
  }
  const std::size_t lo = std::max<std::size_t>(1, H / 2);
  out.estimate = out.curve.value[lo - 1];
  out.argmin_n = lo;
  for (std::size_t N = lo; N <= H; ++N)
    if (out.curve.value[N - 1] < out.estimate) {
      out.estimate = out.curve.value[N - 1];
      out.argmin_n = N;
    }
  return out;
}

struct BanachDensity {
  Curve curve;                          // (N, W_N) on the window grid
  std::vector<std::size_t> witness_m;   // W_N attained on [m+1, m+N]
  std::vector<std::size_t> witness_count;
  double estimate = 0.0;                // max of W_N
  std::size_t best = 0;                 // index into curve; ties favour larger N
  bool sanity_ok = true;                // N W_N >= N' W_N' - (N' - N) along the grid
};

/// W_N = max_{0 <= m <= H-N} #(A ∩ [m+1, m+N]) / N via prefix counts.
inline BanachDensity banach_density_curve(const ReturnSet& A, const DensityOptions& opt = {}) {
  const std::vector<std::size_t> grid = window_grid(A.horizon, opt);
  const std::vector<std::size_t> P = A.prefix_counts();
  BanachDensity out;
  for (std::size_t N : grid) {
    std::size_t best_c = 0, best_m = 0;
    for (std::size_t m = 0; m + N <= A.horizon; ++m) {
      const std::size_t c = P[m + N] - P[m];
      if (c > best_c) {
        best_c = c;
        best_m = m;
      }
    }
    out.curve.n.push_back(N);
    out.curve.value.push_back(static_cast<double>(best_c) / static_cast<double>(N));
    out.witness_m.push_back(best_m);
    out.witness_count.push_back(best_c);
  }
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (out.curve.value[i] >= out.estimate) {
      out.estimate = out.curve.value[i];
      out.best = i;
    }
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const std::size_t M = grid[i + 1] - grid[i];
    if (out.witness_count[i] + M < out.witness_count[i + 1]) out.sanity_ok = false;
  }
  return out;
}

struct SuchestonOptions {
  DensityOptions windows;
  double bound = 1e6;  // |phi_j| above this is rejected as unbounded input
};

struct SuchestonResult {
  Curve curve;  // (N, S_N), S_N = max_m windowed mean of phi
  std::vector<std::size_t> witness_m;
  double estimate = 0.0;  // S_N at the largest window
};

/// Sucheston's functional M(phi) at finite horizon: for each sampled N the
/// largest windowed mean. Window sums come from extended-precision prefix
/// sums and are rounded to double before the division, so integer-valued
/// sequences reproduce count/N exactly.
inline SuchestonResult sucheston_M(std::span<const double> phi, const SuchestonOptions& opt = {}) {
  const std::size_t H = phi.size();
  const std::vector<std::size_t> grid = window_grid(H, opt.windows);
  std::vector<long double> S(H + 1, 0.0L);
  for (std::size_t j = 0; j < H; ++j) {
    require(std::abs(phi[j]) <= opt.bound, ErrorCode::UnboundedInput,
            "|phi_" + std::to_string(j + 1) + "| exceeds declared bound");
    S[j + 1] = S[j] + phi[j];
  }
  SuchestonResult out;
  for (std::size_t N : grid) {
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_m = 0;
    for (std::size_t m = 0; m + N <= H; ++m) {
      const double v = static_cast<double>(S[m + N] - S[m]) / static_cast<double>(N);
      if (v > best) {
        best = v;
        best_m = m;
      }
    }
    out.curve.n.push_back(N);
    out.curve.value.push_back(best);
    out.witness_m.push_back(best_m);
  }
  out.estimate = out.curve.value.back();
  return out;
}

/// 1_A as a real sequence of length A.horizon.
inline std::vector<double> indicator(const ReturnSet& A) {
  std::vector<double> v(A.horizon, 0.0);
  for (std::size_t n : A.elems) v[n - 1] = 1.0;
  return v;
}

/// Largest gap, counting 0 -> min(A) and max(A) -> H. Empty sets report H + 1.
inline std::size_t max_gap(const ReturnSet& A) {
  if (A.empty()) return A.horizon + 1;
  std::size_t g = A.elems.front();
  for (std::size_t i = 1; i < A.elems.size(); ++i) g = std::max(g, A.elems[i] - A.elems[i - 1]);
  return std::max(g, A.horizon - A.elems.back());
}

enum class FamilyKind { LowerDensityPositive, UpperBanachPositive, Syndetic, APb, BlockOf };

constexpr std::string_view to_string(FamilyKind k) noexcept {
  switch (k) {
    case FamilyKind::LowerDensityPositive: return "lower_density_positive";
    case FamilyKind::UpperBanachPositive: return "upper_banach_positive";
    case FamilyKind::Syndetic: return "syndetic";
    case FamilyKind::APb: return "ap_b";
    case FamilyKind::BlockOf: return "block_of";
  }
  return "?";
}

/// Finite-horizon description of a Furstenberg family.
struct FamilySpec {
  FamilyKind kind = FamilyKind::UpperBanachPositive;
  double threshold = 0.01;
  std::size_t max_gap = 1;
  std::size_t diff_bound = 1;
  std::size_t min_len = 2;
  std::shared_ptr<const FamilySpec> inner;
  std::size_t scale = 1;
  /// Member of `inner` whose prefixes must translate into the tested set;
  /// defaults to {1, ..., H}, which lies in every family above.
  std::optional<ReturnSet> inner_witness;

  static FamilySpec lower_density(double t) { return threshold_family(FamilyKind::LowerDensityPositive, t); }
  static FamilySpec upper_banach(double t) { return threshold_family(FamilyKind::UpperBanachPositive, t); }
  static FamilySpec syndetic(std::size_t g) {
    require(g >= 1, ErrorCode::InvalidParameter, "syndetic gap bound must be >= 1");
    FamilySpec f;
    f.kind = FamilyKind::Syndetic;
    f.max_gap = g;
    return f;
  }
  static FamilySpec ap_b(std::size_t diff_bound, std::size_t min_len) {
    require(diff_bound >= 1 && min_len >= 1, ErrorCode::InvalidParameter,
            "AP_b needs diff_bound >= 1 and min_len >= 1");
    FamilySpec f;
    f.kind = FamilyKind::APb;
    f.diff_bound = diff_bound;
    f.min_len = min_len;
    return f;
  }
  static FamilySpec block_of(FamilySpec inner, std::size_t scale,
                             std::optional<ReturnSet> witness = std::nullopt) {
    require(scale >= 1, ErrorCode::InvalidParameter, "block scale must be >= 1");
    FamilySpec f;
    f.kind = FamilyKind::BlockOf;
    f.inner = std::make_shared<const FamilySpec>(std::move(inner));
    f.scale = scale;
    f.inner_witness = std::move(witness);
    return f;
  }

 private:
  static FamilySpec threshold_family(FamilyKind k, double t) {
    require(t > 0.0 && t <= 1.0, ErrorCode::InvalidParameter, "family threshold must lie in (0, 1]");
    FamilySpec f;
    f.kind = k;
    f.threshold = t;
    return f;
  }
};

/// Witnessing data behind a verdict. Verdicts are finite-horizon estimates.
struct Evidence {
  std::string kind;
  std::vector<std::size_t> values;
  double value = 0.0;
};

struct Membership {
  bool verdict = false;
  Evidence evidence;
};

struct BlockMembership {
  bool verdict = false;
  std::vector<std::size_t> translations;  // n_s with F_s + n_s ⊂ B
  std::size_t failed_scale = 0;           // first s without a translate, 0 if none
};

/// For s = 1..scale, F_s = first s elements of the witness; look for the
/// smallest n >= 0 with F_s + n ⊂ B using bitset-shift intersection.
inline BlockMembership block_member(const ReturnSet& B, const ReturnSet& witness, std::size_t scale) {
  require(!witness.empty(), ErrorCode::InvalidParameter, "block witness must be nonempty");
  require(scale >= 1 && scale <= witness.size(), ErrorCode::InvalidParameter,
          "block scale must lie in [1, |witness|]");
  require(witness.elems[scale - 1] <= B.horizon, ErrorCode::HorizonTooSmall,
          "largest block element " + std::to_string(witness.elems[scale - 1]) +
              " exceeds horizon " + std::to_string(B.horizon));
  const auto bits = B.bits();
  boost::dynamic_bitset<std::uint64_t> cand(B.horizon + 1);
  cand.set();
  BlockMembership out;
  for (std::size_t s = 1; s <= scale; ++s) {
    cand &= (bits >> witness.elems[s - 1]);
    const std::size_t n = cand.find_first();
    if (n == boost::dynamic_bitset<std::uint64_t>::npos) {
      out.failed_scale = s;
      return out;
    }
    out.translations.push_back(n);
  }
  out.verdict = true;
  return out;
}

inline Membership family_member(const ReturnSet& A, const FamilySpec& F,
                                const DensityOptions& opt = {}) {
  Membership m;
  switch (F.kind) {
    case FamilyKind::LowerDensityPositive: {
      const LowerDensity d = lower_density_curve(A);
      m.verdict = d.estimate >= F.threshold;
      m.evidence = {"tail_min", {d.argmin_n}, d.estimate};
      return m;
    }
    case FamilyKind::UpperBanachPositive: {
      const BanachDensity d = banach_density_curve(A, opt);
      m.verdict = d.estimate >= F.threshold;
      m.evidence = {"window", {d.witness_m[d.best] + 1, d.curve.n[d.best]}, d.estimate};
      return m;
    }
    case FamilyKind::Syndetic: {
      const std::size_t g = max_gap(A);
      m.verdict = g <= F.max_gap;
      m.evidence = {"max_gap", {g}, static_cast<double>(g)};
      return m;
    }
    case FamilyKind::APb: {
      const auto bits = A.bits();
      std::vector<std::size_t> run(A.horizon + 1);
      for (std::size_t d = 1; d <= F.diff_bound; ++d) {
        std::fill(run.begin(), run.end(), 0);
        for (std::size_t n : A.elems) {
          run[n] = (n > d && bits.test(n - d)) ? run[n - d] + 1 : 1;
          if (run[n] >= F.min_len) {
            const std::size_t start = n - (F.min_len - 1) * d;
            m.verdict = true;
            m.evidence = {"progression", {start, d, F.min_len}, static_cast<double>(F.min_len)};
            return m;
          }
        }
      }
      m.evidence = {"progression", {}, 0.0};
      return m;
    }
    case FamilyKind::BlockOf: {
      const ReturnSet w = F.inner_witness ? *F.inner_witness : ReturnSet::all(A.horizon);
      const Membership inner = family_member(w, *F.inner, opt);
      if (!inner.verdict) {
        m.evidence = {"inner_witness_rejected", {}, 0.0};
        return m;
      }
      const BlockMembership b = block_member(A, w, std::min(F.scale, w.size()));
      m.verdict = b.verdict;
      m.evidence = {"translations", b.translations, static_cast<double>(b.failed_scale)};
      return m;
    }
  }
  return m;
}

/// Pairwise disjoint sets A_1..A_kmax with |n - n'| >= max{k, k'} across
/// distinct elements and min(A_k) > k. Elements are listed up to `horizon`.
struct StarFamily {
  std::vector<std::vector<std::size_t>> sets;
  std::size_t horizon = 0;

  std::size_t k_max() const noexcept { return sets.size(); }
};

/// Labelled union (element, k) in increasing order.
inline std::vector<std::pair<std::size_t, std::size_t>> merged(const StarFamily& star) {
  std::vector<std::pair<std::size_t, std::size_t>> all;
  for (std::size_t k = 1; k <= star.sets.size(); ++k)
    for (std::size_t n : star.sets[k - 1]) all.emplace_back(n, k);
  std::sort(all.begin(), all.end());
  return all;
}

/// Empty string when all three invariants hold, otherwise the first
/// violation. Checking consecutive elements of the merged union suffices:
/// for a < b < c, (b-a) + (c-b) >= k_a + k_c >= max{k_a, k_c}.
inline std::string star_violation(const StarFamily& star) {
  for (std::size_t k = 1; k <= star.sets.size(); ++k) {
    const auto& s = star.sets[k - 1];
    if (s.empty()) return "A_" + std::to_string(k) + " is empty";
    for (std::size_t i = 1; i < s.size(); ++i)
      if (s[i - 1] >= s[i]) return "A_" + std::to_string(k) + " is not strictly increasing";
    if (s.front() <= k) return "min(A_" + std::to_string(k) + ") <= " + std::to_string(k);
    if (s.back() > star.horizon) return "A_" + std::to_string(k) + " exceeds horizon";
  }
  const auto all = merged(star);
  for (std::size_t i = 1; i < all.size(); ++i) {
    const auto [a, ka] = all[i - 1];
    const auto [b, kb] = all[i];
    if (a == b) return "sets " + std::to_string(ka) + " and " + std::to_string(kb) + " share " + std::to_string(a);
    if (b - a < std::max(ka, kb))
      return "elements " + std::to_string(a) + " (A_" + std::to_string(ka) + ") and " +
             std::to_string(b) + " (A_" + std::to_string(kb) + ") closer than " +
             std::to_string(std::max(ka, kb));
  }
  return {};
}

/// Interleaved lattice: m_s = (k_max + 1) + s * D with D = max(block_spacing,
/// k_max), and m_s joins A_{(s mod k_max) + 1}. Every A_k is an arithmetic
/// progression of difference D * k_max, so it has positive lower density.
inline StarFamily gen_star_family(std::size_t k_max, std::size_t block_spacing, std::size_t horizon) {
  require(k_max >= 1, ErrorCode::InvalidParameter, "k_max must be >= 1");
  require(block_spacing >= 2, ErrorCode::InvalidParameter, "block_spacing must be >= 2");
  StarFamily star;
  star.horizon = horizon;
  star.sets.resize(k_max);
  const std::size_t D = std::max(block_spacing, k_max);
  const std::size_t offset = k_max + 1;
  for (std::size_t s = 0, m = offset; m <= horizon; ++s, m += D) star.sets[s % k_max].push_back(m);
  const std::string bad = star_violation(star);
  require(bad.empty(), ErrorCode::ConstructionFailed, "generated star family invalid: " + bad);
  return star;
}

}  // namespace lbo
