#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <future>
#include <optional>
#include <string>
#include <vector>

#include "lbo/densities.hpp"
#include "lbo/error.hpp"
#include "lbo/operators.hpp"
#include "lbo/spaces.hpp"
#include "lbo/truncated_vector.hpp"

namespace lbo {

/// Maps a 1-based coordinate index to a positive bound.
using GrowthBound = std::function<double(std::size_t)>;

/// Coordinates of T^n x needed to test membership in a neighbourhood with
/// seminorm index k0 and to read `extra` further coordinates. Zero means
/// "the whole point" (seminorms that read every coordinate).
inline std::size_t point_width(const SpaceSpec& space, std::size_t k0, std::size_t extra = 0) {
  return space.kind == SpaceKind::Omega ? std::max(k0, extra) : 0;
}

namespace detail {

template <Scalar S>
TruncatedVector<S> orbit_point(OrbitView<S>& view, std::size_t n, std::size_t width) {
  return width == 0 ? view.point(n) : view.prefix(n, width);
}

inline bool is_exhaustion(const Error& e) {
  return e.code() == ErrorCode::ValidityExhausted || e.code() == ErrorCode::IndexBeyondValidity ||
         e.code() == ErrorCode::MatrixRangeExceeded;
}

}  // namespace detail

struct ReturnScan {
  ReturnSet set;             // horizon = achieved horizon
  std::size_t requested = 0;
  bool exhausted() const noexcept { return set.horizon < requested; }
};

/// { n in [1, H] : T^n x in nbhd }. Running out of valid coordinates ends the
/// scan early; the achieved horizon is recorded instead of throwing.
template <Scalar S>
ReturnScan return_set(const SpaceSpec& space, const OperatorSpec& op, const TruncatedVector<S>& x,
                      const NeighborhoodSpec<S>& nbhd, std::size_t H) {
  OrbitView<S> view(op, x);
  const std::size_t width = point_width(space, nbhd.k0);
  std::vector<std::size_t> elems;
  std::size_t achieved = H;
  for (std::size_t n = 1; n <= H; ++n) {
    try {
      if (in_neighborhood(space, nbhd, detail::orbit_point(view, n, width))) elems.push_back(n);
    } catch (const Error& e) {
      if (!detail::is_exhaustion(e)) throw;
      achieved = n - 1;
      break;
    }
  }
  return {ReturnSet(std::move(elems), achieved), H};
}

struct ClassifyOptions {
  double frec_threshold = 0.01;  // lower-density estimate needed for FRec
  double rrec_threshold = 0.01;  // Banach-density estimate needed for RRec
  std::size_t urec_max_gap = 64; // gap bound standing in for "bounded gaps"
  DensityOptions density;
  bool parallel = true;
};

struct GridCell {
  std::size_t k0 = 1;
  double eps = 0.5;
};

/// k0-major product of the two grids.
inline std::vector<GridCell> make_grid(const std::vector<std::size_t>& k0s, const std::vector<double>& epss) {
  std::vector<GridCell> g;
  for (std::size_t k : k0s)
    for (double e : epss) g.push_back({k, e});
  return g;
}

struct CellResult {
  GridCell cell;
  ReturnSet returns;
  bool exhausted = false;
  double lower_density = 0.0;
  double banach_density = 0.0;
  std::size_t window_start = 0;  // Banach witness window [start, start + len - 1]
  std::size_t window_len = 0;
  std::size_t max_gap = 0;
};

struct Verdict {
  bool value = false;
  std::size_t pivotal_cell = 0;  // worst cell for the verdict's statistic
};

struct LboCertificate {
  std::size_t k0 = 1;
  double eps = 0.5;
  std::vector<double> w;          // positive, length J
  std::size_t horizon_checked = 0;
  std::size_t returns = 0;        // size of the certified eps-return set
  bool vacuous = false;           // empty return set
};

struct RecurrenceReport {
  ClassifyOptions options;
  std::vector<CellResult> cells;
  Verdict recurrent, reiteratively_recurrent, frequently_recurrent, uniformly_recurrent;
  std::optional<LboCertificate> lbo;
  static constexpr const char* confidence = "finite-horizon";
};

namespace detail {

template <Scalar S>
CellResult classify_cell(const SpaceSpec& space, const OperatorSpec& op, const TruncatedVector<S>& x,
                         std::size_t H, GridCell cell, const ClassifyOptions& opt) {
  const NeighborhoodSpec<S> nbhd(x, cell.k0, cell.eps);
  ReturnScan scan = return_set(space, op, x, nbhd, H);
  CellResult r;
  r.cell = cell;
  r.exhausted = scan.exhausted();
  r.returns = std::move(scan.set);
  const std::size_t h = r.returns.horizon;
  if (h >= 1) r.lower_density = lower_density_curve(r.returns).estimate;
  if (h >= 1) {
    DensityOptions d = opt.density;
    d.n_min = std::min(d.n_min, h);
    const BanachDensity b = banach_density_curve(r.returns, d);
    r.banach_density = b.estimate;
    r.window_start = b.witness_m[b.best] + 1;
    r.window_len = b.curve.n[b.best];
  }
  r.max_gap = max_gap(r.returns);
  return r;
}

template <class Key>
std::size_t argworst(const std::vector<CellResult>& cells, Key key) {
  std::size_t w = 0;
  for (std::size_t i = 1; i < cells.size(); ++i)
    if (key(cells[i]) < key(cells[w])) w = i;
  return w;
}

}  // namespace detail

/// Every verdict is the minimum over grid cells, each cell standing in for
/// one neighbourhood of x. Verdicts are chained URec => FRec => RRec => Rec.
template <Scalar S>
RecurrenceReport classify(const SpaceSpec& space, const OperatorSpec& op, const TruncatedVector<S>& x,
                          std::size_t H, const std::vector<GridCell>& grid,
                          const ClassifyOptions& opt = {}) {
  require(!grid.empty(), ErrorCode::InvalidParameter, "classify needs a nonempty grid");
  RecurrenceReport rep;
  rep.options = opt;
  if (opt.parallel && grid.size() > 1) {
    std::vector<std::future<CellResult>> futs;
    for (const GridCell& c : grid)
      futs.push_back(std::async(std::launch::async, [&, c] {
        return detail::classify_cell(space, op, x, H, c, opt);
      }));
    for (auto& f : futs) rep.cells.push_back(f.get());
  } else {
    for (const GridCell& c : grid) rep.cells.push_back(detail::classify_cell(space, op, x, H, c, opt));
  }
  const auto& cells = rep.cells;
  const auto all_of = [&](auto pred) { return std::all_of(cells.begin(), cells.end(), pred); };

  rep.recurrent.pivotal_cell = detail::argworst(cells, [](const CellResult& c) { return c.returns.size(); });
  rep.recurrent.value = all_of([](const CellResult& c) { return !c.returns.empty(); });

  rep.reiteratively_recurrent.pivotal_cell =
      detail::argworst(cells, [](const CellResult& c) { return c.banach_density; });
  rep.reiteratively_recurrent.value =
      rep.recurrent.value && all_of([&](const CellResult& c) { return c.banach_density >= opt.rrec_threshold; });

  rep.frequently_recurrent.pivotal_cell =
      detail::argworst(cells, [](const CellResult& c) { return c.lower_density; });
  rep.frequently_recurrent.value =
      rep.reiteratively_recurrent.value &&
      all_of([&](const CellResult& c) { return c.lower_density >= opt.frec_threshold; });

  rep.uniformly_recurrent.pivotal_cell =
      detail::argworst(cells, [](const CellResult& c) { return -static_cast<double>(c.max_gap); });
  rep.uniformly_recurrent.value =
      rep.frequently_recurrent.value &&
      all_of([&](const CellResult& c) { return c.max_gap <= opt.urec_max_gap; });
  return rep;
}

/// Default acceptance policy for certificates: w_j <= scale * j with
/// scale = 1 + max_{j <= J} |x_j|.
template <Scalar S>
GrowthBound default_growth(const TruncatedVector<S>& x, std::size_t J) {
  double m = 0.0;
  const std::size_t n = x.zero_tail() ? std::min(J, x.size()) : std::min(J, x.valid_len());
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::abs(x[i]));
  const double scale = 1.0 + m;
  return [scale](std::size_t j) { return scale * static_cast<double>(j); };
}

struct LboSearchOptions {
  std::size_t J = 64;
  std::size_t K = 0;  // seminorm suprema recorded in the per-cell table
  GrowthBound growth; // empty: default_growth(x, J)
};

struct LboCellSup {
  GridCell cell;
  std::size_t returns = 0;
  std::size_t horizon = 0;
  BoundednessCertificate sup;
  bool accepted = false;
};

struct LboSearchResult {
  std::optional<LboCertificate> certificate;
  std::vector<LboCellSup> table;  // every examined cell, in grid order
};

namespace detail {

/// eps-return set of x together with its orbit points' first `width` coordinates.
template <Scalar S>
std::pair<std::vector<std::size_t>, std::size_t> scan_returns(
    const SpaceSpec& space, OrbitView<S>& view, const NeighborhoodSpec<S>& nbhd, std::size_t H,
    std::size_t width, std::vector<TruncatedVector<S>>* points) {
  std::vector<std::size_t> ns;
  std::size_t achieved = H;
  for (std::size_t n = 1; n <= H; ++n) {
    try {
      TruncatedVector<S> p = orbit_point(view, n, width);
      if (in_neighborhood(space, nbhd, p)) {
        if (points) {
          require(p.supports(width), ErrorCode::IndexBeyondValidity, "orbit point too short");
          points->push_back(std::move(p));
        }
        ns.push_back(n);
      }
    } catch (const Error& e) {
      if (!is_exhaustion(e)) throw;
      achieved = n - 1;
      break;
    }
  }
  return {std::move(ns), achieved};
}

}  // namespace detail

/// Walks the (k0, eps) grid in order and returns the first cell whose
/// eps-return set has componentwise suprema inside the growth policy. The
/// certificate's w is those suprema (zero entries replaced by the policy),
/// adapted to the space's boundedness test.
template <Scalar S>
LboSearchResult lbo_search(const SpaceSpec& space, const OperatorSpec& op, const TruncatedVector<S>& x,
                           std::size_t H, const std::vector<std::size_t>& k0_grid,
                           const std::vector<double>& eps_grid, const LboSearchOptions& opt = {}) {
  require(!k0_grid.empty() && !eps_grid.empty(), ErrorCode::InvalidParameter,
          "lbo_search needs nonempty grids");
  const GrowthBound growth = opt.growth ? opt.growth : default_growth(x, opt.J);
  LboSearchResult out;
  for (const GridCell& cell : make_grid(k0_grid, eps_grid)) {
    OrbitView<S> view(op, x);
    const NeighborhoodSpec<S> nbhd(x, cell.k0, cell.eps);
    const std::size_t width = point_width(space, cell.k0, std::max(opt.J, opt.K));
    std::vector<TruncatedVector<S>> pts;
    auto [ns, achieved] = detail::scan_returns(space, view, nbhd, H, width, &pts);
    LboCellSup row{cell, ns.size(), achieved, bounded_certificate(space, pts, opt.J, opt.K), false};
    bool ok = true;
    for (std::size_t j = 1; j <= opt.J && ok; ++j) ok = row.sup.witness_w[j - 1] <= growth(j);
    row.accepted = ok;
    out.table.push_back(row);
    if (ok) {
      LboCertificate c;
      c.k0 = cell.k0;
      c.eps = cell.eps;
      c.w = witness_from_sup(space, row.sup.witness_w, growth);
      c.horizon_checked = achieved;
      c.returns = ns.size();
      c.vacuous = ns.empty();
      out.certificate = std::move(c);
      return out;
    }
  }
  return out;
}

/// Re-runs the membership scan over n <= horizon_checked and counts orbit
/// points inside the certificate's neighbourhood that fail the w-test.
template <Scalar S>
std::size_t certificate_violations(const SpaceSpec& space, const OperatorSpec& op,
                                   const TruncatedVector<S>& x, const LboCertificate& cert) {
  OrbitView<S> view(op, x);
  const NeighborhoodSpec<S> nbhd(x, cert.k0, cert.eps);
  const std::size_t width = point_width(space, cert.k0, cert.w.size());
  std::vector<TruncatedVector<S>> pts;
  detail::scan_returns(space, view, nbhd, cert.horizon_checked, width, &pts);
  std::size_t bad = 0;
  for (const auto& p : pts)
    if (!w_bounded(space, p, std::span<const double>(cert.w))) ++bad;
  return bad;
}

struct FalsifyWitness {
  std::size_t n = 0;
  std::size_t j = 0;
  double magnitude = 0.0;
  friend bool operator==(const FalsifyWitness&, const FalsifyWitness&) = default;
};

/// (n, j, |(T^n x)_j|) for every n in the eps-return set and j <= J whose
/// coordinate exceeds growth(j). A nonempty list rules out every w dominated
/// by `growth` at this (k0, eps).
template <Scalar S>
std::vector<FalsifyWitness> lbo_falsify(const SpaceSpec& space, const OperatorSpec& op,
                                        const TruncatedVector<S>& x, std::size_t H, std::size_t k0,
                                        double eps, const GrowthBound& growth, std::size_t J = 64) {
  OrbitView<S> view(op, x);
  const NeighborhoodSpec<S> nbhd(x, k0, eps);
  const std::size_t width = point_width(space, k0, J);
  std::vector<TruncatedVector<S>> pts;
  auto [ns, achieved] = detail::scan_returns(space, view, nbhd, H, width, &pts);
  (void)achieved;
  std::vector<FalsifyWitness> out;
  for (std::size_t i = 0; i < ns.size(); ++i)
    for (std::size_t j = 1; j <= J; ++j) {
      const double v = std::abs(pts[i].at(j - 1));
      if (v > growth(j)) out.push_back({ns[i], j, v});
    }
  return out;
}

/// Sequence with 1-based random access, e.g. an implicitly stored
/// construction too long to materialize.
template <class T>
concept IndexedSequence = requires(const T& s, std::size_t j) {
  { s.value(j) } -> std::convertible_to<double>;
  { s.length() } -> std::convertible_to<std::size_t>;
};

/// lbo_falsify for the backward shift on ω over an indexed sequence,
/// restricted to candidate shifts n. (B^n y)_j = y_{n+j}, so each candidate
/// is checked exactly; candidates running past the end are skipped.
template <IndexedSequence Seq>
std::vector<FalsifyWitness> lbo_falsify_shift(const Seq& y, const std::vector<std::size_t>& candidates,
                                              std::size_t k0, double eps, const GrowthBound& growth,
                                              std::size_t J) {
  std::vector<FalsifyWitness> out;
  const std::size_t len = y.length();
  for (std::size_t n : candidates) {
    if (n + std::max(k0, J) > len) continue;
    bool in = true;
    for (std::size_t j = 1; j <= k0 && in; ++j) in = std::abs(y.value(j) - y.value(n + j)) < eps;
    if (!in) continue;
    for (std::size_t j = 1; j <= J; ++j) {
      const double v = std::abs(y.value(n + j));
      if (v > growth(j)) out.push_back({n, j, v});
    }
  }
  return out;
}

/// Certificate for Tx from one for x, T invertible. The neighbourhood U1 of
/// Tx is chosen with T^{-1}(U1) ⊂ U0 using the inverse's continuity modulus
/// on the finite data; U1 ∩ O(Tx) then lies in T(U0 ∩ O(x)), whose
/// componentwise suprema give the new w. The result is re-verified and a
/// failed verification is reported as ModulusUnavailable.
template <Scalar S>
LboCertificate pushforward_certificate(const SpaceSpec& space, const OperatorSpec& op,
                                       const TruncatedVector<S>& x, const LboCertificate& cert) {
  require(op.invertible(), ErrorCode::NotInvertible,
          std::string(to_string(op.kind)) + " is not invertible");
  require(cert.horizon_checked >= 1, ErrorCode::InvalidParameter, "certificate horizon must be >= 1");
  std::size_t k1 = cert.k0;
  double eps1 = cert.eps;
  if (op.kind == OperatorKind::Diagonal) {
    require(space.kind != SpaceKind::Entire, ErrorCode::ModulusUnavailable,
            "no coefficient-level modulus for diagonal operators on H(C)");
    const std::size_t extent = space.kind == SpaceKind::Omega ? cert.k0 : x.valid_len();
    require(op.lambdas.size() >= extent, ErrorCode::ModulusUnavailable,
            "eigenvalues do not cover the seminorm's coordinates");
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < extent; ++j) m = std::min(m, std::abs(op.lambdas[j]));
    eps1 = cert.eps * m;
  } else {
    require(space.kind == SpaceKind::Entire, ErrorCode::SpaceMismatch,
            "Birkhoff translation acts on H(C)");
    // s_k(f(. - a)) <= s_{k + |a|}(f) by the maximum-modulus principle.
    k1 = cert.k0 + static_cast<std::size_t>(std::ceil(std::abs(op.a)));
  }
  require(eps1 > 0.0, ErrorCode::ModulusUnavailable, "inverse modulus degenerate");

  const TruncatedVector<S> tx = lbo::apply(op, x);
  OrbitView<S> view(op, x);
  const NeighborhoodSpec<S> u0(x, cert.k0, cert.eps);
  const std::size_t J = cert.w.size();
  const std::size_t width = point_width(space, cert.k0, J);
  // One forward pass: T^{n+1} x joins the image whenever T^n x ∈ U0.
  std::vector<TruncatedVector<S>> image;
  bool prev_in = false;
  for (std::size_t n = 1; n <= cert.horizon_checked; ++n) {
    TruncatedVector<S> p;
    try {
      p = detail::orbit_point(view, n, width);
    } catch (const Error& e) {
      if (!detail::is_exhaustion(e)) throw;
      throw Error(ErrorCode::ModulusUnavailable, "certified horizon no longer reachable");
    }
    if (prev_in) image.push_back(p);
    prev_in = in_neighborhood(space, u0, p);
  }
  const BoundednessCertificate sup = bounded_certificate(space, image, J, 0);
  LboCertificate out;
  out.k0 = k1;
  out.eps = eps1;
  out.w = witness_from_sup(space, sup.witness_w, [&](std::size_t j) { return cert.w[j - 1]; });
  out.horizon_checked = cert.horizon_checked - 1;
  out.returns = image.size();
  out.vacuous = image.empty();
  require(certificate_violations(space, op, tx, out) == 0, ErrorCode::ModulusUnavailable,
          "pushed certificate failed re-verification");
  return out;
}

struct Coverage {
  bool covered = false;
  std::size_t n_used = 0;
  std::size_t first_uncovered = 0;  // 0 when covered
};

/// Index combinatorics of O(x) ⊂ ∪_{j <= N} T^j(U ∩ O(x)): each m in
/// [1, H - N] must be n + j with n a return time (or 0 when x ∈ U),
/// n <= m and m - n <= N, where N is the largest gap.
inline Coverage urec_coverage(const ReturnSet& R, bool include_zero) {
  require(!R.empty(), ErrorCode::EmptyReturnSet, "coverage needs a nonempty return set");
  Coverage c;
  std::size_t g = include_zero ? R.elems.front() : 0;
  for (std::size_t i = 1; i < R.elems.size(); ++i) g = std::max(g, R.elems[i] - R.elems[i - 1]);
  if (g == 0) g = 1;
  c.n_used = g;
  const std::size_t last = R.horizon > g ? R.horizon - g : 0;
  std::size_t i = 0;
  bool have_pred = include_zero;
  std::size_t pred = 0;
  for (std::size_t m = 1; m <= last; ++m) {
    while (i < R.elems.size() && R.elems[i] <= m) {
      pred = R.elems[i++];
      have_pred = true;
    }
    if (!have_pred || m - pred > g) {
      c.first_uncovered = m;
      return c;
    }
  }
  c.covered = true;
  return c;
}

template <Scalar S>
Coverage urec_coverage(const SpaceSpec& space, const OperatorSpec& op, const TruncatedVector<S>& x,
                       const NeighborhoodSpec<S>& nbhd, std::size_t H) {
  const ReturnScan scan = return_set(space, op, x, nbhd, H);
  return urec_coverage(scan.set, in_neighborhood(space, nbhd, x));
}

struct TransferOptions {
  std::size_t J = 64;     // coordinates to stabilize
  double tol = 1e-9;      // lexicographic stabilization tolerance
};

template <Scalar S>
struct Transfer {
  TruncatedVector<S> x_u;
  std::vector<std::size_t> translations;
  std::vector<std::size_t> subsequence;
  std::size_t depth = 0;
  ReturnSet transferred;
  ReturnSet expected;
  bool complete() const { return transferred == expected; }
};

/// Constructive core of the almost-F-recurrence transfer on ω. Find a_n with
/// T^{a_n + r}(x0) ∈ U for every r in the first n elements of A, extract a
/// coordinatewise-stable subsequence of T^{a_n + r0}(x0) (coordinate 1 first,
/// keeping the cluster of the latest candidate), and check which r - r0 the
/// limit prefix x_U returns on.
template <Scalar S>
Transfer<S> transfer_block_recurrence(const SpaceSpec& space, const OperatorSpec& op,
                                      const TruncatedVector<S>& x0, const NeighborhoodSpec<S>& U,
                                      const ReturnSet& A, std::size_t H,
                                      const TransferOptions& opt = {}) {
  require(space.kind == SpaceKind::Omega, ErrorCode::SpaceMismatch,
          "transfer needs ω, where weak convergence is coordinatewise");
  require(!A.empty(), ErrorCode::InvalidParameter, "inner witness A must be nonempty");
  const std::size_t r0 = A.elems.front();
  const ReturnSet R = return_set(space, op, x0, U, H).set;
  std::size_t scale = 0;
  while (scale < A.size() && A.elems[scale] <= R.horizon) ++scale;
  require(scale >= 1, ErrorCode::NoConvergentSubsequence, "no block of A fits the horizon", 0);
  const BlockMembership blocks = block_member(R, A, scale);
  require(!blocks.translations.empty(), ErrorCode::NoConvergentSubsequence,
          "return set contains no translate of min(A)", 0);

  Transfer<S> out;
  out.translations = blocks.translations;
  OrbitView<S> view(op, x0);
  std::vector<TruncatedVector<S>> cand;
  std::size_t J = opt.J;
  for (std::size_t t : out.translations) {
    std::size_t avail;
    try {
      avail = view.valid_len(t + r0);
    } catch (const Error& e) {
      if (!detail::is_exhaustion(e)) throw;
      break;
    }
    if (!x0.zero_tail()) J = std::min(J, avail);
    cand.push_back(view.point(t + r0));
  }
  require(!cand.empty(), ErrorCode::NoConvergentSubsequence, "no candidate point reachable", 0);

  std::vector<std::size_t> keep(cand.size());
  for (std::size_t s = 0; s < keep.size(); ++s) keep[s] = s;
  const std::size_t min_support = std::min<std::size_t>(2, cand.size());
  std::size_t depth = 0;
  for (std::size_t c = 0; c < J; ++c) {
    const S ref = cand[keep.back()].at(c);
    std::vector<std::size_t> next;
    for (std::size_t s : keep)
      if (std::abs(cand[s].at(c) - ref) <= opt.tol) next.push_back(s);
    if (next.size() < min_support) break;
    keep = std::move(next);
    depth = c + 1;
  }
  require(depth >= U.k0, ErrorCode::NoConvergentSubsequence,
          "stabilized only " + std::to_string(depth) + " coordinates, need " + std::to_string(U.k0),
          depth);
  out.depth = depth;
  out.subsequence = keep;
  out.x_u = cand[keep.back()].prefix(depth);
  out.x_u = TruncatedVector<S>(std::vector<S>(out.x_u.coeffs()), depth, out.x_u.tag());

  OrbitView<S> limit(op, out.x_u);
  std::vector<std::size_t> got, want;
  std::size_t h_prime = 0;
  for (std::size_t r : A.elems) {
    if (r <= r0) continue;
    const std::size_t d = r - r0;
    try {
      const bool in = in_neighborhood(space, U, limit.prefix(d, U.k0));
      h_prime = d;
      want.push_back(d);
      if (in) got.push_back(d);
    } catch (const Error& e) {
      if (!detail::is_exhaustion(e)) throw;
      break;
    }
  }
  out.transferred = ReturnSet(std::move(got), h_prime);
  out.expected = ReturnSet(std::move(want), h_prime);
  return out;
}

}  // namespace lbo
