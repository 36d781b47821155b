#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <future>
#include <random>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "lbo/densities.hpp"
#include "lbo/error.hpp"
#include "lbo/operators.hpp"
#include "lbo/recurrence.hpp"
#include "lbo/spaces.hpp"
#include "lbo/truncated_vector.hpp"

namespace lbo {

using Rational = boost::multiprecision::cpp_rational;

/// Uniform probability on the orbit points T^n x, n in [start, start + length - 1].
struct EmpiricalMeasure {
  std::string orbit_ref;
  std::size_t start = 1;
  std::size_t length = 1;
  std::size_t horizon = 0;  // last orbit index available to the measure

  std::size_t last() const noexcept { return start + length - 1; }
  Rational weight() const { return Rational(1, length); }
  Rational total_mass() const { return weight() * length; }
  std::vector<std::size_t> atoms() const {
    std::vector<std::size_t> a(length);
    for (std::size_t i = 0; i < length; ++i) a[i] = start + i;
    return a;
  }
};

inline EmpiricalMeasure empirical_measure(std::size_t horizon, std::size_t start, std::size_t length,
                                          std::string orbit_ref = {}) {
  require(start >= 1 && length >= 1, ErrorCode::WindowOutOfRange, "window must be a nonempty [m+1, m+N]");
  require(start + length - 1 <= horizon, ErrorCode::WindowOutOfRange,
          "window [" + std::to_string(start) + ", " + std::to_string(start + length - 1) +
              "] exceeds orbit horizon " + std::to_string(horizon));
  return {std::move(orbit_ref), start, length, horizon};
}

template <Scalar S>
EmpiricalMeasure empirical_measure(const Orbit<S>& o, std::size_t start, std::size_t length,
                                   std::string orbit_ref = {}) {
  return empirical_measure(o.horizon, start, length, std::move(orbit_ref));
}

/// Cylinder functional: a bounded function of finitely many coordinates.
template <Scalar S>
struct TestFunctional {
  std::string name;
  std::vector<std::size_t> depends_on;  // 1-based coordinates
  std::function<double(std::span<const S>)> eval;
  double sup_bound = 1.0;
  double lipschitz_bound = 1.0;  // for the max-metric on depends_on

  std::size_t width() const {
    return depends_on.empty() ? 0 : *std::max_element(depends_on.begin(), depends_on.end());
  }

  double operator()(const TruncatedVector<S>& v) const {
    std::vector<S> c(depends_on.size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = v.at(depends_on[i] - 1);
    return eval(std::span<const S>(c));
  }

  double on(std::span<const S> coords) const { return eval(coords); }
};

/// amplitude * cos(sum_i freq_i * Re x_{d_i})
template <Scalar S>
TestFunctional<S> cosine_functional(std::vector<std::size_t> coords, std::vector<double> freqs,
                                    double amplitude) {
  require(coords.size() == freqs.size() && !coords.empty(), ErrorCode::InvalidParameter,
          "cosine functional needs one frequency per coordinate");
  double lip = 0.0;
  for (double f : freqs) lip += std::abs(f);
  TestFunctional<S> t;
  t.name = "cos";
  t.depends_on = std::move(coords);
  t.sup_bound = std::abs(amplitude);
  t.lipschitz_bound = std::abs(amplitude) * lip;
  t.eval = [freqs = std::move(freqs), amplitude](std::span<const S> c) {
    double s = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) s += freqs[i] * std::real(c[i]);
    return amplitude * std::cos(s);
  };
  return t;
}

/// amplitude * tanh(rate * |x_d|)
template <Scalar S>
TestFunctional<S> tanh_functional(std::size_t coord, double rate, double amplitude) {
  TestFunctional<S> t;
  t.name = "tanh";
  t.depends_on = {coord};
  t.sup_bound = std::abs(amplitude);
  t.lipschitz_bound = std::abs(amplitude * rate);
  t.eval = [rate, amplitude](std::span<const S> c) { return amplitude * std::tanh(rate * std::abs(c[0])); };
  return t;
}

/// Re x_d clipped to [-c, c].
template <Scalar S>
TestFunctional<S> clip_functional(std::size_t coord, double c) {
  require(c > 0.0, ErrorCode::InvalidParameter, "clip level must be positive");
  TestFunctional<S> t;
  t.name = "clip";
  t.depends_on = {coord};
  t.sup_bound = c;
  t.lipschitz_bound = 1.0;
  t.eval = [c](std::span<const S> v) { return std::clamp(std::real(v[0]), -c, c); };
  return t;
}

struct FunctionalCheck {
  bool sup_ok = true;
  bool lipschitz_ok = true;
  double max_abs = 0.0;
  double max_ratio = 0.0;  // largest |f(u) - f(v)| / max_d |u_d - v_d| seen
};

/// Probes the declared bounds on random inputs with coordinates in [-scale, scale].
template <Scalar S>
FunctionalCheck validate_functional(const TestFunctional<S>& f, std::uint64_t seed,
                                    std::size_t trials = 1000, double scale = 100.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-scale, scale);
  const auto draw = [&] {
    std::vector<S> c(f.depends_on.size());
    for (auto& v : c) {
      if constexpr (std::same_as<S, double>) v = U(rng);
      else v = S(U(rng), U(rng));
    }
    return c;
  };
  FunctionalCheck out;
  for (std::size_t t = 0; t < trials; ++t) {
    auto u = draw();
    auto v = u;
    // Nearby pairs probe the local slope; far pairs the global one.
    const double h = t % 2 == 0 ? 1e-3 : scale;
    std::uniform_real_distribution<double> P(-h, h);
    for (auto& c : v) c += S(P(rng));
    const double fu = f.on(u), fv = f.on(v);
    double dist = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) dist = std::max(dist, std::abs(u[i] - v[i]));
    out.max_abs = std::max({out.max_abs, std::abs(fu), std::abs(fv)});
    if (dist > 0.0) out.max_ratio = std::max(out.max_ratio, std::abs(fu - fv) / dist);
  }
  const double slack = 1e-12 * std::max(1.0, f.lipschitz_bound);
  out.sup_ok = out.max_abs <= f.sup_bound;
  out.lipschitz_ok = out.max_ratio <= f.lipschitz_bound + slack;
  return out;
}

namespace detail {

template <Scalar S>
double functional_at(OrbitView<S>& view, const TestFunctional<S>& f, std::size_t n) {
  try {
    const std::size_t w = f.width();
    return f(view.zero_tail() || w == 0 ? view.point(n) : view.prefix(n, w));
  } catch (const Error& e) {
    if (!is_exhaustion(e)) throw;
    throw Error(ErrorCode::WindowOutOfRange,
                "orbit point " + std::to_string(n) + " cannot supply the functional's coordinates");
  }
}

}  // namespace detail

/// |∫ f∘T dμ - ∫ f dμ|. The two sums telescope to
/// (f(T^{m+N+1} x) - f(T^{m+1} x)) / N, so the defect is at most 2 sup|f| / N.
template <Scalar S>
double invariance_defect(OrbitView<S>& view, const EmpiricalMeasure& mu, const TestFunctional<S>& f) {
  require(mu.last() + 1 <= mu.horizon, ErrorCode::WindowOutOfRange,
          "invariance defect needs orbit point " + std::to_string(mu.last() + 1));
  const double head = detail::functional_at(view, f, mu.start);
  const double tail = detail::functional_at(view, f, mu.last() + 1);
  return std::abs(tail - head) / static_cast<double>(mu.length);
}

template <Scalar S>
double invariance_defect(const Orbit<S>& o, const EmpiricalMeasure& mu, const TestFunctional<S>& f) {
  require(mu.last() + 1 <= o.horizon, ErrorCode::WindowOutOfRange,
          "invariance defect needs orbit point " + std::to_string(mu.last() + 1));
  return std::abs(f(o.points[mu.last() + 1]) - f(o.points[mu.start])) / static_cast<double>(mu.length);
}

/// μ(nbhd) = #{n in window : T^n x in nbhd} / N, exactly.
template <Scalar S>
Rational measure_of_ball(const SpaceSpec& space, OrbitView<S>& view, const EmpiricalMeasure& mu,
                         const NeighborhoodSpec<S>& nbhd) {
  const std::size_t width = point_width(space, nbhd.k0);
  std::size_t hits = 0;
  for (std::size_t n = mu.start; n <= mu.last(); ++n) {
    try {
      if (in_neighborhood(space, nbhd, detail::orbit_point(view, n, width))) ++hits;
    } catch (const Error& e) {
      if (!detail::is_exhaustion(e)) throw;
      throw Error(ErrorCode::WindowOutOfRange, "window point " + std::to_string(n) + " unreachable");
    }
  }
  return Rational(hits, mu.length);
}

template <Scalar S>
Rational measure_of_ball(const SpaceSpec& space, const Orbit<S>& o, const EmpiricalMeasure& mu,
                         const NeighborhoodSpec<S>& nbhd) {
  require(mu.last() <= o.horizon, ErrorCode::WindowOutOfRange, "window exceeds orbit");
  std::size_t hits = 0;
  for (std::size_t n = mu.start; n <= mu.last(); ++n)
    if (in_neighborhood(space, nbhd, o.points[n])) ++hits;
  return Rational(hits, mu.length);
}

/// Σ_n 2^{-n} μ_n over the first n_max components, with the unassigned
/// remainder kept as tail_mass rather than renormalized away.
struct MeasureMixture {
  struct Component {
    EmpiricalMeasure mu;
    Rational weight;
  };
  std::vector<Component> components;
  Rational tail_mass = 1;

  Rational total() const {
    Rational t = tail_mass;
    for (const auto& c : components) t += c.weight * c.mu.total_mass();
    return t;
  }
};

/// Dyadic weights 2^{-1}, ..., 2^{-n} and tail 2^{-n}.
inline MeasureMixture dyadic_mixture(std::vector<EmpiricalMeasure> mus) {
  MeasureMixture m;
  Rational w = 1;
  for (auto& mu : mus) {
    w /= 2;
    m.components.push_back({std::move(mu), w});
  }
  m.tail_mass = w;
  return m;
}

struct InvariantOptions {
  double threshold = 0.01;  // bd_est a basis return set must reach
  std::size_t n_max = 20;
  DensityOptions density;
  bool parallel = true;
};

struct ComponentReport {
  std::size_t index = 0;  // 1-based basis position
  std::size_t k0 = 0;
  double eps = 0.0;
  std::size_t horizon = 0;
  double bd_est = 0.0;
  std::size_t witness_count = 0;
  Rational witness_density;  // witness_count / window length
  Rational ball_mass;
  bool mass_ok = false;      // ball_mass >= witness_density
};

struct DefectRow {
  std::string functional;
  double defect = 0.0;
  double bound = 0.0;          // Σ_n w_n 2 sup / N_n
  double bound_min_window = 0.0;  // 2 sup / min_n N_n
  bool ok = false;
};

template <Scalar S>
struct InvariantCandidate {
  MeasureMixture mixture;
  std::vector<ComponentReport> components;
  std::vector<DefectRow> defects;
  bool support_local = false;  // every atom is an orbit point inside the scanned horizon
};

/// Finite-horizon stand-in for the measure built from RRec ∩ ℓbo: for each
/// basis neighbourhood V_n the Banach-density witness window of its return
/// set carries μ_n, and the μ_n are mixed with weights 2^{-n}. The Banach
/// limit of the proof is replaced by that witness window.
template <Scalar S>
InvariantCandidate<S> build_invariant_candidate(const SpaceSpec& space, const OperatorSpec& op,
                                                const TruncatedVector<S>& x0,
                                                const std::vector<NeighborhoodSpec<S>>& basis,
                                                std::size_t H,
                                                const std::vector<TestFunctional<S>>& battery,
                                                const InvariantOptions& opt = {}) {
  require(!basis.empty(), ErrorCode::InvalidParameter, "neighbourhood basis is empty");
  const std::size_t nc = std::min(basis.size(), opt.n_max);

  struct Built {
    ComponentReport rep;
    EmpiricalMeasure mu;
  };
  const auto build = [&](std::size_t i) {
    const NeighborhoodSpec<S>& V = basis[i];
    const ReturnScan scan = return_set(space, op, x0, V, H);
    Built b;
    b.rep.index = i + 1;
    b.rep.k0 = V.k0;
    b.rep.eps = V.eps;
    b.rep.horizon = scan.set.horizon;
    if (scan.set.horizon < opt.density.n_min || scan.set.empty()) return b;
    const BanachDensity bd = banach_density_curve(scan.set, opt.density);
    b.rep.bd_est = bd.estimate;
    b.rep.witness_count = bd.witness_count[bd.best];
    const std::size_t N = bd.curve.n[bd.best];
    b.rep.witness_density = Rational(b.rep.witness_count, N);
    b.mu = empirical_measure(scan.set.horizon, bd.witness_m[bd.best] + 1, N, "x0");
    OrbitView<S> view(op, x0);
    b.rep.ball_mass = measure_of_ball(space, view, b.mu, V);
    b.rep.mass_ok = b.rep.ball_mass >= b.rep.witness_density;
    return b;
  };

  std::vector<Built> built;
  if (opt.parallel && nc > 1) {
    std::vector<std::future<Built>> futs;
    for (std::size_t i = 0; i < nc; ++i) futs.push_back(std::async(std::launch::async, build, i));
    for (auto& f : futs) built.push_back(f.get());
  } else {
    for (std::size_t i = 0; i < nc; ++i) built.push_back(build(i));
  }
  for (const Built& b : built)
    require(b.rep.bd_est >= opt.threshold && b.rep.bd_est > 0.0, ErrorCode::HypothesisFailed,
            "basis neighbourhood " + std::to_string(b.rep.index) + " has bd_est " +
                std::to_string(b.rep.bd_est) + " below threshold " + std::to_string(opt.threshold),
            b.rep.index);

  InvariantCandidate<S> out;
  std::vector<EmpiricalMeasure> mus;
  for (Built& b : built) {
    out.components.push_back(b.rep);
    mus.push_back(b.mu);
  }
  out.mixture = dyadic_mixture(std::move(mus));
  out.support_local = std::all_of(out.mixture.components.begin(), out.mixture.components.end(),
                                  [](const auto& c) { return c.mu.start >= 1 && c.mu.last() <= c.mu.horizon; });

  std::size_t min_n = out.mixture.components.front().mu.length;
  for (const auto& c : out.mixture.components) min_n = std::min(min_n, c.mu.length);
  for (const TestFunctional<S>& f : battery) {
    OrbitView<S> view(op, x0);
    DefectRow row;
    row.functional = f.name;
    double signed_sum = 0.0;
    for (auto& c : out.mixture.components) {
      // The measure may read one point past its scanned horizon.
      EmpiricalMeasure mu = c.mu;
      mu.horizon = mu.last() + 1;
      const double w = c.weight.template convert_to<double>();
      const double head = detail::functional_at(view, f, mu.start);
      const double tail = detail::functional_at(view, f, mu.last() + 1);
      signed_sum += w * (tail - head) / static_cast<double>(mu.length);
      row.bound += w * 2.0 * f.sup_bound / static_cast<double>(mu.length);
    }
    row.defect = std::abs(signed_sum);
    row.bound_min_window = 2.0 * f.sup_bound / static_cast<double>(min_n);
    row.ok = row.defect <= row.bound;
    out.defects.push_back(row);
  }
  return out;
}

}  // namespace lbo
