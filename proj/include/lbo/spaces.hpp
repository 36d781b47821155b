#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lbo/error.hpp"
#include "lbo/truncated_vector.hpp"

namespace lbo {

/// Finite window a[k][j], 1 <= k <= K_max, 1 <= j <= J_max, of a Köthe
/// matrix. Row-major storage; construction checks (KM1) monotonicity in k
/// and (KM2) column positivity inside the window.
class KotheMatrix {
 public:
  KotheMatrix() = default;

  KotheMatrix(std::size_t k_max, std::size_t j_max, std::vector<double> data)
      : k_max_(k_max), j_max_(j_max), data_(std::move(data)) {
    require(k_max_ >= 1 && j_max_ >= 1, ErrorCode::InvalidParameter, "empty Köthe window");
    require(data_.size() == k_max_ * j_max_, ErrorCode::InvalidParameter,
            "Köthe data size does not match K_max*J_max");
    for (double v : data_)
      require(v >= 0.0 && std::isfinite(v), ErrorCode::InvalidParameter,
              "Köthe entries must be finite and non-negative");
    for (std::size_t k = 1; k < k_max_; ++k)
      for (std::size_t j = 1; j <= j_max_; ++j)
        require((*this)(k, j) <= (*this)(k + 1, j), ErrorCode::InvalidParameter,
                "(KM1) violated at k=" + std::to_string(k) + ", j=" + std::to_string(j));
    for (std::size_t j = 1; j <= j_max_; ++j) {
      bool positive = false;
      for (std::size_t k = 1; k <= k_max_ && !positive; ++k) positive = (*this)(k, j) > 0.0;
      require(positive, ErrorCode::InvalidParameter,
              "(KM2) violated: column " + std::to_string(j) + " is identically zero");
    }
  }

  /// a[k][j] = 1 for j <= k, else 0: the matrix whose λ^∞ space is ω.
  static KotheMatrix omega_window(std::size_t k_max, std::size_t j_max) {
    require(k_max >= j_max, ErrorCode::InvalidParameter,
            "omega window needs K_max >= J_max for (KM2)");
    std::vector<double> d(k_max * j_max, 0.0);
    for (std::size_t k = 1; k <= k_max; ++k)
      for (std::size_t j = 1; j <= std::min(k, j_max); ++j) d[(k - 1) * j_max + (j - 1)] = 1.0;
    return {k_max, j_max, std::move(d)};
  }

  /// Power weights a[k][j] = j^k.
  static KotheMatrix power_weights(std::size_t k_max, std::size_t j_max) {
    std::vector<double> d(k_max * j_max);
    for (std::size_t k = 1; k <= k_max; ++k)
      for (std::size_t j = 1; j <= j_max; ++j)
        d[(k - 1) * j_max + (j - 1)] = std::pow(static_cast<double>(j), static_cast<double>(k));
    return {k_max, j_max, std::move(d)};
  }

  /// One row per k, comma separated weights a[k][1..J_max]. Blank lines and
  /// lines starting with '#' are skipped.
  static KotheMatrix from_csv(std::istream& in) {
    std::vector<double> data;
    std::size_t rows = 0, cols = 0, line_no = 0;
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line[0] == '#') continue;
      std::stringstream ss(line);
      std::string cell;
      std::size_t n = 0;
      while (std::getline(ss, cell, ',')) {
        try {
          std::size_t used = 0;
          data.push_back(std::stod(cell, &used));
        } catch (const std::exception&) {
          throw Error(ErrorCode::InvalidParameter,
                      "bad Köthe CSV cell '" + cell + "' on line " + std::to_string(line_no));
        }
        ++n;
      }
      if (n == 0) continue;
      if (rows == 0) cols = n;
      require(n == cols, ErrorCode::InvalidParameter,
              "ragged Köthe CSV at line " + std::to_string(line_no));
      ++rows;
    }
    return {rows, cols, std::move(data)};
  }

  std::size_t k_max() const noexcept { return k_max_; }
  std::size_t j_max() const noexcept { return j_max_; }

  /// 1-based lookup.
  double operator()(std::size_t k, std::size_t j) const noexcept {
    return data_[(k - 1) * j_max_ + (j - 1)];
  }

  const std::vector<double>& data() const noexcept { return data_; }

  friend bool operator==(const KotheMatrix&, const KotheMatrix&) = default;

 private:
  std::size_t k_max_ = 0;
  std::size_t j_max_ = 0;
  std::vector<double> data_;
};

/// Ambient Fréchet space at finite truncation.
struct SpaceSpec {
  SpaceKind kind = SpaceKind::Omega;
  std::optional<KotheMatrix> matrix;  // KotheP only
  double p = std::numeric_limits<double>::infinity();
  std::size_t circle_samples = 1024;  // Entire only
  std::string description;

  static SpaceSpec omega() { return {SpaceKind::Omega, std::nullopt, std::numeric_limits<double>::infinity(), 0, "omega"}; }

  static SpaceSpec kothe(KotheMatrix a, double p) {
    require(p >= 1.0, ErrorCode::InvalidParameter, "Köthe exponent p must lie in [1, inf]");
    return {SpaceKind::Kothe, std::move(a), p, 0, "kothe"};
  }

  static SpaceSpec entire(std::size_t circle_samples = 1024) {
    require(circle_samples >= 8, ErrorCode::InvalidParameter, "circle_samples must be >= 8");
    return {SpaceKind::Entire, std::nullopt, std::numeric_limits<double>::infinity(),
            circle_samples, "entire"};
  }

  bool p_infinite() const noexcept { return std::isinf(p); }
};

/// Upper bound on the relative shortfall of `max_modulus` for a degree-d
/// polynomial: by Bernstein's inequality the true circle maximum M obeys
/// M * (1 - d*pi/samples) <= sampled maximum <= M.
inline double max_modulus_rel_error(std::size_t degree, std::size_t samples) {
  return static_cast<double>(degree) * std::numbers::pi / static_cast<double>(samples);
}

/// max |f(z)| over `samples` equispaced points of |z| = radius, starting at
/// angle 0. Doubling `samples` reuses every previous point bit-for-bit.
template <Scalar S>
double max_modulus(std::span<const S> coeffs, double radius, std::size_t samples) {
  require(samples >= 8, ErrorCode::InvalidParameter, "max_modulus needs samples >= 8");
  require(radius > 0.0 && std::isfinite(radius), ErrorCode::InvalidParameter,
          "max_modulus radius must be positive");
  if (coeffs.empty()) return 0.0;
  if (coeffs.size() == 1) return std::abs(coeffs[0]);
  const double two_pi = 2.0 * std::numbers::pi;
  double best = 0.0;
  for (std::size_t m = 0; m < samples; ++m) {
    const double theta = (two_pi * static_cast<double>(m)) / static_cast<double>(samples);
    const Complex z = std::polar(radius, theta);
    Complex acc{};
    for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * z + Complex(coeffs[i]);
    best = std::max(best, std::abs(acc));
  }
  return best;
}

namespace detail {

inline void check_tag(const SpaceSpec& space, SpaceKind tag) {
  require(space.kind == tag, ErrorCode::SpaceMismatch,
          "vector tagged " + std::string(to_string(tag)) + " used in space " +
              std::string(to_string(space.kind)));
}

/// Number of coordinates a Köthe seminorm reads from x.
template <Scalar S>
std::size_t kothe_extent(const SpaceSpec& space, const TruncatedVector<S>& x) {
  const std::size_t n = x.valid_len();
  require(n <= space.matrix->j_max(), ErrorCode::MatrixRangeExceeded,
          "vector extent " + std::to_string(n) + " exceeds J_max " +
              std::to_string(space.matrix->j_max()));
  return n;
}

}  // namespace detail

/// k-th seminorm of the space: p_k on ω, q_k / r_k on λ^p(A), s_k on H(C).
template <Scalar S>
double seminorm(const SpaceSpec& space, std::size_t k, const TruncatedVector<S>& x) {
  detail::check_tag(space, x.tag());
  require(k >= 1, ErrorCode::InvalidParameter, "seminorm index starts at 1");
  switch (space.kind) {
    case SpaceKind::Omega: {
      require(x.supports(k), ErrorCode::IndexBeyondValidity,
              "p_" + std::to_string(k) + " needs " + std::to_string(k) +
                  " valid coordinates, have " + std::to_string(x.valid_len()));
      double m = 0.0;
      for (std::size_t i = 0; i < k; ++i) m = std::max(m, std::abs(x.at(i)));
      return m;
    }
    case SpaceKind::Kothe: {
      const KotheMatrix& a = *space.matrix;
      require(k <= a.k_max(), ErrorCode::MatrixRangeExceeded,
              "seminorm index " + std::to_string(k) + " exceeds K_max " +
                  std::to_string(a.k_max()));
      const std::size_t n = detail::kothe_extent(space, x);
      if (space.p_infinite()) {
        double m = 0.0;
        for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::abs(x[i]) * a(k, i + 1));
        return m;
      }
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) acc += std::pow(std::abs(x[i]) * a(k, i + 1), space.p);
      return std::pow(acc, 1.0 / space.p);
    }
    case SpaceKind::Entire:
      return max_modulus<S>(x.valid(), static_cast<double>(k), space.circle_samples);
  }
  return 0.0;
}

/// Basic neighbourhood { y : p_k(y - center) < eps for all k <= k0 }.
template <Scalar S>
struct NeighborhoodSpec {
  TruncatedVector<S> center;
  std::size_t k0 = 1;
  double eps = 0.5;

  NeighborhoodSpec() = default;
  NeighborhoodSpec(TruncatedVector<S> c, std::size_t k, double e)
      : center(std::move(c)), k0(k), eps(e) {
    require(k0 >= 1, ErrorCode::InvalidParameter, "neighbourhood k0 must be >= 1");
    require(eps > 0.0 && !std::isnan(eps), ErrorCode::InvalidParameter,
            "neighbourhood eps must be positive");
  }
};

/// Membership uses strict inequalities and no tolerance.
template <Scalar S>
bool in_neighborhood(const SpaceSpec& space, const NeighborhoodSpec<S>& nbhd,
                     const TruncatedVector<S>& y) {
  require(y.tag() == nbhd.center.tag(), ErrorCode::SpaceMismatch,
          "point and neighbourhood centre live in different spaces");
  detail::check_tag(space, y.tag());
  if (space.kind == SpaceKind::Omega) {
    // max over j <= k is nested in k, so the k0 test decides every k <= k0.
    require(y.supports(nbhd.k0) && nbhd.center.supports(nbhd.k0),
            ErrorCode::IndexBeyondValidity, "k0 exceeds validity of point or centre");
    for (std::size_t i = 0; i < nbhd.k0; ++i)
      if (!(std::abs(y.at(i) - nbhd.center.at(i)) < nbhd.eps)) return false;
    return true;
  }
  const TruncatedVector<S> diff = y - nbhd.center;
  for (std::size_t k = 1; k <= nbhd.k0; ++k)
    if (!(seminorm(space, k, diff) < nbhd.eps)) return false;
  return true;
}

/// Componentwise and seminormwise suprema over a finite set of vectors.
struct BoundednessCertificate {
  std::vector<double> witness_w;         // w_j = max |v_j|, j <= J
  std::vector<double> per_seminorm_sup;  // sup_v p_k(v), k <= K
  bool empty_set = false;
};

template <Scalar S>
BoundednessCertificate bounded_certificate(const SpaceSpec& space,
                                           std::span<const TruncatedVector<S>> vecs,
                                           std::size_t J, std::size_t K) {
  BoundednessCertificate cert;
  cert.witness_w.assign(J, 0.0);
  cert.per_seminorm_sup.assign(K, 0.0);
  if (vecs.empty()) {
    cert.empty_set = true;
    return cert;
  }
  const SpaceKind tag = vecs.front().tag();
  for (const auto& v : vecs) {
    require(v.tag() == tag, ErrorCode::SpaceMismatch, "certificate over mixed spaces");
    require(v.supports(J), ErrorCode::IndexBeyondValidity,
            "certificate width J=" + std::to_string(J) + " exceeds validity " +
                std::to_string(v.valid_len()));
    for (std::size_t j = 0; j < J; ++j)
      cert.witness_w[j] = std::max(cert.witness_w[j], std::abs(v.at(j)));
    for (std::size_t k = 1; k <= K; ++k)
      cert.per_seminorm_sup[k - 1] = std::max(cert.per_seminorm_sup[k - 1], seminorm(space, k, v));
  }
  return cert;
}

template <Scalar S>
BoundednessCertificate bounded_certificate(const SpaceSpec& space,
                                           const std::vector<TruncatedVector<S>>& vecs,
                                           std::size_t J, std::size_t K) {
  return bounded_certificate(space, std::span<const TruncatedVector<S>>(vecs), J, K);
}

/// The space's w-boundedness test on the first J coordinates: |v_j| <= w_j on
/// ω and H(C); sup_j |v_j|/w_j <= 1 (p = inf) or sum_j (|v_j|/w_j)^p <= 1
/// on λ^p(A).
template <Scalar S>
bool w_bounded(const SpaceSpec& space, const TruncatedVector<S>& v, std::span<const double> w) {
  const std::size_t J = w.size();
  if (space.kind != SpaceKind::Kothe || space.p_infinite()) {
    for (std::size_t j = 0; j < J; ++j)
      if (!(std::abs(v.at(j)) <= w[j])) return false;
    return true;
  }
  double acc = 0.0;
  for (std::size_t j = 0; j < J; ++j) acc += std::pow(std::abs(v.at(j)) / w[j], space.p);
  return acc <= 1.0;
}

/// Turn componentwise suprema into a positive witness passing `w_bounded`
/// for every vector they were taken over. Zero suprema take `fallback(j)`.
/// For λ^p(A) with p < inf the suprema are inflated by (2J)^{1/p}, which
/// keeps the p-sum at most 1/2.
template <class Fallback>
std::vector<double> witness_from_sup(const SpaceSpec& space, std::span<const double> sup,
                                     Fallback fallback) {
  std::vector<double> w(sup.begin(), sup.end());
  double scale = 1.0;
  if (space.kind == SpaceKind::Kothe && !space.p_infinite())
    scale = std::pow(2.0 * static_cast<double>(std::max<std::size_t>(sup.size(), 1)), 1.0 / space.p);
  for (std::size_t j = 0; j < w.size(); ++j) w[j] = w[j] > 0.0 ? w[j] * scale : fallback(j + 1);
  return w;
}

}  // namespace lbo
