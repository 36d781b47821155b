#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "lbo/error.hpp"
#include "lbo/truncated_vector.hpp"

namespace lbo {

enum class OperatorKind { BackwardShift, Diagonal, Birkhoff, MacLane, DiffOp };

constexpr std::string_view to_string(OperatorKind k) noexcept {
  switch (k) {
    case OperatorKind::BackwardShift: return "backward_shift";
    case OperatorKind::Diagonal: return "diagonal";
    case OperatorKind::Birkhoff: return "birkhoff";
    case OperatorKind::MacLane: return "maclane";
    case OperatorKind::DiffOp: return "diffop";
  }
  return "?";
}

/// Tagged description of one operator of the zoo.
///
///  - BackwardShift: (Bx)_j = w_j x_{j+1}; empty `weights` means w = 1.
///  - Diagonal: (Dx)_j = lambda_j x_j.
///  - Birkhoff: translation f(z) -> f(z + a) on Taylor coefficients.
///  - MacLane: differentiation f -> f'.
///  - DiffOp: phi(D) = sum_i phi_i D^i for a polynomial phi.
struct OperatorSpec {
  OperatorKind kind = OperatorKind::BackwardShift;
  std::vector<double> weights;
  std::vector<Complex> lambdas;
  Complex a{};
  std::vector<Complex> phi;
  /// Unknown-tail Birkhoff output keeps only indices whose tail proxy is below this.
  double birkhoff_tail_tol = 1e-12;

  static OperatorSpec backward_shift(std::vector<double> weights = {}) {
    for (double w : weights)
      require(w > 0.0 && std::isfinite(w), ErrorCode::InvalidParameter,
              "shift weights must be positive");
    OperatorSpec op;
    op.kind = OperatorKind::BackwardShift;
    op.weights = std::move(weights);
    return op;
  }
  static OperatorSpec diagonal(std::vector<Complex> lambdas) {
    OperatorSpec op;
    op.kind = OperatorKind::Diagonal;
    op.lambdas = std::move(lambdas);
    return op;
  }
  static OperatorSpec birkhoff(Complex a) {
    require(a != Complex{}, ErrorCode::InvalidParameter, "Birkhoff translation needs a != 0");
    OperatorSpec op;
    op.kind = OperatorKind::Birkhoff;
    op.a = a;
    return op;
  }
  static OperatorSpec maclane() {
    OperatorSpec op;
    op.kind = OperatorKind::MacLane;
    return op;
  }
  static OperatorSpec diffop(std::vector<Complex> phi) {
    require(!phi.empty(), ErrorCode::InvalidParameter, "phi(D) needs at least one coefficient");
    OperatorSpec op;
    op.kind = OperatorKind::DiffOp;
    op.phi = std::move(phi);
    return op;
  }

  bool invertible() const noexcept {
    switch (kind) {
      case OperatorKind::Diagonal:
        return !lambdas.empty() &&
               std::none_of(lambdas.begin(), lambdas.end(),
                            [](Complex l) { return l == Complex{}; });
      case OperatorKind::Birkhoff: return true;
      default: return false;
    }
  }

  /// Degree of phi ignoring trailing zero coefficients.
  std::size_t phi_degree() const noexcept {
    std::size_t d = phi.size();
    while (d > 1 && phi[d - 1] == Complex{}) --d;
    return d == 0 ? 0 : d - 1;
  }

  /// Inverse operator where one exists.
  OperatorSpec inverse() const {
    require(invertible(), ErrorCode::NotInvertible,
            std::string(to_string(kind)) + " has no inverse");
    if (kind == OperatorKind::Birkhoff) return birkhoff(-a);
    std::vector<Complex> inv(lambdas.size());
    for (std::size_t i = 0; i < inv.size(); ++i) inv[i] = Complex{1} / lambdas[i];
    return diagonal(std::move(inv));
  }

  friend bool operator==(const OperatorSpec&, const OperatorSpec&) = default;
};

namespace detail {

inline void require_sequence(SpaceKind tag, OperatorKind k) {
  require(is_sequence_space(tag), ErrorCode::SpaceMismatch,
          std::string(to_string(k)) + " acts on sequence spaces, got " +
              std::string(to_string(tag)));
}

inline void require_entire(SpaceKind tag, OperatorKind k) {
  require(tag == SpaceKind::Entire, ErrorCode::SpaceMismatch,
          std::string(to_string(k)) + " acts on Taylor coefficients, got " +
              std::string(to_string(tag)));
}

inline void validity_exhausted(const std::string& what) {
  throw Error(ErrorCode::ValidityExhausted, what);
}

template <Scalar S>
TruncatedVector<S> apply_shift(const OperatorSpec& op, const TruncatedVector<S>& x) {
  require_sequence(x.tag(), op.kind);
  std::size_t n_out;
  if (x.zero_tail()) {
    n_out = x.size() == 0 ? 0 : x.size() - 1;
  } else {
    if (x.valid_len() < 1) validity_exhausted("backward shift needs valid_len >= 1");
    n_out = x.valid_len() - 1;
  }
  if (!op.weights.empty())
    require(op.weights.size() >= n_out, ErrorCode::WeightLengthMismatch,
            "shift has " + std::to_string(op.weights.size()) + " weights, needs " +
                std::to_string(n_out));
  std::vector<S> out(n_out);
  for (std::size_t i = 0; i < n_out; ++i)
    out[i] = op.weights.empty() ? x[i + 1] : op.weights[i] * x[i + 1];
  return TruncatedVector<S>(std::move(out), x.tag(), x.tail());
}

template <Scalar S>
TruncatedVector<S> apply_diagonal(const OperatorSpec& op, const TruncatedVector<S>& x) {
  const std::size_t n = x.valid_len();
  require(op.lambdas.size() >= n, ErrorCode::WeightLengthMismatch,
          "diagonal has " + std::to_string(op.lambdas.size()) + " eigenvalues, vector needs " +
              std::to_string(n));
  std::vector<S> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = to_scalar<S>(op.lambdas[i]) * x[i];
  return TruncatedVector<S>(std::move(out), x.tag(), x.tail());
}

template <Scalar S>
TruncatedVector<S> apply_maclane(const TruncatedVector<S>& x) {
  require_entire(x.tag(), OperatorKind::MacLane);
  std::size_t n_out;
  if (x.zero_tail()) {
    n_out = x.size() == 0 ? 0 : x.size() - 1;
  } else {
    if (x.valid_len() < 2) validity_exhausted("differentiation needs valid_len >= 2");
    n_out = x.valid_len() - 1;
  }
  std::vector<S> out(n_out);
  for (std::size_t j = 0; j < n_out; ++j) out[j] = static_cast<double>(j + 1) * x[j + 1];
  return TruncatedVector<S>(std::move(out), x.tag(), x.tail());
}

template <Scalar S>
TruncatedVector<S> apply_diffop(const OperatorSpec& op, const TruncatedVector<S>& x) {
  require_entire(x.tag(), OperatorKind::DiffOp);
  const std::size_t deg = op.phi_degree();
  std::size_t n_out;
  if (x.zero_tail()) {
    n_out = x.size();
  } else {
    if (x.valid_len() < deg + 1)
      validity_exhausted("phi(D) of degree " + std::to_string(deg) + " needs valid_len >= " +
                         std::to_string(deg + 1));
    n_out = x.valid_len() - deg;
  }
  std::vector<S> out(n_out);
  for (std::size_t j = 0; j < n_out; ++j) {
    S acc{};
    for (std::size_t i = 0; i <= deg; ++i) {
      if (op.phi[i] == Complex{}) continue;
      if (j + i >= x.valid_len()) break;  // zero tail only
      double falling = 1.0;
      for (std::size_t t = 1; t <= i; ++t) falling *= static_cast<double>(j + t);
      acc += to_scalar<S>(op.phi[i]) * (falling * x[j + i]);
    }
    out[j] = acc;
  }
  return TruncatedVector<S>(std::move(out), x.tag(), x.tail());
}

/// f(z) -> f(z + a): out_j = sum_{m >= j} C(m, j) a^{m-j} x_m, accumulated
/// in extended precision. With an unknown tail the sum is cut at valid_len
/// and index j stays valid only while the last two included terms (a proxy
/// for the omitted tail) stay below `birkhoff_tail_tol`.
template <Scalar S>
TruncatedVector<S> apply_birkhoff(const OperatorSpec& op, const TruncatedVector<S>& x) {
  require_entire(x.tag(), OperatorKind::Birkhoff);
  using LC = std::complex<long double>;
  const std::size_t L = x.valid_len();
  const LC a(op.a.real(), op.a.imag());
  if constexpr (std::same_as<S, double>)
    require(op.a.imag() == 0.0, ErrorCode::InvalidParameter,
            "complex translation in real-only mode");
  std::vector<S> out(L);
  std::size_t valid_out = L;
  for (std::size_t j = 0; j < L; ++j) {
    LC acc{};
    LC c{1.0L};  // C(m, j) a^{m-j} at m = j
    long double tail_proxy = 0.0L;
    for (std::size_t m = j; m < L; ++m) {
      const Complex xm(x[m]);
      const LC term = c * LC(xm.real(), xm.imag());
      acc += term;
      if (m + 2 >= L) tail_proxy = std::max(tail_proxy, std::abs(term));
      c *= a * static_cast<long double>(m + 1) / static_cast<long double>(m + 1 - j);
    }
    if constexpr (std::same_as<S, double>)
      out[j] = static_cast<double>(acc.real());
    else
      out[j] = Complex(static_cast<double>(acc.real()), static_cast<double>(acc.imag()));
    if (!x.zero_tail() && valid_out == L && tail_proxy > op.birkhoff_tail_tol) valid_out = j;
  }
  if (x.zero_tail()) return TruncatedVector<S>(std::move(out), x.tag(), Tail::Zero);
  if (valid_out == 0) validity_exhausted("Birkhoff tail proxy exceeds tolerance at index 0");
  return TruncatedVector<S>(std::move(out), valid_out, x.tag());
}

}  // namespace detail

/// One application of the operator with validity bookkeeping.
template <Scalar S>
TruncatedVector<S> apply(const OperatorSpec& op, const TruncatedVector<S>& x) {
  switch (op.kind) {
    case OperatorKind::BackwardShift: return detail::apply_shift(op, x);
    case OperatorKind::Diagonal: return detail::apply_diagonal(op, x);
    case OperatorKind::Birkhoff: return detail::apply_birkhoff(op, x);
    case OperatorKind::MacLane: return detail::apply_maclane(x);
    case OperatorKind::DiffOp: return detail::apply_diffop(op, x);
  }
  return x;
}

/// Eagerly materialized orbit: points[n] = T^n x for n = 0..horizon.
template <Scalar S>
struct Orbit {
  TruncatedVector<S> base;
  OperatorSpec op;
  std::vector<TruncatedVector<S>> points;
  std::size_t horizon = 0;
};

/// Throws ValidityExhausted with detail() = largest achievable horizon.
template <Scalar S>
Orbit<S> orbit(const OperatorSpec& op, const TruncatedVector<S>& x, std::size_t H) {
  Orbit<S> o{x, op, {}, H};
  o.points.reserve(H + 1);
  o.points.push_back(x);
  for (std::size_t n = 1; n <= H; ++n) {
    try {
      o.points.push_back(lbo::apply(op, o.points.back()));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ValidityExhausted) throw;
      throw Error(ErrorCode::ValidityExhausted,
                  "orbit horizon " + std::to_string(H) + " unreachable; achieved " +
                      std::to_string(n - 1),
                  n - 1);
    }
  }
  return o;
}

/// Lazy orbit access. The unweighted backward shift is served by slicing the
/// base vector; every other operator steps forward from a cached point, so
/// results coincide bit-for-bit with `orbit`. Not thread-safe: give each
/// thread its own view.
template <Scalar S>
class OrbitView {
 public:
  OrbitView(OperatorSpec op, TruncatedVector<S> base)
      : op_(std::move(op)), base_(std::move(base)), cur_(base_) {
    slice_ = op_.kind == OperatorKind::BackwardShift && op_.weights.empty();
    if (slice_) detail::require_sequence(base_.tag(), op_.kind);
  }

  const OperatorSpec& op() const noexcept { return op_; }
  const TruncatedVector<S>& base() const noexcept { return base_; }

  /// T^n x in full.
  TruncatedVector<S> point(std::size_t n) {
    if (slice_) return slice(n, base_.zero_tail() ? base_.size() : base_.valid_len());
    advance(n);
    return cur_;
  }

  /// First `width` coordinates of T^n x.
  TruncatedVector<S> prefix(std::size_t n, std::size_t width) {
    if (slice_) {
      auto p = slice(n, width);
      require(p.supports(width), ErrorCode::IndexBeyondValidity,
              "orbit point " + std::to_string(n) + " has only " +
                  std::to_string(p.valid_len()) + " valid coordinates");
      return p.zero_tail() ? p.prefix(width) : p;
    }
    advance(n);
    return cur_.prefix(width);
  }

  /// Valid length of T^n x (zero-tail points report their stored size).
  std::size_t valid_len(std::size_t n) {
    if (slice_) {
      const std::size_t L = base_.zero_tail() ? base_.size() : base_.valid_len();
      if (!base_.zero_tail() && n > L) throw Error(ErrorCode::ValidityExhausted, "past validity", L);
      return n >= L ? 0 : L - n;
    }
    advance(n);
    return cur_.valid_len();
  }

  bool zero_tail() const noexcept { return base_.zero_tail(); }

 private:
  TruncatedVector<S> slice(std::size_t n, std::size_t width) const {
    const std::size_t L = base_.zero_tail() ? base_.size() : base_.valid_len();
    if (!base_.zero_tail() && n > L)
      throw Error(ErrorCode::ValidityExhausted,
                  "shift orbit point " + std::to_string(n) + " past validity " + std::to_string(L),
                  L);
    const std::size_t start = std::min(n, L);
    const std::size_t stop = std::min(L, start + width);
    std::vector<S> c(base_.coeffs().begin() + static_cast<std::ptrdiff_t>(start),
                     base_.coeffs().begin() + static_cast<std::ptrdiff_t>(stop));
    return TruncatedVector<S>(std::move(c), base_.tag(), base_.tail());
  }

  void advance(std::size_t n) {
    if (n < cur_n_) {
      cur_ = base_;
      cur_n_ = 0;
    }
    while (cur_n_ < n) {
      try {
        cur_ = lbo::apply(op_, cur_);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::ValidityExhausted) throw;
        throw Error(ErrorCode::ValidityExhausted,
                    "orbit point " + std::to_string(n) + " unreachable; achieved " +
                        std::to_string(cur_n_),
                    cur_n_);
      }
      ++cur_n_;
    }
  }

  OperatorSpec op_;
  TruncatedVector<S> base_;
  TruncatedVector<S> cur_;
  std::size_t cur_n_ = 0;
  bool slice_ = false;
};

/// Max deviation of phi(D) e^{lambda z} from phi(lambda) e^{lambda z} over
/// the coefficients that survive truncation.
inline double eigencheck_diffop(const std::vector<Complex>& phi, Complex lambda,
                                std::size_t degree) {
  const OperatorSpec op = OperatorSpec::diffop(phi);
  require(degree >= op.phi_degree() + 2, ErrorCode::InvalidParameter,
          "eigencheck needs degree >= deg(phi) + 2");
  std::vector<Complex> e(degree + 1);
  Complex term{1.0};
  for (std::size_t j = 0; j <= degree; ++j) {
    e[j] = term;
    term *= lambda / static_cast<double>(j + 1);
  }
  const Vector ex(e, SpaceKind::Entire);
  const Vector out = lbo::apply(op, ex);
  Complex phi_lambda{};
  for (std::size_t i = phi.size(); i-- > 0;) phi_lambda = phi_lambda * lambda + phi[i];
  double residual = 0.0;
  for (std::size_t j = 0; j < out.valid_len(); ++j)
    residual = std::max(residual, std::abs(out[j] - phi_lambda * e[j]));
  return residual;
}

}  // namespace lbo
