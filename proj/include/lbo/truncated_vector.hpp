#pragma once

#include <algorithm>
#include <complex>
#include <concepts>
#include <cstddef>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "lbo/error.hpp"

namespace lbo {

using Complex = std::complex<double>;

template <class S>
concept Scalar = std::same_as<S, double> || std::same_as<S, Complex>;

/// Narrow a complex parameter to the working scalar type. Real-only mode
/// rejects parameters with a nonzero imaginary part.
template <Scalar S>
S to_scalar(Complex c) {
  if constexpr (std::same_as<S, double>) {
    require(c.imag() == 0.0, ErrorCode::InvalidParameter,
            "complex parameter in real-only mode");
    return c.real();
  } else {
    return c;
  }
}

/// Owning space of a vector. Sequence spaces index coordinates from 1
/// (storage slot i holds x_{i+1}); the entire-function space stores Taylor
/// coefficients by degree starting at 0.
enum class SpaceKind { Omega, Kothe, Entire };

constexpr std::string_view to_string(SpaceKind k) noexcept {
  switch (k) {
    case SpaceKind::Omega: return "omega";
    case SpaceKind::Kothe: return "kothe";
    case SpaceKind::Entire: return "entire";
  }
  return "?";
}

constexpr bool is_sequence_space(SpaceKind k) noexcept {
  return k != SpaceKind::Entire;
}

/// What lies past the stored coefficients. `Unknown` is the generic
/// truncation of an infinite sequence; `Zero` marks finitely supported data
/// (polynomials, e_j, finite words) whose tail is exactly zero.
enum class Tail { Unknown, Zero };

/// Finite prefix of a sequence or Taylor-coefficient vector.
///
/// Only the first `valid_len()` stored entries are exact. With a zero tail
/// every index is readable and `valid_len() == size()`.
template <Scalar S>
class TruncatedVector {
 public:
  using value_type = S;

  TruncatedVector() = default;

  TruncatedVector(std::vector<S> coeffs, SpaceKind tag, Tail tail = Tail::Unknown)
      : coeffs_(std::move(coeffs)), valid_len_(coeffs_.size()), tag_(tag), tail_(tail) {}

  TruncatedVector(std::vector<S> coeffs, std::size_t valid_len, SpaceKind tag)
      : coeffs_(std::move(coeffs)), valid_len_(valid_len), tag_(tag) {
    require(valid_len_ <= coeffs_.size(), ErrorCode::InvalidParameter,
            "valid_len exceeds stored length");
  }

  std::size_t size() const noexcept { return coeffs_.size(); }
  std::size_t valid_len() const noexcept { return valid_len_; }
  SpaceKind tag() const noexcept { return tag_; }
  Tail tail() const noexcept { return tail_; }
  bool zero_tail() const noexcept { return tail_ == Tail::Zero; }

  /// True when the first `n` entries can be read exactly.
  bool supports(std::size_t n) const noexcept { return zero_tail() || n <= valid_len_; }

  /// Storage-indexed read; throws past validity unless the tail is zero.
  S at(std::size_t i) const {
    if (i < valid_len_) return coeffs_[i];
    require(zero_tail(), ErrorCode::IndexBeyondValidity,
            "read at index " + std::to_string(i) + " past valid_len " +
                std::to_string(valid_len_));
    return S{};
  }

  /// Unchecked access to stored slots (callers stay below valid_len()).
  const S& operator[](std::size_t i) const noexcept { return coeffs_[i]; }

  std::span<const S> valid() const noexcept { return {coeffs_.data(), valid_len_}; }
  const std::vector<S>& coeffs() const noexcept { return coeffs_; }

  /// First `width` entries (zero-padded when the tail is zero).
  TruncatedVector prefix(std::size_t width) const {
    require(supports(width), ErrorCode::IndexBeyondValidity,
            "prefix width " + std::to_string(width) + " past valid_len " +
                std::to_string(valid_len_));
    std::vector<S> out(width);
    const std::size_t n = std::min(width, valid_len_);
    std::copy_n(coeffs_.begin(), n, out.begin());
    return TruncatedVector(std::move(out), tag_, tail_);
  }

  friend TruncatedVector operator-(const TruncatedVector& a, const TruncatedVector& b) {
    return combine(a, b, S{1}, S{-1});
  }
  friend TruncatedVector operator+(const TruncatedVector& a, const TruncatedVector& b) {
    return combine(a, b, S{1}, S{1});
  }
  friend TruncatedVector operator*(S s, const TruncatedVector& a) {
    std::vector<S> out(a.coeffs_.begin(), a.coeffs_.begin() + a.valid_len_);
    for (auto& v : out) v *= s;
    TruncatedVector r(std::move(out), a.tag_, a.tail_);
    return r;
  }

  /// alpha*a + beta*b on the common validity range.
  static TruncatedVector combine(const TruncatedVector& a, const TruncatedVector& b,
                                 S alpha, S beta) {
    require(a.tag_ == b.tag_, ErrorCode::SpaceMismatch, "vectors from different spaces");
    const bool zero = a.zero_tail() && b.zero_tail();
    std::size_t n;
    if (zero)
      n = std::max(a.size(), b.size());
    else if (a.zero_tail())
      n = b.valid_len_;
    else if (b.zero_tail())
      n = a.valid_len_;
    else
      n = std::min(a.valid_len_, b.valid_len_);
    std::vector<S> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = alpha * a.at(i) + beta * b.at(i);
    return TruncatedVector(std::move(out), a.tag_, zero ? Tail::Zero : Tail::Unknown);
  }

  friend bool operator==(const TruncatedVector&, const TruncatedVector&) = default;

 private:
  std::vector<S> coeffs_;
  std::size_t valid_len_ = 0;
  SpaceKind tag_ = SpaceKind::Omega;
  Tail tail_ = Tail::Unknown;
};

using Vector = TruncatedVector<Complex>;
using RealVector = TruncatedVector<double>;

/// e_j in a sequence space (1-based j), finitely supported.
template <Scalar S>
TruncatedVector<S> unit_vector(std::size_t j, SpaceKind tag = SpaceKind::Omega) {
  require(j >= 1, ErrorCode::InvalidParameter, "unit vector index starts at 1");
  std::vector<S> c(j, S{});
  c[j - 1] = S{1};
  return TruncatedVector<S>(std::move(c), tag, Tail::Zero);
}

/// Exact polynomial from its coefficients by degree.
template <Scalar S>
TruncatedVector<S> polynomial(std::vector<S> coeffs) {
  return TruncatedVector<S>(std::move(coeffs), SpaceKind::Entire, Tail::Zero);
}

}  // namespace lbo
