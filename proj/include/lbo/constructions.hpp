#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "lbo/densities.hpp"
#include "lbo/error.hpp"
#include "lbo/truncated_vector.hpp"

namespace lbo {

/// Default cap on materialized construction length.
inline constexpr std::size_t kDefaultMemoryBudget = std::size_t{1} << 24;

namespace detail {

inline std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r;
  require(!__builtin_mul_overflow(a, b, &r), ErrorCode::Overflow, "64-bit overflow");
  return r;
}

inline std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r;
  require(!__builtin_add_overflow(a, b, &r), ErrorCode::Overflow, "64-bit overflow");
  return r;
}

/// Total length of rows 1..M of one round: sum_{M'<=M} M'(M'+3)/2.
inline std::uint64_t rows_length(std::uint64_t M) {
  return checked_mul(checked_mul(M, M + 1), M + 5) / 6;
}

/// Offset of word i (prefix length i) inside its row: sum_{i'<i} (i'+1).
inline std::uint64_t word_offset(std::uint64_t i) { return (i - 1) * (i + 2) / 2; }

}  // namespace detail

/// Number of entries one extension pass appends to a prefix of length N:
/// (N^3 + 6N^2 + 5N)/6, cross-checked against sum_{i=1}^N (i+1)(N+1-i).
inline std::uint64_t phi_length(std::uint64_t N) {
  using detail::checked_add;
  using detail::checked_mul;
  require(N >= 1, ErrorCode::InvalidParameter, "phi_length needs N >= 1");
  const std::uint64_t cubic = checked_add(
      checked_add(checked_mul(checked_mul(N, N), N), checked_mul(6, checked_mul(N, N))),
      checked_mul(5, N));
  require(cubic % 6 == 0, ErrorCode::ConstructionFailed, "phi(N) numerator not divisible by 6");
  const std::uint64_t closed = cubic / 6;
  std::uint64_t sum = 0;
  for (std::uint64_t i = 1; i <= N; ++i) sum = checked_add(sum, checked_mul(i + 1, N + 1 - i));
  require(sum == closed, ErrorCode::ConstructionFailed, "phi(N) closed form disagrees with sum");
  return closed;
}

/// One appended word (y_1, ..., y_i, M) of an extension pass.
struct WordRecord {
  std::size_t round = 0;
  std::uint64_t M = 0;
  std::uint64_t i = 0;
  std::uint64_t start = 0;  // 1-based position of y_1's copy
};

/// The word-embedding sequence y after a number of extension passes, held
/// implicitly: lengths obey L_{t+1} = L_t + phi(L_t), and any entry is
/// decoded from its (round, M, i, offset) position. Everything up to
/// L_{rounds-1} is cached when it fits the budget, so decoding the last
/// round costs two binary searches.
class WordEmbedding {
 public:
  WordEmbedding(std::vector<double> seed, std::size_t rounds,
                std::size_t cache_budget = kDefaultMemoryBudget)
      : seed_(std::move(seed)), rounds_(rounds) {
    require(!seed_.empty(), ErrorCode::InvalidParameter, "seed word must be nonempty");
    for (double v : seed_)
      require(v > 0.0, ErrorCode::InvalidParameter, "seed entries must be positive");
    require(rounds_ >= 1, ErrorCode::InvalidParameter, "rounds must be >= 1");
    lengths_.push_back(seed_.size());
    for (std::size_t t = 1; t <= rounds_; ++t)
      lengths_.push_back(detail::checked_add(lengths_.back(), phi_length(lengths_.back())));
    const std::uint64_t cached = lengths_[rounds_ - 1];
    if (cached <= cache_budget) {
      cache_.reserve(cached);
      for (std::uint64_t j = 1; j <= cached; ++j) cache_.push_back(decode(j));
    }
  }

  std::size_t rounds() const noexcept { return rounds_; }
  const std::vector<double>& seed() const noexcept { return seed_; }
  std::uint64_t length() const noexcept { return lengths_.back(); }
  /// L_t for t = 0..rounds.
  const std::vector<std::uint64_t>& lengths() const noexcept { return lengths_; }
  /// Largest M written in round t: the prefix length it extended.
  std::uint64_t m_max(std::size_t round) const { return lengths_.at(round - 1); }

  /// y_j, 1-based.
  double value(std::uint64_t j) const {
    if (j >= 1 && j <= cache_.size()) return cache_[j - 1];
    return decode(j);
  }

  /// 1-based start of the word (y_1..y_i, M) appended in `round`.
  std::uint64_t word_start(std::size_t round, std::uint64_t M, std::uint64_t i) const {
    require(round >= 1 && round <= rounds_, ErrorCode::InvalidParameter, "round out of range");
    require(M >= 1 && M <= m_max(round) && i >= 1 && i <= M, ErrorCode::InvalidParameter,
            "no word (i, M) in this round");
    return lengths_[round - 1] + detail::rows_length(M - 1) + detail::word_offset(i) + 1;
  }

  /// Exact extremes over the whole sequence: every entry is a seed value or
  /// some M in [1, m_max(rounds)].
  std::pair<double, double> value_bounds() const {
    const auto [lo, hi] = std::minmax_element(seed_.begin(), seed_.end());
    return {std::min(*lo, 1.0), std::max(*hi, static_cast<double>(m_max(rounds_)))};
  }

 private:
  double decode(std::uint64_t j) const {
    require(j >= 1 && j <= length(), ErrorCode::IndexBeyondValidity,
            "index " + std::to_string(j) + " outside the constructed sequence");
    while (true) {
      if (j <= seed_.size()) return seed_[j - 1];
      std::size_t t = 1;
      while (lengths_[t] < j) ++t;
      const std::uint64_t P = lengths_[t - 1];
      const std::uint64_t q = j - P - 1;
      // Largest M in [1, P] with rows_length(M - 1) <= q.
      std::uint64_t lo = 1, hi = P;
      while (lo < hi) {
        const std::uint64_t mid = lo + (hi - lo + 1) / 2;
        if (detail::rows_length(mid - 1) <= q) lo = mid; else hi = mid - 1;
      }
      const std::uint64_t M = lo;
      const std::uint64_t q2 = q - detail::rows_length(M - 1);
      std::uint64_t ilo = 1, ihi = M;
      while (ilo < ihi) {
        const std::uint64_t mid = ilo + (ihi - ilo + 1) / 2;
        if (detail::word_offset(mid) <= q2) ilo = mid; else ihi = mid - 1;
      }
      const std::uint64_t r = q2 - detail::word_offset(ilo);
      if (r == ilo) return static_cast<double>(M);
      j = r + 1;
      if (j <= cache_.size()) return cache_[j - 1];
    }
  }

  std::vector<double> seed_;
  std::size_t rounds_;
  std::vector<std::uint64_t> lengths_;
  std::vector<double> cache_;
};

struct WordEmbeddingOutput {
  RealVector y;
  std::vector<WordRecord> log;
};

/// Materializes the extension passes by literal appending, rows M = 1..L and
/// within a row prefixes i = 1..M. Throws Overflow past `budget` entries.
inline WordEmbeddingOutput build_word_embedding_sequence(const std::vector<double>& seed,
                                                         std::size_t rounds,
                                                         std::size_t budget = kDefaultMemoryBudget) {
  require(!seed.empty(), ErrorCode::InvalidParameter, "seed word must be nonempty");
  for (double v : seed) require(v > 0.0, ErrorCode::InvalidParameter, "seed entries must be positive");
  require(rounds >= 1, ErrorCode::InvalidParameter, "rounds must be >= 1");
  std::uint64_t total = seed.size();
  for (std::size_t t = 1; t <= rounds; ++t) {
    total = detail::checked_add(total, phi_length(total));
    require(total <= budget, ErrorCode::Overflow,
            "round " + std::to_string(t) + " reaches length " + std::to_string(total) +
                ", over the budget of " + std::to_string(budget));
  }
  WordEmbeddingOutput out;
  std::vector<double> y(seed);
  y.reserve(total);
  for (std::size_t t = 1; t <= rounds; ++t) {
    const std::size_t L = y.size();
    for (std::size_t M = 1; M <= L; ++M)
      for (std::size_t i = 1; i <= M; ++i) {
        out.log.push_back({t, M, i, y.size() + 1});
        for (std::size_t r = 0; r < i; ++r) y.push_back(y[r]);
        y.push_back(static_cast<double>(M));
      }
    require(y.size() == L + phi_length(L), ErrorCode::ConstructionFailed,
            "round length disagrees with phi");
  }
  out.y = RealVector(std::move(y), SpaceKind::Omega);
  return out;
}

/// z = (-1, y_1, y_2, ...), so that B z = y.
inline RealVector build_z_from_y(const RealVector& y) {
  require(y.valid_len() >= 1, ErrorCode::InvalidParameter, "y must be nonempty");
  std::vector<double> z;
  z.reserve(y.valid_len() + 1);
  z.push_back(-1.0);
  for (double v : y.valid()) {
    require(v > 0.0, ErrorCode::InvalidParameter, "y entries must be positive");
    z.push_back(v);
  }
  return RealVector(std::move(z), y.tag(), y.tail());
}

/// Indexed view of z over an implicit y.
struct ShiftedByMinusOne {
  const WordEmbedding* y;
  double value(std::uint64_t j) const { return j == 1 ? -1.0 : y->value(j - 1); }
  std::uint64_t length() const { return y->length() + 1; }
};

struct StarWord {
  std::size_t m = 0;  // block starts after position m
  std::size_t l = 0;  // A_l containing m, also the word length
  bool ramp = false;  // (1, 2, ..., l) for even l, prefix copy for odd l
};

struct StarOutput {
  RealVector x;
  std::vector<StarWord> log;
};

/// x_1 = 1, zeros up to m_1, then at every m_s ∈ A_l the length-l word:
/// (x_1, ..., x_l) for odd l, (1, 2, ..., l) for even l; zeros elsewhere.
/// Positions past `horizon` are not materialized.
inline StarOutput build_star_recurrent(const StarFamily& star, std::size_t horizon) {
  const std::string bad = star_violation(star);
  require(bad.empty(), ErrorCode::InvalidParameter, "invalid star family: " + bad);
  require(horizon >= 1, ErrorCode::InvalidParameter, "horizon must be >= 1");
  require(horizon <= star.horizon, ErrorCode::StarFamilyExhausted,
          "star family listed only up to " + std::to_string(star.horizon));
  std::vector<double> x(horizon, 0.0);
  x[0] = 1.0;
  StarOutput out;
  const auto all = merged(star);
  for (std::size_t s = 0; s < all.size(); ++s) {
    const auto [m, l] = all[s];
    if (m >= horizon) break;
    require(m > l, ErrorCode::ConstructionFailed, "m_s <= l");
    if (s + 1 < all.size())
      require(all[s + 1].first - m >= l, ErrorCode::ConstructionFailed, "m_{s+1} - m_s < l");
    const bool ramp = l % 2 == 0;
    out.log.push_back({m, l, ramp});
    for (std::size_t j = 1; j <= l && m + j <= horizon; ++j)
      x[m + j - 1] = ramp ? static_cast<double>(j) : x[j - 1];
  }
  out.x = RealVector(std::move(x), SpaceKind::Omega);
  return out;
}

}  // namespace lbo
