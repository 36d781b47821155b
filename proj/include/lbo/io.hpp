#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lbo/constructions.hpp"
#include "lbo/densities.hpp"
#include "lbo/error.hpp"
#include "lbo/measures.hpp"
#include "lbo/operators.hpp"
#include "lbo/recurrence.hpp"
#include "lbo/spaces.hpp"

namespace lbo {

using Json = nlohmann::ordered_json;

// Return sets as text: an optional "# horizon H" line, then one element per
// line. Without the header the horizon is the largest element.

inline void write_return_set_text(std::ostream& os, const ReturnSet& R) {
  os << "# horizon " << R.horizon << '\n';
  for (std::size_t n : R.elems) os << n << '\n';
}

inline ReturnSet read_return_set_text(std::istream& is) {
  std::vector<std::size_t> e;
  std::optional<std::size_t> horizon;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ss(line.substr(1));
      std::string key;
      std::size_t h;
      if (ss >> key >> h && key == "horizon") horizon = h;
      continue;
    }
    std::istringstream ss(line);
    long long v;
    require(static_cast<bool>(ss >> v) && v >= 1, ErrorCode::InvalidParameter,
            "line " + std::to_string(line_no) + ": expected a positive integer");
    e.push_back(static_cast<std::size_t>(v));
  }
  const std::size_t h = horizon ? *horizon : (e.empty() ? 0 : e.back());
  return {std::move(e), h};
}

// Bitset binary: ceil(H / 64) little-endian 64-bit words, bit n-1 set iff n
// is a member. The horizon is not stored.

inline void write_return_set_bits(std::ostream& os, const ReturnSet& R) {
  std::vector<std::uint64_t> words((R.horizon + 63) / 64, 0);
  for (std::size_t n : R.elems) words[(n - 1) / 64] |= std::uint64_t{1} << ((n - 1) % 64);
  for (std::uint64_t w : words) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(w >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
  }
}

inline ReturnSet read_return_set_bits(std::istream& is, std::size_t horizon) {
  std::vector<std::size_t> e;
  const std::size_t words = (horizon + 63) / 64;
  for (std::size_t k = 0; k < words; ++k) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    require(is.gcount() == 8, ErrorCode::InvalidParameter, "bitset file shorter than horizon");
    std::uint64_t w = 0;
    for (int i = 0; i < 8; ++i) w |= std::uint64_t{b[i]} << (8 * i);
    while (w) {
      const std::size_t n = k * 64 + static_cast<std::size_t>(std::countr_zero(w)) + 1;
      require(n <= horizon, ErrorCode::InvalidParameter, "bit set beyond horizon");
      e.push_back(n);
      w &= w - 1;
    }
  }
  return {std::move(e), horizon};
}

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return Json(v).dump();
}

inline void write_curve_csv(std::ostream& os, const Curve& c, const std::string& name = "value") {
  os << "N," << name << '\n';
  for (std::size_t i = 0; i < c.n.size(); ++i) os << c.n[i] << ',' << format_double(c.value[i]) << '\n';
}

/// Row n: real and imaginary parts of the first J coordinates of T^n x.
template <Scalar S>
void write_orbit_csv(std::ostream& os, OrbitView<S>& view, std::size_t rows, std::size_t J) {
  os << "n";
  for (std::size_t j = 1; j <= J; ++j) os << ",re_" << j << ",im_" << j;
  os << '\n';
  for (std::size_t n = 0; n <= rows; ++n) {
    TruncatedVector<S> p;
    try {
      p = view.prefix(n, J);
    } catch (const Error& e) {
      if (!detail::is_exhaustion(e)) throw;
      break;
    }
    os << n;
    for (std::size_t j = 0; j < J; ++j) {
      const Complex c(p.at(j));
      os << ',' << format_double(c.real()) << ',' << format_double(c.imag());
    }
    os << '\n';
  }
}

/// Non-finite doubles become strings, since JSON has no infinity.
inline Json json_number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

inline Json to_json(Complex c) {
  if (c.imag() == 0.0) return json_number(c.real());
  return Json::array({json_number(c.real()), json_number(c.imag())});
}

inline Json to_json(const std::vector<Complex>& v) {
  Json a = Json::array();
  for (Complex c : v) a.push_back(to_json(c));
  return a;
}

inline Json to_json(const SpaceSpec& s) {
  Json j;
  j["kind"] = std::string(to_string(s.kind));
  if (s.kind == SpaceKind::Kothe) {
    j["p"] = json_number(s.p);
    j["k_max"] = s.matrix->k_max();
    j["j_max"] = s.matrix->j_max();
  }
  if (s.kind == SpaceKind::Entire) j["circle_samples"] = s.circle_samples;
  j["description"] = s.description;
  return j;
}

inline Json to_json(const OperatorSpec& op) {
  Json j;
  j["kind"] = std::string(to_string(op.kind));
  switch (op.kind) {
    case OperatorKind::BackwardShift:
      if (!op.weights.empty()) j["weights"] = op.weights;
      break;
    case OperatorKind::Diagonal: j["lambdas"] = to_json(op.lambdas); break;
    case OperatorKind::Birkhoff: j["a"] = to_json(op.a); break;
    case OperatorKind::DiffOp: j["phi"] = to_json(op.phi); break;
    case OperatorKind::MacLane: break;
  }
  j["invertible"] = op.invertible();
  return j;
}

inline Json to_json(const ReturnSet& R) {
  return Json{{"horizon", R.horizon}, {"elems", R.elems}};
}

inline Json to_json(const LboCertificate& c) {
  Json w = Json::array();
  for (double v : c.w) w.push_back(json_number(v));
  return Json{{"k0", c.k0},         {"eps", c.eps},         {"w", w},
              {"horizon_checked", c.horizon_checked}, {"returns", c.returns},
              {"vacuous", c.vacuous}};
}

inline Json to_json(const RecurrenceReport& r, bool with_sets = true) {
  Json j;
  j["confidence"] = RecurrenceReport::confidence;
  j["thresholds"] = {{"frec_lower_density", r.options.frec_threshold},
                     {"rrec_banach_density", r.options.rrec_threshold},
                     {"urec_max_gap", r.options.urec_max_gap},
                     {"n_min", r.options.density.n_min},
                     {"exhaustive_windows", r.options.density.exhaustive}};
  Json cells = Json::array();
  for (const CellResult& c : r.cells) {
    Json cj{{"k0", c.cell.k0},
            {"eps", c.cell.eps},
            {"horizon", c.returns.horizon},
            {"exhausted", c.exhausted},
            {"returns", c.returns.size()},
            {"lower_density", c.lower_density},
            {"banach_density", c.banach_density},
            {"window", {c.window_start, c.window_len}},
            {"max_gap", c.max_gap}};
    if (with_sets) cj["return_set"] = c.returns.elems;
    cells.push_back(std::move(cj));
  }
  j["cells"] = std::move(cells);
  const auto verdict = [](const Verdict& v) {
    return Json{{"value", v.value}, {"pivotal_cell", v.pivotal_cell}};
  };
  j["verdicts"] = {{"recurrent", verdict(r.recurrent)},
                   {"reiteratively_recurrent", verdict(r.reiteratively_recurrent)},
                   {"frequently_recurrent", verdict(r.frequently_recurrent)},
                   {"uniformly_recurrent", verdict(r.uniformly_recurrent)}};
  j["certificate"] = r.lbo ? to_json(*r.lbo) : Json(nullptr);
  return j;
}

inline Json to_json(const LboSearchResult& r) {
  Json table = Json::array();
  for (const LboCellSup& row : r.table) {
    double sup = 0.0;
    for (double v : row.sup.witness_w) sup = std::max(sup, v);
    table.push_back({{"k0", row.cell.k0},
                     {"eps", row.cell.eps},
                     {"returns", row.returns},
                     {"horizon", row.horizon},
                     {"max_coordinate_sup", sup},
                     {"per_seminorm_sup", row.sup.per_seminorm_sup},
                     {"accepted", row.accepted}});
  }
  return Json{{"certificate", r.certificate ? to_json(*r.certificate) : Json(nullptr)},
              {"table", std::move(table)}};
}

inline std::string to_string(const Rational& r) {
  std::ostringstream ss;
  ss << r;
  return ss.str();
}

inline Json to_json(const EmpiricalMeasure& mu) {
  return Json{{"orbit", mu.orbit_ref},
              {"window", {mu.start, mu.last()}},
              {"atoms", {{"first", mu.start}, {"count", mu.length}}},
              {"weight_denominator", mu.length}};
}

inline Json to_json(const MeasureMixture& m) {
  Json comps = Json::array();
  for (const auto& c : m.components)
    comps.push_back({{"weight", to_string(c.weight)}, {"measure", to_json(c.mu)}});
  return Json{{"components", std::move(comps)},
              {"tail_mass", to_string(m.tail_mass)},
              {"total", to_string(m.total())}};
}

template <Scalar S>
Json to_json(const InvariantCandidate<S>& c) {
  Json comps = Json::array();
  for (const ComponentReport& r : c.components)
    comps.push_back({{"index", r.index},
                     {"k0", r.k0},
                     {"eps", r.eps},
                     {"horizon", r.horizon},
                     {"bd_est", r.bd_est},
                     {"witness_density", to_string(r.witness_density)},
                     {"ball_mass", to_string(r.ball_mass)},
                     {"mass_ok", r.mass_ok}});
  Json defects = Json::array();
  for (const DefectRow& d : c.defects)
    defects.push_back({{"functional", d.functional},
                       {"defect", d.defect},
                       {"bound", d.bound},
                       {"bound_min_window", d.bound_min_window},
                       {"ok", d.ok}});
  return Json{{"substitution", "Banach limit replaced by the Banach-density witness window; "
                               "defect of a window of length N is at most 2 sup|f| / N"},
              {"mixture", to_json(c.mixture)},
              {"components", std::move(comps)},
              {"defects", std::move(defects)},
              {"support_local", c.support_local}};
}

inline Json to_json(const StarFamily& s) {
  Json sets = Json::array();
  for (const auto& a : s.sets) sets.push_back(a);
  return Json{{"horizon", s.horizon}, {"sets", std::move(sets)}};
}

inline Json provenance_json(const StarOutput& o) {
  Json words = Json::array();
  for (const StarWord& w : o.log) words.push_back({w.m, w.l, w.ramp ? "ramp" : "copy"});
  return Json{{"columns", {"m", "l", "word"}}, {"words", std::move(words)}};
}

inline Json provenance_json(const std::vector<WordRecord>& log) {
  Json words = Json::array();
  for (const WordRecord& w : log) words.push_back({w.round, w.M, w.i, w.start});
  return Json{{"columns", {"round", "M", "i", "start"}}, {"words", std::move(words)}};
}

template <Scalar S>
Json to_json(const Transfer<S>& t) {
  std::vector<std::size_t> sub;
  for (std::size_t s : t.subsequence) sub.push_back(t.translations[s]);
  Json xu = Json::array();
  for (S v : t.x_u.valid()) xu.push_back(to_json(Complex(v)));
  return Json{{"translations", t.translations},
              {"subsequence_translations", sub},
              {"stabilized_depth", t.depth},
              {"x_u", std::move(xu)},
              {"transferred", to_json(t.transferred)},
              {"expected", to_json(t.expected)},
              {"complete", t.complete()}};
}

}  // namespace lbo
