#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lbo/error.hpp"
#include "lbo/io.hpp"
#include "lbo/operators.hpp"
#include "lbo/spaces.hpp"

namespace lbo {

// Plain-text experiment configuration.
//
//   # comment
//   [section]
//   key = value
//
// Lists are separated by spaces or commas. Complex scalars are written as
// `re`, `re:im`, or `rot:t` for exp(2 pi i t). configs/example.cfg documents
// every key.

struct VectorConfig {
  std::string source = "inline";        // inline | file | construction
  std::vector<Complex> values;          // inline
  std::size_t length = 0;               // inline: tile `values` to this length
  bool zero_tail = false;
  std::string file;                     // one value per line
  std::string construction;             // word_embedding | star
  std::string target = "y";             // word_embedding: y | z
  std::vector<double> seed{1, 1, 1, 1};
  std::size_t rounds = 2;
  std::size_t k_max = 9;
  std::size_t block_spacing = 9;
};

struct MeasureConfig {
  std::vector<std::size_t> basis_k0;    // empty: the k0 grid
  std::vector<double> basis_eps;        // empty: the eps grid
  std::vector<std::string> functionals{"cos:1:1:1", "tanh:1:1:1", "clip:1:1"};
  std::size_t n_max = 20;
};

struct TransferConfig {
  std::size_t k0 = 1;
  double eps = 0.5;
  std::vector<std::size_t> witness;     // explicit inner witness A
  std::size_t star_index = 0;           // or A = A_l of the star family
  std::size_t J = 16;
};

struct ExperimentConfig {
  SpaceSpec space = SpaceSpec::omega();
  std::string kothe_source;             // how the matrix was given, for round trips
  OperatorSpec op = OperatorSpec::backward_shift();
  VectorConfig vector;
  std::size_t horizon = 4096;
  std::vector<std::size_t> k0_grid{1, 2, 4, 8};
  std::vector<double> eps_grid{0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625, 0.0078125, 0.00390625};
  std::size_t J = 64;
  std::size_t K = 0;
  std::size_t n_min = 16;
  bool exhaustive = false;
  double frec_threshold = 0.01;
  double rrec_threshold = 0.01;
  std::size_t urec_max_gap = 64;
  std::string growth = "default";       // default | linear:c | const:c
  std::vector<std::string> tasks{"classify", "lbo", "densities"};
  MeasureConfig measure;
  TransferConfig transfer;
  std::string out_dir = "lbolab-out";
  std::vector<std::string> formats{"json", "csv"};
  std::size_t orbit_rows = 64;
  std::size_t orbit_cols = 4;
  std::uint64_t seed = 1;
  std::size_t memory_budget = kDefaultMemoryBudget;
  std::string base_dir = ".";           // relative file paths resolve here
};

inline const std::vector<std::string>& known_tasks() {
  static const std::vector<std::string> t{"classify", "lbo", "densities", "construct", "measure", "transfer"};
  return t;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace cfg {

inline std::string trim(std::string s) {
  const auto ws = [](unsigned char c) { return std::isspace(c); };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
  return s;
}

inline std::vector<std::string> tokens(const std::string& v) {
  std::string t = v;
  std::replace(t.begin(), t.end(), ',', ' ');
  std::istringstream ss(t);
  std::vector<std::string> out;
  std::string w;
  while (ss >> w) out.push_back(w);
  return out;
}

struct Where {
  std::size_t line;
  std::string field;
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorCode::ConfigError, "line " + std::to_string(line) + ": field '" + field + "': " + msg, line);
  }
};

inline double to_double(const std::string& s, const Where& w) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) w.fail("trailing characters in number '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    w.fail("expected a number, got '" + s + "'");
  }
}

inline std::size_t to_size(const std::string& s, const Where& w) {
  if (s.empty() || !std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); }))
    w.fail("expected a non-negative integer, got '" + s + "'");
  try {
    return static_cast<std::size_t>(std::stoull(s));
  } catch (const std::out_of_range&) {
    w.fail("integer out of range '" + s + "'");
  }
}

inline bool to_bool(const std::string& s, const Where& w) {
  if (s == "true" || s == "yes" || s == "1") return true;
  if (s == "false" || s == "no" || s == "0") return false;
  w.fail("expected true or false, got '" + s + "'");
}

inline Complex to_complex(const std::string& s, const Where& w) {
  if (s.rfind("rot:", 0) == 0) {
    const double t = to_double(s.substr(4), w);
    return std::polar(1.0, 2.0 * std::numbers::pi * t);
  }
  const auto colon = s.find(':');
  if (colon == std::string::npos) return {to_double(s, w), 0.0};
  return {to_double(s.substr(0, colon), w), to_double(s.substr(colon + 1), w)};
}

inline std::string complex_text(Complex c) {
  if (c.imag() == 0.0) return format_double(c.real());
  return format_double(c.real()) + ":" + format_double(c.imag());
}

template <class T, class F>
std::vector<T> list(const std::string& v, const Where& w, F conv) {
  std::vector<T> out;
  for (const auto& t : tokens(v)) out.push_back(conv(t, w));
  return out;
}

template <class T, class F>
std::string join(const std::vector<T>& v, F fmt) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt(v[i]);
  return s;
}

inline KotheMatrix kothe_from(const std::string& src, const std::string& base, const Where& w) {
  const auto colon = src.find(':');
  if (colon == std::string::npos) w.fail("expected power:K,J | omega:K,J | file:PATH");
  const std::string kind = src.substr(0, colon), rest = src.substr(colon + 1);
  if (kind == "file") {
    const std::string path = rest.empty() || rest[0] == '/' ? rest : base + "/" + rest;
    std::ifstream in(path);
    if (!in) w.fail("cannot open Köthe matrix file '" + path + "'");
    return KotheMatrix::from_csv(in);
  }
  const auto dims = tokens(rest);
  if (dims.size() != 2) w.fail("expected two dimensions K,J");
  const std::size_t K = to_size(dims[0], w), J = to_size(dims[1], w);
  try {
    if (kind == "power") return KotheMatrix::power_weights(K, J);
    if (kind == "omega") return KotheMatrix::omega_window(K, J);
  } catch (const Error& e) {
    w.fail(e.what());
  }
  w.fail("unknown Köthe matrix kind '" + kind + "'");
}

}  // namespace cfg

/// Parses a configuration. Errors carry ConfigError with the line number in
/// detail() and name the offending field.
inline ExperimentConfig parse_config(std::istream& in, const std::string& base_dir = ".") {
  using namespace cfg;
  ExperimentConfig c;
  c.base_dir = base_dir;
  std::string section, line;
  std::size_t line_no = 0;
  std::map<std::string, std::size_t> seen;
  std::optional<std::string> space_kind;
  double p = std::numeric_limits<double>::infinity();
  std::size_t samples = 1024;
  std::optional<std::string> op_kind;
  std::vector<double> weights;
  std::vector<Complex> lambdas, phi;
  Complex a{1.0};
  std::string description;
  Where space_where{0, "space.kind"}, op_where{0, "operator.kind"};

  while (std::getline(in, line)) {
    ++line_no;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') Where{line_no, "section"}.fail("unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      static const std::vector<std::string> ok{"space", "operator", "vector", "run", "measure", "transfer", "output"};
      if (std::find(ok.begin(), ok.end(), section) == ok.end())
        Where{line_no, section}.fail("unknown section");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) Where{line_no, section}.fail("expected key = value");
    const std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
    if (section.empty()) Where{line_no, key}.fail("key outside any section");
    const std::string field = section + "." + key;
    const Where w{line_no, field};
    if (seen.count(field)) w.fail("duplicate key (first on line " + std::to_string(seen[field]) + ")");
    seen[field] = line_no;

    if (section == "space") {
      if (key == "kind") { space_kind = val; space_where = w; }
      else if (key == "p") p = to_double(val, w);
      else if (key == "circle_samples") samples = to_size(val, w);
      else if (key == "matrix") c.kothe_source = val;
      else if (key == "description") description = val;
      else w.fail("unknown key");
    } else if (section == "operator") {
      if (key == "kind") { op_kind = val; op_where = w; }
      else if (key == "weights") weights = list<double>(val, w, to_double);
      else if (key == "lambdas") lambdas = list<Complex>(val, w, to_complex);
      else if (key == "a") a = to_complex(val, w);
      else if (key == "phi") phi = list<Complex>(val, w, to_complex);
      else w.fail("unknown key");
    } else if (section == "vector") {
      auto& v = c.vector;
      if (key == "source") v.source = val;
      else if (key == "values") v.values = list<Complex>(val, w, to_complex);
      else if (key == "length") v.length = to_size(val, w);
      else if (key == "zero_tail") v.zero_tail = to_bool(val, w);
      else if (key == "file") v.file = val;
      else if (key == "construction") v.construction = val;
      else if (key == "target") v.target = val;
      else if (key == "seed") v.seed = list<double>(val, w, to_double);
      else if (key == "rounds") v.rounds = to_size(val, w);
      else if (key == "k_max") v.k_max = to_size(val, w);
      else if (key == "block_spacing") v.block_spacing = to_size(val, w);
      else w.fail("unknown key");
      if (key == "source" && val != "inline" && val != "file" && val != "construction")
        w.fail("expected inline, file or construction");
      if (key == "construction" && val != "word_embedding" && val != "star")
        w.fail("expected word_embedding or star");
      if (key == "target" && val != "y" && val != "z") w.fail("expected y or z");
      if (key == "seed")
        for (double s : v.seed)
          if (!(s > 0.0)) w.fail("seed entries must be positive");
      if (key == "rounds" && v.rounds < 1) w.fail("must be >= 1");
      if (key == "k_max" && v.k_max < 1) w.fail("must be >= 1");
      if (key == "block_spacing" && v.block_spacing < 2) w.fail("must be >= 2");
    } else if (section == "run") {
      if (key == "horizon") {
        c.horizon = to_size(val, w);
        if (c.horizon < 1) w.fail("must be >= 1");
      } else if (key == "k0_grid") {
        c.k0_grid = list<std::size_t>(val, w, to_size);
        if (c.k0_grid.empty()) w.fail("grid must be nonempty");
        for (auto k : c.k0_grid) if (k < 1) w.fail("k0 must be >= 1");
      } else if (key == "eps_grid") {
        c.eps_grid = list<double>(val, w, to_double);
        if (c.eps_grid.empty()) w.fail("grid must be nonempty");
        for (double e : c.eps_grid) if (!(e > 0.0) || std::isinf(e)) w.fail("eps must be positive and finite");
      } else if (key == "J") c.J = to_size(val, w);
      else if (key == "K") c.K = to_size(val, w);
      else if (key == "n_min") {
        c.n_min = to_size(val, w);
        if (c.n_min < 1) w.fail("must be >= 1");
      } else if (key == "exhaustive") c.exhaustive = to_bool(val, w);
      else if (key == "frec_threshold" || key == "rrec_threshold") {
        const double t = to_double(val, w);
        if (!(t > 0.0 && t <= 1.0)) w.fail("threshold must lie in (0, 1]");
        (key == "frec_threshold" ? c.frec_threshold : c.rrec_threshold) = t;
      } else if (key == "urec_max_gap") c.urec_max_gap = to_size(val, w);
      else if (key == "growth") {
        c.growth = val;
        if (val != "default" && val.rfind("linear:", 0) != 0 && val.rfind("const:", 0) != 0)
          w.fail("expected default, linear:C or const:C");
        if (val != "default" && !(to_double(val.substr(val.find(':') + 1), w) > 0.0))
          w.fail("growth constant must be positive");
      } else if (key == "tasks") {
        c.tasks = tokens(val);
        for (const auto& t : c.tasks)
          if (std::find(known_tasks().begin(), known_tasks().end(), t) == known_tasks().end())
            w.fail("unknown task '" + t + "'");
      } else if (key == "seed") c.seed = to_size(val, w);
      else if (key == "memory_budget") c.memory_budget = to_size(val, w);
      else w.fail("unknown key");
    } else if (section == "measure") {
      if (key == "basis_k0") c.measure.basis_k0 = list<std::size_t>(val, w, to_size);
      else if (key == "basis_eps") {
        c.measure.basis_eps = list<double>(val, w, to_double);
        for (double e : c.measure.basis_eps) if (!(e > 0.0)) w.fail("eps must be positive");
      } else if (key == "functionals") c.measure.functionals = tokens(val);
      else if (key == "n_max") c.measure.n_max = to_size(val, w);
      else w.fail("unknown key");
    } else if (section == "transfer") {
      if (key == "k0") c.transfer.k0 = to_size(val, w);
      else if (key == "eps") {
        c.transfer.eps = to_double(val, w);
        if (!(c.transfer.eps > 0.0)) w.fail("eps must be positive");
      } else if (key == "witness") c.transfer.witness = list<std::size_t>(val, w, to_size);
      else if (key == "star_index") c.transfer.star_index = to_size(val, w);
      else if (key == "J") c.transfer.J = to_size(val, w);
      else w.fail("unknown key");
    } else if (section == "output") {
      if (key == "dir") c.out_dir = val;
      else if (key == "formats") {
        c.formats = tokens(val);
        for (const auto& f : c.formats) if (f != "json" && f != "csv") w.fail("expected json and/or csv");
      } else if (key == "orbit_rows") c.orbit_rows = to_size(val, w);
      else if (key == "orbit_cols") c.orbit_cols = to_size(val, w);
      else w.fail("unknown key");
    }
  }

  try {
    if (space_kind) {
      const std::string& k = *space_kind;
      if (k == "omega") c.space = SpaceSpec::omega();
      else if (k == "entire") c.space = SpaceSpec::entire(samples);
      else if (k == "kothe") {
        if (c.kothe_source.empty()) Where{space_where.line, "space.matrix"}.fail("kothe space needs a matrix");
        c.space = SpaceSpec::kothe(kothe_from(c.kothe_source, base_dir, Where{seen["space.matrix"], "space.matrix"}), p);
      } else space_where.fail("expected omega, kothe or entire");
    }
    if (op_kind) {
      const std::string& k = *op_kind;
      if (k == "backward_shift") c.op = OperatorSpec::backward_shift(weights);
      else if (k == "diagonal") c.op = OperatorSpec::diagonal(lambdas);
      else if (k == "birkhoff") c.op = OperatorSpec::birkhoff(a);
      else if (k == "maclane") c.op = OperatorSpec::maclane();
      else if (k == "diffop") c.op = OperatorSpec::diffop(phi);
      else op_where.fail("expected backward_shift, diagonal, birkhoff, maclane or diffop");
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    const Where& w = e.code() == ErrorCode::InvalidParameter && op_kind ? op_where : space_where;
    w.fail(e.what());
  }
  c.space.description = description.empty() ? std::string(to_string(c.space.kind)) : description;

  const auto& v = c.vector;
  if (v.source == "inline" && v.values.empty())
    Where{seen.count("vector.values") ? seen["vector.values"] : 0, "vector.values"}.fail("inline vector needs values");
  if (v.source == "file" && v.file.empty()) Where{0, "vector.file"}.fail("file source needs a path");
  if (v.source == "construction" && v.construction.empty())
    Where{0, "vector.construction"}.fail("construction source needs a recipe name");
  if (c.horizon > c.memory_budget) Where{seen["run.horizon"], "run.horizon"}.fail("horizon exceeds memory budget");
  if (v.source == "file") {
    const std::string path = v.file[0] == '/' ? v.file : base_dir + "/" + v.file;
    if (!std::ifstream(path)) Where{seen["vector.file"], "vector.file"}.fail("file '" + path + "' does not exist");
  }
  return c;
}

inline ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::ConfigError, "cannot open config '" + path + "'");
  const auto slash = path.find_last_of('/');
  return parse_config(in, slash == std::string::npos ? "." : path.substr(0, slash));
}

/// Canonical text form; parse_config(to_config_text(c)) reproduces c.
inline std::string to_config_text(const ExperimentConfig& c) {
  using cfg::complex_text;
  using cfg::join;
  const auto num = [](double d) { return format_double(d); };
  const auto sz = [](std::size_t s) { return std::to_string(s); };
  const auto str = [](const std::string& s) { return s; };
  std::ostringstream o;
  o << "[space]\nkind = " << to_string(c.space.kind) << '\n';
  if (c.space.kind == SpaceKind::Kothe) o << "matrix = " << c.kothe_source << "\np = " << num(c.space.p) << '\n';
  if (c.space.kind == SpaceKind::Entire) o << "circle_samples = " << c.space.circle_samples << '\n';
  o << "description = " << c.space.description << '\n';
  o << "\n[operator]\nkind = " << to_string(c.op.kind) << '\n';
  if (!c.op.weights.empty()) o << "weights = " << join(c.op.weights, num) << '\n';
  if (c.op.kind == OperatorKind::Diagonal) o << "lambdas = " << join(c.op.lambdas, complex_text) << '\n';
  if (c.op.kind == OperatorKind::Birkhoff) o << "a = " << complex_text(c.op.a) << '\n';
  if (c.op.kind == OperatorKind::DiffOp) o << "phi = " << join(c.op.phi, complex_text) << '\n';
  const auto& v = c.vector;
  o << "\n[vector]\nsource = " << v.source << '\n';
  if (v.source == "inline") {
    o << "values = " << join(v.values, complex_text) << '\n';
    if (v.length) o << "length = " << v.length << '\n';
  }
  if (v.source == "file") o << "file = " << v.file << '\n';
  if (v.source == "construction") {
    o << "construction = " << v.construction << '\n';
    if (v.construction == "word_embedding")
      o << "target = " << v.target << "\nseed = " << join(v.seed, num) << "\nrounds = " << v.rounds << '\n';
    else
      o << "k_max = " << v.k_max << "\nblock_spacing = " << v.block_spacing << '\n';
  }
  o << "zero_tail = " << (v.zero_tail ? "true" : "false") << '\n';
  o << "\n[run]\nhorizon = " << c.horizon << "\nk0_grid = " << join(c.k0_grid, sz)
    << "\neps_grid = " << join(c.eps_grid, num) << "\nJ = " << c.J << "\nK = " << c.K
    << "\nn_min = " << c.n_min << "\nexhaustive = " << (c.exhaustive ? "true" : "false")
    << "\nfrec_threshold = " << num(c.frec_threshold) << "\nrrec_threshold = " << num(c.rrec_threshold)
    << "\nurec_max_gap = " << c.urec_max_gap << "\ngrowth = " << c.growth
    << "\ntasks = " << join(c.tasks, str) << "\nseed = " << c.seed
    << "\nmemory_budget = " << c.memory_budget << '\n';
  o << "\n[measure]\n";
  if (!c.measure.basis_k0.empty()) o << "basis_k0 = " << join(c.measure.basis_k0, sz) << '\n';
  if (!c.measure.basis_eps.empty()) o << "basis_eps = " << join(c.measure.basis_eps, num) << '\n';
  o << "functionals = " << join(c.measure.functionals, str) << "\nn_max = " << c.measure.n_max << '\n';
  o << "\n[transfer]\nk0 = " << c.transfer.k0 << "\neps = " << num(c.transfer.eps) << '\n';
  if (!c.transfer.witness.empty()) o << "witness = " << join(c.transfer.witness, sz) << '\n';
  o << "star_index = " << c.transfer.star_index << "\nJ = " << c.transfer.J << '\n';
  o << "\n[output]\ndir = " << c.out_dir << "\nformats = " << join(c.formats, str)
    << "\norbit_rows = " << c.orbit_rows << "\norbit_cols = " << c.orbit_cols << '\n';
  return o.str();
}

inline std::string config_hash(const ExperimentConfig& c) {
  std::ostringstream ss;
  ss << std::hex;
  ss.width(16);
  ss.fill('0');
  ss << fnv1a64(to_config_text(c));
  return "fnv1a64:" + ss.str();
}

}  // namespace lbo
