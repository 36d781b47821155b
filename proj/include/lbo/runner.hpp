#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "lbo/config.hpp"
#include "lbo/constructions.hpp"
#include "lbo/densities.hpp"
#include "lbo/io.hpp"
#include "lbo/measures.hpp"
#include "lbo/recurrence.hpp"

namespace lbo {

inline constexpr const char* kReportSchema = "lbolab.report/1";

/// Everything one run produces. `report` is canonical (byte-stable for a
/// given config); `meta` carries timing.
struct RunResult {
  int exit_code = 0;
  Json report;
  Json meta;
  std::string summary;
  std::map<std::string, std::string> files;  // relative path -> contents, besides the three above
};

namespace run_detail {

struct Prepared {
  Vector x;
  Json description;
  std::optional<WordEmbeddingOutput> word;
  std::optional<StarFamily> star;
  std::optional<StarOutput> star_x;
};

struct TaskOut {
  Json result;
  std::vector<std::string> summary;
  std::map<std::string, std::string> files;
};

inline Vector to_complex(const RealVector& v) {
  std::vector<Complex> c(v.coeffs().begin(), v.coeffs().end());
  if (v.zero_tail()) return Vector(std::move(c), v.tag(), Tail::Zero);
  return Vector(std::move(c), v.valid_len(), v.tag());
}

inline std::size_t max_k0(const ExperimentConfig& c) {
  std::size_t k = *std::max_element(c.k0_grid.begin(), c.k0_grid.end());
  for (std::size_t b : c.measure.basis_k0) k = std::max(k, b);
  return std::max(k, c.transfer.k0);
}

inline Prepared prepare(const ExperimentConfig& c) {
  Prepared p;
  const auto& v = c.vector;
  const Tail tail = v.zero_tail ? Tail::Zero : Tail::Unknown;
  if (v.source == "inline") {
    std::vector<Complex> vals;
    const std::size_t n = v.length ? v.length : v.values.size();
    for (std::size_t i = 0; i < n; ++i) vals.push_back(v.values[i % v.values.size()]);
    p.x = Vector(std::move(vals), c.space.kind, tail);
    p.description = {{"source", "inline"}, {"length", n}, {"pattern", to_json(v.values)}};
  } else if (v.source == "file") {
    const std::string path = v.file[0] == '/' ? v.file : c.base_dir + "/" + v.file;
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::ConfigError, "cannot open vector file '" + path + "'");
    std::vector<Complex> vals;
    std::string tok;
    while (in >> tok) vals.push_back(cfg::to_complex(tok, cfg::Where{0, "vector.file"}));
    p.x = Vector(std::move(vals), c.space.kind, tail);
    p.description = {{"source", "file"}, {"file", v.file}, {"length", p.x.size()}};
  } else if (v.construction == "word_embedding") {
    require(c.space.kind == SpaceKind::Omega, ErrorCode::SpaceMismatch, "word embedding lives in ω");
    p.word = build_word_embedding_sequence(v.seed, v.rounds, c.memory_budget);
    const RealVector& y = p.word->y;
    p.x = to_complex(v.target == "z" ? build_z_from_y(y) : y);
    p.description = {{"source", "construction"}, {"construction", "word_embedding"},
                     {"target", v.target}, {"rounds", v.rounds}, {"length", p.x.size()}};
  } else {
    require(c.space.kind == SpaceKind::Omega, ErrorCode::SpaceMismatch, "(*)-construction lives in ω");
    // Enough coordinates past the horizon for every seminorm and certificate read.
    const std::size_t len = c.horizon + std::max({c.J, max_k0(c), c.transfer.J}) + 2;
    p.star = gen_star_family(v.k_max, v.block_spacing, len);
    p.star_x = build_star_recurrent(*p.star, len);
    p.x = to_complex(p.star_x->x);
    p.description = {{"source", "construction"}, {"construction", "star"}, {"k_max", v.k_max},
                     {"block_spacing", v.block_spacing}, {"length", len}};
  }
  return p;
}

inline GrowthBound growth_of(const ExperimentConfig& c, const Vector& x) {
  if (c.growth == "default") return default_growth(x, c.J);
  const double k = std::stod(c.growth.substr(c.growth.find(':') + 1));
  if (c.growth.rfind("linear:", 0) == 0) return [k](std::size_t j) { return k * static_cast<double>(j); };
  return [k](std::size_t) { return k; };
}

inline ClassifyOptions classify_options(const ExperimentConfig& c) {
  ClassifyOptions o;
  o.frec_threshold = c.frec_threshold;
  o.rrec_threshold = c.rrec_threshold;
  o.urec_max_gap = c.urec_max_gap;
  o.density.n_min = c.n_min;
  o.density.exhaustive = c.exhaustive;
  return o;
}

inline std::string yes(bool b) { return b ? "yes" : "no"; }

inline TaskOut task_classify(const ExperimentConfig& c, const Prepared& p) {
  const RecurrenceReport rep =
      classify(c.space, c.op, p.x, c.horizon, make_grid(c.k0_grid, c.eps_grid), classify_options(c));
  TaskOut t;
  t.result = to_json(rep);
  const auto& piv = rep.cells[rep.uniformly_recurrent.pivotal_cell];
  std::ostringstream s;
  s << "classify: recurrent=" << yes(rep.recurrent.value)
    << " reiterative=" << yes(rep.reiteratively_recurrent.value)
    << " frequent=" << yes(rep.frequently_recurrent.value)
    << " uniform=" << yes(rep.uniformly_recurrent.value) << " (largest gap " << piv.max_gap
    << " at k0=" << piv.cell.k0 << " eps=" << format_double(piv.cell.eps) << ")";
  t.summary.push_back(s.str());
  return t;
}

inline TaskOut task_lbo(const ExperimentConfig& c, const Prepared& p) {
  TaskOut t;
  LboSearchOptions o;
  o.J = c.J;
  o.K = c.K;
  o.growth = growth_of(c, p.x);
  const LboSearchResult r = lbo_search(c.space, c.op, p.x, c.horizon, c.k0_grid, c.eps_grid, o);
  t.result = to_json(r);
  t.result["growth"] = c.growth;
  if (r.certificate) {
    const std::size_t bad = certificate_violations(c.space, c.op, p.x, *r.certificate);
    t.result["reverification_violations"] = bad;
    t.summary.push_back("lbo: certificate at k0=" + std::to_string(r.certificate->k0) +
                        " eps=" + format_double(r.certificate->eps) + " over " +
                        std::to_string(r.certificate->horizon_checked) + " steps" +
                        (r.certificate->vacuous ? " (vacuous)" : "") +
                        ", re-verification violations " + std::to_string(bad));
  } else {
    t.summary.push_back("lbo: no certificate under growth '" + c.growth + "' up to horizon " +
                        std::to_string(c.horizon));
  }

  const bool shift = c.op.kind == OperatorKind::BackwardShift && c.op.weights.empty();
  if (p.word && shift) {
    // The pair z ∈ ℓbo(B), Bz = y ∉ ℓbo(B), on the materialized rounds.
    const auto& v = c.vector;
    const WordEmbedding lens(v.seed, v.rounds, 0);
    const double m_max = static_cast<double>(lens.m_max(v.rounds));
    const RealVector& y = p.word->y;
    const Vector yv = to_complex(y), zv = to_complex(build_z_from_y(y));
    const std::size_t Jp = std::min<std::size_t>(c.J, y.size() / 2);
    const std::size_t Hz = zv.size() - Jp;
    LboSearchOptions oz;
    oz.J = Jp;
    const LboSearchResult zr = lbo_search(c.space, c.op, zv, Hz, {1}, {0.5}, oz);
    Json pair;
    pair["z"] = to_json(zr);
    const GrowthBound below_m = [m_max](std::size_t) { return m_max - 0.5; };
    Json ys = Json::array();
    bool all = true;
    for (double eps : c.eps_grid) {
      if (eps >= 1.0) continue;
      const auto w = lbo_falsify(c.space, c.op, yv, y.size() - Jp, 1, eps, below_m, Jp);
      double top = 0.0;
      for (const auto& f : w) top = std::max(top, f.magnitude);
      all = all && !w.empty() && top >= m_max;
      ys.push_back({{"eps", eps}, {"witnesses", w.size()}, {"max_magnitude", top},
                    {"first", w.empty() ? Json(nullptr) : Json{w[0].n, w[0].j, w[0].magnitude}}});
    }
    pair["y"] = {{"k0", 1}, {"growth_bound", m_max - 0.5}, {"m_max", m_max}, {"per_eps", ys}};
    t.result["word_embedding_pair"] = pair;
    t.summary.push_back(std::string("lbo: z ") +
                        (zr.certificate && zr.certificate->vacuous ? "certified (empty return set)" : "NOT certified") +
                        " at k0=1 eps=0.5; y " + (all ? "falsified" : "NOT falsified") +
                        " for every eps < 1 with magnitude >= M_max=" + format_double(m_max));
  }
  return t;
}

inline TaskOut task_densities(const ExperimentConfig& c, const Prepared& p) {
  TaskOut t;
  DensityOptions d{c.n_min, c.exhaustive};
  Json cells = Json::array();
  std::size_t idx = 0;
  bool all_equal = true;
  for (const GridCell& cell : make_grid(c.k0_grid, c.eps_grid)) {
    ++idx;
    const NeighborhoodSpec<Complex> nb(p.x, cell.k0, cell.eps);
    const ReturnSet R = return_set(c.space, c.op, p.x, nb, c.horizon).set;
    Json cj{{"k0", cell.k0}, {"eps", cell.eps}, {"horizon", R.horizon}, {"returns", R.size()}};
    if (R.horizon < c.n_min) {
      cj["skipped"] = "horizon below n_min";
      cells.push_back(cj);
      continue;
    }
    const LowerDensity ld = lower_density_curve(R);
    const BanachDensity bd = banach_density_curve(R, d);
    const std::vector<double> ind = indicator(R);
    const SuchestonResult sm = sucheston_M(ind, {d, 1e6});
    const bool equal = sm.curve.value == bd.curve.value;
    all_equal = all_equal && equal;
    cj["lower_density"] = {{"estimate", ld.estimate}, {"argmin_n", ld.argmin_n}};
    cj["banach_density"] = {{"estimate", bd.estimate}, {"n", bd.curve.n}, {"w_n", bd.curve.value},
                            {"sanity_ok", bd.sanity_ok}};
    cj["sucheston"] = {{"estimate", sm.estimate}, {"equals_banach_curve", equal}};
    const auto fam = [&](const FamilySpec& f) {
      const Membership m = family_member(R, f, d);
      return Json{{"verdict", m.verdict}, {"evidence", m.evidence.kind},
                  {"values", m.evidence.values}, {"value", m.evidence.value}};
    };
    cj["families"] = {{"lower_density_positive", fam(FamilySpec::lower_density(c.frec_threshold))},
                      {"upper_banach_positive", fam(FamilySpec::upper_banach(c.rrec_threshold))},
                      {"syndetic", fam(FamilySpec::syndetic(std::max<std::size_t>(c.urec_max_gap, 1)))}};
    cells.push_back(std::move(cj));
    const std::string stem = "curves/cell" + std::to_string(idx);
    std::ostringstream lo, ba, su;
    write_curve_csv(lo, ld.curve, "d_N");
    write_curve_csv(ba, bd.curve, "W_N");
    write_curve_csv(su, sm.curve, "S_N");
    t.files[stem + "_lower.csv"] = lo.str();
    t.files[stem + "_banach.csv"] = ba.str();
    t.files[stem + "_sucheston.csv"] = su.str();
  }
  t.result = {{"cells", std::move(cells)}, {"sucheston_equals_banach", all_equal}};
  t.summary.push_back("densities: " + std::to_string(idx) + " cells, Sucheston curve equals Banach curve: " +
                      yes(all_equal));
  return t;
}

inline TaskOut task_construct(const ExperimentConfig& c, const Prepared& p) {
  TaskOut t;
  require(p.word || p.star, ErrorCode::InvalidParameter, "construct needs vector.source = construction");
  if (p.word) {
    const auto& v = c.vector;
    const WordEmbedding lens(v.seed, v.rounds, 0);
    bool identity = true;
    for (std::size_t r = 1; r < lens.lengths().size(); ++r)
      identity = identity && lens.lengths()[r] == lens.lengths()[r - 1] + phi_length(lens.lengths()[r - 1]);
    // The random-access decoder and the literal builder must agree.
    const WordEmbedding dec(v.seed, v.rounds, 0);
    bool agree = true;
    for (std::size_t j = 1; j <= p.word->y.size() && agree; ++j) agree = dec.value(j) == p.word->y[j - 1];
    t.result = {{"construction", "word_embedding"},
                {"seed", v.seed},
                {"lengths", lens.lengths()},
                {"length_identity", identity},
                {"decoder_agrees", agree},
                {"m_max", lens.m_max(v.rounds)},
                {"words", p.word->log.size()},
                {"provenance_file", "provenance.json"}};
    t.files["provenance.json"] = provenance_json(p.word->log).dump(1) + "\n";
    t.summary.push_back("construct: word embedding, lengths " + Json(lens.lengths()).dump() +
                        ", L_{t+1} = L_t + phi(L_t): " + yes(identity) + ", decoder agrees: " + yes(agree));
  } else {
    const StarFamily& s = *p.star;
    const RealVector& x = p.star_x->x;
    bool exact = true;
    std::size_t checked = 0;
    for (std::size_t l = 1; l <= s.k_max(); l += 2)
      for (std::size_t n : s.sets[l - 1]) {
        if (n + l > x.size()) continue;
        ++checked;
        for (std::size_t j = 1; j <= l; ++j) exact = exact && x[n + j - 1] == x[j - 1];
      }
    double sup = 0.0;
    for (double e : x.valid()) sup = std::max(sup, std::abs(e));
    t.result = {{"construction", "star"},
                {"star_invariants_ok", star_violation(s).empty()},
                {"odd_returns_checked", checked},
                {"odd_returns_exact", exact},
                {"sup", sup},
                {"words", p.star_x->log.size()},
                {"provenance_file", "provenance.json"}};
    Json prov = provenance_json(*p.star_x);
    prov["family"] = to_json(s);
    t.files["provenance.json"] = prov.dump(1) + "\n";
    t.summary.push_back("construct: (*)-family k_max=" + std::to_string(s.k_max()) + ", " +
                        std::to_string(checked) + " odd-l returns exact: " + yes(exact) +
                        ", sup |x_j| = " + format_double(sup));
  }
  return t;
}

inline std::vector<TestFunctional<Complex>> battery(const ExperimentConfig& c) {
  std::vector<TestFunctional<Complex>> out;
  const cfg::Where w{0, "measure.functionals"};
  for (const std::string& fdesc : c.measure.functionals) {
    std::vector<std::string> parts;
    std::stringstream ss(fdesc);
    std::string part;
    while (std::getline(ss, part, ':')) parts.push_back(part);
    const auto num = [&](std::size_t i) { return cfg::to_double(parts.at(i), w); };
    const auto idx = [&](std::size_t i) { return cfg::to_size(parts.at(i), w); };
    if (parts[0] == "cos" && parts.size() == 4) out.push_back(cosine_functional<Complex>({idx(1)}, {num(2)}, num(3)));
    else if (parts[0] == "tanh" && parts.size() == 4) out.push_back(tanh_functional<Complex>(idx(1), num(2), num(3)));
    else if (parts[0] == "clip" && parts.size() == 3) out.push_back(clip_functional<Complex>(idx(1), num(2)));
    else w.fail("bad functional '" + fdesc + "' (cos:d:freq:amp, tanh:d:rate:amp, clip:d:c)");
    out.back().name = fdesc;
    require(out.back().depends_on.front() >= 1, ErrorCode::ConfigError, "functional coordinates start at 1");
  }
  return out;
}

inline TaskOut task_measure(const ExperimentConfig& c, const Prepared& p) {
  TaskOut t;
  const auto& ks = c.measure.basis_k0.empty() ? c.k0_grid : c.measure.basis_k0;
  const auto& es = c.measure.basis_eps.empty() ? c.eps_grid : c.measure.basis_eps;
  std::vector<NeighborhoodSpec<Complex>> basis;
  for (const GridCell& g : make_grid(ks, es)) basis.emplace_back(p.x, g.k0, g.eps);
  const auto bat = battery(c);
  Json checks = Json::array();
  for (std::size_t i = 0; i < bat.size(); ++i) {
    const FunctionalCheck fc = validate_functional(bat[i], c.seed + i);
    checks.push_back({{"functional", bat[i].name}, {"sup_ok", fc.sup_ok}, {"lipschitz_ok", fc.lipschitz_ok}});
  }
  InvariantOptions o;
  o.threshold = c.rrec_threshold;
  o.n_max = c.measure.n_max;
  o.density = {c.n_min, c.exhaustive};
  const InvariantCandidate<Complex> ic = build_invariant_candidate(c.space, c.op, p.x, basis, c.horizon, bat, o);
  t.result = to_json(ic);
  t.result["functional_probes"] = checks;
  bool masses = true, defects = true;
  for (const auto& r : ic.components) masses = masses && r.mass_ok;
  for (const auto& d : ic.defects) defects = defects && d.ok;
  t.summary.push_back("measure: " + std::to_string(ic.components.size()) +
                      " components, ball masses >= witness densities: " + yes(masses) +
                      ", defects within 2 sup/N: " + yes(defects) + ", tail mass " +
                      to_string(ic.mixture.tail_mass));
  return t;
}

inline TaskOut task_transfer(const ExperimentConfig& c, const Prepared& p) {
  TaskOut t;
  std::vector<std::size_t> a = c.transfer.witness;
  if (a.empty() && c.transfer.star_index) {
    require(p.star.has_value(), ErrorCode::InvalidParameter, "transfer.star_index needs the star construction");
    require(c.transfer.star_index <= p.star->k_max(), ErrorCode::InvalidParameter, "star_index exceeds k_max");
    for (std::size_t n : p.star->sets[c.transfer.star_index - 1])
      if (n <= c.horizon) a.push_back(n);
  }
  if (a.empty())
    for (std::size_t n = 1; n <= std::min<std::size_t>(16, c.horizon); ++n) a.push_back(n);
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  const ReturnSet A(a, std::max(a.back(), c.horizon));
  const NeighborhoodSpec<Complex> U(p.x, c.transfer.k0, c.transfer.eps);
  const Transfer<Complex> tr =
      transfer_block_recurrence(c.space, c.op, p.x, U, A, c.horizon, {c.transfer.J, 1e-9});
  t.result = to_json(tr);
  t.summary.push_back("transfer: " + std::to_string(tr.transferred.size()) + " of " +
                      std::to_string(tr.expected.size()) + " translates of A - r0 return to U, " +
                      std::to_string(tr.depth) + " coordinates stabilized");
  return t;
}

}  // namespace run_detail

/// Runs every requested task in parallel and assembles the report in the
/// fixed task order. A failing task is reported without stopping the others.
inline RunResult run_experiment(const ExperimentConfig& c) {
  using namespace run_detail;
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  RunResult out;

  std::optional<Prepared> prep;
  std::optional<Error> prep_error;
  try {
    prep = prepare(c);
  } catch (const Error& e) {
    prep_error = e;
  }

  struct Done {
    bool ok = false;
    TaskOut out;
    std::string code, message;
    double seconds = 0.0;
  };
  std::vector<std::string> order;
  for (const auto& name : known_tasks())
    if (std::find(c.tasks.begin(), c.tasks.end(), name) != c.tasks.end()) order.push_back(name);

  std::vector<std::future<Done>> futs;
  for (const std::string& name : order)
    futs.push_back(std::async(std::launch::async, [&, name] {
      Done d;
      const auto s = Clock::now();
      try {
        if (prep_error) throw *prep_error;
        if (name == "classify") d.out = task_classify(c, *prep);
        else if (name == "lbo") d.out = task_lbo(c, *prep);
        else if (name == "densities") d.out = task_densities(c, *prep);
        else if (name == "construct") d.out = task_construct(c, *prep);
        else if (name == "measure") d.out = task_measure(c, *prep);
        else if (name == "transfer") d.out = task_transfer(c, *prep);
        d.ok = true;
      } catch (const Error& e) {
        d.code = std::string(to_string(e.code()));
        d.message = e.what();
      } catch (const std::exception& e) {
        d.code = "Internal";
        d.message = e.what();
      }
      d.seconds = std::chrono::duration<double>(Clock::now() - s).count();
      return d;
    }));

  const std::string hash = config_hash(c);
  Json& r = out.report;
  r["schema"] = kReportSchema;
  r["config_hash"] = hash;
  r["space"] = to_json(c.space);
  r["operator"] = to_json(c.op);
  r["vector"] = prep ? prep->description : Json(nullptr);
  r["policy"] = {{"horizon", c.horizon},
                 {"k0_grid", c.k0_grid},
                 {"eps_grid", c.eps_grid},
                 {"J", c.J},
                 {"K", c.K},
                 {"n_min", c.n_min},
                 {"window_grid", c.exhaustive ? "exhaustive" : "geometric"},
                 {"frec_threshold", c.frec_threshold},
                 {"rrec_threshold", c.rrec_threshold},
                 {"urec_max_gap", c.urec_max_gap},
                 {"lower_density_estimator", "min of d_N over N in [H/2, H]"},
                 {"banach_density_estimator", "max of W_N over the window grid"},
                 {"growth", c.growth},
                 {"seed", c.seed}};
  Json tasks = Json::object();
  Json timing = Json::object();
  std::ostringstream sum;
  sum << "lbolab " << hash << "\n";
  sum << "space " << to_string(c.space.kind) << ", operator " << to_string(c.op.kind) << ", horizon "
      << c.horizon << "\n";
  for (std::size_t i = 0; i < order.size(); ++i) {
    Done d = futs[i].get();
    timing[order[i]] = d.seconds;
    if (d.ok) {
      Json j = std::move(d.out.result);
      tasks[order[i]] = {{"status", "ok"}, {"result", std::move(j)}};
      for (const auto& l : d.out.summary) sum << l << "\n";
      for (auto& [k, v] : d.out.files) out.files[k] = std::move(v);
    } else {
      out.exit_code = 1;
      tasks[order[i]] = {{"status", "error"}, {"error", {{"code", d.code}, {"message", d.message}}}};
      sum << order[i] << ": FAILED " << d.message << "\n";
    }
  }
  r["tasks"] = std::move(tasks);
  if (prep && std::find(c.formats.begin(), c.formats.end(), "csv") != c.formats.end()) {
    OrbitView<Complex> view(c.op, prep->x);
    std::ostringstream os;
    const std::size_t cols = std::min(c.orbit_cols, prep->x.zero_tail() ? prep->x.size() : prep->x.valid_len());
    if (cols > 0) {
      write_orbit_csv(os, view, std::min(c.orbit_rows, c.horizon), cols);
      out.files["orbit.csv"] = os.str();
    }
  }
  out.summary = sum.str();
  out.meta = {{"config_hash", hash},
              {"wall_seconds", std::chrono::duration<double>(Clock::now() - t0).count()},
              {"task_seconds", timing},
              {"hardware_threads", std::thread::hardware_concurrency()}};
  return out;
}

/// Writes report.json, meta.json, summary.txt and the side files under `dir`.
inline void write_outputs(const RunResult& r, const std::filesystem::path& dir,
                          const std::vector<std::string>& formats) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const auto put = [&](const fs::path& rel, const std::string& text) {
    const fs::path p = dir / rel;
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    require(static_cast<bool>(f), ErrorCode::ConfigError, "cannot write " + p.string());
    f << text;
  };
  const bool json = std::find(formats.begin(), formats.end(), "json") != formats.end();
  const bool csv = std::find(formats.begin(), formats.end(), "csv") != formats.end();
  put("report.json", r.report.dump(2) + "\n");
  put("meta.json", r.meta.dump(2) + "\n");
  put("summary.txt", r.summary);
  for (const auto& [k, v] : r.files) {
    const bool is_csv = k.size() > 4 && k.compare(k.size() - 4, 4, ".csv") == 0;
    if ((is_csv && csv) || (!is_csv && json)) put(k, v);
  }
}

}  // namespace lbo
