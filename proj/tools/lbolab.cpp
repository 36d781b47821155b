// lbolab: config-driven experiments on orbits of linear operators.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lbo/lbo.hpp"

namespace {

using namespace lbo;

struct Overrides {
  std::string config;
  std::optional<std::size_t> horizon;
  std::string eps_grid, k0_grid, values, construction, target;
  std::optional<std::size_t> length, rounds, k_max, block_spacing, seed;
  std::string out;
  std::vector<std::string> formats;
};

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("--horizon", o.horizon, "Orbit horizon H");
  app->add_option("--eps-grid", o.eps_grid, "Neighbourhood radii, e.g. \"0.5 0.25\"");
  app->add_option("--k0-grid", o.k0_grid, "Seminorm indices, e.g. \"1 2 4\"");
  app->add_option("--out", o.out, "Output directory");
  app->add_option("--format", o.formats, "json and/or csv")->check(CLI::IsMember({"json", "csv"}));
  app->add_option("--seed", o.seed, "Seed for randomized functional probes");
}

void add_vector(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config, "Start from this config file")->check(CLI::ExistingFile);
  app->add_option("--values", o.values, "Inline vector pattern, e.g. \"1 2\"");
  app->add_option("--length", o.length, "Tile the inline pattern to this length");
  app->add_option("--construction", o.construction, "word_embedding or star")
      ->check(CLI::IsMember({"word_embedding", "star"}));
  app->add_option("--target", o.target, "word_embedding vector: y or z")->check(CLI::IsMember({"y", "z"}));
  app->add_option("--rounds", o.rounds, "Word-embedding rounds");
  app->add_option("--k-max", o.k_max, "(*)-family size");
  app->add_option("--block-spacing", o.block_spacing, "(*)-family spacing");
}

ExperimentConfig configure(const Overrides& o, const std::vector<std::string>& tasks) {
  ExperimentConfig c;
  if (!o.config.empty()) c = parse_config_file(o.config);
  if (!tasks.empty()) c.tasks = tasks;
  const auto flag = [](const char* f) { return cfg::Where{0, f}; };
  if (o.horizon) {
    if (*o.horizon < 1) flag("--horizon").fail("must be >= 1");
    c.horizon = *o.horizon;
  }
  if (!o.eps_grid.empty()) {
    c.eps_grid = cfg::list<double>(o.eps_grid, flag("--eps-grid"), cfg::to_double);
    for (double e : c.eps_grid)
      if (!(e > 0.0) || std::isinf(e)) flag("--eps-grid").fail("eps must be positive and finite");
  }
  if (!o.k0_grid.empty()) {
    c.k0_grid = cfg::list<std::size_t>(o.k0_grid, flag("--k0-grid"), cfg::to_size);
    for (std::size_t k : c.k0_grid)
      if (k < 1) flag("--k0-grid").fail("k0 must be >= 1");
  }
  if (c.eps_grid.empty()) flag("--eps-grid").fail("grid must be nonempty");
  if (c.k0_grid.empty()) flag("--k0-grid").fail("grid must be nonempty");
  if (!o.values.empty()) {
    c.vector.source = "inline";
    c.vector.values = cfg::list<Complex>(o.values, flag("--values"), cfg::to_complex);
  }
  if (o.length) c.vector.length = *o.length;
  if (!o.construction.empty()) {
    c.vector.source = "construction";
    c.vector.construction = o.construction;
  }
  if (!o.target.empty()) c.vector.target = o.target;
  if (o.rounds) {
    if (*o.rounds < 1) flag("--rounds").fail("must be >= 1");
    c.vector.rounds = *o.rounds;
  }
  if (o.k_max) c.vector.k_max = *o.k_max;
  if (o.block_spacing) c.vector.block_spacing = *o.block_spacing;
  if (o.seed) c.seed = *o.seed;
  if (!o.out.empty()) c.out_dir = o.out;
  if (!o.formats.empty()) c.formats = o.formats;
  if (c.vector.source == "inline" && c.vector.values.empty())
    flag("--values").fail("give --values, --construction or --config");
  return c;
}

int execute(const ExperimentConfig& c) {
  const RunResult r = run_experiment(c);
  write_outputs(r, c.out_dir, c.formats);
  std::cout << r.summary;
  return r.exit_code;
}

/// Density curves of a stored return set.
int density_from_file(const std::string& path, bool bits, std::size_t horizon, const Overrides& o) {
  std::ifstream in(path, bits ? std::ios::binary : std::ios::in);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open return set '" + path + "'");
  const ReturnSet R = bits ? read_return_set_bits(in, horizon) : read_return_set_text(in);
  const LowerDensity ld = lower_density_curve(R);
  const BanachDensity bd = banach_density_curve(R);
  const SuchestonResult sm = sucheston_M(indicator(R));
  const std::string dir = o.out.empty() ? "lbolab-out" : o.out;
  std::filesystem::create_directories(dir);
  std::ofstream(dir + "/lower.csv") << [&] { std::ostringstream s; write_curve_csv(s, ld.curve, "d_N"); return s.str(); }();
  std::ofstream(dir + "/banach.csv") << [&] { std::ostringstream s; write_curve_csv(s, bd.curve, "W_N"); return s.str(); }();
  const Json j{{"horizon", R.horizon},
               {"size", R.size()},
               {"lower_density", ld.estimate},
               {"banach_density", bd.estimate},
               {"sucheston", sm.estimate},
               {"sucheston_equals_banach", sm.curve.value == bd.curve.value},
               {"max_gap", max_gap(R)}};
  std::ofstream(dir + "/density.json") << j.dump(2) << "\n";
  std::cout << "density: |A| = " << R.size() << ", lower " << format_double(ld.estimate) << ", Banach "
            << format_double(bd.estimate) << ", max gap " << max_gap(R) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lbolab: recurrence, locally bounded orbits and invariant measures at finite horizon"};
  app.require_subcommand(1);

  Overrides run_o;
  std::string run_cfg;
  auto* run = app.add_subcommand("run", "Run every task listed in a config file");
  run->add_option("config", run_cfg, "Config file")->required()->check(CLI::ExistingFile);
  add_common(run, run_o);

  struct Sub {
    const char* name;
    const char* task;
    const char* help;
    Overrides o;
    CLI::App* app = nullptr;
  };
  std::vector<Sub> subs{{"classify", "classify", "Recurrence verdicts over a (k0, eps) grid", {}},
                        {"density", "densities", "Density curves and family memberships", {}},
                        {"construct", "construct", "Build the word-embedding or (*)-family sequence", {}},
                        {"measure", "measure", "Empirical invariant-measure candidate", {}},
                        {"transfer", "transfer", "Block-recurrence transfer on ω", {}}};
  std::string returns_file;
  bool returns_bits = false;
  std::size_t bits_horizon = 0;
  for (Sub& s : subs) {
    s.app = app.add_subcommand(s.name, s.help);
    add_common(s.app, s.o);
    add_vector(s.app, s.o);
  }
  subs[1].app->add_option("--returns", returns_file, "Read a return set instead of simulating")
      ->check(CLI::ExistingFile);
  subs[1].app->add_flag("--bits", returns_bits, "Return set file is bitset binary");
  subs[1].app->add_option("--bits-horizon", bits_horizon, "Horizon of a bitset file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) {
      run_o.config = run_cfg;
      return execute(configure(run_o, {}));
    }
    for (Sub& s : subs) {
      if (!s.app->parsed()) continue;
      if (std::string(s.name) == "density" && !returns_file.empty()) {
        if (returns_bits && bits_horizon == 0)
          throw Error(ErrorCode::ConfigError, "field '--bits-horizon': required with --bits");
        return density_from_file(returns_file, returns_bits, bits_horizon, s.o);
      }
      std::vector<std::string> tasks{s.task};
      return execute(configure(s.o, tasks));
    }
  } catch (const Error& e) {
    std::cerr << "lbolab: " << e.what() << "\n";
    return e.code() == ErrorCode::ConfigError ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "lbolab: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
