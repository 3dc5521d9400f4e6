// scns: command-line front end for the small-cell power-control toolkit.
//
// Subcommands: analytic, optimize-power, cell-size, simulate, sweep-alpha,
// validate. Results are emitted as CSV (stdout or --out). Exit codes:
//   0 success
//   2 config error (parse error, invariant violation, unknown key, bad usage)
//   3 regime violation / unsupportable velocity / insufficient power budget
//   4 insufficient data for the requested confidence intervals

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "smallcell/smallcell.hpp"

namespace {

struct CliOptions {
  std::string config_path;
  std::string out_path;
  std::string seed_list;
  int replications = 0;
  int parallel = 1;
  bool trace = false;
};

std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    seeds.push_back(std::stoull(tok));
  }
  if (seeds.empty()) throw smallcell::ConfigError("--seed: expected a comma-separated list");
  return seeds;
}

int run(smallcell::io::Mode mode, const CliOptions& opt) {
  using namespace smallcell;

  io::ExperimentSpec spec = io::load_config(opt.config_path);
  spec.mode = mode;
  if (!opt.seed_list.empty()) {
    spec.seeds = parse_seed_list(opt.seed_list);
    spec.replications = static_cast<int>(spec.seeds.size());
  }
  if (opt.replications > 0) {
    spec.replications = opt.replications;
    if (static_cast<int>(spec.seeds.size()) != spec.replications) {
      const std::uint64_t base = spec.seeds.empty() ? 1 : spec.seeds.front();
      spec.seeds.clear();
      for (int i = 0; i < spec.replications; ++i) {
        spec.seeds.push_back(base + static_cast<std::uint64_t>(i));
      }
    }
  }
  if (!opt.out_path.empty()) spec.out_path = opt.out_path;

  if (opt.trace && opt.parallel > 1) {
    throw ConfigError("--trace requires --parallel 1 (one sequential event stream)");
  }
  if (opt.trace && spec.out_path.empty()) {
    throw ConfigError("--trace writes events to stdout; direct the results with --out");
  }

  for (const auto& w : spec.warnings) std::cerr << "warning: " << w << "\n";

  std::ostream* trace = opt.trace ? &std::cout : nullptr;
  const exp::ResultTable table = exp::run_experiment(spec, opt.parallel, trace);
  const std::string csv = table.to_csv();
  if (spec.out_path.empty()) {
    std::cout << csv;
  } else {
    std::ofstream out(spec.out_path);
    if (!out) throw ConfigError("cannot open output path '" + spec.out_path + "'");
    out << csv;
    std::cerr << "wrote " << table.rows.size() << " rows to " << spec.out_path << "\n";
  }
  if (table.insufficient_data) {
    std::cerr << "insufficient data: some confidence intervals could not be formed "
                 "(need all 30 batches populated or >= 2 replications)\n";
    return 4;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"small-cell network toolkit: closed-form metrics, optimal speed-based "
               "power laws, cell sizing, and a Monte-Carlo ring simulator"};
  app.require_subcommand(1);

  CliOptions opt;
  const std::vector<std::pair<std::string, std::string>> modes = {
      {"analytic", "closed-form handover/service metrics, load factor and busy probability"},
      {"optimize-power", "optimal per-class powers and the affine continuous law"},
      {"cell-size", "joint-cost optimal cell size under power scaling"},
      {"simulate", "Monte-Carlo runs (optional p_bar/beta sweep axes)"},
      {"sweep-alpha", "alpha-rule sweep with improvement vs the equal-power row"},
      {"validate", "side-by-side simulated vs closed-form metrics"},
  };
  for (const auto& [name, desc] : modes) {
    auto* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", opt.config_path, "JSON experiment config")->required();
    sub->add_option("--seed", opt.seed_list, "comma-separated replication seeds (overrides config)");
    sub->add_option("--out", opt.out_path, "CSV output path (default stdout)");
    sub->add_option("--replications", opt.replications, "replication count (overrides config)");
    sub->add_flag("--trace", opt.trace, "stream per-event CSV (time,event,user,cell,value) to stdout");
    sub->add_option("--parallel", opt.parallel, "worker threads for grid points x replications")
        ->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::string sub = app.get_subcommands().front()->get_name();
  try {
    return run(smallcell::io::mode_from_name(sub), opt);
  } catch (const smallcell::RegimeViolation& e) {
    std::cerr << "error: " << e.what() << " (offending value " << e.offending_value() << ")\n";
    return 3;
  } catch (const smallcell::UnsupportableVelocity& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const smallcell::InsufficientPowerBudget& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const smallcell::InsufficientData& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const smallcell::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
