// dpol: differentially private online learning experiments.
//
// Subcommands:
//   run <config>      execute one experiment cell
//   sweep <config>    cross-product sweep over --axis key=v1,v2,...
//   verify            run the oracle suite (exit 3 on failure)
//   gen <adversary>   emit a loss-sequence CSV

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dpol/errors.hpp"
#include "dpol/experts_env.hpp"
#include "dpol/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitVerification = 3;

void apply_overrides(dpol::ExperimentConfig& cfg,
                     const std::vector<std::string>& sets) {
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw dpol::ConfigError("--set expects key=value, got '" + s + "'");
    cfg.set(s.substr(0, eq), s.substr(eq + 1));
  }
}

void print_cells(const std::vector<dpol::CellResult>& cells) {
  std::cout << "hash            regret_mean  regret_med   regret_q90   "
               "switches  eps_spent/conf     wall_ms\n";
  for (const auto& c : cells) {
    std::cout << c.config_hash << "  " << c.regret_mean << "  "
              << c.regret_median << "  " << c.regret_q90 << "  "
              << c.switches_mean << "  " << c.spent_max.epsilon << "/"
              << c.configured.epsilon << "  " << c.wall_ms << "\n";
  }
}

void write_summary(const std::vector<dpol::CellResult>& cells,
                   const std::optional<std::filesystem::path>& out_dir) {
  const std::string json = dpol::summary_json(cells);
  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    std::ofstream out(*out_dir / "summary.json");
    out << json;
    std::cout << "summary: " << (*out_dir / "summary.json").string() << "\n";
  } else {
    std::cout << json;
  }
}

std::vector<std::pair<std::string, std::vector<std::string>>> parse_axes(
    const std::vector<std::string>& axis_args) {
  std::vector<std::pair<std::string, std::vector<std::string>>> axes;
  for (const auto& a : axis_args) {
    const auto eq = a.find('=');
    if (eq == std::string::npos)
      throw dpol::ConfigError("--axis expects key=v1,v2,..., got '" + a + "'");
    std::vector<std::string> values;
    std::stringstream ss(a.substr(eq + 1));
    std::string cell;
    while (std::getline(ss, cell, ',')) values.push_back(cell);
    axes.emplace_back(a.substr(0, eq), std::move(values));
  }
  return axes;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"differentially private online learning experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  bool traces = false;
  std::vector<std::string> sets;
  std::vector<std::string> axis_args;
  std::string filter;

  auto* run_cmd = app.add_subcommand("run", "run one experiment cell");
  run_cmd->add_option("config", config_path, "config file")->required();
  run_cmd->add_option("--out", out_dir, "output directory");
  run_cmd->add_flag("--traces", traces, "write per-replication trace CSVs");
  run_cmd->add_option("--set", sets, "override config entries (key=value)");

  auto* sweep_cmd = app.add_subcommand("sweep", "sweep over config axes");
  sweep_cmd->add_option("config", config_path, "config file")->required();
  sweep_cmd->add_option("--axis", axis_args, "axis as key=v1,v2,...")->required();
  sweep_cmd->add_option("--out", out_dir, "output directory");
  sweep_cmd->add_flag("--traces", traces, "write per-replication trace CSVs");
  sweep_cmd->add_option("--set", sets, "override config entries (key=value)");

  auto* verify_cmd = app.add_subcommand("verify", "run the oracle suite");
  verify_cmd->add_option("--filter", filter, "run only suites whose name matches");

  std::string adversary;
  std::string gen_out;
  size_t gen_T = 100, gen_d = 4, gen_Lstar = 0;
  uint64_t gen_seed = 1;
  double gen_churn = 1.0, gen_eps = 1.0;
  size_t gen_zero = 0;
  std::string gen_means;
  auto* gen_cmd = app.add_subcommand("gen", "emit a loss-sequence CSV");
  gen_cmd->add_option("adversary", adversary,
                      "realizable|low_loss|lower_bound|stochastic")
      ->required();
  gen_cmd->add_option("--T", gen_T, "horizon");
  gen_cmd->add_option("--d", gen_d, "experts");
  gen_cmd->add_option("--seed", gen_seed, "rng seed");
  gen_cmd->add_option("--churn", gen_churn, "realizable churn");
  gen_cmd->add_option("--zero-expert", gen_zero, "realizable zero-loss expert");
  gen_cmd->add_option("--eps", gen_eps, "lower-bound adversary epsilon");
  gen_cmd->add_option("--Lstar", gen_Lstar, "low-loss target");
  gen_cmd->add_option("--means", gen_means, "stochastic means, comma separated");
  gen_cmd->add_option("--out", gen_out, "output file (default stdout)");
  std::string gen_format = "csv";
  gen_cmd->add_option("--format", gen_format, "csv or bin (compact binary cache)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd || *sweep_cmd) {
      auto cfg = dpol::ExperimentConfig::from_file(config_path);
      apply_overrides(cfg, sets);
      dpol::RunOptions options;
      if (!out_dir.empty()) options.out_dir = out_dir;
      options.write_traces = traces;
      std::vector<dpol::CellResult> cells;
      if (*run_cmd) {
        cells.push_back(dpol::run_experiment(cfg, options));
      } else {
        cells = dpol::run_sweep(cfg, parse_axes(axis_args), options);
      }
      print_cells(cells);
      write_summary(cells, options.out_dir);
      return kExitOk;
    }
    if (*verify_cmd) {
      const auto results = dpol::verify_all(filter);
      bool all = true;
      for (const auto& r : results) {
        std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << ": "
                  << r.message << "\n";
        all = all && r.pass;
      }
      if (results.empty()) {
        std::cout << "no suite matches filter '" << filter << "'\n";
        return kExitConfig;
      }
      return all ? kExitOk : kExitVerification;
    }
    if (*gen_cmd) {
      dpol::RngStream rng(gen_seed);
      std::optional<dpol::LossSequence> seq;
      if (adversary == "realizable") {
        seq = dpol::gen_realizable(rng, gen_T, gen_d, gen_zero, gen_churn);
      } else if (adversary == "low_loss") {
        seq = dpol::gen_low_loss(rng, gen_T, gen_d, gen_Lstar);
      } else if (adversary == "lower_bound") {
        seq = dpol::gen_lower_bound_adversary(rng, gen_T, gen_d, gen_eps);
      } else if (adversary == "stochastic") {
        std::vector<double> means;
        std::stringstream ss(gen_means);
        std::string cell;
        while (std::getline(ss, cell, ',')) means.push_back(std::stod(cell));
        seq = dpol::gen_stochastic(rng, gen_T, gen_d, means);
      } else {
        throw dpol::ConfigError(
            "unknown adversary '" + adversary +
            "'; valid: realizable, low_loss, lower_bound, stochastic");
      }
      if (gen_format != "csv" && gen_format != "bin")
        throw dpol::ConfigError("--format must be csv or bin");
      const bool binary = gen_format == "bin";
      if (gen_out.empty()) {
        if (binary)
          seq->write_binary(std::cout);
        else
          seq->write_csv(std::cout);
      } else {
        std::ofstream out(gen_out, binary ? std::ios::binary : std::ios::out);
        if (binary)
          seq->write_binary(out);
        else
          seq->write_csv(out);
      }
      return kExitOk;
    }
  } catch (const dpol::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
