#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dpol/experts_env.hpp"
#include "dpol/privacy.hpp"
#include "dpol/rng.hpp"

namespace dpol {

/// Flat key=value experiment description. Keys are dotted strings; the
/// textual form round-trips losslessly (keys sorted, one per line).
class ExperimentConfig {
 public:
  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig from_file(const std::filesystem::path& path);
  std::string to_text() const;

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  size_t get_size(const std::string& key) const;
  size_t get_size(const std::string& key, size_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_double_list(const std::string& key) const;

  /// Base seed; the DPOL_SEED environment variable overrides the config.
  uint64_t base_seed() const;

  const std::map<std::string, std::string>& entries() const { return kv_; }
  bool operator==(const ExperimentConfig&) const = default;

 private:
  std::map<std::string, std::string> kv_;
};

struct RunOptions {
  std::optional<std::filesystem::path> out_dir;
  bool write_traces = false;
};

/// Aggregate of one experiment cell (R seeded replications of one config).
struct CellResult {
  std::string config_hash;
  std::map<std::string, std::string> config;
  size_t reps = 0;
  double regret_mean = 0.0;
  double regret_median = 0.0;
  double regret_q90 = 0.0;
  double switches_mean = 0.0;
  PrivacyBudget spent_max;   // max composed budget across replications
  PrivacyBudget configured;
  double wall_ms = 0.0;      // console only; excluded from summary JSON
  std::vector<double> regrets;
};

/// Runs R replications (stream_id = replication index), checks the privacy
/// ledger of every run against the configured budget, optionally writes trace
/// CSVs, and aggregates the regret reports.
CellResult run_experiment(const ExperimentConfig& cfg, const RunOptions& options);

/// Cross product of axis values over the base config, one cell per point.
std::vector<CellResult> run_sweep(
    const ExperimentConfig& base,
    const std::vector<std::pair<std::string, std::vector<std::string>>>& axes,
    const RunOptions& options);

/// Summary JSON: array with one object per cell, byte-stable for a fixed
/// (config, seed).
std::string summary_json(const std::vector<CellResult>& cells);

uint64_t fnv1a_hash(const std::string& text);

struct TailLemmaReport {
  double geometric_bound = 0.0;
  double geometric_empirical = 0.0;
  double geometric_stderr = 0.0;
  double chernoff_bound = 0.0;
  double chernoff_empirical = 0.0;
  double chernoff_stderr = 0.0;
  bool pass = false;
};

/// Monte-Carlo check of the geometric-sum tail P(W > 2k/p) <= e^{-k/4}
/// (requires k >= n) and the Chernoff upper tail
/// P(X > (1+d)np) <= e^{-np d^2/3}; asserts empirical <= bound + 3 stderr.
TailLemmaReport verify_tail_lemmas(RngStream& rng, size_t n, double p, size_t k,
                                   size_t reps, size_t chernoff_n = 1000,
                                   double chernoff_delta = 0.2);

struct VerifyResult {
  std::string name;
  bool pass = false;
  std::string message;
};

/// Runs the oracle suite (or the subset whose name contains `filter`):
/// dartboard marginals, noise-free determinism, sensitivity, self-bounding,
/// FTRL closed form, composition hand values, tail lemmas.
std::vector<VerifyResult> verify_all(const std::string& filter = "");

/// Simple parallel-for over replication indices (work pool).
void parallel_for(size_t count, const std::function<void(size_t)>& body);

}  // namespace dpol
