#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "dpol/dartboard.hpp"
#include "dpol/errors.hpp"
#include "dpol/harness.hpp"
#include "dpol/oco.hpp"
#include "dpol/potential_experts.hpp"
#include "dpol/svt_experts.hpp"

namespace dpol {

namespace {

constexpr const char* kAlgorithmIds =
    "svt, svt_ada, bintree, potential, dartboard, dartboard_b, stoch_reduce, "
    "dp_ftrl, oco_experts";
constexpr const char* kAdversaryIds =
    "realizable, low_loss, lower_bound, stochastic";

LossSequence make_adversary(const ExperimentConfig& cfg, size_t T, size_t d,
                            RngStream& rng) {
  const std::string id = cfg.get_string("adversary", "realizable");
  if (id == "realizable") {
    const size_t zero = cfg.has("adversary.zero_expert")
                            ? cfg.get_size("adversary.zero_expert")
                            : rng.uniform_index(d);
    return gen_realizable(rng, T, d, zero, cfg.get_double("adversary.churn", 1.0));
  }
  if (id == "low_loss")
    return gen_low_loss(rng, T, d, cfg.get_size("adversary.Lstar", 0));
  if (id == "lower_bound")
    return gen_lower_bound_adversary(
        rng, T, d, cfg.get_double("adversary.eps", cfg.get_double("eps")));
  if (id == "stochastic") {
    const auto means = cfg.get_double_list("adversary.means");
    if (means.size() != d)
      throw ConfigError("adversary.means must list exactly d values");
    return gen_stochastic(rng, T, d, means);
  }
  throw ConfigError("unknown adversary '" + id + "'; valid ids: " +
                    std::string(kAdversaryIds));
}

PrivacyBudget budget_from(const ExperimentConfig& cfg) {
  return {cfg.get_double("eps"), cfg.get_double("delta", 0.0)};
}

struct SingleRun {
  AlgorithmTrace trace;
  RegretReport report;
};

std::vector<ConvexLoss> make_oco_losses(const ExperimentConfig& cfg, size_t T,
                                        const BallDomain& domain) {
  const std::string kind = cfg.get_string("loss.kind", "quadratic");
  std::vector<double> anchor(domain.dim, 0.0);
  if (cfg.has("loss.anchor")) {
    anchor = cfg.get_double_list("loss.anchor");
    if (anchor.size() != domain.dim)
      throw ConfigError("loss.anchor must list domain.d values");
  }
  std::vector<ConvexLoss> losses;
  losses.reserve(T);
  for (size_t t = 0; t < T; ++t) {
    if (kind == "quadratic") {
      losses.push_back(ConvexLoss::quadratic(anchor, cfg.get_double("loss.beta", 1.0)));
    } else if (kind == "hinge") {
      losses.push_back(ConvexLoss::smoothed_hinge(anchor,
                                                  cfg.get_double("loss.offset", 0.0),
                                                  cfg.get_double("loss.scale", 1.0)));
    } else if (kind == "distance") {
      losses.push_back(ConvexLoss::distance(anchor, cfg.get_double("loss.scale", 1.0)));
    } else {
      throw ConfigError("unknown loss.kind '" + kind +
                        "'; valid kinds: quadratic, hinge, distance");
    }
  }
  return losses;
}

SingleRun run_single(const ExperimentConfig& cfg, uint64_t seed, uint64_t rep) {
  const std::string alg = cfg.get_string("alg");
  const bool oracle = cfg.get_bool("oracle_mode", false);
  RngStream gen_rng(seed, 2 * rep);
  RngStream alg_rng(seed, 2 * rep + 1);

  if (alg == "dp_ftrl" || alg == "oco_experts") {
    BallDomain domain{cfg.get_size("domain.d", 1), cfg.get_double("domain.D", 1.0)};
    const size_t T = cfg.get_size("T");
    const auto losses = make_oco_losses(cfg, T, domain);
    if (alg == "dp_ftrl") {
      DpFtrlConfig fcfg;
      fcfg.budget = budget_from(cfg);
      if (cfg.has("lambda")) fcfg.lambda_override = cfg.get_double("lambda");
      fcfg.oracle_mode = oracle;
      auto result = run_dp_ftrl(losses, domain, fcfg, alg_rng);
      return {std::move(result.trace), std::move(result.report)};
    }
    OcoReductionConfig rcfg;
    rcfg.budget = budget_from(cfg);
    rcfg.beta_fail = cfg.get_double("beta", 0.05);
    double lip = 0.0;
    for (const auto& l : losses) lip = std::max(lip, l.lipschitz(domain));
    rcfg.lipschitz = cfg.get_double("lipschitz", lip);
    rcfg.rho_mode = cfg.get_string("rho_mode", "theorem") == "proof"
                        ? OcoReductionConfig::RhoMode::kProof
                        : OcoReductionConfig::RhoMode::kTheorem;
    rcfg.oracle_mode = oracle;
    if (cfg.has("alg.initial_expert"))
      rcfg.initial_expert = cfg.get_size("alg.initial_expert");
    auto result = run_oco_experts_reduction(losses, domain, rcfg, alg_rng);
    return {std::move(result.trace), std::move(result.report)};
  }

  const size_t T = cfg.get_size("T");
  const size_t d = cfg.get_size("d");
  const LossSequence seq = make_adversary(cfg, T, d, gen_rng);

  if (alg == "svt") {
    SvtExpertsConfig scfg;
    scfg.horizon = T;
    scfg.experts = d;
    scfg.beta = cfg.get_double("beta", 0.05);
    scfg.budget = budget_from(cfg);
    scfg.l_star_bound = cfg.get_double("Lstar", 0.0);
    scfg.variant = cfg.get_string("variant", "pure") == "approx"
                       ? SvtExpertsConfig::Variant::kApprox
                       : SvtExpertsConfig::Variant::kPure;
    scfg.oracle_mode = oracle;
    if (cfg.has("alg.initial_expert"))
      scfg.initial_expert = cfg.get_size("alg.initial_expert");
    auto [trace, report] = run_svt_zero_loss(seq, scfg, alg_rng);
    return {std::move(trace), std::move(report)};
  }
  if (alg == "svt_ada") {
    auto result = run_svt_adaptive(seq, T, d, cfg.get_double("beta", 0.05),
                                   budget_from(cfg), alg_rng, oracle);
    return {std::move(result.trace), std::move(result.report)};
  }
  if (alg == "bintree") {
    BintreeExpertsConfig bcfg;
    bcfg.horizon = T;
    bcfg.experts = d;
    bcfg.b_good = cfg.get_size("B_good", std::max<size_t>(
                                             1, static_cast<size_t>(std::ceil(
                                                    std::log(static_cast<double>(
                                                        d * T))))));
    bcfg.tau = cfg.get_double("tau", 0.0);
    bcfg.budget = budget_from(cfg);
    bcfg.oracle_mode = oracle;
    auto [trace, report] = run_bintree_experts(seq, bcfg, alg_rng);
    return {std::move(trace), std::move(report)};
  }
  if (alg == "potential") {
    PotentialConfig pcfg;
    pcfg.horizon = T;
    pcfg.experts = d;
    pcfg.gamma = cfg.get_double("gamma", 1.0 / static_cast<double>(d));
    pcfg.beta = cfg.get_double("beta", 0.0);
    pcfg.alpha = cfg.get_double("alpha", 1.0);
    pcfg.budget = budget_from(cfg);
    pcfg.variant = cfg.get_string("variant", "pure") == "approx"
                       ? PotentialConfig::Variant::kApprox
                       : PotentialConfig::Variant::kPure;
    pcfg.oracle_mode = oracle;
    if (cfg.has("alg.initial_expert"))
      pcfg.initial_expert = cfg.get_size("alg.initial_expert");
    auto result = run_potential(seq, pcfg, alg_rng);
    return {std::move(result.trace), std::move(result.report)};
  }
  if (alg == "dartboard" || alg == "dartboard_b") {
    const std::string mode = cfg.get_string("eta_mode", "manual");
    DartboardConfig dcfg;
    if (mode == "manual") {
      dcfg = DartboardConfig::manual(T, d, cfg.get_double("eta"),
                                     cfg.get_double("p"),
                                     cfg.get_double("delta", 0.0),
                                     alg == "dartboard_b" ? cfg.get_size("B", 1) : 1);
    } else if (mode == "cor_pure") {
      dcfg = DartboardConfig::cor_pure(T, d, cfg.get_double("eps"));
    } else if (mode == "cor_appr") {
      dcfg = DartboardConfig::cor_appr(T, d, cfg.get_double("eps"),
                                       cfg.get_double("delta"));
    } else if (mode == "cor_batch") {
      dcfg = DartboardConfig::cor_batch(T, d, cfg.get_double("eps"),
                                        cfg.get_double("delta"));
    } else {
      throw ConfigError("unknown eta_mode '" + mode +
                        "'; valid: manual, cor_pure, cor_appr, cor_batch");
    }
    if (cfg.has("eps") && mode == "manual") {
      const double requested = cfg.get_double("eps");
      if (dcfg.privacy_epsilon() > requested + 1e-12)
        throw ConfigError("dartboard parameters compose to eps=" +
                          std::to_string(dcfg.privacy_epsilon()) +
                          " which exceeds the requested eps=" +
                          std::to_string(requested));
      dcfg.budget.epsilon = requested;
    }
    auto [trace, report] = alg == "dartboard_b"
                               ? run_dartboard_batched(seq, dcfg, alg_rng)
                               : run_dartboard(seq, dcfg, alg_rng);
    return {std::move(trace), std::move(report)};
  }
  if (alg == "stoch_reduce") {
    BaselineScoSelector solver(oracle);
    auto [trace, report] =
        run_stochastic_reduction(seq, solver, budget_from(cfg), alg_rng);
    return {std::move(trace), std::move(report)};
  }
  throw ConfigError("unknown alg '" + alg + "'; valid ids: " +
                    std::string(kAlgorithmIds));
}

double quantile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  if (values.empty()) return 0.0;
  const double pos = q * static_cast<double>(values.size() - 1);
  const size_t lo = static_cast<size_t>(pos);
  const size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

}  // namespace

void parallel_for(size_t count, const std::function<void(size_t)>& body) {
  const size_t workers =
      std::min<size_t>(count, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mu;
  pool.reserve(workers);
  for (size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lk(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

CellResult run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
  const size_t reps = cfg.get_size("reps", 1);
  if (reps == 0) throw ConfigError("reps must be >= 1");
  const uint64_t seed = cfg.base_seed();

  CellResult cell;
  cell.config = cfg.entries();
  cell.config_hash = [&] {
    std::ostringstream h;
    h << std::hex << fnv1a_hash(cfg.to_text());
    return h.str();
  }();
  cell.reps = reps;

  std::vector<RegretReport> reports(reps);
  std::vector<PrivacyBudget> spent(reps);
  std::vector<PrivacyBudget> configured(reps);
  std::vector<std::string> traces(options.write_traces ? reps : 0);

  const auto t0 = std::chrono::steady_clock::now();
  parallel_for(reps, [&](size_t rep) {
    try {
      SingleRun run = run_single(cfg, seed, rep);
      reports[rep] = std::move(run.report);
      spent[rep] = run.trace.spent;
      configured[rep] = run.trace.configured;
      if (options.write_traces) {
        std::ostringstream os;
        run.trace.write_csv(os);
        traces[rep] = os.str();
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw StateError("replication with seed " + std::to_string(seed) +
                       " stream " + std::to_string(rep) + " failed: " + e.what());
    }
  });
  const auto t1 = std::chrono::steady_clock::now();
  cell.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

  // Per-cell time budget guard keeps experiment matrices at desk scale.
  const double budget_s = cfg.get_double("time_budget_s", 120.0);
  if (cell.wall_ms > budget_s * 1000.0) {
    const std::string msg = "cell exceeded its time budget: " +
                            std::to_string(cell.wall_ms / 1000.0) + "s > " +
                            std::to_string(budget_s) + "s";
    if (cfg.get_bool("time_budget_enforce", false)) throw ConfigError(msg);
    std::cerr << "warning: " << msg << "\n";
  }

  double switch_sum = 0.0;
  for (size_t rep = 0; rep < reps; ++rep) {
    if (!configured[rep].covers(spent[rep]))
      throw StateError("privacy ledger exceeds configured budget in replication " +
                       std::to_string(rep));
    cell.regrets.push_back(reports[rep].regret);
    switch_sum += static_cast<double>(reports[rep].switch_count);
    cell.spent_max.epsilon = std::max(cell.spent_max.epsilon, spent[rep].epsilon);
    cell.spent_max.delta = std::max(cell.spent_max.delta, spent[rep].delta);
  }
  cell.configured = configured[0];
  double sum = 0.0;
  for (double r : cell.regrets) sum += r;
  cell.regret_mean = sum / static_cast<double>(reps);
  cell.regret_median = quantile(cell.regrets, 0.5);
  cell.regret_q90 = quantile(cell.regrets, 0.9);
  cell.switches_mean = switch_sum / static_cast<double>(reps);

  if (options.out_dir) {
    std::filesystem::create_directories(*options.out_dir);
    if (options.write_traces) {
      for (size_t rep = 0; rep < reps; ++rep) {
        std::ofstream out(*options.out_dir /
                          ("trace_" + cell.config_hash + "_r" +
                           std::to_string(rep) + ".csv"));
        out << traces[rep];
      }
    }
  }
  return cell;
}

std::vector<CellResult> run_sweep(
    const ExperimentConfig& base,
    const std::vector<std::pair<std::string, std::vector<std::string>>>& axes,
    const RunOptions& options) {
  std::vector<ExperimentConfig> cells{base};
  for (const auto& [key, values] : axes) {
    if (values.empty()) throw ConfigError("sweep axis '" + key + "' is empty");
    std::vector<ExperimentConfig> next;
    for (const auto& cfg : cells)
      for (const auto& v : values) {
        ExperimentConfig c = cfg;
        c.set(key, v);
        next.push_back(std::move(c));
      }
    cells = std::move(next);
  }
  std::vector<CellResult> results;
  results.reserve(cells.size());
  for (const auto& cfg : cells) results.push_back(run_experiment(cfg, options));
  return results;
}

std::string summary_json(const std::vector<CellResult>& cells) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& cell : cells) {
    nlohmann::ordered_json j;
    j["config_hash"] = cell.config_hash;
    nlohmann::ordered_json cfg;
    for (const auto& [k, v] : cell.config) cfg[k] = v;
    j["config"] = cfg;
    j["reps"] = cell.reps;
    j["regret_mean"] = cell.regret_mean;
    j["regret_median"] = cell.regret_median;
    j["regret_q90"] = cell.regret_q90;
    j["switches_mean"] = cell.switches_mean;
    j["ledger_eps"] = cell.spent_max.epsilon;
    j["ledger_delta"] = cell.spent_max.delta;
    j["configured_eps"] = cell.configured.epsilon;
    j["configured_delta"] = cell.configured.delta;
    // The oblivious lower bound is Omega(log d / eps); report the measured
    // regret against that reference without asserting a constant.
    const auto adv = cell.config.find("adversary");
    if (adv != cell.config.end() && adv->second == "lower_bound") {
      const double d_experts = std::stod(cell.config.at("d"));
      const double eps = std::stod(cell.config.at("eps"));
      j["regret_over_logd_eps"] = cell.regret_mean / (std::log(d_experts) / eps);
    }
    arr.push_back(j);
  }
  return arr.dump(2) + "\n";
}

}  // namespace dpol
