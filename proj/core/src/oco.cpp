#include "dpol/oco.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "dpol/errors.hpp"
#include "dpol/mechanisms.hpp"
#include "dpol/svt_experts.hpp"

namespace dpol {

namespace {

double norm2(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

bool BallDomain::feasible(std::span<const double> x, double tol) const {
  return x.size() == dim && norm2(x) <= radius + tol;
}

std::vector<double> BallDomain::project(std::span<const double> x) const {
  std::vector<double> y(x.begin(), x.end());
  const double n = norm2(x);
  if (n > radius) {
    const double f = radius / n;
    for (double& v : y) v *= f;
  }
  return y;
}

std::vector<double> BallDomain::sample(RngStream& rng) const {
  // Gaussian direction scaled by a u^{1/d} radius.
  std::vector<double> x(dim);
  double n = 0.0;
  do {
    for (auto& v : x) v = rng.gaussian(1.0);
    n = norm2(x);
  } while (n == 0.0);
  const double r =
      radius * std::pow(rng.uniform_open(), 1.0 / static_cast<double>(dim));
  for (auto& v : x) v *= r / n;
  return x;
}

ConvexLoss ConvexLoss::quadratic(std::vector<double> anchor, double beta) {
  if (!(beta > 0.0)) throw ParameterError("ConvexLoss: beta must be positive");
  return ConvexLoss(Kind::kQuadraticAnchor, std::move(anchor), 0.0, beta);
}

ConvexLoss ConvexLoss::smoothed_hinge(std::vector<double> normal, double offset,
                                      double scale) {
  if (!(scale > 0.0)) throw ParameterError("ConvexLoss: scale must be positive");
  if (norm2(normal) == 0.0)
    throw ParameterError("ConvexLoss: hinge normal must be nonzero");
  return ConvexLoss(Kind::kSmoothedHinge, std::move(normal), offset, scale);
}

ConvexLoss ConvexLoss::distance(std::vector<double> anchor, double scale) {
  if (!(scale > 0.0)) throw ParameterError("ConvexLoss: scale must be positive");
  return ConvexLoss(Kind::kDistanceAnchor, std::move(anchor), 0.0, scale);
}

namespace {
// One-sided Huber ramp: 0 for z >= 0, z^2/2 on [-1, 0), -z - 1/2 below.
double huber_value(double z) {
  if (z >= 0.0) return 0.0;
  if (z >= -1.0) return 0.5 * z * z;
  return -z - 0.5;
}
double huber_slope(double z) {
  if (z >= 0.0) return 0.0;
  if (z >= -1.0) return z;
  return -1.0;
}
}  // namespace

double ConvexLoss::value(std::span<const double> x) const {
  switch (kind_) {
    case Kind::kQuadraticAnchor: {
      double s = 0.0;
      for (size_t i = 0; i < x.size(); ++i) {
        const double dxi = x[i] - params_[i];
        s += dxi * dxi;
      }
      return 0.5 * scale_ * s;
    }
    case Kind::kSmoothedHinge:
      return scale_ * huber_value(dot(params_, x) - offset_);
    case Kind::kDistanceAnchor: {
      double s = 0.0;
      for (size_t i = 0; i < x.size(); ++i) {
        const double dxi = x[i] - params_[i];
        s += dxi * dxi;
      }
      return scale_ * std::sqrt(s);
    }
  }
  return 0.0;
}

std::vector<double> ConvexLoss::gradient(std::span<const double> x) const {
  std::vector<double> g(x.size(), 0.0);
  switch (kind_) {
    case Kind::kQuadraticAnchor:
      for (size_t i = 0; i < x.size(); ++i) g[i] = scale_ * (x[i] - params_[i]);
      break;
    case Kind::kSmoothedHinge: {
      const double slope = scale_ * huber_slope(dot(params_, x) - offset_);
      for (size_t i = 0; i < x.size(); ++i) g[i] = slope * params_[i];
      break;
    }
    case Kind::kDistanceAnchor: {
      double n = 0.0;
      for (size_t i = 0; i < x.size(); ++i) {
        const double dxi = x[i] - params_[i];
        n += dxi * dxi;
      }
      n = std::sqrt(n);
      if (n > 0.0)
        for (size_t i = 0; i < x.size(); ++i)
          g[i] = scale_ * (x[i] - params_[i]) / n;
      break;
    }
  }
  return g;
}

double ConvexLoss::smoothness() const {
  switch (kind_) {
    case Kind::kQuadraticAnchor:
      return scale_;
    case Kind::kSmoothedHinge: {
      const double n = norm2(params_);
      return scale_ * n * n;
    }
    case Kind::kDistanceAnchor:
      throw StateError("ConvexLoss: distance kind is not smooth");
  }
  return 0.0;
}

double ConvexLoss::lipschitz(const BallDomain& domain) const {
  switch (kind_) {
    case Kind::kQuadraticAnchor:
      return scale_ * (domain.radius + norm2(params_));
    case Kind::kSmoothedHinge:
      return scale_ * norm2(params_);
    case Kind::kDistanceAnchor:
      return scale_;
  }
  return 0.0;
}

CoverNet build_cover(const BallDomain& domain, double rho) {
  if (domain.dim > 3)
    throw SizeError("build_cover: dimension above the d <= 3 guard");
  if (!(rho > 0.0) || rho > 2.0 * domain.radius)
    throw ParameterError("build_cover: rho must lie in (0, 2D]");
  CoverNet net;
  net.rho = rho;
  if (rho >= domain.radius) {
    net.centers.push_back(std::vector<double>(domain.dim, 0.0));
    return net;
  }
  const size_t d = domain.dim;
  const double h = 2.0 * rho / std::sqrt(static_cast<double>(d));
  // Lattice centers (k + 1/2) h; a cell can touch the ball only when its
  // center is within rho of it.
  const double reach = domain.radius + rho;
  const long kmax = static_cast<long>(std::ceil(reach / h)) + 1;
  const double span = static_cast<double>(2 * kmax + 1);
  double predicted = 1.0;
  for (size_t i = 0; i < d; ++i) predicted *= span;
  if (predicted > 1e7)
    throw SizeError("build_cover: predicted grid size exceeds the 1e7 guard");

  std::vector<long> idx(d, -kmax);
  std::vector<double> c(d);
  while (true) {
    for (size_t i = 0; i < d; ++i)
      c[i] = (static_cast<double>(idx[i]) + 0.5) * h;
    const double n = norm2(c);
    if (n < reach) {  // strict: boundary-tangent cells are covered by inner ones
      net.centers.push_back(domain.project(c));
    }
    size_t i = 0;
    for (; i < d; ++i) {
      if (++idx[i] <= kmax) break;
      idx[i] = -kmax;
    }
    if (i == d) break;
  }
  return net;
}

std::vector<double> ftrl_step(std::span<const double> g_bar, double lambda,
                              const BallDomain& domain) {
  if (!(lambda > 0.0)) throw ParameterError("ftrl_step: lambda must be positive");
  std::vector<double> x(g_bar.size());
  for (size_t i = 0; i < x.size(); ++i) x[i] = -g_bar[i] / lambda;
  const double n = norm2(x);
  if (n > domain.radius) {
    const double f = domain.radius / n;
    for (double& v : x) v *= f;
  }
  return x;
}

double dp_ftrl_lambda(double beta, double lipschitz, double diameter, size_t T,
                      size_t d, double eps, double delta) {
  const double inner = beta / (eps * eps) * (lipschitz / diameter) *
                       (lipschitz / diameter) * static_cast<double>(T) *
                       static_cast<double>(d) *
                       std::log(static_cast<double>(T)) * std::log(1.0 / delta);
  return 32.0 * beta + std::cbrt(inner);
}

double total_loss_at(const std::vector<ConvexLoss>& losses,
                     std::span<const double> x) {
  double s = 0.0;
  for (const auto& l : losses) s += l.value(x);
  return s;
}

namespace {

std::vector<double> grid_minimizer(const std::vector<ConvexLoss>& losses,
                                   const BallDomain& domain) {
  // Multi-resolution grid: shrink a box around the best point per level.
  const size_t d = domain.dim;
  std::vector<double> center(d, 0.0);
  double half = domain.radius;
  std::vector<double> best(center);
  double best_val = total_loss_at(losses, best);
  const int per_axis = 17;
  for (int level = 0; level < 12; ++level) {
    std::vector<int> idx(d, 0);
    std::vector<double> pt(d);
    while (true) {
      for (size_t i = 0; i < d; ++i) {
        pt[i] = center[i] - half +
                2.0 * half * static_cast<double>(idx[i]) / (per_axis - 1);
      }
      const auto proj = domain.project(pt);
      const double v = total_loss_at(losses, proj);
      if (v < best_val) {
        best_val = v;
        best = proj;
      }
      size_t i = 0;
      for (; i < d; ++i) {
        if (++idx[i] < per_axis) break;
        idx[i] = 0;
      }
      if (i == d) break;
    }
    center = best;
    half *= 2.5 / (per_axis - 1);
  }
  return best;
}

std::vector<double> pgd_minimizer(const std::vector<ConvexLoss>& losses,
                                  const BallDomain& domain, RngStream& rng) {
  double max_smooth = 0.0;
  bool all_smooth = true;
  for (const auto& l : losses) {
    if (!l.smooth()) {
      all_smooth = false;
      break;
    }
    max_smooth += l.smoothness();
  }
  const double step = all_smooth && max_smooth > 0.0
                          ? 1.0 / max_smooth
                          : domain.radius / std::sqrt(1.0 + losses.size());
  std::vector<double> best(domain.dim, 0.0);
  double best_val = total_loss_at(losses, best);
  for (int start = 0; start < 8; ++start) {
    std::vector<double> x =
        start == 0 ? std::vector<double>(domain.dim, 0.0) : domain.sample(rng);
    for (int it = 0; it < 600; ++it) {
      std::vector<double> g(domain.dim, 0.0);
      for (const auto& l : losses) {
        const auto gl = l.gradient(x);
        for (size_t i = 0; i < g.size(); ++i) g[i] += gl[i];
      }
      for (size_t i = 0; i < x.size(); ++i) x[i] -= step * g[i];
      x = domain.project(x);
    }
    const double v = total_loss_at(losses, x);
    if (v < best_val) {
      best_val = v;
      best = x;
    }
  }
  return best;
}

}  // namespace

std::vector<double> continuous_minimizer(const std::vector<ConvexLoss>& losses,
                                         const BallDomain& domain,
                                         RngStream& rng) {
  if (losses.empty()) return std::vector<double>(domain.dim, 0.0);
  if (domain.dim <= 2) return grid_minimizer(losses, domain);
  return pgd_minimizer(losses, domain, rng);
}

DpFtrlResult run_dp_ftrl(const std::vector<ConvexLoss>& losses,
                         const BallDomain& domain, const DpFtrlConfig& cfg,
                         RngStream& rng) {
  if (losses.empty()) throw ParameterError("run_dp_ftrl: empty loss list");
  cfg.budget.validate();
  if (!(cfg.budget.delta > 0.0))
    throw ConfigError("run_dp_ftrl: the vector binary tree requires delta > 0");
  const size_t T = losses.size();
  const size_t d = domain.dim;
  double lipschitz = 0.0;
  double smooth = 0.0;
  for (const auto& l : losses) {
    if (l.dim() != d) throw ParameterError("run_dp_ftrl: loss dimension mismatch");
    if (!l.smooth())
      throw ParameterError("run_dp_ftrl: losses must be smooth");
    lipschitz = std::max(lipschitz, l.lipschitz(domain));
    smooth = std::max(smooth, l.smoothness());
  }
  const double lambda =
      cfg.lambda_override
          ? *cfg.lambda_override
          : dp_ftrl_lambda(smooth, lipschitz, domain.radius, T, d,
                           cfg.budget.epsilon, cfg.budget.delta);

  DpFtrlResult out;
  out.lambda = lambda;
  AlgorithmTrace& trace = out.trace;
  trace.rows.reserve(T);
  trace.configured = cfg.budget;
  auto& xn = trace.add_column("x_norm");
  auto& gn = trace.add_column("grad_norm");

  BinaryTreeCounter tree(T, d, cfg.budget, lipschitz, cfg.oracle_mode);
  std::vector<double> g_bar(d, 0.0);
  size_t clipped = 0;
  for (size_t r = 0; r < T; ++r) {
    const auto x = ftrl_step(g_bar, lambda, domain);
    out.iterates.push_back(x);
    const double loss = losses[r].value(x);
    auto g = losses[r].gradient(x);
    const double gnorm = norm2(g);
    if (gnorm > lipschitz) {
      const double f = lipschitz / gnorm;
      for (double& v : g) v *= f;
      ++clipped;
    }
    trace.rows.push_back(
        {static_cast<uint32_t>(r + 1), -1, loss, false, 0});
    xn.push_back(norm2(x));
    gn.push_back(gnorm);
    g_bar = tree.feed(g, rng);
  }
  if (clipped > 0) trace.add_event(static_cast<uint32_t>(T), "gradient_clipped");

  trace.ledger.add("binary_tree_gaussian", cfg.budget.epsilon, cfg.budget.delta, 1);
  trace.spent = cfg.budget;

  const auto x_star = continuous_minimizer(losses, domain, rng);
  RegretReport report;
  for (size_t r = 0; r < T; ++r) report.cumulative_loss += trace.rows[r].loss;
  report.best_expert_loss = total_loss_at(losses, x_star);
  report.regret = report.cumulative_loss - report.best_expert_loss;
  report.switch_count = 0;
  report.phase_log = trace.events;
  out.report = std::move(report);
  return out;
}

OcoReductionResult run_oco_experts_reduction(const std::vector<ConvexLoss>& losses,
                                             const BallDomain& domain,
                                             const OcoReductionConfig& cfg,
                                             RngStream& rng) {
  if (losses.empty())
    throw ParameterError("run_oco_experts_reduction: empty loss list");
  cfg.budget.validate();
  const size_t T = losses.size();
  const double L = cfg.lipschitz;
  if (!(L > 0.0))
    throw ParameterError("run_oco_experts_reduction: lipschitz must be positive");

  OcoReductionResult out;
  out.rho = cfg.rho_mode == OcoReductionConfig::RhoMode::kTheorem
                ? 1.0 / (L * static_cast<double>(T))
                : 1.0 / (L * static_cast<double>(T) * cfg.budget.epsilon);
  const CoverNet net = build_cover(domain, out.rho);
  out.net_size = net.centers.size();

  // Experts table: per-round losses at the centers, scaled onto [0,1].
  const double scale = 2.0 * L * domain.radius;
  LossSequence table(T, out.net_size);
  size_t clamped = 0;
  for (size_t t = 0; t < T; ++t) {
    for (size_t i = 0; i < out.net_size; ++i) {
      double v = losses[t].value(net.centers[i]) / scale;
      if (v < 0.0 || v > 1.0) {
        v = std::clamp(v, 0.0, 1.0);
        ++clamped;
      }
      table.set(t, i, v);
    }
  }
  out.clamp_events = clamped;

  SvtExpertsConfig inner;
  inner.horizon = T;
  inner.experts = out.net_size;
  inner.beta = cfg.beta_fail;
  inner.budget = cfg.budget;
  inner.l_star_bound = 0.0;
  inner.variant = SvtExpertsConfig::Variant::kPure;
  inner.oracle_mode = cfg.oracle_mode;
  inner.initial_expert = cfg.initial_expert;

  auto [trace, inner_report] = run_svt_zero_loss(table, inner, rng);
  out.scaled_regret = inner_report.regret;

  auto& xn = trace.add_column("x_norm");
  auto& gn = trace.add_column("grad_norm");
  double raw_alg_loss = 0.0;
  for (size_t t = 0; t < T; ++t) {
    auto& row = trace.rows[t];
    const auto& center = net.centers[static_cast<size_t>(row.expert)];
    const double raw = losses[t].value(center);
    raw_alg_loss += raw;
    row.loss = raw;  // report the trace in original units
    xn.push_back(norm2(center));
    gn.push_back(0.0);
  }
  if (clamped > 0)
    trace.add_event(static_cast<uint32_t>(T), "table_clamped");

  const auto x_star = continuous_minimizer(losses, domain, rng);
  RegretReport report;
  report.cumulative_loss = raw_alg_loss;
  report.best_expert_loss = total_loss_at(losses, x_star);
  report.regret = raw_alg_loss - report.best_expert_loss;
  report.switch_count = inner_report.switch_count;
  report.phase_log = trace.events;

  out.trace = std::move(trace);
  out.report = std::move(report);
  return out;
}

double self_bounding_check(const ConvexLoss& loss, const BallDomain& domain,
                           size_t n_points, RngStream& rng) {
  if (n_points == 0)
    throw ParameterError("self_bounding_check: need at least one point");
  const double beta = loss.smoothness();
  double worst = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < n_points; ++i) {
    const auto x = domain.sample(rng);
    const auto g = loss.gradient(x);
    const double g2 = dot(g, g);
    worst = std::max(worst, g2 - 4.0 * beta * loss.value(x));
  }
  return worst;
}

double gradient_fd_error(const ConvexLoss& loss, const BallDomain& domain,
                         size_t n_points, RngStream& rng) {
  const double h = 1e-6;
  double worst = 0.0;
  for (size_t i = 0; i < n_points; ++i) {
    auto x = domain.sample(rng);
    const auto g = loss.gradient(x);
    double num = 0.0, den = 0.0;
    for (size_t j = 0; j < x.size(); ++j) {
      auto xp = x;
      auto xm = x;
      xp[j] += h;
      xm[j] -= h;
      const double fd = (loss.value(xp) - loss.value(xm)) / (2.0 * h);
      num += (fd - g[j]) * (fd - g[j]);
      den += g[j] * g[j];
    }
    const double rel = std::sqrt(num) / std::max(std::sqrt(den), 1e-3);
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace dpol
