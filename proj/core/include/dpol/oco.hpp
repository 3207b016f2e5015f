#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "dpol/privacy.hpp"
#include "dpol/trace.hpp"
#include "dpol/experts_env.hpp"
#include "dpol/rng.hpp"

namespace dpol {

/// Euclidean ball {x : ||x||_2 <= radius}.
struct BallDomain {
  size_t dim = 1;
  double radius = 1.0;

  bool feasible(std::span<const double> x, double tol = 1e-9) const;
  std::vector<double> project(std::span<const double> x) const;
  /// Uniform draw from the ball.
  std::vector<double> sample(RngStream& rng) const;
};

/// Convex loss with closed-form value/gradient. Quadratic and smoothed-hinge
/// kinds are beta-smooth and nonnegative (self-bounding); the distance kind is
/// Lipschitz-only and serves the experts reduction.
class ConvexLoss {
 public:
  enum class Kind { kQuadraticAnchor, kSmoothedHinge, kDistanceAnchor };

  /// (beta/2) ||x - anchor||^2.
  static ConvexLoss quadratic(std::vector<double> anchor, double beta);
  /// scale * H(<a, x> - b), H the one-sided Huber: 0 for z>=0, z^2/2 on
  /// [-1,0), -z - 1/2 below.
  static ConvexLoss smoothed_hinge(std::vector<double> normal, double offset,
                                   double scale);
  /// scale * ||x - anchor||.
  static ConvexLoss distance(std::vector<double> anchor, double scale);

  Kind kind() const { return kind_; }
  size_t dim() const { return params_.size(); }
  double value(std::span<const double> x) const;
  std::vector<double> gradient(std::span<const double> x) const;
  bool smooth() const { return kind_ != Kind::kDistanceAnchor; }
  double smoothness() const;
  double lipschitz(const BallDomain& domain) const;
  const std::vector<double>& anchor() const { return params_; }

 private:
  ConvexLoss(Kind kind, std::vector<double> params, double offset, double scale)
      : kind_(kind), params_(std::move(params)), offset_(offset), scale_(scale) {}
  Kind kind_;
  std::vector<double> params_;  // anchor or hinge normal
  double offset_ = 0.0;
  double scale_ = 1.0;
};

struct CoverNet {
  double rho = 0.0;
  std::vector<std::vector<double>> centers;
};

/// Axis-aligned grid with spacing 2 rho / sqrt(d), cells kept when they can
/// touch the ball, centers projected onto the ball. Guarded to d <= 3 and a
/// predicted size of 1e7. rho >= D collapses to the single center {0}.
CoverNet build_cover(const BallDomain& domain, double rho);

/// x = -g/lambda, projected onto the ball when outside.
std::vector<double> ftrl_step(std::span<const double> g_bar, double lambda,
                              const BallDomain& domain);

/// lambda = 32 beta + (beta/eps^2 (L/D)^2 T d ln(T) ln(1/delta))^{1/3}.
double dp_ftrl_lambda(double beta, double lipschitz, double diameter, size_t T,
                      size_t d, double eps, double delta);

struct DpFtrlConfig {
  PrivacyBudget budget;                  // requires delta > 0
  std::optional<double> lambda_override;
  bool oracle_mode = false;
};

struct DpFtrlResult {
  AlgorithmTrace trace;  // expert = -1; extras x_norm, grad_norm
  RegretReport report;   // best_expert_loss = continuous minimizer value
  double lambda = 0.0;
  std::vector<std::vector<double>> iterates;
};

/// Regularized-leader steps against a vector binary-tree estimate of the
/// clipped gradient prefix sums.
DpFtrlResult run_dp_ftrl(const std::vector<ConvexLoss>& losses,
                         const BallDomain& domain, const DpFtrlConfig& cfg,
                         RngStream& rng);

struct OcoReductionConfig {
  PrivacyBudget budget;
  double beta_fail = 0.05;
  double lipschitz = 1.0;
  enum class RhoMode { kTheorem, kProof };  // 1/(LT) vs 1/(LT eps)
  RhoMode rho_mode = RhoMode::kTheorem;
  bool oracle_mode = false;
  std::optional<size_t> initial_expert;
};

struct OcoReductionResult {
  AlgorithmTrace trace;  // expert = net center index; extras x_norm, grad_norm
  RegretReport report;   // losses and regret in original (unscaled) units
  size_t net_size = 0;
  double rho = 0.0;
  size_t clamp_events = 0;   // table entries clamped after the 1/(2LD) scaling
  double scaled_regret = 0.0;  // regret of the inner experts run, scaled units
};

/// Materializes the T x M experts table over a rho-net (losses scaled by
/// 1/(2 L D) and clamped to [0,1]), runs the sparse-vector expert switcher,
/// and reports regret against a grid/descent approximation of the continuous
/// minimizer.
OcoReductionResult run_oco_experts_reduction(const std::vector<ConvexLoss>& losses,
                                             const BallDomain& domain,
                                             const OcoReductionConfig& cfg,
                                             RngStream& rng);

/// Max over sampled points of ||grad||^2 - 4 beta loss; nonpositive for the
/// self-bounding smooth families.
double self_bounding_check(const ConvexLoss& loss, const BallDomain& domain,
                           size_t n_points, RngStream& rng);

/// Max relative error between the analytic gradient and central finite
/// differences over sampled points.
double gradient_fd_error(const ConvexLoss& loss, const BallDomain& domain,
                         size_t n_points, RngStream& rng);

/// Approximate argmin of the summed losses: multi-resolution grid for d <= 2,
/// multi-start projected gradient descent above. An oracle for scoring, not
/// part of the private pipeline.
std::vector<double> continuous_minimizer(const std::vector<ConvexLoss>& losses,
                                         const BallDomain& domain,
                                         RngStream& rng);

double total_loss_at(const std::vector<ConvexLoss>& losses,
                     std::span<const double> x);

}  // namespace dpol
