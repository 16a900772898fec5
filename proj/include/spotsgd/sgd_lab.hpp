#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "spotsgd/convergence.hpp"
#include "spotsgd/rng.hpp"

namespace spotsgd {

/// Least-squares empirical risk G(w) = (1/S) sum_s (x_s . w - y_s)^2 / 2.
struct QuadraticProblem {
  Eigen::MatrixXd X;  // S x d
  Eigen::VectorXd y;
  Eigen::MatrixXd hessian;  // X^T X / S
  Eigen::VectorXd w_star;
  Eigen::VectorXd w0;  // starting point of every run
  double G_star = 0.0;
  double lambda_min = 0.0;
  double lambda_max = 0.0;

  int dim() const { return static_cast<int>(X.cols()); }
  int samples() const { return static_cast<int>(X.rows()); }
  double objective(const Eigen::VectorXd& w) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& w) const;
  /// G(w) - G*, evaluated as (w - w*)^T H (w - w*) / 2.
  double gap(const Eigen::VectorXd& w) const;
};

/// Dataset with Hessian spectrum log-spaced on [1, condition]; X^T X / S has
/// exactly that spectrum. Labels are X w_true plus Gaussian noise.
QuadraticProblem make_problem(int d, int S, double condition, std::uint64_t seed, double noise = 0.5);

/// Mean of `batch` per-sample gradients drawn uniformly with replacement.
/// batch >= S gives the exact full gradient.
Eigen::VectorXd minibatch_gradient(const QuadraticProblem& p, const Eigen::VectorXd& w, int batch, Rng& rng);

/// (1/y) sum of y independent mini-batch gradients.
Eigen::VectorXd averaged_gradient(const QuadraticProblem& p, const Eigen::VectorXd& w, int y, int batch, Rng& rng);

struct ConstantEstimate {
  SgdConstants constants;
  int batch = 1;
  int probes = 0;
  double safety = 1.2;
  double max_variance = 0.0;  // largest exact mini-batch variance over the probes
};

/// L = lambda_max, c = lambda_min, mu = mu_G = 1.
/// M_V = safety * 2 lambda / batch, lambda the top eigenvalue of the pencil
/// (E[|x|^2 x x^T] - H^2, H^2); M_G = M_V + 1.
/// M = safety * max(2 Var(w*), max over probes of Var(w) - M_V |grad G(w)|^2),
/// with Var the exact mini-batch variance. Probes lie along the segment from
/// w0 to w*, jittered. alpha <= 0 picks 0.9 mu / (L M_G). G0 is the gap at w0.
ConstantEstimate estimate_constants(const QuadraticProblem& p, double alpha, int batch, int probes, std::uint64_t seed,
                                    double safety = 1.2);

enum class UpdateDivisor { active, provisioned };

struct TrainRecord {
  std::vector<int> active;   // y_j, j = 1..J
  std::vector<double> gap;   // G(w_j) - G*, j = 0..J
  std::vector<double> charge;  // cumulative worker-iterations
};

struct SgdRunOptions {
  UpdateDivisor divisor = UpdateDivisor::active;
  std::vector<int> provisioned;  // n_j, required for the provisioned divisor
  double divergence_limit = 1e12;
};

/// w_{j+1} = w_j - (alpha / y_j) sum over the y_j active workers of their
/// mini-batch gradients. Throws CheckFailed if the gap exceeds the limit.
TrainRecord run_sync_sgd(const QuadraticProblem& p, const std::vector<int>& schedule, double alpha, int batch,
                         std::uint64_t seed, const SgdRunOptions& options = {});

struct BoundReport {
  std::vector<double> mean_gap;   // j = 0..J
  std::vector<double> std_error;
  std::vector<double> bound;
  int replications = 0;
  bool valid = true;               // mean <= bound + 3 SE at every j
  double worst_excess_se = 0.0;    // max over j of (mean - bound) / SE (<= 0 when below)
  double terminal_mean_gap = 0.0;
  double terminal_bound = 0.0;
};

/// Replicated runs (parallel, deterministic) compared with the bound
/// evaluated at e_j = 1/y_j.
BoundReport validate_bound(const QuadraticProblem& p, const SgdConstants& k, const std::vector<int>& schedule,
                           int batch, int replications, std::uint64_t seed, const SgdRunOptions& options = {});

}  // namespace spotsgd
