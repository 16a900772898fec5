#include "spotsgd/sgd_lab.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include "spotsgd/errors.hpp"

namespace spotsgd {

namespace {

Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
  }
  return m;
}

Eigen::MatrixXd orthonormal_columns(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian_matrix(rows, cols, rng));
  return qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
}

int sample_index(int S, Rng& rng) {
  return std::min(S - 1, static_cast<int>(rng.uniform() * S));
}

// (1/B) (E_s |g_s|^2 - |grad G|^2), the exact variance of a B-sample mean.
double minibatch_variance(const QuadraticProblem& p, const Eigen::VectorXd& w, int batch) {
  if (batch >= p.samples()) return 0.0;
  const Eigen::VectorXd r = p.X * w - p.y;
  const Eigen::VectorXd row_norms = p.X.rowwise().squaredNorm();
  const double second = (r.array().square() * row_norms.array()).sum() / p.samples();
  const double grad_sq = p.gradient(w).squaredNorm();
  return std::max(0.0, second - grad_sq) / batch;
}

// Per-sample gradients split as x x^T (w - w*) + x r*, so
//   Var(g) <= 2 Var(x x^T e) + 2 Var(x r*)
// and Var(x x^T e) <= lambda |H e|^2 with lambda the top eigenvalue of the
// pencil (K - H^2, H^2), K = E[|x|^2 x x^T]. Returns 2 lambda / batch.
double curvature_variance_ratio(const QuadraticProblem& p, int batch) {
  if (batch >= p.samples()) return 0.0;
  const Eigen::VectorXd row_norms = p.X.rowwise().squaredNorm();
  const Eigen::MatrixXd K = p.X.transpose() * row_norms.asDiagonal() * p.X / p.samples();
  const Eigen::MatrixXd H2 = p.hessian * p.hessian;
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(K - H2, H2, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw CheckFailed("variance eigenproblem failed");
  return 2.0 * std::max(0.0, es.eigenvalues().maxCoeff()) / batch;
}

}  // namespace

double QuadraticProblem::objective(const Eigen::VectorXd& w) const {
  return 0.5 * (X * w - y).squaredNorm() / samples();
}

Eigen::VectorXd QuadraticProblem::gradient(const Eigen::VectorXd& w) const {
  return X.transpose() * (X * w - y) / samples();
}

double QuadraticProblem::gap(const Eigen::VectorXd& w) const {
  const Eigen::VectorXd e = w - w_star;
  return 0.5 * e.dot(hessian * e);
}

QuadraticProblem make_problem(int d, int S, double condition, std::uint64_t seed, double noise) {
  if (d < 1) throw std::invalid_argument("dimension must be >= 1");
  if (S < d) throw std::invalid_argument("sample count must be >= dimension");
  if (!(condition >= 1.0)) throw std::invalid_argument("condition number must be >= 1");
  if (!(noise >= 0.0)) throw std::invalid_argument("label noise must be non-negative");
  Rng rng(seed);
  Eigen::VectorXd lambda(d);
  for (int i = 0; i < d; ++i) {
    lambda(i) = d == 1 ? 1.0 : std::pow(condition, static_cast<double>(i) / (d - 1));
  }
  const Eigen::MatrixXd Q = orthonormal_columns(S, d, rng);
  const Eigen::MatrixXd V = orthonormal_columns(d, d, rng);

  QuadraticProblem p;
  p.X = std::sqrt(static_cast<double>(S)) * Q * lambda.cwiseSqrt().asDiagonal() * V.transpose();
  Eigen::VectorXd w_true(d);
  for (int i = 0; i < d; ++i) w_true(i) = rng.normal();
  p.y = p.X * w_true;
  for (int s = 0; s < S; ++s) p.y(s) += noise * rng.normal();

  p.hessian = p.X.transpose() * p.X / S;
  p.w_star = p.hessian.ldlt().solve(p.X.transpose() * p.y / S);
  p.G_star = p.objective(p.w_star);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(p.hessian, Eigen::EigenvaluesOnly);
  p.lambda_min = eig.eigenvalues().minCoeff();
  p.lambda_max = eig.eigenvalues().maxCoeff();
  p.w0 = Eigen::VectorXd::Zero(d);
  return p;
}

Eigen::VectorXd minibatch_gradient(const QuadraticProblem& p, const Eigen::VectorXd& w, int batch, Rng& rng) {
  if (batch < 1) throw std::invalid_argument("batch size must be >= 1");
  if (batch >= p.samples()) return p.gradient(w);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(p.dim());
  for (int b = 0; b < batch; ++b) {
    const int s = sample_index(p.samples(), rng);
    g.noalias() += p.X.row(s).transpose() * (p.X.row(s).dot(w) - p.y(s));
  }
  return g / batch;
}

Eigen::VectorXd averaged_gradient(const QuadraticProblem& p, const Eigen::VectorXd& w, int y, int batch, Rng& rng) {
  if (y < 1) throw std::invalid_argument("active worker count must be >= 1");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(p.dim());
  for (int i = 0; i < y; ++i) g += minibatch_gradient(p, w, batch, rng);
  return g / y;
}

ConstantEstimate estimate_constants(const QuadraticProblem& p, double alpha, int batch, int probes, std::uint64_t seed,
                                    double safety) {
  if (batch < 1) throw std::invalid_argument("batch size must be >= 1");
  if (probes < 2) throw std::invalid_argument("at least two probes are required");
  if (!(safety >= 1.0)) throw std::invalid_argument("safety factor must be >= 1");
  ConstantEstimate est;
  est.batch = batch;
  est.probes = probes;
  est.safety = safety;
  Rng rng(seed);
  const Eigen::VectorXd span = p.w0 - p.w_star;
  const double jitter = 0.1 * span.norm() / std::sqrt(static_cast<double>(p.dim()));
  std::vector<std::pair<double, double>> probe_values;
  for (int k = 0; k < probes; ++k) {
    const double t = static_cast<double>(k) / (probes - 1);
    Eigen::VectorXd w = p.w_star + t * span;
    for (int i = 0; i < p.dim(); ++i) w(i) += jitter * rng.normal();
    const double v = minibatch_variance(p, w, batch);
    if (!std::isfinite(v)) throw CheckFailed("non-finite gradient variance at probe " + std::to_string(k));
    est.max_variance = std::max(est.max_variance, v);
    probe_values.emplace_back(v, p.gradient(w).squaredNorm());
  }
  SgdConstants& c = est.constants;
  c.L = p.lambda_max;
  c.c = p.lambda_min;
  c.mu = c.mu_G = 1.0;
  c.M_V = safety * curvature_variance_ratio(p, batch);
  c.M_G = c.M_V + 1.0;
  // Probed variance in excess of the multiplicative part, floored by the
  // additive part of the split at w*.
  double additive = 2.0 * minibatch_variance(p, p.w_star, batch);
  for (const auto& [v, grad_sq] : probe_values) additive = std::max(additive, v - c.M_V * grad_sq);
  c.M = safety * additive;
  c.alpha = alpha > 0.0 ? alpha : 0.9 * c.mu / (c.L * c.M_G);
  c.G0 = p.gap(p.w0);
  c.validate();
  return est;
}

TrainRecord run_sync_sgd(const QuadraticProblem& p, const std::vector<int>& schedule, double alpha, int batch,
                         std::uint64_t seed, const SgdRunOptions& options) {
  if (!(alpha > 0.0)) throw std::invalid_argument("step size must be positive");
  const bool provisioned = options.divisor == UpdateDivisor::provisioned;
  if (provisioned && options.provisioned.size() != schedule.size()) {
    throw std::invalid_argument("provisioned counts must cover every iteration");
  }
  Rng rng(seed);
  TrainRecord rec;
  rec.active = schedule;
  rec.gap.reserve(schedule.size() + 1);
  rec.charge.reserve(schedule.size());
  Eigen::VectorXd w = p.w0;
  rec.gap.push_back(p.gap(w));
  double charge = 0.0;
  for (std::size_t j = 0; j < schedule.size(); ++j) {
    const int y = schedule[j];
    if (y < 1) throw std::invalid_argument("schedule entries must be >= 1");
    Eigen::VectorXd g = Eigen::VectorXd::Zero(p.dim());
    for (int i = 0; i < y; ++i) g += minibatch_gradient(p, w, batch, rng);
    const double divisor = provisioned ? options.provisioned[j] : y;
    w -= (alpha / divisor) * g;
    const double gap = p.gap(w);
    if (!(gap <= options.divergence_limit)) {
      throw CheckFailed("SGD diverged at iteration " + std::to_string(j + 1) + ": gap " + std::to_string(gap) +
                        " with step size " + std::to_string(alpha));
    }
    rec.gap.push_back(gap);
    charge += y;
    rec.charge.push_back(charge);
  }
  return rec;
}

BoundReport validate_bound(const QuadraticProblem& p, const SgdConstants& k, const std::vector<int>& schedule,
                           int batch, int replications, std::uint64_t seed, const SgdRunOptions& options) {
  if (replications < 2) throw std::invalid_argument("at least two replications are required");
  k.validate();
  const std::size_t steps = schedule.size() + 1;
  std::vector<std::vector<double>> gaps(static_cast<std::size_t>(replications));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(replications));
#pragma omp parallel for schedule(dynamic)
  for (int r = 0; r < replications; ++r) {
    try {
      Rng sub = Rng::substream(seed, static_cast<std::uint64_t>(r));
      gaps[static_cast<std::size_t>(r)] = run_sync_sgd(p, schedule, k.alpha, batch, sub.next(), options).gap;
    } catch (...) {
      errors[static_cast<std::size_t>(r)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  BoundReport rep;
  rep.replications = replications;
  rep.mean_gap.assign(steps, 0.0);
  rep.std_error.assign(steps, 0.0);
  rep.bound.assign(steps, 0.0);
  rep.worst_excess_se = -std::numeric_limits<double>::infinity();
  const double n = replications;
  std::vector<double> inverse;
  inverse.reserve(schedule.size());
  for (std::size_t j = 0; j < steps; ++j) {
    double s1 = 0.0;
    for (const auto& g : gaps) s1 += g[j];
    const double mean = s1 / n;
    double s2 = 0.0;
    for (const auto& g : gaps) s2 += (g[j] - mean) * (g[j] - mean);
    const double se = std::sqrt(s2 / (n - 1.0) / n);
    if (j > 0) inverse.push_back(1.0 / schedule[j - 1]);
    const double bound = error_bound(k, inverse);
    rep.mean_gap[j] = mean;
    rep.std_error[j] = se;
    rep.bound[j] = bound;
    // Rounding slack: at j = 0 every replication sits exactly at G0.
    const double excess = std::abs(mean - bound) <= 1e-12 * std::abs(bound) ? 0.0 : mean - bound;
    if (excess > 3.0 * se) rep.valid = false;
    const double in_se = se > 0.0 ? excess / se : (excess > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    rep.worst_excess_se = std::max(rep.worst_excess_se, in_se);
  }
  rep.terminal_mean_gap = rep.mean_gap.back();
  rep.terminal_bound = rep.bound.back();
  return rep;
}

}  // namespace spotsgd
