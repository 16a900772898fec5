#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace spotsgd {

/// Constants of the strongly convex SGD analysis. All error quantities are
/// optimality gaps G(w) - G*; `G0` is the expected initial gap.
struct SgdConstants {
  double L = 1.0;      // Lipschitz smoothness
  double c = 1.0;      // strong convexity, 0 < c <= L
  double mu = 1.0;     // lower first-moment scalar
  double mu_G = 1.0;   // upper first-moment scalar, >= mu
  double M = 0.0;      // gradient-variance offset
  double M_V = 0.0;    // variance scalar
  double M_G = 1.0;    // M_V + mu_G^2
  double alpha = 0.1;  // step size
  double G0 = 1.0;     // E[G(w_0)] - G*

  /// Contraction factor 1 - alpha c mu.
  double beta() const noexcept { return 1.0 - alpha * c * mu; }
  /// alpha^2 L M / 2, the per-iteration noise injection per unit E[1/y].
  double noise_coefficient() const noexcept { return 0.5 * alpha * alpha * L * M; }
  /// alpha L M / (2 c mu), the asymptotic error per unit E[1/y].
  double noise_floor_coefficient() const noexcept { return alpha * L * M / (2.0 * c * mu); }

  /// Throws std::invalid_argument when a precondition of the bound fails,
  /// including 0 < alpha < mu / (L M_G) and beta in (0, 1).
  void validate() const;
};

/// E[1/y_j] for j = 1..J, each value in (0, 1].
struct InverseMomentSeq {
  std::vector<double> values;

  static InverseMomentSeq constant(double e, std::int64_t J);
  void validate() const;
};

/// beta^J G0 + (alpha^2 L M / 2) sum_j beta^(J-j) e_j, accumulated as the
/// recursion b_j = beta b_{j-1} + noise e_j starting from G0.
double error_bound(const SgdConstants& k, std::span<const double> inverse_moments);
inline double error_bound(const SgdConstants& k, const InverseMomentSeq& e) { return error_bound(k, e.values); }

/// The bound for a constant inverse moment e over J iterations, in closed form.
double error_bound_constant(const SgdConstants& k, double e, std::int64_t J);

/// Q(eps) = 2 c mu (eps - beta^J G0) / (alpha L M (1 - beta^J)); throws
/// ErrorFloor (carrying beta^J G0) when eps <= beta^J G0.
double q_epsilon(const SgdConstants& k, double epsilon, std::int64_t J);

/// Smallest J with error_bound_constant(k, e, J) <= eps. Returns 0 when
/// eps >= G0; throws ErrorFloor when eps is at or below the noise floor.
std::int64_t iterations_for_error(const SgdConstants& k, double epsilon, double e);

/// Whether E[1/y] >= 1 / E[y] for a pmf over positive worker counts given as
/// (count, probability) pairs. The pmf must sum to one.
bool jensen_penalty_check(std::span<const std::pair<int, double>> pmf);

}  // namespace spotsgd
