#include "spotsgd/convergence.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "spotsgd/errors.hpp"

namespace spotsgd {

void SgdConstants::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("invalid SGD constants: ") + what);
  };
  require(L > 0.0, "L must be positive");
  require(c > 0.0 && c <= L, "c must satisfy 0 < c <= L");
  require(mu > 0.0, "mu must be positive");
  require(mu_G >= mu, "mu_G must be >= mu");
  require(M >= 0.0 && M_V >= 0.0, "M and M_V must be non-negative");
  require(std::abs(M_G - (M_V + mu_G * mu_G)) <= 1e-9 * std::max(1.0, M_G), "M_G must equal M_V + mu_G^2");
  require(alpha > 0.0 && alpha < mu / (L * M_G), "step size must satisfy 0 < alpha < mu / (L M_G)");
  require(G0 >= 0.0, "G0 must be non-negative");
  const double b = beta();
  require(b > 0.0 && b < 1.0, "beta = 1 - alpha c mu must lie in (0, 1)");
}

InverseMomentSeq InverseMomentSeq::constant(double e, std::int64_t J) {
  if (J < 0) throw std::invalid_argument("iteration count must be non-negative");
  return InverseMomentSeq{std::vector<double>(static_cast<std::size_t>(J), e)};
}

void InverseMomentSeq::validate() const {
  for (double v : values) {
    if (!(v > 0.0 && v <= 1.0)) throw std::invalid_argument("inverse moments must lie in (0, 1]");
  }
}

double error_bound(const SgdConstants& k, std::span<const double> inverse_moments) {
  const double beta = k.beta();
  // Accumulate from j = J down to 1 so the weight beta^(J-j) only shrinks.
  double weighted = 0.0;
  double scale = 1.0;
  for (std::size_t j = inverse_moments.size(); j-- > 0;) {
    weighted += scale * inverse_moments[j];
    scale *= beta;
    if (scale == 0.0) break;  // remaining terms underflow to zero
  }
  const double decay = std::pow(beta, static_cast<double>(inverse_moments.size()));
  return decay * k.G0 + k.noise_coefficient() * weighted;
}

double error_bound_constant(const SgdConstants& k, double e, std::int64_t J) {
  if (J < 0) throw std::invalid_argument("iteration count must be non-negative");
  const double decay = std::pow(k.beta(), static_cast<double>(J));
  // noise * e * sum_{i<J} beta^i = floor * e * (1 - beta^J)
  return decay * k.G0 + k.noise_floor_coefficient() * e * (1.0 - decay);
}

double q_epsilon(const SgdConstants& k, double epsilon, std::int64_t J) {
  if (J < 1) throw std::invalid_argument("q_epsilon requires J >= 1");
  const double decay = std::pow(k.beta(), static_cast<double>(J));
  const double deterministic = decay * k.G0;
  if (!(epsilon > deterministic)) {
    throw ErrorFloor("target error " + std::to_string(epsilon) + " is not above beta^J G0 = " +
                         std::to_string(deterministic) + " for J = " + std::to_string(J),
                     deterministic);
  }
  const double floor = k.noise_floor_coefficient();
  if (floor == 0.0) return std::numeric_limits<double>::infinity();
  return (epsilon - deterministic) / (floor * (1.0 - decay));
}

std::int64_t iterations_for_error(const SgdConstants& k, double epsilon, double e) {
  if (epsilon >= k.G0) return 0;
  const double noise = k.noise_floor_coefficient() * e;
  if (!(epsilon > noise)) {
    throw ErrorFloor("target error " + std::to_string(epsilon) + " is at or below the asymptotic bound " +
                         std::to_string(noise),
                     noise);
  }
  const double beta = k.beta();
  const double ratio = (epsilon - noise) / (k.G0 - noise);
  const double estimate = std::ceil(std::log(ratio) / std::log(beta));
  auto J = static_cast<std::int64_t>(std::max(0.0, estimate));
  // The logarithm can land one ulp on either side of an integer.
  while (J > 0 && error_bound_constant(k, e, J - 1) <= epsilon) --J;
  while (error_bound_constant(k, e, J) > epsilon) ++J;
  return J;
}

bool jensen_penalty_check(std::span<const std::pair<int, double>> pmf) {
  double mass = 0.0;
  double mean = 0.0;
  double inverse = 0.0;
  for (const auto& [count, p] : pmf) {
    if (count < 1) throw std::invalid_argument("worker counts must be positive");
    if (p < 0.0) throw std::invalid_argument("probabilities must be non-negative");
    mass += p;
    mean += p * count;
    inverse += p / count;
  }
  if (std::abs(mass - 1.0) > 1e-9) throw std::invalid_argument("pmf must sum to one");
  return inverse >= 1.0 / mean * (1.0 - 1e-12);
}

}  // namespace spotsgd
