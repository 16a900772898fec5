#pragma once

#include <cstdint>
#include <functional>
#include <span>

namespace spotsgd::numerics {

/// H_m = sum_{k=1}^{m} 1/k. Exact summation up to 10^6 terms, asymptotic
/// expansion beyond.
double harmonic_number(std::int64_t m);

/// Generalised harmonic number psi(x + 1) + gamma for real x >= 0.
double harmonic_number(double x);

/// Standard normal CDF, 0.5 * erfc(-x / sqrt(2)).
double normal_cdf(double x);
double normal_pdf(double x);

/// Adaptive Gauss-Kronrod (15 point) integration of f over [a, b].
double integrate(const std::function<double(double)>& f, double a, double b, double tolerance = 1e-10);

/// Smallest x in [lo, hi] with pred(x) true, for a predicate that is false
/// then true along the interval. Stops when hi - lo <= tolerance.
double bisect_threshold(const std::function<bool(double)>& pred, double lo, double hi, double tolerance,
                        int max_iterations = 400);

struct GoldenSectionResult {
  double x;
  double value;
  int iterations;
};

/// Golden-section minimisation of a unimodal f on [lo, hi].
GoldenSectionResult golden_section_minimize(const std::function<double(double)>& f, double lo, double hi,
                                            double tolerance, int max_iterations = 500);

/// Pairwise (cascade) summation.
double pairwise_sum(std::span<const double> values);

}  // namespace spotsgd::numerics
