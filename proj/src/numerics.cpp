#include "spotsgd/numerics.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/digamma.hpp>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace spotsgd::numerics {

double harmonic_number(std::int64_t m) {
  if (m < 0) throw std::invalid_argument("harmonic_number: negative index");
  if (m <= 1'000'000) {
    // Summing from the small terms up keeps the rounding error O(eps log m).
    double h = 0.0;
    for (std::int64_t k = m; k >= 1; --k) h += 1.0 / static_cast<double>(k);
    return h;
  }
  const double x = static_cast<double>(m);
  const double x2 = x * x;
  return std::log(x) + std::numbers::egamma + 1.0 / (2.0 * x) - 1.0 / (12.0 * x2) + 1.0 / (120.0 * x2 * x2);
}

double harmonic_number(double x) {
  if (x < 0.0) throw std::invalid_argument("harmonic_number: negative argument");
  if (x == std::floor(x) && x <= 1e6) return harmonic_number(static_cast<std::int64_t>(x));
  return boost::math::digamma(x + 1.0) + std::numbers::egamma;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double integrate(const std::function<double(double)>& f, double a, double b, double tolerance) {
  if (a == b) return 0.0;
  double error = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 30, tolerance, &error);
}

double bisect_threshold(const std::function<bool(double)>& pred, double lo, double hi, double tolerance,
                        int max_iterations) {
  if (pred(lo)) return lo;
  if (!pred(hi)) throw std::domain_error("bisect_threshold: predicate false on the whole interval");
  for (int i = 0; i < max_iterations && hi - lo > tolerance; ++i) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    if (pred(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

GoldenSectionResult golden_section_minimize(const std::function<double(double)>& f, double lo, double hi,
                                            double tolerance, int max_iterations) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = f(c);
  double fd = f(d);
  int it = 0;
  for (; it < max_iterations && hi - lo > tolerance; ++it) {
    if (fc <= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = f(d);
    }
  }
  // The bracket ends are candidates too: a monotone objective is minimised there.
  GoldenSectionResult best{c, fc, it};
  if (fd < best.value) best = {d, fd, it};
  const double flo = f(lo);
  if (flo <= best.value) best = {lo, flo, it};
  const double fhi = f(hi);
  if (fhi < best.value) best = {hi, fhi, it};
  return best;
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

}  // namespace spotsgd::numerics
