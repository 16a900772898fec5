#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "spotsgd/rng.hpp"

namespace spotsgd {

enum class PriceKind { uniform, truncated_gaussian, empirical };

std::string_view to_string(PriceKind kind);

struct PriceRecord {
  std::int64_t timestamp;  // seconds since epoch
  double price;            // currency / hour
};

struct PriceTrace {
  std::vector<PriceRecord> records;  // strictly increasing timestamps
  std::string instance_type;
  std::string zone;

  void validate() const;
};

/// Malformed trace input. `line()` is 1-based and 0 when not line-specific.
class TraceParseError : public std::runtime_error {
 public:
  TraceParseError(const std::string& what, std::size_t line) : std::runtime_error(what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Parses `timestamp,price` CSV. Timestamps are integer epoch seconds or
/// ISO-8601 (`YYYY-MM-DDTHH:MM:SS[Z|+HH:MM]`). Rows are sorted by timestamp;
/// duplicate timestamps are rejected.
PriceTrace parse_trace_csv(std::istream& in);
PriceTrace load_trace_csv(const std::filesystem::path& path);

/// Parses one ISO-8601 timestamp or integer epoch into epoch seconds.
std::int64_t parse_timestamp(std::string_view text);

/// Spot-price distribution on a bounded support [lower, upper].
///
/// The value is immutable once built and can be shared across threads.
/// F(lower) = 0 by convention. For the empirical model the lower bound is
/// min(sample) - kEmpiricalFloorOffset so that the floor carries no mass.
class PriceModel {
 public:
  static constexpr double kEmpiricalFloorOffset = 1e-9;

  static PriceModel uniform(double lower, double upper);
  static PriceModel truncated_gaussian(double mean, double variance, double lower, double upper);
  static PriceModel empirical(std::vector<double> samples);

  PriceKind kind() const noexcept { return kind_; }
  double lower() const noexcept { return lower_; }
  double upper() const noexcept { return upper_; }

  // Gaussian parameters before truncation (0 for other kinds).
  double gaussian_mean() const noexcept { return mean_; }
  double gaussian_variance() const noexcept { return variance_; }

  /// Sorted samples of the empirical model (empty otherwise).
  const std::vector<double>& samples() const noexcept { return samples_; }

  double cdf(double p) const;
  /// Density; for the empirical model this is undefined and throws.
  double pdf(double p) const;
  /// Generalised inverse: smallest p with F(p) >= u. quantile(0) = lower.
  double quantile(double u) const;

  /// Distribution mean.
  double mean() const;

  /// Integral of p f(p) over (a, b] (a sum over samples for empirical).
  double partial_expectation(double a, double b) const;

  /// Expected price given price <= b:
  ///   lower + int_lower^b (1 - F(p)/F(b)) dp.
  double mean_price_below(double b) const;

  /// Inverse-transform draw.
  double sample(Rng& rng) const { return quantile(rng.uniform_open_closed()); }

 private:
  PriceModel() = default;

  double gaussian_raw_cdf(double p) const;

  PriceKind kind_ = PriceKind::uniform;
  double lower_ = 0.0;
  double upper_ = 1.0;
  double mean_ = 0.0;
  double variance_ = 0.0;
  double sigma_ = 0.0;
  double cdf_at_lower_ = 0.0;  // raw Gaussian CDF at the bounds
  double cdf_mass_ = 1.0;
  std::vector<double> samples_;
  std::vector<double> prefix_sums_;  // prefix_sums_[k] = sum of the first k samples
};

PriceModel make_uniform(double lower, double upper);
PriceModel make_truncated_gaussian(double mean, double variance, double lower, double upper);
PriceModel fit_empirical(const PriceTrace& trace);

inline double mean_price_below(const PriceModel& model, double b) { return model.mean_price_below(b); }
inline double sample_price(const PriceModel& model, Rng& rng) { return model.sample(rng); }

}  // namespace spotsgd
