#include "spotsgd/price_model.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "spotsgd/errors.hpp"
#include "spotsgd/numerics.hpp"

namespace spotsgd {

std::string_view to_string(PriceKind kind) {
  switch (kind) {
    case PriceKind::uniform:
      return "uniform";
    case PriceKind::truncated_gaussian:
      return "truncated-gaussian";
    case PriceKind::empirical:
      return "empirical";
  }
  return "unknown";
}

void PriceTrace::validate() const {
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!(records[i].price > 0.0)) throw std::invalid_argument("trace prices must be strictly positive");
    if (i > 0 && records[i].timestamp <= records[i - 1].timestamp) {
      throw std::invalid_argument("trace timestamps must be strictly increasing");
    }
  }
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

int parse_fixed_digits(std::string_view text, std::size_t pos, std::size_t count) {
  if (pos + count > text.size()) throw std::invalid_argument("truncated timestamp");
  int value = 0;
  for (std::size_t i = pos; i < pos + count; ++i) {
    if (text[i] < '0' || text[i] > '9') throw std::invalid_argument("non-digit in timestamp");
    value = value * 10 + (text[i] - '0');
  }
  return value;
}

}  // namespace

std::int64_t parse_timestamp(std::string_view text) {
  text = trim(text);
  if (text.empty()) throw std::invalid_argument("empty timestamp");
  std::int64_t epoch = 0;
  if (parse_number(text, epoch)) return epoch;

  // YYYY-MM-DDTHH:MM:SS[.fff][Z|+HH:MM|-HH:MM]
  if (text.size() < 19 || text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') ||
      text[13] != ':' || text[16] != ':') {
    throw std::invalid_argument("timestamp is neither epoch seconds nor ISO-8601: '" + std::string(text) + "'");
  }
  using namespace std::chrono;
  const year_month_day ymd{year{parse_fixed_digits(text, 0, 4)},
                           month{static_cast<unsigned>(parse_fixed_digits(text, 5, 2))},
                           day{static_cast<unsigned>(parse_fixed_digits(text, 8, 2))}};
  if (!ymd.ok()) throw std::invalid_argument("invalid calendar date in timestamp");
  const int hh = parse_fixed_digits(text, 11, 2);
  const int mm = parse_fixed_digits(text, 14, 2);
  const int ss = parse_fixed_digits(text, 17, 2);
  if (hh > 23 || mm > 59 || ss > 60) throw std::invalid_argument("invalid time of day in timestamp");

  std::size_t pos = 19;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;  // sub-second part dropped
  }
  std::int64_t offset = 0;
  if (pos < text.size()) {
    const char sign = text[pos];
    if (sign == 'Z' && pos + 1 == text.size()) {
      offset = 0;
    } else if ((sign == '+' || sign == '-') && pos + 6 == text.size() && text[pos + 3] == ':') {
      offset = (parse_fixed_digits(text, pos + 1, 2) * 3600 + parse_fixed_digits(text, pos + 4, 2) * 60) *
               (sign == '+' ? 1 : -1);
    } else {
      throw std::invalid_argument("invalid timezone suffix in timestamp");
    }
  }
  const auto days = sys_days{ymd}.time_since_epoch().count();
  return static_cast<std::int64_t>(days) * 86400 + hh * 3600 + mm * 60 + ss - offset;
}

PriceTrace parse_trace_csv(std::istream& in) {
  PriceTrace trace;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = trim(line);
    if (row.empty()) continue;
    const auto comma = row.find(',');
    if (comma == std::string_view::npos || row.find(',', comma + 1) != std::string_view::npos) {
      throw TraceParseError("line " + std::to_string(line_no) + ": expected exactly two comma-separated fields",
                            line_no);
    }
    const std::string_view first = trim(row.substr(0, comma));
    const std::string_view second = trim(row.substr(comma + 1));
    if (!header_seen) {
      if (first != "timestamp" || second != "price") {
        throw TraceParseError("line " + std::to_string(line_no) + ": expected header 'timestamp,price'", line_no);
      }
      header_seen = true;
      continue;
    }
    PriceRecord record{};
    try {
      record.timestamp = parse_timestamp(first);
    } catch (const std::invalid_argument& e) {
      throw TraceParseError("line " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
    if (!parse_number(second, record.price) || !std::isfinite(record.price)) {
      throw TraceParseError("line " + std::to_string(line_no) + ": invalid price '" + std::string(second) + "'",
                            line_no);
    }
    if (!(record.price > 0.0)) {
      throw TraceParseError("line " + std::to_string(line_no) + ": price must be strictly positive", line_no);
    }
    trace.records.push_back(record);
  }
  if (!header_seen) throw TraceParseError("empty trace file (missing 'timestamp,price' header)", 0);

  std::stable_sort(trace.records.begin(), trace.records.end(),
                   [](const PriceRecord& a, const PriceRecord& b) { return a.timestamp < b.timestamp; });
  for (std::size_t i = 1; i < trace.records.size(); ++i) {
    if (trace.records[i].timestamp == trace.records[i - 1].timestamp) {
      throw TraceParseError("duplicate timestamp " + std::to_string(trace.records[i].timestamp), 0);
    }
  }
  return trace;
}

PriceTrace load_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TraceParseError("cannot open trace file " + path.string(), 0);
  return parse_trace_csv(in);
}

// ---------------------------------------------------------------------------

PriceModel PriceModel::uniform(double lower, double upper) {
  if (!(lower < upper) || !std::isfinite(lower) || !std::isfinite(upper)) {
    throw std::invalid_argument("uniform price model requires lower < upper");
  }
  PriceModel m;
  m.kind_ = PriceKind::uniform;
  m.lower_ = lower;
  m.upper_ = upper;
  return m;
}

PriceModel PriceModel::truncated_gaussian(double mean, double variance, double lower, double upper) {
  if (!(variance > 0.0)) throw std::invalid_argument("gaussian price model requires variance > 0");
  if (!(lower < upper)) throw std::invalid_argument("gaussian price model requires lower < upper");
  PriceModel m;
  m.kind_ = PriceKind::truncated_gaussian;
  m.lower_ = lower;
  m.upper_ = upper;
  m.mean_ = mean;
  m.variance_ = variance;
  m.sigma_ = std::sqrt(variance);
  m.cdf_at_lower_ = numerics::normal_cdf((lower - mean) / m.sigma_);
  m.cdf_mass_ = numerics::normal_cdf((upper - mean) / m.sigma_) - m.cdf_at_lower_;
  if (!(m.cdf_mass_ > 0.0)) throw std::invalid_argument("gaussian price model has no mass on [lower, upper]");
  return m;
}

PriceModel PriceModel::empirical(std::vector<double> samples) {
  if (samples.empty()) throw std::invalid_argument("empirical price model requires at least one sample");
  for (double s : samples) {
    if (!std::isfinite(s)) throw std::invalid_argument("empirical price samples must be finite");
  }
  std::sort(samples.begin(), samples.end());
  PriceModel m;
  m.kind_ = PriceKind::empirical;
  m.lower_ = samples.front() - kEmpiricalFloorOffset;
  m.upper_ = samples.back();
  m.prefix_sums_.resize(samples.size() + 1, 0.0);
  for (std::size_t i = 0; i < samples.size(); ++i) m.prefix_sums_[i + 1] = m.prefix_sums_[i] + samples[i];
  m.samples_ = std::move(samples);
  return m;
}

double PriceModel::gaussian_raw_cdf(double p) const { return numerics::normal_cdf((p - mean_) / sigma_); }

double PriceModel::cdf(double p) const {
  if (p <= lower_) return 0.0;
  if (p >= upper_) return 1.0;
  switch (kind_) {
    case PriceKind::uniform:
      return (p - lower_) / (upper_ - lower_);
    case PriceKind::truncated_gaussian:
      return std::clamp((gaussian_raw_cdf(p) - cdf_at_lower_) / cdf_mass_, 0.0, 1.0);
    case PriceKind::empirical: {
      const auto it = std::upper_bound(samples_.begin(), samples_.end(), p);
      return static_cast<double>(it - samples_.begin()) / static_cast<double>(samples_.size());
    }
  }
  return 0.0;
}

double PriceModel::pdf(double p) const {
  if (kind_ == PriceKind::empirical) throw std::domain_error("empirical price model has no density");
  if (p < lower_ || p > upper_) return 0.0;
  if (kind_ == PriceKind::uniform) return 1.0 / (upper_ - lower_);
  return numerics::normal_pdf((p - mean_) / sigma_) / (sigma_ * cdf_mass_);
}

double PriceModel::quantile(double u) const {
  if (!(u >= 0.0 && u <= 1.0)) throw std::invalid_argument("quantile level must lie in [0, 1]");
  if (u == 0.0) return lower_;
  switch (kind_) {
    case PriceKind::uniform:
      return u >= 1.0 ? upper_ : lower_ + u * (upper_ - lower_);
    case PriceKind::truncated_gaussian: {
      if (u >= 1.0) return upper_;
      // Closed-form inverse through erfc_inv, then polished by single ulps so
      // the result is the smallest double with F(x) >= u.
      const double level = cdf_at_lower_ + u * cdf_mass_;
      double x = mean_ - std::numbers::sqrt2 * sigma_ * boost::math::erfc_inv(2.0 * level);
      x = std::clamp(x, lower_, upper_);
      for (int i = 0; i < 64 && cdf(x) < u; ++i) x = std::nextafter(x, upper_);
      for (int i = 0; i < 64 && x > lower_; ++i) {
        const double prev = std::nextafter(x, lower_);
        if (cdf(prev) < u) break;
        x = prev;
      }
      return x;
    }
    case PriceKind::empirical: {
      // Smallest k with k/N >= u, evaluated exactly the way cdf() divides.
      const auto n = static_cast<std::int64_t>(samples_.size());
      const double dn = static_cast<double>(n);
      auto k = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::ceil(u * dn)), 1, n);
      while (k > 1 && static_cast<double>(k - 1) / dn >= u) --k;
      while (k < n && static_cast<double>(k) / dn < u) ++k;
      return samples_[static_cast<std::size_t>(k - 1)];
    }
  }
  return upper_;
}

double PriceModel::mean() const {
  switch (kind_) {
    case PriceKind::uniform:
      return 0.5 * (lower_ + upper_);
    case PriceKind::truncated_gaussian: {
      const double a = (lower_ - mean_) / sigma_;
      const double b = (upper_ - mean_) / sigma_;
      return mean_ + sigma_ * (numerics::normal_pdf(a) - numerics::normal_pdf(b)) / cdf_mass_;
    }
    case PriceKind::empirical:
      return prefix_sums_.back() / static_cast<double>(samples_.size());
  }
  return 0.0;
}

double PriceModel::partial_expectation(double a, double b) const {
  a = std::max(a, lower_);
  b = std::min(b, upper_);
  if (!(b > a)) return 0.0;
  switch (kind_) {
    case PriceKind::uniform:
      return (b * b - a * a) / (2.0 * (upper_ - lower_));
    case PriceKind::truncated_gaussian:
      return numerics::integrate([this](double p) { return p * pdf(p); }, a, b, 1e-12);
    case PriceKind::empirical: {
      const auto lo = std::upper_bound(samples_.begin(), samples_.end(), a) - samples_.begin();
      const auto hi = std::upper_bound(samples_.begin(), samples_.end(), b) - samples_.begin();
      return (prefix_sums_[static_cast<std::size_t>(hi)] - prefix_sums_[static_cast<std::size_t>(lo)]) /
             static_cast<double>(samples_.size());
    }
  }
  return 0.0;
}

double PriceModel::mean_price_below(double b) const {
  const double fb = cdf(b);
  if (!(fb > 0.0)) {
    throw InfeasibleBid("bid " + std::to_string(b) + " is at or below the price floor; F(b) = 0", b);
  }
  b = std::min(b, upper_);
  switch (kind_) {
    case PriceKind::uniform:
      return 0.5 * (lower_ + b);
    case PriceKind::truncated_gaussian:
      return lower_ + numerics::integrate([this, fb](double p) { return 1.0 - cdf(p) / fb; }, lower_, b, 1e-10);
    case PriceKind::empirical: {
      const auto k = std::upper_bound(samples_.begin(), samples_.end(), b) - samples_.begin();
      return prefix_sums_[static_cast<std::size_t>(k)] / static_cast<double>(k);
    }
  }
  return 0.0;
}

PriceModel make_uniform(double lower, double upper) { return PriceModel::uniform(lower, upper); }

PriceModel make_truncated_gaussian(double mean, double variance, double lower, double upper) {
  return PriceModel::truncated_gaussian(mean, variance, lower, upper);
}

PriceModel fit_empirical(const PriceTrace& trace) {
  if (trace.records.empty()) throw std::invalid_argument("cannot fit a price model to an empty trace");
  std::vector<double> samples;
  samples.reserve(trace.records.size());
  for (const auto& r : trace.records) samples.push_back(r.price);
  return PriceModel::empirical(std::move(samples));
}

}  // namespace spotsgd
