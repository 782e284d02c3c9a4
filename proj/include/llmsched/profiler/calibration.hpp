#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "llmsched/core/errors.hpp"

namespace llmsched {

// Average per-token decoding latency l(b) in milliseconds for b = 1..B.
class CalibrationProfile {
 public:
  CalibrationProfile() : latency_ms_{1.0} {}

  explicit CalibrationProfile(std::vector<double> latency_ms) : latency_ms_(std::move(latency_ms)) {
    if (latency_ms_.empty()) throw ConfigError("calibration table is empty");
    for (std::size_t i = 0; i < latency_ms_.size(); ++i) {
      if (!(latency_ms_[i] > 0.0)) throw ConfigError("decoding latency must be positive");
      if (i > 0 && latency_ms_[i] < latency_ms_[i - 1]) throw ConfigError("decoding latency must be non-decreasing in batch size");
    }
  }

  // l(b) = base * (1 + slope * (b - 1)) for b = 1..max_batch
  static CalibrationProfile linear(int max_batch, double base_ms, double slope) {
    std::vector<double> l;
    for (int b = 1; b <= max_batch; ++b) l.push_back(base_ms * (1.0 + slope * (b - 1)));
    return CalibrationProfile(std::move(l));
  }

  int max_batch() const { return static_cast<int>(latency_ms_.size()); }
  const std::vector<double>& table() const { return latency_ms_; }

  double latency(int b) const {
    if (b < 1 || b > max_batch()) throw RangeError("batch size " + std::to_string(b) + " outside calibration profile");
    return latency_ms_[static_cast<std::size_t>(b - 1)];
  }

  // Linear interpolation for time-averaged (fractional) batch sizes.
  double latency(double b) const {
    if (!(b >= 1.0) || b > static_cast<double>(max_batch()) + 1e-9)
      throw RangeError("batch size " + std::to_string(b) + " outside calibration profile");
    const double lo = std::floor(b);
    const int i = static_cast<int>(lo);
    if (i >= max_batch()) return latency_ms_.back();
    const double frac = b - lo;
    return latency_ms_[static_cast<std::size_t>(i - 1)] * (1.0 - frac) + latency_ms_[static_cast<std::size_t>(i)] * frac;
  }

  bool operator==(const CalibrationProfile&) const = default;

 private:
  std::vector<double> latency_ms_;
};

// Duration observed at batch size b_r, re-expressed at batch size b_t.
inline double calibrate(double d_r, int b_r, int b_t, const CalibrationProfile& profile) {
  return d_r * profile.latency(b_t) / profile.latency(b_r);
}

inline double calibrate(double d_r, double b_r, double b_t, const CalibrationProfile& profile) {
  return d_r * profile.latency(b_t) / profile.latency(b_r);
}

}  // namespace llmsched
