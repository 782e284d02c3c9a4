#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "llmsched/core/errors.hpp"

namespace llmsched {

// Closed duration interval in seconds. Adjacent intervals may share an edge;
// a value on a shared edge belongs to the upper interval.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double midpoint() const { return 0.5 * (lo + hi); }
  bool degenerate() const { return lo == hi; }
  bool operator==(const Interval&) const = default;
};

struct SupportRange {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
};

inline constexpr double kSupportEpsilon = 1e-12;

// Discretized per-stage duration law. The "not executed" state is the
// degenerate interval [0,0] and, when present, is always state 0.
class DurationDistribution {
 public:
  DurationDistribution() = default;

  DurationDistribution(std::vector<Interval> bins, std::vector<double> probs)
      : bins_(std::move(bins)), probs_(std::move(probs)) {
    representative_.reserve(bins_.size());
    for (const auto& b : bins_) representative_.push_back(b.midpoint());
    validate();
  }

  DurationDistribution(std::vector<Interval> bins, std::vector<double> probs,
                       std::vector<double> representative)
      : bins_(std::move(bins)), probs_(std::move(probs)), representative_(std::move(representative)) {
    validate();
  }

  static DurationDistribution point(double seconds) {
    return DurationDistribution({Interval{seconds, seconds}}, {1.0});
  }

  std::size_t size() const { return bins_.size(); }
  const std::vector<Interval>& bins() const { return bins_; }
  const std::vector<double>& probs() const { return probs_; }
  const std::vector<double>& representative() const { return representative_; }
  const Interval& bin(std::size_t i) const { return bins_.at(i); }

  std::optional<std::size_t> zero_state() const {
    if (!bins_.empty() && bins_.front().lo == 0.0 && bins_.front().hi == 0.0) return 0;
    return std::nullopt;
  }

  double mean() const { return mean_under(probs_); }

  // Expectation of the representative values under an arbitrary law over the
  // same state space (e.g. a posterior marginal).
  double mean_under(std::span<const double> p) const {
    require_same_size(p);
    double m = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) m += p[i] * representative_[i];
    return m;
  }

  SupportRange support() const { return support_under(probs_); }

  SupportRange support_under(std::span<const double> p) const {
    require_same_size(p);
    SupportRange r;
    bool found = false;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i] <= kSupportEpsilon) continue;
      if (!found) r.lo = bins_[i].lo;
      r.hi = bins_[i].hi;
      found = true;
    }
    return r;
  }

  // Interval index holding `seconds`; values outside every interval clamp to
  // the nearest one. Zero maps to the non-execution state when it exists.
  std::size_t state_of(double seconds) const {
    if (bins_.empty()) throw StructuralError("state_of on empty distribution");
    if (seconds <= 0.0 && zero_state()) return 0;
    std::size_t best = zero_state() && bins_.size() > 1 ? 1 : 0;
    double best_gap = INFINITY;
    const std::size_t first = zero_state() && bins_.size() > 1 ? 1 : 0;  // positive durations never read as skipped
    for (std::size_t i = first; i < bins_.size(); ++i) {
      const auto& b = bins_[i];
      if (seconds >= b.lo && seconds <= b.hi) {
        // shared edge belongs to the upper interval
        if (i + 1 < bins_.size() && seconds == b.hi && bins_[i + 1].lo == seconds) continue;
        return i;
      }
      const double gap = seconds < b.lo ? b.lo - seconds : seconds - b.hi;
      if (gap < best_gap) {
        best_gap = gap;
        best = i;
      }
    }
    return best;
  }

  bool operator==(const DurationDistribution&) const = default;

 private:
  void require_same_size(std::span<const double> p) const {
    if (p.size() != bins_.size()) throw StructuralError("probability vector does not match state space");
  }

  void validate() const {
    if (bins_.empty()) throw StructuralError("duration distribution needs at least one interval");
    if (probs_.size() != bins_.size() || representative_.size() != bins_.size())
      throw StructuralError("duration distribution field sizes differ");
    double total = 0.0;
    for (std::size_t i = 0; i < bins_.size(); ++i) {
      const auto& b = bins_[i];
      if (!(b.lo >= 0.0) || !(b.hi >= b.lo)) throw StructuralError("malformed duration interval");
      if (i > 0) {
        const auto& prev = bins_[i - 1];
        if (b.lo < prev.hi || (b.lo == prev.lo && b.hi == prev.hi))
          throw StructuralError("duration intervals must be strictly increasing");
      }
      if (probs_[i] < 0.0) throw StructuralError("negative interval probability");
      total += probs_[i];
    }
    if (std::abs(total - 1.0) > 1e-9) throw StructuralError("interval probabilities must sum to 1");
  }

  std::vector<Interval> bins_;
  std::vector<double> probs_;
  std::vector<double> representative_;
};

}  // namespace llmsched
