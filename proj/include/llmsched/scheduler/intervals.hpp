#pragma once

#include <algorithm>
#include <vector>

namespace llmsched {

struct JobInterval {
  int job = 0;  // caller-defined handle
  double lo = 0.0;
  double hi = 0.0;
};

// Connected components of the interval-overlap graph (closed intervals, so
// touching intervals overlap), ordered by ascending lower bound.
inline std::vector<std::vector<int>> non_overlapping_sets(std::vector<JobInterval> intervals) {
  std::sort(intervals.begin(), intervals.end(), [](const JobInterval& a, const JobInterval& b) {
    if (a.lo != b.lo) return a.lo < b.lo;
    if (a.hi != b.hi) return a.hi < b.hi;
    return a.job < b.job;
  });
  std::vector<std::vector<int>> sets;
  double reach = 0.0;
  for (const auto& iv : intervals) {
    if (sets.empty() || iv.lo > reach) {
      sets.push_back({iv.job});
      reach = iv.hi;
    } else {
      sets.back().push_back(iv.job);
      reach = std::max(reach, iv.hi);
    }
  }
  return sets;
}

}  // namespace llmsched
