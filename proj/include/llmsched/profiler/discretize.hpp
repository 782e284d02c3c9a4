#pragma once

#include <algorithm>
#include <vector>

#include "llmsched/core/distribution.hpp"
#include "llmsched/core/errors.hpp"

namespace llmsched {

// Equal-frequency binning of duration samples into at most `max_bins`
// intervals. Edges are the sample values at the j/k quantile positions;
// duplicate edges are merged, so every bin holds at least one sample. Zero
// samples (stages that did not execute) go to a dedicated [0,0] state.
inline DurationDistribution discretize(std::vector<double> samples, int max_bins) {
  if (samples.empty()) throw TrainingError("cannot discretize an empty sample set");
  if (max_bins < 1) throw TrainingError("max_bins must be at least 1");
  const double total = static_cast<double>(samples.size());
  std::vector<double> positive;
  std::size_t zeros = 0;
  for (double s : samples) {
    if (s < 0.0) throw TrainingError("negative duration sample");
    if (s == 0.0) ++zeros;
    else positive.push_back(s);
  }
  std::sort(positive.begin(), positive.end());

  std::vector<Interval> bins;
  std::vector<double> probs;
  if (zeros > 0) {
    bins.push_back({0.0, 0.0});
    probs.push_back(static_cast<double>(zeros) / total);
  }
  if (!positive.empty()) {
    const auto n = positive.size();
    const auto k = static_cast<std::size_t>(max_bins);
    std::vector<double> edges;
    for (std::size_t j = 0; j < k; ++j) edges.push_back(positive[j * n / k]);
    edges.push_back(positive.back());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    if (edges.size() == 1) {
      bins.push_back({edges[0], edges[0]});
      probs.push_back(static_cast<double>(n) / total);
    } else {
      // [e_j, e_{j+1}) with the last bin closed
      std::vector<std::size_t> counts(edges.size() - 1, 0);
      for (double s : positive) {
        auto it = std::upper_bound(edges.begin(), edges.end(), s);
        auto idx = static_cast<std::size_t>(it - edges.begin());
        idx = idx == 0 ? 0 : idx - 1;
        counts[std::min(idx, counts.size() - 1)]++;
      }
      for (std::size_t j = 0; j + 1 < edges.size(); ++j) {
        bins.push_back({edges[j], edges[j + 1]});
        probs.push_back(static_cast<double>(counts[j]) / total);
      }
    }
  }
  // renormalize away floating drift so the sum-to-one invariant is exact
  double s = 0.0;
  for (double p : probs) s += p;
  for (double& p : probs) p /= s;
  return DurationDistribution(std::move(bins), std::move(probs));
}

}  // namespace llmsched
