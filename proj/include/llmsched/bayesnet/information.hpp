#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "llmsched/bayesnet/factor.hpp"
#include "llmsched/bayesnet/network.hpp"

namespace llmsched::bn {

// Shannon entropy in bits, 0·log 0 := 0.
inline double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double x : p)
    if (x > 0.0) h -= x * std::log2(x);
  return h;
}

inline double binary_entropy(double p) {
  const double q[2] = {p, 1.0 - p};
  return entropy(q);
}

// I(rest ; source) from a normalized joint factor containing `source`,
// evaluated as H(rest) - Σ_x P(x) H(rest | x). Clamped at 0.
inline double mutual_information(const Factor& joint, int source) {
  const int pos = joint.position(source);
  if (pos < 0) throw StructuralError("source variable not in joint");
  if (joint.vars().size() < 2) return 0.0;
  std::vector<int> rest;
  for (int v : joint.vars())
    if (v != source) rest.push_back(v);
  const Factor py = marginal(joint, rest);
  const double h_y = entropy(py.values());
  const int card_x = joint.card_of(source);
  double h_y_given_x = 0.0;
  for (int x = 0; x < card_x; ++x) {
    Factor slice = reduce(joint, source, x);
    const double px = slice.sum();
    if (px <= 0.0) continue;
    for (double& v : slice.values()) v /= px;
    h_y_given_x += px * entropy(slice.values());
  }
  return std::max(0.0, h_y - h_y_given_x);
}

// I(targets ; source | evidence) on a Bayesian network, from one exact joint
// query over targets ∪ {source}.
inline double mutual_information(const DiscreteBayesNet& net, const std::vector<int>& targets, int source,
                                 const Evidence& evidence) {
  if (targets.empty()) return 0.0;
  if (std::find(targets.begin(), targets.end(), source) != targets.end())
    throw StructuralError("source must not be one of the targets");
  std::vector<int> scope = targets;
  scope.push_back(source);
  return mutual_information(net.joint_query(scope, evidence), source);
}

}  // namespace llmsched::bn
