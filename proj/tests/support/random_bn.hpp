#pragma once

// Random discrete networks and a brute-force full-joint oracle.

#include <random>
#include <vector>

#include "llmsched/bayesnet/network.hpp"

namespace llmsched::testing {

struct RandomCase {
  bn::DiscreteBayesNet net;
  std::vector<int> targets;
  bn::Evidence evidence;
};

inline bn::Variable anonymous_variable(int id, int card) {
  std::vector<Interval> bins;
  for (int k = 0; k < card; ++k) bins.push_back({static_cast<double>(k + 1), static_cast<double>(k + 1) + 0.5});
  return {"v" + std::to_string(id), id, DurationDistribution(bins, std::vector<double>(static_cast<std::size_t>(card), 1.0 / card))};
}

template <typename Rng>
bn::DiscreteBayesNet random_network(Rng& rng, int max_nodes = 6, int max_states = 6, int max_parents = 3) {
  std::uniform_int_distribution<int> nodes(1, max_nodes), states(1, max_states);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = nodes(rng);
  std::vector<bn::Variable> vars;
  bn::ParentGraph parents(static_cast<std::size_t>(n));
  std::vector<std::vector<double>> cpts;
  for (int v = 0; v < n; ++v) {
    vars.push_back(anonymous_variable(v, states(rng)));
    // parents among earlier nodes, in shuffled order to exercise the layout
    std::vector<int> pool;
    for (int p = 0; p < v; ++p)
      if (u(rng) < 0.5) pool.push_back(p);
    std::shuffle(pool.begin(), pool.end(), rng);
    if (static_cast<int>(pool.size()) > max_parents) pool.resize(static_cast<std::size_t>(max_parents));
    parents[static_cast<std::size_t>(v)] = pool;
  }
  for (int v = 0; v < n; ++v) {
    std::size_t rows = 1;
    for (int p : parents[static_cast<std::size_t>(v)]) rows *= static_cast<std::size_t>(vars[static_cast<std::size_t>(p)].card());
    const int c = vars[static_cast<std::size_t>(v)].card();
    std::vector<double> t;
    for (std::size_t r = 0; r < rows; ++r) {
      std::vector<double> row;
      double s = 0.0;
      for (int k = 0; k < c; ++k) {
        // occasional exact zeros exercise inconsistent evidence
        const double x = u(rng) < 0.1 ? 0.0 : u(rng);
        row.push_back(x);
        s += x;
      }
      if (s == 0.0) {
        row[0] = 1.0;
        s = 1.0;
      }
      for (double& x : row) t.push_back(x / s);
    }
    cpts.push_back(std::move(t));
  }
  return bn::DiscreteBayesNet(std::move(vars), std::move(parents), std::move(cpts));
}

template <typename Rng>
RandomCase random_case(Rng& rng) {
  RandomCase c{random_network(rng), {}, {}};
  const int n = static_cast<int>(c.net.size());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  c.targets.push_back(order[0]);
  for (int i = 1; i < n; ++i) {
    const double r = u(rng);
    if (r < 0.3) {
      c.targets.push_back(order[static_cast<std::size_t>(i)]);
    } else if (r < 0.6) {
      std::uniform_int_distribution<int> st(0, c.net.card(order[static_cast<std::size_t>(i)]) - 1);
      c.evidence[order[static_cast<std::size_t>(i)]] = st(rng);
    }
  }
  std::sort(c.targets.begin(), c.targets.end());
  return c;
}

// Posterior joint over sorted `targets` by enumerating every full
// assignment; the last target varies fastest. Returns an empty vector when
// the evidence has zero probability.
inline std::vector<double> brute_force_joint(const bn::DiscreteBayesNet& net, const std::vector<int>& targets,
                                             const bn::Evidence& evidence) {
  const auto n = net.size();
  std::vector<int> a(n, 0);
  std::size_t out_size = 1;
  for (int t : targets) out_size *= static_cast<std::size_t>(net.card(t));
  std::vector<double> out(out_size, 0.0);
  double z = 0.0;
  while (true) {
    bool consistent = true;
    for (const auto& [v, s] : evidence)
      if (a[static_cast<std::size_t>(v)] != s) consistent = false;
    if (consistent) {
      double p = 1.0;
      for (std::size_t v = 0; v < n; ++v) {
        std::size_t row = 0;
        for (int q : net.parents_of(static_cast<int>(v))) row = row * static_cast<std::size_t>(net.card(q)) + static_cast<std::size_t>(a[static_cast<std::size_t>(q)]);
        p *= net.cpts()[v][row * static_cast<std::size_t>(net.card(static_cast<int>(v))) + static_cast<std::size_t>(a[v])];
      }
      std::size_t idx = 0;
      for (int t : targets) idx = idx * static_cast<std::size_t>(net.card(t)) + static_cast<std::size_t>(a[static_cast<std::size_t>(t)]);
      out[idx] += p;
      z += p;
    }
    std::size_t k = 0;
    while (k < n) {
      if (++a[k] < net.card(static_cast<int>(k))) break;
      a[k] = 0;
      ++k;
    }
    if (k == n) break;
  }
  if (!(z > 0.0)) return {};
  for (double& x : out) x /= z;
  return out;
}

// Max absolute deviation between joint_query and the oracle; -1 when both
// agree the evidence is impossible, +inf on a disagreement about that.
inline double oracle_deviation(const RandomCase& c) {
  const auto expect = brute_force_joint(c.net, c.targets, c.evidence);
  try {
    const auto got = c.net.joint_query(c.targets, c.evidence);
    if (expect.empty()) return INFINITY;
    double worst = 0.0;
    for (std::size_t i = 0; i < expect.size(); ++i) worst = std::max(worst, std::abs(got.values()[i] - expect[i]));
    return worst;
  } catch (const InconsistentEvidence&) {
    return expect.empty() ? -1.0 : INFINITY;
  }
}

}  // namespace llmsched::testing
