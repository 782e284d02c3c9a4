#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "llmsched/bayesnet/factor.hpp"
#include "llmsched/core/distribution.hpp"
#include "llmsched/core/errors.hpp"

namespace llmsched::bn {

struct Variable {
  std::string name;
  int stage = -1;  // owning stage id, -1 for free-standing variables
  DurationDistribution domain;

  int card() const { return static_cast<int>(domain.size()); }
};

using ParentGraph = std::vector<std::vector<int>>;
// samples[n][v] = observed state of variable v in sample n
using SampleTable = std::vector<std::vector<int>>;
using Evidence = std::map<int, int>;

inline bool is_acyclic(const ParentGraph& parents) {
  const auto n = parents.size();
  std::vector<int> mark(n, 0);  // 0 unvisited, 1 on stack, 2 done
  std::vector<std::pair<int, std::size_t>> stack;
  for (std::size_t root = 0; root < n; ++root) {
    if (mark[root]) continue;
    stack.push_back({static_cast<int>(root), 0});
    mark[root] = 1;
    while (!stack.empty()) {
      auto& [v, next] = stack.back();
      const auto& ps = parents[static_cast<std::size_t>(v)];
      if (next < ps.size()) {
        const int p = ps[next++];
        if (p < 0 || static_cast<std::size_t>(p) >= n) return false;
        if (mark[static_cast<std::size_t>(p)] == 1) return false;
        if (mark[static_cast<std::size_t>(p)] == 0) {
          mark[static_cast<std::size_t>(p)] = 1;
          stack.push_back({p, 0});
        }
      } else {
        mark[static_cast<std::size_t>(v)] = 2;
        stack.pop_back();
      }
    }
  }
  return true;
}

class DiscreteBayesNet {
 public:
  DiscreteBayesNet() = default;

  // cpts[v] is row-major over the parent tuple (first parent slowest), one
  // row of card(v) probabilities per parent configuration.
  DiscreteBayesNet(std::vector<Variable> variables, ParentGraph parents, std::vector<std::vector<double>> cpts)
      : variables_(std::move(variables)), parents_(std::move(parents)), cpts_(std::move(cpts)) {
    validate();
  }

  std::size_t size() const { return variables_.size(); }
  const std::vector<Variable>& variables() const { return variables_; }
  const Variable& variable(int v) const { return variables_.at(static_cast<std::size_t>(v)); }
  const ParentGraph& parents() const { return parents_; }
  const std::vector<int>& parents_of(int v) const { return parents_.at(static_cast<std::size_t>(v)); }
  const std::vector<std::vector<double>>& cpts() const { return cpts_; }
  int card(int v) const { return variable(v).card(); }

  int index_of_stage(int stage) const {
    for (std::size_t i = 0; i < variables_.size(); ++i)
      if (variables_[i].stage == stage) return static_cast<int>(i);
    return -1;
  }

  std::vector<int> children_of(int v) const {
    std::vector<int> out;
    for (std::size_t c = 0; c < parents_.size(); ++c)
      if (std::find(parents_[c].begin(), parents_[c].end(), v) != parents_[c].end()) out.push_back(static_cast<int>(c));
    return out;
  }

  // P(v | parents) as a factor over {v} ∪ parents(v).
  Factor cpt_factor(int v) const {
    const auto& ps = parents_of(v);
    std::vector<int> scope = ps;
    scope.push_back(v);
    std::vector<int> sorted = scope;
    std::sort(sorted.begin(), sorted.end());
    std::vector<int> cards;
    for (int s : sorted) cards.push_back(card(s));
    Factor f(sorted, cards, std::vector<double>(cpts_[static_cast<std::size_t>(v)].size(), 0.0));
    // scope order is (parents..., v): exactly the CPT row-major layout
    std::vector<int> scope_cards;
    for (int s : scope) scope_cards.push_back(card(s));
    std::vector<int> aligned(sorted.size());
    detail::for_each_assignment(scope_cards, [&](std::size_t flat, const std::vector<int>& a) {
      for (std::size_t i = 0; i < scope.size(); ++i) aligned[static_cast<std::size_t>(f.position(scope[i]))] = a[i];
      f.values()[f.index_of(aligned)] = cpts_[static_cast<std::size_t>(v)][flat];
    });
    return f;
  }

  // Exact posterior joint over `targets` given `evidence` by variable
  // elimination on the ancestral sub-network.
  Factor joint_query(const std::vector<int>& targets, const Evidence& evidence) const {
    if (targets.empty()) throw StructuralError("joint_query needs at least one target");
    std::vector<int> tgt = targets;
    std::sort(tgt.begin(), tgt.end());
    tgt.erase(std::unique(tgt.begin(), tgt.end()), tgt.end());
    for (int t : tgt) {
      check_var(t);
      if (evidence.count(t)) throw StructuralError("query target is also observed");
    }
    for (const auto& [v, s] : evidence) {
      check_var(v);
      if (s < 0 || s >= card(v)) throw RangeError("evidence state out of range");
    }

    // barren-node pruning: only ancestors of targets and evidence matter
    std::vector<char> relevant(size(), 0);
    std::vector<int> stack(tgt.begin(), tgt.end());
    for (const auto& [v, s] : evidence) stack.push_back(v);
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      if (relevant[static_cast<std::size_t>(v)]) continue;
      relevant[static_cast<std::size_t>(v)] = 1;
      for (int p : parents_of(v)) stack.push_back(p);
    }

    std::vector<Factor> factors;
    for (std::size_t v = 0; v < size(); ++v) {
      if (!relevant[v]) continue;
      Factor f = cpt_factor(static_cast<int>(v));
      for (const auto& [ev, s] : evidence) f = reduce(f, ev, s);
      factors.push_back(std::move(f));
    }

    std::set<int> hidden;
    for (std::size_t v = 0; v < size(); ++v)
      if (relevant[v] && !evidence.count(static_cast<int>(v)) && !std::binary_search(tgt.begin(), tgt.end(), static_cast<int>(v)))
        hidden.insert(static_cast<int>(v));

    while (!hidden.empty()) {
      // greedy min-size elimination order, ties by lowest variable id
      int best = -1;
      double best_cost = std::numeric_limits<double>::infinity();
      for (int h : hidden) {
        std::set<int> scope;
        for (const auto& f : factors)
          if (f.contains(h)) scope.insert(f.vars().begin(), f.vars().end());
        double cost = 1.0;
        for (int s : scope) cost *= card(s);
        if (cost < best_cost) {
          best_cost = cost;
          best = h;
        }
      }
      hidden.erase(best);
      Factor prod;
      std::vector<Factor> rest;
      for (auto& f : factors) {
        if (f.contains(best)) prod = multiply(prod, f);
        else rest.push_back(std::move(f));
      }
      rest.push_back(sum_out(prod, best));
      factors = std::move(rest);
    }

    Factor joint;
    for (const auto& f : factors) joint = multiply(joint, f);
    // targets untouched by any relevant factor cannot occur; keep scope exact
    for (int t : tgt)
      if (!joint.contains(t)) throw StructuralError("query target missing from the network");
    const double z = joint.sum();
    if (!(z > 0.0)) throw InconsistentEvidence("evidence has zero probability under the network");
    for (double& x : joint.values()) x /= z;
    return joint;
  }

  std::vector<double> marginal(int v, const Evidence& evidence) const {
    if (auto it = evidence.find(v); it != evidence.end()) {
      std::vector<double> point(static_cast<std::size_t>(card(v)), 0.0);
      point[static_cast<std::size_t>(it->second)] = 1.0;
      return point;
    }
    return joint_query({v}, evidence).values();
  }

 private:
  void check_var(int v) const {
    if (v < 0 || static_cast<std::size_t>(v) >= size()) throw StructuralError("variable index out of range");
  }

  void validate() const {
    if (parents_.size() != variables_.size() || cpts_.size() != variables_.size())
      throw StructuralError("bayes net field sizes differ");
    if (!is_acyclic(parents_)) throw StructuralError("bayes net parent graph has a cycle");
    for (std::size_t v = 0; v < size(); ++v) {
      std::size_t rows = 1;
      for (int p : parents_[v]) rows *= static_cast<std::size_t>(card(p));
      const auto c = static_cast<std::size_t>(card(static_cast<int>(v)));
      const auto& t = cpts_[v];
      if (t.size() != rows * c) throw StructuralError("CPT of " + variables_[v].name + " has wrong size");
      for (std::size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        for (std::size_t k = 0; k < c; ++k) {
          const double p = t[r * c + k];
          if (p < 0.0) throw StructuralError("negative CPT entry");
          s += p;
        }
        if (std::abs(s - 1.0) > 1e-9) throw StructuralError("CPT row of " + variables_[v].name + " does not sum to 1");
      }
    }
  }

  std::vector<Variable> variables_;
  ParentGraph parents_;
  std::vector<std::vector<double>> cpts_;
};

// Stages reachable from `v` along directed BN edges.
inline std::vector<int> correlated_set(const DiscreteBayesNet& net, int v) {
  std::vector<std::vector<int>> children(net.size());
  for (std::size_t c = 0; c < net.size(); ++c)
    for (int p : net.parents_of(static_cast<int>(c))) children[static_cast<std::size_t>(p)].push_back(static_cast<int>(c));
  std::vector<char> seen(net.size(), 0);
  std::vector<int> stack = children.at(static_cast<std::size_t>(v));
  std::vector<int> out;
  while (!stack.empty()) {
    const int x = stack.back();
    stack.pop_back();
    if (seen[static_cast<std::size_t>(x)] || x == v) continue;
    seen[static_cast<std::size_t>(x)] = 1;
    out.push_back(x);
    for (int c : children[static_cast<std::size_t>(x)]) stack.push_back(c);
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::size_t parent_row(const std::vector<int>& sample, const std::vector<int>& parents,
                              const std::vector<int>& cards) {
  std::size_t row = 0;
  for (int p : parents)
    row = row * static_cast<std::size_t>(cards[static_cast<std::size_t>(p)]) + static_cast<std::size_t>(sample[static_cast<std::size_t>(p)]);
  return row;
}

inline void check_samples(const SampleTable& samples, const std::vector<int>& cards) {
  if (samples.empty()) throw TrainingError("no samples to train on");
  for (const auto& s : samples) {
    if (s.size() != cards.size()) throw TrainingError("sample width does not match variable count");
    for (std::size_t v = 0; v < s.size(); ++v)
      if (s[v] < 0 || s[v] >= cards[v]) throw TrainingError("sample state out of range");
  }
}

// Maximum-likelihood CPTs with additive (Laplace) smoothing `alpha`.
inline DiscreteBayesNet fit_cpts(std::vector<Variable> variables, ParentGraph parents, const SampleTable& samples,
                                 double alpha = 1.0) {
  std::vector<int> cards;
  for (const auto& v : variables) cards.push_back(v.card());
  check_samples(samples, cards);
  if (parents.size() != variables.size() || !is_acyclic(parents)) throw TrainingError("invalid structure");
  std::vector<std::vector<double>> cpts(variables.size());
  for (std::size_t v = 0; v < variables.size(); ++v) {
    std::size_t rows = 1;
    for (int p : parents[v]) rows *= static_cast<std::size_t>(cards[static_cast<std::size_t>(p)]);
    const auto c = static_cast<std::size_t>(cards[v]);
    std::vector<double> counts(rows * c, alpha);
    for (const auto& s : samples) counts[parent_row(s, parents[v], cards) * c + static_cast<std::size_t>(s[v])] += 1.0;
    for (std::size_t r = 0; r < rows; ++r) {
      double tot = 0.0;
      for (std::size_t k = 0; k < c; ++k) tot += counts[r * c + k];
      for (std::size_t k = 0; k < c; ++k) counts[r * c + k] /= tot;
    }
    cpts[v] = std::move(counts);
  }
  return DiscreteBayesNet(std::move(variables), std::move(parents), std::move(cpts));
}

// BIC contribution of one family: log-likelihood (nats) minus
// (ln N / 2) * free parameters.
inline double family_bic(const SampleTable& samples, int v, const std::vector<int>& parents, const std::vector<int>& cards) {
  const auto c = static_cast<std::size_t>(cards[static_cast<std::size_t>(v)]);
  std::size_t rows = 1;
  for (int p : parents) rows *= static_cast<std::size_t>(cards[static_cast<std::size_t>(p)]);
  std::vector<double> counts(rows * c, 0.0);
  for (const auto& s : samples) counts[parent_row(s, parents, cards) * c + static_cast<std::size_t>(s[static_cast<std::size_t>(v)])] += 1.0;
  double ll = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    double n_r = 0.0;
    for (std::size_t k = 0; k < c; ++k) n_r += counts[r * c + k];
    if (n_r == 0.0) continue;
    for (std::size_t k = 0; k < c; ++k) {
      const double n = counts[r * c + k];
      if (n > 0.0) ll += n * std::log(n / n_r);
    }
  }
  const double params = static_cast<double>(rows) * static_cast<double>(c - 1);
  return ll - 0.5 * std::log(static_cast<double>(samples.size())) * params;
}

inline double bic_score(const SampleTable& samples, const ParentGraph& parents, const std::vector<int>& cards) {
  double total = 0.0;
  for (std::size_t v = 0; v < parents.size(); ++v) total += family_bic(samples, static_cast<int>(v), parents[v], cards);
  return total;
}

struct StructureOptions {
  int max_parents = 3;
  int max_iterations = 1000;
};

// Greedy hill climbing on BIC from the empty graph. Edges must point forward
// in `order` (a permutation of variable indices); add, remove and reverse
// moves are scored, first strictly-best move wins.
inline ParentGraph learn_structure(const SampleTable& samples, const std::vector<int>& cards,
                                   const std::vector<int>& order, StructureOptions opts = {}) {
  const auto n = cards.size();
  ParentGraph g(n);
  if (n < 2) return g;
  check_samples(samples, cards);
  std::vector<int> rank(n, 0);
  if (order.size() != n) throw TrainingError("variable order must cover every variable");
  for (std::size_t i = 0; i < n; ++i) rank[static_cast<std::size_t>(order[i])] = static_cast<int>(i);

  std::vector<double> fam(n);
  for (std::size_t v = 0; v < n; ++v) fam[v] = family_bic(samples, static_cast<int>(v), g[v], cards);

  auto with = [](std::vector<int> ps, int p) {
    ps.push_back(p);
    std::sort(ps.begin(), ps.end());
    return ps;
  };
  auto without = [](std::vector<int> ps, int p) {
    ps.erase(std::remove(ps.begin(), ps.end(), p), ps.end());
    return ps;
  };

  for (int it = 0; it < opts.max_iterations; ++it) {
    double best_gain = 1e-9;
    enum class Move { None, Add, Remove, Reverse } move = Move::None;
    int mu = -1, mv = -1;
    for (std::size_t u = 0; u < n; ++u) {
      for (std::size_t v = 0; v < n; ++v) {
        if (u == v) continue;
        const int iu = static_cast<int>(u), iv = static_cast<int>(v);
        const bool has = std::find(g[v].begin(), g[v].end(), iu) != g[v].end();
        if (!has) {
          if (rank[u] > rank[v] || static_cast<int>(g[v].size()) >= opts.max_parents) continue;
          const double gain = family_bic(samples, iv, with(g[v], iu), cards) - fam[v];
          if (gain > best_gain) { best_gain = gain; move = Move::Add; mu = iu; mv = iv; }
        } else {
          const double gain = family_bic(samples, iv, without(g[v], iu), cards) - fam[v];
          if (gain > best_gain) { best_gain = gain; move = Move::Remove; mu = iu; mv = iv; }
          // reversal v -> u must also respect the order
          if (rank[v] < rank[u] && static_cast<int>(g[u].size()) < opts.max_parents) {
            const double rgain = family_bic(samples, iv, without(g[v], iu), cards) - fam[v] +
                                 family_bic(samples, iu, with(g[u], iv), cards) - fam[u];
            if (rgain > best_gain) { best_gain = rgain; move = Move::Reverse; mu = iu; mv = iv; }
          }
        }
      }
    }
    if (move == Move::None) break;
    const auto su = static_cast<std::size_t>(mu), sv = static_cast<std::size_t>(mv);
    if (move == Move::Add) {
      g[sv] = with(g[sv], mu);
    } else if (move == Move::Remove) {
      g[sv] = without(g[sv], mu);
    } else {
      g[sv] = without(g[sv], mu);
      g[su] = with(g[su], mv);
      fam[su] = family_bic(samples, mu, g[su], cards);
    }
    fam[sv] = family_bic(samples, mv, g[sv], cards);
  }
  return g;
}

}  // namespace llmsched::bn
