#pragma once

#include <algorithm>
#include <deque>
#include <string>
#include <vector>

#include "llmsched/bayesnet/information.hpp"
#include "llmsched/core/job.hpp"
#include "llmsched/profiler/estimator.hpp"
#include "llmsched/profiler/profile.hpp"

namespace llmsched {

struct UncertaintyScore {
  StageId stage = 0;
  double mutual_information = 0.0;  // bits
  double range_sum = 0.0;           // seconds
  double dynamic_bonus = 0.0;       // bits * seconds
  double reduction = 0.0;           // bits * seconds
  std::vector<StageId> targets;     // stages whose uncertainty the MI term covers
};

// Width of the posterior support: top edge of the highest interval with
// mass minus bottom edge of the lowest one.
inline double stage_range(const DurationDistribution& dist, const std::vector<double>& law) {
  return dist.support_under(law).width();
}

inline double stage_range(const DurationDistribution& dist) { return dist.support().width(); }

// Structural entropy of a dynamic stage: binary entropy of every candidate
// node and every candidate edge.
inline double dynamic_stage_entropy(const DynamicStageSpec& spec) {
  double h = 0.0;
  for (double p : spec.node_probs) h += bn::binary_entropy(p);
  for (double p : spec.edge_probs) h += bn::binary_entropy(p);
  return h;
}

struct UncertaintyOptions {
  // Cap on the joint table |X| * prod |Y_m| used for the MI term. Targets are
  // admitted closest-first (BN hop distance, then stage id) until the cap.
  std::size_t max_joint_cells = 20000;
};

namespace detail {

inline bool unscheduled(const StageRuntime& s) {
  return s.state == StageState::Blocked || s.state == StageState::Ready;
}

// Correlated stages of `var` ordered by hop distance then stage id.
inline std::vector<int> correlated_by_distance(const bn::DiscreteBayesNet& net, int var) {
  const auto reach = bn::correlated_set(net, var);
  std::vector<int> dist(net.size(), -1);
  std::deque<int> q{var};
  dist[static_cast<std::size_t>(var)] = 0;
  while (!q.empty()) {
    const int x = q.front();
    q.pop_front();
    for (int c : net.children_of(x)) {
      if (dist[static_cast<std::size_t>(c)] >= 0) continue;
      dist[static_cast<std::size_t>(c)] = dist[static_cast<std::size_t>(x)] + 1;
      q.push_back(c);
    }
  }
  std::vector<int> out = reach;
  std::stable_sort(out.begin(), out.end(), [&](int a, int b) {
    const int da = dist[static_cast<std::size_t>(a)], db = dist[static_cast<std::size_t>(b)];
    if (da != db) return da < db;
    return net.variable(a).stage < net.variable(b).stage;
  });
  return out;
}

}  // namespace detail

// Uncertainty reduction of scheduling stage X of `job`:
// I(Y_1..Y_M; X | E) * sum_m Range(Y_m | E) plus, when X feeds an unexpanded
// dynamic stage D, H(D) * Range(D).
inline UncertaintyScore uncertainty_reduction(const JobView& job, StageId x, const ApplicationProfile& prof,
                                              InferenceCache* cache = nullptr, UncertaintyOptions opts = {}) {
  UncertaintyScore score;
  score.stage = x;
  const auto& app = *job.app;

  if (auto vx = prof.var(x); vx && !job.evidence.count(x)) {
    const auto& net = *prof.network;
    std::vector<int> targets;
    std::size_t cells = static_cast<std::size_t>(net.card(*vx));
    for (int v : detail::correlated_by_distance(net, *vx)) {
      const StageId s = prof.stage_of_var(v);
      if (!detail::unscheduled(job.stage(s)) || job.evidence.count(s)) continue;
      score.targets.push_back(s);
      const auto law = cache ? cache->marginal(prof, job.evidence, v) : net.marginal(v, prof.bn_evidence(job.evidence));
      score.range_sum += stage_range(prof.dist(s), law);
      const auto c = static_cast<std::size_t>(net.card(v));
      if (cells * c <= opts.max_joint_cells) {
        cells *= c;
        targets.push_back(v);
      }
    }
    if (!targets.empty()) {
      auto compute = [&] {
        try {
          return bn::mutual_information(net, targets, *vx, prof.bn_evidence(job.evidence));
        } catch (const InconsistentEvidence&) {
          return bn::mutual_information(net, targets, *vx, {});
        }
      };
      if (cache) {
        std::string key = "mi|" + evidence_key(prof.app_id, job.evidence) + "|" + std::to_string(*vx) + "|";
        for (int t : targets) key += std::to_string(t) + ",";
        score.mutual_information = cache->memo(key, compute);
      } else {
        score.mutual_information = compute();
      }
    }
  }

  for (StageId succ : job.stage(x).successors) {
    const auto& st = app.stage(succ);
    if (st.kind != StageKind::Dynamic || finished(job.stage(succ).state)) continue;
    const auto it = prof.dynamic.find(succ);
    const auto& spec = it != prof.dynamic.end() ? it->second.spec : *st.dynamic;
    score.dynamic_bonus += dynamic_stage_entropy(spec) * prof.dynamic_range(succ, app);
  }

  score.reduction = score.mutual_information * score.range_sum + score.dynamic_bonus;
  return score;
}

}  // namespace llmsched
