#pragma once

#include <algorithm>
#include <iomanip>
#include <map>
#include <random>
#include <vector>

#include "llmsched/scheduler/decision.hpp"
#include "llmsched/scheduler/intervals.hpp"
#include "llmsched/uncertainty/uncertainty.hpp"

namespace llmsched {

struct RankedJob {
  const JobView* job = nullptr;
  JobEstimate estimate;
};

// Jobs ordered by ascending estimated remaining duration, ties by arrival.
inline std::vector<RankedJob> rank_by_remaining(const SchedulingSnapshot& snap, EstimatorMode mode) {
  std::vector<RankedJob> ranked;
  ranked.reserve(snap.jobs.size());
  for (const JobView* j : snap.jobs) ranked.push_back({j, estimated_remaining_duration(*j, snap.context_for(*j, mode))});
  std::stable_sort(ranked.begin(), ranked.end(), [](const RankedJob& a, const RankedJob& b) {
    if (a.estimate.remaining != b.estimate.remaining) return a.estimate.remaining < b.estimate.remaining;
    return by_arrival(a.job, b.job);
  });
  return ranked;
}

inline std::vector<StageRef> stages_in_job_order(const std::vector<RankedJob>& ranked) {
  std::vector<StageRef> out;
  for (const auto& r : ranked)
    for (StageId s : schedulable_stages(*r.job)) out.push_back({r.job, s});
  return out;
}

class SrtfScheduler : public Scheduler {
 public:
  explicit SrtfScheduler(EstimatorMode mode = EstimatorMode::Posterior) : mode_(mode) {}

  ScheduleDecision schedule(const SchedulingSnapshot& snap) override {
    DecisionBuilder b;
    for (const auto& s : stages_in_job_order(rank_by_remaining(snap, mode_))) b.add(s);
    return b.take();
  }
  Policy policy() const override { return Policy::Srtf; }

 private:
  EstimatorMode mode_;
};

// Uncertainty-aware scheduling: an SRTF list S_t and an uncertainty-reduction
// list S_u (per non-overlapping job set) merged by epsilon-greedy draws;
// exploration launches only a fraction r of the chosen stage's tasks.
class LlmSchedScheduler : public Scheduler {
 public:
  explicit LlmSchedScheduler(SchedulerConfig cfg) : cfg_(cfg), rng_(cfg.seed) { cfg_.validate(); }

  ScheduleDecision schedule(const SchedulingSnapshot& snap) override {
    const auto ranked = rank_by_remaining(snap, cfg_.estimator);
    const std::vector<StageRef> s_t = stages_in_job_order(ranked);

    std::vector<JobInterval> intervals;
    intervals.reserve(ranked.size());
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      const auto& e = ranked[i].estimate;
      intervals.push_back({static_cast<int>(i), std::min(e.lo, e.remaining), std::max(e.hi, e.remaining)});
    }

    std::vector<StageRef> s_u;
    s_u.reserve(s_t.size());
    std::map<std::pair<int, StageId>, UncertaintyScore> scores;
    for (const auto& set : non_overlapping_sets(std::move(intervals))) {
      std::vector<int> members = set;
      std::sort(members.begin(), members.end());  // SRTF rank breaks reduction ties
      std::vector<std::pair<double, StageRef>> scored;
      for (int m : members) {
        const JobView* job = ranked[static_cast<std::size_t>(m)].job;
        const auto& prof = snap.profile_of(*job);
        for (StageId s : schedulable_stages(*job)) {
          auto sc = uncertainty_reduction(*job, s, prof, snap.cache);
          scored.push_back({sc.reduction, {job, s}});
          if (snap.score_dump) scores[{job->job_id, s}] = std::move(sc);
        }
      }
      std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
      for (const auto& [r, ref] : scored) s_u.push_back(ref);
    }
    if (snap.score_dump) dump(snap, ranked, scores);

    DecisionBuilder b;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::size_t it = 0, iu = 0;
    while (it < s_t.size() && iu < s_u.size()) {
      const StageRef st = s_t[it++];
      const StageRef su = s_u[iu++];
      // p in (0,1]: p <= 0 never explores, p <= 1 always does
      const double p = 1.0 - unit(rng_);
      if (p <= cfg_.epsilon) {
        if (b.taken(su)) continue;
        b.add(su, sampled_task_count(cfg_.ratio, unlaunched_tasks(su)));
      } else {
        if (b.taken(st)) continue;
        b.add(st);
      }
    }
    for (const auto& s : s_t) b.add(s);
    for (const auto& s : s_u) b.add(s);
    return b.take();
  }

  Policy policy() const override { return Policy::LlmSched; }
  const SchedulerConfig& config() const { return cfg_; }

 private:
  void dump(const SchedulingSnapshot& snap, const std::vector<RankedJob>& ranked,
            const std::map<std::pair<int, StageId>, UncertaintyScore>& scores) const {
    auto& os = *snap.score_dump;
    for (const auto& r : ranked) {
      for (StageId s : schedulable_stages(*r.job)) {
        const auto& sc = scores.at({r.job->job_id, s});
        os << std::setprecision(9) << snap.now << ',' << r.job->job_id << ',' << r.job->app_id << ',' << s << ','
           << r.estimate.remaining << ',' << r.estimate.lo << ',' << r.estimate.hi << ',' << sc.mutual_information << ','
           << sc.range_sum << ',' << sc.dynamic_bonus << ',' << sc.reduction << '\n';
      }
    }
  }

  SchedulerConfig cfg_;
  std::mt19937_64 rng_;
};

inline constexpr const char* kScoreDumpHeader =
    "time,job_id,app_id,stage,est_remaining,est_lo,est_hi,mutual_information,range_sum,dynamic_bonus,reduction";

}  // namespace llmsched
