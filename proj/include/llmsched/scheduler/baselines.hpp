#pragma once

#include <algorithm>
#include <memory>
#include <tuple>
#include <vector>

#include "llmsched/scheduler/decision.hpp"
#include "llmsched/scheduler/llmsched.hpp"

namespace llmsched {

namespace detail {

inline std::vector<const JobView*> arrival_order(const SchedulingSnapshot& snap) {
  std::vector<const JobView*> jobs = snap.jobs;
  std::stable_sort(jobs.begin(), jobs.end(), by_arrival);
  return jobs;
}

inline std::vector<StageId> schedulable_in_topological_order(const JobView& job) {
  std::vector<StageId> out;
  for (StageId s : topological_stages(job)) {
    const auto& st = job.stage(s);
    if (st.kind == StageKind::Dynamic || !st.has_unlaunched()) continue;
    if (st.state == StageState::Running || is_ready(job, st)) out.push_back(s);
  }
  return out;
}

// Longest edge count from any root of the revealed DAG.
inline std::vector<int> stage_depths(const JobView& job) {
  std::vector<int> depth(job.stages.size(), 0);
  for (StageId s : topological_stages(job))
    for (StageId p : job.stage(s).predecessors)
      depth[static_cast<std::size_t>(s)] = std::max(depth[static_cast<std::size_t>(s)], depth[static_cast<std::size_t>(p)] + 1);
  return depth;
}

}  // namespace detail

// Arrival order, stages in topological order within a job.
class FcfsScheduler : public Scheduler {
 public:
  ScheduleDecision schedule(const SchedulingSnapshot& snap) override {
    DecisionBuilder b;
    for (const JobView* j : detail::arrival_order(snap))
      for (StageId s : detail::schedulable_in_topological_order(*j)) b.add({j, s});
    return b.take();
  }
  Policy policy() const override { return Policy::Fcfs; }
};

// Static historical mean job duration of the application, ties by arrival.
class SjfScheduler : public Scheduler {
 public:
  ScheduleDecision schedule(const SchedulingSnapshot& snap) override {
    std::vector<const JobView*> jobs = detail::arrival_order(snap);
    std::stable_sort(jobs.begin(), jobs.end(), [&](const JobView* a, const JobView* b) {
      return snap.profile_of(*a).mean_job_duration < snap.profile_of(*b).mean_job_duration;
    });
    DecisionBuilder b;
    for (const JobView* j : jobs)
      for (StageId s : detail::schedulable_in_topological_order(*j)) b.add({j, s});
    return b.take();
  }
  Policy policy() const override { return Policy::Sjf; }
};

// Round robin over jobs in arrival order, one stage per job per round.
class FairScheduler : public Scheduler {
 public:
  ScheduleDecision schedule(const SchedulingSnapshot& snap) override {
    const auto jobs = detail::arrival_order(snap);
    std::vector<std::vector<StageId>> queues;
    for (const JobView* j : jobs) queues.push_back(detail::schedulable_in_topological_order(*j));
    DecisionBuilder b;
    for (std::size_t round = 0;; ++round) {
      bool any = false;
      for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (round >= queues[i].size()) continue;
        b.add({jobs[i], queues[i][round]});
        any = true;
      }
      if (!any) break;
    }
    return b.take();
  }
  Policy policy() const override { return Policy::Fair; }
};

// Stages ranked by (depth asc, child count desc, task count desc), then
// stage id, then job arrival.
class ArgusScheduler : public Scheduler {
 public:
  ScheduleDecision schedule(const SchedulingSnapshot& snap) override {
    struct Entry {
      int depth, children, tasks;
      StageId stage;
      const JobView* job;
    };
    std::vector<Entry> entries;
    for (const JobView* j : detail::arrival_order(snap)) {
      const auto depth = detail::stage_depths(*j);
      for (StageId s : schedulable_stages(*j)) {
        const auto& st = j->stage(s);
        entries.push_back({depth[static_cast<std::size_t>(s)], static_cast<int>(st.successors.size()), st.num_tasks, s, j});
      }
    }
    std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
      return std::make_tuple(a.depth, -a.children, -a.tasks, a.stage) < std::make_tuple(b.depth, -b.children, -b.tasks, b.stage);
    });
    DecisionBuilder b;
    for (const auto& e : entries) b.add({e.job, e.stage});
    return b.take();
  }
  Policy policy() const override { return Policy::Argus; }
};

inline std::unique_ptr<Scheduler> make_scheduler(const SchedulerConfig& cfg) {
  cfg.validate();
  switch (cfg.policy) {
    case Policy::Fcfs: return std::make_unique<FcfsScheduler>();
    case Policy::Fair: return std::make_unique<FairScheduler>();
    case Policy::Sjf: return std::make_unique<SjfScheduler>();
    case Policy::Srtf: return std::make_unique<SrtfScheduler>(cfg.estimator);
    case Policy::Argus: return std::make_unique<ArgusScheduler>();
    case Policy::LlmSched: return std::make_unique<LlmSchedScheduler>(cfg);
  }
  throw ConfigError("unknown scheduler policy");
}

// Dispatcher entry for the baselines by name.
inline ScheduleDecision baseline_schedule(Policy policy, const SchedulingSnapshot& snap) {
  if (policy == Policy::LlmSched) throw ConfigError("llmsched is not a baseline policy");
  SchedulerConfig cfg;
  cfg.policy = policy;
  return make_scheduler(cfg)->schedule(snap);
}

}  // namespace llmsched
