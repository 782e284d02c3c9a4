#pragma once

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "llmsched/core/errors.hpp"
#include "llmsched/core/job.hpp"
#include "llmsched/profiler/estimator.hpp"
#include "llmsched/profiler/profile.hpp"

namespace llmsched {

struct TaskRef {
  int job_id = 0;
  StageId stage = 0;
  int task = 0;
  auto operator<=>(const TaskRef&) const = default;
};

// Preference lists: regular tasks and LLM tasks, most preferred first.
struct ScheduleDecision {
  std::vector<TaskRef> regular;
  std::vector<TaskRef> llm;
  bool operator==(const ScheduleDecision&) const = default;
};

enum class Policy { Fcfs, Fair, Sjf, Srtf, Argus, LlmSched };

inline std::string_view to_string(Policy p) {
  switch (p) {
    case Policy::Fcfs: return "fcfs";
    case Policy::Fair: return "fair";
    case Policy::Sjf: return "sjf";
    case Policy::Srtf: return "srtf";
    case Policy::Argus: return "argus";
    case Policy::LlmSched: return "llmsched";
  }
  return "?";
}

inline Policy policy_from(std::string_view s) {
  for (auto p : {Policy::Fcfs, Policy::Fair, Policy::Sjf, Policy::Srtf, Policy::Argus, Policy::LlmSched})
    if (to_string(p) == s) return p;
  throw ConfigError("unknown scheduler '" + std::string(s) + "'");
}

struct SchedulerConfig {
  Policy policy = Policy::LlmSched;
  double epsilon = 0.2;
  double ratio = 0.2;
  std::uint64_t seed = 1;
  EstimatorMode estimator = EstimatorMode::Posterior;

  void validate() const {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must lie in [0,1]");
    if (!(ratio > 0.0 && ratio <= 1.0)) throw ConfigError("sampling ratio must lie in (0,1]");
  }
};

// Everything a scheduler may look at during one invocation.
struct SchedulingSnapshot {
  std::vector<const JobView*> jobs;  // unfinished jobs
  const ProfileSet* profiles = nullptr;
  double now = 0.0;
  double avg_llm_batch = 1.0;
  InferenceCache* cache = nullptr;
  std::ostream* score_dump = nullptr;

  const ApplicationProfile& profile_of(const JobView& j) const {
    auto it = profiles->find(j.app_id);
    if (it == profiles->end()) throw ConfigError("no profile for application " + j.app_id);
    return it->second;
  }

  EstimationContext context_for(const JobView& j, EstimatorMode mode) const {
    EstimationContext ctx;
    ctx.profile = &profile_of(j);
    ctx.avg_llm_batch = avg_llm_batch;
    ctx.now = now;
    ctx.mode = mode;
    ctx.cache = cache;
    return ctx;
  }
};

struct StageRef {
  const JobView* job = nullptr;
  StageId stage = 0;
  bool operator==(const StageRef& o) const { return job == o.job && stage == o.stage; }
};

// Accumulates task preferences, skipping anything already listed.
class DecisionBuilder {
 public:
  bool taken(const StageRef& s) const { return taken_.count(key(s)) > 0; }

  // Lists up to `limit` unlaunched tasks of `s` (all when limit < 0).
  void add(const StageRef& s, int limit = -1) {
    taken_.insert(key(s));
    const auto& st = s.job->stage(s.stage);
    auto& out = st.kind == StageKind::Llm ? decision_.llm : decision_.regular;
    int added = 0;
    for (int t = 0; t < st.num_tasks; ++t) {
      if (limit >= 0 && added >= limit) break;
      if (st.tasks[static_cast<std::size_t>(t)].state != TaskState::Pending) continue;
      if (!listed_.insert({s.job->job_id, s.stage, t}).second) continue;
      out.push_back({s.job->job_id, s.stage, t});
      ++added;
    }
  }

  ScheduleDecision take() { return std::move(decision_); }

 private:
  static std::pair<int, StageId> key(const StageRef& s) { return {s.job->job_id, s.stage}; }

  ScheduleDecision decision_;
  std::set<std::pair<int, StageId>> taken_;
  std::set<std::tuple<int, StageId, int>> listed_;
};

inline int unlaunched_tasks(const StageRef& s) {
  const auto& st = s.job->stage(s.stage);
  return st.num_tasks - st.launched;
}

// Task count for exploring a fraction r of a stage: ceil(r * n), at least 1.
inline int sampled_task_count(double ratio, int n) {
  if (n <= 0) return 0;
  const int k = static_cast<int>(std::ceil(ratio * n - 1e-9));
  return std::clamp(k, 1, n);
}

inline bool by_arrival(const JobView* a, const JobView* b) {
  return std::tie(a->arrival, a->job_id) < std::tie(b->arrival, b->job_id);
}

class Scheduler {
 public:
  virtual ~Scheduler() = default;
  virtual ScheduleDecision schedule(const SchedulingSnapshot& snap) = 0;
  virtual Policy policy() const = 0;
};

}  // namespace llmsched
