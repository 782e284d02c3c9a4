#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "llmsched/core/errors.hpp"
#include "llmsched/core/model.hpp"

namespace llmsched {

enum class StageState { Blocked, Ready, Running, Done, Skipped };
enum class TaskState { Pending, Running, Done, Skipped };

inline bool finished(StageState s) { return s == StageState::Done || s == StageState::Skipped; }

struct RealizedSubgraph {
  std::vector<StageId> nodes;
  std::vector<StageEdge> edges;
  bool operator==(const RealizedSubgraph&) const = default;
};

// Ground truth of a job, sampled once at generation. Schedulers never see it.
struct JobTruth {
  // per stage, per task, seconds at batch size 1; empty for unexecuted stages
  std::vector<std::vector<double>> task_durations;
  int chain_iterations = 0;  // 0 for non-chain applications
  std::map<StageId, RealizedSubgraph> dynamic;

  bool executed(StageId s) const { return !task_durations.at(static_cast<std::size_t>(s)).empty(); }

  // Stage duration as recorded in traces: mean task duration at batch 1.
  double stage_duration(StageId s) const {
    const auto& d = task_durations.at(static_cast<std::size_t>(s));
    if (d.empty()) return 0.0;
    double sum = 0.0;
    for (double x : d) sum += x;
    return sum / static_cast<double>(d.size());
  }
};

struct TaskRuntime {
  TaskState state = TaskState::Pending;
  double start_time = 0.0;
  // progress bookkeeping in batch-1 seconds: done = work_at_sync + (now - sync_time) * rate
  double work_at_sync = 0.0;
  double sync_time = 0.0;
  double rate = 1.0;
  double batch_integral = 0.0;  // ∫ batch size dt over the run, LLM tasks only
  int executor = -1;

  double work_done(double now) const {
    if (state != TaskState::Running) return state == TaskState::Done ? work_at_sync : 0.0;
    return work_at_sync + (now - sync_time) * rate;
  }
};

struct StageRuntime {
  StageId id = 0;
  StageKind kind = StageKind::Regular;
  int num_tasks = 1;
  std::vector<StageId> predecessors;
  std::vector<StageId> successors;
  StageState state = StageState::Blocked;
  std::vector<TaskRuntime> tasks;
  int launched = 0;
  int done = 0;
  double observed_duration = 0.0;  // mean batch-1 task duration once Done

  bool has_unlaunched() const { return launched < num_tasks; }
};

using EvidenceSet = std::map<StageId, int>;

// Scheduler-visible state of a job.
struct JobView {
  int job_id = 0;
  std::string app_id;
  double arrival = 0.0;
  const ApplicationTemplate* app = nullptr;
  std::vector<StageRuntime> stages;
  EvidenceSet evidence;
  std::map<StageId, RealizedSubgraph> revealed_subgraphs;
  double completion = -1.0;

  const StageRuntime& stage(StageId id) const { return stages.at(static_cast<std::size_t>(id)); }
  StageRuntime& stage(StageId id) { return stages.at(static_cast<std::size_t>(id)); }

  bool complete() const {
    return std::all_of(stages.begin(), stages.end(), [](const StageRuntime& s) { return finished(s.state); });
  }
};

struct JobInstance {
  JobTruth truth;
  JobView view;
};

inline JobView make_view(const ApplicationTemplate& app, int job_id, double arrival) {
  JobView v;
  v.job_id = job_id;
  v.app_id = app.app_id;
  v.arrival = arrival;
  v.app = &app;
  v.stages.reserve(app.stages.size());
  for (const auto& t : app.stages) {
    StageRuntime s;
    s.id = t.id;
    s.kind = t.kind;
    s.num_tasks = t.num_tasks;
    s.predecessors = t.predecessors;
    s.tasks.resize(static_cast<std::size_t>(t.num_tasks));
    v.stages.push_back(std::move(s));
  }
  for (const auto& s : v.stages)
    for (StageId p : s.predecessors) v.stage(p).successors.push_back(s.id);
  return v;
}

inline bool dependencies_met(const JobView& job, const StageRuntime& s) {
  return std::all_of(s.predecessors.begin(), s.predecessors.end(), [&](StageId p) {
    const auto st = job.stage(p).state;
    return st == StageState::Done || st == StageState::Skipped;
  });
}

// Kahn's algorithm over the revealed DAG, smallest id first among ready nodes.
inline std::vector<StageId> topological_stages(const JobView& job) {
  const auto n = job.stages.size();
  std::vector<int> indegree(n, 0);
  for (const auto& s : job.stages) indegree[static_cast<std::size_t>(s.id)] = static_cast<int>(s.predecessors.size());
  std::priority_queue<StageId, std::vector<StageId>, std::greater<>> frontier;
  for (std::size_t i = 0; i < n; ++i)
    if (indegree[i] == 0) frontier.push(static_cast<StageId>(i));
  std::vector<StageId> order;
  order.reserve(n);
  while (!frontier.empty()) {
    const StageId s = frontier.top();
    frontier.pop();
    order.push_back(s);
    for (StageId c : job.stage(s).successors)
      if (--indegree[static_cast<std::size_t>(c)] == 0) frontier.push(c);
  }
  if (order.size() != n) throw StructuralError("cycle detected in job " + std::to_string(job.job_id));
  return order;
}

inline bool is_ready(const JobView& job, const StageRuntime& s) {
  if (s.kind == StageKind::Dynamic) return false;
  if (s.state == StageState::Running || finished(s.state)) return false;
  return dependencies_met(job, s);
}

inline std::vector<StageId> ready_stages(const JobView& job) {
  std::vector<StageId> out;
  for (const auto& s : job.stages)
    if (is_ready(job, s)) out.push_back(s.id);
  return out;
}

// Stages with tasks that could be launched now: Ready stages and Running
// stages that still hold unlaunched tasks.
inline std::vector<StageId> schedulable_stages(const JobView& job) {
  std::vector<StageId> out;
  for (const auto& s : job.stages) {
    if (s.kind == StageKind::Dynamic || !s.has_unlaunched()) continue;
    if (s.state == StageState::Running || is_ready(job, s)) out.push_back(s.id);
  }
  return out;
}

// Promotes Blocked stages whose dependencies are met.
inline void refresh_states(JobView& job) {
  for (auto& s : job.stages)
    if (s.state == StageState::Blocked && is_ready(job, s)) s.state = StageState::Ready;
}

inline void mark_skipped(StageRuntime& s) {
  s.state = StageState::Skipped;
  s.observed_duration = 0.0;
  for (auto& t : s.tasks) t.state = TaskState::Skipped;
}

// Replaces the placeholder `dynamic_stage` by the realized subgraph drawn
// from its candidate spec.
inline void expand_dynamic(JobView& job, StageId dynamic_stage, const RealizedSubgraph& realized) {
  if (job.app == nullptr) throw StructuralError("job has no application template");
  const auto& tmpl = job.app->stage(dynamic_stage);
  if (tmpl.kind != StageKind::Dynamic || !tmpl.dynamic) throw StructuralError("expand_dynamic on a non-dynamic stage");
  auto& d = job.stage(dynamic_stage);
  if (finished(d.state)) throw StructuralError("dynamic stage already expanded");
  for (StageId p : d.predecessors)
    if (job.stage(p).state != StageState::Done) throw StructuralError("dynamic stage expanded before its LLM stage completed");
  const auto& spec = *tmpl.dynamic;

  std::set<StageId> chosen;
  for (StageId c : realized.nodes) {
    if (std::find(spec.candidates.begin(), spec.candidates.end(), c) == spec.candidates.end())
      throw StructuralError("realized stage " + std::to_string(c) + " is not a candidate");
    if (!chosen.insert(c).second) throw StructuralError("realized stage listed twice");
  }
  for (const auto& e : realized.edges) {
    if (std::find(spec.edge_candidates.begin(), spec.edge_candidates.end(), e) == spec.edge_candidates.end())
      throw StructuralError("realized edge is not a candidate edge");
    if (!chosen.count(e.first) || !chosen.count(e.second))
      throw StructuralError("realized edge touches an unselected stage");
  }

  for (StageId c : spec.candidates)
    if (!chosen.count(c)) mark_skipped(job.stage(c));
  for (const auto& [a, b] : realized.edges) {
    job.stage(b).predecessors.push_back(a);
    job.stage(a).successors.push_back(b);
  }
  const std::vector<StageId> downstream = d.successors;
  for (StageId succ : downstream) {
    if (std::find(spec.candidates.begin(), spec.candidates.end(), succ) != spec.candidates.end()) continue;
    for (StageId c : chosen) {
      job.stage(succ).predecessors.push_back(c);
      job.stage(c).successors.push_back(succ);
    }
  }
  mark_skipped(d);
  job.revealed_subgraphs[dynamic_stage] = realized;
  refresh_states(job);
}

}  // namespace llmsched
