#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <memory>
#include <ostream>
#include <queue>
#include <sstream>
#include <string>
#include <vector>

#include "llmsched/core/job.hpp"
#include "llmsched/profiler/estimator.hpp"
#include "llmsched/profiler/profile.hpp"
#include "llmsched/scheduler/baselines.hpp"
#include "llmsched/simulator/cluster.hpp"

namespace llmsched {

enum class EventKind { TaskCompletion = 0, JobArrival = 1, SchedulerEpoch = 2 };

struct SimEvent {
  double time = 0.0;
  EventKind kind = EventKind::SchedulerEpoch;
  std::uint64_t seq = 0;
  int job = -1;  // index into the workload
  StageId stage = 0;
  int task = 0;
  std::uint64_t version = 0;

  // min-heap order on (time, kind, seq)
  bool operator>(const SimEvent& o) const {
    if (time != o.time) return time > o.time;
    if (kind != o.kind) return kind > o.kind;
    return seq > o.seq;
  }
};

struct JobRecord {
  int job_id = 0;
  std::string app_id;
  double arrival = 0.0;
  double completion = 0.0;
  double jct = 0.0;
};

struct RunMetrics {
  std::vector<JobRecord> jobs;
  double average_jct = 0.0;
  double makespan = 0.0;
  double regular_utilization = 0.0;
  double llm_utilization = 0.0;      // fraction of time an LLM executor is non-idle
  double llm_slot_utilization = 0.0;  // occupied batch slots / total slots
  std::size_t events = 0;
  std::size_t invocations = 0;
  double overhead_mean_ms = 0.0;  // wall clock, excluded from deterministic outputs
  std::vector<std::string> violations;
};

struct SimOptions {
  bool check_invariants = false;
  std::ostream* score_dump = nullptr;
};

struct RunResult {
  RunMetrics metrics;
  std::vector<JobInstance> jobs;
};

class Simulator {
 public:
  Simulator(ClusterConfig cluster, std::vector<JobInstance> jobs, std::unique_ptr<Scheduler> scheduler,
            const ProfileSet& profiles, SimOptions opts = {})
      : cluster_(std::move(cluster)), jobs_(std::move(jobs)), scheduler_(std::move(scheduler)), profiles_(profiles),
        opts_(opts) {
    cluster_.validate();
    if (jobs_.empty()) throw ConfigError("workload is empty");
    for (const auto& j : jobs_) {
      if (!profiles_.count(j.view.app_id)) throw ConfigError("profile missing for application " + j.view.app_id);
      if (j.view.app == nullptr) throw ConfigError("job without application template");
      topological_stages(j.view);
    }
    regular_busy_.assign(static_cast<std::size_t>(cluster_.num_regular_executors), std::nullopt);
    llm_batches_.resize(static_cast<std::size_t>(cluster_.num_llm_executors));
    llm_busy_since_.assign(llm_batches_.size(), 0.0);
    versions_.resize(jobs_.size());
    for (std::size_t i = 0; i < jobs_.size(); ++i) {
      versions_[i].resize(jobs_[i].view.stages.size());
      for (std::size_t s = 0; s < jobs_[i].view.stages.size(); ++s)
        versions_[i][s].assign(jobs_[i].view.stages[s].tasks.size(), 0);
    }
  }

  RunResult run() {
    for (std::size_t i = 0; i < jobs_.size(); ++i) push({jobs_[i].view.arrival, EventKind::JobArrival, 0, static_cast<int>(i)});
    while (!events_.empty()) {
      const SimEvent ev = events_.top();
      events_.pop();
      if (ev.kind == EventKind::TaskCompletion && ev.version != versions_[idx(ev.job)][idx(ev.stage)][idx(ev.task)]) continue;
      now_ = ev.time;
      ++metrics_.events;
      switch (ev.kind) {
        case EventKind::JobArrival: arrive(ev.job); break;
        case EventKind::TaskCompletion: complete_task(ev.job, ev.stage, ev.task); break;
        case EventKind::SchedulerEpoch: epoch(); break;
      }
    }
    for (const auto& j : jobs_)
      if (!j.view.complete()) throw StructuralError("job " + std::to_string(j.view.job_id) + " can never complete");
    finalize();
    return {std::move(metrics_), std::move(jobs_)};
  }

 private:
  struct LlmSlot {
    int job;
    StageId stage;
    int task;
  };

  template <typename T>
  static std::size_t idx(T v) { return static_cast<std::size_t>(v); }

  void push(SimEvent ev) {
    ev.seq = seq_++;
    events_.push(ev);
  }

  void request_epoch() {
    if (epoch_pending_ && epoch_time_ == now_) return;
    epoch_pending_ = true;
    epoch_time_ = now_;
    push({now_, EventKind::SchedulerEpoch});
  }

  JobView& view(int j) { return jobs_[idx(j)].view; }
  TaskRuntime& task(int j, StageId s, int t) { return view(j).stage(s).tasks[idx(t)]; }

  void arrive(int j) {
    active_.push_back(j);
    refresh_states(view(j));
    if (view(j).complete()) finish_job(j);
    request_epoch();
  }

  double rate_at(int batch) const { return cluster_.calibration.latency(1) / cluster_.calibration.latency(batch); }

  // Brings every task on `exec` up to `now_` and re-keys completions for the
  // new batch size.
  void rescale_llm_tasks(int exec, int b_old, int b_new) {
    const double r = rate_at(b_new);
    for (const auto& slot : llm_batches_[idx(exec)]) {
      auto& t = task(slot.job, slot.stage, slot.task);
      t.work_at_sync += (now_ - t.sync_time) * t.rate;
      t.batch_integral += (now_ - t.sync_time) * b_old;
      t.sync_time = now_;
      t.rate = r;
      const double total = jobs_[idx(slot.job)].truth.task_durations[idx(slot.stage)][idx(slot.task)];
      const double remaining = std::max(0.0, total - t.work_at_sync) / r;
      push({now_ + remaining, EventKind::TaskCompletion, 0, slot.job, slot.stage, slot.task,
            ++versions_[idx(slot.job)][idx(slot.stage)][idx(slot.task)]});
    }
  }

  void launch(const TaskRef& ref, int job_index, bool llm, int exec) {
    auto& jv = view(job_index);
    auto& st = jv.stage(ref.stage);
    if (opts_.check_invariants && !dependencies_met(jv, st))
      violation("dependency: job " + std::to_string(jv.job_id) + " stage " + std::to_string(ref.stage) + " started early");
    auto& t = st.tasks[idx(ref.task)];
    t.state = TaskState::Running;
    t.start_time = now_;
    t.sync_time = now_;
    t.work_at_sync = 0.0;
    t.batch_integral = 0.0;
    t.executor = exec;
    st.launched++;
    if (st.state == StageState::Ready || st.state == StageState::Blocked) st.state = StageState::Running;
    const double total = jobs_[idx(job_index)].truth.task_durations[idx(ref.stage)][idx(ref.task)];
    if (!llm) {
      t.rate = 1.0;
      regular_busy_[idx(exec)] = LlmSlot{job_index, ref.stage, ref.task};
      push({now_ + total, EventKind::TaskCompletion, 0, job_index, ref.stage, ref.task,
            ++versions_[idx(job_index)][idx(ref.stage)][idx(ref.task)]});
      return;
    }
    auto& batch = llm_batches_[idx(exec)];
    const int b_old = static_cast<int>(batch.size());
    if (b_old == 0) llm_busy_since_[idx(exec)] = now_;
    if (b_old > 0) rescale_llm_tasks(exec, b_old, b_old + 1);
    batch.push_back({job_index, ref.stage, ref.task});
    t.rate = rate_at(b_old + 1);
    push({now_ + total / t.rate, EventKind::TaskCompletion, 0, job_index, ref.stage, ref.task,
          ++versions_[idx(job_index)][idx(ref.stage)][idx(ref.task)]});
    if (opts_.check_invariants && static_cast<int>(batch.size()) > cluster_.max_batch_size)
      violation("capacity: LLM executor " + std::to_string(exec) + " over max batch");
  }

  void complete_task(int j, StageId s, int ti) {
    auto& jv = view(j);
    auto& st = jv.stage(s);
    auto& t = st.tasks[idx(ti)];
    const auto& truth = jobs_[idx(j)].truth;
    const double total = truth.task_durations[idx(s)][idx(ti)];
    const bool llm = st.kind == StageKind::Llm;
    double observed_b1 = now_ - t.start_time;
    if (llm) {
      auto& batch = llm_batches_[idx(t.executor)];
      const int b_old = static_cast<int>(batch.size());
      t.batch_integral += (now_ - t.sync_time) * b_old;
      batch.erase(std::find_if(batch.begin(), batch.end(), [&](const LlmSlot& x) {
        return x.job == j && x.stage == s && x.task == ti;
      }));
      if (b_old > 1) rescale_llm_tasks(t.executor, b_old, b_old - 1);
      else llm_busy_time_ += now_ - llm_busy_since_[idx(t.executor)];
      const double wall = now_ - t.start_time;
      const double b_eff = wall > 0.0 ? t.batch_integral / wall : 1.0;
      observed_b1 = calibrate(wall, std::clamp(b_eff, 1.0, static_cast<double>(cluster_.max_batch_size)), 1.0,
                              cluster_.calibration);
      llm_slot_time_ += wall;
    } else {
      regular_busy_[idx(t.executor)].reset();
      regular_busy_time_ += now_ - t.start_time;
    }
    t.state = TaskState::Done;
    t.work_at_sync = total;
    st.done++;
    st.observed_duration += observed_b1 / st.num_tasks;

    if (st.done == st.num_tasks) {
      st.state = StageState::Done;
      const auto& prof = profiles_.at(jv.app_id);
      update_evidence(jv, s, st.observed_duration, 1.0, prof);
      for (StageId succ : std::vector<StageId>(st.successors)) {
        if (jv.stage(succ).kind != StageKind::Dynamic || finished(jv.stage(succ).state)) continue;
        auto it = truth.dynamic.find(succ);
        expand_dynamic(jv, succ, it == truth.dynamic.end() ? RealizedSubgraph{} : it->second);
      }
      if (const auto& chain = jv.app->chain; chain && truth.chain_iterations > 0 &&
                                               s == chain->last_stage_of(truth.chain_iterations - 1)) {
        for (int it = truth.chain_iterations; it < chain->iterations; ++it)
          for (int k = 0; k < chain->pattern_length; ++k) {
            const StageId skip = chain->first_stage + it * chain->pattern_length + k;
            if (!finished(jv.stage(skip).state)) {
              mark_skipped(jv.stage(skip));
              update_evidence(jv, skip, 0.0, 1.0, prof);
            }
          }
      }
      refresh_states(jv);
      if (jv.complete()) finish_job(j);
    }
    request_epoch();
  }

  void finish_job(int j) {
    auto& jv = view(j);
    jv.completion = now_;
    active_.erase(std::remove(active_.begin(), active_.end(), j), active_.end());
    if (opts_.check_invariants) {
      const auto rec = trace_of(jobs_[idx(j)].truth, jv.job_id, jv.app_id, jv.arrival);
      const double bound = detail::realized_critical_path(*jv.app, rec);
      if (now_ - jv.arrival < bound - 1e-6)
        violation("jct-bound: job " + std::to_string(jv.job_id) + " finished faster than its critical path");
    }
  }

  void epoch() {
    epoch_pending_ = false;
    if (active_.empty()) return;
    SchedulingSnapshot snap;
    std::vector<int> order = active_;
    std::sort(order.begin(), order.end());
    for (int j : order) snap.jobs.push_back(&view(j));
    snap.profiles = &profiles_;
    snap.now = now_;
    std::size_t running_llm = 0;
    for (const auto& b : llm_batches_) running_llm += b.size();
    snap.avg_llm_batch = std::max(1.0, static_cast<double>(running_llm) / static_cast<double>(llm_batches_.size()));
    snap.cache = &cache_;
    snap.score_dump = opts_.score_dump;

    const auto t0 = std::chrono::steady_clock::now();
    const ScheduleDecision d = scheduler_->schedule(snap);
    const auto t1 = std::chrono::steady_clock::now();
    overhead_ms_ += std::chrono::duration<double, std::milli>(t1 - t0).count();
    metrics_.invocations++;
    dispatch(d);
    if (opts_.check_invariants) check_work_conservation();
  }

  int job_index(int job_id) const {
    // job ids are dense indices into the workload
    if (job_id >= 0 && idx(job_id) < jobs_.size() && jobs_[idx(job_id)].view.job_id == job_id) return job_id;
    for (std::size_t i = 0; i < jobs_.size(); ++i)
      if (jobs_[i].view.job_id == job_id) return static_cast<int>(i);
    throw StructuralError("decision references unknown job " + std::to_string(job_id));
  }

  bool launchable(int j, const TaskRef& ref) {
    const auto& jv = view(j);
    const auto& st = jv.stage(ref.stage);
    if (ref.task < 0 || ref.task >= st.num_tasks) return false;
    if (st.tasks[idx(ref.task)].state != TaskState::Pending) return false;
    return st.state == StageState::Running || is_ready(jv, st);
  }

  void dispatch(const ScheduleDecision& d) {
    for (const auto& ref : d.regular) {
      auto free = std::find_if(regular_busy_.begin(), regular_busy_.end(), [](const auto& x) { return !x.has_value(); });
      if (free == regular_busy_.end()) break;
      const int j = job_index(ref.job_id);
      if (!launchable(j, ref) || view(j).stage(ref.stage).kind != StageKind::Regular) continue;
      launch(ref, j, false, static_cast<int>(free - regular_busy_.begin()));
    }
    std::vector<int> loads(llm_batches_.size());
    for (const auto& ref : d.llm) {
      for (std::size_t e = 0; e < loads.size(); ++e) loads[e] = static_cast<int>(llm_batches_[e].size());
      const auto exec = assign_llm_task(loads, cluster_.max_batch_size);
      if (!exec) break;
      const int j = job_index(ref.job_id);
      if (!launchable(j, ref) || view(j).stage(ref.stage).kind != StageKind::Llm) continue;
      launch(ref, j, true, *exec);
    }
  }

  void check_work_conservation() {
    const bool regular_free = std::any_of(regular_busy_.begin(), regular_busy_.end(), [](const auto& x) { return !x; });
    const bool llm_free = std::any_of(llm_batches_.begin(), llm_batches_.end(), [&](const auto& b) {
      return static_cast<int>(b.size()) < cluster_.max_batch_size;
    });
    for (int j : active_) {
      const auto& jv = view(j);
      for (StageId s : schedulable_stages(jv)) {
        const bool llm = jv.stage(s).kind == StageKind::Llm;
        if ((llm && llm_free) || (!llm && regular_free))
          violation("work-conservation: idle capacity while job " + std::to_string(jv.job_id) + " stage " +
                    std::to_string(s) + " waits");
      }
    }
  }

  void violation(std::string what) {
    std::ostringstream os;
    os << std::setprecision(9) << "t=" << now_ << ' ' << what;
    metrics_.violations.push_back(os.str());
  }

  void finalize() {
    double sum = 0.0;
    double first = INFINITY;
    for (const auto& j : jobs_) {
      const auto& v = j.view;
      metrics_.jobs.push_back({v.job_id, v.app_id, v.arrival, v.completion, v.completion - v.arrival});
      sum += v.completion - v.arrival;
      metrics_.makespan = std::max(metrics_.makespan, v.completion);
      first = std::min(first, v.arrival);
    }
    std::sort(metrics_.jobs.begin(), metrics_.jobs.end(), [](const JobRecord& a, const JobRecord& b) { return a.job_id < b.job_id; });
    metrics_.average_jct = sum / static_cast<double>(jobs_.size());
    const double span = metrics_.makespan - std::min(first, metrics_.makespan);
    if (span > 0.0) {
      metrics_.regular_utilization = regular_busy_time_ / (span * cluster_.num_regular_executors);
      metrics_.llm_utilization = llm_busy_time_ / (span * cluster_.num_llm_executors);
      metrics_.llm_slot_utilization = llm_slot_time_ / (span * cluster_.num_llm_executors * cluster_.max_batch_size);
    }
    metrics_.overhead_mean_ms = metrics_.invocations ? overhead_ms_ / static_cast<double>(metrics_.invocations) : 0.0;
  }

  ClusterConfig cluster_;
  std::vector<JobInstance> jobs_;
  std::unique_ptr<Scheduler> scheduler_;
  const ProfileSet& profiles_;
  SimOptions opts_;

  std::priority_queue<SimEvent, std::vector<SimEvent>, std::greater<>> events_;
  std::uint64_t seq_ = 0;
  double now_ = 0.0;
  bool epoch_pending_ = false;
  double epoch_time_ = -1.0;
  std::vector<int> active_;
  std::vector<std::optional<LlmSlot>> regular_busy_;
  std::vector<std::vector<LlmSlot>> llm_batches_;
  std::vector<double> llm_busy_since_;
  std::vector<std::vector<std::vector<std::uint64_t>>> versions_;
  InferenceCache cache_;
  RunMetrics metrics_;
  double overhead_ms_ = 0.0;
  double regular_busy_time_ = 0.0;
  double llm_busy_time_ = 0.0;
  double llm_slot_time_ = 0.0;
};

inline RunResult run(const ClusterConfig& cluster, std::vector<JobInstance> workload, const SchedulerConfig& scheduler,
                     const ProfileSet& profiles, SimOptions opts = {}) {
  return Simulator(cluster, std::move(workload), make_scheduler(scheduler), profiles, opts).run();
}

// Deterministic per-job records.
inline void write_job_records(std::ostream& os, const RunMetrics& m) {
  os << "job_id,app_id,arrival,completion,jct\n" << std::setprecision(17);
  for (const auto& r : m.jobs) os << r.job_id << ',' << r.app_id << ',' << r.arrival << ',' << r.completion << ',' << r.jct << '\n';
}

// Deterministic summary; wall-clock overhead lives in write_timing.
inline void write_summary(std::ostream& os, const RunMetrics& m) {
  os << "jobs,average_jct,makespan,regular_utilization,llm_utilization,llm_slot_utilization,events,invocations\n"
     << std::setprecision(17) << m.jobs.size() << ',' << m.average_jct << ',' << m.makespan << ',' << m.regular_utilization
     << ',' << m.llm_utilization << ',' << m.llm_slot_utilization << ',' << m.events << ',' << m.invocations << '\n';
}

inline void write_timing(std::ostream& os, const RunMetrics& m) {
  os << "invocations,overhead_mean_ms\n" << m.invocations << ',' << std::setprecision(6) << m.overhead_mean_ms << '\n';
}

}  // namespace llmsched
