#include <gtest/gtest.h>

#include <sstream>

#include "support/builders.hpp"
#include "support/snapshots.hpp"

using namespace llmsched;
using namespace llmsched::testing;

namespace {

SchedulerConfig policy(Policy p, double eps = 0.2, double r = 0.2) {
  SchedulerConfig c;
  c.policy = p;
  c.epsilon = eps;
  c.ratio = r;
  return c;
}

ClusterConfig small_cluster(int regular, int llm, std::vector<double> latency) {
  ClusterConfig c;
  c.num_regular_executors = regular;
  c.num_llm_executors = llm;
  c.max_batch_size = static_cast<int>(latency.size());
  c.calibration = CalibrationProfile(std::move(latency));
  return c;
}

JobInstance job_of(const ApplicationTemplate& app, int id, double arrival, double d) {
  JobInstance j;
  j.truth = uniform_truth(app, d);
  j.view = make_view(app, id, arrival);
  return j;
}

}  // namespace

TEST(Fig2, SjfDelaysTheLongPlanningJob) {
  Fig2Scenario f;
  // SJF runs the code-generation job (mean 9 s) first: 5 s and (2 + 5 + 1) s
  EXPECT_DOUBLE_EQ(f.average_jct(policy(Policy::Sjf)), 6.5);
}

TEST(Fig2, UncertaintyAwareOrderIsOptimal) {
  Fig2Scenario f;
  EXPECT_DOUBLE_EQ(f.average_jct(policy(Policy::LlmSched, 1.0, 1.0)), 5.0);
  EXPECT_DOUBLE_EQ(f.average_jct(policy(Policy::Fcfs)), 5.0);
}

TEST(Simulator, SingleJobRunsForItsDuration) {
  const auto app = chain_app(1);
  ProfileSet p;
  p.emplace("chain", point_profile(app, 3.0));
  std::vector<JobInstance> jobs;
  jobs.push_back(job_of(app, 0, 2.0, 3.0));
  const auto r = run(small_cluster(1, 1, {20.0}), std::move(jobs), policy(Policy::Fcfs), p);
  ASSERT_EQ(r.metrics.jobs.size(), 1u);
  EXPECT_DOUBLE_EQ(r.metrics.jobs[0].completion, 5.0);
  EXPECT_DOUBLE_EQ(r.metrics.jobs[0].jct, 3.0);
  EXPECT_DOUBLE_EQ(r.metrics.makespan, 5.0);
}

TEST(Simulator, MultiTaskStageSpreadsOverExecutors) {
  auto app = chain_app(1);
  app.stages[0].num_tasks = 4;
  ProfileSet p;
  p.emplace("chain", point_profile(app, 2.0));
  std::vector<JobInstance> jobs;
  jobs.push_back(job_of(app, 0, 0.0, 1.0));
  const auto r = run(small_cluster(2, 1, {20.0}), std::move(jobs), policy(Policy::Fcfs), p);
  EXPECT_DOUBLE_EQ(r.metrics.average_jct, 2.0);
  EXPECT_DOUBLE_EQ(r.metrics.regular_utilization, 1.0);
}

TEST(Simulator, CoBatchedLlmTasksSlowDown) {
  const auto app = chain_app(1, StageKind::Llm);
  ProfileSet p;
  p.emplace("chain", point_profile(app, 10.0, 2));
  std::vector<JobInstance> jobs;
  jobs.push_back(job_of(app, 0, 0.0, 10.0));
  jobs.push_back(job_of(app, 1, 0.0, 10.0));
  const auto r = run(small_cluster(1, 1, {10.0, 15.0}), std::move(jobs), policy(Policy::Fcfs), p);
  EXPECT_DOUBLE_EQ(r.metrics.jobs[0].jct, 15.0);
  EXPECT_DOUBLE_EQ(r.metrics.jobs[1].jct, 15.0);
  EXPECT_DOUBLE_EQ(r.metrics.llm_slot_utilization, 1.0);
}

TEST(Simulator, JoiningTaskRescalesTheRunningOne) {
  const auto app = chain_app(1, StageKind::Llm);
  ProfileSet p;
  p.emplace("chain", point_profile(app, 10.0, 2));
  std::vector<JobInstance> jobs;
  jobs.push_back(job_of(app, 0, 0.0, 10.0));
  jobs.push_back(job_of(app, 1, 5.0, 10.0));
  const auto r = run(small_cluster(1, 1, {10.0, 15.0}), std::move(jobs), policy(Policy::Fcfs), p);
  // 5 s alone, 5 s of work left at 2/3 speed; the second job then finishes alone
  EXPECT_NEAR(r.metrics.jobs[0].completion, 12.5, 1e-9);
  EXPECT_NEAR(r.metrics.jobs[1].completion, 17.5, 1e-9);
}

TEST(Simulator, RescaleRemaining) {
  const CalibrationProfile cal({10.0, 15.0});
  EXPECT_DOUBLE_EQ(rescale_remaining(10.0, 1, 2, cal), 15.0);
  EXPECT_DOUBLE_EQ(rescale_remaining(15.0, 2, 1, cal), 10.0);
}

TEST(Simulator, SeparateExecutorsRunLlmJobsAlone) {
  const auto app = chain_app(1, StageKind::Llm);
  ProfileSet p;
  p.emplace("chain", point_profile(app, 10.0, 2));
  std::vector<JobInstance> jobs;
  jobs.push_back(job_of(app, 0, 0.0, 10.0));
  jobs.push_back(job_of(app, 1, 0.0, 10.0));
  const auto r = run(small_cluster(1, 2, {10.0, 15.0}), std::move(jobs), policy(Policy::Fcfs), p);
  EXPECT_DOUBLE_EQ(r.metrics.average_jct, 10.0);
}

TEST(Simulator, DependentStageWaitsForPredecessor) {
  const auto app = chain_app(2);
  ProfileSet p;
  p.emplace("chain", point_profile(app, 2.0));
  std::vector<JobInstance> jobs;
  jobs.push_back(job_of(app, 0, 0.0, 1.5));
  const auto r = run(small_cluster(4, 1, {20.0}), std::move(jobs), policy(Policy::Fcfs), p);
  EXPECT_DOUBLE_EQ(r.metrics.average_jct, 3.0);
  EXPECT_EQ(r.jobs[0].view.stage(1).state, StageState::Done);
}

TEST(Simulator, DynamicStageRevealsTruth) {
  const auto app = planning_app(3, {{2, 3}}, 0.5, true);
  ProfileSet p;
  p.emplace("plan", point_profile(app, 4.0));
  JobInstance j;
  j.truth.task_durations = {{2.0}, {}, {1.0}, {1.0}, {}, {0.5}};
  j.truth.dynamic[1] = RealizedSubgraph{{2, 3}, {{2, 3}}};
  j.view = make_view(app, 0, 0.0);
  std::vector<JobInstance> jobs;
  jobs.push_back(std::move(j));
  const auto r = run(small_cluster(3, 1, {20.0}), std::move(jobs), policy(Policy::Fcfs), p);
  const auto& v = r.jobs[0].view;
  EXPECT_EQ(v.revealed_subgraphs.at(1), (RealizedSubgraph{{2, 3}, {{2, 3}}}));
  EXPECT_EQ(v.stage(4).state, StageState::Skipped);
  // planner 2 s, then 2 -> 3 in sequence, then the sink
  EXPECT_DOUBLE_EQ(r.metrics.average_jct, 4.5);
}

TEST(Simulator, ChainStopsAtRealizedLength) {
  WorkloadSpec spec;
  spec.mix = {{"codegen", 1.0}};
  spec.num_jobs = 30;
  spec.seed = 5;
  const auto& fx = CatalogFixture::shared();
  const auto r = run(preset_cluster("chainlike"), generate_workload(spec, fx.catalog), policy(Policy::Fcfs), fx.profiles);
  for (const auto& j : r.jobs)
    for (const auto& s : j.view.stages)
      EXPECT_EQ(s.state == StageState::Done, j.truth.executed(s.id)) << "job " << j.view.job_id << " stage " << s.id;
}

TEST(Simulator, MissingProfileIsAConfigError) {
  const auto app = chain_app(1);
  std::vector<JobInstance> jobs;
  jobs.push_back(job_of(app, 0, 0.0, 1.0));
  EXPECT_THROW(run(small_cluster(1, 1, {20.0}), std::move(jobs), policy(Policy::Fcfs), ProfileSet{}), ConfigError);
  ProfileSet p;
  p.emplace("chain", point_profile(app, 1.0));
  EXPECT_THROW(run(small_cluster(1, 1, {20.0}), {}, policy(Policy::Fcfs), p), ConfigError);
  EXPECT_THROW(run(small_cluster(0, 1, {20.0}), {}, policy(Policy::Fcfs), p), ConfigError);
}

TEST(Simulator, DeterministicOutputs) {
  const auto& fx = CatalogFixture::shared();
  auto once = [&] {
    const auto jobs = generate_workload(preset_workload("mixed", 60, 0.9, 3), fx.catalog);
    const auto r = run(preset_cluster("mixed"), jobs, policy(Policy::LlmSched, 0.5), fx.profiles);
    std::ostringstream os;
    write_job_records(os, r.metrics);
    write_summary(os, r.metrics);
    return os.str();
  };
  EXPECT_EQ(once(), once());
}

TEST(Simulator, InvariantsHoldForEveryPolicy) {
  const auto& fx = CatalogFixture::shared();
  for (auto p : {Policy::Fcfs, Policy::Fair, Policy::Sjf, Policy::Srtf, Policy::Argus, Policy::LlmSched}) {
    SimOptions opts;
    opts.check_invariants = true;
    const auto r = run(preset_cluster("mixed"), generate_workload(preset_workload("mixed", 80, 0.9, 4), fx.catalog),
                       policy(p, 0.5), fx.profiles, opts);
    EXPECT_TRUE(r.metrics.violations.empty()) << to_string(p) << ": " << r.metrics.violations.front();
    EXPECT_EQ(r.metrics.jobs.size(), 80u);
    for (const auto& j : r.metrics.jobs) EXPECT_GT(j.jct, 0.0);
  }
}
