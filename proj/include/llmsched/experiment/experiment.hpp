#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "llmsched/experiment/stats.hpp"
#include "llmsched/profiler/profile.hpp"
#include "llmsched/simulator/simulator.hpp"
#include "llmsched/workload/catalog.hpp"
#include "llmsched/workload/generator.hpp"
#include "llmsched/workload/trace.hpp"

namespace llmsched {

// One point of an experiment plan. Seeds drive both the workload and the
// scheduler's exploration draws.
struct Cell {
  std::string workload = "mixed";
  SchedulerConfig scheduler;
  ClusterConfig cluster = preset_cluster("mixed");
  int num_jobs = 300;
  double lambda = 0.9;
};

inline constexpr int kTrainingJobsPerApp = 400;
inline constexpr std::uint64_t kTrainingSeed = 0x7a11;

// Profiling corpus traces, independent of every evaluation seed.
inline std::vector<TraceRecord> training_traces(const Catalog& catalog, int per_app = kTrainingJobsPerApp,
                                                std::uint64_t seed = kTrainingSeed) {
  return collect_trace(training_jobs(catalog, per_app, seed));
}

inline ProfileSet train_profiles(const Catalog& catalog, const std::vector<TraceRecord>& traces,
                                 const CalibrationProfile& calibration, const TrainingOptions& opts = {}) {
  ProfileSet out;
  for (const auto& app : catalog.app_ids()) {
    const bool seen = std::any_of(traces.begin(), traces.end(), [&](const TraceRecord& r) { return r.app_id == app; });
    if (seen) out.emplace(app, train_profile(catalog.app(app), traces, calibration, opts));
  }
  return out;
}

inline RunResult run_cell(const Cell& cell, std::uint64_t seed, const Catalog& catalog, const ProfileSet& profiles,
                          SimOptions opts = {}) {
  SchedulerConfig sc = cell.scheduler;
  sc.seed = seed;
  auto jobs = generate_workload(preset_workload(cell.workload, cell.num_jobs, cell.lambda, seed), catalog);
  return run(cell.cluster, std::move(jobs), sc, profiles, opts);
}

inline std::vector<double> cell_jcts(const Cell& cell, const std::vector<std::uint64_t>& seeds, const Catalog& catalog,
                                     const ProfileSet& profiles) {
  std::vector<double> out;
  out.reserve(seeds.size());
  for (auto s : seeds) out.push_back(run_cell(cell, s, catalog, profiles).metrics.average_jct);
  return out;
}

inline std::vector<std::uint64_t> seed_range(std::uint64_t first, int count) {
  std::vector<std::uint64_t> out;
  for (int i = 0; i < count; ++i) out.push_back(first + static_cast<std::uint64_t>(i));
  return out;
}

enum class SweepParameter { Epsilon, Ratio, Lambda };

inline SweepParameter sweep_parameter_from(std::string_view s) {
  if (s == "epsilon") return SweepParameter::Epsilon;
  if (s == "ratio") return SweepParameter::Ratio;
  if (s == "lambda") return SweepParameter::Lambda;
  throw ConfigError("unknown sweep parameter '" + std::string(s) + "'");
}

struct SweepRow {
  double value = 0.0;
  double mean_jct = 0.0;
  double normalized = 0.0;         // mean over seeds of jct / best cell mean
  double normalized_stddev = 0.0;
  std::vector<double> jcts;
};

inline Cell with_parameter(Cell cell, SweepParameter p, double v) {
  switch (p) {
    case SweepParameter::Epsilon: cell.scheduler.epsilon = v; break;
    case SweepParameter::Ratio: cell.scheduler.ratio = v; break;
    case SweepParameter::Lambda: cell.lambda = v; break;
  }
  return cell;
}

inline void normalize_rows(std::vector<SweepRow>& rows, double reference) {
  for (auto& r : rows) {
    std::vector<double> norm;
    for (double j : r.jcts) norm.push_back(j / reference);
    r.normalized = stats::mean(norm);
    r.normalized_stddev = stats::stddev(norm);
  }
}

inline std::vector<SweepRow> sweep(SweepParameter p, const std::vector<double>& values, const Cell& base,
                                   const std::vector<std::uint64_t>& seeds, const Catalog& catalog,
                                   const ProfileSet& profiles) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  std::vector<SweepRow> rows;
  for (double v : values) {
    SweepRow r;
    r.value = v;
    r.jcts = cell_jcts(with_parameter(base, p, v), seeds, catalog, profiles);
    r.mean_jct = stats::mean(r.jcts);
    rows.push_back(std::move(r));
  }
  const double best = std::min_element(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
                        return a.mean_jct < b.mean_jct;
                      })->mean_jct;
  normalize_rows(rows, best);
  return rows;
}

struct AblationRow {
  std::string variant;
  double mean_jct = 0.0;
  double normalized = 0.0;  // relative to full LLMSched
  double normalized_stddev = 0.0;
  std::vector<double> jcts;
};

// Full LLMSched, LLMSched on static historical means, and LLMSched with
// exploration disabled.
inline std::vector<AblationRow> ablate(const Cell& base, const std::vector<std::uint64_t>& seeds, const Catalog& catalog,
                                       const ProfileSet& profiles) {
  Cell full = base;
  full.scheduler.policy = Policy::LlmSched;
  full.scheduler.estimator = EstimatorMode::Posterior;
  Cell no_bn = full;
  no_bn.scheduler.estimator = EstimatorMode::PriorMeans;
  Cell no_unc = full;
  no_unc.scheduler.epsilon = 0.0;

  std::vector<AblationRow> rows;
  for (auto [name, cell] : {std::pair{"llmsched", full}, std::pair{"without_bn", no_bn}, std::pair{"without_uncertainty", no_unc}}) {
    AblationRow r;
    r.variant = name;
    r.jcts = cell_jcts(cell, seeds, catalog, profiles);
    r.mean_jct = stats::mean(r.jcts);
    rows.push_back(std::move(r));
  }
  const double ref = rows.front().mean_jct;
  for (auto& r : rows) {
    std::vector<double> norm;
    for (double j : r.jcts) norm.push_back(j / ref);
    r.normalized = stats::mean(norm);
    r.normalized_stddev = stats::stddev(norm);
  }
  return rows;
}

}  // namespace llmsched
