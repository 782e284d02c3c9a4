#pragma once

#include <cmath>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "llmsched/core/errors.hpp"
#include "llmsched/core/job.hpp"
#include "llmsched/simulator/cluster.hpp"
#include "llmsched/workload/catalog.hpp"

namespace llmsched {

struct WorkloadSpec {
  std::map<std::string, double> mix;  // app_id -> fraction
  int num_jobs = 300;
  double lambda = 0.9;  // jobs per second
  std::uint64_t seed = 1;

  void validate() const {
    if (mix.empty()) throw ConfigError("workload mix is empty");
    double total = 0.0;
    for (const auto& [app, f] : mix) {
      if (f < 0.0) throw ConfigError("negative mix fraction for " + app);
      total += f;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError("mix fractions must sum to 1");
    if (!(lambda > 0.0)) throw ConfigError("arrival rate must be positive");
    if (num_jobs < 1) throw ConfigError("workload needs at least one job");
  }
};

inline const std::vector<std::string>& workload_presets() {
  static const std::vector<std::string> names{"mixed", "predefined", "chainlike", "planning"};
  return names;
}

inline std::map<std::string, double> preset_mix(std::string_view preset) {
  auto even = [](std::vector<std::string> apps) {
    std::map<std::string, double> m;
    for (const auto& a : apps) m[a] = 1.0 / static_cast<double>(apps.size());
    return m;
  };
  if (preset == "mixed") return even({"seqsort", "docmerge", "codegen", "websearch", "taskauto", "compiler"});
  if (preset == "predefined") return even({"seqsort", "docmerge"});
  if (preset == "chainlike") return even({"codegen", "websearch"});
  if (preset == "planning") return even({"taskauto", "compiler"});
  throw ConfigError("unknown workload preset '" + std::string(preset) + "'");
}

inline WorkloadSpec preset_workload(std::string_view preset, int num_jobs = 300, double lambda = 0.9, std::uint64_t seed = 1) {
  return {preset_mix(preset), num_jobs, lambda, seed};
}

// Jobs with Poisson arrivals and hidden truth; job ids are 0..n-1 in
// arrival order. Templates are borrowed from the catalog, which must outlive
// the returned jobs.
inline std::vector<JobInstance> generate_workload(const WorkloadSpec& spec, const Catalog& catalog) {
  spec.validate();
  std::vector<const AppModel*> models;
  std::vector<double> weights;
  for (const auto& [app, f] : spec.mix) {
    models.push_back(&catalog.model(app));
    weights.push_back(f);
  }
  std::mt19937_64 rng(spec.seed);
  std::exponential_distribution<double> gap(spec.lambda);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());

  std::vector<JobInstance> jobs;
  jobs.reserve(static_cast<std::size_t>(spec.num_jobs));
  double t = 0.0;
  for (int i = 0; i < spec.num_jobs; ++i) {
    t += gap(rng);
    const AppModel& m = *models[pick(rng)];
    JobInstance job;
    job.truth = sample_truth(m, catalog.task_sigma(), rng);
    job.view = make_view(m.app, i, t);
    jobs.push_back(std::move(job));
  }
  return jobs;
}

// Profiling corpus: `per_app` jobs of every catalog application, truth only.
inline std::vector<JobInstance> training_jobs(const Catalog& catalog, int per_app, std::uint64_t seed) {
  std::vector<JobInstance> jobs;
  std::mt19937_64 rng(seed);
  int id = 0;
  for (const auto& app : catalog.app_ids()) {
    const auto& m = catalog.model(app);
    for (int i = 0; i < per_app; ++i) {
      JobInstance job;
      job.truth = sample_truth(m, catalog.task_sigma(), rng);
      job.view = make_view(m.app, id++, 0.0);
      jobs.push_back(std::move(job));
    }
  }
  return jobs;
}

// Offered load at the default arrival rate, against full-batch LLM throughput
// B * l(1) / l(B) per executor.
inline constexpr double kPresetCalibrationSlope = 0.08;

// Cluster presets sized for roughly 85-90% offered load at lambda = 0.9.
inline ClusterConfig preset_cluster(std::string_view preset) {
  ClusterConfig c;
  c.max_batch_size = 8;
  c.calibration = CalibrationProfile::linear(8, 20.0, kPresetCalibrationSlope);
  if (preset == "mixed") {
    c.num_regular_executors = 7;
    c.num_llm_executors = 4;
  } else if (preset == "predefined") {
    c.num_regular_executors = 2;
    c.num_llm_executors = 8;
  } else if (preset == "chainlike") {
    c.num_regular_executors = 10;
    c.num_llm_executors = 4;
  } else if (preset == "planning") {
    c.num_regular_executors = 9;
    c.num_llm_executors = 1;
  } else {
    throw ConfigError("unknown cluster preset '" + std::string(preset) + "'");
  }
  return c;
}

}  // namespace llmsched
