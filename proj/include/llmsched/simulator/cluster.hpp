#pragma once

#include <fstream>
#include <optional>
#include <span>
#include <string>

#include <json.hpp>

#include "llmsched/core/errors.hpp"
#include "llmsched/profiler/calibration.hpp"

namespace llmsched {

struct ClusterConfig {
  int num_regular_executors = 1;
  int num_llm_executors = 1;
  int max_batch_size = 1;
  CalibrationProfile calibration;

  void validate() const {
    if (num_regular_executors < 1 || num_llm_executors < 1) throw ConfigError("executor counts must be at least 1");
    if (max_batch_size < 1) throw ConfigError("max batch size must be at least 1");
    if (calibration.max_batch() < max_batch_size) throw ConfigError("calibration table must cover [1, max batch size]");
  }
};

inline nlohmann::ordered_json to_json(const ClusterConfig& c) {
  nlohmann::ordered_json j;
  j["num_regular_executors"] = c.num_regular_executors;
  j["num_llm_executors"] = c.num_llm_executors;
  j["max_batch_size"] = c.max_batch_size;
  j["decode_latency_ms"] = c.calibration.table();
  return j;
}

inline ClusterConfig cluster_from_json(const nlohmann::json& j) {
  ClusterConfig c;
  c.num_regular_executors = j.at("num_regular_executors").get<int>();
  c.num_llm_executors = j.at("num_llm_executors").get<int>();
  c.max_batch_size = j.at("max_batch_size").get<int>();
  c.calibration = CalibrationProfile(j.at("decode_latency_ms").get<std::vector<double>>());
  c.validate();
  return c;
}

inline ClusterConfig load_cluster(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open cluster config " + path);
  try {
    return cluster_from_json(nlohmann::json::parse(is));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cluster config " + path + ": " + e.what());
  }
}

// Executor with a free batch slot and the fewest running tasks, lowest id
// on ties. nullopt when every executor is full.
inline std::optional<int> assign_llm_task(std::span<const int> running, int max_batch) {
  std::optional<int> best;
  for (std::size_t i = 0; i < running.size(); ++i) {
    if (running[i] >= max_batch) continue;
    if (!best || running[i] < running[static_cast<std::size_t>(*best)]) best = static_cast<int>(i);
  }
  return best;
}

// Remaining wall time of a running LLM task after its batch changes.
inline double rescale_remaining(double remaining, int b_old, int b_new, const CalibrationProfile& cal) {
  return remaining * cal.latency(b_new) / cal.latency(b_old);
}

}  // namespace llmsched
