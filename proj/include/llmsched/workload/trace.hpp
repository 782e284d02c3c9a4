#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "llmsched/core/errors.hpp"
#include "llmsched/core/job.hpp"

namespace llmsched {

struct StageTrace {
  StageId stage_id = 0;
  bool executed = false;
  double duration = 0.0;  // seconds at batch size 1, 0 when not executed
  bool operator==(const StageTrace&) const = default;
};

struct TraceRecord {
  int job_id = 0;
  std::string app_id;
  double arrival = 0.0;
  std::vector<StageTrace> stages;
  std::map<StageId, RealizedSubgraph> dynamic;
  int chain_length = 0;
  bool operator==(const TraceRecord&) const = default;

  double duration_of(StageId s) const {
    for (const auto& st : stages)
      if (st.stage_id == s) return st.duration;
    throw TrainingError("trace of job " + std::to_string(job_id) + " lacks stage " + std::to_string(s));
  }
};

inline TraceRecord trace_of(const JobTruth& truth, int job_id, const std::string& app_id, double arrival) {
  TraceRecord r;
  r.job_id = job_id;
  r.app_id = app_id;
  r.arrival = arrival;
  for (std::size_t s = 0; s < truth.task_durations.size(); ++s) {
    const auto id = static_cast<StageId>(s);
    r.stages.push_back({id, truth.executed(id), truth.stage_duration(id)});
  }
  r.dynamic = truth.dynamic;
  r.chain_length = truth.chain_iterations;
  return r;
}

// One record per completed job, batch-1 normalized, in job-id order.
inline std::vector<TraceRecord> collect_trace(const std::vector<JobInstance>& jobs) {
  std::vector<TraceRecord> out;
  out.reserve(jobs.size());
  for (const auto& j : jobs) {
    auto r = trace_of(j.truth, j.view.job_id, j.view.app_id, j.view.arrival);
    // record what the run actually revealed for dynamic stages
    for (const auto& [d, sub] : j.view.revealed_subgraphs) r.dynamic[d] = sub;
    out.push_back(std::move(r));
  }
  std::sort(out.begin(), out.end(), [](const TraceRecord& a, const TraceRecord& b) { return a.job_id < b.job_id; });
  return out;
}

namespace detail {

inline nlohmann::ordered_json trace_to_json(const TraceRecord& r) {
  nlohmann::ordered_json j;
  j["job_id"] = r.job_id;
  j["app_id"] = r.app_id;
  j["arrival"] = r.arrival;
  auto stages = nlohmann::ordered_json::array();
  for (const auto& s : r.stages) stages.push_back(nlohmann::ordered_json::array({s.stage_id, s.executed, s.duration}));
  j["stages"] = std::move(stages);
  auto dyn = nlohmann::ordered_json::array();
  for (const auto& [d, sub] : r.dynamic) {
    nlohmann::ordered_json jd;
    jd["stage"] = d;
    jd["nodes"] = sub.nodes;
    auto edges = nlohmann::ordered_json::array();
    for (const auto& [a, b] : sub.edges) edges.push_back(nlohmann::ordered_json::array({a, b}));
    jd["edges"] = std::move(edges);
    dyn.push_back(std::move(jd));
  }
  j["dynamic"] = std::move(dyn);
  j["chain_length"] = r.chain_length;
  return j;
}

inline TraceRecord trace_from_json(const nlohmann::json& j) {
  TraceRecord r;
  r.job_id = j.at("job_id").get<int>();
  r.app_id = j.at("app_id").get<std::string>();
  r.arrival = j.at("arrival").get<double>();
  for (const auto& s : j.at("stages")) {
    StageTrace st{s.at(0).get<int>(), s.at(1).get<bool>(), s.at(2).get<double>()};
    if (st.executed != (st.duration > 0.0)) throw TrainingError("executed flag disagrees with duration");
    r.stages.push_back(st);
  }
  for (const auto& jd : j.at("dynamic")) {
    RealizedSubgraph sub;
    sub.nodes = jd.at("nodes").get<std::vector<int>>();
    for (const auto& e : jd.at("edges")) sub.edges.push_back({e.at(0).get<int>(), e.at(1).get<int>()});
    r.dynamic[jd.at("stage").get<int>()] = std::move(sub);
  }
  r.chain_length = j.at("chain_length").get<int>();
  return r;
}

}  // namespace detail

// Newline-delimited JSON, one record per line, fixed field order.
inline void write_trace(std::ostream& os, const std::vector<TraceRecord>& records) {
  for (const auto& r : records) os << detail::trace_to_json(r).dump() << '\n';
}

inline void write_trace(const std::string& path, const std::vector<TraceRecord>& records) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write trace file " + path);
  write_trace(os, records);
}

inline std::vector<TraceRecord> read_trace(std::istream& is) {
  std::vector<TraceRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(detail::trace_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw ParseError(n, e.what());
    }
  }
  return out;
}

inline std::vector<TraceRecord> read_trace(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open trace file " + path);
  return read_trace(is);
}

}  // namespace llmsched
