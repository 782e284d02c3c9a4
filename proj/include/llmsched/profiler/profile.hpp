#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "llmsched/bayesnet/information.hpp"
#include "llmsched/bayesnet/network.hpp"
#include "llmsched/bayesnet/serialize.hpp"
#include "llmsched/core/model.hpp"
#include "llmsched/profiler/calibration.hpp"
#include "llmsched/profiler/discretize.hpp"
#include "llmsched/workload/trace.hpp"

namespace llmsched {

struct DynamicProfile {
  DynamicStageSpec spec;  // candidate structure with empirically estimated probabilities
  std::optional<DurationDistribution> duration;  // longest path of the expanded subgraph
};

struct ApplicationProfile {
  std::string app_id;
  std::map<StageId, DurationDistribution> stage_dists;  // per task, batch 1
  std::map<StageId, DynamicProfile> dynamic;
  std::optional<bn::DiscreteBayesNet> network;
  std::map<StageId, int> var_of_stage;
  std::set<StageId> uncertainty_reducing;
  double mean_job_duration = 0.0;  // historical mean critical path at batch 1
  CalibrationProfile calibration;

  const DurationDistribution& dist(StageId s) const {
    auto it = stage_dists.find(s);
    if (it == stage_dists.end()) throw ConfigError(app_id + ": no duration distribution for stage " + std::to_string(s));
    return it->second;
  }

  std::optional<int> var(StageId s) const {
    if (!network) return std::nullopt;
    auto it = var_of_stage.find(s);
    if (it == var_of_stage.end()) return std::nullopt;
    return it->second;
  }

  StageId stage_of_var(int v) const { return network->variable(v).stage; }

  bn::Evidence bn_evidence(const EvidenceSet& evidence) const {
    bn::Evidence e;
    for (const auto& [s, state] : evidence)
      if (auto v = var(s)) e[*v] = state;
    return e;
  }

  // Structural-uncertainty bonus multiplier of a dynamic stage.
  double dynamic_range(StageId d, const ApplicationTemplate& app) const {
    auto it = dynamic.find(d);
    if (it != dynamic.end() && it->second.duration) return it->second.duration->support().width();
    return app.stage(d).dynamic->prior_range.width();
  }
};

struct TrainingOptions {
  int max_bins = 6;
  double alpha = 1.0;
  bn::StructureOptions structure{};
};

namespace detail {

inline double subgraph_longest_path(const RealizedSubgraph& sub, const std::map<StageId, double>& duration) {
  std::vector<StageId> nodes = sub.nodes;
  std::sort(nodes.begin(), nodes.end());  // edges ascend in candidate id
  std::map<StageId, double> finish;
  double best = 0.0;
  for (StageId n : nodes) {
    double start = 0.0;
    for (const auto& [a, b] : sub.edges)
      if (b == n && finish.count(a)) start = std::max(start, finish[a]);
    auto it = duration.find(n);
    finish[n] = start + (it == duration.end() ? 0.0 : it->second);
    best = std::max(best, finish[n]);
  }
  return best;
}

// Critical path of a realized job at batch size 1.
inline double realized_critical_path(const ApplicationTemplate& app, const TraceRecord& rec) {
  std::map<StageId, double> dur;
  for (const auto& s : rec.stages) dur[s.stage_id] = s.duration;
  std::vector<double> finish(app.stages.size(), 0.0);
  double best = 0.0;
  for (const auto& s : app.stages) {
    if (s.candidate_of) continue;
    double start = 0.0;
    for (StageId p : s.predecessors) start = std::max(start, finish[static_cast<std::size_t>(p)]);
    double d = dur.count(s.id) ? dur[s.id] : 0.0;
    if (s.kind == StageKind::Dynamic) {
      auto it = rec.dynamic.find(s.id);
      d = it == rec.dynamic.end() ? 0.0 : subgraph_longest_path(it->second, dur);
    }
    finish[static_cast<std::size_t>(s.id)] = start + d;
    best = std::max(best, finish[static_cast<std::size_t>(s.id)]);
  }
  return best;
}

}  // namespace detail

// Builds an application profile from batch-1 traces: discretized stage
// distributions, a BIC-learned Bayesian network over the profilable stages
// (when there are at least two), dynamic-stage statistics and the
// historical mean job duration.
inline ApplicationProfile train_profile(const ApplicationTemplate& app, const std::vector<TraceRecord>& traces,
                                        const CalibrationProfile& calibration, const TrainingOptions& opts = {}) {
  std::vector<const TraceRecord*> recs;
  for (const auto& r : traces)
    if (r.app_id == app.app_id) recs.push_back(&r);
  if (recs.empty()) throw TrainingError("no traces for application " + app.app_id);

  ApplicationProfile prof;
  prof.app_id = app.app_id;
  prof.calibration = calibration;

  for (const auto& s : app.stages) {
    if (s.kind == StageKind::Dynamic) continue;
    std::vector<double> samples;
    for (const auto* r : recs) {
      const double d = r->duration_of(s.id);
      if (s.candidate_of && d == 0.0) continue;  // candidate not selected: no duration information
      samples.push_back(d);
    }
    if (samples.empty()) {
      if (!s.candidate_of) throw TrainingError(app.app_id + ": stage " + s.name + " has no samples");
      prof.stage_dists.emplace(s.id, DurationDistribution::point(s.nominal_duration));
    } else {
      prof.stage_dists.emplace(s.id, discretize(samples, opts.max_bins));
    }
  }

  for (const auto& s : app.stages) {
    if (s.kind != StageKind::Dynamic) continue;
    DynamicProfile dp;
    dp.spec = *s.dynamic;
    std::vector<double> node_hits(dp.spec.candidates.size(), 0.0), edge_hits(dp.spec.edge_candidates.size(), 0.0);
    std::vector<double> lengths;
    for (const auto* r : recs) {
      auto it = r->dynamic.find(s.id);
      if (it == r->dynamic.end()) continue;
      const auto& sub = it->second;
      for (std::size_t i = 0; i < dp.spec.candidates.size(); ++i)
        if (std::find(sub.nodes.begin(), sub.nodes.end(), dp.spec.candidates[i]) != sub.nodes.end()) node_hits[i] += 1.0;
      for (std::size_t i = 0; i < dp.spec.edge_candidates.size(); ++i)
        if (std::find(sub.edges.begin(), sub.edges.end(), dp.spec.edge_candidates[i]) != sub.edges.end()) edge_hits[i] += 1.0;
      std::map<StageId, double> dur;
      for (const auto& st : r->stages) dur[st.stage_id] = st.duration;
      lengths.push_back(detail::subgraph_longest_path(sub, dur));
    }
    if (!lengths.empty()) {
      const double n = static_cast<double>(lengths.size());
      for (std::size_t i = 0; i < node_hits.size(); ++i) dp.spec.node_probs[i] = node_hits[i] / n;
      for (std::size_t i = 0; i < edge_hits.size(); ++i) dp.spec.edge_probs[i] = edge_hits[i] / n;
      dp.duration = discretize(lengths, opts.max_bins);
    }
    prof.dynamic.emplace(s.id, std::move(dp));
  }

  const auto vars = app.profilable_stages();
  if (vars.size() >= 2) {
    std::vector<bn::Variable> variables;
    std::vector<int> cards, order;
    for (std::size_t i = 0; i < vars.size(); ++i) {
      const auto& st = app.stage(vars[i]);
      variables.push_back({st.name, st.id, prof.dist(st.id)});
      cards.push_back(variables.back().card());
      order.push_back(static_cast<int>(i));
      prof.var_of_stage[st.id] = static_cast<int>(i);
    }
    bn::SampleTable table;
    table.reserve(recs.size());
    for (const auto* r : recs) {
      std::vector<int> row;
      for (std::size_t i = 0; i < vars.size(); ++i) row.push_back(static_cast<int>(variables[i].domain.state_of(r->duration_of(vars[i]))));
      table.push_back(std::move(row));
    }
    auto parents = bn::learn_structure(table, cards, order, opts.structure);
    prof.network = bn::fit_cpts(std::move(variables), std::move(parents), table, opts.alpha);
    for (std::size_t i = 0; i < vars.size(); ++i)
      if (!bn::correlated_set(*prof.network, static_cast<int>(i)).empty()) prof.uncertainty_reducing.insert(vars[i]);
  }
  for (const auto& s : app.stages)
    if (s.kind == StageKind::Dynamic) prof.uncertainty_reducing.insert(s.predecessors.front());

  double total = 0.0;
  for (const auto* r : recs) total += detail::realized_critical_path(app, *r);
  prof.mean_job_duration = total / static_cast<double>(recs.size());
  return prof;
}

inline ojson to_json(const ApplicationProfile& p) {
  ojson j;
  j["app_id"] = p.app_id;
  j["mean_job_duration"] = p.mean_job_duration;
  ojson stages = ojson::array();
  for (const auto& [s, d] : p.stage_dists) {
    ojson js;
    js["stage"] = s;
    js["distribution"] = to_json(d);
    stages.push_back(std::move(js));
  }
  j["stages"] = std::move(stages);
  ojson dyn = ojson::array();
  for (const auto& [s, dp] : p.dynamic) {
    ojson jd;
    jd["stage"] = s;
    jd["candidates"] = dp.spec.candidates;
    ojson edges = ojson::array();
    for (const auto& [a, b] : dp.spec.edge_candidates) edges.push_back(ojson::array({a, b}));
    jd["edge_candidates"] = std::move(edges);
    jd["node_probs"] = dp.spec.node_probs;
    jd["edge_probs"] = dp.spec.edge_probs;
    jd["prior_range"] = ojson::array({dp.spec.prior_range.lo, dp.spec.prior_range.hi});
    jd["duration"] = dp.duration ? to_json(*dp.duration) : ojson(nullptr);
    dyn.push_back(std::move(jd));
  }
  j["dynamic"] = std::move(dyn);
  j["uncertainty_reducing"] = std::vector<int>(p.uncertainty_reducing.begin(), p.uncertainty_reducing.end());
  j["network"] = p.network ? bn::to_json(*p.network) : ojson(nullptr);
  j["calibration_ms"] = p.calibration.table();
  return j;
}

inline ApplicationProfile profile_from_json(const ojson& j) {
  ApplicationProfile p;
  p.app_id = j.at("app_id").get<std::string>();
  p.mean_job_duration = j.at("mean_job_duration").get<double>();
  for (const auto& js : j.at("stages")) p.stage_dists.emplace(js.at("stage").get<int>(), distribution_from_json(js.at("distribution")));
  for (const auto& jd : j.at("dynamic")) {
    DynamicProfile dp;
    dp.spec.candidates = jd.at("candidates").get<std::vector<int>>();
    for (const auto& e : jd.at("edge_candidates")) dp.spec.edge_candidates.push_back({e.at(0).get<int>(), e.at(1).get<int>()});
    dp.spec.node_probs = jd.at("node_probs").get<std::vector<double>>();
    dp.spec.edge_probs = jd.at("edge_probs").get<std::vector<double>>();
    dp.spec.prior_range = {jd.at("prior_range").at(0).get<double>(), jd.at("prior_range").at(1).get<double>()};
    if (!jd.at("duration").is_null()) dp.duration = distribution_from_json(jd.at("duration"));
    p.dynamic.emplace(jd.at("stage").get<int>(), std::move(dp));
  }
  for (int s : j.at("uncertainty_reducing")) p.uncertainty_reducing.insert(s);
  if (!j.at("network").is_null()) {
    p.network = bn::network_from_json(j.at("network"));
    for (std::size_t v = 0; v < p.network->size(); ++v) p.var_of_stage[p.network->variable(static_cast<int>(v)).stage] = static_cast<int>(v);
  }
  p.calibration = CalibrationProfile(j.at("calibration_ms").get<std::vector<double>>());
  return p;
}

using ProfileSet = std::map<std::string, ApplicationProfile>;

}  // namespace llmsched
