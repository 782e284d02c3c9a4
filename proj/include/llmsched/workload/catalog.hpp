#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "llmsched/core/errors.hpp"
#include "llmsched/core/job.hpp"
#include "llmsched/core/model.hpp"

namespace llmsched {

// Synthetic application catalog. Every job draws a latent size factor
// z ~ LogNormal(0, latent_sigma); stage durations, chain continuation and
// plan sizes all lean on z, which is what makes stage durations correlated.
inline constexpr const char* kDefaultCatalog = R"json({
  "version": 3,
  "task_sigma": 0.08,
  "apps": [
    {
      "app_id": "seqsort", "family": "predefined", "latent_sigma": 0.75,
      "stages": [
        {"name": "split",   "kind": "regular", "tasks": 1, "after": [],                    "mean": 0.4, "sigma": 0.10, "coupling": 0.3},
        {"name": "gen_a",   "kind": "llm",     "tasks": 4, "after": ["split"],             "mean": 2.0, "sigma": 0.25, "coupling": 1.0},
        {"name": "gen_b",   "kind": "llm",     "tasks": 4, "after": ["split"],             "mean": 2.0, "sigma": 0.25, "coupling": 1.0},
        {"name": "score_a", "kind": "llm",     "tasks": 2, "after": ["gen_a"],             "mean": 1.5, "sigma": 0.25, "coupling": 1.0},
        {"name": "score_b", "kind": "llm",     "tasks": 2, "after": ["gen_b"],             "mean": 1.5, "sigma": 0.25, "coupling": 1.0},
        {"name": "refine_a","kind": "llm",     "tasks": 2, "after": ["score_a"],           "mean": 2.5, "sigma": 0.25, "coupling": 1.1},
        {"name": "refine_b","kind": "llm",     "tasks": 2, "after": ["score_b"],           "mean": 2.5, "sigma": 0.25, "coupling": 1.1},
        {"name": "merge",   "kind": "regular", "tasks": 1, "after": ["refine_a", "refine_b"], "mean": 0.8, "sigma": 0.15, "coupling": 0.8},
        {"name": "rescore", "kind": "llm",     "tasks": 1, "after": ["merge"],             "mean": 1.5, "sigma": 0.25, "coupling": 1.0},
        {"name": "final",   "kind": "llm",     "tasks": 1, "after": ["rescore"],           "mean": 3.0, "sigma": 0.25, "coupling": 1.2}
      ]
    },
    {
      "app_id": "docmerge", "family": "predefined", "latent_sigma": 0.7,
      "stages": [
        {"name": "chunk",     "kind": "regular", "tasks": 2, "after": [],            "mean": 0.5, "sigma": 0.10, "coupling": 0.5},
        {"name": "summarize", "kind": "llm",     "tasks": 4, "after": ["chunk"],     "mean": 2.5, "sigma": 0.25, "coupling": 1.0},
        {"name": "combine",   "kind": "llm",     "tasks": 1, "after": ["summarize"], "mean": 2.0, "sigma": 0.25, "coupling": 1.0},
        {"name": "check",     "kind": "regular", "tasks": 1, "after": ["combine"],   "mean": 1.0, "sigma": 0.20, "coupling": 0.8},
        {"name": "revise",    "kind": "llm",     "tasks": 2, "after": ["check"],     "mean": 2.5, "sigma": 0.25, "coupling": 1.1},
        {"name": "polish",    "kind": "llm",     "tasks": 1, "after": ["revise"],    "mean": 2.0, "sigma": 0.25, "coupling": 1.0}
      ]
    },
    {
      "app_id": "codegen", "family": "chainlike", "latent_sigma": 0.6,
      "stages": [],
      "chain": {
        "iterations": 5, "continue_prob": 0.5, "continue_coupling": 1.5, "max_continue_prob": 0.95,
        "pattern": [
          {"name": "gen",    "kind": "llm",     "tasks": 1, "after": [],      "mean": 3.0, "sigma": 0.25, "coupling": 1.0},
          {"name": "exec",   "kind": "regular", "tasks": 2, "after": ["gen"], "mean": 1.0, "sigma": 0.20, "coupling": 0.6},
          {"name": "reflex", "kind": "llm",     "tasks": 1, "after": ["exec"], "mean": 2.0, "sigma": 0.25, "coupling": 1.0}
        ]
      }
    },
    {
      "app_id": "websearch", "family": "chainlike", "latent_sigma": 0.6,
      "stages": [],
      "chain": {
        "iterations": 5, "continue_prob": 0.45, "continue_coupling": 1.5, "max_continue_prob": 0.95,
        "pattern": [
          {"name": "query",  "kind": "llm",     "tasks": 1, "after": [],         "mean": 1.5, "sigma": 0.25, "coupling": 1.0},
          {"name": "search", "kind": "regular", "tasks": 3, "after": ["query"],  "mean": 1.5, "sigma": 0.20, "coupling": 0.4},
          {"name": "reason", "kind": "llm",     "tasks": 1, "after": ["search"], "mean": 2.5, "sigma": 0.25, "coupling": 1.0}
        ]
      }
    },
    {
      "app_id": "taskauto", "family": "planning", "latent_sigma": 0.6,
      "stages": [
        {"name": "plan",  "kind": "llm", "tasks": 1, "after": [], "mean": 2.5, "sigma": 0.25, "coupling": 1.0},
        {"name": "tools", "kind": "dynamic", "after": ["plan"], "size_coupling": 1.5,
         "candidates": ["t_search", "t_fetch", "t_parse", "t_render", "t_exec", "t_notify"],
         "node_probs": [0.5, 0.4, 0.35, 0.3, 0.3, 0.25],
         "edges": [["t_search", "t_fetch"], ["t_fetch", "t_parse"], ["t_parse", "t_render"], ["t_search", "t_exec"], ["t_exec", "t_notify"], ["t_render", "t_notify"]],
         "edge_probs": [0.7, 0.7, 0.6, 0.5, 0.6, 0.5]},
        {"name": "t_search", "kind": "regular", "tasks": 1, "candidate_of": "tools", "mean": 2.0, "sigma": 0.25, "coupling": 0.8},
        {"name": "t_fetch",  "kind": "regular", "tasks": 2, "candidate_of": "tools", "mean": 1.5, "sigma": 0.25, "coupling": 0.8},
        {"name": "t_parse",  "kind": "regular", "tasks": 1, "candidate_of": "tools", "mean": 1.0, "sigma": 0.25, "coupling": 0.8},
        {"name": "t_render", "kind": "regular", "tasks": 1, "candidate_of": "tools", "mean": 2.5, "sigma": 0.25, "coupling": 0.8},
        {"name": "t_exec",   "kind": "regular", "tasks": 2, "candidate_of": "tools", "mean": 3.0, "sigma": 0.25, "coupling": 0.8},
        {"name": "t_notify", "kind": "regular", "tasks": 1, "candidate_of": "tools", "mean": 0.8, "sigma": 0.25, "coupling": 0.8}
      ]
    },
    {
      "app_id": "compiler", "family": "planning", "latent_sigma": 0.6,
      "stages": [
        {"name": "plan",  "kind": "llm", "tasks": 1, "after": [], "mean": 3.0, "sigma": 0.25, "coupling": 1.0},
        {"name": "calls", "kind": "dynamic", "after": ["plan"], "size_coupling": 1.5,
         "candidates": ["c_1", "c_2", "c_3", "c_4", "c_5", "c_6"],
         "node_probs": [0.6, 0.5, 0.4, 0.35, 0.3, 0.25],
         "edges": [["c_1", "c_3"], ["c_2", "c_4"], ["c_3", "c_5"], ["c_4", "c_6"]],
         "edge_probs": [0.6, 0.6, 0.5, 0.5]},
        {"name": "c_1", "kind": "regular", "tasks": 1, "candidate_of": "calls", "mean": 1.5, "sigma": 0.25, "coupling": 0.8},
        {"name": "c_2", "kind": "regular", "tasks": 1, "candidate_of": "calls", "mean": 2.0, "sigma": 0.25, "coupling": 0.8},
        {"name": "c_3", "kind": "regular", "tasks": 2, "candidate_of": "calls", "mean": 1.5, "sigma": 0.25, "coupling": 0.8},
        {"name": "c_4", "kind": "regular", "tasks": 1, "candidate_of": "calls", "mean": 2.5, "sigma": 0.25, "coupling": 0.8},
        {"name": "c_5", "kind": "regular", "tasks": 1, "candidate_of": "calls", "mean": 1.0, "sigma": 0.25, "coupling": 0.8},
        {"name": "c_6", "kind": "regular", "tasks": 2, "candidate_of": "calls", "mean": 2.0, "sigma": 0.25, "coupling": 0.8},
        {"name": "join", "kind": "llm", "tasks": 1, "after": ["calls"], "mean": 3.0, "sigma": 0.25, "coupling": 1.2}
      ]
    }
  ]
})json";

struct StageModel {
  double mean = 1.0;      // median seconds per task at batch 1 when z = 1
  double sigma = 0.25;    // log-scale idiosyncratic noise
  double coupling = 1.0;  // exponent on the latent factor
};

struct ChainModel {
  double continue_prob = 0.5;
  double continue_coupling = 0.0;
  double max_continue_prob = 0.95;
};

struct DynamicModel {
  double size_coupling = 0.0;
};

// Template plus the hidden generative model behind its jobs.
struct AppModel {
  ApplicationTemplate app;
  double latent_sigma = 0.5;
  std::vector<StageModel> stages;
  std::optional<ChainModel> chain;
  std::map<StageId, DynamicModel> dynamic;
};

class Catalog {
 public:
  Catalog() = default;

  static Catalog from_json(const nlohmann::json& j) {
    Catalog c;
    c.version_ = j.value("version", 0);
    c.task_sigma_ = j.value("task_sigma", 0.0);
    for (const auto& ja : j.at("apps")) {
      auto m = std::make_unique<AppModel>(parse_app(ja));
      m->app.validate();
      const std::string id = m->app.app_id;
      if (!c.apps_.emplace(id, std::move(m)).second) throw ConfigError("duplicate application " + id);
    }
    if (c.apps_.empty()) throw ConfigError("catalog has no applications");
    return c;
  }

  static Catalog builtin() { return from_json(nlohmann::json::parse(kDefaultCatalog)); }

  static Catalog load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open application catalog " + path);
    try {
      return from_json(nlohmann::json::parse(is));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("application catalog " + path + ": " + e.what());
    }
  }

  void add(AppModel model) {
    model.app.validate();
    const std::string id = model.app.app_id;
    apps_[id] = std::make_unique<AppModel>(std::move(model));
  }

  const AppModel& model(const std::string& app_id) const {
    auto it = apps_.find(app_id);
    if (it == apps_.end()) throw ConfigError("unknown application " + app_id);
    return *it->second;
  }
  const ApplicationTemplate& app(const std::string& app_id) const { return model(app_id).app; }
  bool contains(const std::string& app_id) const { return apps_.count(app_id) > 0; }

  std::vector<std::string> app_ids() const {
    std::vector<std::string> out;
    for (const auto& [id, m] : apps_) out.push_back(id);
    return out;
  }

  int version() const { return version_; }
  double task_sigma() const { return task_sigma_; }
  void set_task_sigma(double s) { task_sigma_ = s; }

 private:
  static StageKind kind_of(const nlohmann::json& js) { return stage_kind_from(js.at("kind").get<std::string>()); }

  static StageModel stage_model(const nlohmann::json& js) {
    return {js.value("mean", 1.0), js.value("sigma", 0.0), js.value("coupling", 0.0)};
  }

  static AppModel parse_app(const nlohmann::json& ja) {
    AppModel m;
    m.app.app_id = ja.at("app_id").get<std::string>();
    m.app.family = app_family_from(ja.at("family").get<std::string>());
    m.latent_sigma = ja.value("latent_sigma", 0.0);
    std::map<std::string, StageId> ids;
    auto lookup = [&](const std::string& name) {
      auto it = ids.find(name);
      if (it == ids.end()) throw ConfigError(m.app.app_id + ": unknown stage '" + name + "'");
      return it->second;
    };

    const auto& jstages = ja.at("stages");
    // candidates may be listed after their dynamic stage; ids follow listing order
    for (const auto& js : jstages) {
      const auto name = js.at("name").get<std::string>();
      if (!ids.emplace(name, static_cast<StageId>(ids.size())).second) throw ConfigError(m.app.app_id + ": duplicate stage " + name);
    }
    for (const auto& js : jstages) {
      StageTemplate s;
      s.name = js.at("name").get<std::string>();
      s.id = lookup(s.name);
      s.kind = kind_of(js);
      s.num_tasks = s.kind == StageKind::Dynamic ? 1 : js.value("tasks", 1);
      if (js.contains("candidate_of")) {
        s.candidate_of = lookup(js.at("candidate_of").get<std::string>());
        s.predecessors = {*s.candidate_of};
      } else {
        for (const auto& p : js.value("after", std::vector<std::string>{})) s.predecessors.push_back(lookup(p));
      }
      const auto sm = stage_model(js);
      s.nominal_duration = sm.mean;
      if (s.kind == StageKind::Dynamic) {
        DynamicStageSpec spec;
        for (const auto& c : js.at("candidates")) spec.candidates.push_back(lookup(c.get<std::string>()));
        spec.node_probs = js.at("node_probs").get<std::vector<double>>();
        for (const auto& e : js.value("edges", nlohmann::json::array()))
          spec.edge_candidates.push_back({lookup(e.at(0).get<std::string>()), lookup(e.at(1).get<std::string>())});
        spec.edge_probs = js.value("edge_probs", std::vector<double>{});
        s.dynamic = std::move(spec);
        m.dynamic[s.id] = DynamicModel{js.value("size_coupling", 0.0)};
      }
      m.app.stages.push_back(std::move(s));
      m.stages.push_back(sm);
    }
    // candidate nominal durations feed the structural prior range
    for (auto& s : m.app.stages) {
      if (!s.dynamic) continue;
      double total = 0.0, widest = 0.0;
      for (StageId c : s.dynamic->candidates) {
        total += m.app.stage(c).nominal_duration;
        widest = std::max(widest, m.app.stage(c).nominal_duration);
      }
      s.dynamic->prior_range = {0.0, total};
      (void)widest;
    }

    if (ja.contains("chain")) {
      const auto& jc = ja.at("chain");
      ChainLayout layout;
      layout.first_stage = static_cast<StageId>(m.app.stages.size());
      layout.iterations = jc.at("iterations").get<int>();
      const auto& pattern = jc.at("pattern");
      layout.pattern_length = static_cast<int>(pattern.size());
      if (layout.pattern_length < 1) throw ConfigError(m.app.app_id + ": empty chain pattern");
      StageId tail = m.app.stages.empty() ? -1 : static_cast<StageId>(m.app.stages.size()) - 1;
      for (int it = 0; it < layout.iterations; ++it) {
        std::map<std::string, StageId> local;
        const StageId base = static_cast<StageId>(m.app.stages.size());
        for (std::size_t k = 0; k < pattern.size(); ++k) local[pattern[k].at("name").get<std::string>()] = base + static_cast<StageId>(k);
        for (const auto& js : pattern) {
          StageTemplate s;
          s.name = js.at("name").get<std::string>() + "_" + std::to_string(it + 1);
          s.id = local.at(js.at("name").get<std::string>());
          s.kind = kind_of(js);
          if (s.kind == StageKind::Dynamic) throw ConfigError(m.app.app_id + ": dynamic stages inside chains are unsupported");
          s.num_tasks = js.value("tasks", 1);
          const auto after = js.value("after", std::vector<std::string>{});
          for (const auto& p : after) {
            auto f = local.find(p);
            if (f == local.end()) throw ConfigError(m.app.app_id + ": unknown pattern stage '" + p + "'");
            s.predecessors.push_back(f->second);
          }
          if (after.empty() && tail >= 0) s.predecessors.push_back(tail);
          const auto sm = stage_model(js);
          s.nominal_duration = sm.mean;
          m.app.stages.push_back(std::move(s));
          m.stages.push_back(sm);
        }
        tail = static_cast<StageId>(m.app.stages.size()) - 1;
      }
      m.app.chain = layout;
      m.chain = ChainModel{jc.value("continue_prob", 0.5), jc.value("continue_coupling", 0.0), jc.value("max_continue_prob", 0.95)};
    }
    return m;
  }

  int version_ = 0;
  double task_sigma_ = 0.0;
  std::map<std::string, std::unique_ptr<AppModel>> apps_;
};

// Hidden truth of one job drawn from the application's generative model.
template <typename Rng>
JobTruth sample_truth(const AppModel& m, double task_sigma, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto& app = m.app;
  const double log_z = m.latent_sigma * gauss(rng);
  const double z = std::exp(log_z);

  JobTruth t;
  t.task_durations.assign(app.stages.size(), {});
  std::vector<bool> executed(app.stages.size(), true);

  if (app.chain) {
    const auto& cm = *m.chain;
    const double p = std::clamp(cm.continue_prob * std::pow(z, cm.continue_coupling), 0.0, cm.max_continue_prob);
    int len = 1;
    while (len < app.chain->iterations && unit(rng) < p) ++len;
    t.chain_iterations = len;
    for (const auto& s : app.stages) {
      const int it = app.chain->iteration_of(s.id);
      if (it >= len) executed[static_cast<std::size_t>(s.id)] = false;
    }
  }

  for (const auto& s : app.stages) {
    if (!s.dynamic) continue;
    const auto& spec = *s.dynamic;
    executed[static_cast<std::size_t>(s.id)] = false;
    const double gamma = m.dynamic.count(s.id) ? m.dynamic.at(s.id).size_coupling : 0.0;
    const double zg = std::pow(z, gamma);
    RealizedSubgraph sub;
    std::size_t best = 0;
    for (std::size_t i = 0; i < spec.candidates.size(); ++i) {
      const double p = 1.0 - std::pow(1.0 - spec.node_probs[i], zg);
      if (unit(rng) < p) sub.nodes.push_back(spec.candidates[i]);
      if (spec.node_probs[i] > spec.node_probs[best]) best = i;
    }
    // a plan always calls at least one tool
    if (sub.nodes.empty() && !spec.candidates.empty()) sub.nodes.push_back(spec.candidates[best]);
    std::sort(sub.nodes.begin(), sub.nodes.end());
    for (std::size_t e = 0; e < spec.edge_candidates.size(); ++e) {
      const auto& [a, b] = spec.edge_candidates[e];
      const bool both = std::binary_search(sub.nodes.begin(), sub.nodes.end(), a) &&
                        std::binary_search(sub.nodes.begin(), sub.nodes.end(), b);
      const double draw = unit(rng);  // drawn unconditionally to keep streams aligned
      if (both && draw < spec.edge_probs[e]) sub.edges.push_back(spec.edge_candidates[e]);
    }
    for (StageId c : spec.candidates)
      executed[static_cast<std::size_t>(c)] = std::binary_search(sub.nodes.begin(), sub.nodes.end(), c);
    t.dynamic[s.id] = std::move(sub);
  }

  for (const auto& s : app.stages) {
    const auto& sm = m.stages[static_cast<std::size_t>(s.id)];
    const double stage = sm.mean * std::pow(z, sm.coupling) * std::exp(sm.sigma * gauss(rng));
    auto& tasks = t.task_durations[static_cast<std::size_t>(s.id)];
    std::vector<double> draws;
    for (int k = 0; k < s.num_tasks; ++k) draws.push_back(stage * std::exp(task_sigma * gauss(rng)));
    if (executed[static_cast<std::size_t>(s.id)]) tasks = std::move(draws);
  }
  return t;
}

}  // namespace llmsched
