#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "llmsched/core/distribution.hpp"
#include "llmsched/core/errors.hpp"

namespace llmsched {

enum class StageKind { Regular, Llm, Dynamic };
enum class AppFamily { Predefined, ChainLike, Planning };

inline std::string_view to_string(StageKind k) {
  switch (k) {
    case StageKind::Regular: return "regular";
    case StageKind::Llm: return "llm";
    case StageKind::Dynamic: return "dynamic";
  }
  return "?";
}

inline StageKind stage_kind_from(std::string_view s) {
  if (s == "regular") return StageKind::Regular;
  if (s == "llm") return StageKind::Llm;
  if (s == "dynamic") return StageKind::Dynamic;
  throw ConfigError("unknown stage kind '" + std::string(s) + "'");
}

inline std::string_view to_string(AppFamily f) {
  switch (f) {
    case AppFamily::Predefined: return "predefined";
    case AppFamily::ChainLike: return "chainlike";
    case AppFamily::Planning: return "planning";
  }
  return "?";
}

inline AppFamily app_family_from(std::string_view s) {
  if (s == "predefined") return AppFamily::Predefined;
  if (s == "chainlike") return AppFamily::ChainLike;
  if (s == "planning") return AppFamily::Planning;
  throw ConfigError("unknown application family '" + std::string(s) + "'");
}

using StageId = int;
using StageEdge = std::pair<StageId, StageId>;

// Candidate set of a dynamic stage. Candidates are ordinary stages of the
// template whose only declared predecessor is the dynamic stage itself.
struct DynamicStageSpec {
  std::vector<StageId> candidates;
  std::vector<StageEdge> edge_candidates;
  std::vector<double> node_probs;
  std::vector<double> edge_probs;
  // Seconds-scale range used for the structural-uncertainty bonus when no
  // profiled duration distribution of the expanded subgraph exists.
  SupportRange prior_range;
};

struct StageTemplate {
  StageId id = 0;
  std::string name;
  StageKind kind = StageKind::Regular;
  int num_tasks = 1;
  std::vector<StageId> predecessors;
  double nominal_duration = 1.0;  // per task, seconds at batch size 1
  std::optional<DynamicStageSpec> dynamic;
  std::optional<StageId> candidate_of;
};

// Padded iteration pattern of a chain-like application: iteration i occupies
// stage ids [first + i*pattern_length, first + (i+1)*pattern_length).
struct ChainLayout {
  StageId first_stage = 0;
  int pattern_length = 1;
  int iterations = 1;

  int iteration_of(StageId s) const {
    if (s < first_stage || s >= first_stage + pattern_length * iterations) return -1;
    return (s - first_stage) / pattern_length;
  }
  StageId last_stage_of(int iteration) const { return first_stage + (iteration + 1) * pattern_length - 1; }
};

struct ApplicationTemplate {
  std::string app_id;
  AppFamily family = AppFamily::Predefined;
  std::vector<StageTemplate> stages;
  std::optional<ChainLayout> chain;

  const StageTemplate& stage(StageId id) const { return stages.at(static_cast<std::size_t>(id)); }

  // Stages that carry their own duration variable: everything except dynamic
  // placeholders and the candidates hidden behind them.
  bool profilable(StageId id) const {
    const auto& s = stage(id);
    return s.kind != StageKind::Dynamic && !s.candidate_of;
  }

  std::vector<StageId> profilable_stages() const {
    std::vector<StageId> out;
    for (const auto& s : stages)
      if (profilable(s.id)) out.push_back(s.id);
    return out;
  }

  std::vector<StageId> successors(StageId id) const {
    std::vector<StageId> out;
    for (const auto& s : stages)
      if (std::find(s.predecessors.begin(), s.predecessors.end(), id) != s.predecessors.end()) out.push_back(s.id);
    return out;
  }

  // Throws StructuralError on any violated template invariant.
  void validate() const {
    const auto n = static_cast<StageId>(stages.size());
    if (n == 0) throw StructuralError(app_id + ": template has no stages");
    for (StageId i = 0; i < n; ++i) {
      const auto& s = stages[static_cast<std::size_t>(i)];
      if (s.id != i) throw StructuralError(app_id + ": stage ids must be dense and ordered");
      if (s.num_tasks < 1) throw StructuralError(app_id + ": stage " + s.name + " has no tasks");
      for (StageId p : s.predecessors)
        if (p < 0 || p >= i) throw StructuralError(app_id + ": predecessor ids must precede the stage (topological ids)");
      if (s.kind == StageKind::Dynamic) {
        if (s.predecessors.size() != 1 || stage(s.predecessors.front()).kind != StageKind::Llm)
          throw StructuralError(app_id + ": dynamic stage needs exactly one LLM predecessor");
        if (!s.dynamic) throw StructuralError(app_id + ": dynamic stage without candidate spec");
        validate_dynamic(s);
      } else if (s.dynamic) {
        throw StructuralError(app_id + ": candidate spec on a non-dynamic stage");
      }
    }
    if (chain) {
      if (chain->pattern_length < 1 || chain->iterations < 1 ||
          chain->first_stage + chain->pattern_length * chain->iterations > n)
        throw StructuralError(app_id + ": chain layout exceeds the template");
    }
  }

 private:
  void validate_dynamic(const StageTemplate& d) const {
    const auto& spec = *d.dynamic;
    if (spec.node_probs.size() != spec.candidates.size() || spec.edge_probs.size() != spec.edge_candidates.size())
      throw StructuralError(app_id + ": dynamic probability vectors do not match candidates");
    auto in_range = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!std::all_of(spec.node_probs.begin(), spec.node_probs.end(), in_range) ||
        !std::all_of(spec.edge_probs.begin(), spec.edge_probs.end(), in_range))
      throw StructuralError(app_id + ": dynamic probabilities must lie in [0,1]");
    for (StageId c : spec.candidates) {
      const auto& cs = stage(c);
      if (!cs.candidate_of || *cs.candidate_of != d.id || cs.predecessors != std::vector<StageId>{d.id})
        throw StructuralError(app_id + ": candidate " + cs.name + " must hang off its dynamic stage only");
      if (cs.kind == StageKind::Dynamic) throw StructuralError(app_id + ": nested dynamic stages are unsupported");
    }
    auto is_candidate = [&](StageId x) {
      return std::find(spec.candidates.begin(), spec.candidates.end(), x) != spec.candidates.end();
    };
    for (const auto& [a, b] : spec.edge_candidates) {
      // ascending candidate ids keep every realized subset acyclic
      if (!is_candidate(a) || !is_candidate(b) || a >= b)
        throw StructuralError(app_id + ": edge candidates must connect candidates in ascending id order");
    }
  }
};

}  // namespace llmsched
