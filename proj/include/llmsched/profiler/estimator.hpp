#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "llmsched/core/job.hpp"
#include "llmsched/profiler/calibration.hpp"
#include "llmsched/profiler/profile.hpp"

namespace llmsched {

enum class EstimatorMode {
  Posterior,   // BN posteriors conditioned on the job's evidence
  PriorMeans,  // static historical distributions, evidence ignored
};

inline std::string evidence_key(const std::string& app, const EvidenceSet& e) {
  std::string k = app;
  k += '|';
  for (const auto& [s, v] : e) {
    k += std::to_string(s);
    k += ':';
    k += std::to_string(v);
    k += ',';
  }
  return k;
}

// Memo of exact posterior queries. Results are pure functions of
// (profile, evidence, query) so entries stay valid for the whole simulation.
class InferenceCache {
 public:
  // Posterior marginal of every BN variable, fetched lazily per variable.
  const std::vector<double>& marginal(const ApplicationProfile& prof, const EvidenceSet& evidence, int var) {
    auto& row = marginals_[evidence_key(prof.app_id, evidence)];
    if (row.empty()) row.resize(prof.network->size());
    auto& slot = row[static_cast<std::size_t>(var)];
    if (slot.empty()) {
      ++misses_;
      try {
        slot = prof.network->marginal(var, prof.bn_evidence(evidence));
      } catch (const InconsistentEvidence&) {
        slot = prof.network->marginal(var, {});
      }
    } else {
      ++hits_;
    }
    return slot;
  }

  template <typename Fn>
  double memo(const std::string& key, Fn&& compute) {
    auto it = scalars_.find(key);
    if (it != scalars_.end()) {
      ++hits_;
      return it->second;
    }
    ++misses_;
    const double v = compute();
    scalars_.emplace(key, v);
    return v;
  }

  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }

 private:
  std::unordered_map<std::string, std::vector<std::vector<double>>> marginals_;
  std::unordered_map<std::string, double> scalars_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

struct EstimationContext {
  const ApplicationProfile* profile = nullptr;
  double avg_llm_batch = 1.0;  // current mean batch size across LLM executors
  double now = 0.0;
  EstimatorMode mode = EstimatorMode::Posterior;
  InferenceCache* cache = nullptr;
  int mc_draws = 256;
  std::uint64_t mc_seed = 0x5eedULL;
};

struct StageEstimate {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

struct JobEstimate {
  double remaining = 0.0;  // expected critical path of unfinished work
  double lo = 0.0;
  double hi = 0.0;
};

// Records the completed stage's observed duration as BN evidence. LLM
// observations are de-calibrated from their effective batch size to batch 1.
inline const EvidenceSet& update_evidence(JobView& job, StageId stage, double observed, double effective_batch,
                                          const ApplicationProfile& profile) {
  auto it = profile.stage_dists.find(stage);
  if (it == profile.stage_dists.end() || (job.app && !job.app->profilable(stage))) return job.evidence;
  double d = observed;
  if (job.stage(stage).kind == StageKind::Llm && d > 0.0)
    d = calibrate(d, std::clamp(effective_batch, 1.0, static_cast<double>(profile.calibration.max_batch())), 1.0,
                  profile.calibration);
  job.evidence[stage] = static_cast<int>(it->second.state_of(d));
  return job.evidence;
}

inline double llm_factor(const EstimationContext& ctx) {
  const auto& cal = ctx.profile->calibration;
  const double b = std::clamp(ctx.avg_llm_batch, 1.0, static_cast<double>(cal.max_batch()));
  return cal.latency(b) / cal.latency(1);
}

// Posterior (or prior) law of a profilable stage's per-task duration.
inline std::vector<double> stage_law(const JobView& job, StageId s, const EstimationContext& ctx) {
  const auto& prof = *ctx.profile;
  if (ctx.mode == EstimatorMode::Posterior) {
    if (auto v = prof.var(s)) {
      if (ctx.cache) return ctx.cache->marginal(prof, job.evidence, *v);
      try {
        return prof.network->marginal(*v, prof.bn_evidence(job.evidence));
      } catch (const InconsistentEvidence&) {
        return prof.network->marginal(*v, {});
      }
    }
  }
  return prof.dist(s).probs();
}

// Expected remaining duration of one task given `elapsed` batch-1 seconds
// of progress: E[D - e | D > e] over intervals that extend past e.
inline StageEstimate task_remaining(const DurationDistribution& dist, const std::vector<double>& law, double elapsed) {
  if (elapsed <= 0.0) {
    const auto sup = dist.support_under(law);
    return {dist.mean_under(law), sup.lo, sup.hi};
  }
  double mass = 0.0, acc = 0.0;
  double lo = INFINITY, hi = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (law[i] <= kSupportEpsilon || dist.bin(i).hi <= elapsed) continue;
    const double point = std::max(dist.representative()[i], 0.5 * (elapsed + dist.bin(i).hi));
    mass += law[i];
    acc += law[i] * (point - elapsed);
    lo = std::min(lo, std::max(0.0, dist.bin(i).lo - elapsed));
    hi = std::max(hi, dist.bin(i).hi - elapsed);
  }
  if (mass <= 0.0) return {0.0, 0.0, 0.0};
  return {acc / mass, lo, hi};
}

// Expected longest path of an unexpanded dynamic stage, by seeded Monte Carlo
// over its candidate and edge existence probabilities.
inline double expected_dynamic_duration(const ApplicationProfile& prof, const ApplicationTemplate& app, StageId d,
                                        double llm_scale, int draws, std::uint64_t seed) {
  const auto& spec = prof.dynamic.count(d) ? prof.dynamic.at(d).spec : *app.stage(d).dynamic;
  const auto n = spec.candidates.size();
  std::vector<double> mean(n);
  for (std::size_t i = 0; i < n; ++i) {
    const StageId c = spec.candidates[i];
    mean[i] = prof.stage_dists.count(c) ? prof.dist(c).mean() : app.stage(c).nominal_duration;
    if (app.stage(c).kind == StageKind::Llm) mean[i] *= llm_scale;
  }
  std::mt19937_64 rng(seed + static_cast<std::uint64_t>(d));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<char> present(n);
  std::vector<double> finish(n);
  double total = 0.0;
  for (int k = 0; k < draws; ++k) {
    for (std::size_t i = 0; i < n; ++i) present[i] = u(rng) < spec.node_probs[i];
    std::vector<char> edge(spec.edge_candidates.size());
    for (std::size_t e = 0; e < edge.size(); ++e) edge[e] = u(rng) < spec.edge_probs[e];
    double best = 0.0;
    // candidates are listed in ascending id, which is a topological order of the edges
    for (std::size_t i = 0; i < n; ++i) {
      finish[i] = 0.0;
      if (!present[i]) continue;
      double start = 0.0;
      for (std::size_t e = 0; e < edge.size(); ++e) {
        if (!edge[e] || spec.edge_candidates[e].second != spec.candidates[i]) continue;
        const auto src = static_cast<std::size_t>(
            std::find(spec.candidates.begin(), spec.candidates.end(), spec.edge_candidates[e].first) - spec.candidates.begin());
        if (present[src]) start = std::max(start, finish[src]);
      }
      finish[i] = start + mean[i];
      best = std::max(best, finish[i]);
    }
    total += best;
  }
  return draws > 0 ? total / draws : 0.0;
}

inline StageEstimate estimate_stage(const JobView& job, StageId s, const EstimationContext& ctx, double llm_scale) {
  const auto& st = job.stage(s);
  if (finished(st.state)) return {};
  const auto& prof = *ctx.profile;
  const auto& app = *job.app;
  const auto& tmpl = app.stage(s);
  if (tmpl.kind == StageKind::Dynamic) {
    auto compute = [&] { return expected_dynamic_duration(prof, app, s, llm_scale, ctx.mc_draws, ctx.mc_seed); };
    const double mean = ctx.cache
        ? ctx.cache->memo("dyn|" + prof.app_id + "|" + std::to_string(s) + "|" + std::to_string(llm_scale), compute)
        : compute();
    SupportRange r = tmpl.dynamic->prior_range;
    if (auto it = prof.dynamic.find(s); it != prof.dynamic.end() && it->second.duration) r = it->second.duration->support();
    return {mean, r.lo, std::max(r.hi, mean)};
  }
  if (tmpl.candidate_of && !finished(job.stage(*tmpl.candidate_of).state)) return {};  // folded into the placeholder
  const auto& dist = prof.dist(s);
  const auto law = stage_law(job, s, ctx);
  const double scale = tmpl.kind == StageKind::Llm ? llm_scale : 1.0;
  StageEstimate out;
  bool any = false;
  for (const auto& t : st.tasks) {
    if (t.state == TaskState::Done || t.state == TaskState::Skipped) continue;
    const double elapsed = t.state == TaskState::Running ? t.work_done(ctx.now) : 0.0;
    const auto r = task_remaining(dist, law, elapsed);
    out.mean = std::max(out.mean, r.mean * scale);
    out.lo = any ? std::max(out.lo, r.lo * scale) : r.lo * scale;
    out.hi = std::max(out.hi, r.hi * scale);
    any = true;
  }
  return out;
}

// Expected critical path over the job's unfinished revealed stages.
inline JobEstimate estimated_remaining_duration(const JobView& job, const EstimationContext& ctx) {
  if (job.complete()) return {};
  const double scale = llm_factor(ctx);
  const auto order = topological_stages(job);
  const auto n = job.stages.size();
  std::vector<double> fm(n, 0.0), flo(n, 0.0), fhi(n, 0.0);
  JobEstimate est;
  for (StageId s : order) {
    const auto& st = job.stage(s);
    double sm = 0.0, slo = 0.0, shi = 0.0;
    for (StageId p : st.predecessors) {
      const auto ip = static_cast<std::size_t>(p);
      sm = std::max(sm, fm[ip]);
      slo = std::max(slo, flo[ip]);
      shi = std::max(shi, fhi[ip]);
    }
    const auto e = estimate_stage(job, s, ctx, scale);
    const auto i = static_cast<std::size_t>(s);
    fm[i] = sm + e.mean;
    flo[i] = slo + e.lo;
    fhi[i] = shi + e.hi;
    est.remaining = std::max(est.remaining, fm[i]);
    est.lo = std::max(est.lo, flo[i]);
    est.hi = std::max(est.hi, fhi[i]);
  }
  return est;
}

}  // namespace llmsched
