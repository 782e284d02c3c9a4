// Acceptance checks: one [PASS]/[FAIL] line per criterion, non-zero exit on
// any failure.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "support/builders.hpp"
#include "support/random_bn.hpp"
#include "support/snapshots.hpp"

using namespace llmsched;
using namespace llmsched::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int n, const std::string& title, const std::function<Outcome()>& check) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("[%s] criterion %d: %s | %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", n, title.c_str(), o.detail.c_str(),
              seconds_since(t0));
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

SchedulerConfig llmsched_cfg(double eps, double r = 0.2) {
  SchedulerConfig c;
  c.policy = Policy::LlmSched;
  c.epsilon = eps;
  c.ratio = r;
  return c;
}

// Held-out evaluation seeds, disjoint from anything used to size the presets.
const std::vector<std::uint64_t> kSeeds = seed_range(1000, 20);

Outcome motivating_example() {
  const auto t0 = Clock::now();
  Fig2Scenario f;
  SchedulerConfig sjf;
  sjf.policy = Policy::Sjf;
  const double a = f.average_jct(sjf);
  const double b = f.average_jct(llmsched_cfg(1.0, 1.0));
  const double t = seconds_since(t0);
  return {a == 6.5 && b == 5.0 && t < 1.0, fmt("SJF %.17g s, LLMSched(eps=1,r=1) %.17g s, runtime %.3f s", a, b, t)};
}

Outcome bn_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  int impossible = 0, mismatched = 0;
  for (int i = 0; i < 1000; ++i) {
    const double dev = oracle_deviation(random_case(rng));
    if (dev < 0.0) ++impossible;
    else if (!(dev <= 1e-9)) ++mismatched;
    else worst = std::max(worst, dev);
  }
  const double t = seconds_since(t0);
  return {mismatched == 0 && t < 60.0,
          fmt("1000 networks, max abs error %.3g, %g mismatches, %g zero-probability evidence cases agreed, %.2f s", worst,
              mismatched, impossible, t)};
}

Outcome information_suite() {
  bool ok = true;
  double worst_uniform = 0.0;
  for (int n = 1; n <= 64; ++n) {
    const std::vector<double> u(static_cast<std::size_t>(n), 1.0 / n);
    worst_uniform = std::max(worst_uniform, std::abs(bn::entropy(u) - std::log2(n)));
  }
  ok &= worst_uniform <= 1e-12;
  ok &= bn::entropy(std::vector<double>{0, 0, 1}) == 0.0;

  // I(X;X) = H(X) for random X via a deterministic copy child
  std::mt19937_64 rng(7);
  double worst_self = 0.0, min_mi = INFINITY, worst_indep = 0.0;
  for (int i = 0; i < 200; ++i) {
    std::uniform_int_distribution<int> card(2, 6);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    const int n = card(rng);
    std::vector<double> px;
    double s = 0.0;
    for (int k = 0; k < n; ++k) s += px.emplace_back(u(rng));
    for (double& p : px) p /= s;
    std::vector<double> copy(static_cast<std::size_t>(n * n), 0.0), indep;
    for (int k = 0; k < n; ++k) copy[static_cast<std::size_t>(k * n + k)] = 1.0;
    for (int k = 0; k < n; ++k) indep.insert(indep.end(), px.begin(), px.end());
    const bn::DiscreteBayesNet self({anonymous_variable(0, n), anonymous_variable(1, n)}, {{}, {0}}, {px, copy});
    const bn::DiscreteBayesNet ind({anonymous_variable(0, n), anonymous_variable(1, n)}, {{}, {0}}, {px, indep});
    const double mi = bn::mutual_information(self, {1}, 0, {});
    worst_self = std::max(worst_self, std::abs(mi - bn::entropy(px)));
    const double mi0 = bn::mutual_information(ind, {1}, 0, {});
    worst_indep = std::max(worst_indep, mi0);
    min_mi = std::min({min_mi, mi, mi0});
  }
  ok &= worst_self <= 1e-9 && worst_indep <= 1e-9 && min_mi >= 0.0;

  const bn::Factor joint({0, 1}, {2, 2}, {0.4, 0.1, 0.1, 0.4});
  const double four = bn::mutual_information(joint, 0);
  ok &= std::abs(four - 0.278) <= 1e-3;
  return {ok, fmt("H(uniform) err %.2g, I(X;X)-H err %.2g, independent I %.2g, 4-cell I %.6f bits", worst_uniform, worst_self,
                  worst_indep, four)};
}

Outcome calibration() {
  const CalibrationProfile cal({20.0, 23.0, 27.0, 30.0});
  const double fifteen = calibrate(10.0, 1, 4, cal);
  double worst_round = 0.0, worst_rescale = 0.0;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> d(0.01, 100.0);
  std::uniform_int_distribution<int> b(1, 4);
  for (int i = 0; i < 10000; ++i) {
    const double x = d(rng);
    const int b1 = b(rng), b2 = b(rng);
    worst_round = std::max(worst_round, std::abs(calibrate(calibrate(x, b1, b2, cal), b2, b1, cal) - x));
    worst_rescale = std::max(worst_rescale, std::abs(rescale_remaining(rescale_remaining(x, b1, b2, cal), b2, b1, cal) - x));
  }
  return {fifteen == 15.0 && worst_round <= 1e-9 && worst_rescale <= 1e-9,
          fmt("10 s at b=1 -> %.17g s at b=4, round-trip err %.2g, rescale inverse err %.2g", fifteen, worst_round,
              worst_rescale)};
}

Outcome simulator_invariants(const CatalogFixture& fx) {
  const std::vector<Policy> policies{Policy::LlmSched, Policy::Srtf, Policy::Sjf, Policy::Fcfs, Policy::Argus, Policy::Fair};
  std::size_t violations = 0, mismatched = 0;
  std::string first;
  for (int i = 0; i < 50; ++i) {
    SchedulerConfig sc = llmsched_cfg(0.1 * (i % 11));
    sc.policy = policies[static_cast<std::size_t>(i) % policies.size()];
    sc.seed = static_cast<std::uint64_t>(500 + i);
    SimOptions opts;
    opts.check_invariants = true;
    auto once = [&] {
      const auto jobs = generate_workload(preset_workload("mixed", 100, 0.9, sc.seed), fx.catalog);
      const auto r = run(preset_cluster("mixed"), jobs, sc, fx.profiles, opts);
      violations += r.metrics.violations.size();
      if (first.empty() && !r.metrics.violations.empty()) first = r.metrics.violations.front();
      std::ostringstream os;
      write_job_records(os, r.metrics);
      write_summary(os, r.metrics);
      return os.str();
    };
    if (once() != once()) ++mismatched;
  }
  return {violations == 0 && mismatched == 0,
          fmt("50 runs x2, %g invariant violations, %g non-identical reruns", static_cast<double>(violations),
              static_cast<double>(mismatched)) +
              (first.empty() ? "" : " first: " + first)};
}

Outcome scheduler_equivalences(const CatalogFixture& fx) {
  std::mt19937_64 rng(606);
  int differ = 0, bad_lists = 0;
  std::string first;
  for (int i = 0; i < 200; ++i) {
    RandomSnapshot rs;
    build_random_snapshot(rs, fx, rng, 16);
    SchedulerConfig cfg = llmsched_cfg(0.0);
    cfg.seed = static_cast<std::uint64_t>(i);
    const auto a = LlmSchedScheduler(cfg).schedule(rs.snap);
    if (!(a == SrtfScheduler().schedule(rs.snap))) ++differ;
    for (double eps : {0.0, 0.5, 1.0}) {
      cfg.epsilon = eps;
      const auto msg = check_decision(rs.snap, LlmSchedScheduler(cfg).schedule(rs.snap));
      if (!msg.empty()) {
        ++bad_lists;
        if (first.empty()) first = msg;
      }
    }
  }
  return {differ == 0 && bad_lists == 0,
          fmt("200 snapshots, %g differ from SRTF at eps=0, %g decisions with a missing or repeated task", differ, bad_lists) +
              (first.empty() ? "" : " first: " + first)};
}

struct Jcts {
  std::vector<double> fcfs, sjf, full, no_bn, eps0, eps1;
  std::map<double, std::vector<double>> interior;
};

Cell mixed_cell(SchedulerConfig sc) {
  Cell c;
  c.workload = "mixed";
  c.cluster = preset_cluster("mixed");
  c.num_jobs = 300;
  c.lambda = 0.9;
  c.scheduler = sc;
  return c;
}

const Jcts& mixed_results(const CatalogFixture& fx) {
  static const Jcts j = [&] {
    Jcts r;
    SchedulerConfig fcfs, sjf;
    fcfs.policy = Policy::Fcfs;
    sjf.policy = Policy::Sjf;
    r.fcfs = cell_jcts(mixed_cell(fcfs), kSeeds, fx.catalog, fx.profiles);
    r.sjf = cell_jcts(mixed_cell(sjf), kSeeds, fx.catalog, fx.profiles);
    r.full = cell_jcts(mixed_cell(llmsched_cfg(0.2)), kSeeds, fx.catalog, fx.profiles);
    auto nb = llmsched_cfg(0.2);
    nb.estimator = EstimatorMode::PriorMeans;
    r.no_bn = cell_jcts(mixed_cell(nb), kSeeds, fx.catalog, fx.profiles);
    r.eps0 = cell_jcts(mixed_cell(llmsched_cfg(0.0)), kSeeds, fx.catalog, fx.profiles);
    r.eps1 = cell_jcts(mixed_cell(llmsched_cfg(1.0)), kSeeds, fx.catalog, fx.profiles);
    for (double e : {0.1, 0.4, 0.6, 0.8}) r.interior[e] = cell_jcts(mixed_cell(llmsched_cfg(e)), kSeeds, fx.catalog, fx.profiles);
    r.interior[0.2] = r.full;
    return r;
  }();
  return j;
}

// Correlation between each application's first LLM stage and the rest of its
// critical path, the signal the posterior estimator exploits.
double weakest_engineered_correlation(const CatalogFixture& fx, std::string* which) {
  double weakest = 1.0;
  for (const auto& [app, f] : preset_mix("mixed")) {
    const auto& m = fx.catalog.model(app);
    StageId first = -1;
    for (StageId s : m.app.profilable_stages())
      if (m.app.stage(s).kind == StageKind::Llm) {
        first = s;
        break;
      }
    std::mt19937_64 rng(77);
    std::vector<double> x, y;
    for (int i = 0; i < 1000; ++i) {
      const auto t = sample_truth(m, fx.catalog.task_sigma(), rng);
      const double cp = detail::realized_critical_path(m.app, trace_of(t, i, app, 0.0));
      x.push_back(t.stage_duration(first));
      y.push_back(cp - x.back());
    }
    const double r = stats::pearson(x, y);
    if (r < weakest) {
      weakest = r;
      *which = app;
    }
  }
  return weakest;
}

Outcome jct_ordering(const CatalogFixture& fx) {
  std::string app;
  const double corr = weakest_engineered_correlation(fx, &app);
  const auto& j = mixed_results(fx);
  const double f = stats::mean(j.fcfs), s = stats::mean(j.sjf), l = stats::mean(j.full);
  const auto t_ls = stats::paired_t_test(j.full, j.sjf);
  const auto t_sf = stats::paired_t_test(j.sjf, j.fcfs);
  const double reduction = 1.0 - l / s;
  const bool ok = corr >= 0.7 && l < s && s < f && reduction >= 0.05 && t_ls.p_less < 0.05;
  return {ok, fmt("mean JCT LLMSched %.3f < SJF %.3f < FCFS %.3f s", l, s, f) +
                  fmt(", LLMSched %.1f%% below SJF (paired p=%.2g), SJF vs FCFS p=%.2g", 100.0 * reduction, t_ls.p_less,
                      t_sf.p_less) +
                  fmt(", weakest correlation %.3f", corr) + " (" + app + "), 20 seeds"};
}

Outcome ablation(const CatalogFixture& fx) {
  const auto& j = mixed_results(fx);
  const double l = stats::mean(j.full), nb = stats::mean(j.no_bn), nu = stats::mean(j.eps0);
  return {nb >= l && nu >= l, fmt("full %.3f s, without BN %.3f s (%+.1f%%), without uncertainty %.3f s", l, nb,
                                  100.0 * (nb / l - 1.0), nu) +
                                  fmt(" (%+.1f%%), 20 seeds", 100.0 * (nu / l - 1.0))};
}

// Mean decision time of one warm scheduler over a snapshot of fresh jobs
// holding at least `stages` schedulable stages.
double decision_ms(const CatalogFixture& fx, int stages, int* actual) {
  auto jobs = generate_workload(preset_workload("mixed", 4 * stages, 0.9, 31), fx.catalog);
  SchedulingSnapshot snap;
  InferenceCache cache;
  int count = 0;
  for (auto& j : jobs) {
    if (count >= stages) break;
    refresh_states(j.view);
    count += static_cast<int>(schedulable_stages(j.view).size());
    snap.jobs.push_back(&j.view);
  }
  *actual = count;
  snap.profiles = &fx.profiles;
  snap.now = jobs.back().view.arrival;
  snap.avg_llm_batch = 4.0;
  snap.cache = &cache;
  LlmSchedScheduler s(llmsched_cfg(0.2));
  s.schedule(snap);  // populates the inference cache
  const int reps = 30;
  const auto t0 = Clock::now();
  volatile std::size_t sink = 0;
  for (int i = 0; i < reps; ++i) sink = sink + s.schedule(snap).llm.size();
  return 1000.0 * seconds_since(t0) / reps;
}

Outcome overhead(const CatalogFixture& fx) {
  SchedulerConfig sc = llmsched_cfg(0.2);
  const auto r = run_cell(mixed_cell(sc), kSeeds.front(), fx.catalog, fx.profiles);
  int n256 = 0, n512 = 0;
  const double t256 = decision_ms(fx, 256, &n256);
  const double t512 = decision_ms(fx, 512, &n512);
  const double ratio = t512 / t256;
  return {r.metrics.overhead_mean_ms < 3.0 && ratio <= 2.5,
          fmt("mean decision %.3f ms over %g invocations at 300 jobs", r.metrics.overhead_mean_ms,
              static_cast<double>(r.metrics.invocations)) +
              fmt("; %g stages %.3f ms, %g stages", n256, t256, n512) + fmt(" %.3f ms, ratio %.2f", t512, ratio)};
}

Outcome sensitivity(const CatalogFixture& fx) {
  const auto& j = mixed_results(fx);
  const double m0 = stats::mean(j.eps0), m1 = stats::mean(j.eps1);
  double best_eps = -1.0, best = INFINITY;
  std::string curve = fmt("eps=0: %.3f", m0);
  for (const auto& [e, v] : j.interior) {
    const double m = stats::mean(v);
    curve += fmt(", %.1f: %.3f", e, m);
    if (m < best) {
      best = m;
      best_eps = e;
    }
  }
  curve += fmt(", 1: %.3f", m1);
  return {best < m0 && best < m1, "mean JCT " + curve + fmt(" s; best interior eps=%.1f, 20 seeds", best_eps)};
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  const CatalogFixture fx(kTrainingJobsPerApp);
  report(1, "motivating two-job scenario", motivating_example);
  report(2, "BN inference matches brute-force enumeration", bn_oracle);
  report(3, "entropy and mutual information", information_suite);
  report(4, "batch calibration", calibration);
  report(5, "simulator invariants and reproducibility", [&] { return simulator_invariants(fx); });
  report(6, "scheduler equivalences", [&] { return scheduler_equivalences(fx); });
  report(7, "JCT ordering LLMSched < SJF < FCFS", [&] { return jct_ordering(fx); });
  report(8, "ablations are no better than the full scheduler", [&] { return ablation(fx); });
  report(9, "decision overhead and scaling", [&] { return overhead(fx); });
  report(10, "interior epsilon beats both extremes", [&] { return sensitivity(fx); });
  std::printf("%d of 10 criteria failed (%.1f s total)\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
