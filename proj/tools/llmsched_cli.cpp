// Experiment runner: profile training, single runs, sweeps and ablations.
#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "llmsched/experiment/experiment.hpp"
#include "llmsched/llmsched.hpp"

namespace fs = std::filesystem;
using namespace llmsched;
using ojson = nlohmann::ordered_json;

namespace {

struct CommonFlags {
  std::string workload = "mixed";
  std::string scheduler = "llmsched";
  double epsilon = 0.2;
  double ratio = 0.2;
  double lambda = 0.9;
  int num_jobs = 300;
  std::vector<std::uint64_t> seeds{1};
  std::string cluster;  // file path; empty = preset of the workload
  std::string profiles;  // directory; empty = train on the built-in corpus
  std::string apps;      // catalog file; empty = built-in catalog
  std::string out = "out";
  bool dump_scores = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--workload", f.workload, "workload preset: mixed, predefined, chainlike, planning")->capture_default_str();
  cmd->add_option("--scheduler", f.scheduler, "fcfs, fair, sjf, srtf, argus, llmsched")->capture_default_str();
  cmd->add_option("--epsilon", f.epsilon, "exploration probability")->capture_default_str();
  cmd->add_option("--ratio", f.ratio, "task sampling ratio")->capture_default_str();
  cmd->add_option("--lambda", f.lambda, "job arrival rate (jobs/s)")->capture_default_str();
  cmd->add_option("--num-jobs", f.num_jobs, "jobs per run")->capture_default_str();
  cmd->add_option("--seeds,--seed", f.seeds, "one or more seeds")->capture_default_str();
  cmd->add_option("--cluster", f.cluster, "cluster config file (default: preset of the workload)");
  cmd->add_option("--profiles", f.profiles, "directory of profile files (default: train on the built-in corpus)");
  cmd->add_option("--apps", f.apps, "application catalog file (default: built-in)");
  cmd->add_option("--out", f.out, "output directory")->capture_default_str();
  cmd->add_flag("--dump-scores", f.dump_scores, "write per-invocation uncertainty scores (llmsched only)");
}

Catalog load_catalog(const std::string& path) { return path.empty() ? Catalog::builtin() : Catalog::load(path); }

ClusterConfig load_cluster_flag(const CommonFlags& f) {
  return f.cluster.empty() ? preset_cluster(f.workload) : load_cluster(f.cluster);
}

void write_json(const fs::path& p, const ojson& j) {
  std::ofstream os(p);
  if (!os) throw ConfigError("cannot write " + p.string());
  os << j.dump(2) << '\n';
}

ProfileSet load_profiles(const std::string& dir) {
  ProfileSet out;
  if (!fs::is_directory(dir)) throw ConfigError("profile directory " + dir + " does not exist");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".json" && e.path().stem().string().rfind("profile_", 0) == 0) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& p : files) {
    std::ifstream is(p);
    try {
      auto prof = profile_from_json(ojson::parse(is));
      const std::string id = prof.app_id;
      out.emplace(id, std::move(prof));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("profile " + p.string() + ": " + e.what());
    }
  }
  return out;
}

ProfileSet profiles_for(const CommonFlags& f, const Catalog& catalog, const ClusterConfig& cluster) {
  if (!f.profiles.empty()) return load_profiles(f.profiles);
  return train_profiles(catalog, training_traces(catalog), cluster.calibration);
}

Cell cell_of(const CommonFlags& f, const ClusterConfig& cluster) {
  Cell c;
  c.workload = f.workload;
  c.scheduler.policy = policy_from(f.scheduler);
  c.scheduler.epsilon = f.epsilon;
  c.scheduler.ratio = f.ratio;
  c.scheduler.validate();
  c.cluster = cluster;
  c.num_jobs = f.num_jobs;
  c.lambda = f.lambda;
  preset_mix(c.workload);  // rejects unknown presets early
  return c;
}

ojson provenance(const std::string& command, const CommonFlags& f, const ClusterConfig& cluster, const Catalog& catalog) {
  ojson j;
  j["command"] = command;
  j["workload"] = f.workload;
  j["scheduler"] = f.scheduler;
  j["epsilon"] = f.epsilon;
  j["ratio"] = f.ratio;
  j["lambda"] = f.lambda;
  j["num_jobs"] = f.num_jobs;
  j["seeds"] = f.seeds;
  j["cluster"] = to_json(cluster);
  j["profiles"] = f.profiles.empty() ? ojson("builtin-training-corpus") : ojson(f.profiles);
  j["catalog"] = f.apps.empty() ? ojson("builtin") : ojson(f.apps);
  j["catalog_version"] = catalog.version();
  return j;
}

int cmd_run(const CommonFlags& f) {
  const auto catalog = load_catalog(f.apps);
  const auto cluster = load_cluster_flag(f);
  const auto cell = cell_of(f, cluster);
  const auto profiles = profiles_for(f, catalog, cluster);
  fs::create_directories(f.out);
  write_json(fs::path(f.out) / "config.json", provenance("run", f, cluster, catalog));

  std::ofstream all(fs::path(f.out) / "summary.csv");
  all << "seed,scheduler,average_jct,makespan,regular_utilization,llm_utilization,llm_slot_utilization\n" << std::setprecision(17);
  for (auto seed : f.seeds) {
    const fs::path dir = fs::path(f.out) / ("seed_" + std::to_string(seed));
    fs::create_directories(dir);
    std::ofstream scores;
    SimOptions opts;
    if (f.dump_scores && cell.scheduler.policy == Policy::LlmSched) {
      scores.open(dir / "scores.csv");
      scores << kScoreDumpHeader << '\n';
      opts.score_dump = &scores;
    }
    const auto r = run_cell(cell, seed, catalog, profiles, opts);
    std::ofstream jobs(dir / "jobs.csv"), summary(dir / "summary.csv"), timing(dir / "timing.csv");
    write_job_records(jobs, r.metrics);
    write_summary(summary, r.metrics);
    write_timing(timing, r.metrics);
    const auto& m = r.metrics;
    all << seed << ',' << f.scheduler << ',' << m.average_jct << ',' << m.makespan << ',' << m.regular_utilization << ','
        << m.llm_utilization << ',' << m.llm_slot_utilization << '\n';
    std::cout << "seed " << seed << ": average JCT " << m.average_jct << " s, overhead " << m.overhead_mean_ms
              << " ms/invocation\n";
  }
  return 0;
}

std::vector<double> parse_values(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("bad sweep value '" + item + "'");
    }
  }
  return out;
}

int cmd_sweep(const CommonFlags& f, const std::string& param, const std::string& values) {
  const auto catalog = load_catalog(f.apps);
  const auto cluster = load_cluster_flag(f);
  const auto cell = cell_of(f, cluster);
  const auto p = sweep_parameter_from(param);
  const auto vals = parse_values(values);
  const auto profiles = profiles_for(f, catalog, cluster);
  const auto rows = sweep(p, vals, cell, f.seeds, catalog, profiles);
  fs::create_directories(f.out);
  auto prov = provenance("sweep", f, cluster, catalog);
  prov["parameter"] = param;
  prov["values"] = vals;
  write_json(fs::path(f.out) / "config.json", prov);
  std::ofstream os(fs::path(f.out) / ("sweep_" + param + ".csv"));
  os << param << ",mean_jct,normalized_jct,normalized_stddev\n" << std::setprecision(17);
  for (const auto& r : rows) os << r.value << ',' << r.mean_jct << ',' << r.normalized << ',' << r.normalized_stddev << '\n';
  for (const auto& r : rows) std::cout << param << '=' << r.value << " normalized JCT " << r.normalized << '\n';
  return 0;
}

int cmd_ablate(const CommonFlags& f) {
  const auto catalog = load_catalog(f.apps);
  const auto cluster = load_cluster_flag(f);
  const auto cell = cell_of(f, cluster);
  const auto profiles = profiles_for(f, catalog, cluster);
  const auto rows = ablate(cell, f.seeds, catalog, profiles);
  fs::create_directories(f.out);
  write_json(fs::path(f.out) / "config.json", provenance("ablate", f, cluster, catalog));
  std::ofstream os(fs::path(f.out) / "ablation.csv");
  os << "variant,mean_jct,normalized_jct,normalized_stddev\n" << std::setprecision(17);
  for (const auto& r : rows) os << r.variant << ',' << r.mean_jct << ',' << r.normalized << ',' << r.normalized_stddev << '\n';
  for (const auto& r : rows) std::cout << r.variant << " normalized JCT " << r.normalized << '\n';
  return 0;
}

int cmd_profile(const std::string& traces_path, const std::string& apps, const std::string& cluster_path,
                const std::string& out, int max_bins) {
  const auto catalog = load_catalog(apps);
  const auto cluster = cluster_path.empty() ? preset_cluster("mixed") : load_cluster(cluster_path);
  const auto traces = read_trace(traces_path);
  if (traces.empty()) throw TrainingError("trace file " + traces_path + " holds no records");
  TrainingOptions opts;
  opts.max_bins = max_bins;
  const auto profiles = train_profiles(catalog, traces, cluster.calibration, opts);
  fs::create_directories(out);
  for (const auto& [app, prof] : profiles) {
    write_json(fs::path(out) / ("profile_" + app + ".json"), to_json(prof));
    std::cout << app << ": " << prof.stage_dists.size() << " stage distributions, "
              << (prof.network ? std::to_string(prof.network->size()) + "-node network" : std::string("no network")) << '\n';
  }
  write_json(fs::path(out) / "calibration.json", ojson{{"decode_latency_ms", cluster.calibration.table()}});
  return 0;
}

int cmd_generate_trace(const std::string& apps, int per_app, std::uint64_t seed, const std::string& out) {
  const auto catalog = load_catalog(apps);
  if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
  write_trace(out, training_traces(catalog, per_app, seed));
  std::cout << "wrote " << per_app * static_cast<int>(catalog.app_ids().size()) << " records to " << out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LLMSched experiment runner"};
  app.require_subcommand(1);

  CommonFlags run_flags, sweep_flags, ablate_flags;
  auto* run = app.add_subcommand("run", "simulate one cell for each seed");
  add_common(run, run_flags);

  auto* sw = app.add_subcommand("sweep", "sweep epsilon, ratio or lambda");
  add_common(sw, sweep_flags);
  std::string param = "epsilon", values = "0,0.25,0.5,1";
  sw->add_option("--param", param, "epsilon, ratio or lambda")->capture_default_str();
  sw->add_option("--values", values, "comma-separated values")->capture_default_str();

  auto* ab = app.add_subcommand("ablate", "full LLMSched vs. without BN vs. without uncertainty");
  add_common(ab, ablate_flags);

  auto* prof = app.add_subcommand("profile", "train profiles from a trace file");
  std::string traces, prof_apps, prof_cluster, prof_out = "profiles";
  int max_bins = 6;
  prof->add_option("--traces", traces, "NDJSON trace file")->required();
  prof->add_option("--apps", prof_apps, "application catalog file");
  prof->add_option("--cluster", prof_cluster, "cluster config providing the calibration table");
  prof->add_option("--out", prof_out, "output directory")->capture_default_str();
  prof->add_option("--max-bins", max_bins, "duration intervals per stage")->capture_default_str();

  auto* gen = app.add_subcommand("generate-trace", "write a profiling corpus drawn from the catalog");
  std::string gen_apps, gen_out = "traces.ndjson";
  int per_app = kTrainingJobsPerApp;
  std::uint64_t gen_seed = kTrainingSeed;
  gen->add_option("--apps", gen_apps, "application catalog file");
  gen->add_option("--per-app", per_app, "jobs per application")->capture_default_str();
  gen->add_option("--seed", gen_seed, "rng seed")->capture_default_str();
  gen->add_option("--out", gen_out, "output file")->capture_default_str();

  auto* apps = app.add_subcommand("apps", "print the built-in application catalog");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(run_flags);
    if (*sw) return cmd_sweep(sweep_flags, param, values);
    if (*ab) return cmd_ablate(ablate_flags);
    if (*prof) return cmd_profile(traces, prof_apps, prof_cluster, prof_out, max_bins);
    if (*gen) return cmd_generate_trace(gen_apps, per_app, gen_seed, gen_out);
    if (*apps) {
      std::cout << nlohmann::json::parse(kDefaultCatalog).dump(2) << '\n';
      return 0;
    }
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
