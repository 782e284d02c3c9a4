#pragma once

#include <json.hpp>

#include "llmsched/bayesnet/network.hpp"
#include "llmsched/core/distribution.hpp"

namespace llmsched {

using ojson = nlohmann::ordered_json;

inline ojson to_json(const DurationDistribution& d) {
  ojson j;
  ojson bins = ojson::array();
  for (const auto& b : d.bins()) bins.push_back(ojson::array({b.lo, b.hi}));
  j["intervals"] = std::move(bins);
  j["probs"] = d.probs();
  j["representative"] = d.representative();
  return j;
}

inline DurationDistribution distribution_from_json(const ojson& j) {
  std::vector<Interval> bins;
  for (const auto& b : j.at("intervals")) bins.push_back({b.at(0).get<double>(), b.at(1).get<double>()});
  auto probs = j.at("probs").get<std::vector<double>>();
  if (j.contains("representative"))
    return DurationDistribution(std::move(bins), std::move(probs), j.at("representative").get<std::vector<double>>());
  return DurationDistribution(std::move(bins), std::move(probs));
}

namespace bn {

// Variables in index order; each lists its state intervals, parents and CPT
// rows (one row per parent configuration, first parent slowest).
inline ojson to_json(const DiscreteBayesNet& net) {
  ojson vars = ojson::array();
  for (std::size_t v = 0; v < net.size(); ++v) {
    const auto& var = net.variable(static_cast<int>(v));
    ojson jv;
    jv["name"] = var.name;
    jv["stage"] = var.stage;
    jv["states"] = llmsched::to_json(var.domain);
    jv["parents"] = net.parents_of(static_cast<int>(v));
    ojson rows = ojson::array();
    const auto c = static_cast<std::size_t>(var.card());
    const auto& cpt = net.cpts()[v];
    for (std::size_t r = 0; r * c < cpt.size(); ++r)
      rows.push_back(std::vector<double>(cpt.begin() + static_cast<std::ptrdiff_t>(r * c),
                                         cpt.begin() + static_cast<std::ptrdiff_t>((r + 1) * c)));
    jv["cpt"] = std::move(rows);
    vars.push_back(std::move(jv));
  }
  ojson j;
  j["variables"] = std::move(vars);
  return j;
}

inline DiscreteBayesNet network_from_json(const ojson& j) {
  std::vector<Variable> vars;
  ParentGraph parents;
  std::vector<std::vector<double>> cpts;
  for (const auto& jv : j.at("variables")) {
    vars.push_back({jv.at("name").get<std::string>(), jv.at("stage").get<int>(), distribution_from_json(jv.at("states"))});
    parents.push_back(jv.at("parents").get<std::vector<int>>());
    std::vector<double> flat;
    for (const auto& row : jv.at("cpt"))
      for (const auto& x : row) flat.push_back(x.get<double>());
    cpts.push_back(std::move(flat));
  }
  return DiscreteBayesNet(std::move(vars), std::move(parents), std::move(cpts));
}

}  // namespace bn
}  // namespace llmsched
