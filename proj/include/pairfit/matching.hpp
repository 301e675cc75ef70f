/*
 * Copyright 2026 the pairfit authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pairfit/design.hpp"
#include "pairfit/glmm.hpp"
#include "pairfit/parallel.hpp"
#include "pairfit/record.hpp"

namespace pairfit {

enum class ConstraintRule { must_equal, case_geq_control, case_leq_control };

inline const char* constraint_rule_name(ConstraintRule r) {
  switch (r) {
    case ConstraintRule::must_equal: return "must_equal";
    case ConstraintRule::case_geq_control: return "case_geq_control";
    case ConstraintRule::case_leq_control: return "case_leq_control";
  }
  return "unknown";
}

inline ConstraintRule constraint_rule_from_name(const std::string& s) {
  if (s == "must_equal") return ConstraintRule::must_equal;
  if (s == "case_geq_control") return ConstraintRule::case_geq_control;
  if (s == "case_leq_control") return ConstraintRule::case_leq_control;
  throw error(errc::config, "unknown constraint rule", s);
}

struct Constraint {
  std::string variable;
  ConstraintRule rule = ConstraintRule::must_equal;
};

struct ConstraintSet {
  std::vector<Constraint> rules;

  static ConstraintSet defaults() {
    return ConstraintSet{{{"unaccompanied_minor", ConstraintRule::must_equal}}};
  }

  bool admits(const Dataset& data, const Record& case_rec, const Record& control_rec) const {
    for (const auto& c : rules) {
      double a = data.value(case_rec, c.variable);
      double b = data.value(control_rec, c.variable);
      switch (c.rule) {
        case ConstraintRule::must_equal:
          if (a != b) return false;
          break;
        case ConstraintRule::case_geq_control:
          if (a < b) return false;
          break;
        case ConstraintRule::case_leq_control:
          if (a > b) return false;
          break;
      }
    }
    return true;
  }
};

/// Grant-probability scorer: selected fixed effects plus the nationality
/// posterior-mode intercept. Unseen nationalities score on the fixed part.
struct PropensityModel {
  FittedGlmm model;
  std::vector<std::string> selected;

  double score(const Dataset& data, const Record& r) const {
    double eta = 0.0;
    for (std::size_t j = 0; j < model.names.size(); ++j) {
      const std::string& name = model.names[j];
      double x = name == "(intercept)" ? 1.0 : data.value(r, name);
      eta += model.coefficients[static_cast<Eigen::Index>(j)] * x;
    }
    auto it = model.predicted_effects.find(r.nationality);
    if (it != model.predicted_effects.end()) eta += it->second;
    return logistic(eta);
  }
};

/// Fits outcome ~ selected fixed effects + nationality random intercept on
/// the full observation dataset and wraps it as a scorer.
inline PropensityModel compute_propensity(const Dataset& data,
                                          const std::vector<std::string>& selected,
                                          const MixedFitSpec& spec_template = {}) {
  for (const auto& name : selected)
    if (!data.has_column(name)) throw error(errc::schema, "unknown propensity variable", name);
  GroupedGlmData grouped = build_grouped_data(data, selected);
  MixedFitSpec spec = spec_template;
  spec.fixed.predictors = selected;
  spec.allow_single_group = true;
  PropensityModel out;
  out.model = fit_random_intercept_logistic(grouped, spec);
  out.selected = selected;
  return out;
}

struct MatchedSet {
  std::int64_t case_id = 0;
  std::vector<std::int64_t> control_ids;  // nearest first
  std::vector<double> distances;          // nondecreasing
  StratumKey stratum;
  double case_score = 0.0;
  std::vector<double> control_scores;
};

struct MatchDiagnostics {
  std::size_t cases_total = 0;
  std::size_t cases_matched = 0;
  std::size_t cases_dropped = 0;  // empty candidate pool at selection time
  std::size_t controls_total = 0;
  std::size_t controls_consumed = 0;
};

struct MatchResult {
  std::vector<MatchedSet> sets;
  MatchDiagnostics diagnostics;
};

using ScoreFn = std::function<double(const Record&)>;

/// Greedy nearest-neighbour 1:k assignment without replacement inside exact
/// strata. Cases run in ascending id order; equal distances resolve to the
/// lower control id. Strata never compete for controls, so they are matched
/// independently (and in parallel); the output is ordered by case id either
/// way.
inline MatchResult match_cases(const Dataset& data, const ScoreFn& score, int k,
                               const ConstraintSet& constraints = ConstraintSet::defaults(),
                               std::optional<double> caliper = {}) {
  if (k < 1) throw error(errc::config, "matching ratio k must be >= 1");
  for (const auto& c : constraints.rules)
    if (!data.has_column(c.variable))
      throw error(errc::config, "constraint references unknown variable", c.variable);

  const auto& records = data.records();
  std::vector<double> scores(records.size());
  parallel_for(records.size(), [&](std::size_t i) { scores[i] = score(records[i]); });

  struct Bucket {
    StratumKey key;
    std::vector<std::size_t> cases;     // record indices, sorted by id
    std::vector<std::size_t> controls;  // record indices, sorted by id
  };
  std::map<StratumKey, Bucket> buckets;
  MatchDiagnostics diag;
  for (std::size_t i = 0; i < records.size(); ++i) {
    StratumKey key = stratum_of(records[i]);
    Bucket& b = buckets.try_emplace(key, Bucket{key, {}, {}}).first->second;
    if (records[i].outcome == 1) {
      b.cases.push_back(i);
      ++diag.cases_total;
    } else {
      b.controls.push_back(i);
      ++diag.controls_total;
    }
  }

  std::vector<Bucket*> order;
  order.reserve(buckets.size());
  for (auto& [key, b] : buckets) {
    auto by_id = [&](std::size_t a, std::size_t c) { return records[a].id < records[c].id; };
    std::sort(b.cases.begin(), b.cases.end(), by_id);
    std::sort(b.controls.begin(), b.controls.end(), by_id);
    order.push_back(&b);
  }

  std::vector<std::vector<MatchedSet>> per_bucket(order.size());
  std::vector<std::size_t> dropped(order.size(), 0), consumed(order.size(), 0);
  parallel_for(order.size(), [&](std::size_t bi) {
    Bucket& b = *order[bi];
    std::vector<bool> used(b.controls.size(), false);
    for (std::size_t ci : b.cases) {
      const Record& case_rec = records[ci];
      struct Cand {
        double distance;
        std::int64_t id;
        std::size_t pos;
      };
      std::vector<Cand> pool;
      for (std::size_t p = 0; p < b.controls.size(); ++p) {
        if (used[p]) continue;
        const Record& ctrl = records[b.controls[p]];
        if (!constraints.admits(data, case_rec, ctrl)) continue;
        double d = std::fabs(scores[ci] - scores[b.controls[p]]);
        if (caliper && d > *caliper) continue;
        pool.push_back({d, ctrl.id, p});
      }
      if (pool.empty()) {
        ++dropped[bi];
        continue;
      }
      std::sort(pool.begin(), pool.end(), [](const Cand& a, const Cand& c) {
        return a.distance != c.distance ? a.distance < c.distance : a.id < c.id;
      });
      MatchedSet set;
      set.case_id = case_rec.id;
      set.stratum = b.key;
      set.case_score = scores[ci];
      const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), pool.size());
      for (std::size_t t = 0; t < take; ++t) {
        set.control_ids.push_back(pool[t].id);
        set.distances.push_back(pool[t].distance);
        set.control_scores.push_back(scores[b.controls[pool[t].pos]]);
        used[pool[t].pos] = true;
      }
      consumed[bi] += take;
      per_bucket[bi].push_back(std::move(set));
    }
  });

  MatchResult result;
  result.diagnostics = diag;
  for (std::size_t bi = 0; bi < order.size(); ++bi) {
    result.diagnostics.cases_dropped += dropped[bi];
    result.diagnostics.controls_consumed += consumed[bi];
    for (auto& s : per_bucket[bi]) result.sets.push_back(std::move(s));
  }
  std::sort(result.sets.begin(), result.sets.end(),
            [](const MatchedSet& a, const MatchedSet& b) { return a.case_id < b.case_id; });
  result.diagnostics.cases_matched = result.sets.size();
  return result;
}

inline MatchResult match_cases(const Dataset& data, const PropensityModel& model, int k,
                               const ConstraintSet& constraints = ConstraintSet::defaults(),
                               std::optional<double> caliper = {}) {
  return match_cases(
      data, [&](const Record& r) { return model.score(data, r); }, k, constraints, caliper);
}

}  // namespace pairfit
