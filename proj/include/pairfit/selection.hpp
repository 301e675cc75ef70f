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
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pairfit/design.hpp"
#include "pairfit/glm.hpp"
#include "pairfit/glmm.hpp"
#include "pairfit/parallel.hpp"
#include "pairfit/record.hpp"

namespace pairfit {

struct SelectionStep {
  std::string variable;
  double deviance_explained = 0.0;  // vs the null (intercept-only) model
  double gain = 0.0;                // first difference of deviance_explained
};

struct SelectionWarning {
  std::string variable;
  std::string message;
};

struct SelectionTrace {
  std::vector<SelectionStep> steps;
  std::vector<std::string> selected;
  double threshold = 0.0;
  std::string mode;  // "fixed" | "random-intercept"
  double null_deviance = 0.0;
  std::vector<SelectionWarning> warnings;
};

struct SelectionOptions {
  int quadrature_points = 25;
  FitSpec fit;  // tolerances shared by every candidate fit
};

/// BIC-flavoured default cutoff for the forward search.
inline double default_selection_threshold(std::size_t n_records) {
  return 2.0 * std::log(static_cast<double>(std::max<std::size_t>(n_records, 2)));
}

/// Greedy forward search on deviance explained: at each step refit the
/// outcome model jointly with each remaining candidate and keep the best
/// improvement, until it falls below the threshold. Candidates whose fit
/// fails (separation, non-convergence) are skipped with a warning. Equal
/// gains resolve by variable name, so candidate order never matters.
inline SelectionTrace forward_select(const Dataset& data, const std::vector<std::string>& candidates,
                                     const std::optional<std::string>& random_group, double threshold,
                                     const SelectionOptions& options = {}) {
  if (candidates.empty()) throw error(errc::config, "no selection candidates");
  if (data.empty()) throw error(errc::empty_input, "empty dataset");
  if (std::isnan(threshold) || threshold < 0.0)
    throw error(errc::config, "selection threshold must be nonnegative");
  if (random_group && *random_group != "nationality")
    throw error(errc::config, "random_group must be the nationality column", *random_group);

  std::vector<std::string> pool(candidates.begin(), candidates.end());
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  for (const auto& name : pool)
    if (!data.has_column(name)) throw error(errc::schema, "unknown candidate column", name);

  const bool mixed = random_group.has_value();
  GroupedGlmData grouped = build_grouped_data(data, pool);
  GlmData flat{grouped.X, grouped.names, grouped.y};

  auto loglik_of = [&](const std::vector<std::string>& predictors) -> double {
    if (mixed) {
      MixedFitSpec spec;
      spec.fixed = options.fit;
      spec.fixed.predictors = predictors;
      spec.quadrature_points = options.quadrature_points;
      spec.allow_single_group = true;
      return fit_random_intercept_logistic(grouped, spec).log_likelihood;
    }
    FitSpec spec = options.fit;
    spec.predictors = predictors;
    return fit_logistic(flat, spec).log_likelihood;
  };

  SelectionTrace trace;
  trace.threshold = threshold;
  trace.mode = mixed ? "random-intercept" : "fixed";

  const double ll_null = loglik_of({});
  trace.null_deviance = -2.0 * ll_null;

  std::vector<std::string> selected;
  std::set<std::string> skipped;
  double explained_prev = 0.0;

  while (selected.size() + skipped.size() < pool.size()) {
    std::vector<std::string> remaining;
    for (const auto& name : pool)
      if (!std::count(selected.begin(), selected.end(), name) && !skipped.count(name))
        remaining.push_back(name);

    struct Candidate {
      double explained = -std::numeric_limits<double>::infinity();
      std::string failure;
    };
    std::vector<Candidate> results(remaining.size());
    parallel_for(remaining.size(), [&](std::size_t i) {
      std::vector<std::string> preds = selected;
      preds.push_back(remaining[i]);
      try {
        results[i].explained = 2.0 * (loglik_of(preds) - ll_null);
      } catch (const error& e) {
        results[i].failure = e.what();
      }
    });

    int best = -1;
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      if (!results[i].failure.empty()) {
        trace.warnings.push_back({remaining[i], "skipped: " + results[i].failure});
        skipped.insert(remaining[i]);
        continue;
      }
      if (best < 0 || results[i].explained > results[static_cast<std::size_t>(best)].explained)
        best = static_cast<int>(i);  // remaining is name-sorted: ties keep the earlier name
    }
    if (best < 0) break;

    const double explained = results[static_cast<std::size_t>(best)].explained;
    const double gain = explained - explained_prev;
    if (!(gain >= threshold) || gain <= 0.0) break;

    trace.steps.push_back({remaining[static_cast<std::size_t>(best)], explained, gain});
    selected.push_back(remaining[static_cast<std::size_t>(best)]);
    explained_prev = explained;
  }

  trace.selected = selected;
  return trace;
}

}  // namespace pairfit
