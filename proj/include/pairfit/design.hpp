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
#include <map>
#include <string>
#include <vector>

#include "pairfit/glm.hpp"
#include "pairfit/glmm.hpp"
#include "pairfit/record.hpp"

namespace pairfit {

/// Numeric design over named dataset columns, response = outcome.
inline GlmData build_glm_data(const Dataset& data, const std::vector<std::string>& predictors) {
  GlmData out;
  const auto& records = data.records();
  out.X.resize(static_cast<Eigen::Index>(records.size()), static_cast<Eigen::Index>(predictors.size()));
  out.y.resize(static_cast<Eigen::Index>(records.size()));
  out.names = predictors;
  for (std::size_t i = 0; i < records.size(); ++i) {
    out.y[static_cast<Eigen::Index>(i)] = records[i].outcome;
    for (std::size_t j = 0; j < predictors.size(); ++j)
      out.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          data.value(records[i], predictors[j]);
  }
  return out;
}

/// Same design plus a dense group index over nationality labels. Labels are
/// indexed in sorted order so the encoding does not depend on record order.
inline GroupedGlmData build_grouped_data(const Dataset& data,
                                         const std::vector<std::string>& predictors) {
  GlmData flat = build_glm_data(data, predictors);
  GroupedGlmData out;
  out.X = std::move(flat.X);
  out.y = std::move(flat.y);
  out.names = std::move(flat.names);

  std::map<std::string, int> index;
  for (const auto& r : data.records()) index.emplace(r.nationality, 0);
  int next = 0;
  for (auto& [label, idx] : index) {
    idx = next++;
    out.group_labels.push_back(label);
  }
  out.group.reserve(data.size());
  for (const auto& r : data.records()) out.group.push_back(index.at(r.nationality));
  return out;
}

}  // namespace pairfit
