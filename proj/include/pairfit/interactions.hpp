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

#include <Eigen/Dense>
#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "pairfit/pairs.hpp"

namespace pairfit {

struct InteractionDesign {
  std::vector<std::string> original_factors;
  std::string era_indicator;
  std::vector<std::string> interaction_factors;  // "<x>:<era>" product columns
  std::size_t total_covariates = 0;
};

/// Difference-scale design for the conditional models: original columns are
/// the pair differences, each interaction column is era * difference (the era
/// is shared within a pair, so the product rule collapses to that).
struct PairDesign {
  std::vector<std::string> columns;  // originals then interactions
  Eigen::MatrixXd Z;                 // one row per PairRow
  std::vector<std::int64_t> set_id;
  std::vector<std::int64_t> pair_id;
  std::vector<std::string> nationality;
  InteractionDesign meta;
};

inline PairDesign build_interaction_design(const PairRowSet& rows,
                                           const std::vector<std::string>& originals,
                                           const std::vector<std::string>& interact_with,
                                           const std::string& era = "after2004") {
  std::vector<int> original_idx;
  for (const auto& name : originals) {
    auto it = std::find(rows.variables.begin(), rows.variables.end(), name);
    if (it == rows.variables.end())
      throw error(errc::schema, "original factor missing from pair rows", name);
    original_idx.push_back(static_cast<int>(it - rows.variables.begin()));
  }
  std::vector<int> inter_idx;
  for (const auto& name : interact_with) {
    auto it = std::find(originals.begin(), originals.end(), name);
    if (it == originals.end())
      throw error(errc::config, "interaction base is not an original factor", name);
    inter_idx.push_back(original_idx[static_cast<std::size_t>(it - originals.begin())]);
  }

  // The era indicator must be constant within each matched set.
  std::map<std::int64_t, int> era_by_set;
  for (const auto& row : rows.rows) {
    auto [it, inserted] = era_by_set.emplace(row.set_id, row.after2004);
    if (!inserted && it->second != row.after2004)
      throw error(errc::integrity,
                  era + " varies within matched set " + std::to_string(row.set_id));
  }

  PairDesign out;
  out.meta.original_factors = originals;
  out.meta.era_indicator = era;
  for (const auto& name : interact_with) out.meta.interaction_factors.push_back(name + ":" + era);
  out.meta.total_covariates = originals.size() + interact_with.size();

  out.columns = originals;
  out.columns.insert(out.columns.end(), out.meta.interaction_factors.begin(),
                     out.meta.interaction_factors.end());

  const Eigen::Index n = static_cast<Eigen::Index>(rows.rows.size());
  out.Z.resize(n, static_cast<Eigen::Index>(out.columns.size()));
  out.set_id.reserve(rows.rows.size());
  out.pair_id.reserve(rows.rows.size());
  out.nationality.reserve(rows.rows.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const PairRow& row = rows.rows[static_cast<std::size_t>(i)];
    out.set_id.push_back(row.set_id);
    out.pair_id.push_back(row.pair_id);
    out.nationality.push_back(row.nationality);
    for (std::size_t j = 0; j < original_idx.size(); ++j)
      out.Z(i, static_cast<Eigen::Index>(j)) = row.z[static_cast<std::size_t>(original_idx[j])];
    for (std::size_t j = 0; j < inter_idx.size(); ++j)
      out.Z(i, static_cast<Eigen::Index>(original_idx.size() + j)) =
          row.after2004 * row.z[static_cast<std::size_t>(inter_idx[j])];
  }
  return out;
}

}  // namespace pairfit
