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

#include <string>
#include <vector>

#include "pairfit/matching.hpp"
#include "pairfit/record.hpp"

namespace pairfit {

/// One (case, control) difference row of the conditional design. The
/// response is the constant 1 for every row and is therefore not stored.
/// Differences of the four matching variables are structurally zero and the
/// columns are never formed.
struct PairRow {
  std::int64_t pair_id = 0;  // one per (case, control) combination
  std::int64_t set_id = 0;   // shared by the k rows of a 1:k set
  std::int64_t case_id = 0;
  std::int64_t control_id = 0;
  std::string nationality;
  int after2004 = 0;        // shared within the pair by construction
  std::vector<double> z;    // case minus control, aligned with PairRowSet::variables
};

struct PairRowSet {
  std::vector<std::string> variables;
  std::vector<PairRow> rows;
};

inline bool is_matching_variable(std::string_view name) {
  return name == "nationality" || name == "gender" || name == "adult" || name == "after2004";
}

/// Flattens matched sets into difference rows: a 1:k set yields k rows
/// sharing its case.
inline PairRowSet build_pair_rows(const std::vector<MatchedSet>& sets, const Dataset& data,
                                  const std::vector<std::string>& modeled_vars) {
  for (const auto& name : modeled_vars) {
    if (is_matching_variable(name))
      throw error(errc::config, "matching variables are excluded from the paired design", name);
    if (!data.has_column(name)) throw error(errc::schema, "unknown modeled variable", name);
  }
  PairRowSet out;
  out.variables = modeled_vars;
  std::int64_t pair_id = 0;
  for (std::size_t s = 0; s < sets.size(); ++s) {
    const MatchedSet& set = sets[s];
    const Record& case_rec = data.by_id(set.case_id);
    for (std::int64_t control_id : set.control_ids) {
      const Record& ctrl_rec = data.by_id(control_id);
      if (stratum_of(case_rec) != stratum_of(ctrl_rec))
        throw error(errc::integrity, "case and control disagree on the exact stratum (pair " +
                                         std::to_string(pair_id) + ")");
      PairRow row;
      row.pair_id = pair_id++;
      row.set_id = static_cast<std::int64_t>(s);
      row.case_id = set.case_id;
      row.control_id = control_id;
      row.nationality = case_rec.nationality;
      row.after2004 = case_rec.after2004;
      row.z.reserve(modeled_vars.size());
      for (const auto& name : modeled_vars)
        row.z.push_back(data.value(case_rec, name) - data.value(ctrl_rec, name));
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

/// Case/control records stacked with outcome 0/1 kept, for the paired mixed
/// model: one row per set member, interaction columns as raw products.
struct StackedPairData {
  GroupedGlmData data;
  std::vector<std::string> originals;
  std::vector<std::string> interactions;  // column names "<x>:<era>"
  std::vector<std::int64_t> set_id;       // per stacked row
  std::string grouping;                   // nationality | pair | person_by_nationality
};

inline StackedPairData stack_matched_sets(const std::vector<MatchedSet>& sets, const Dataset& data,
                                          const std::vector<std::string>& originals,
                                          const std::vector<std::string>& interact_with,
                                          const std::string& era = "after2004",
                                          const std::string& grouping = "nationality") {
  for (const auto& name : originals) {
    if (is_matching_variable(name))
      throw error(errc::config, "matching variables are excluded from the paired design", name);
    if (!data.has_column(name)) throw error(errc::schema, "unknown modeled variable", name);
  }
  for (const auto& name : interact_with)
    if (std::find(originals.begin(), originals.end(), name) == originals.end())
      throw error(errc::config, "interaction base is not an original factor", name);
  if (grouping != "nationality" && grouping != "pair" && grouping != "person_by_nationality")
    throw error(errc::config, "grouping must be nationality | pair | person_by_nationality", grouping);

  StackedPairData out;
  out.originals = originals;
  out.grouping = grouping;
  for (const auto& name : interact_with) out.interactions.push_back(name + ":" + era);

  std::vector<const Record*> members;
  std::vector<std::int64_t> member_set;
  for (std::size_t s = 0; s < sets.size(); ++s) {
    members.push_back(&data.by_id(sets[s].case_id));
    member_set.push_back(static_cast<std::int64_t>(s));
    for (std::int64_t cid : sets[s].control_ids) {
      members.push_back(&data.by_id(cid));
      member_set.push_back(static_cast<std::int64_t>(s));
    }
  }

  const Eigen::Index n = static_cast<Eigen::Index>(members.size());
  const std::size_t p = originals.size() + interact_with.size();
  out.data.X.resize(n, static_cast<Eigen::Index>(p));
  out.data.y.resize(n);
  out.data.names = originals;
  out.data.names.insert(out.data.names.end(), out.interactions.begin(), out.interactions.end());
  out.set_id = member_set;

  std::map<std::string, int> group_index;
  auto label_of = [&](const Record& r, std::int64_t set) {
    if (grouping == "pair") return "set" + std::to_string(set);
    if (grouping == "person_by_nationality")
      return r.nationality + "/set" + std::to_string(set);
    return r.nationality;
  };
  for (Eigen::Index i = 0; i < n; ++i)
    group_index.emplace(label_of(*members[static_cast<std::size_t>(i)],
                                 member_set[static_cast<std::size_t>(i)]),
                        0);
  int next = 0;
  for (auto& [label, idx] : group_index) {
    idx = next++;
    out.data.group_labels.push_back(label);
  }

  out.data.group.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const Record& r = *members[static_cast<std::size_t>(i)];
    out.data.y[i] = r.outcome;
    out.data.group[static_cast<std::size_t>(i)] =
        group_index.at(label_of(r, member_set[static_cast<std::size_t>(i)]));
    for (std::size_t j = 0; j < originals.size(); ++j)
      out.data.X(i, static_cast<Eigen::Index>(j)) = data.value(r, originals[j]);
    double era_value = data.value(r, era);
    for (std::size_t j = 0; j < interact_with.size(); ++j)
      out.data.X(i, static_cast<Eigen::Index>(originals.size() + j)) =
          era_value * data.value(r, interact_with[j]);
  }
  return out;
}

}  // namespace pairfit
