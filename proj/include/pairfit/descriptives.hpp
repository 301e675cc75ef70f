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

#include <map>
#include <string>
#include <vector>

#include "pairfit/matching.hpp"
#include "pairfit/record.hpp"

namespace pairfit {

/// Grants divided by all determinations.
inline double recognition_rate(const Dataset& data) {
  if (data.empty()) throw error(errc::empty_input, "empty dataset");
  std::size_t grants = 0;
  for (const auto& r : data.records()) grants += r.outcome == 1;
  return static_cast<double>(grants) / static_cast<double>(data.size());
}

inline std::map<int, double> recognition_rate_by_year(const Dataset& data) {
  if (data.empty()) throw error(errc::empty_input, "empty dataset");
  std::map<int, std::pair<std::size_t, std::size_t>> counts;  // year -> (grants, total)
  for (const auto& r : data.records()) {
    auto& c = counts[r.year];
    c.first += r.outcome == 1;
    ++c.second;
  }
  std::map<int, double> out;
  for (const auto& [year, c] : counts)
    out[year] = static_cast<double>(c.first) / static_cast<double>(c.second);
  return out;
}

/// One descriptive row per factor: proportion with the attribute among
/// matched cases and matched controls, and the same for the attribute
/// restricted to the after-2004 era.
struct AttributeRow {
  std::string variable;
  double case_prop = 0.0;
  double control_prop = 0.0;
  double case_era_prop = 0.0;
  double control_era_prop = 0.0;
};

inline std::vector<AttributeRow> describe_attributes(const std::vector<MatchedSet>& sets,
                                                     const Dataset& data,
                                                     std::vector<std::string> variables = {}) {
  if (sets.empty()) throw error(errc::empty_input, "no matched sets");
  if (variables.empty()) {
    for (const auto& name : data.schema())
      if (covariate_is_factor(name)) variables.push_back(name);
  }

  std::vector<const Record*> cases, controls;
  for (const auto& s : sets) {
    cases.push_back(&data.by_id(s.case_id));
    for (std::int64_t cid : s.control_ids) controls.push_back(&data.by_id(cid));
  }

  auto proportion = [&](const std::vector<const Record*>& group, const std::string& name,
                        bool era_product) {
    double hits = 0.0;
    for (const Record* r : group) {
      double v = data.value(*r, name);
      if (era_product) v *= r->after2004;
      hits += v == 1.0;
    }
    return group.empty() ? 0.0 : hits / static_cast<double>(group.size());
  };

  std::vector<AttributeRow> out;
  out.reserve(variables.size());
  for (const auto& name : variables) {
    AttributeRow row;
    row.variable = name;
    row.case_prop = proportion(cases, name, false);
    row.control_prop = proportion(controls, name, false);
    row.case_era_prop = proportion(cases, name, true);
    row.control_era_prop = proportion(controls, name, true);
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace pairfit
