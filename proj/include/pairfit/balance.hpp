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

#include <cmath>
#include <string>
#include <vector>

#include "pairfit/matching.hpp"
#include "pairfit/record.hpp"

namespace pairfit {

struct BalanceRow {
  std::string variable;
  double smd_before = 0.0;  // grants vs refusals on the full dataset
  double smd_after = 0.0;   // matched cases vs matched controls
  bool degenerate_before = false;  // zero pooled SD, SMD reported as 0
  bool degenerate_after = false;
};

namespace detail {

struct MeanVar {
  double mean = 0.0;
  double var = 0.0;
  std::size_t n = 0;
};

inline MeanVar mean_var(const std::vector<double>& xs) {
  MeanVar mv;
  mv.n = xs.size();
  if (xs.empty()) return mv;
  for (double x : xs) mv.mean += x;
  mv.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    for (double x : xs) mv.var += (x - mv.mean) * (x - mv.mean);
    mv.var /= static_cast<double>(xs.size() - 1);
  }
  return mv;
}

inline double smd(const MeanVar& a, const MeanVar& b, bool* degenerate) {
  double pooled = std::sqrt(0.5 * (a.var + b.var));
  if (pooled <= 0.0) {
    *degenerate = true;
    return 0.0;
  }
  *degenerate = false;
  return (a.mean - b.mean) / pooled;
}

}  // namespace detail

/// Standardized mean differences before vs after matching. Matched cases
/// count once per set and every consumed control counts once.
inline std::vector<BalanceRow> balance_check(const std::vector<MatchedSet>& sets,
                                             const Dataset& data,
                                             std::vector<std::string> covariates = {}) {
  if (sets.empty()) throw error(errc::empty_input, "no matched sets");
  if (covariates.empty()) covariates = data.schema();

  std::vector<const Record*> matched_cases, matched_controls;
  for (const auto& s : sets) {
    matched_cases.push_back(&data.by_id(s.case_id));
    for (std::int64_t cid : s.control_ids) matched_controls.push_back(&data.by_id(cid));
  }

  std::vector<BalanceRow> out;
  out.reserve(covariates.size());
  for (const auto& name : covariates) {
    std::vector<double> grants, refusals, mc, mctl;
    for (const auto& r : data.records())
      (r.outcome == 1 ? grants : refusals).push_back(data.value(r, name));
    for (const Record* r : matched_cases) mc.push_back(data.value(*r, name));
    for (const Record* r : matched_controls) mctl.push_back(data.value(*r, name));

    BalanceRow row;
    row.variable = name;
    row.smd_before = detail::smd(detail::mean_var(grants), detail::mean_var(refusals),
                                 &row.degenerate_before);
    row.smd_after =
        detail::smd(detail::mean_var(mc), detail::mean_var(mctl), &row.degenerate_after);
    out.push_back(std::move(row));
  }
  return out;
}

inline double mean_absolute_smd_before(const std::vector<BalanceRow>& rows) {
  double s = 0.0;
  for (const auto& r : rows) s += std::fabs(r.smd_before);
  return rows.empty() ? 0.0 : s / static_cast<double>(rows.size());
}

inline double mean_absolute_smd_after(const std::vector<BalanceRow>& rows) {
  double s = 0.0;
  for (const auto& r : rows) s += std::fabs(r.smd_after);
  return rows.empty() ? 0.0 : s / static_cast<double>(rows.size());
}

}  // namespace pairfit
