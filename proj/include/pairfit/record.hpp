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

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pairfit/errors.hpp"

namespace pairfit {

/// One protection determination. Covariate values are stored positionally,
/// aligned with the owning Dataset's schema.
struct Record {
  std::int64_t id = 0;
  int outcome = 0;  // 0 refuse, 1 grant
  std::string nationality;
  int gender = 0;  // 0 female, 1 male
  int adult = 0;
  int after2004 = 0;
  int year = 0;
  std::vector<double> covariates;
};

/// Exact-match key: records may only be paired within the same stratum.
struct StratumKey {
  std::string nationality;
  int gender = 0;
  int adult = 0;
  int after2004 = 0;

  friend bool operator==(const StratumKey&, const StratumKey&) = default;
  friend auto operator<=>(const StratumKey&, const StratumKey&) = default;
};

inline StratumKey stratum_of(const Record& r) {
  return StratumKey{r.nationality, r.gender, r.adult, r.after2004};
}

struct StratumKeyHash {
  std::size_t operator()(const StratumKey& k) const noexcept {
    std::size_t h = std::hash<std::string>{}(k.nationality);
    std::size_t bits = static_cast<std::size_t>(k.gender) | (static_cast<std::size_t>(k.adult) << 1) |
                       (static_cast<std::size_t>(k.after2004) << 2);
    return h ^ (bits * 0x9e3779b97f4a7c15ULL);
  }
};

/// Canonical covariate schema mirroring the long-form variable list; the
/// CSV loader accepts any subset/ordering given through configuration.
inline const std::vector<std::string>& default_covariate_schema() {
  static const std::vector<std::string> names = {
      "sp_decision",      "ria",
      "air_travel",       "asylum_reason_political",
      "religion_stated",  "ethnicity_stated",
      "unaccompanied_minor", "interviewed",
      "ever_married",     "english_speaking",
      "free_country_of_origin", "gdp_ratio",
      "at_risk",          "refused_leave_to_land",
      "returned_to_origin", "length_3years",
      "age_years"};
  return names;
}

/// Covariates that are 0/1 factors. age_years is the lone bounded numeric;
/// the two count-derived columns are binarised at ingestion.
inline bool covariate_is_factor(std::string_view name) { return name != "age_years"; }

/// Columns whose raw source is a count; any value > 0 maps to the indicator 1.
inline bool covariate_is_count_derived(std::string_view name) {
  return name == "refused_leave_to_land" || name == "returned_to_origin";
}

class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<std::string> schema, std::string provenance)
      : schema_(std::move(schema)), provenance_(std::move(provenance)) {
    for (std::size_t i = 0; i < schema_.size(); ++i) {
      if (!index_.emplace(schema_[i], i).second)
        throw error(errc::schema, "duplicate covariate name in schema", schema_[i]);
    }
  }

  const std::vector<std::string>& schema() const { return schema_; }
  const std::string& provenance() const { return provenance_; }
  const std::vector<Record>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  void add(Record r) {
    if (r.covariates.size() != schema_.size())
      throw error(errc::schema, "record covariate count does not match schema");
    records_.push_back(std::move(r));
  }

  int covariate_index(std::string_view name) const {
    auto it = index_.find(std::string(name));
    return it == index_.end() ? -1 : static_cast<int>(it->second);
  }

  bool has_column(std::string_view name) const {
    return covariate_index(name) >= 0 || name == "gender" || name == "adult" ||
           name == "after2004" || name == "year" || name == "outcome";
  }

  /// Numeric value of a named column for one record. Mandatory fields are
  /// addressable alongside schema covariates; nationality is not numeric.
  double value(const Record& r, std::string_view name) const {
    int idx = covariate_index(name);
    if (idx >= 0) return r.covariates[static_cast<std::size_t>(idx)];
    if (name == "gender") return r.gender;
    if (name == "adult") return r.adult;
    if (name == "after2004") return r.after2004;
    if (name == "year") return r.year;
    if (name == "outcome") return r.outcome;
    throw error(errc::schema, "unknown column", std::string(name));
  }

  const Record& by_id(std::int64_t id) const {
    build_id_index();
    auto it = id_index_.find(id);
    if (it == id_index_.end())
      throw error(errc::integrity, "no record with id " + std::to_string(id));
    return records_[it->second];
  }

 private:
  void build_id_index() const {
    if (id_index_.size() == records_.size()) return;
    id_index_.clear();
    id_index_.reserve(records_.size());
    for (std::size_t i = 0; i < records_.size(); ++i) id_index_.emplace(records_[i].id, i);
  }

  std::vector<std::string> schema_;
  std::string provenance_;
  std::vector<Record> records_;
  std::unordered_map<std::string, std::size_t> index_;
  mutable std::unordered_map<std::int64_t, std::size_t> id_index_;
};

}  // namespace pairfit
