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
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "pairfit/csv.hpp"
#include "pairfit/record.hpp"

namespace pairfit {

struct LoadOptions {
  int year_min = 1998;
  int year_max = 2013;
  std::size_t max_reported_errors = 20;
};

namespace detail {

inline const std::vector<std::string>& mandatory_columns() {
  static const std::vector<std::string> cols = {"id",    "outcome",   "nationality", "gender",
                                                "adult", "after2004", "year"};
  return cols;
}

inline int parse_binary(std::string_view s, std::size_t line_no, const std::string& column) {
  double v = parse_double(s, line_no);
  if (v != 0.0 && v != 1.0)
    throw error(errc::validation, "value '" + std::string(s) + "' in column '" + column +
                                      "' is not 0/1 on line " + std::to_string(line_no));
  return static_cast<int>(v);
}

}  // namespace detail

/// Parses and validates a dataset CSV. The header is matched by name, order
/// free; it must cover exactly the mandatory columns plus schema_config. All
/// row-level problems are collected and reported together with line numbers.
inline Dataset load_dataset(const std::string& path,
                            const std::vector<std::string>& schema_config = default_covariate_schema(),
                            const LoadOptions& options = {}) {
  CsvTable table = read_csv(path);

  std::unordered_map<std::string, std::size_t> col_pos;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (!col_pos.emplace(table.header[i], i).second)
      throw error(errc::schema, "duplicate column '" + table.header[i] + "' in " + path);
  }
  std::vector<std::string> expected = detail::mandatory_columns();
  expected.insert(expected.end(), schema_config.begin(), schema_config.end());
  for (const auto& name : expected) {
    if (!col_pos.count(name)) throw error(errc::schema, "missing column '" + name + "' in " + path);
  }
  if (col_pos.size() != expected.size()) {
    for (const auto& [name, pos] : col_pos) {
      if (std::find(expected.begin(), expected.end(), name) == expected.end())
        throw error(errc::schema, "unexpected column '" + name + "' in " + path);
    }
  }

  Dataset data(schema_config, path);
  std::vector<std::string> problems;
  std::unordered_set<std::int64_t> seen_ids;
  auto complain = [&](std::size_t line_no, const std::string& what) {
    if (problems.size() < options.max_reported_errors)
      problems.push_back("line " + std::to_string(line_no) + ": " + what);
    else if (problems.size() == options.max_reported_errors)
      problems.push_back("...");
  };

  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t line_no = table.line_numbers[r];
    if (row.size() != table.header.size()) {
      complain(line_no, "expected " + std::to_string(table.header.size()) + " fields, got " +
                            std::to_string(row.size()));
      continue;
    }
    auto field = [&](const std::string& name) -> const std::string& {
      return row[col_pos.at(name)];
    };
    try {
      Record rec;
      long id = parse_long(field("id"), line_no);
      if (id < 0) throw error(errc::validation, "negative id on line " + std::to_string(line_no));
      rec.id = id;
      if (!seen_ids.insert(rec.id).second)
        throw error(errc::validation,
                    "duplicate id " + std::to_string(rec.id) + " on line " + std::to_string(line_no));
      rec.outcome = detail::parse_binary(field("outcome"), line_no, "outcome");
      rec.nationality = field("nationality");
      if (rec.nationality.empty())
        throw error(errc::validation, "empty nationality on line " + std::to_string(line_no));
      rec.gender = detail::parse_binary(field("gender"), line_no, "gender");
      rec.adult = detail::parse_binary(field("adult"), line_no, "adult");
      rec.after2004 = detail::parse_binary(field("after2004"), line_no, "after2004");
      rec.year = static_cast<int>(parse_long(field("year"), line_no));
      if (rec.year < options.year_min || rec.year > options.year_max)
        throw error(errc::validation, "year " + std::to_string(rec.year) + " outside [" +
                                          std::to_string(options.year_min) + ", " +
                                          std::to_string(options.year_max) + "] on line " +
                                          std::to_string(line_no));

      rec.covariates.reserve(schema_config.size());
      for (const auto& name : schema_config) {
        const std::string& cell = field(name);
        if (cell.empty())
          throw error(errc::validation,
                      "missing value for '" + name + "' on line " + std::to_string(line_no));
        double v;
        if (covariate_is_count_derived(name)) {
          v = parse_double(cell, line_no);
          if (v < 0.0)
            throw error(errc::validation,
                        "negative count in '" + name + "' on line " + std::to_string(line_no));
          v = v > 0.0 ? 1.0 : 0.0;  // count-to-indicator interpretation
        } else if (covariate_is_factor(name)) {
          v = detail::parse_binary(cell, line_no, name);
        } else {
          v = parse_double(cell, line_no);
          if (name == "age_years" && (v < 0.0 || v > 120.0))
            throw error(errc::validation,
                        "age_years out of range on line " + std::to_string(line_no));
        }
        rec.covariates.push_back(v);
      }

      int um_idx = data.covariate_index("unaccompanied_minor");
      if (um_idx >= 0 && rec.covariates[static_cast<std::size_t>(um_idx)] == 1.0 && rec.adult == 1)
        throw error(errc::validation, "unaccompanied_minor=1 with adult=1 (id " +
                                          std::to_string(rec.id) + ") on line " +
                                          std::to_string(line_no));

      data.add(std::move(rec));
    } catch (const error& e) {
      complain(line_no, e.what());
    }
  }

  if (!problems.empty()) {
    std::string msg = std::to_string(problems.size() > options.max_reported_errors
                                         ? table.rows.size() - data.size()
                                         : problems.size()) +
                      " rejected row(s) in " + path + ":";
    for (const auto& p : problems) msg += "\n  " + p;
    throw error(errc::validation, msg);
  }
  return data;
}

inline void write_dataset(const Dataset& data, const std::string& path,
                          const std::string& comment = "") {
  CsvWriter out(path);
  if (!comment.empty()) out.comment(comment);
  std::vector<std::string> header = detail::mandatory_columns();
  header.insert(header.end(), data.schema().begin(), data.schema().end());
  out.row(header);
  for (const auto& r : data.records()) {
    std::vector<std::string> row = {std::to_string(r.id),
                                    std::to_string(r.outcome),
                                    r.nationality,
                                    std::to_string(r.gender),
                                    std::to_string(r.adult),
                                    std::to_string(r.after2004),
                                    std::to_string(r.year)};
    for (double v : r.covariates) row.push_back(format_double(v));
    out.row(row);
  }
}

}  // namespace pairfit
