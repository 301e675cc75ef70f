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
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pairfit/glm.hpp"
#include "pairfit/glmm.hpp"
#include "pairfit/interactions.hpp"
#include "pairfit/math.hpp"
#include "pairfit/pairs.hpp"

namespace pairfit {

enum class ConditionalMode { flatten, conditional_sets };

inline const char* conditional_mode_name(ConditionalMode m) {
  return m == ConditionalMode::flatten ? "flatten" : "conditional_sets";
}

struct ReportRow {
  std::string name;
  bool is_interaction = false;
  bool estimable = true;
  std::string reason;  // zero_variance | dependence | separation | non_convergence
  double estimate = std::numeric_limits<double>::quiet_NaN();
  double std_error = std::numeric_limits<double>::quiet_NaN();
  double wald_z = std::numeric_limits<double>::quiet_NaN();
  double wald_p = std::numeric_limits<double>::quiet_NaN();
  double odds_ratio = std::numeric_limits<double>::quiet_NaN();
  bool significant_at_0_1pct = false;
};

struct FitReport {
  std::string model;  // "conditional" | "mixed"
  std::string mode;   // flatten/conditional_sets, or the grouping column
  std::vector<ReportRow> rows;
  bool converged = false;
  double log_likelihood = std::numeric_limits<double>::quiet_NaN();
  double sigma_u = std::numeric_limits<double>::quiet_NaN();  // mixed model only
  std::size_t n_observations = 0;
  std::vector<std::string> notes;

  const ReportRow& row(const std::string& name) const {
    for (const auto& r : rows)
      if (r.name == name) return r;
    throw error(errc::domain, "no report row", name);
  }
};

struct ConditionalFitOptions {
  int max_iterations = 100;
  double score_tolerance = 1e-9;
  double separation_guard = 30.0;
};

namespace detail {

/// Conditional likelihood over matched sets. Member "offsets" are covariate
/// values relative to the case (case itself contributes the zero vector), so
/// each set's conditional probability is softmax over its members with the
/// case in the numerator.
struct ConditionalSets {
  // Per set: rows into V; V holds one row per non-case member = -(z row).
  std::vector<std::vector<Eigen::Index>> sets;
  Eigen::MatrixXd V;
};

inline ConditionalSets group_conditional_sets(const PairDesign& design, ConditionalMode mode) {
  ConditionalSets out;
  out.V = -design.Z;
  if (mode == ConditionalMode::flatten) {
    out.sets.resize(static_cast<std::size_t>(design.Z.rows()));
    for (Eigen::Index i = 0; i < design.Z.rows(); ++i)
      out.sets[static_cast<std::size_t>(i)] = {i};
    return out;
  }
  std::map<std::int64_t, std::vector<Eigen::Index>> by_set;
  for (Eigen::Index i = 0; i < design.Z.rows(); ++i)
    by_set[design.set_id[static_cast<std::size_t>(i)]].push_back(i);
  out.sets.reserve(by_set.size());
  for (auto& [sid, rows] : by_set) out.sets.push_back(std::move(rows));
  return out;
}

struct ConditionalEval {
  double loglik = 0.0;
  Eigen::VectorXd score;
  Eigen::MatrixXd info;  // negative Hessian
};

inline ConditionalEval evaluate_conditional(const ConditionalSets& cs, const Eigen::VectorXd& beta,
                                            bool want_derivatives) {
  const Eigen::Index p = beta.size();
  ConditionalEval ev;
  if (want_derivatives) {
    ev.score = Eigen::VectorXd::Zero(p);
    ev.info = Eigen::MatrixXd::Zero(p, p);
  }
  Eigen::VectorXd eta = cs.V * beta;
  std::vector<double> terms;
  for (const auto& rows : cs.sets) {
    terms.assign(1, 0.0);  // the case member, v = 0
    for (Eigen::Index r : rows) terms.push_back(eta[r]);
    double lse = log_sum_exp(terms);
    ev.loglik -= lse;
    if (!want_derivatives) continue;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(p);
    Eigen::MatrixXd second = Eigen::MatrixXd::Zero(p, p);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      double w = std::exp(terms[k + 1] - lse);
      Eigen::VectorXd v = cs.V.row(rows[k]).transpose();
      mean += w * v;
      second += w * (v * v.transpose());
    }
    ev.score -= mean;
    ev.info += second - mean * mean.transpose();
  }
  return ev;
}

struct ConditionalCore {
  Eigen::VectorXd beta;
  Eigen::MatrixXd covariance;
  double loglik = 0.0;
  bool converged = false;
  std::vector<int> separated;
  int iterations = 0;
};

inline ConditionalCore newton_conditional(const ConditionalSets& cs, Eigen::Index p,
                                          const ConditionalFitOptions& opt) {
  ConditionalCore core;
  core.beta = Eigen::VectorXd::Zero(p);
  ConditionalEval ev = evaluate_conditional(cs, core.beta, true);
  double prev_ll = ev.loglik;
  for (int iter = 1; iter <= opt.max_iterations; ++iter) {
    core.iterations = iter;
    if (ev.score.cwiseAbs().maxCoeff() < opt.score_tolerance) {
      core.converged = true;
      break;
    }
    Eigen::MatrixXd info = ev.info;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
      info.diagonal().array() += 1e-10;
      ldlt.compute(info);
    }
    Eigen::VectorXd step = ldlt.solve(ev.score);
    Eigen::VectorXd beta_new = core.beta + step;
    ConditionalEval ev_new = evaluate_conditional(cs, beta_new, true);
    const double slack = 1e-10 * (std::fabs(ev.loglik) + 1.0);
    for (int h = 0; h < 30 && !(ev_new.loglik >= ev.loglik - slack); ++h) {
      beta_new = 0.5 * (core.beta + beta_new);
      ev_new = evaluate_conditional(cs, beta_new, true);
    }
    prev_ll = ev.loglik;
    core.beta = beta_new;
    ev = ev_new;

    bool plateau = std::fabs(ev.loglik - prev_ll) <= 1e-13 * (std::fabs(ev.loglik) + 1.0);
    bool runaway = core.beta.cwiseAbs().maxCoeff() > opt.separation_guard;
    if (runaway && (plateau || iter == opt.max_iterations)) {
      for (Eigen::Index j = 0; j < p; ++j)
        if (std::fabs(core.beta[j]) > opt.separation_guard)
          core.separated.push_back(static_cast<int>(j));
      break;
    }
  }
  core.loglik = ev.loglik;
  Eigen::MatrixXd info = evaluate_conditional(cs, core.beta, true).info;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    info.diagonal().array() += 1e-10;
    ldlt.compute(info);
  }
  core.covariance = ldlt.solve(Eigen::MatrixXd::Identity(p, p));
  core.covariance = 0.5 * (core.covariance + core.covariance.transpose().eval());
  return core;
}

inline void fill_row_statistics(ReportRow& row, double estimate, double std_error) {
  row.estimate = estimate;
  row.std_error = std_error;
  if (std_error > 0.0) {
    WaldResult w = wald_test(estimate, std_error);
    row.wald_z = w.z;
    row.wald_p = w.p_two_sided;
    row.significant_at_0_1pct = w.significant_at_0_1pct;
  }
  if (row.estimable) row.odds_ratio = odds_ratio(estimate);
}

}  // namespace detail

/// Conditional maximum likelihood on matched sets. flatten treats every
/// (case, control) row as its own pair — the difference-transform trick of a
/// constant-1 response on z with no intercept. conditional_sets maximizes
/// the proper 1:M set likelihood; with sets of size one the two modes run
/// the same computation. All-zero difference columns (matched-on or
/// invariant factors) and dependent columns are reported, never dropped
/// silently.
inline FitReport fit_conditional_pairs(const PairDesign& design,
                                       ConditionalMode mode = ConditionalMode::flatten,
                                       const ConditionalFitOptions& options = {}) {
  if (design.Z.rows() == 0) throw error(errc::empty_input, "no pair rows");

  FitReport report;
  report.model = "conditional";
  report.mode = conditional_mode_name(mode);
  report.n_observations = static_cast<std::size_t>(design.Z.rows());

  detail::PrunedDesign pruned = detail::prune_design(design.Z, design.columns, false);
  std::map<std::string, std::string> dropped_reason;
  for (const auto& d : pruned.dropped)
    dropped_reason[d.name] = d.reason == "collinear" ? "dependence" : "zero_variance";

  const std::size_t n_interactions = design.meta.interaction_factors.size();
  auto is_interaction = [&](const std::string& name) {
    return std::find(design.meta.interaction_factors.begin(), design.meta.interaction_factors.end(),
                     name) != design.meta.interaction_factors.end();
  };

  if (pruned.X.cols() == 0) {
    for (const auto& name : design.columns) {
      ReportRow row;
      row.name = name;
      row.is_interaction = is_interaction(name);
      row.estimable = false;
      row.reason = dropped_reason.count(name) ? dropped_reason[name] : "zero_variance";
      report.rows.push_back(std::move(row));
    }
    report.converged = true;
    report.notes.push_back("no estimable difference column; every factor is matched-on or invariant");
    return report;
  }

  PairDesign reduced;
  reduced.columns = pruned.names;
  reduced.Z = pruned.X;
  reduced.set_id = design.set_id;
  detail::ConditionalSets cs = detail::group_conditional_sets(reduced, mode);
  detail::ConditionalCore core = detail::newton_conditional(cs, pruned.X.cols(), options);

  report.converged = core.converged;
  report.log_likelihood = core.loglik;
  if (!core.separated.empty())
    report.notes.push_back("separation detected; affected factors flagged, estimates reported as-is");
  if (!core.converged && core.separated.empty())
    report.notes.push_back("Newton iterations hit the limit before meeting the score tolerance");

  std::map<std::string, Eigen::Index> fitted_index;
  for (std::size_t j = 0; j < pruned.names.size(); ++j)
    fitted_index[pruned.names[j]] = static_cast<Eigen::Index>(j);
  const bool stalled = !core.converged && core.separated.empty();

  for (const auto& name : design.columns) {
    ReportRow row;
    row.name = name;
    row.is_interaction = is_interaction(name);
    auto dit = dropped_reason.find(name);
    if (dit != dropped_reason.end()) {
      row.estimable = false;
      row.reason = dit->second;
    } else {
      Eigen::Index j = fitted_index.at(name);
      bool separated =
          std::find(core.separated.begin(), core.separated.end(), static_cast<int>(j)) !=
          core.separated.end();
      if (separated) {
        row.estimable = false;
        row.reason = "separation";
      } else if (stalled) {
        row.estimable = false;
        row.reason = "non_convergence";
      }
      // Separated/stalled rows still show the last estimate and its (huge)
      // standard error; only the odds ratio is withheld.
      detail::fill_row_statistics(row, core.beta[j], std::sqrt(core.covariance(j, j)));
    }
    report.rows.push_back(std::move(row));
  }
  (void)n_interactions;
  return report;
}

/// Random-intercept logistic fit on the stacked (not differenced) case and
/// control rows. Factors the mixed model cannot estimate — separated,
/// dependent on another column, constant — are flagged with a reason and the
/// remaining factors are refitted, so nothing disappears silently.
inline FitReport fit_paired_mixed(const StackedPairData& stacked, const MixedFitSpec& spec = {}) {
  if (stacked.data.y.size() == 0) throw error(errc::empty_input, "no stacked pair rows");

  FitReport report;
  report.model = "mixed";
  report.mode = stacked.grouping;
  report.n_observations = static_cast<std::size_t>(stacked.data.y.size());

  std::vector<std::string> active = stacked.data.names;
  std::map<std::string, std::string> flagged;
  std::optional<FittedGlmm> fit;
  MixedFitSpec working = spec;
  working.allow_single_group = true;

  for (std::size_t attempt = 0; attempt <= stacked.data.names.size(); ++attempt) {
    working.fixed.predictors = active;
    try {
      fit = fit_random_intercept_logistic(stacked.data, working);
      break;
    } catch (const error& e) {
      if (e.code() == errc::separation && !e.variable().empty() &&
          std::count(active.begin(), active.end(), e.variable())) {
        flagged[e.variable()] = "separation";
        active.erase(std::remove(active.begin(), active.end(), e.variable()), active.end());
        continue;
      }
      if (e.code() == errc::convergence) {
        for (const auto& name : active) flagged[name] = "non_convergence";
        report.notes.push_back(std::string("mixed fit did not converge: ") + e.what());
        break;
      }
      throw;
    }
  }

  auto is_interaction = [&](const std::string& name) {
    return std::count(stacked.interactions.begin(), stacked.interactions.end(), name) > 0;
  };

  if (fit) {
    report.converged = fit->converged;
    report.log_likelihood = fit->log_likelihood;
    report.sigma_u = fit->sigma_u;
    for (const auto& d : fit->dropped_columns)
      flagged.emplace(d.name, d.reason == "collinear" ? "dependence" : "zero_variance");
  }

  std::vector<std::string> wanted = {"(intercept)"};
  wanted.insert(wanted.end(), stacked.data.names.begin(), stacked.data.names.end());
  for (const auto& name : wanted) {
    ReportRow row;
    row.name = name;
    row.is_interaction = is_interaction(name);
    auto fl = flagged.find(name);
    if (fl != flagged.end()) {
      row.estimable = false;
      row.reason = fl->second;
      report.rows.push_back(std::move(row));
      continue;
    }
    if (!fit) {
      row.estimable = false;
      row.reason = "non_convergence";
      report.rows.push_back(std::move(row));
      continue;
    }
    bool found = false;
    for (std::size_t j = 0; j < fit->names.size(); ++j) {
      if (fit->names[j] == name) {
        detail::fill_row_statistics(row, fit->coefficients[static_cast<Eigen::Index>(j)],
                                    fit->std_error(static_cast<Eigen::Index>(j)));
        found = true;
        break;
      }
    }
    if (!found) {
      row.estimable = false;
      row.reason = "zero_variance";
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

struct OddsGroup {
  std::string name;
  std::vector<std::string> members;  // report row names
};

struct GroupOddsRow {
  std::string name;
  std::vector<std::string> used;     // members that entered the aggregate
  double mean_odds_ratio = std::numeric_limits<double>::quiet_NaN();
  double exp_mean_estimate = std::numeric_limits<double>::quiet_NaN();
};

struct GroupOddsSummary {
  std::vector<GroupOddsRow> groups;
  // Defined when exactly two groups aggregate: first over second.
  std::optional<double> ratio_mean_odds;
  std::optional<double> ratio_exp_mean;
  std::vector<std::string> warnings;
};

/// Per-group odds aggregates over significant (by default) report rows. Both
/// the arithmetic mean of odds ratios and exp(mean estimate) are emitted;
/// neither aggregation is privileged because the source analysis does not
/// pin one down.
inline GroupOddsSummary group_odds_summary(const FitReport& report,
                                           const std::vector<OddsGroup>& groups,
                                           bool significant_only = true) {
  GroupOddsSummary out;
  for (const auto& g : groups) {
    GroupOddsRow row;
    row.name = g.name;
    double sum_or = 0.0, sum_beta = 0.0;
    for (const auto& member : g.members) {
      const ReportRow& rr = report.row(member);  // throws if the row is unknown
      if (!rr.estimable) continue;
      if (significant_only && !rr.significant_at_0_1pct) continue;
      row.used.push_back(member);
      sum_or += rr.odds_ratio;
      sum_beta += rr.estimate;
    }
    if (row.used.empty()) {
      out.warnings.push_back("group '" + g.name + "' has no qualifying factors; skipped");
      continue;
    }
    row.mean_odds_ratio = sum_or / static_cast<double>(row.used.size());
    row.exp_mean_estimate = std::exp(sum_beta / static_cast<double>(row.used.size()));
    out.groups.push_back(std::move(row));
  }
  if (out.groups.size() == 2) {
    out.ratio_mean_odds = out.groups[0].mean_odds_ratio / out.groups[1].mean_odds_ratio;
    out.ratio_exp_mean = out.groups[0].exp_mean_estimate / out.groups[1].exp_mean_estimate;
  }
  return out;
}

}  // namespace pairfit
