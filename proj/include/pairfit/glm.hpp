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
#include <optional>
#include <string>
#include <vector>

#include "pairfit/errors.hpp"
#include "pairfit/math.hpp"

namespace pairfit {

struct FitSpec {
  std::vector<std::string> predictors;  // empty = every column of the data, in order
  bool include_intercept = true;
  int max_iterations = 50;
  double score_tolerance = 1e-8;
  double ridge_fallback = 1e-10;   // only on singular weighted normal equations
  double separation_guard = 30.0;  // |beta| beyond this with a live score = separation
};

struct DroppedColumn {
  std::string name;
  std::string reason;  // "zero_variance" | "collinear"
};

struct FittedGlm {
  std::vector<std::string> names;  // kept columns, "(intercept)" first when present
  Eigen::VectorXd coefficients;
  Eigen::MatrixXd covariance;  // inverse observed information
  double deviance = 0.0;
  double log_likelihood = 0.0;
  int iterations_used = 0;
  bool converged = false;
  std::vector<DroppedColumn> dropped_columns;

  double coefficient(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return coefficients[static_cast<Eigen::Index>(i)];
    throw error(errc::domain, "no fitted coefficient", name);
  }

  double std_error(Eigen::Index i) const { return std::sqrt(covariance(i, i)); }
};

/// Numeric design plus binary response; X carries no intercept column.
struct GlmData {
  Eigen::MatrixXd X;
  std::vector<std::string> names;
  Eigen::VectorXd y;
};

struct WaldResult {
  double z = 0.0;
  double p_two_sided = 1.0;
  bool significant_at_0_1pct = false;
};

/// z = estimate/se and the two-sided normal tail probability.
inline WaldResult wald_test(double estimate, double std_error) {
  if (!(std_error > 0.0)) throw error(errc::domain, "wald_test requires a positive standard error");
  WaldResult r;
  r.z = estimate / std_error;
  r.p_two_sided = normal_two_sided_p(r.z);
  r.significant_at_0_1pct = r.p_two_sided < 0.001;
  return r;
}

inline double odds_ratio(double beta) {
  if (!std::isfinite(beta)) throw error(errc::domain, "odds_ratio requires a finite estimate");
  return std::exp(beta);
}

namespace detail {

enum class IrlsStatus { converged, separated, iteration_limit, singular };

struct IrlsResult {
  Eigen::VectorXd beta;
  Eigen::MatrixXd covariance;
  double log_likelihood = 0.0;
  int iterations = 0;
  IrlsStatus status = IrlsStatus::iteration_limit;
  std::vector<int> separated_columns;
  double score_max = 0.0;
};

inline double binary_loglik(const Eigen::VectorXd& y, const Eigen::VectorXd& eta) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) ll += bernoulli_loglik(y[i], eta[i]);
  return ll;
}

/// Newton/IRLS with step-halving on the full design (intercept included by
/// the caller). Never throws for separation; callers decide how to surface
/// the flagged columns.
inline IrlsResult irls_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                int max_iterations, double score_tolerance, double ridge,
                                double separation_guard) {
  const Eigen::Index n = X.rows(), m = X.cols();
  IrlsResult res;
  res.beta = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
  double ll = binary_loglik(y, eta);
  bool used_ridge = false;

  Eigen::VectorXd p(n), w(n);
  double prev_ll = ll;
  for (int iter = 1; iter <= max_iterations; ++iter) {
    res.iterations = iter;
    for (Eigen::Index i = 0; i < n; ++i) {
      p[i] = logistic(eta[i]);
      w[i] = p[i] * (1.0 - p[i]);
    }
    Eigen::VectorXd score = X.transpose() * (y - p);
    res.score_max = score.cwiseAbs().maxCoeff();
    if (res.score_max < score_tolerance) {
      res.status = IrlsStatus::converged;
      break;
    }

    Eigen::MatrixXd info = X.transpose() * w.asDiagonal() * X;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
      info.diagonal().array() += ridge;
      ldlt.compute(info);
      used_ridge = true;
      if (ldlt.info() != Eigen::Success) {
        res.status = IrlsStatus::singular;
        res.log_likelihood = ll;
        return res;
      }
    }
    Eigen::VectorXd step = ldlt.solve(score);

    Eigen::VectorXd beta_new = res.beta + step;
    Eigen::VectorXd eta_new = X * beta_new;
    double ll_new = binary_loglik(y, eta_new);
    // Halve only on a decrease beyond rounding noise, or the final Newton
    // steps get rejected over 1-ulp differences and the iteration stalls.
    const double slack = 1e-10 * (std::fabs(ll) + 1.0);
    for (int h = 0; h < 30 && !(ll_new >= ll - slack); ++h) {
      beta_new = 0.5 * (res.beta + beta_new);
      eta_new = X * beta_new;
      ll_new = binary_loglik(y, eta_new);
    }
    res.beta = beta_new;
    eta = eta_new;
    prev_ll = ll;
    ll = ll_new;

    // Quasi-separation stalls the score while coefficients drift outward;
    // stop once the likelihood has flattened and flag the runaway columns.
    bool plateau = std::fabs(ll - prev_ll) <= 1e-13 * (std::fabs(ll) + 1.0);
    bool runaway = res.beta.cwiseAbs().maxCoeff() > separation_guard;
    if (runaway && (plateau || iter == max_iterations)) {
      for (Eigen::Index j = 0; j < m; ++j)
        if (std::fabs(res.beta[j]) > separation_guard) res.separated_columns.push_back(static_cast<int>(j));
      res.status = IrlsStatus::separated;
      break;
    }
  }

  res.log_likelihood = ll;
  for (Eigen::Index i = 0; i < n; ++i) {
    p[i] = logistic(eta[i]);
    w[i] = p[i] * (1.0 - p[i]);
  }
  if (res.status != IrlsStatus::converged && res.status != IrlsStatus::separated) {
    res.score_max = (X.transpose() * (y - p)).cwiseAbs().maxCoeff();
    if (res.score_max < score_tolerance) res.status = IrlsStatus::converged;
  }

  Eigen::MatrixXd info = X.transpose() * w.asDiagonal() * X;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || used_ridge) {
    info.diagonal().array() += ridge;
    ldlt.compute(info);
  }
  res.covariance = ldlt.solve(Eigen::MatrixXd::Identity(m, m));
  res.covariance = 0.5 * (res.covariance + res.covariance.transpose().eval());
  return res;
}

struct PrunedDesign {
  Eigen::MatrixXd X;  // intercept first when requested
  std::vector<std::string> names;
  std::vector<DroppedColumn> dropped;
};

/// Drops constant columns, then collinear ones. Dependence is resolved in
/// column order (intercept first), so an interaction that duplicates its
/// original factor is the one reported, never the original.
inline PrunedDesign prune_design(const Eigen::MatrixXd& X, const std::vector<std::string>& names,
                                 bool intercept) {
  PrunedDesign out;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    bool constant = true;
    for (Eigen::Index i = 1; i < X.rows() && constant; ++i)
      constant = X(i, j) == X(0, j);
    if (constant && intercept)
      out.dropped.push_back({names[static_cast<std::size_t>(j)], "zero_variance"});
    else if (constant && X.col(j).cwiseAbs().maxCoeff() == 0.0)
      out.dropped.push_back({names[static_cast<std::size_t>(j)], "zero_variance"});
    else
      keep.push_back(j);
  }

  Eigen::MatrixXd base(X.rows(), static_cast<Eigen::Index>(keep.size()) + (intercept ? 1 : 0));
  std::vector<std::string> base_names;
  Eigen::Index col = 0;
  if (intercept) {
    base.col(col++).setOnes();
    base_names.emplace_back("(intercept)");
  }
  for (Eigen::Index j : keep) {
    base.col(col++) = X.col(j);
    base_names.push_back(names[static_cast<std::size_t>(j)]);
  }

  // Greedy left-to-right basis build; a column whose residual against the
  // kept basis is negligible is collinear.
  std::vector<Eigen::VectorXd> basis;  // orthonormal
  Eigen::MatrixXd kept(base.rows(), base.cols());
  std::vector<std::string> kept_names;
  Eigen::Index kept_cols = 0;
  const double tol = 1e-8;
  for (Eigen::Index j = 0; j < base.cols(); ++j) {
    Eigen::VectorXd v = base.col(j);
    const double norm0 = v.norm();
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : basis) v -= q.dot(v) * q;
    if (v.norm() <= tol * std::max(norm0, 1.0)) {
      out.dropped.push_back({base_names[static_cast<std::size_t>(j)], "collinear"});
      continue;
    }
    basis.push_back(v / v.norm());
    kept.col(kept_cols++) = base.col(j);
    kept_names.push_back(base_names[static_cast<std::size_t>(j)]);
  }
  out.X = kept.leftCols(kept_cols);
  out.names = std::move(kept_names);
  return out;
}

inline Eigen::MatrixXd select_columns(const GlmData& data, const std::vector<std::string>& predictors,
                                      std::vector<std::string>& names_out) {
  // An empty predictor list is an intercept-only request, not "all columns".
  Eigen::MatrixXd X(data.X.rows(), static_cast<Eigen::Index>(predictors.size()));
  names_out.clear();
  for (std::size_t k = 0; k < predictors.size(); ++k) {
    auto it = std::find(data.names.begin(), data.names.end(), predictors[k]);
    if (it == data.names.end()) throw error(errc::schema, "unknown predictor", predictors[k]);
    X.col(static_cast<Eigen::Index>(k)) = data.X.col(it - data.names.begin());
    names_out.push_back(predictors[k]);
  }
  return X;
}

}  // namespace detail

/// Maximum-likelihood binary logistic regression. Throws typed errors for
/// separation, singularity and non-convergence; collinear and constant
/// predictors are dropped up front and reported by name.
inline FittedGlm fit_logistic(const GlmData& data, const FitSpec& spec = {}) {
  for (Eigen::Index i = 0; i < data.y.size(); ++i)
    if (data.y[i] != 0.0 && data.y[i] != 1.0)
      throw error(errc::domain, "response must be 0/1");
  if (data.y.size() == 0) throw error(errc::empty_input, "no observations");
  if (spec.predictors.empty() && !spec.include_intercept)
    throw error(errc::config, "no predictors and no intercept");

  std::vector<std::string> names;
  Eigen::MatrixXd X = detail::select_columns(data, spec.predictors, names);
  detail::PrunedDesign design = detail::prune_design(X, names, spec.include_intercept);
  if (design.X.cols() == 0) throw error(errc::config, "empty design after pruning");

  detail::IrlsResult res =
      detail::irls_logistic(design.X, data.y, spec.max_iterations, spec.score_tolerance,
                            spec.ridge_fallback, spec.separation_guard);

  if (res.status == detail::IrlsStatus::singular)
    throw error(errc::singularity, "weighted normal equations singular beyond ridge fallback");
  if (res.status == detail::IrlsStatus::separated) {
    const std::string& name = design.names[static_cast<std::size_t>(res.separated_columns.front())];
    throw error(errc::separation,
                "complete or quasi-complete separation (|beta| exceeded guard)", name);
  }
  if (res.status == detail::IrlsStatus::iteration_limit) {
    error e(errc::convergence, "IRLS did not converge in " + std::to_string(res.iterations) +
                                   " iterations (max |score| = " + std::to_string(res.score_max) + ")");
    e.set_last_iterate(std::vector<double>(res.beta.data(), res.beta.data() + res.beta.size()));
    throw e;
  }

  FittedGlm fit;
  fit.names = std::move(design.names);
  fit.coefficients = std::move(res.beta);
  fit.covariance = std::move(res.covariance);
  fit.log_likelihood = res.log_likelihood;
  fit.deviance = -2.0 * res.log_likelihood;  // saturated term vanishes for 0/1 responses
  fit.iterations_used = res.iterations;
  fit.converged = true;
  fit.dropped_columns = std::move(design.dropped);
  return fit;
}

}  // namespace pairfit
