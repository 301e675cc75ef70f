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
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "pairfit/glm.hpp"
#include "pairfit/math.hpp"
#include "pairfit/parallel.hpp"
#include "pairfit/quadrature.hpp"

namespace pairfit {

struct MixedFitSpec {
  FitSpec fixed;
  std::string grouping = "nationality";
  int quadrature_points = 25;  // odd recommended so the central node exists
  double outer_tolerance = 1e-7;
  int outer_max_iterations = 200;
  bool adaptive = true;  // non-adaptive mode kept for cross-checking
  bool allow_single_group = false;
  double sigma_lower = 1e-4;  // optimizer box; the zero boundary is a profiled comparison
  double sigma_upper = 50.0;
};

struct FittedGlmm {
  std::vector<std::string> names;
  Eigen::VectorXd coefficients;
  double sigma_u = 0.0;
  Eigen::MatrixXd coefficient_covariance;
  double log_likelihood = 0.0;  // marginal
  std::map<std::string, double> predicted_effects;  // posterior-mode intercept per group
  bool converged = false;
  bool boundary = false;  // sigma_u pinned at 0 by the boundary comparison
  int outer_iterations = 0;
  std::vector<DroppedColumn> dropped_columns;

  double coefficient(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return coefficients[static_cast<Eigen::Index>(i)];
    throw error(errc::domain, "no fitted coefficient", name);
  }
  double std_error(Eigen::Index i) const { return std::sqrt(coefficient_covariance(i, i)); }
};

/// Design + response + one categorical grouping column, intercept excluded
/// from X (added per FitSpec).
struct GroupedGlmData {
  Eigen::MatrixXd X;
  std::vector<std::string> names;
  Eigen::VectorXd y;
  std::vector<int> group;                // per row, dense 0..G-1
  std::vector<std::string> group_labels; // index -> label
};

namespace detail {

struct GroupSlice {
  Eigen::MatrixXd X;  // rows of one group, pruned design incl. intercept
  Eigen::VectorXd y;
};

struct GroupEval {
  double loglik = 0.0;
  double mode = 0.0;         // posterior mode of u
  double e_u2 = 0.0;         // posterior E[u^2]
  Eigen::VectorXd score_beta;  // posterior E[X^T (y - p(u))]
};

/// Posterior mode of h(u) = loglik(eta0 + u) + log N(u; 0, sigma^2).
/// h is strictly concave, Newton with step clipping is enough.
inline double posterior_mode(const Eigen::VectorXd& eta0, const Eigen::VectorXd& y, double sigma,
                             double start, double* curvature_out) {
  double u = start;
  const double inv_var = 1.0 / (sigma * sigma);
  double h2 = -inv_var;
  for (int iter = 0; iter < 100; ++iter) {
    double g = -u * inv_var;
    h2 = -inv_var;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      double p = logistic(eta0[i] + u);
      g += y[i] - p;
      h2 -= p * (1.0 - p);
    }
    double step = g / (-h2);
    step = std::clamp(step, -10.0, 10.0);
    u += step;
    if (std::fabs(step) < 1e-12) break;
  }
  if (curvature_out) *curvature_out = h2;
  return u;
}

/// Adaptive (or plain) Gauss-Hermite evaluation of one group's marginal
/// log-likelihood and the posterior expectations needed for the gradient.
inline GroupEval evaluate_group(const GroupSlice& slice, const Eigen::VectorXd& beta, double sigma,
                                const GaussHermiteRule& rule, bool adaptive, bool want_score,
                                double mode_start = 0.0) {
  const Eigen::Index n = slice.y.size();
  const Eigen::Index m = slice.X.cols();
  GroupEval out;
  Eigen::VectorXd eta0 = slice.X * beta;

  if (sigma <= 0.0) {
    // Point mass at u = 0: exact conditional log-likelihood.
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) ll += bernoulli_loglik(slice.y[i], eta0[i]);
    out.loglik = ll;
    if (want_score) {
      out.score_beta = Eigen::VectorXd::Zero(m);
      for (Eigen::Index i = 0; i < n; ++i)
        out.score_beta += (slice.y[i] - logistic(eta0[i])) * slice.X.row(i).transpose();
    }
    return out;
  }

  const double log_prior_norm = -std::log(sigma) - 0.5 * std::log(2.0 * M_PI);
  const double inv_var = 1.0 / (sigma * sigma);
  auto h_at = [&](double u) {
    double v = log_prior_norm - 0.5 * u * u * inv_var;
    for (Eigen::Index i = 0; i < n; ++i) v += bernoulli_loglik(slice.y[i], eta0[i] + u);
    return v;
  };

  const std::size_t q = rule.nodes.size();
  std::vector<double> terms(q), node_u(q);
  if (adaptive) {
    double curvature = 0.0;
    double mode = posterior_mode(eta0, slice.y, sigma, mode_start, &curvature);
    double tau = 1.0 / std::sqrt(-curvature);
    out.mode = mode;
    const double sqrt2_tau = std::sqrt(2.0) * tau;
    for (std::size_t k = 0; k < q; ++k) {
      double t = rule.nodes[k];
      node_u[k] = mode + sqrt2_tau * t;
      terms[k] = rule.log_weights[k] + t * t + h_at(node_u[k]);
    }
    out.loglik = std::log(sqrt2_tau) + log_sum_exp(terms);
  } else {
    const double sqrt2_sigma = std::sqrt(2.0) * sigma;
    const double log_norm = -0.5 * std::log(M_PI);
    for (std::size_t k = 0; k < q; ++k) {
      node_u[k] = sqrt2_sigma * rule.nodes[k];
      double ll = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) ll += bernoulli_loglik(slice.y[i], eta0[i] + node_u[k]);
      terms[k] = rule.log_weights[k] + log_norm + ll;
    }
    out.loglik = log_sum_exp(terms);
    // posterior mode still useful to report; cheap
    out.mode = posterior_mode(eta0, slice.y, sigma, mode_start, nullptr);
  }

  if (want_score) {
    double lse = log_sum_exp(terms);
    out.score_beta = Eigen::VectorXd::Zero(m);
    out.e_u2 = 0.0;
    for (std::size_t k = 0; k < q; ++k) {
      double w = std::exp(terms[k] - lse);
      if (w <= 0.0) continue;
      double u = node_u[k];
      out.e_u2 += w * u * u;
      Eigen::VectorXd resid(n);
      for (Eigen::Index i = 0; i < n; ++i) resid[i] = slice.y[i] - logistic(eta0[i] + u);
      out.score_beta += w * (slice.X.transpose() * resid);
    }
  }
  return out;
}

struct MarginalEval {
  double loglik = 0.0;
  Eigen::VectorXd grad;        // d loglik / d (beta, log sigma)
  std::vector<double> modes;   // per group
};

/// Sum of group marginal log-likelihoods and its gradient. Groups evaluate
/// independently (parallel); the reduction runs in fixed group order so the
/// result is bitwise reproducible for any thread count.
inline MarginalEval evaluate_marginal(const std::vector<GroupSlice>& slices,
                                      const Eigen::VectorXd& beta, double sigma,
                                      const GaussHermiteRule& rule, bool adaptive, bool want_grad,
                                      const std::vector<double>* warm_modes = nullptr) {
  const std::size_t g = slices.size();
  const Eigen::Index m = beta.size();
  std::vector<GroupEval> evals(g);
  parallel_for(g, [&](std::size_t j) {
    double start = warm_modes && warm_modes->size() == g ? (*warm_modes)[j] : 0.0;
    evals[j] = evaluate_group(slices[j], beta, sigma, rule, adaptive, want_grad, start);
  });
  MarginalEval out;
  out.modes.resize(g);
  if (want_grad) out.grad = Eigen::VectorXd::Zero(m + 1);
  for (std::size_t j = 0; j < g; ++j) {
    out.loglik += evals[j].loglik;
    out.modes[j] = evals[j].mode;
    if (want_grad) {
      out.grad.head(m) += evals[j].score_beta;
      // d/d log sigma of log N(u;0,sigma^2) integrated: E[u^2]/sigma^2 - 1
      out.grad[m] += evals[j].e_u2 / (sigma * sigma) - 1.0;
    }
  }
  return out;
}

inline std::vector<GroupSlice> slice_groups(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                            const std::vector<int>& group, int n_groups) {
  std::vector<std::vector<Eigen::Index>> rows(static_cast<std::size_t>(n_groups));
  for (Eigen::Index i = 0; i < y.size(); ++i)
    rows[static_cast<std::size_t>(group[static_cast<std::size_t>(i)])].push_back(i);
  std::vector<GroupSlice> slices(static_cast<std::size_t>(n_groups));
  for (std::size_t j = 0; j < slices.size(); ++j) {
    const auto& idx = rows[j];
    slices[j].X.resize(static_cast<Eigen::Index>(idx.size()), X.cols());
    slices[j].y.resize(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      slices[j].X.row(static_cast<Eigen::Index>(k)) = X.row(idx[k]);
      slices[j].y[static_cast<Eigen::Index>(k)] = y[idx[k]];
    }
  }
  return slices;
}

}  // namespace detail

/// Marginal log-likelihood of a single group's data under a random-intercept
/// logistic model, by adaptive Gauss-Hermite quadrature. Exact conditional
/// log-likelihood when sigma_u = 0.
inline double group_marginal_loglik(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                    const Eigen::VectorXd& beta, double sigma_u, int points,
                                    bool adaptive = true) {
  if (sigma_u < 0.0) throw error(errc::domain, "sigma_u must be nonnegative");
  if (X.rows() != y.size() || X.cols() != beta.size())
    throw error(errc::domain, "design/response/coefficient dimensions disagree");
  detail::GroupSlice slice{X, y};
  return detail::evaluate_group(slice, beta, sigma_u, gauss_hermite(points), adaptive, false).loglik;
}

/// Binary logistic regression with one Gaussian random intercept, fitted by
/// maximizing the quadrature-approximated marginal likelihood over
/// (beta, log sigma) with BFGS. The sigma_u = 0 boundary is handled by a
/// profiled comparison against the plain logistic fit.
inline FittedGlmm fit_random_intercept_logistic(const GroupedGlmData& data,
                                                const MixedFitSpec& spec = {}) {
  const Eigen::Index n = data.y.size();
  if (n == 0) throw error(errc::empty_input, "no observations");
  if (data.group.size() != static_cast<std::size_t>(n))
    throw error(errc::domain, "grouping vector length mismatch");
  for (Eigen::Index i = 0; i < n; ++i)
    if (data.y[i] != 0.0 && data.y[i] != 1.0) throw error(errc::domain, "response must be 0/1");
  int n_groups = static_cast<int>(data.group_labels.size());
  if (n_groups < 2 && !spec.allow_single_group)
    throw error(errc::config, "need at least 2 groups (or allow_single_group)");
  if (spec.quadrature_points < 1) throw error(errc::config, "quadrature_points must be >= 1");

  // Shared pruned design; the plain-logistic warm start uses the same columns.
  std::vector<std::string> names;
  Eigen::MatrixXd Xsel = detail::select_columns({data.X, data.names, data.y}, spec.fixed.predictors, names);
  detail::PrunedDesign design = detail::prune_design(Xsel, names, spec.fixed.include_intercept);
  if (design.X.cols() == 0) throw error(errc::config, "empty design after pruning");
  const Eigen::Index m = design.X.cols();

  detail::IrlsResult glm = detail::irls_logistic(design.X, data.y, spec.fixed.max_iterations,
                                                 spec.fixed.score_tolerance, spec.fixed.ridge_fallback,
                                                 spec.fixed.separation_guard);
  if (glm.status == detail::IrlsStatus::separated)
    throw error(errc::separation, "separation in the fixed part",
                design.names[static_cast<std::size_t>(glm.separated_columns.front())]);
  if (glm.status == detail::IrlsStatus::singular)
    throw error(errc::singularity, "singular fixed-part normal equations");

  auto slices = detail::slice_groups(design.X, data.y, data.group, n_groups);
  const GaussHermiteRule& rule = gauss_hermite(spec.quadrature_points);

  const double zeta_lo = std::log(spec.sigma_lower), zeta_hi = std::log(spec.sigma_upper);
  std::vector<double> warm_modes;

  auto eval_f = [&](const Eigen::VectorXd& theta, bool want_grad) {
    return detail::evaluate_marginal(slices, theta.head(m), std::exp(theta[m]), rule, spec.adaptive,
                                     want_grad, &warm_modes);
  };

  // Start at the fixed-effect solution; pick the best coarse sigma.
  Eigen::VectorXd theta(m + 1);
  theta.head(m) = glm.beta;
  {
    double best_zeta = std::log(0.5), best_ll = -std::numeric_limits<double>::infinity();
    for (double s : {0.05, 0.2, 0.5, 1.0, 2.0}) {
      Eigen::VectorXd t = theta;
      t[m] = std::log(s);
      double ll = eval_f(t, false).loglik;
      if (ll > best_ll) {
        best_ll = ll;
        best_zeta = std::log(s);
      }
    }
    theta[m] = best_zeta;
  }

  detail::MarginalEval cur = eval_f(theta, true);
  warm_modes = cur.modes;
  Eigen::MatrixXd Hinv = Eigen::MatrixXd::Identity(m + 1, m + 1);
  bool converged = false;
  int iterations = 0;

  for (int iter = 1; iter <= spec.outer_max_iterations; ++iter) {
    iterations = iter;
    Eigen::VectorXd g = -cur.grad;  // minimizing -loglik
    if (g.cwiseAbs().maxCoeff() < 1e-6) {
      converged = true;
      break;
    }
    Eigen::VectorXd dir = -(Hinv * g);
    if (g.dot(dir) >= 0.0) {
      Hinv.setIdentity();
      dir = -g;
    }
    double step = 1.0;
    const double slope = g.dot(dir);
    detail::MarginalEval next;
    Eigen::VectorXd theta_new;
    bool accepted = false;
    for (int h = 0; h < 40; ++h) {
      theta_new = theta + step * dir;
      if (theta_new[m] < zeta_lo || theta_new[m] > zeta_hi ||
          theta_new.head(m).cwiseAbs().maxCoeff() > spec.fixed.separation_guard * 2) {
        step *= 0.5;
        continue;
      }
      next = eval_f(theta_new, true);
      if (-next.loglik <= -cur.loglik + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      converged = g.cwiseAbs().maxCoeff() < 1e-3;
      break;
    }

    Eigen::VectorXd s = theta_new - theta;
    Eigen::VectorXd yv = (-next.grad) - g;
    double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      // Sherman-Morrison BFGS inverse update
      Eigen::VectorXd Hy = Hinv * yv;
      double yHy = yv.dot(Hy);
      Hinv += ((sy + yHy) / (sy * sy)) * (s * s.transpose()) -
              (Hy * s.transpose() + s * Hy.transpose()) / sy;
    }
    double improvement = next.loglik - cur.loglik;
    theta = theta_new;
    cur = next;
    warm_modes = cur.modes;
    if (std::fabs(improvement) <= spec.outer_tolerance * (1.0 + std::fabs(cur.loglik)) &&
        cur.grad.cwiseAbs().maxCoeff() < 1e-3) {
      converged = true;
      break;
    }
  }

  for (Eigen::Index j = 0; j < m; ++j)
    if (std::fabs(theta[j]) > spec.fixed.separation_guard)
      throw error(errc::separation, "separation in the fixed part during mixed fit",
                  design.names[static_cast<std::size_t>(j)]);

  FittedGlmm fit;
  fit.names = design.names;
  fit.dropped_columns = design.dropped;
  fit.outer_iterations = iterations;

  // Boundary comparison: the plain logistic fit is the sigma_u = 0 candidate.
  if (glm.log_likelihood + 1e-9 >= cur.loglik) {
    fit.coefficients = glm.beta;
    fit.sigma_u = 0.0;
    fit.coefficient_covariance = glm.covariance;
    fit.log_likelihood = glm.log_likelihood;
    fit.converged = glm.status == detail::IrlsStatus::converged;
    fit.boundary = true;
    for (const auto& label : data.group_labels) fit.predicted_effects[label] = 0.0;
    if (!fit.converged)
      throw error(errc::convergence, "fixed-effect boundary fit did not converge");
    return fit;
  }

  if (!converged) {
    error e(errc::convergence,
            "mixed-model optimization did not converge in " + std::to_string(iterations) +
                " iterations (max |grad| = " + std::to_string(cur.grad.cwiseAbs().maxCoeff()) + ")");
    e.set_last_iterate(std::vector<double>(theta.data(), theta.data() + theta.size()));
    throw e;
  }

  fit.coefficients = theta.head(m);
  fit.sigma_u = std::exp(theta[m]);
  fit.log_likelihood = cur.loglik;
  fit.converged = true;
  fit.outer_iterations = iterations;
  for (std::size_t j = 0; j < slices.size(); ++j)
    fit.predicted_effects[data.group_labels[j]] = cur.modes[j];

  // Observed information by central differences of the analytic gradient.
  Eigen::MatrixXd H(m + 1, m + 1);
  for (Eigen::Index j = 0; j <= m; ++j) {
    double h = 1e-5 * (1.0 + std::fabs(theta[j]));
    Eigen::VectorXd tp = theta, tm_ = theta;
    tp[j] += h;
    tm_[j] -= h;
    Eigen::VectorXd gp = -eval_f(tp, true).grad;
    Eigen::VectorXd gm = -eval_f(tm_, true).grad;
    H.col(j) = (gp - gm) / (2.0 * h);
  }
  H = 0.5 * (H + H.transpose().eval());
  Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
  Eigen::MatrixXd Hinv_full;
  if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
    Hinv_full = ldlt.solve(Eigen::MatrixXd::Identity(m + 1, m + 1));
  } else {
    H.diagonal().array() += 1e-8;
    Hinv_full = H.ldlt().solve(Eigen::MatrixXd::Identity(m + 1, m + 1));
  }
  fit.coefficient_covariance = Hinv_full.topLeftCorner(m, m);
  fit.coefficient_covariance =
      0.5 * (fit.coefficient_covariance + fit.coefficient_covariance.transpose().eval());
  return fit;
}

}  // namespace pairfit
