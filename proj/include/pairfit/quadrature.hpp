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
#include <map>
#include <mutex>
#include <vector>

#include "pairfit/errors.hpp"

namespace pairfit {

/// Gauss-Hermite rule for weight exp(-x^2): integral f(x) e^{-x^2} dx
/// ~ sum_k w_k f(x_k). Weights are kept on the log scale; the extreme-node
/// weights underflow long before the log does.
struct GaussHermiteRule {
  std::vector<double> nodes;        // ascending
  std::vector<double> log_weights;  // log w_k
};

namespace detail {

inline GaussHermiteRule compute_gauss_hermite(int n) {
  // Golub-Welsch on the Hermite Jacobi matrix: zero diagonal, off-diagonal
  // sqrt(k/2); eigenvalues are the nodes, sqrt(pi) * v0^2 the weights.
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    double b = std::sqrt(k / 2.0);
    J(k, k - 1) = b;
    J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(J);
  if (solver.info() != Eigen::Success)
    throw error(errc::singularity, "Gauss-Hermite eigen decomposition failed");
  GaussHermiteRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.log_weights.resize(static_cast<std::size_t>(n));
  const double log_sqrt_pi = 0.5 * std::log(M_PI);
  for (int k = 0; k < n; ++k) {
    rule.nodes[static_cast<std::size_t>(k)] = solver.eigenvalues()[k];
    double v0 = solver.eigenvectors()(0, k);
    rule.log_weights[static_cast<std::size_t>(k)] = log_sqrt_pi + 2.0 * std::log(std::fabs(v0));
  }
  return rule;
}

}  // namespace detail

inline const GaussHermiteRule& gauss_hermite(int points) {
  if (points < 1) throw error(errc::config, "quadrature needs at least one point");
  static std::map<int, GaussHermiteRule> cache;
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(points);
  if (it == cache.end()) it = cache.emplace(points, detail::compute_gauss_hermite(points)).first;
  return it->second;
}

}  // namespace pairfit
