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
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pairfit/math.hpp"
#include "pairfit/record.hpp"
#include "pairfit/rng.hpp"

namespace pairfit {

/// Ground-truth generator settings. Marginals default to values in the
/// neighbourhood of the observed control-column proportions, so generated
/// files look like the real schema without reproducing any confidential row.
struct GeneratorConfig {
  std::size_t n_records = 5000;
  int n_nationalities = 20;
  std::map<std::string, double> marginals;  // covariate (or gender/adult) -> P(value 1)
  std::map<std::string, double> true_beta;  // "(intercept)" plus column names
  double true_sigma_u = 0.0;
  double era_split = 0.5;     // P(after2004 = 1)
  double correlation = 0.0;   // latent equicorrelation among factor covariates
  std::uint64_t seed = 1;
  int year_min = 1998;
  int year_max = 2013;
  std::vector<std::string> schema = default_covariate_schema();

  static std::map<std::string, double> default_marginals() {
    return {{"gender", 0.5},
            {"adult", 0.9},
            {"sp_decision", 0.02},
            {"ria", 0.53},
            {"air_travel", 0.42},
            {"asylum_reason_political", 0.38},
            {"religion_stated", 0.11},
            {"ethnicity_stated", 0.30},
            {"unaccompanied_minor", 0.04},
            {"interviewed", 0.68},
            {"ever_married", 0.49},
            {"english_speaking", 0.20},
            {"free_country_of_origin", 0.42},
            {"gdp_ratio", 0.21},
            {"at_risk", 0.67},
            {"refused_leave_to_land", 0.10},
            {"returned_to_origin", 0.05},
            {"length_3years", 0.06}};
  }
};

struct SynthTruth {
  std::map<std::string, double> beta;  // includes "(intercept)"
  double sigma_u = 0.0;
  std::map<std::string, double> group_effects;  // realized u_j per nationality
};

struct SynthResult {
  Dataset data;
  SynthTruth truth;
};

namespace detail {

inline double marginal_of(const GeneratorConfig& cfg, const std::map<std::string, double>& defaults,
                          const std::string& name) {
  auto it = cfg.marginals.find(name);
  double p = it != cfg.marginals.end() ? it->second : defaults.count(name) ? defaults.at(name) : 0.5;
  if (p < 0.0 || p > 1.0) throw error(errc::config, "marginal probability outside [0,1]", name);
  return p;
}

}  // namespace detail

/// Draws a dataset with known coefficients and nationality effects:
/// covariates per configured marginals (optionally sharing a Gaussian-copula
/// factor), u_j ~ N(0, sigma_u^2), outcome ~ Bernoulli(logistic(x beta + u_j)).
/// The same seed reproduces the same bytes on any platform.
inline SynthResult generate_with_truth(const GeneratorConfig& cfg) {
  if (cfg.n_records == 0) throw error(errc::config, "n_records must be positive");
  if (cfg.n_nationalities < 1) throw error(errc::config, "need at least one nationality");
  if (cfg.era_split < 0.0 || cfg.era_split > 1.0) throw error(errc::config, "era_split outside [0,1]");
  if (cfg.correlation < 0.0 || cfg.correlation >= 1.0)
    throw error(errc::config, "correlation must lie in [0,1)");
  if (cfg.year_min > 2004 || cfg.year_max < 2005)
    throw error(errc::config, "year range must straddle 2004/2005 so both eras exist");

  const auto defaults = GeneratorConfig::default_marginals();
  auto marginal = [&](const std::string& name) { return detail::marginal_of(cfg, defaults, name); };

  for (const auto& [name, beta] : cfg.true_beta) {
    if (name == "(intercept)") continue;
    bool known = name == "gender" || name == "adult" || name == "after2004" ||
                 std::find(cfg.schema.begin(), cfg.schema.end(), name) != cfg.schema.end();
    if (!known) throw error(errc::config, "true_beta references unknown column", name);
  }

  const double p_um = marginal("unaccompanied_minor");
  const double p_adult = marginal("adult");
  // Joint law keeping both marginals exact under the minor constraint.
  if (p_um >= 1.0 - 1e-12 && p_adult > 0.0)
    throw error(errc::config, "unaccompanied_minor marginal incompatible with adult marginal");
  const double p_adult_given_not_um = std::min(1.0, p_adult / (1.0 - p_um));
  if (p_adult > 1.0 - p_um + 1e-9)
    throw error(errc::config, "adult marginal exceeds 1 - P(unaccompanied_minor)");

  Rng rng(cfg.seed);

  SynthResult out;
  out.truth.beta = cfg.true_beta;
  if (!out.truth.beta.count("(intercept)")) out.truth.beta["(intercept)"] = 0.0;
  out.truth.sigma_u = cfg.true_sigma_u;

  std::vector<std::string> labels;
  labels.reserve(static_cast<std::size_t>(cfg.n_nationalities));
  for (int g = 0; g < cfg.n_nationalities; ++g) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "N%03d", g + 1);
    labels.emplace_back(buf);
  }
  std::vector<double> group_u(labels.size(), 0.0);
  for (std::size_t g = 0; g < labels.size(); ++g) {
    group_u[g] = cfg.true_sigma_u > 0.0 ? cfg.true_sigma_u * rng.normal() : 0.0;
    out.truth.group_effects[labels[g]] = group_u[g];
  }

  // Copula thresholds for the plain factor covariates.
  std::vector<double> thresholds(cfg.schema.size(), 0.0);
  const bool correlated = cfg.correlation > 0.0;
  if (correlated) {
    for (std::size_t j = 0; j < cfg.schema.size(); ++j) {
      const std::string& name = cfg.schema[j];
      if (covariate_is_factor(name) && name != "unaccompanied_minor")
        thresholds[j] = normal_quantile(marginal(name));
    }
  }
  const double sqrt_rho = std::sqrt(cfg.correlation);
  const double sqrt_1mrho = std::sqrt(1.0 - cfg.correlation);

  Dataset data(cfg.schema, "synth(seed=" + std::to_string(cfg.seed) + ")");
  const int um_idx = data.covariate_index("unaccompanied_minor");
  const int age_idx = data.covariate_index("age_years");

  for (std::size_t i = 0; i < cfg.n_records; ++i) {
    Record r;
    r.id = static_cast<std::int64_t>(i);
    std::size_t g = rng.below(labels.size());
    r.nationality = labels[g];
    r.after2004 = rng.bernoulli(cfg.era_split) ? 1 : 0;
    r.year = static_cast<int>(r.after2004 ? rng.integer(2005, cfg.year_max)
                                          : rng.integer(cfg.year_min, 2004));
    r.gender = rng.bernoulli(marginal("gender")) ? 1 : 0;

    int um = rng.bernoulli(p_um) ? 1 : 0;
    r.adult = um == 1 ? 0 : (rng.bernoulli(p_adult_given_not_um) ? 1 : 0);

    double shared = correlated ? rng.normal() : 0.0;
    r.covariates.assign(cfg.schema.size(), 0.0);
    for (std::size_t j = 0; j < cfg.schema.size(); ++j) {
      const std::string& name = cfg.schema[j];
      if (static_cast<int>(j) == um_idx) {
        r.covariates[j] = um;
      } else if (static_cast<int>(j) == age_idx) {
        r.covariates[j] = static_cast<double>(r.adult ? rng.integer(18, 60) : rng.integer(8, 17));
      } else if (covariate_is_factor(name)) {
        if (correlated) {
          double z = sqrt_rho * shared + sqrt_1mrho * rng.normal();
          r.covariates[j] = z <= thresholds[j] ? 1.0 : 0.0;
        } else {
          r.covariates[j] = rng.bernoulli(marginal(name)) ? 1.0 : 0.0;
        }
      } else {
        r.covariates[j] = rng.uniform();  // bounded numeric without a declared law
      }
    }

    double eta = out.truth.beta.at("(intercept)") + group_u[g];
    for (const auto& [name, beta] : out.truth.beta) {
      if (name == "(intercept)") continue;
      eta += beta * data.value(r, name);
    }
    r.outcome = rng.bernoulli(logistic(eta)) ? 1 : 0;
    data.add(std::move(r));
  }
  out.data = std::move(data);
  return out;
}

inline Dataset generate_dataset(const GeneratorConfig& cfg) { return generate_with_truth(cfg).data; }

}  // namespace pairfit
