#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mcure/types.hpp"

// Synthetic data generators used for end-to-end validation: a well-specified
// scenario (covariates uniform, component log-means fixed) and a misspecified
// one driven by a bundled covariate table with subject-specific component
// log-means, plus a Kaplan-Meier estimator for qualitative checks.

namespace mcure {

enum class Scenario { WellSpecified, Misspecified };

struct SimConfig {
  Scenario scenario = Scenario::WellSpecified;
  int n = 180;              // ignored by Misspecified when 0 (uses table size)
  int n_groups = 3;
  int n_covariates = 3;     // WellSpecified only
  int n_components = 9;     // WellSpecified only
  double offset = 0.0;      // added to the susceptible probability
  double lambda_low = -2.0; // cure-coefficient law Uniform(low, high)
  double lambda_high = 0.0;
  double gamma_prob = 0.6;
  double beta_sd = 0.1;
  double censor_rate = 0.05;
  double follow_up_cap = 25.0;  // 5 by convention for Misspecified
  double cap_noise = 0.01;      // censoring times capped at cap + U(0, this)
  double cure_sentinel = 1000.0;
  std::uint64_t seed = 1;        // subject-level randomness
  std::uint64_t param_seed = 1;  // generating-parameter randomness
  // Component log-means/SDs for WellSpecified; resized/truncated to
  // n_components. Defaults come from a k-means pass over the bundled demo
  // cohort's log event times.
  std::vector<double> mu0;
  std::vector<double> sigma0;

  void validate() const;
};

// Everything needed to evaluate oracle treatment effects on generated data.
struct GroundTruth {
  int n_gen_covariates = 0;  // leading covariates entering the generator
  std::vector<std::vector<double>> lambda0;  // G x (n_gen+1)
  std::vector<std::vector<double>> beta0;    // M x (n_gen+1)
  std::vector<std::vector<std::uint8_t>> gamma0;  // M x G
  std::vector<double> mu0;     // WellSpecified component log-means
  std::vector<double> sigma0;  // component log-SDs (both scenarios)
  std::vector<std::vector<double>> xi;  // Misspecified: M x (n_gen+1)
  double offset = 0.0;
  double clamp_lo = 1e-6, clamp_hi = 1.0 - 1e-6;

  // Per-subject generation record (used by the property tests).
  std::vector<double> susceptible_prob;
  std::vector<std::uint8_t> cured;
  std::vector<double> latent_time;  // pre-censoring time, sentinel if cured
  std::vector<double> censor_time;

  // clamp(logistic(x' lambda0_g) + offset); x is a full dataset row.
  double true_susceptible_prob(std::span<const double> x, int g) const;
  double true_cure_prob(std::span<const double> x, int g) const;
  std::vector<double> true_weights(std::span<const double> x, int g) const;
  // Component log-mean: mu0[m] (well-specified) or xi_m . x (misspecified).
  double component_log_mean(std::span<const double> x, int m) const;

  double true_rmst(std::span<const double> x, int g, double h) const;
  double true_survival(std::span<const double> x, int g, double t) const;
  double true_zeta(std::span<const double> x, int g, int g_ref, double h) const;
  double true_tau(std::span<const double> x, int g, int g_ref, double h) const;
};

struct SimOutput {
  SurvivalDataset dataset;
  GroundTruth truth;
};

SimOutput generate_well_specified(const SimConfig& config);

// Misspecified generator: covariate rows come from `covariate_table` (each
// row x1..xP, no intercept); the first three covariates drive generation and
// `components` supplies {xi0.., sigma} per mixture component.
struct MisspecComponent {
  std::vector<double> xi;  // intercept + one coefficient per generating covariate
  double sigma = 1.0;
};

SimOutput generate_misspecified(const SimConfig& config,
                                const std::vector<std::vector<double>>& covariate_table,
                                const std::vector<MisspecComponent>& components);

struct KaplanMeier {
  std::vector<double> times;     // event times, ascending
  std::vector<double> survival;  // estimate just after each event time

  double final_value() const { return survival.empty() ? 1.0 : survival.back(); }
  double at(double t) const;
};

// Product-limit estimate for one treatment arm (censor flag 1 = censored).
KaplanMeier kaplan_meier(const SurvivalDataset& data, int g);

}  // namespace mcure
