#pragma once

#include <span>
#include <vector>

#include "mcure/types.hpp"

// Model core: cure probabilities, gated softmax mixture weights,
// susceptible/population survival, marginal log-likelihood and log-prior.
//
// The population survival for a subject with covariates x under group g is
//   S_g(t | x) = c_g(x) + (1 - c_g(x)) * S_{g,u}(t | x)
// with c_g the logistic cure probability and S_{g,u} a gated mixture of
// log-normal upper tails. Each subject contributes to the likelihood through
// its assigned treatment group only.

namespace mcure {

// Hidden tanh features shared by all links: [1, psi(x'theta_1), ...,
// psi(x'theta_K)]. For the linear link this is just x itself.
std::vector<double> link_features(const Parameters& params, const LinkSpec& link,
                                  std::span<const double> x);

// c_g(x) = logistic(lambda_g . features(x)), strictly inside (0,1) for finite
// coefficients.
double cure_prob(const Parameters& params, const LinkSpec& link,
                 std::span<const double> x, int g);

// Gated softmax weights pi_{m,g}(x); exact zeros where gamma_{m,g} = 0.
// Throws std::invalid_argument if column g of gamma is all zero.
std::vector<double> mixture_weights(const Parameters& params, const LinkSpec& link,
                                    std::span<const double> x, int g);

// S_{g,u}(t | x) = sum_m pi_m (1 - Phi((log t - mu_m)/sigma_m)); t > 0.
double survival_susceptible(const Parameters& params, const LinkSpec& link,
                            std::span<const double> x, int g, double t);

// S_g(t | x) per the mixture-cure decomposition; bounded below by c_g(x).
double survival_population(const Parameters& params, const LinkSpec& link,
                           std::span<const double> x, int g, double t);

// Per-subject caches used by the likelihood and all gradients. All matrices
// are row-major n x M; `features` is n x L with L the link feature length.
struct LikelihoodParts {
  int n = 0, n_components = 0, feature_len = 0;
  std::vector<double> features;        // n x L
  std::vector<double> surv_compl;      // n x M: 1 - a_{i,m}
  std::vector<double> log_dens;        // n x M: log b_{i,m}
  std::vector<double> weight;          // n x M: pi_{i,m,g_i}
  std::vector<double> cure;            // c_{g_i}(x_i)
  std::vector<double> log_one_minus_cure;
  std::vector<double> surv_mix;        // A_i = sum_m pi (1 - a)
  std::vector<double> pop_surv;        // S_i = c + (1-c) A
  std::vector<double> log_dens_mix;    // log f_u,i = log sum_m pi b

  double at(const std::vector<double>& m, int i, int j) const {
    return m[static_cast<std::size_t>(i) * n_components + j];
  }
  std::span<const double> feature_row(int i) const {
    return {features.data() + static_cast<std::size_t>(i) * feature_len,
            static_cast<std::size_t>(feature_len)};
  }
};

LikelihoodParts compute_likelihood_parts(const Parameters& params,
                                         const LinkSpec& link,
                                         const SurvivalDataset& data);

// Marginal log-likelihood. Returns -infinity when any subject's contribution
// has zero density/survival (the sampler treats that as an automatic
// rejection). Throws on NaN inputs or dimension mismatches.
double log_likelihood(const Parameters& params, const LinkSpec& link,
                      const SurvivalDataset& data);

double log_likelihood(const LikelihoodParts& parts, const SurvivalDataset& data);

// Log-likelihood restricted to the given subject indices (used by the
// element-wise gamma updates, whose conditionals only involve one group).
double log_likelihood_subset(const Parameters& params, const LinkSpec& link,
                             const SurvivalDataset& data,
                             std::span<const int> subjects);

// Joint log-prior: Normal coefficients, Bernoulli(gamma | p_g), Beta(p_g),
// Inverse-Gamma variances. Fully normalized densities.
double log_prior(const Parameters& params, const LinkSpec& link,
                 const PriorConfig& prior);

}  // namespace mcure
