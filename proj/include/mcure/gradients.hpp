#pragma once

#include <vector>

#include "mcure/model.hpp"
#include "mcure/types.hpp"

// Analytic gradients of log_likelihood + log_prior for each block updated by
// the Langevin sampler, plus a central finite-difference oracle used by the
// tests. All gradients treat sigma, gamma, p and the variances as fixed.

namespace mcure {

enum class BlockKind { Mu, BetaRow, LambdaRow, ThetaRow };

struct GradientBlock {
  BlockKind target = BlockKind::Mu;
  int index = 0;  // component m, group g, or neuron k
};

// d/d mu_m of the log-posterior (scalar).
double grad_mu(const Parameters& params, const LinkSpec& link,
               const SurvivalDataset& data, int m);

// d/d beta_m; feature vector is x (linear) or the shared hidden features.
std::vector<double> grad_beta(const Parameters& params, const LinkSpec& link,
                              const SurvivalDataset& data, int m);

// d/d lambda_g of the cure-link coefficients.
std::vector<double> grad_lambda(const Parameters& params, const LinkSpec& link,
                                const SurvivalDataset& data, int g);

// d/d theta_k through both the cure and weight paths; NeuralNet link only.
std::vector<double> grad_theta(const Parameters& params, const LinkSpec& link,
                               const SurvivalDataset& data, int k);

// Variants reusing precomputed per-subject caches (the sampler's hot path).
double grad_mu(const LikelihoodParts& parts, const Parameters& params,
               const SurvivalDataset& data, int m);
std::vector<double> grad_beta(const LikelihoodParts& parts, const Parameters& params,
                              const SurvivalDataset& data, int m);
std::vector<double> grad_lambda(const LikelihoodParts& parts, const Parameters& params,
                                const SurvivalDataset& data, int g);
std::vector<double> grad_theta(const LikelihoodParts& parts, const Parameters& params,
                               const SurvivalDataset& data, int k);

// Dispatch on a block descriptor.
std::vector<double> block_gradient(const Parameters& params, const LinkSpec& link,
                                   const SurvivalDataset& data, GradientBlock block);

// Central finite differences of log_likelihood + block prior term with the
// given step, scaled by max(1, |value|) per coordinate. Test oracle; kept
// independent of the analytic formulas above.
std::vector<double> finite_diff(const Parameters& params, const LinkSpec& link,
                                const SurvivalDataset& data, GradientBlock block,
                                double step);

}  // namespace mcure
