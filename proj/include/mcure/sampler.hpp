#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mcure/gradients.hpp"
#include "mcure/model.hpp"
#include "mcure/stats.hpp"
#include "mcure/types.hpp"

// MCMC for the mixture cure model: element-wise Gumbel-max Gibbs updates of
// the inclusion matrix, Langevin-proposal Metropolis-Hastings for mu, beta,
// lambda and theta rows, conjugate refreshes of p_g and the coefficient
// variances, and banded step-size adaptation during burn-in.

namespace mcure {

struct SamplerConfig {
  long long iterations = 4000;
  long long burn_in = 2000;
  int thin = 5;
  long long gamma_freeze = 1000;   // I_g entries stay 1 before this iteration
  int adapt_interval = 200;
  double accept_low = 0.45;
  double accept_high = 0.70;
  double step_shrink = 0.8;
  double step_grow = 1.25;
  double step_init = 0.05;
  std::uint64_t seed = 1;
  PriorConfig prior;
  int max_components = 9;          // cap for the per-group BIC search
  bool update_gamma = true;        // test hooks: freeze blocks entirely
  bool update_hyper = true;

  void validate() const;
};

// Per-group component counts and the fixed index sets I_g they induce.
struct InitPlan {
  std::vector<int> m_per_group;
  std::vector<std::vector<int>> index_sets;  // I_g, 0-based component ids

  int total_components() const;
  bool in_index_set(int m, int g) const;
};

struct BlockState {
  double step = 0.05;
  long long proposals = 0;
  long long accepts = 0;
  // Accumulated after burn-in only; used for acceptance diagnostics.
  long long post_proposals = 0;
  long long post_accepts = 0;
};

struct ChainState {
  Parameters params;
  InitPlan plan;
  long long iteration = 0;
  std::vector<BlockState> mu_blocks;
  std::vector<BlockState> beta_blocks;
  std::vector<BlockState> lambda_blocks;
  std::vector<BlockState> theta_blocks;

  // Likelihood cache for the current params; refreshed lazily.
  std::optional<LikelihoodParts> cache;
  double cached_loglik = 0.0;

  BlockState& block_state(GradientBlock block);
  void invalidate_cache() { cache.reset(); }
};

struct AcceptanceReport {
  std::string block;
  double rate = 0.0;  // post-burn-in acceptance rate
  double step = 0.0;
};

struct PosteriorDraws {
  LinkSpec link;
  int n_covariates = 0;
  int n_groups = 0;
  std::vector<Parameters> draws;
  std::vector<double> log_lik;
  std::vector<AcceptanceReport> acceptance;

  std::size_t size() const { return draws.size(); }
};

// BIC-selected Gaussian-mixture sizes on per-group log event times of the
// uncensored subjects; groups with fewer than two events get m_g = 1.
std::vector<int> select_m_per_group(const SurvivalDataset& data,
                                    int max_components);

// k-means initialization of (mu, sigma), block-diagonal gamma over the I_g,
// prior draws for the coefficient rows, p_g = 1/2 and unit variances.
ChainState init_state(const SurvivalDataset& data, const LinkSpec& link,
                      const std::vector<int>& m_per_group,
                      const SamplerConfig& config, Rng& rng);

// One Gumbel-max draw of gamma_{m,g} from its full conditional. A flip that
// would empty column g is skipped (gamma stays 1). Returns the new value.
bool gibbs_gamma(ChainState& state, const SurvivalDataset& data,
                 const LinkSpec& link, int m, int g, Rng& rng);

struct LmcResult {
  bool accepted = false;
  double log_ratio = 0.0;          // unclipped log acceptance ratio
  bool nonfinite_gradient = false;
  std::vector<double> proposal;    // proposed block values
};

// One Langevin Metropolis-Hastings update of a parameter block:
// proposal = value + (step/2) * grad + Normal(0, step I).
LmcResult lmc_step(ChainState& state, const SurvivalDataset& data,
                   const LinkSpec& link, GradientBlock block, Rng& rng);

// Unclipped log MALA acceptance ratio for moving the block from `from` to
// `to` under proposal variance `step`. Pure; used by the detailed-balance
// checks (antisymmetric in its endpoints by construction).
double mala_log_ratio(const Parameters& params, const LinkSpec& link,
                      const SurvivalDataset& data, GradientBlock block,
                      const std::vector<double>& from,
                      const std::vector<double>& to, double step);

// Gumbel-max draw of a two-category argmax: returns true when category 1
// (logit x1) wins against category 2 (logit x2).
bool gumbel_max_bernoulli(double x1, double x2, Rng& rng);

// Conjugate refresh of p_g and the coefficient variances.
void update_hyperparams(ChainState& state, const LinkSpec& link,
                        const SamplerConfig& config, Rng& rng);

// Multiplicative step adjustment toward the target acceptance band; resets
// the adaptation counters.
void adapt_steps(ChainState& state, const SamplerConfig& config);

// Advances an existing chain, appending thinned post-burn-in draws to `out`.
// Iteration counting starts at state.iteration.
void advance_chain(ChainState& state, const SurvivalDataset& data,
                   const LinkSpec& link, const SamplerConfig& config,
                   Rng& rng, PosteriorDraws& out);

// Full fit: component-count selection (unless m_override is nonempty),
// initialization and the complete sweep schedule. Deterministic given
// (data, link, config).
PosteriorDraws run_chain(const SurvivalDataset& data, const LinkSpec& link,
                         const SamplerConfig& config,
                         const std::vector<int>& m_override = {});

}  // namespace mcure
