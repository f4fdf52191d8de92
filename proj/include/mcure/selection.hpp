#pragma once

#include <cstdint>
#include <vector>

#include "mcure/sampler.hpp"
#include "mcure/types.hpp"

// Network-width selection: fit each candidate K on a stratified training
// split and score the held-out subjects by the draw-averaged log-likelihood.

namespace mcure {

struct KSelectionReport {
  std::vector<int> candidates;
  std::vector<double> predictive;  // ll^pred per candidate; -inf on fit failure
  int chosen = 0;                  // smallest K attaining the maximum
  std::vector<int> train_index;
  std::vector<int> test_index;
  std::uint64_t seed = 0;
  double train_fraction = 0.0;
};

// Mean over draws of the test-set log-likelihood (assigned-group
// attribution, identical to the fitting likelihood).
double predictive_loglik(const PosteriorDraws& draws, const SurvivalDataset& test);

// Group-stratified split; every arm appears in both halves.
void stratified_split(const SurvivalDataset& data, double train_fraction,
                      Rng& rng, std::vector<int>& train, std::vector<int>& test);

SurvivalDataset subset_dataset(const SurvivalDataset& data,
                               const std::vector<int>& index);

struct KSelectionConfig {
  SamplerConfig sampler;
  double train_fraction = 2.0 / 3.0;
  int jobs = 1;
};

// Smallest candidate attaining the maximum predictive value.
int choose_best_k(const std::vector<int>& candidates,
                  const std::vector<double>& predictive);

// Fits one chain per candidate width (seeds derived from sampler.seed) and
// returns the report. A failed fit records -inf instead of aborting the scan.
KSelectionReport select_k(const SurvivalDataset& data,
                          const std::vector<int>& k_grid,
                          const KSelectionConfig& config);

}  // namespace mcure
