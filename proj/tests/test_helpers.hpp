#pragma once

#include <cmath>
#include <vector>

#include "mcure/stats.hpp"
#include "mcure/types.hpp"

// Shared construction helpers for the unit tests.

namespace mcure::testing {

// A randomly populated but well-behaved model/data pair. Coefficients stay
// small so likelihood surfaces are smooth for the finite-difference checks.
struct RandomInstance {
  Parameters params;
  LinkSpec link;
  SurvivalDataset data;
};

inline Parameters random_parameters(Rng& rng, const LinkSpec& link, int m_total,
                                    int n_groups, int n_covariates) {
  Parameters p;
  const int feat = link.feature_dim(n_covariates);
  p.mu.resize(m_total);
  p.sigma.resize(m_total);
  for (int m = 0; m < m_total; ++m) {
    p.mu[m] = rnorm(rng, 0.5, 0.6);
    p.sigma[m] = 0.3 + 0.7 * runif(rng);
  }
  p.gamma.assign(m_total, std::vector<std::uint8_t>(n_groups, 0));
  for (int g = 0; g < n_groups; ++g) {
    bool any = false;
    for (int m = 0; m < m_total; ++m) {
      p.gamma[m][g] = runif(rng) < 0.7 ? 1 : 0;
      any = any || p.gamma[m][g];
    }
    if (!any) p.gamma[static_cast<int>(runif(rng) * m_total) % m_total][g] = 1;
  }
  p.lambda.assign(n_groups, std::vector<double>(feat));
  p.beta.assign(m_total, std::vector<double>(feat));
  for (auto& row : p.lambda)
    for (double& v : row) v = rnorm(rng, 0.0, 0.6);
  for (auto& row : p.beta)
    for (double& v : row) v = rnorm(rng, 0.0, 0.6);
  if (link.is_nn()) {
    p.theta.assign(link.width, std::vector<double>(n_covariates + 1));
    for (auto& row : p.theta)
      for (double& v : row) v = rnorm(rng, 0.0, 0.6);
  }
  p.p.assign(n_groups, 0.5);
  return p;
}

inline SurvivalDataset random_dataset(Rng& rng, int n, int n_groups,
                                      int n_covariates) {
  SurvivalDataset d;
  d.n_groups = n_groups;
  d.n_covariates = n_covariates;
  for (int i = 0; i < n; ++i) {
    d.time.push_back(0.2 + 4.0 * runif(rng));
    d.censored.push_back(runif(rng) < 0.4 ? 1 : 0);
    d.group.push_back(i % n_groups);
    std::vector<double> row(n_covariates + 1, 1.0);
    for (int p = 1; p <= n_covariates; ++p) row[p] = runif(rng);
    d.x.push_back(std::move(row));
  }
  return d;
}

inline RandomInstance random_instance(std::uint64_t seed, bool nn, int n = 12,
                                      int m_total = 3, int n_groups = 2,
                                      int n_covariates = 2, int width = 3) {
  Rng rng(seed);
  RandomInstance inst;
  inst.link = nn ? LinkSpec{LinkKind::NeuralNet, width}
                 : LinkSpec{LinkKind::Linear, 0};
  inst.params = random_parameters(rng, inst.link, m_total, n_groups, n_covariates);
  inst.data = random_dataset(rng, n, n_groups, n_covariates);
  return inst;
}

}  // namespace mcure::testing
