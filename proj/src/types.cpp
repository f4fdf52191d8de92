#include "mcure/types.hpp"

#include <cmath>
#include <stdexcept>

namespace mcure {

void SurvivalDataset::validate() const {
  const std::size_t n = time.size();
  if (censored.size() != n || group.size() != n || x.size() != n)
    throw std::invalid_argument("dataset: column lengths differ");
  if (n_groups <= 0) throw std::invalid_argument("dataset: no groups");
  std::vector<int> seen(n_groups, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(time[i] > 0.0) || !std::isfinite(time[i]))
      throw std::invalid_argument("dataset: times must be positive and finite");
    if (censored[i] > 1)
      throw std::invalid_argument("dataset: censor flag must be 0 or 1");
    if (group[i] < 0 || group[i] >= n_groups)
      throw std::invalid_argument("dataset: group index out of range");
    seen[group[i]] = 1;
    if (x[i].size() != static_cast<std::size_t>(n_covariates + 1))
      throw std::invalid_argument("dataset: covariate rows have unequal length");
    if (x[i][0] != 1.0)
      throw std::invalid_argument("dataset: first covariate column must be 1");
    for (double v : x[i])
      if (!std::isfinite(v))
        throw std::invalid_argument("dataset: non-finite covariate");
  }
  for (int g = 0; g < n_groups; ++g)
    if (!seen[g]) throw std::invalid_argument("dataset: empty treatment group");
}

void PriorConfig::validate() const {
  if (!(beta_c > 0 && beta_d > 0 && ig_shape > 0 && ig_scale > 0))
    throw std::invalid_argument("prior: shape/scale parameters must be positive");
}

void Parameters::validate(const LinkSpec& link, int n_covariates) const {
  const int m_total = n_components();
  const int g_total = n_groups();
  if (m_total == 0 || g_total == 0)
    throw std::invalid_argument("parameters: empty mu or lambda");
  if (link.is_nn() && link.width < 1)
    throw std::invalid_argument("parameters: neural-net link needs width >= 1");
  const std::size_t feat = static_cast<std::size_t>(link.feature_dim(n_covariates));
  if (sigma.size() != mu.size())
    throw std::invalid_argument("parameters: sigma length != mu length");
  for (double s : sigma)
    if (!(s > 0.0)) throw std::invalid_argument("parameters: sigma must be positive");
  if (gamma.size() != mu.size())
    throw std::invalid_argument("parameters: gamma rows != components");
  for (const auto& row : gamma)
    if (row.size() != static_cast<std::size_t>(g_total))
      throw std::invalid_argument("parameters: gamma columns != groups");
  for (const auto& row : lambda)
    if (row.size() != feat)
      throw std::invalid_argument("parameters: lambda row length mismatch");
  if (beta.size() != mu.size())
    throw std::invalid_argument("parameters: beta rows != components");
  for (const auto& row : beta)
    if (row.size() != feat)
      throw std::invalid_argument("parameters: beta row length mismatch");
  if (link.is_nn()) {
    if (theta.size() != static_cast<std::size_t>(link.width))
      throw std::invalid_argument("parameters: theta rows != width");
    for (const auto& row : theta)
      if (row.size() != static_cast<std::size_t>(n_covariates + 1))
        throw std::invalid_argument("parameters: theta row length mismatch");
  }
  if (p.size() != static_cast<std::size_t>(g_total))
    throw std::invalid_argument("parameters: p length != groups");
  for (double v : p)
    if (!(v > 0.0 && v < 1.0) && !(v == 0.0 || v == 1.0))
      throw std::invalid_argument("parameters: p outside [0,1]");
  if (!(var_mu > 0 && var_lambda > 0 && var_beta > 0 && var_theta > 0))
    throw std::invalid_argument("parameters: variances must be positive");
}

}  // namespace mcure
