#include "mcure/gradients.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "mcure/stats.hpp"

namespace mcure {

namespace {

void check_component(const Parameters& params, int m) {
  if (m < 0 || m >= params.n_components())
    throw std::invalid_argument("component index out of range");
}

// Adds s * v to out.
void axpy(double s, std::span<const double> v, std::vector<double>& out) {
  for (std::size_t j = 0; j < v.size(); ++j) out[j] += s * v[j];
}

}  // namespace

double grad_mu(const LikelihoodParts& parts, const Parameters& params,
               const SurvivalDataset& data, int m) {
  check_component(params, m);
  const double sig = params.sigma[m];
  double g = 0.0;
  for (int i = 0; i < parts.n; ++i) {
    const double w = parts.at(parts.weight, i, m);
    if (w == 0.0) continue;
    const double logt = std::log(data.time[i]);
    if (data.censored[i]) {
      const double z = (logt - params.mu[m]) / sig;
      const double r = 1.0 - parts.cure[i];
      if (parts.pop_surv[i] > 0.0)
        g += w * r * normal_pdf(z) / (sig * parts.pop_surv[i]);
    } else {
      const double dens_ratio =
          std::exp(parts.at(parts.log_dens, i, m) - parts.log_dens_mix[i]);
      g += w * dens_ratio * (logt - params.mu[m]) / (sig * sig);
    }
  }
  return g - params.mu[m] / params.var_mu;
}

std::vector<double> grad_beta(const LikelihoodParts& parts, const Parameters& params,
                              const SurvivalDataset& data, int m) {
  check_component(params, m);
  std::vector<double> g(parts.feature_len, 0.0);
  for (int i = 0; i < parts.n; ++i) {
    const double w = parts.at(parts.weight, i, m);
    if (w == 0.0) continue;
    double scale;
    if (data.censored[i]) {
      if (parts.pop_surv[i] <= 0.0) continue;
      const double r = 1.0 - parts.cure[i];
      scale = w * r * (parts.at(parts.surv_compl, i, m) - parts.surv_mix[i]) /
              parts.pop_surv[i];
    } else {
      const double dens_ratio =
          std::exp(parts.at(parts.log_dens, i, m) - parts.log_dens_mix[i]);
      scale = w * (dens_ratio - 1.0);
    }
    axpy(scale, parts.feature_row(i), g);
  }
  for (int j = 0; j < parts.feature_len; ++j)
    g[j] -= params.beta[m][j] / params.var_beta;
  return g;
}

std::vector<double> grad_lambda(const LikelihoodParts& parts, const Parameters& params,
                                const SurvivalDataset& data, int g) {
  if (g < 0 || g >= params.n_groups())
    throw std::invalid_argument("group index out of range");
  std::vector<double> out(parts.feature_len, 0.0);
  for (int i = 0; i < parts.n; ++i) {
    if (data.group[i] != g) continue;
    const double c = parts.cure[i];
    double scale;
    if (data.censored[i]) {
      if (parts.pop_surv[i] <= 0.0) continue;
      scale = c * (1.0 - c) * (1.0 - parts.surv_mix[i]) / parts.pop_surv[i];
    } else {
      scale = -c;
    }
    axpy(scale, parts.feature_row(i), out);
  }
  for (int j = 0; j < parts.feature_len; ++j)
    out[j] -= params.lambda[g][j] / params.var_lambda;
  return out;
}

std::vector<double> grad_theta(const LikelihoodParts& parts, const Parameters& params,
                               const SurvivalDataset& data, int k) {
  if (params.theta.empty())
    throw std::invalid_argument("grad_theta requires the neural-net link");
  if (k < 0 || k >= static_cast<int>(params.theta.size()))
    throw std::invalid_argument("neuron index out of range");
  const int m_total = parts.n_components;
  const std::size_t x_len = params.theta[k].size();
  std::vector<double> out(x_len, 0.0);

  for (int i = 0; i < parts.n; ++i) {
    const int gi = data.group[i];
    // feature_row(i)[k+1] is psi(x' theta_k); its derivative is 1 - psi^2.
    const double yk = parts.feature_row(i)[k + 1];
    const double dpsi = 1.0 - yk * yk;
    const double c = parts.cure[i];
    const double lam_k = params.lambda[gi][k + 1];

    // Mean of beta_{., k} under the current weights.
    double beta_bar = 0.0;
    for (int m = 0; m < m_total; ++m)
      beta_bar += parts.at(parts.weight, i, m) * params.beta[m][k + 1];

    double scale = 0.0;
    if (data.censored[i]) {
      if (parts.pop_surv[i] <= 0.0) continue;
      double pi_path = 0.0;
      for (int m = 0; m < m_total; ++m) {
        const double w = parts.at(parts.weight, i, m);
        if (w == 0.0) continue;
        pi_path += parts.at(parts.surv_compl, i, m) * w *
                   (params.beta[m][k + 1] - beta_bar);
      }
      scale = (c * (1.0 - c) * lam_k * (1.0 - parts.surv_mix[i]) +
               (1.0 - c) * pi_path) *
              dpsi / parts.pop_surv[i];
    } else {
      double pi_path = 0.0;
      for (int m = 0; m < m_total; ++m) {
        const double w = parts.at(parts.weight, i, m);
        if (w == 0.0) continue;
        pi_path += std::exp(parts.at(parts.log_dens, i, m) - parts.log_dens_mix[i]) *
                   w * (params.beta[m][k + 1] - beta_bar);
      }
      scale = (-c * lam_k + pi_path) * dpsi;
    }
    axpy(scale, std::span<const double>(data.x[i]), out);
  }
  for (std::size_t j = 0; j < x_len; ++j)
    out[j] -= params.theta[k][j] / params.var_theta;
  return out;
}

double grad_mu(const Parameters& params, const LinkSpec& link,
               const SurvivalDataset& data, int m) {
  return grad_mu(compute_likelihood_parts(params, link, data), params, data, m);
}

std::vector<double> grad_beta(const Parameters& params, const LinkSpec& link,
                              const SurvivalDataset& data, int m) {
  return grad_beta(compute_likelihood_parts(params, link, data), params, data, m);
}

std::vector<double> grad_lambda(const Parameters& params, const LinkSpec& link,
                                const SurvivalDataset& data, int g) {
  return grad_lambda(compute_likelihood_parts(params, link, data), params, data, g);
}

std::vector<double> grad_theta(const Parameters& params, const LinkSpec& link,
                               const SurvivalDataset& data, int k) {
  if (!link.is_nn())
    throw std::invalid_argument("grad_theta requires the neural-net link");
  return grad_theta(compute_likelihood_parts(params, link, data), params, data, k);
}

std::vector<double> block_gradient(const Parameters& params, const LinkSpec& link,
                                   const SurvivalDataset& data, GradientBlock block) {
  switch (block.target) {
    case BlockKind::Mu:
      return {grad_mu(params, link, data, block.index)};
    case BlockKind::BetaRow:
      return grad_beta(params, link, data, block.index);
    case BlockKind::LambdaRow:
      return grad_lambda(params, link, data, block.index);
    case BlockKind::ThetaRow:
      return grad_theta(params, link, data, block.index);
  }
  throw std::logic_error("unknown gradient block");
}

namespace {

std::vector<double>* block_storage(Parameters& params, GradientBlock block) {
  switch (block.target) {
    case BlockKind::Mu:
      return &params.mu;  // coordinate block.index only
    case BlockKind::BetaRow:
      return &params.beta[block.index];
    case BlockKind::LambdaRow:
      return &params.lambda[block.index];
    case BlockKind::ThetaRow:
      return &params.theta[block.index];
  }
  return nullptr;
}

double log_posterior_for_fd(const Parameters& params, const LinkSpec& link,
                            const SurvivalDataset& data) {
  // Block priors are Normal(0, var); the remaining prior terms are constant
  // in the block and cancel inside the central difference.
  double lp = log_likelihood(params, link, data);
  for (double m : params.mu) lp += -m * m / (2.0 * params.var_mu);
  for (const auto& row : params.lambda)
    for (double v : row) lp += -v * v / (2.0 * params.var_lambda);
  for (const auto& row : params.beta)
    for (double v : row) lp += -v * v / (2.0 * params.var_beta);
  for (const auto& row : params.theta)
    for (double v : row) lp += -v * v / (2.0 * params.var_theta);
  return lp;
}

}  // namespace

std::vector<double> finite_diff(const Parameters& params, const LinkSpec& link,
                                const SurvivalDataset& data, GradientBlock block,
                                double step) {
  if (!(step > 0.0)) throw std::invalid_argument("finite_diff: step must be > 0");
  Parameters work = params;
  std::vector<double>* v = block_storage(work, block);
  const bool scalar = block.target == BlockKind::Mu;
  const int lo = scalar ? block.index : 0;
  const int hi = scalar ? block.index + 1 : static_cast<int>(v->size());
  std::vector<double> out;
  out.reserve(hi - lo);
  for (int j = lo; j < hi; ++j) {
    const double orig = (*v)[j];
    const double h = step * std::max(1.0, std::abs(orig));
    (*v)[j] = orig + h;
    const double up = log_posterior_for_fd(work, link, data);
    (*v)[j] = orig - h;
    const double dn = log_posterior_for_fd(work, link, data);
    (*v)[j] = orig;
    out.push_back((up - dn) / (2.0 * h));
  }
  return out;
}

}  // namespace mcure
