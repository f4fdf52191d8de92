#include "mcure/model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "mcure/stats.hpp"

namespace mcure {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_x(const LinkSpec& link, const Parameters& params,
             std::span<const double> x) {
  if (link.is_nn()) {
    if (params.theta.empty() || params.theta[0].size() != x.size())
      throw std::invalid_argument("covariate vector length does not match theta");
  } else {
    if (params.lambda[0].size() != x.size())
      throw std::invalid_argument("covariate vector length does not match lambda");
  }
}

void check_group(const Parameters& params, int g) {
  if (g < 0 || g >= params.n_groups())
    throw std::invalid_argument("group index out of range");
}

// Log-weights of the gated softmax for group g given link features.
void gated_log_softmax(const Parameters& params, std::span<const double> feat,
                       int g, std::vector<double>& out) {
  const int m_total = params.n_components();
  out.assign(m_total, kNegInf);
  double hi = kNegInf;
  for (int m = 0; m < m_total; ++m) {
    if (!params.gamma[m][g]) continue;
    out[m] = dot(params.beta[m], feat);
    if (out[m] > hi) hi = out[m];
  }
  if (!std::isfinite(hi))
    throw std::invalid_argument("gamma column has no active component");
  double s = 0.0;
  for (int m = 0; m < m_total; ++m)
    if (params.gamma[m][g]) s += std::exp(out[m] - hi);
  const double lse = hi + std::log(s);
  for (int m = 0; m < m_total; ++m)
    if (params.gamma[m][g]) out[m] -= lse;
}

}  // namespace

std::vector<double> link_features(const Parameters& params, const LinkSpec& link,
                                  std::span<const double> x) {
  check_x(link, params, x);
  if (!link.is_nn()) return {x.begin(), x.end()};
  std::vector<double> y(static_cast<std::size_t>(link.width) + 1);
  y[0] = 1.0;
  for (int k = 0; k < link.width; ++k) y[k + 1] = psi(dot(params.theta[k], x));
  return y;
}

double cure_prob(const Parameters& params, const LinkSpec& link,
                 std::span<const double> x, int g) {
  check_group(params, g);
  const std::vector<double> feat = link_features(params, link, x);
  return logistic(dot(params.lambda[g], feat));
}

std::vector<double> mixture_weights(const Parameters& params, const LinkSpec& link,
                                    std::span<const double> x, int g) {
  check_group(params, g);
  const std::vector<double> feat = link_features(params, link, x);
  std::vector<double> logw;
  gated_log_softmax(params, feat, g, logw);
  std::vector<double> w(logw.size(), 0.0);
  for (std::size_t m = 0; m < logw.size(); ++m)
    if (params.gamma[m][g]) w[m] = std::exp(logw[m]);
  return w;
}

double survival_susceptible(const Parameters& params, const LinkSpec& link,
                            std::span<const double> x, int g, double t) {
  if (!(t > 0.0)) throw std::domain_error("survival requires t > 0");
  const std::vector<double> w = mixture_weights(params, link, x, g);
  const double logt = std::log(t);
  double s = 0.0;
  for (int m = 0; m < params.n_components(); ++m) {
    if (w[m] == 0.0) continue;
    s += w[m] * normal_cdf_compl((logt - params.mu[m]) / params.sigma[m]);
  }
  return s;
}

double survival_population(const Parameters& params, const LinkSpec& link,
                           std::span<const double> x, int g, double t) {
  const double c = cure_prob(params, link, x, g);
  if (c == 1.0) return 1.0;
  return c + (1.0 - c) * survival_susceptible(params, link, x, g, t);
}

LikelihoodParts compute_likelihood_parts(const Parameters& params,
                                         const LinkSpec& link,
                                         const SurvivalDataset& data) {
  params.validate(link, data.n_covariates);
  const int n = static_cast<int>(data.size());
  const int m_total = params.n_components();
  const int feat_len = link.feature_dim(data.n_covariates);

  LikelihoodParts parts;
  parts.n = n;
  parts.n_components = m_total;
  parts.feature_len = feat_len;
  parts.features.resize(static_cast<std::size_t>(n) * feat_len);
  parts.surv_compl.resize(static_cast<std::size_t>(n) * m_total);
  parts.log_dens.resize(static_cast<std::size_t>(n) * m_total);
  parts.weight.assign(static_cast<std::size_t>(n) * m_total, 0.0);
  parts.cure.resize(n);
  parts.log_one_minus_cure.resize(n);
  parts.surv_mix.resize(n);
  parts.pop_surv.resize(n);
  parts.log_dens_mix.resize(n);

  std::vector<double> logw, logterms(m_total);
  for (int i = 0; i < n; ++i) {
    const int g = data.group[i];
    const std::vector<double> feat = link_features(params, link, data.x[i]);
    std::copy(feat.begin(), feat.end(),
              parts.features.begin() + static_cast<std::size_t>(i) * feat_len);

    const double f_cure = dot(params.lambda[g], feat);
    parts.cure[i] = logistic(f_cure);
    parts.log_one_minus_cure[i] = -softplus(f_cure);

    gated_log_softmax(params, feat, g, logw);

    const double logt = std::log(data.time[i]);
    double surv_mix = 0.0;
    int n_terms = 0;
    for (int m = 0; m < m_total; ++m) {
      const std::size_t idx = static_cast<std::size_t>(i) * m_total + m;
      const double z = (logt - params.mu[m]) / params.sigma[m];
      parts.surv_compl[idx] = normal_cdf_compl(z);
      parts.log_dens[idx] = lognormal_logpdf(data.time[i], params.mu[m],
                                             params.sigma[m]);
      if (!params.gamma[m][g]) continue;
      const double w = std::exp(logw[m]);
      parts.weight[idx] = w;
      surv_mix += w * parts.surv_compl[idx];
      logterms[n_terms++] = logw[m] + parts.log_dens[idx];
    }
    parts.surv_mix[i] = surv_mix;
    parts.pop_surv[i] = parts.cure[i] + (1.0 - parts.cure[i]) * surv_mix;
    parts.log_dens_mix[i] =
        log_sum_exp(std::span<const double>(logterms.data(), n_terms));
  }
  return parts;
}

double log_likelihood(const LikelihoodParts& parts, const SurvivalDataset& data) {
  double ll = 0.0;
  for (int i = 0; i < parts.n; ++i) {
    double term;
    if (data.censored[i]) {
      term = std::log(parts.pop_surv[i]);
    } else {
      term = parts.log_one_minus_cure[i] + parts.log_dens_mix[i];
    }
    if (std::isnan(term)) throw std::invalid_argument("NaN in likelihood inputs");
    if (term == kNegInf) return kNegInf;
    ll += term;
  }
  return ll;
}

double log_likelihood(const Parameters& params, const LinkSpec& link,
                      const SurvivalDataset& data) {
  return log_likelihood(compute_likelihood_parts(params, link, data), data);
}

double log_likelihood_subset(const Parameters& params, const LinkSpec& link,
                             const SurvivalDataset& data,
                             std::span<const int> subjects) {
  const int m_total = params.n_components();
  std::vector<double> logw, logterms(m_total);
  double ll = 0.0;
  for (int i : subjects) {
    const int g = data.group[i];
    const std::vector<double> feat = link_features(params, link, data.x[i]);
    const double f_cure = dot(params.lambda[g], feat);
    gated_log_softmax(params, feat, g, logw);
    const double logt = std::log(data.time[i]);
    double term;
    if (data.censored[i]) {
      const double c = logistic(f_cure);
      double surv_mix = 0.0;
      for (int m = 0; m < m_total; ++m) {
        if (!params.gamma[m][g]) continue;
        surv_mix += std::exp(logw[m]) *
                    normal_cdf_compl((logt - params.mu[m]) / params.sigma[m]);
      }
      term = std::log(c + (1.0 - c) * surv_mix);
    } else {
      int n_terms = 0;
      for (int m = 0; m < m_total; ++m) {
        if (!params.gamma[m][g]) continue;
        logterms[n_terms++] =
            logw[m] + lognormal_logpdf(data.time[i], params.mu[m], params.sigma[m]);
      }
      term = -softplus(f_cure) +
             log_sum_exp(std::span<const double>(logterms.data(), n_terms));
    }
    if (std::isnan(term)) throw std::invalid_argument("NaN in likelihood inputs");
    if (term == kNegInf) return kNegInf;
    ll += term;
  }
  return ll;
}

double log_prior(const Parameters& params, const LinkSpec& link,
                 const PriorConfig& prior) {
  prior.validate();
  if (!(params.var_mu > 0 && params.var_lambda > 0 && params.var_beta > 0 &&
        (!link.is_nn() || params.var_theta > 0)))
    throw std::domain_error("log_prior: nonpositive variance");

  double lp = 0.0;
  for (double m : params.mu) lp += normal_logpdf(m, 0.0, params.var_mu);
  for (const auto& row : params.lambda)
    for (double v : row) lp += normal_logpdf(v, 0.0, params.var_lambda);
  for (const auto& row : params.beta)
    for (double v : row) lp += normal_logpdf(v, 0.0, params.var_beta);
  if (link.is_nn())
    for (const auto& row : params.theta)
      for (double v : row) lp += normal_logpdf(v, 0.0, params.var_theta);

  for (int g = 0; g < params.n_groups(); ++g) {
    const double pg = params.p[g];
    for (int m = 0; m < params.n_components(); ++m)
      lp += params.gamma[m][g] ? std::log(pg) : std::log1p(-pg);
    lp += beta_logpdf(pg, prior.beta_c, prior.beta_d);
  }

  lp += inverse_gamma_logpdf(params.var_mu, prior.ig_shape, prior.ig_scale);
  lp += inverse_gamma_logpdf(params.var_lambda, prior.ig_shape, prior.ig_scale);
  lp += inverse_gamma_logpdf(params.var_beta, prior.ig_shape, prior.ig_scale);
  if (link.is_nn())
    lp += inverse_gamma_logpdf(params.var_theta, prior.ig_shape, prior.ig_scale);
  return lp;
}

}  // namespace mcure
