#include "mcure/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mcure/stats.hpp"

namespace mcure {

namespace {

// Defaults for the well-specified component grid: k-means centers/SDs of the
// bundled demo cohort's log event times (scripts/make_bundled_data.py).
constexpr double kDefaultMu0[9] = {-1.046531, -0.477804, -0.118952,
                                   0.187054,  0.411955,  0.611336,
                                   0.902431,  1.192908,  1.614346};
constexpr double kDefaultSigma0[9] = {0.410477, 0.109208, 0.095862,
                                      0.066718, 0.060260, 0.070126,
                                      0.058754, 0.118630, 0.149864};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Gated softmax over beta0 rows at generating covariates.
std::vector<double> gated_weights(const std::vector<std::vector<double>>& beta0,
                                  const std::vector<std::vector<std::uint8_t>>& gamma0,
                                  std::span<const double> x, int g) {
  const int m_total = static_cast<int>(beta0.size());
  std::vector<double> logits(m_total, -std::numeric_limits<double>::infinity());
  for (int m = 0; m < m_total; ++m)
    if (gamma0[m][g])
      logits[m] = dot({beta0[m].data(), beta0[m].size()},
                      x.subspan(0, beta0[m].size()));
  const double lse = log_sum_exp(logits);
  std::vector<double> w(m_total, 0.0);
  for (int m = 0; m < m_total; ++m)
    if (gamma0[m][g]) w[m] = std::exp(logits[m] - lse);
  return w;
}

// Bernoulli(gamma_prob) inclusion matrix; columns are redrawn until each arm
// keeps at least one active component (the gated softmax is undefined
// otherwise).
std::vector<std::vector<std::uint8_t>> draw_gamma(int m_total, int n_groups,
                                                  double prob, Rng& rng) {
  std::vector<std::vector<std::uint8_t>> gamma(
      m_total, std::vector<std::uint8_t>(n_groups, 0));
  for (int g = 0; g < n_groups; ++g) {
    bool any = false;
    while (!any) {
      for (int m = 0; m < m_total; ++m) {
        gamma[m][g] = runif(rng) < prob ? 1 : 0;
        any = any || gamma[m][g];
      }
    }
  }
  return gamma;
}

int sample_categorical(const std::vector<double>& w, Rng& rng) {
  double u = runif(rng);
  for (int m = 0; m < static_cast<int>(w.size()); ++m) {
    u -= w[m];
    if (u <= 0.0) return m;
  }
  return static_cast<int>(w.size()) - 1;
}

}  // namespace

void SimConfig::validate() const {
  if (!(offset >= 0.0 && offset <= 1.0))
    throw std::invalid_argument("simgen: offset must lie in [0, 1]");
  if (!(censor_rate > 0.0)) throw std::invalid_argument("simgen: censor rate <= 0");
  if (!(follow_up_cap > 0.0)) throw std::invalid_argument("simgen: cap <= 0");
  if (!(lambda_low <= lambda_high))
    throw std::invalid_argument("simgen: empty lambda interval");
  if (n_groups < 1) throw std::invalid_argument("simgen: need >= 1 group");
}

double GroundTruth::true_susceptible_prob(std::span<const double> x, int g) const {
  const auto& lam = lambda0[g];
  const double f = dot({lam.data(), lam.size()}, x.subspan(0, lam.size()));
  const double s = logistic(f) + offset;
  return std::clamp(s, clamp_lo, clamp_hi);
}

double GroundTruth::true_cure_prob(std::span<const double> x, int g) const {
  return 1.0 - true_susceptible_prob(x, g);
}

std::vector<double> GroundTruth::true_weights(std::span<const double> x,
                                              int g) const {
  return gated_weights(beta0, gamma0, x, g);
}

double GroundTruth::component_log_mean(std::span<const double> x, int m) const {
  if (xi.empty()) return mu0[m];
  return dot({xi[m].data(), xi[m].size()}, x.subspan(0, xi[m].size()));
}

double GroundTruth::true_rmst(std::span<const double> x, int g, double h) const {
  const double cure = true_cure_prob(x, g);
  const std::vector<double> w = true_weights(x, g);
  const double logh = std::log(h);
  double mix = 0.0;
  for (std::size_t m = 0; m < w.size(); ++m) {
    if (w[m] == 0.0) continue;
    const double mu = component_log_mean(x, static_cast<int>(m));
    const double sig = sigma0[m];
    mix += w[m] * (std::exp(mu + 0.5 * sig * sig) *
                       normal_cdf((logh - mu - sig * sig) / sig) +
                   h * normal_cdf_compl((logh - mu) / sig));
  }
  return cure * h + (1.0 - cure) * mix;
}

double GroundTruth::true_survival(std::span<const double> x, int g, double t) const {
  const double cure = true_cure_prob(x, g);
  const std::vector<double> w = true_weights(x, g);
  const double logt = std::log(t);
  double mix = 0.0;
  for (std::size_t m = 0; m < w.size(); ++m) {
    if (w[m] == 0.0) continue;
    const double mu = component_log_mean(x, static_cast<int>(m));
    mix += w[m] * normal_cdf_compl((logt - mu) / sigma0[m]);
  }
  return cure + (1.0 - cure) * mix;
}

double GroundTruth::true_zeta(std::span<const double> x, int g, int g_ref,
                              double h) const {
  return true_rmst(x, g, h) - true_rmst(x, g_ref, h);
}

double GroundTruth::true_tau(std::span<const double> x, int g, int g_ref,
                             double h) const {
  return true_survival(x, g, h) - true_survival(x, g_ref, h);
}

namespace {

// Shared tail of both generators: cure draw, component draw, censoring.
void generate_subject(const SimConfig& config, const GroundTruth& truth,
                      std::span<const double> x, int g, Rng& rng,
                      double& obs_time, std::uint8_t& censored,
                      double& susceptible_prob, std::uint8_t& cured,
                      double& latent, double& censor) {
  susceptible_prob = truth.true_susceptible_prob(x, g);
  cured = runif(rng) < 1.0 - susceptible_prob ? 1 : 0;
  if (cured) {
    latent = config.cure_sentinel;
  } else {
    const std::vector<double> w = truth.true_weights(x, g);
    const int m = sample_categorical(w, rng);
    latent = std::exp(rnorm(rng, truth.component_log_mean(x, m), truth.sigma0[m]));
  }
  censor = std::exponential_distribution<double>(config.censor_rate)(rng);
  if (censor > config.follow_up_cap)
    censor = config.follow_up_cap + runif(rng) * config.cap_noise;
  // Ties between event and censoring resolve to the event.
  if (censor < latent) {
    obs_time = censor;
    censored = 1;
  } else {
    obs_time = latent;
    censored = 0;
  }
}

}  // namespace

SimOutput generate_well_specified(const SimConfig& config) {
  config.validate();
  if (config.n < 1) throw std::invalid_argument("simgen: n must be >= 1");

  SimOutput out;
  GroundTruth& truth = out.truth;
  truth.n_gen_covariates = config.n_covariates;
  truth.offset = config.offset;
  truth.mu0 = config.mu0.empty()
                  ? std::vector<double>(kDefaultMu0, kDefaultMu0 + 9)
                  : config.mu0;
  truth.sigma0 = config.sigma0.empty()
                     ? std::vector<double>(kDefaultSigma0, kDefaultSigma0 + 9)
                     : config.sigma0;
  truth.mu0.resize(config.n_components,
                   truth.mu0.empty() ? 0.0 : truth.mu0.back());
  truth.sigma0.resize(config.n_components, 0.5);

  Rng prng(mix_seed(config.param_seed, 0));
  const int feat = config.n_covariates + 1;
  truth.lambda0.assign(config.n_groups, std::vector<double>(feat));
  for (auto& row : truth.lambda0)
    for (double& v : row)
      v = config.lambda_low + runif(prng) * (config.lambda_high - config.lambda_low);
  truth.beta0.assign(config.n_components, std::vector<double>(feat));
  for (auto& row : truth.beta0)
    for (double& v : row) v = rnorm(prng, 0.0, config.beta_sd);
  truth.gamma0 = draw_gamma(config.n_components, config.n_groups,
                            config.gamma_prob, prng);

  SurvivalDataset& data = out.dataset;
  data.n_groups = config.n_groups;
  data.n_covariates = config.n_covariates;
  data.time.resize(config.n);
  data.censored.resize(config.n);
  data.group.resize(config.n);
  data.x.resize(config.n);
  truth.susceptible_prob.resize(config.n);
  truth.cured.resize(config.n);
  truth.latent_time.resize(config.n);
  truth.censor_time.resize(config.n);

  for (int i = 0; i < config.n; ++i) {
    Rng rng(mix_seed(config.seed, static_cast<std::uint64_t>(i) + 1));
    data.group[i] = i % config.n_groups;  // equal arms
    data.x[i].resize(feat);
    data.x[i][0] = 1.0;
    for (int p = 1; p < feat; ++p) data.x[i][p] = runif(rng);
    generate_subject(config, truth, data.x[i], data.group[i], rng, data.time[i],
                     data.censored[i], truth.susceptible_prob[i], truth.cured[i],
                     truth.latent_time[i], truth.censor_time[i]);
  }
  return out;
}

SimOutput generate_misspecified(const SimConfig& config,
                                const std::vector<std::vector<double>>& covariate_table,
                                const std::vector<MisspecComponent>& components) {
  config.validate();
  if (covariate_table.empty())
    throw std::invalid_argument("simgen: empty covariate table");
  if (components.empty())
    throw std::invalid_argument("simgen: missing component definitions");
  const int table_n = static_cast<int>(covariate_table.size());
  const int n = config.n > 0 ? std::min(config.n, table_n) : table_n;
  const std::size_t gen_feat = components[0].xi.size();
  if (gen_feat < 1 || gen_feat > covariate_table[0].size() + 1)
    throw std::invalid_argument("simgen: component coefficient length invalid");
  for (const auto& c : components)
    if (c.xi.size() != gen_feat || !(c.sigma > 0.0))
      throw std::invalid_argument("simgen: malformed component row");

  const int m_total = static_cast<int>(components.size());
  SimOutput out;
  GroundTruth& truth = out.truth;
  truth.n_gen_covariates = static_cast<int>(gen_feat) - 1;
  truth.offset = config.offset;
  truth.sigma0.resize(m_total);
  truth.xi.resize(m_total);
  for (int m = 0; m < m_total; ++m) {
    truth.xi[m] = components[m].xi;
    truth.sigma0[m] = components[m].sigma;
  }

  Rng prng(mix_seed(config.param_seed, 0));
  truth.lambda0.assign(config.n_groups, std::vector<double>(gen_feat));
  for (auto& row : truth.lambda0)
    for (double& v : row)
      v = config.lambda_low + runif(prng) * (config.lambda_high - config.lambda_low);
  truth.beta0.assign(m_total, std::vector<double>(gen_feat));
  for (auto& row : truth.beta0)
    for (double& v : row) v = rnorm(prng, 0.0, config.beta_sd);
  truth.gamma0 = draw_gamma(m_total, config.n_groups, config.gamma_prob, prng);

  SurvivalDataset& data = out.dataset;
  data.n_groups = config.n_groups;
  data.n_covariates = static_cast<int>(covariate_table[0].size());
  data.time.resize(n);
  data.censored.resize(n);
  data.group.resize(n);
  data.x.resize(n);
  truth.susceptible_prob.resize(n);
  truth.cured.resize(n);
  truth.latent_time.resize(n);
  truth.censor_time.resize(n);

  for (int i = 0; i < n; ++i) {
    Rng rng(mix_seed(config.seed, static_cast<std::uint64_t>(i) + 1));
    data.group[i] = i % config.n_groups;
    data.x[i].resize(covariate_table[i].size() + 1);
    data.x[i][0] = 1.0;
    std::copy(covariate_table[i].begin(), covariate_table[i].end(),
              data.x[i].begin() + 1);
    generate_subject(config, truth, data.x[i], data.group[i], rng, data.time[i],
                     data.censored[i], truth.susceptible_prob[i], truth.cured[i],
                     truth.latent_time[i], truth.censor_time[i]);
  }
  return out;
}

KaplanMeier kaplan_meier(const SurvivalDataset& data, int g) {
  std::vector<std::pair<double, std::uint8_t>> obs;  // (time, censored)
  for (int i = 0; i < static_cast<int>(data.size()); ++i)
    if (data.group[i] == g) obs.emplace_back(data.time[i], data.censored[i]);
  if (obs.empty()) throw std::invalid_argument("kaplan_meier: empty group");
  std::sort(obs.begin(), obs.end());

  KaplanMeier km;
  double surv = 1.0;
  std::size_t i = 0;
  std::size_t at_risk = obs.size();
  while (i < obs.size()) {
    const double t = obs[i].first;
    long long events = 0, total = 0;
    while (i < obs.size() && obs[i].first == t) {
      if (!obs[i].second) ++events;
      ++total;
      ++i;
    }
    if (events > 0) {
      surv *= 1.0 - static_cast<double>(events) / static_cast<double>(at_risk);
      km.times.push_back(t);
      km.survival.push_back(surv);
    }
    at_risk -= total;
  }
  return km;
}

double KaplanMeier::at(double t) const {
  double s = 1.0;
  for (std::size_t j = 0; j < times.size(); ++j) {
    if (times[j] > t) break;
    s = survival[j];
  }
  return s;
}

}  // namespace mcure
