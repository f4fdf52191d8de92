#include "mcure/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mcure/clustering.hpp"

namespace mcure {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool all_finite(std::span<const double> v) {
  for (double a : v)
    if (!std::isfinite(a)) return false;
  return true;
}

double sq_norm(std::span<const double> v) {
  double s = 0.0;
  for (double a : v) s += a * a;
  return s;
}

std::vector<int> group_subjects(const SurvivalDataset& data, int g) {
  std::vector<int> idx;
  for (int i = 0; i < static_cast<int>(data.size()); ++i)
    if (data.group[i] == g) idx.push_back(i);
  return idx;
}

}  // namespace

void SamplerConfig::validate() const {
  if (iterations <= 0) throw std::invalid_argument("sampler: iterations must be > 0");
  if (burn_in < 0 || burn_in >= iterations)
    throw std::invalid_argument("sampler: burn-in must lie inside [0, iterations)");
  if (thin < 1) throw std::invalid_argument("sampler: thin must be >= 1");
  if (adapt_interval < 1)
    throw std::invalid_argument("sampler: adaptation interval must be >= 1");
  if (!(0.0 < accept_low && accept_low < accept_high && accept_high < 1.0))
    throw std::invalid_argument("sampler: invalid acceptance band");
  if (!(step_init > 0.0)) throw std::invalid_argument("sampler: step_init must be > 0");
  prior.validate();
}

int InitPlan::total_components() const {
  int total = 0;
  for (int m : m_per_group) total += m;
  return total;
}

bool InitPlan::in_index_set(int m, int g) const {
  const auto& set = index_sets[g];
  return std::find(set.begin(), set.end(), m) != set.end();
}

BlockState& ChainState::block_state(GradientBlock block) {
  switch (block.target) {
    case BlockKind::Mu:
      return mu_blocks[block.index];
    case BlockKind::BetaRow:
      return beta_blocks[block.index];
    case BlockKind::LambdaRow:
      return lambda_blocks[block.index];
    case BlockKind::ThetaRow:
      return theta_blocks[block.index];
  }
  throw std::logic_error("unknown block");
}

std::vector<int> select_m_per_group(const SurvivalDataset& data,
                                    int max_components) {
  if (data.n_groups <= 0) throw std::invalid_argument("select_m: no groups");
  std::vector<int> counts(data.n_groups, 1);
  for (int g = 0; g < data.n_groups; ++g) {
    std::vector<double> log_times;
    bool has_subject = false;
    for (int i = 0; i < static_cast<int>(data.size()); ++i) {
      if (data.group[i] != g) continue;
      has_subject = true;
      if (!data.censored[i]) log_times.push_back(std::log(data.time[i]));
    }
    if (!has_subject) throw std::invalid_argument("select_m: empty group");
    if (log_times.size() < 2) {
      counts[g] = 1;
      continue;
    }
    counts[g] = select_gaussian_mixture_size(log_times, max_components);
  }
  return counts;
}

ChainState init_state(const SurvivalDataset& data, const LinkSpec& link,
                      const std::vector<int>& m_per_group,
                      const SamplerConfig& config, Rng& rng) {
  if (m_per_group.size() != static_cast<std::size_t>(data.n_groups))
    throw std::invalid_argument("init_state: m_per_group length != groups");

  ChainState state;
  state.plan.m_per_group = m_per_group;
  int next = 0;
  for (int g = 0; g < data.n_groups; ++g) {
    if (m_per_group[g] < 1)
      throw std::invalid_argument("init_state: component counts must be >= 1");
    std::vector<int> set(m_per_group[g]);
    for (int j = 0; j < m_per_group[g]; ++j) set[j] = next++;
    state.plan.index_sets.push_back(std::move(set));
  }
  const int m_total = next;

  Parameters& p = state.params;
  p.mu.assign(m_total, 0.0);
  p.sigma.assign(m_total, 1.0);
  p.gamma.assign(m_total, std::vector<std::uint8_t>(data.n_groups, 0));

  for (int g = 0; g < data.n_groups; ++g) {
    std::vector<double> log_times;
    double log_sum = 0.0;
    int n_g = 0;
    for (int i = 0; i < static_cast<int>(data.size()); ++i) {
      if (data.group[i] != g) continue;
      log_sum += std::log(data.time[i]);
      ++n_g;
      if (!data.censored[i]) log_times.push_back(std::log(data.time[i]));
    }
    const auto& set = state.plan.index_sets[g];
    if (static_cast<int>(log_times.size()) >= static_cast<int>(set.size())) {
      const KMeans1dResult km =
          kmeans_1d(log_times, static_cast<int>(set.size()));
      for (std::size_t j = 0; j < set.size(); ++j) {
        p.mu[set[j]] = km.centers[j];
        const double sd = km.cluster_sd[j];
        p.sigma[set[j]] = (std::isfinite(sd) && sd > 0.0) ? sd : 1.0;
      }
    } else {
      // Too few events to cluster: center on the group's mean log time.
      const double center = n_g > 0 ? log_sum / n_g : 0.0;
      for (std::size_t j = 0; j < set.size(); ++j) {
        p.mu[set[j]] = center;
        p.sigma[set[j]] = 1.0;
      }
    }
    for (int m : set) p.gamma[m][g] = 1;
  }

  const int feat_len = link.feature_dim(data.n_covariates);
  p.lambda.assign(data.n_groups, std::vector<double>(feat_len, 0.0));
  p.beta.assign(m_total, std::vector<double>(feat_len, 0.0));
  for (auto& row : p.lambda)
    for (double& v : row) v = rnorm(rng);
  for (auto& row : p.beta)
    for (double& v : row) v = rnorm(rng);
  if (link.is_nn()) {
    p.theta.assign(link.width, std::vector<double>(data.n_covariates + 1, 0.0));
    for (auto& row : p.theta)
      for (double& v : row) v = rnorm(rng);
  }
  p.p.assign(data.n_groups, 0.5);
  p.var_mu = p.var_lambda = p.var_beta = p.var_theta = 1.0;

  BlockState init_block;
  init_block.step = config.step_init;
  state.mu_blocks.assign(m_total, init_block);
  state.beta_blocks.assign(m_total, init_block);
  state.lambda_blocks.assign(data.n_groups, init_block);
  state.theta_blocks.assign(link.is_nn() ? link.width : 0, init_block);
  return state;
}

bool gumbel_max_bernoulli(double x1, double x2, Rng& rng) {
  return x1 + rgumbel(rng) > x2 + rgumbel(rng);
}

bool gibbs_gamma(ChainState& state, const SurvivalDataset& data,
                 const LinkSpec& link, int m, int g, Rng& rng) {
  Parameters& p = state.params;
  int active = 0;
  for (int j = 0; j < p.n_components(); ++j) active += p.gamma[j][g] ? 1 : 0;
  if (p.gamma[m][g] && active == 1) return true;  // flip would empty the column

  const std::vector<int> subjects = group_subjects(data, g);
  const std::uint8_t orig = p.gamma[m][g];
  p.gamma[m][g] = 1;
  const double ll1 = log_likelihood_subset(p, link, data, subjects);
  p.gamma[m][g] = 0;
  const double ll0 = log_likelihood_subset(p, link, data, subjects);
  p.gamma[m][g] = orig;

  const double x1 = std::log(p.p[g]) + ll1;
  const double x2 = std::log1p(-p.p[g]) + ll0;
  const bool on = gumbel_max_bernoulli(x1, x2, rng);
  if (p.gamma[m][g] != static_cast<std::uint8_t>(on)) {
    p.gamma[m][g] = on ? 1 : 0;
    state.invalidate_cache();
  }
  return on;
}

namespace {

void ensure_cache(ChainState& state, const SurvivalDataset& data,
                  const LinkSpec& link) {
  if (state.cache) return;
  state.cache = compute_likelihood_parts(state.params, link, data);
  state.cached_loglik = log_likelihood(*state.cache, data);
}

std::vector<double>& block_values(Parameters& p, GradientBlock block) {
  switch (block.target) {
    case BlockKind::Mu:
      return p.mu;
    case BlockKind::BetaRow:
      return p.beta[block.index];
    case BlockKind::LambdaRow:
      return p.lambda[block.index];
    case BlockKind::ThetaRow:
      return p.theta[block.index];
  }
  throw std::logic_error("unknown block");
}

double block_prior_variance(const Parameters& p, GradientBlock block) {
  switch (block.target) {
    case BlockKind::Mu:
      return p.var_mu;
    case BlockKind::BetaRow:
      return p.var_beta;
    case BlockKind::LambdaRow:
      return p.var_lambda;
    case BlockKind::ThetaRow:
      return p.var_theta;
  }
  throw std::logic_error("unknown block");
}

std::vector<double> gradient_from_parts(const LikelihoodParts& parts,
                                        const Parameters& p,
                                        const SurvivalDataset& data,
                                        GradientBlock block) {
  switch (block.target) {
    case BlockKind::Mu:
      return {grad_mu(parts, p, data, block.index)};
    case BlockKind::BetaRow:
      return grad_beta(parts, p, data, block.index);
    case BlockKind::LambdaRow:
      return grad_lambda(parts, p, data, block.index);
    case BlockKind::ThetaRow:
      return grad_theta(parts, p, data, block.index);
  }
  throw std::logic_error("unknown block");
}

// log q(to | from) for the Langevin proposal kernel, up to the constant.
double proposal_logdensity(std::span<const double> to, std::span<const double> from,
                           std::span<const double> grad_from, double step) {
  double s = 0.0;
  for (std::size_t j = 0; j < to.size(); ++j) {
    const double d = to[j] - from[j] - 0.5 * step * grad_from[j];
    s += d * d;
  }
  return -s / (2.0 * step);
}

}  // namespace

LmcResult lmc_step(ChainState& state, const SurvivalDataset& data,
                   const LinkSpec& link, GradientBlock block, Rng& rng) {
  if (block.target == BlockKind::ThetaRow && !link.is_nn())
    throw std::invalid_argument("theta update requires the neural-net link");

  LmcResult res;
  BlockState& bs = state.block_state(block);
  ++bs.proposals;

  ensure_cache(state, data, link);
  Parameters& p = state.params;
  const bool scalar = block.target == BlockKind::Mu;
  std::vector<double>& storage = block_values(p, block);
  std::vector<double> current =
      scalar ? std::vector<double>{storage[block.index]} : storage;

  const std::vector<double> grad_cur =
      gradient_from_parts(*state.cache, p, data, block);
  if (!all_finite(grad_cur)) {
    res.nonfinite_gradient = true;
    return res;
  }

  const double step = bs.step;
  const double sd = std::sqrt(step);
  std::vector<double> proposal(current.size());
  for (std::size_t j = 0; j < current.size(); ++j)
    proposal[j] = current[j] + 0.5 * step * grad_cur[j] + rnorm(rng, 0.0, sd);
  res.proposal = proposal;
  if (!all_finite(proposal)) {
    res.nonfinite_gradient = true;
    return res;
  }

  const double var = block_prior_variance(p, block);
  const double logpost_cur = state.cached_loglik - sq_norm(current) / (2.0 * var);

  // Evaluate the proposal in place, restoring on rejection.
  auto write_block = [&](const std::vector<double>& v) {
    if (scalar)
      storage[block.index] = v[0];
    else
      storage = v;
  };
  write_block(proposal);
  LikelihoodParts prop_parts = compute_likelihood_parts(p, link, data);
  const double ll_prop = log_likelihood(prop_parts, data);
  if (ll_prop == kNegInf) {
    write_block(current);
    res.log_ratio = kNegInf;
    return res;
  }
  const double logpost_prop = ll_prop - sq_norm(proposal) / (2.0 * var);
  const std::vector<double> grad_prop =
      gradient_from_parts(prop_parts, p, data, block);
  if (!all_finite(grad_prop)) {
    write_block(current);
    res.nonfinite_gradient = true;
    return res;
  }

  res.log_ratio = logpost_prop - logpost_cur +
                  proposal_logdensity(current, proposal, grad_prop, step) -
                  proposal_logdensity(proposal, current, grad_cur, step);

  if (std::log(runif(rng)) < res.log_ratio) {
    res.accepted = true;
    ++bs.accepts;
    state.cache = std::move(prop_parts);
    state.cached_loglik = ll_prop;
  } else {
    write_block(current);
  }
  return res;
}

double mala_log_ratio(const Parameters& params, const LinkSpec& link,
                      const SurvivalDataset& data, GradientBlock block,
                      const std::vector<double>& from,
                      const std::vector<double>& to, double step) {
  Parameters work = params;
  const bool scalar = block.target == BlockKind::Mu;
  std::vector<double>& storage = block_values(work, block);
  const double var = block_prior_variance(work, block);
  auto write = [&](const std::vector<double>& v) {
    if (scalar)
      storage[block.index] = v[0];
    else
      storage = v;
  };

  write(from);
  LikelihoodParts parts_from = compute_likelihood_parts(work, link, data);
  const double post_from =
      log_likelihood(parts_from, data) - sq_norm(from) / (2.0 * var);
  const std::vector<double> grad_from =
      gradient_from_parts(parts_from, work, data, block);

  write(to);
  LikelihoodParts parts_to = compute_likelihood_parts(work, link, data);
  const double post_to =
      log_likelihood(parts_to, data) - sq_norm(to) / (2.0 * var);
  const std::vector<double> grad_to =
      gradient_from_parts(parts_to, work, data, block);

  return post_to - post_from + proposal_logdensity(from, to, grad_to, step) -
         proposal_logdensity(to, from, grad_from, step);
}

void update_hyperparams(ChainState& state, const LinkSpec& link,
                        const SamplerConfig& config, Rng& rng) {
  Parameters& p = state.params;
  const PriorConfig& prior = config.prior;
  const int m_total = p.n_components();

  for (int g = 0; g < p.n_groups(); ++g) {
    int on = 0;
    for (int m = 0; m < m_total; ++m) on += p.gamma[m][g] ? 1 : 0;
    p.p[g] = rbeta(rng, prior.beta_c + on, prior.beta_d + (m_total - on));
  }

  auto refresh = [&](double sum_sq, std::size_t n) {
    return rinverse_gamma(rng, prior.ig_shape + 0.5 * static_cast<double>(n),
                          prior.ig_scale + 0.5 * sum_sq);
  };
  p.var_mu = refresh(sq_norm(p.mu), p.mu.size());

  double ss = 0.0;
  std::size_t n = 0;
  for (const auto& row : p.lambda) {
    ss += sq_norm(row);
    n += row.size();
  }
  p.var_lambda = refresh(ss, n);

  ss = 0.0;
  n = 0;
  for (const auto& row : p.beta) {
    ss += sq_norm(row);
    n += row.size();
  }
  p.var_beta = refresh(ss, n);

  if (link.is_nn()) {
    ss = 0.0;
    n = 0;
    for (const auto& row : p.theta) {
      ss += sq_norm(row);
      n += row.size();
    }
    p.var_theta = refresh(ss, n);
  }
}

void adapt_steps(ChainState& state, const SamplerConfig& config) {
  auto adjust = [&](std::vector<BlockState>& blocks) {
    for (BlockState& b : blocks) {
      if (b.proposals > 0) {
        const double rate = static_cast<double>(b.accepts) / b.proposals;
        if (rate < config.accept_low)
          b.step *= config.step_shrink;
        else if (rate > config.accept_high)
          b.step *= config.step_grow;
      }
      b.proposals = 0;
      b.accepts = 0;
    }
  };
  adjust(state.mu_blocks);
  adjust(state.beta_blocks);
  adjust(state.lambda_blocks);
  adjust(state.theta_blocks);
}

void advance_chain(ChainState& state, const SurvivalDataset& data,
                   const LinkSpec& link, const SamplerConfig& config,
                   Rng& rng, PosteriorDraws& out) {
  const int m_total = state.params.n_components();
  const int n_groups = state.params.n_groups();

  auto track = [&](GradientBlock block, const LmcResult& r) {
    if (state.iteration >= config.burn_in) {
      BlockState& b = state.block_state(block);
      ++b.post_proposals;
      if (r.accepted) ++b.post_accepts;
    }
  };

  for (; state.iteration < config.iterations; ++state.iteration) {
    const long long iter = state.iteration;

    if (config.update_gamma) {
      for (int m = 0; m < m_total; ++m)
        for (int g = 0; g < n_groups; ++g) {
          if (iter < config.gamma_freeze && state.plan.in_index_set(m, g))
            continue;
          gibbs_gamma(state, data, link, m, g, rng);
        }
    }

    for (int m = 0; m < m_total; ++m)
      track({BlockKind::Mu, m}, lmc_step(state, data, link, {BlockKind::Mu, m}, rng));
    for (int m = 0; m < m_total; ++m)
      track({BlockKind::BetaRow, m},
            lmc_step(state, data, link, {BlockKind::BetaRow, m}, rng));
    for (int g = 0; g < n_groups; ++g)
      track({BlockKind::LambdaRow, g},
            lmc_step(state, data, link, {BlockKind::LambdaRow, g}, rng));
    if (link.is_nn())
      for (int k = 0; k < link.width; ++k)
        track({BlockKind::ThetaRow, k},
              lmc_step(state, data, link, {BlockKind::ThetaRow, k}, rng));

    if (config.update_hyper) update_hyperparams(state, link, config, rng);

    // Adaptation runs during burn-in only; steps freeze afterwards so the
    // invariant distribution is preserved.
    if (iter + 1 <= config.burn_in && (iter + 1) % config.adapt_interval == 0)
      adapt_steps(state, config);

    if (iter >= config.burn_in && (iter - config.burn_in) % config.thin == 0) {
      ensure_cache(state, data, link);
      out.draws.push_back(state.params);
      out.log_lik.push_back(state.cached_loglik);
    }
  }

  auto report = [&](const std::vector<BlockState>& blocks, const char* name) {
    for (std::size_t j = 0; j < blocks.size(); ++j) {
      AcceptanceReport r;
      r.block = std::string(name) + "[" + std::to_string(j) + "]";
      r.rate = blocks[j].post_proposals > 0
                   ? static_cast<double>(blocks[j].post_accepts) /
                         blocks[j].post_proposals
                   : 0.0;
      r.step = blocks[j].step;
      out.acceptance.push_back(std::move(r));
    }
  };
  out.acceptance.clear();
  report(state.mu_blocks, "mu");
  report(state.beta_blocks, "beta");
  report(state.lambda_blocks, "lambda");
  report(state.theta_blocks, "theta");
}

PosteriorDraws run_chain(const SurvivalDataset& data, const LinkSpec& link,
                         const SamplerConfig& config,
                         const std::vector<int>& m_override) {
  config.validate();
  data.validate();
  if (link.is_nn() && link.width < 1)
    throw std::invalid_argument("run_chain: neural-net link needs width >= 1");

  Rng rng(config.seed);
  const std::vector<int> m_per_group =
      m_override.empty() ? select_m_per_group(data, config.max_components)
                         : m_override;
  ChainState state = init_state(data, link, m_per_group, config, rng);

  PosteriorDraws out;
  out.link = link;
  out.n_covariates = data.n_covariates;
  out.n_groups = data.n_groups;
  advance_chain(state, data, link, config, rng, out);
  if (out.draws.empty())
    throw std::runtime_error("run_chain: no draws stored; increase iterations");
  return out;
}

}  // namespace mcure
