#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "mcure/sampler.hpp"
#include "mcure/simgen.hpp"
#include "test_helpers.hpp"

using namespace mcure;

namespace {

SurvivalDataset empty_dataset(int n_groups, int n_covariates) {
  SurvivalDataset d;
  d.n_groups = n_groups;
  d.n_covariates = n_covariates;
  return d;
}

// Batch-means standard error (handles the chain's autocorrelation).
struct ChainSummary {
  double mean, var, se_mean, se_var;
};

ChainSummary summarize(const std::vector<double>& x, int n_batches = 100) {
  const int n = static_cast<int>(x.size());
  const int len = n / n_batches;
  std::vector<double> bmean(n_batches), bvar(n_batches);
  for (int b = 0; b < n_batches; ++b) {
    double s = 0.0, ss = 0.0;
    for (int j = 0; j < len; ++j) {
      const double v = x[b * len + j];
      s += v;
      ss += v * v;
    }
    bmean[b] = s / len;
    bvar[b] = ss / len - bmean[b] * bmean[b];
  }
  auto mean_sd = [&](const std::vector<double>& v) {
    double m = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double s2 = 0.0;
    for (double a : v) s2 += (a - m) * (a - m);
    return std::pair<double, double>(m, std::sqrt(s2 / (v.size() - 1) / v.size()));
  };
  const auto [m, se_m] = mean_sd(bmean);
  const auto [v, se_v] = mean_sd(bvar);
  return {m, v, se_m, se_v};
}

ChainState prior_only_state(const SurvivalDataset& d, const LinkSpec& link,
                            const SamplerConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  return init_state(d, link, std::vector<int>(d.n_groups, 1), cfg, rng);
}

SimConfig small_sim(std::uint64_t seed) {
  SimConfig sim;
  sim.n = 120;
  sim.seed = seed;
  sim.param_seed = seed;
  return sim;
}

}  // namespace

TEST_CASE("component-count selection by BIC") {
  SurvivalDataset d = empty_dataset(1, 1);
  Rng rng(3);
  // one tight cluster
  for (int i = 0; i < 120; ++i) {
    d.time.push_back(std::exp(rnorm(rng, 1.0, 0.08)));
    d.censored.push_back(0);
    d.group.push_back(0);
    d.x.push_back({1.0, 0.5});
  }
  CHECK(select_m_per_group(d, 9) == std::vector<int>{1});

  // two well-separated clusters: means 0 and 5, sd 0.1, n = 200
  SurvivalDataset d2 = empty_dataset(1, 1);
  for (int i = 0; i < 200; ++i) {
    const double logt = i % 2 ? rnorm(rng, 0.0, 0.1) : rnorm(rng, 5.0, 0.1);
    d2.time.push_back(std::exp(logt));
    d2.censored.push_back(0);
    d2.group.push_back(0);
    d2.x.push_back({1.0, 0.5});
  }
  CHECK(select_m_per_group(d2, 9) == std::vector<int>{2});
  CHECK(select_m_per_group(d2, 1) == std::vector<int>{1});
}

TEST_CASE("component-count selection needs two events per group") {
  SurvivalDataset d = empty_dataset(1, 1);
  d.time = {1.0, 2.0, 3.0};
  d.censored = {1, 1, 0};
  d.group = {0, 0, 0};
  d.x = {{1.0, 0.1}, {1.0, 0.2}, {1.0, 0.3}};
  CHECK(select_m_per_group(d, 9) == std::vector<int>{1});
  CHECK_THROWS_AS((void)select_m_per_group(empty_dataset(1, 1), 9),
                  std::invalid_argument);
}

TEST_CASE("initialization: index sets, gamma layout, sigma guard") {
  SurvivalDataset d = empty_dataset(2, 1);
  Rng gen(5);
  for (int i = 0; i < 40; ++i) {
    d.time.push_back(std::exp(rnorm(gen, 0.5, 0.4)));
    d.censored.push_back(0);
    d.group.push_back(i % 2);
    d.x.push_back({1.0, 0.5});
  }
  SamplerConfig cfg;
  Rng rng(1);
  ChainState st = init_state(d, LinkSpec{}, {1, 1}, cfg, rng);
  CHECK(st.params.n_components() == 2);
  CHECK(st.plan.index_sets[0] == std::vector<int>{0});
  CHECK(st.plan.index_sets[1] == std::vector<int>{1});
  CHECK(st.params.gamma[0][0] == 1);
  CHECK(st.params.gamma[0][1] == 0);
  CHECK(st.params.gamma[1][0] == 0);
  CHECK(st.params.gamma[1][1] == 1);

  // A singleton cluster has zero within-cluster variance: sigma guard -> 1.
  SurvivalDataset one = empty_dataset(1, 1);
  one.time = {2.0};
  one.censored = {0};
  one.group = {0};
  one.x = {{1.0, 0.2}};
  Rng rng2(2);
  ChainState st1 = init_state(one, LinkSpec{}, {1}, cfg, rng2);
  CHECK(st1.params.sigma[0] == 1.0);
  CHECK(st1.params.mu[0] == doctest::Approx(std::log(2.0)));
}

TEST_CASE("initialization recovers separated cluster centers") {
  SurvivalDataset d = empty_dataset(1, 1);
  Rng gen(11);
  const double centers[3] = {-1.0, 1.0, 3.0};
  for (int i = 0; i < 300; ++i) {
    d.time.push_back(std::exp(rnorm(gen, centers[i % 3], 0.05)));
    d.censored.push_back(0);
    d.group.push_back(0);
    d.x.push_back({1.0, 0.4});
  }
  SamplerConfig cfg;
  Rng rng(1);
  ChainState st = init_state(d, LinkSpec{}, {3}, cfg, rng);
  for (int j = 0; j < 3; ++j)
    CHECK(std::abs(st.params.mu[j] - centers[j]) < 0.1);
}

TEST_CASE("gumbel-max two-category draw matches the analytic Bernoulli") {
  Rng rng(17);
  for (int setting = 0; setting < 10; ++setting) {
    const double x1 = rnorm(rng, 0.0, 2.0);
    const double x2 = rnorm(rng, 0.0, 2.0);
    const double p = logistic(x1 - x2);
    const int n = 100000;
    int on = 0;
    for (int s = 0; s < n; ++s)
      if (gumbel_max_bernoulli(x1, x2, rng)) ++on;
    const double se = std::sqrt(p * (1.0 - p) / n);
    CHECK(std::abs(static_cast<double>(on) / n - p) < 3.0 * se);
  }
}

TEST_CASE("gamma updates: degenerate p, empty-data frequency, column guard") {
  SurvivalDataset d = empty_dataset(2, 1);
  SamplerConfig cfg;
  Rng rng(23);
  ChainState st = prior_only_state(d, LinkSpec{}, cfg, 23);

  // p_g = 1 keeps the indicator on almost surely.
  st.params.p = {1.0, 1.0};
  for (int rep = 0; rep < 2000; ++rep)
    CHECK(gibbs_gamma(st, d, LinkSpec{}, 0, 1, rng));

  // With no data the conditional is exactly Bernoulli(p_g).
  st.params.p = {0.3, 0.7};
  st.params.gamma = {{1, 1}, {1, 1}};
  const int n = 100000;
  int on = 0;
  for (int rep = 0; rep < n; ++rep) {
    st.params.gamma[0][1] = 1;  // keep the column guard inactive
    if (gibbs_gamma(st, d, LinkSpec{}, 1, 1, rng)) ++on;
  }
  const double se = std::sqrt(0.7 * 0.3 / n);
  CHECK(std::abs(static_cast<double>(on) / n - 0.7) < 3.0 * se);

  // A flip that would empty the column is skipped.
  st.params.p = {1e-12, 1e-12};
  st.params.gamma = {{1, 0}, {0, 1}};
  for (int rep = 0; rep < 200; ++rep) {
    CHECK(gibbs_gamma(st, d, LinkSpec{}, 0, 0, rng));
    CHECK(st.params.gamma[0][0] == 1);
  }
}

TEST_CASE("lmc: tiny step gives near-certain acceptance") {
  auto inst = mcure::testing::random_instance(31, false);
  SamplerConfig cfg;
  ChainState st = prior_only_state(inst.data, inst.link, cfg, 31);
  Rng rng(7);
  st.mu_blocks[0].step = 1e-12;
  for (int rep = 0; rep < 50; ++rep) {
    const LmcResult r = lmc_step(st, inst.data, inst.link, {BlockKind::Mu, 0}, rng);
    CHECK(std::abs(r.log_ratio) < 1e-5);
    CHECK(r.accepted);
  }
}

TEST_CASE("lmc: prior-only chain reproduces its Normal prior") {
  SurvivalDataset d = empty_dataset(1, 1);
  SamplerConfig cfg;
  ChainState st = prior_only_state(d, LinkSpec{}, cfg, 5);
  st.params.var_mu = 1.0;
  st.mu_blocks[0].step = 1.0;
  Rng rng(99);
  const int iters = 100000;
  std::vector<double> samples;
  samples.reserve(iters);
  for (int it = 0; it < iters; ++it) {
    lmc_step(st, d, LinkSpec{}, {BlockKind::Mu, 0}, rng);
    samples.push_back(st.params.mu[0]);
  }
  const ChainSummary s = summarize(samples);
  CHECK(std::abs(s.mean - 0.0) < 3.0 * s.se_mean);
  CHECK(std::abs(s.var - 1.0) < 3.0 * s.se_var);
}

TEST_CASE("lmc: proposals into a zero-likelihood region are rejected") {
  // One censored subject far beyond every component: the mixture survival
  // underflows to 0, so the population survival equals the cure mass. Large
  // lambda proposals can push that mass to exactly 0, where the sentinel
  // fires and the move must be rejected.
  SurvivalDataset d = empty_dataset(1, 1);
  d.time = {1e6};
  d.censored = {1};
  d.group = {0};
  d.x = {{1.0, 0.5}};
  SamplerConfig cfg;
  ChainState st = prior_only_state(d, LinkSpec{}, cfg, 8);
  st.params.mu[0] = 0.0;
  st.params.sigma[0] = 0.3;
  // Flat spot of the posterior (data gradient ~ 0, prior negligible) so the
  // Langevin drift cannot rescue the oversized proposals.
  st.params.var_lambda = 1e12;
  st.params.lambda[0] = {60.0, 0.0};
  st.lambda_blocks[0].step = 2e6;  // proposal sd ~ 1400
  Rng rng(12);
  int sentinel_hits = 0;
  for (int rep = 0; rep < 300; ++rep) {
    const LmcResult r =
        lmc_step(st, d, LinkSpec{}, {BlockKind::LambdaRow, 0}, rng);
    if (r.log_ratio == -std::numeric_limits<double>::infinity()) {
      ++sentinel_hits;
      CHECK_FALSE(r.accepted);
    }
    CHECK(std::isfinite(log_likelihood(st.params, LinkSpec{}, d)));
  }
  CHECK(sentinel_hits > 0);
}

TEST_CASE("detailed balance: stored pairs reproduce the MALA ratio") {
  auto inst = mcure::testing::random_instance(41, true, 10);
  SamplerConfig cfg;
  Rng init_rng(3);
  ChainState st =
      init_state(inst.data, inst.link, {1, 2}, cfg, init_rng);
  Rng rng(55);
  for (GradientBlock block : {GradientBlock{BlockKind::Mu, 0},
                              GradientBlock{BlockKind::BetaRow, 1},
                              GradientBlock{BlockKind::LambdaRow, 0},
                              GradientBlock{BlockKind::ThetaRow, 0}}) {
    const bool scalar = block.target == BlockKind::Mu;
    for (int rep = 0; rep < 5; ++rep) {
      Parameters before = st.params;
      std::vector<double> from;
      if (scalar)
        from = {before.mu[block.index]};
      else if (block.target == BlockKind::BetaRow)
        from = before.beta[block.index];
      else if (block.target == BlockKind::LambdaRow)
        from = before.lambda[block.index];
      else
        from = before.theta[block.index];
      const double step = st.block_state(block).step;
      const LmcResult r = lmc_step(st, inst.data, inst.link, block, rng);
      const double fwd = mala_log_ratio(before, inst.link, inst.data, block,
                                        from, r.proposal, step);
      CHECK(r.log_ratio == doctest::Approx(fwd).epsilon(1e-10));
      const double rev = mala_log_ratio(before, inst.link, inst.data, block,
                                        r.proposal, from, step);
      CHECK(fwd + rev == doctest::Approx(0.0).epsilon(1e-10));
    }
  }
}

TEST_CASE("hyperparameter refresh: conjugate moments") {
  SurvivalDataset d = empty_dataset(2, 1);
  SamplerConfig cfg;  // Beta(1,1), IG(1,1)
  ChainState st = prior_only_state(d, LinkSpec{}, cfg, 2);
  const int m_total = st.params.n_components();
  for (auto& row : st.params.gamma)
    for (auto& v : row) v = 1;
  for (auto& row : st.params.beta)
    for (double& v : row) v = 0.0;

  Rng rng(77);
  const int n = 10000;
  double p_sum = 0.0, var_beta_sum = 0.0;
  std::vector<double> p_draws(n);
  for (int rep = 0; rep < n; ++rep) {
    update_hyperparams(st, LinkSpec{}, cfg, rng);
    p_draws[rep] = st.params.p[0];
    p_sum += st.params.p[0];
    var_beta_sum += st.params.var_beta;
  }
  // p_g ~ Beta(1 + M, 1): mean (M+1)/(M+2).
  const double want_p = (m_total + 1.0) / (m_total + 2.0);
  double sd = 0.0;
  for (double v : p_draws) sd += (v - p_sum / n) * (v - p_sum / n);
  sd = std::sqrt(sd / (n - 1));
  CHECK(std::abs(p_sum / n - want_p) < 3.0 * sd / std::sqrt(n));

  // Zero beta block: var_beta ~ IG(1 + n_block/2, 1), mean 1/(n_block/2).
  const double n_block = static_cast<double>(st.params.beta.size() *
                                             st.params.beta[0].size());
  const double want_var = 1.0 / (n_block / 2.0);
  CHECK(var_beta_sum / n ==
        doctest::Approx(want_var).epsilon(0.1));
}

TEST_CASE("step adaptation: banded multiplicative rule") {
  SamplerConfig cfg;
  SurvivalDataset d = empty_dataset(1, 1);
  ChainState st = prior_only_state(d, LinkSpec{}, cfg, 4);
  st.mu_blocks[0].step = 1.0;
  st.mu_blocks[0].proposals = 100;
  st.mu_blocks[0].accepts = 20;  // rate 0.2 < 0.45
  adapt_steps(st, cfg);
  CHECK(st.mu_blocks[0].step == doctest::Approx(0.8));
  CHECK(st.mu_blocks[0].proposals == 0);

  st.mu_blocks[0].step = 1.0;
  st.mu_blocks[0].proposals = 100;
  st.mu_blocks[0].accepts = 55;  // in band
  adapt_steps(st, cfg);
  CHECK(st.mu_blocks[0].step == 1.0);

  st.mu_blocks[0].step = 1.0;
  st.mu_blocks[0].proposals = 100;
  st.mu_blocks[0].accepts = 90;  // above band
  adapt_steps(st, cfg);
  CHECK(st.mu_blocks[0].step == doctest::Approx(1.25));
}

TEST_CASE("step adaptation drives rates into the band") {
  // Start with a grossly oversized step on a prior-only target.
  SurvivalDataset d = empty_dataset(1, 1);
  SamplerConfig cfg;
  cfg.iterations = 21 * 200 + 400;
  cfg.burn_in = 21 * 200;
  cfg.thin = 1;
  cfg.update_gamma = false;
  cfg.update_hyper = false;
  cfg.step_init = 20.0;
  ChainState st = prior_only_state(d, LinkSpec{}, cfg, 6);
  st.mu_blocks[0].step = 20.0;
  Rng rng(13);
  PosteriorDraws out;
  out.link = LinkSpec{};
  advance_chain(st, d, LinkSpec{}, cfg, rng, out);
  const double rate =
      static_cast<double>(st.mu_blocks[0].post_accepts) /
      static_cast<double>(st.mu_blocks[0].post_proposals);
  CHECK(rate >= 0.40);  // post-burn-in realized rate sits in/near the band
  CHECK(rate <= 0.75);
}

TEST_CASE("run_chain: determinism, draw counts, config validation") {
  const SimOutput sim = generate_well_specified(small_sim(9));
  SamplerConfig cfg;
  cfg.iterations = 60;
  cfg.burn_in = 20;
  cfg.thin = 4;
  cfg.seed = 42;
  cfg.gamma_freeze = 30;

  const PosteriorDraws a = run_chain(sim.dataset, LinkSpec{}, cfg);
  const PosteriorDraws b = run_chain(sim.dataset, LinkSpec{}, cfg);
  REQUIRE(a.size() == b.size());
  CHECK(a.size() == 10);  // ceil(40 / 4)
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.log_lik[i] == b.log_lik[i]);
    CHECK(a.draws[i].mu == b.draws[i].mu);
    CHECK(a.draws[i].lambda == b.draws[i].lambda);
    CHECK(a.draws[i].gamma == b.draws[i].gamma);
  }

  SamplerConfig bad = cfg;
  bad.iterations = 0;
  CHECK_THROWS_AS((void)run_chain(sim.dataset, LinkSpec{}, bad),
                  std::invalid_argument);
  bad = cfg;
  bad.burn_in = cfg.iterations;
  CHECK_THROWS_AS((void)run_chain(sim.dataset, LinkSpec{}, bad),
                  std::invalid_argument);
}

TEST_CASE("run_chain: freeze horizon and nonempty gamma columns") {
  const SimOutput sim = generate_well_specified(small_sim(10));
  SamplerConfig cfg;
  cfg.iterations = 50;
  cfg.burn_in = 10;
  cfg.thin = 1;
  cfg.seed = 3;
  cfg.gamma_freeze = 1000;  // longer than the run: I_g entries stay on

  const std::vector<int> m_per_group = {2, 1, 2};
  const PosteriorDraws draws = run_chain(sim.dataset, LinkSpec{}, cfg, m_per_group);
  InitPlan plan;
  plan.m_per_group = m_per_group;
  int next = 0;
  for (int g = 0; g < 3; ++g) {
    std::vector<int> set;
    for (int j = 0; j < m_per_group[g]; ++j) set.push_back(next++);
    plan.index_sets.push_back(set);
  }
  for (const Parameters& p : draws.draws) {
    for (int g = 0; g < 3; ++g) {
      for (int m : plan.index_sets[g]) CHECK(p.gamma[m][g] == 1);
      CHECK(p.gamma_column_active(g));
    }
  }
}
