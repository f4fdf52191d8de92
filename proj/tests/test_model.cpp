#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "mcure/model.hpp"
#include "mcure/stats.hpp"
#include "test_helpers.hpp"

using namespace mcure;
using mcure::testing::random_instance;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Scalar re-implementation of logistic(link(x)) in extended precision.
long double oracle_cure(const Parameters& p, const LinkSpec& link,
                        const std::vector<double>& x, int g) {
  std::vector<long double> feat;
  if (link.is_nn()) {
    feat.push_back(1.0L);
    for (int k = 0; k < link.width; ++k) {
      long double a = 0.0L;
      for (std::size_t j = 0; j < x.size(); ++j) a += (long double)p.theta[k][j] * x[j];
      feat.push_back((expl(2.0L * a) - 1.0L) / (expl(2.0L * a) + 1.0L));
    }
  } else {
    for (double v : x) feat.push_back(v);
  }
  long double f = 0.0L;
  for (std::size_t j = 0; j < feat.size(); ++j) f += (long double)p.lambda[g][j] * feat[j];
  return 1.0L / (1.0L + expl(-f));
}

// Naive exponentiate-and-normalize softmax oracle.
std::vector<long double> oracle_weights(const Parameters& p, const LinkSpec& link,
                                        const std::vector<double>& x, int g) {
  std::vector<long double> feat;
  if (link.is_nn()) {
    feat.push_back(1.0L);
    for (int k = 0; k < link.width; ++k) {
      long double a = 0.0L;
      for (std::size_t j = 0; j < x.size(); ++j) a += (long double)p.theta[k][j] * x[j];
      feat.push_back(tanhl(a));
    }
  } else {
    for (double v : x) feat.push_back(v);
  }
  std::vector<long double> w(p.n_components(), 0.0L);
  long double total = 0.0L;
  for (int m = 0; m < p.n_components(); ++m) {
    if (!p.gamma[m][g]) continue;
    long double f = 0.0L;
    for (std::size_t j = 0; j < feat.size(); ++j) f += (long double)p.beta[m][j] * feat[j];
    w[m] = expl(f);
    total += w[m];
  }
  for (auto& v : w) v /= total;
  return w;
}

// Term-by-term direct-formula likelihood in extended precision.
long double oracle_loglik(const Parameters& p, const LinkSpec& link,
                          const SurvivalDataset& d) {
  long double ll = 0.0L;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const int g = d.group[i];
    const long double c = oracle_cure(p, link, d.x[i], g);
    const std::vector<long double> w = oracle_weights(p, link, d.x[i], g);
    const long double logt = logl((long double)d.time[i]);
    if (d.censored[i]) {
      long double surv = 0.0L;
      for (int m = 0; m < p.n_components(); ++m) {
        if (w[m] == 0.0L) continue;
        const long double z = (logt - p.mu[m]) / p.sigma[m];
        surv += w[m] * 0.5L * erfcl(z / sqrtl(2.0L));
      }
      ll += logl(c + (1.0L - c) * surv);
    } else {
      long double dens = 0.0L;
      for (int m = 0; m < p.n_components(); ++m) {
        if (w[m] == 0.0L) continue;
        const long double z = (logt - p.mu[m]) / p.sigma[m];
        dens += w[m] * expl(-0.5L * z * z) /
                ((long double)d.time[i] * p.sigma[m] * sqrtl(2.0L * M_PIl));
      }
      ll += logl((1.0L - c) * dens);
    }
  }
  return ll;
}

// Simpson quadrature of the susceptible density upper tail, in log-time.
double quadrature_susceptible(const Parameters& p,
                              const std::vector<double>& weights, double t) {
  double hi = -kInf;
  for (int m = 0; m < p.n_components(); ++m)
    hi = std::max(hi, p.mu[m] + 12.0 * p.sigma[m]);
  const double lo = std::log(t);
  if (lo >= hi) return 0.0;
  const int n = 40000;  // even
  const double h = (hi - lo) / n;
  auto dens = [&](double u) {
    double s = 0.0;
    for (int m = 0; m < p.n_components(); ++m) {
      if (weights[m] == 0.0) continue;
      const double z = (u - p.mu[m]) / p.sigma[m];
      s += weights[m] * normal_pdf(z) / p.sigma[m];
    }
    return s;
  };
  double acc = dens(lo) + dens(hi);
  for (int j = 1; j < n; ++j) acc += dens(lo + j * h) * (j % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

Parameters two_group_linear_params() {
  Parameters p;
  p.mu = {0.0, 1.0};
  p.sigma = {1.0, 0.5};
  p.gamma = {{1, 1}, {1, 1}};
  p.lambda = {{0.0, 0.0}, {0.3, -0.2}};
  p.beta = {{0.0, 0.0}, {0.4, 0.1}};
  p.p = {0.5, 0.5};
  return p;
}

}  // namespace

TEST_CASE("cure probability: trivial links") {
  Parameters p = two_group_linear_params();
  LinkSpec link;
  std::vector<double> x = {1.0, 0.7};
  CHECK(cure_prob(p, link, x, 0) == doctest::Approx(0.5).epsilon(1e-14));

  p.lambda[0] = {std::log(3.0), 0.0};
  CHECK(cure_prob(p, link, x, 0) == doctest::Approx(0.75).epsilon(1e-14));
}

TEST_CASE("cure probability matches the scalar oracle on random links") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    for (bool nn : {false, true}) {
      auto inst = random_instance(seed, nn);
      for (const auto& x : inst.data.x) {
        const double got = cure_prob(inst.params, inst.link, x, 1);
        const long double want = oracle_cure(inst.params, inst.link, x, 1);
        CHECK(std::abs(got - (double)want) < 1e-13);
      }
    }
  }
}

TEST_CASE("cure probability rejects dimension mismatches") {
  Parameters p = two_group_linear_params();
  LinkSpec link;
  std::vector<double> x = {1.0, 0.7, 0.3};
  CHECK_THROWS_AS((void)cure_prob(p, link, x, 0), std::invalid_argument);
  CHECK_THROWS_AS((void)cure_prob(p, link, {x.data(), 2}, 5), std::invalid_argument);
}

TEST_CASE("mixture weights: symmetric, single-active, oracle") {
  Parameters p = two_group_linear_params();
  LinkSpec link;
  std::vector<double> x = {1.0, 0.3};

  p.beta = {{0.2, -0.1}, {0.2, -0.1}};
  auto w = mixture_weights(p, link, x, 0);
  CHECK(w[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(w[1] == doctest::Approx(0.5).epsilon(1e-14));

  p.gamma = {{1, 1}, {0, 1}};
  w = mixture_weights(p, link, x, 0);
  CHECK(w[0] == 1.0);
  CHECK(w[1] == 0.0);

  // M = 3 against the naive softmax oracle.
  Rng rng(7);
  for (int rep = 0; rep < 25; ++rep) {
    auto inst = random_instance(100 + rep, false, 4, 3, 2, 2);
    for (const auto& xr : inst.data.x) {
      const auto got = mixture_weights(inst.params, inst.link, xr, 0);
      const auto want = oracle_weights(inst.params, inst.link, xr, 0);
      double total = 0.0;
      for (int m = 0; m < 3; ++m) {
        CHECK(std::abs(got[m] - (double)want[m]) <= 1e-12);
        total += got[m];
        if (!inst.params.gamma[m][0]) CHECK(got[m] == 0.0);
      }
      CHECK(std::abs(total - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("mixture weights reject an all-zero gamma column") {
  Parameters p = two_group_linear_params();
  p.gamma = {{0, 1}, {0, 1}};
  LinkSpec link;
  std::vector<double> x = {1.0, 0.3};
  CHECK_THROWS_AS((void)mixture_weights(p, link, x, 0), std::invalid_argument);
}

TEST_CASE("susceptible survival: median, limit, quadrature oracle") {
  Parameters p = two_group_linear_params();
  p.gamma = {{1, 1}, {0, 1}};  // single active component in group 0
  LinkSpec link;
  std::vector<double> x = {1.0, 0.5};
  CHECK(survival_susceptible(p, link, x, 0, std::exp(p.mu[0])) ==
        doctest::Approx(0.5).epsilon(1e-12));
  CHECK(survival_susceptible(p, link, x, 0, 1e-14) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS((void)survival_susceptible(p, link, x, 0, 0.0),
                  std::domain_error);

  p = two_group_linear_params();
  for (double t : {0.3, 0.9, 2.4, 6.0}) {
    const auto w = mixture_weights(p, link, x, 1);
    const double got = survival_susceptible(p, link, x, 1, t);
    const double want = quadrature_susceptible(p, w, t);
    CHECK(std::abs(got - want) < 1e-8);
  }
}

TEST_CASE("population survival: forced cure, collapse, plateau") {
  Parameters p = two_group_linear_params();
  LinkSpec link;
  std::vector<double> x = {1.0, 0.5};

  p.lambda[0] = {kInf, 0.0};  // c = 1
  for (double t : {0.1, 1.0, 50.0})
    CHECK(survival_population(p, link, x, 0, t) == 1.0);

  p.lambda[0] = {-kInf, 0.0};  // c = 0
  for (double t : {0.1, 1.0, 50.0})
    CHECK(survival_population(p, link, x, 0, t) ==
          doctest::Approx(survival_susceptible(p, link, x, 0, t)).epsilon(1e-14));

  p = two_group_linear_params();
  const double c = cure_prob(p, link, x, 1);
  CHECK(survival_population(p, link, x, 1, 1e9) == doctest::Approx(c).epsilon(1e-9));
}

TEST_CASE("population survival stays in [c, 1] and decreases on a grid") {
  for (std::uint64_t seed = 3; seed <= 8; ++seed) {
    for (bool nn : {false, true}) {
      auto inst = random_instance(seed, nn);
      const auto& x = inst.data.x[0];
      for (int g = 0; g < 2; ++g) {
        const double c = cure_prob(inst.params, inst.link, x, g);
        double prev = 1.0 + 1e-12;
        for (int j = 0; j < 100; ++j) {
          const double t = 0.01 + 0.25 * j;
          const double s = survival_population(inst.params, inst.link, x, g, t);
          CHECK(s >= c - 1e-12);
          CHECK(s <= prev + 1e-12);
          prev = s;
        }
      }
    }
  }
}

TEST_CASE("log-likelihood: cured subjects and the -inf sentinel") {
  Parameters p = two_group_linear_params();
  p.lambda[0] = {kInf, 0.0};
  LinkSpec link;
  SurvivalDataset d;
  d.n_groups = 2;
  d.n_covariates = 1;
  d.time = {2.0};
  d.censored = {1};
  d.group = {0};
  d.x = {{1.0, 0.5}};
  CHECK(log_likelihood(p, link, d) == 0.0);  // log(1)

  d.censored = {0};
  CHECK(log_likelihood(p, link, d) == -kInf);
}

TEST_CASE("log-likelihood matches the direct-formula oracle") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    for (bool nn : {false, true}) {
      auto inst = random_instance(seed, nn, 5);
      const double got = log_likelihood(inst.params, inst.link, inst.data);
      const long double want = oracle_loglik(inst.params, inst.link, inst.data);
      CHECK(std::abs(got - (double)want) < 1e-10);
    }
  }
}

TEST_CASE("log-likelihood is invariant under component relabeling") {
  auto inst = random_instance(42, false, 10, 3, 2, 2);
  const double base = log_likelihood(inst.params, inst.link, inst.data);
  Parameters p = inst.params;
  // Swap components 0 and 2 across all tied blocks.
  std::swap(p.mu[0], p.mu[2]);
  std::swap(p.sigma[0], p.sigma[2]);
  std::swap(p.beta[0], p.beta[2]);
  std::swap(p.gamma[0], p.gamma[2]);
  CHECK(log_likelihood(p, inst.link, inst.data) ==
        doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("log-likelihood equals the susceptible-probability substitution form") {
  // Same likelihood written in terms of r = 1 - c throughout.
  for (std::uint64_t seed = 11; seed <= 16; ++seed) {
    auto inst = random_instance(seed, seed % 2 == 0, 8);
    double want = 0.0;
    for (std::size_t i = 0; i < inst.data.size(); ++i) {
      const int g = inst.data.group[i];
      const double r =
          1.0 - cure_prob(inst.params, inst.link, inst.data.x[i], g);
      const auto w = mixture_weights(inst.params, inst.link, inst.data.x[i], g);
      const double logt = std::log(inst.data.time[i]);
      if (inst.data.censored[i]) {
        double surv = 0.0;
        for (int m = 0; m < inst.params.n_components(); ++m)
          surv += w[m] * normal_cdf_compl((logt - inst.params.mu[m]) /
                                          inst.params.sigma[m]);
        want += std::log((1.0 - r) + r * surv);
      } else {
        double dens = 0.0;
        for (int m = 0; m < inst.params.n_components(); ++m)
          dens += w[m] * std::exp(lognormal_logpdf(inst.data.time[i],
                                                   inst.params.mu[m],
                                                   inst.params.sigma[m]));
        want += std::log(r * dens);
      }
    }
    CHECK(log_likelihood(inst.params, inst.link, inst.data) ==
          doctest::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("log-likelihood uses assigned groups only") {
  auto inst = random_instance(5, false, 6, 3, 2, 2);
  // Perturbing group 1's cure coefficients must not change the contribution
  // of subjects assigned to group 0.
  SurvivalDataset only_g0 = inst.data;
  only_g0.time.clear();
  only_g0.censored.clear();
  only_g0.group.clear();
  only_g0.x.clear();
  for (std::size_t i = 0; i < inst.data.size(); ++i) {
    if (inst.data.group[i] != 0) continue;
    only_g0.time.push_back(inst.data.time[i]);
    only_g0.censored.push_back(inst.data.censored[i]);
    only_g0.group.push_back(0);
    only_g0.x.push_back(inst.data.x[i]);
  }
  const double before = log_likelihood(inst.params, inst.link, only_g0);
  Parameters p = inst.params;
  p.lambda[1][0] += 5.0;
  CHECK(log_likelihood(p, inst.link, only_g0) == before);
}

TEST_CASE("neural-net link with constant hidden features is covariate-free") {
  auto inst = random_instance(9, true);
  Parameters p = inst.params;
  for (auto& row : p.theta)
    for (std::size_t j = 1; j < row.size(); ++j) row[j] = 0.0;
  std::vector<double> xa = {1.0, 0.1, 0.9}, xb = {1.0, 0.8, 0.2};
  CHECK(cure_prob(p, inst.link, xa, 0) ==
        doctest::Approx(cure_prob(p, inst.link, xb, 0)).epsilon(1e-14));
  const auto wa = mixture_weights(p, inst.link, xa, 0);
  const auto wb = mixture_weights(p, inst.link, xb, 0);
  for (std::size_t m = 0; m < wa.size(); ++m)
    CHECK(wa[m] == doctest::Approx(wb[m]).epsilon(1e-14));
}

TEST_CASE("log-prior: counting constants and conjugate pieces") {
  Parameters p = two_group_linear_params();
  p.lambda = {{0.0, 0.0}, {0.0, 0.0}};
  p.beta = {{0.0, 0.0}, {0.0, 0.0}};
  p.mu = {0.0, 0.0};
  LinkSpec link;
  PriorConfig prior;

  // 2 mu + 4 lambda + 4 beta standard-normal terms at zero.
  const double normal_terms = -0.5 * kLogTwoPi * 10.0;
  // gamma all ones with p = 1/2, Beta(1,1) density = 1, IG(1,1) at v = 1.
  const double bernoulli = 4.0 * std::log(0.5);
  const double ig = 3.0 * inverse_gamma_logpdf(1.0, 1.0, 1.0);
  CHECK(log_prior(p, link, prior) ==
        doctest::Approx(normal_terms + bernoulli + ig).epsilon(1e-12));

  // p_g = 1 makes every active inclusion's Bernoulli term log(1) = 0.
  p.p = {1.0, 1.0};
  CHECK(std::isfinite(log_prior(p, link, prior)));
  CHECK(log_prior(p, link, prior) ==
        doctest::Approx(normal_terms + ig).epsilon(1e-12));
}

TEST_CASE("log-prior matches an independent density-sum oracle") {
  for (std::uint64_t seed = 21; seed <= 30; ++seed) {
    auto inst = random_instance(seed, seed % 2 == 0);
    Parameters& p = inst.params;
    Rng rng(seed * 13);
    p.var_mu = 0.5 + runif(rng);
    p.var_lambda = 0.5 + runif(rng);
    p.var_beta = 0.5 + runif(rng);
    p.var_theta = 0.5 + runif(rng);
    p.p = {0.2 + 0.5 * runif(rng), 0.2 + 0.5 * runif(rng)};
    PriorConfig prior{1.5, 2.0, 2.5, 1.5};

    long double want = 0.0L;
    auto normal_ld = [](long double v, long double var) {
      return -0.5L * (logl(2.0L * M_PIl * var)) - v * v / (2.0L * var);
    };
    for (double v : p.mu) want += normal_ld(v, p.var_mu);
    for (const auto& row : p.lambda)
      for (double v : row) want += normal_ld(v, p.var_lambda);
    for (const auto& row : p.beta)
      for (double v : row) want += normal_ld(v, p.var_beta);
    for (const auto& row : p.theta)
      for (double v : row) want += normal_ld(v, p.var_theta);
    for (int g = 0; g < 2; ++g) {
      for (int m = 0; m < p.n_components(); ++m)
        want += p.gamma[m][g] ? logl((long double)p.p[g])
                              : logl(1.0L - (long double)p.p[g]);
      want += lgammal(3.5L) - lgammal(1.5L) - lgammal(2.0L) +
              0.5L * logl((long double)p.p[g]) + logl(1.0L - (long double)p.p[g]);
    }
    auto ig_ld = [](long double v, long double a, long double b) {
      return a * logl(b) - lgammal(a) - (a + 1.0L) * logl(v) - b / v;
    };
    want += ig_ld(p.var_mu, 2.5L, 1.5L) + ig_ld(p.var_lambda, 2.5L, 1.5L) +
            ig_ld(p.var_beta, 2.5L, 1.5L);
    if (inst.link.is_nn()) want += ig_ld(p.var_theta, 2.5L, 1.5L);

    CHECK(std::abs(log_prior(p, inst.link, prior) - (double)want) < 1e-10);
  }
}

TEST_CASE("log-prior rejects nonpositive variances") {
  auto inst = random_instance(31, false);
  inst.params.var_beta = 0.0;
  CHECK_THROWS_AS((void)log_prior(inst.params, inst.link, PriorConfig{}),
                  std::domain_error);
}
