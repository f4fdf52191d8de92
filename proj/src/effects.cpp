#include "mcure/effects.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mcure/clustering.hpp"
#include "mcure/model.hpp"
#include "mcure/stats.hpp"

namespace mcure {

void EffectsConfig::validate() const {
  if (!(horizon > 0.0)) throw std::invalid_argument("effects: horizon must be > 0");
  if (n_mc < 1) throw std::invalid_argument("effects: n_mc must be >= 1");
  if (n_partitions < 1)
    throw std::invalid_argument("effects: partition count must be >= 1");
}

double sample_quantile(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("quantile of empty sample");
  std::sort(v.begin(), v.end());
  const double pos = q * (static_cast<double>(v.size()) - 1.0);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= v.size()) return v.back();
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * v[lo] + w * v[lo + 1];
}

double rmst_mc(const Parameters& draw, const LinkSpec& link,
               std::span<const double> x, int g, double h, long long n_mc,
               std::uint64_t seed) {
  if (!(h > 0.0)) throw std::invalid_argument("rmst: horizon must be > 0");
  const double c = cure_prob(draw, link, x, g);
  if (c == 1.0) return h;
  const std::vector<double> w = mixture_weights(draw, link, x, g);
  Rng rng(seed);
  double mix = 0.0;
  for (int m = 0; m < draw.n_components(); ++m) {
    if (w[m] == 0.0) continue;
    double acc = 0.0;
    for (long long s = 0; s < n_mc; ++s) {
      const double t = std::exp(rnorm(rng, draw.mu[m], draw.sigma[m]));
      acc += std::min(t, h);
    }
    mix += w[m] * acc / static_cast<double>(n_mc);
  }
  return c * h + (1.0 - c) * mix;
}

double rmst_closed_form(const Parameters& draw, const LinkSpec& link,
                        std::span<const double> x, int g, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("rmst: horizon must be > 0");
  const double c = cure_prob(draw, link, x, g);
  if (c == 1.0) return h;
  const std::vector<double> w = mixture_weights(draw, link, x, g);
  const double logh = std::log(h);
  double mix = 0.0;
  for (int m = 0; m < draw.n_components(); ++m) {
    if (w[m] == 0.0) continue;
    const double mu = draw.mu[m], sig = draw.sigma[m];
    // E[min(T,h)] = e^{mu+sig^2/2} Phi((log h - mu - sig^2)/sig)
    //             + h (1 - Phi((log h - mu)/sig))
    const double partial = std::exp(mu + 0.5 * sig * sig) *
                           normal_cdf((logh - mu - sig * sig) / sig);
    const double tail = h * normal_cdf_compl((logh - mu) / sig);
    mix += w[m] * (partial + tail);
  }
  return c * h + (1.0 - c) * mix;
}

double survival_at_horizon(const Parameters& draw, const LinkSpec& link,
                           std::span<const double> x, int g, double h, bool mc,
                           long long n_mc, std::uint64_t seed) {
  if (!(h > 0.0)) throw std::invalid_argument("survival: horizon must be > 0");
  if (!mc) return survival_population(draw, link, x, g, h);
  const double c = cure_prob(draw, link, x, g);
  if (c == 1.0) return 1.0;
  const std::vector<double> w = mixture_weights(draw, link, x, g);
  Rng rng(seed);
  double mix = 0.0;
  for (int m = 0; m < draw.n_components(); ++m) {
    if (w[m] == 0.0) continue;
    long long over = 0;
    for (long long s = 0; s < n_mc; ++s)
      if (std::exp(rnorm(rng, draw.mu[m], draw.sigma[m])) > h) ++over;
    mix += w[m] * static_cast<double>(over) / static_cast<double>(n_mc);
  }
  return c + (1.0 - c) * mix;
}

CateResult cate(const PosteriorDraws& draws, const SurvivalDataset& data, int g,
                int g_ref, const EffectsConfig& config, EffectMeasure measure) {
  config.validate();
  if (g == g_ref) throw std::invalid_argument("cate: groups must differ");
  if (g < 0 || g >= data.n_groups || g_ref < 0 || g_ref >= data.n_groups)
    throw std::invalid_argument("cate: group out of range");
  if (draws.draws.empty()) throw std::invalid_argument("cate: no draws");

  CateResult res;
  res.group = g;
  res.group_ref = g_ref;
  res.measure = measure;
  res.horizon = config.horizon;
  res.n_draws = static_cast<int>(draws.draws.size());
  res.n_subjects = static_cast<int>(data.size());
  res.effect.resize(static_cast<std::size_t>(res.n_draws) * res.n_subjects);

  auto value = [&](const Parameters& p, std::span<const double> x, int grp) {
    return measure == EffectMeasure::Rmst
               ? rmst_closed_form(p, draws.link, x, grp, config.horizon)
               : survival_at_horizon(p, draws.link, x, grp, config.horizon);
  };
  for (int b = 0; b < res.n_draws; ++b) {
    const Parameters& p = draws.draws[b];
    for (int i = 0; i < res.n_subjects; ++i) {
      res.effect[static_cast<std::size_t>(b) * res.n_subjects + i] =
          value(p, data.x[i], g) - value(p, data.x[i], g_ref);
    }
  }

  res.mean.resize(res.n_subjects);
  res.lo95.resize(res.n_subjects);
  res.hi95.resize(res.n_subjects);
  std::vector<double> column(res.n_draws);
  for (int i = 0; i < res.n_subjects; ++i) {
    double s = 0.0;
    for (int b = 0; b < res.n_draws; ++b) {
      column[b] = res.at(b, i);
      s += column[b];
    }
    res.mean[i] = s / res.n_draws;
    res.lo95[i] = sample_quantile(column, 0.025);
    res.hi95[i] = sample_quantile(column, 0.975);
  }
  return res;
}

MblpResult mblp(const CateResult& cate_result, const SurvivalDataset& data, int p) {
  if (p < 1 || p > data.n_covariates)
    throw std::invalid_argument("mblp: predictor index out of range");
  const int n = cate_result.n_subjects;
  if (n != static_cast<int>(data.size()))
    throw std::invalid_argument("mblp: dataset does not match the CATE result");

  double sx = 0.0, sxx = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = data.x[i][p];
    sx += v;
    sxx += v * v;
  }
  const double denom = sxx - sx * sx / n;
  if (!(denom > 0.0))
    throw std::invalid_argument("mblp: constant predictor x" + std::to_string(p));

  MblpResult res;
  res.predictor = p;
  res.intercept.resize(cate_result.n_draws);
  res.slope.resize(cate_result.n_draws);
  for (int b = 0; b < cate_result.n_draws; ++b) {
    double sy = 0.0, sxy = 0.0;
    for (int i = 0; i < n; ++i) {
      const double y = cate_result.at(b, i);
      sy += y;
      sxy += data.x[i][p] * y;
    }
    const double slope = (sxy - sx * sy / n) / denom;
    res.slope[b] = slope;
    res.intercept[b] = (sy - slope * sx) / n;
  }
  double s = 0.0, si = 0.0;
  for (int b = 0; b < cate_result.n_draws; ++b) {
    s += res.slope[b];
    si += res.intercept[b];
  }
  res.slope_mean = s / cate_result.n_draws;
  res.intercept_mean = si / cate_result.n_draws;
  res.slope_lo95 = sample_quantile(res.slope, 0.025);
  res.slope_hi95 = sample_quantile(res.slope, 0.975);
  return res;
}

ThresholdCurve threshold_curve(const MblpResult& mblp_result,
                               const std::vector<double>& t_grid) {
  for (std::size_t j = 1; j < t_grid.size(); ++j)
    if (t_grid[j] < t_grid[j - 1])
      throw std::invalid_argument("threshold grid must be sorted ascending");
  ThresholdCurve curve;
  curve.predictor = mblp_result.predictor;
  curve.thresholds = t_grid;
  curve.exclusion.resize(t_grid.size());
  const double n = static_cast<double>(mblp_result.slope.size());
  for (std::size_t j = 0; j < t_grid.size(); ++j) {
    long long over = 0;
    for (double b : mblp_result.slope)
      if (std::abs(b) > t_grid[j]) ++over;
    curve.exclusion[j] = static_cast<double>(over) / n;
  }
  return curve;
}

std::vector<int> partition_subjects(const SurvivalDataset& data, int n_parts,
                                    std::uint64_t seed) {
  const int n = static_cast<int>(data.size());
  if (n_parts < 1 || n_parts > n)
    throw std::invalid_argument("partition: count out of range");
  if (n_parts == 1) return std::vector<int>(n, 0);

  // z-score the covariates (intercept column dropped).
  const int p = data.n_covariates;
  std::vector<double> mean(p, 0.0), sd(p, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) mean[j] += data.x[i][j + 1];
  for (int j = 0; j < p; ++j) mean[j] /= n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) {
      const double d = data.x[i][j + 1] - mean[j];
      sd[j] += d * d;
    }
  for (int j = 0; j < p; ++j) sd[j] = std::sqrt(sd[j] / std::max(1, n - 1));

  std::vector<std::vector<double>> rows(n, std::vector<double>(p));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j)
      rows[i][j] = sd[j] > 0.0 ? (data.x[i][j + 1] - mean[j]) / sd[j] : 0.0;

  Rng rng(seed);
  return kmeans(rows, n_parts, rng).labels;
}

SurvivalCurveGrid survival_curve_grid(const PosteriorDraws& draws,
                                      const SurvivalDataset& data,
                                      const std::vector<int>& strata,
                                      int n_strata,
                                      const std::vector<double>& t_grid) {
  if (draws.draws.empty()) throw std::invalid_argument("curve grid: no draws");
  if (strata.size() != data.size())
    throw std::invalid_argument("curve grid: strata labels do not match data");
  for (std::size_t j = 0; j < t_grid.size(); ++j) {
    if (!(t_grid[j] > 0.0))
      throw std::invalid_argument("curve grid: times must be positive");
    if (j > 0 && t_grid[j] < t_grid[j - 1])
      throw std::invalid_argument("curve grid: times must be sorted");
  }

  SurvivalCurveGrid grid;
  grid.t_grid = t_grid;
  grid.n_strata = n_strata;
  grid.n_groups = data.n_groups;
  grid.mean_survival.assign(
      static_cast<std::size_t>(n_strata) * data.n_groups * t_grid.size(), 0.0);
  std::vector<long long> stratum_size(n_strata, 0);
  for (int lab : strata) {
    if (lab < 0 || lab >= n_strata)
      throw std::invalid_argument("curve grid: stratum label out of range");
    ++stratum_size[lab];
  }

  const double n_draws = static_cast<double>(draws.draws.size());
  for (int i = 0; i < static_cast<int>(data.size()); ++i) {
    for (int g = 0; g < data.n_groups; ++g) {
      for (std::size_t j = 0; j < t_grid.size(); ++j) {
        double acc = 0.0;
        for (const Parameters& p : draws.draws)
          acc += survival_population(p, draws.link, data.x[i], g, t_grid[j]);
        grid.mean_survival[(static_cast<std::size_t>(strata[i]) * data.n_groups +
                            g) *
                               t_grid.size() +
                           j] += acc / n_draws;
      }
    }
  }
  for (int s = 0; s < n_strata; ++s) {
    if (stratum_size[s] == 0) continue;
    for (int g = 0; g < data.n_groups; ++g)
      for (std::size_t j = 0; j < t_grid.size(); ++j)
        grid.mean_survival[(static_cast<std::size_t>(s) * data.n_groups + g) *
                               t_grid.size() +
                           j] /= static_cast<double>(stratum_size[s]);
  }
  return grid;
}

}  // namespace mcure
