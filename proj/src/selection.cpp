#include "mcure/selection.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "mcure/model.hpp"

namespace mcure {

double predictive_loglik(const PosteriorDraws& draws, const SurvivalDataset& test) {
  if (draws.draws.empty())
    throw std::invalid_argument("predictive_loglik: no posterior draws");
  if (test.size() == 0)
    throw std::invalid_argument("predictive_loglik: empty test set");
  double total = 0.0;
  for (const Parameters& p : draws.draws)
    total += log_likelihood(p, draws.link, test);
  return total / static_cast<double>(draws.draws.size());
}

void stratified_split(const SurvivalDataset& data, double train_fraction,
                      Rng& rng, std::vector<int>& train, std::vector<int>& test) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("split: train fraction must be in (0,1)");
  train.clear();
  test.clear();
  for (int g = 0; g < data.n_groups; ++g) {
    std::vector<int> idx;
    for (int i = 0; i < static_cast<int>(data.size()); ++i)
      if (data.group[i] == g) idx.push_back(i);
    std::shuffle(idx.begin(), idx.end(), rng);
    // Keep at least one subject of every arm on each side.
    std::size_t n_train = static_cast<std::size_t>(train_fraction * idx.size());
    n_train = std::clamp<std::size_t>(n_train, 1, idx.size() - 1);
    for (std::size_t j = 0; j < idx.size(); ++j)
      (j < n_train ? train : test).push_back(idx[j]);
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
}

SurvivalDataset subset_dataset(const SurvivalDataset& data,
                               const std::vector<int>& index) {
  SurvivalDataset out;
  out.n_groups = data.n_groups;
  out.n_covariates = data.n_covariates;
  for (int i : index) {
    out.time.push_back(data.time[i]);
    out.censored.push_back(data.censored[i]);
    out.group.push_back(data.group[i]);
    out.x.push_back(data.x[i]);
  }
  return out;
}

KSelectionReport select_k(const SurvivalDataset& data,
                          const std::vector<int>& k_grid,
                          const KSelectionConfig& config) {
  if (k_grid.empty()) throw std::invalid_argument("select_k: empty K grid");
  data.validate();

  KSelectionReport report;
  report.candidates = k_grid;
  report.seed = config.sampler.seed;
  report.train_fraction = config.train_fraction;

  Rng split_rng(config.sampler.seed);
  stratified_split(data, config.train_fraction, split_rng, report.train_index,
                   report.test_index);
  const SurvivalDataset train = subset_dataset(data, report.train_index);
  const SurvivalDataset test = subset_dataset(data, report.test_index);

  report.predictive.assign(k_grid.size(), 0.0);
  auto fit_one = [&](std::size_t j) {
    LinkSpec link{LinkKind::NeuralNet, k_grid[j]};
    SamplerConfig cfg = config.sampler;
    cfg.seed = config.sampler.seed + 1000003ULL * (j + 1);
    try {
      const PosteriorDraws draws = run_chain(train, link, cfg);
      report.predictive[j] = predictive_loglik(draws, test);
    } catch (const std::exception&) {
      report.predictive[j] = -std::numeric_limits<double>::infinity();
    }
  };

  const int jobs = std::max(1, config.jobs);
  if (jobs == 1) {
    for (std::size_t j = 0; j < k_grid.size(); ++j) fit_one(j);
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> cursor{0};
    for (int t = 0; t < jobs; ++t)
      pool.emplace_back([&] {
        for (std::size_t j = cursor.fetch_add(1); j < k_grid.size();
             j = cursor.fetch_add(1))
          fit_one(j);
      });
    for (auto& th : pool) th.join();
  }

  report.chosen = choose_best_k(k_grid, report.predictive);
  return report;
}

int choose_best_k(const std::vector<int>& candidates,
                  const std::vector<double>& predictive) {
  if (candidates.empty() || candidates.size() != predictive.size())
    throw std::invalid_argument("choose_best_k: mismatched inputs");
  // Argmax with ties broken toward the smallest K.
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return candidates[a] < candidates[b];
  });
  double best = -std::numeric_limits<double>::infinity();
  int chosen = candidates[order[0]];
  for (std::size_t j : order) {
    if (predictive[j] > best) {
      best = predictive[j];
      chosen = candidates[j];
    }
  }
  return chosen;
}

}  // namespace mcure
