#pragma once

#include <vector>

#include "mcure/stats.hpp"

// Small clustering utilities: 1-d k-means for mixture initialization, BIC
// selection over univariate Gaussian mixtures, and multi-dimensional k-means
// for subject partitioning.

namespace mcure {

struct KMeans1dResult {
  std::vector<double> centers;      // sorted ascending
  std::vector<double> cluster_sd;   // sqrt(WSS_k / max(1, n_k - 1))
  std::vector<int> labels;
  bool converged = false;
};

// Lloyd iterations from quantile-spaced initial centers; deterministic. On
// nonconvergence within `max_iter` the quantile centers themselves are kept
// (labels from the final assignment pass).
KMeans1dResult kmeans_1d(const std::vector<double>& values, int k,
                         int max_iter = 200);

// BIC-optimal number of univariate Gaussian mixture components in 1..max_k,
// ties to the smaller count. EM is restarted from k-means assignments.
int select_gaussian_mixture_size(const std::vector<double>& values, int max_k);

struct KMeansResult {
  std::vector<std::vector<double>> centers;
  std::vector<int> labels;
};

// k-means++ seeded Lloyd on row vectors; every cluster is kept nonempty by
// stealing the point farthest from its center. Deterministic given seed.
KMeansResult kmeans(const std::vector<std::vector<double>>& rows, int k,
                    Rng& rng, int max_iter = 200);

}  // namespace mcure
