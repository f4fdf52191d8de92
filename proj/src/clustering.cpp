#include "mcure/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace mcure {

namespace {

std::vector<double> quantile_centers(std::vector<double> sorted, int k) {
  std::vector<double> centers(k);
  const double n = static_cast<double>(sorted.size());
  for (int j = 0; j < k; ++j) {
    const double q = (j + 0.5) / k;
    const std::size_t idx = std::min(sorted.size() - 1,
                                     static_cast<std::size_t>(q * n));
    centers[j] = sorted[idx];
  }
  // Collapse duplicates so every center is distinct where the data allow.
  for (int j = 1; j < k; ++j)
    if (centers[j] <= centers[j - 1])
      centers[j] = std::nextafter(centers[j - 1], std::numeric_limits<double>::max());
  return centers;
}

int nearest_center_1d(const std::vector<double>& centers, double v) {
  int best = 0;
  double best_d = std::abs(v - centers[0]);
  for (int j = 1; j < static_cast<int>(centers.size()); ++j) {
    const double d = std::abs(v - centers[j]);
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

}  // namespace

KMeans1dResult kmeans_1d(const std::vector<double>& values, int k, int max_iter) {
  if (k < 1) throw std::invalid_argument("kmeans_1d: k must be >= 1");
  if (values.empty()) throw std::invalid_argument("kmeans_1d: empty input");
  const int n = static_cast<int>(values.size());
  k = std::min(k, n);

  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> centers = quantile_centers(sorted, k);
  const std::vector<double> fallback = centers;

  KMeans1dResult res;
  res.labels.assign(n, 0);
  bool converged = false;
  for (int it = 0; it < max_iter && !converged; ++it) {
    std::vector<double> sum(k, 0.0);
    std::vector<int> cnt(k, 0);
    for (int i = 0; i < n; ++i) {
      const int j = nearest_center_1d(centers, values[i]);
      res.labels[i] = j;
      sum[j] += values[i];
      ++cnt[j];
    }
    converged = true;
    for (int j = 0; j < k; ++j) {
      if (cnt[j] == 0) continue;  // keep the old center
      const double next = sum[j] / cnt[j];
      if (std::abs(next - centers[j]) > 1e-12) converged = false;
      centers[j] = next;
    }
  }
  if (!converged) centers = fallback;

  std::vector<double> wss(k, 0.0);
  std::vector<int> cnt(k, 0);
  for (int i = 0; i < n; ++i) {
    const int j = nearest_center_1d(centers, values[i]);
    res.labels[i] = j;
    const double d = values[i] - centers[j];
    wss[j] += d * d;
    ++cnt[j];
  }
  res.centers = centers;
  res.cluster_sd.resize(k);
  for (int j = 0; j < k; ++j)
    res.cluster_sd[j] = std::sqrt(wss[j] / std::max(1, cnt[j] - 1));
  res.converged = converged;

  // Report clusters in ascending center order.
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return res.centers[a] < res.centers[b]; });
  std::vector<int> rank(k);
  for (int j = 0; j < k; ++j) rank[order[j]] = j;
  KMeans1dResult out;
  out.converged = res.converged;
  out.centers.resize(k);
  out.cluster_sd.resize(k);
  for (int j = 0; j < k; ++j) {
    out.centers[rank[j]] = res.centers[j];
    out.cluster_sd[rank[j]] = res.cluster_sd[j];
  }
  out.labels.resize(n);
  for (int i = 0; i < n; ++i) out.labels[i] = rank[res.labels[i]];
  return out;
}

namespace {

// Log-likelihood of a univariate Gaussian mixture after EM; -inf on failure.
double gmm_em_loglik(const std::vector<double>& v, int k) {
  const int n = static_cast<int>(v.size());
  KMeans1dResult init = kmeans_1d(v, k);
  std::vector<double> mean = init.centers;
  std::vector<double> var(k), w(k, 1.0 / k);
  for (int j = 0; j < k; ++j)
    var[j] = std::max(init.cluster_sd[j] * init.cluster_sd[j], 1e-6);

  std::vector<double> resp(static_cast<std::size_t>(n) * k);
  double ll = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < 500; ++it) {
    double new_ll = 0.0;
    for (int i = 0; i < n; ++i) {
      double terms[64];
      for (int j = 0; j < k; ++j)
        terms[j] = std::log(w[j]) + normal_logpdf(v[i], mean[j], var[j]);
      const double lse = log_sum_exp(std::span<const double>(terms, k));
      new_ll += lse;
      for (int j = 0; j < k; ++j)
        resp[static_cast<std::size_t>(i) * k + j] = std::exp(terms[j] - lse);
    }
    for (int j = 0; j < k; ++j) {
      double nj = 0.0, s = 0.0;
      for (int i = 0; i < n; ++i) {
        const double r = resp[static_cast<std::size_t>(i) * k + j];
        nj += r;
        s += r * v[i];
      }
      if (nj < 1e-10) {
        w[j] = 1e-10;
        continue;
      }
      mean[j] = s / nj;
      double ss = 0.0;
      for (int i = 0; i < n; ++i) {
        const double d = v[i] - mean[j];
        ss += resp[static_cast<std::size_t>(i) * k + j] * d * d;
      }
      var[j] = std::max(ss / nj, 1e-6);
      w[j] = nj / n;
    }
    if (std::abs(new_ll - ll) < 1e-8 * (1.0 + std::abs(new_ll))) {
      ll = new_ll;
      break;
    }
    ll = new_ll;
  }
  return ll;
}

}  // namespace

int select_gaussian_mixture_size(const std::vector<double>& values, int max_k) {
  if (values.empty())
    throw std::invalid_argument("mixture size selection: empty input");
  if (max_k < 1) throw std::invalid_argument("mixture size selection: max_k < 1");
  const int n = static_cast<int>(values.size());
  max_k = std::min({max_k, n, 63});

  int best_k = 1;
  double best_bic = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= max_k; ++k) {
    const double ll = gmm_em_loglik(values, k);
    const double n_params = 3.0 * k - 1.0;  // means, variances, free weights
    const double bic = -2.0 * ll + n_params * std::log(static_cast<double>(n));
    if (bic < best_bic - 1e-12) {
      best_bic = bic;
      best_k = k;
    }
  }
  return best_k;
}

KMeansResult kmeans(const std::vector<std::vector<double>>& rows, int k,
                    Rng& rng, int max_iter) {
  const int n = static_cast<int>(rows.size());
  if (n == 0) throw std::invalid_argument("kmeans: empty input");
  if (k < 1 || k > n) throw std::invalid_argument("kmeans: k out of range");
  const std::size_t dim = rows[0].size();

  auto sqdist = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      const double d = a[j] - b[j];
      s += d * d;
    }
    return s;
  };

  // k-means++ seeding.
  KMeansResult res;
  res.centers.push_back(rows[static_cast<std::size_t>(runif(rng) * n) % n]);
  std::vector<double> d2(n);
  while (static_cast<int>(res.centers.size()) < k) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : res.centers) best = std::min(best, sqdist(rows[i], c));
      d2[i] = best;
      total += best;
    }
    if (total <= 0.0) {
      res.centers.push_back(rows[static_cast<std::size_t>(runif(rng) * n) % n]);
      continue;
    }
    double u = runif(rng) * total;
    int pick = n - 1;
    for (int i = 0; i < n; ++i) {
      u -= d2[i];
      if (u <= 0.0) {
        pick = i;
        break;
      }
    }
    res.centers.push_back(rows[pick]);
  }

  res.labels.assign(n, 0);
  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = sqdist(rows[i], res.centers[0]);
      for (int j = 1; j < k; ++j) {
        const double d = sqdist(rows[i], res.centers[j]);
        if (d < best_d) {
          best_d = d;
          best = j;
        }
      }
      if (res.labels[i] != best) {
        res.labels[i] = best;
        changed = true;
      }
    }
    // Re-seat empty clusters on the globally farthest point.
    std::vector<int> cnt(k, 0);
    for (int i = 0; i < n; ++i) ++cnt[res.labels[i]];
    for (int j = 0; j < k; ++j) {
      if (cnt[j] > 0) continue;
      int far = 0;
      double far_d = -1.0;
      for (int i = 0; i < n; ++i) {
        if (cnt[res.labels[i]] <= 1) continue;
        const double d = sqdist(rows[i], res.centers[res.labels[i]]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      --cnt[res.labels[far]];
      res.labels[far] = j;
      cnt[j] = 1;
      changed = true;
    }
    for (int j = 0; j < k; ++j) {
      std::vector<double> mean(dim, 0.0);
      int nj = 0;
      for (int i = 0; i < n; ++i) {
        if (res.labels[i] != j) continue;
        for (std::size_t t = 0; t < dim; ++t) mean[t] += rows[i][t];
        ++nj;
      }
      for (std::size_t t = 0; t < dim; ++t) mean[t] /= nj;
      res.centers[j] = mean;
    }
    if (!changed && it > 0) break;
  }
  return res;
}

}  // namespace mcure
