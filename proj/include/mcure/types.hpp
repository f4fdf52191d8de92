#pragma once

#include <cstdint>
#include <string>
#include <vector>

// Core data types for the covariate-dependent multi-treatment mixture cure
// model: survival data, link specification, and the full parameter set.
//
// Conventions used throughout:
//   - censoring indicator: 1 = censored, 0 = event observed
//   - group / component / neuron indices are 0-based in the C++ API
//     (dataset files use 1-based groups, converted on ingestion)
//   - every covariate row carries a leading 1 for the intercept

namespace mcure {

enum class LinkKind { Linear, NeuralNet };

// Link function for cure probabilities and mixture weights. NeuralNet uses a
// single hidden layer of `width` tanh units shared across all links.
struct LinkSpec {
  LinkKind kind = LinkKind::Linear;
  int width = 0;  // K, NeuralNet only

  bool is_nn() const { return kind == LinkKind::NeuralNet; }
  // Length of the coefficient rows fed to the cure/weight links.
  int feature_dim(int n_covariates) const {
    return is_nn() ? width + 1 : n_covariates + 1;
  }
};

struct SurvivalDataset {
  std::vector<double> time;              // t_i > 0
  std::vector<std::uint8_t> censored;    // 1 = censored, 0 = event
  std::vector<int> group;                // 0..G-1
  std::vector<std::vector<double>> x;    // rows of length P+1, x[0] == 1
  int n_groups = 0;                      // G
  int n_covariates = 0;                  // P

  std::size_t size() const { return time.size(); }

  // Throws std::invalid_argument on any violated invariant (nonpositive
  // times, bad censor flags, empty groups, ragged or intercept-less rows).
  void validate() const;
};

// Beta prior for the inclusion probabilities p_g and a shared Inverse-Gamma
// prior for the coefficient variances.
struct PriorConfig {
  double beta_c = 1.0;
  double beta_d = 1.0;
  double ig_shape = 1.0;  // a
  double ig_scale = 1.0;  // b

  void validate() const;
};

// Complete parameter state. Row r of `lambda` holds the cure-link
// coefficients of group r; row m of `beta` the weight-link coefficients of
// component m; row k of `theta` the hidden-layer weights of neuron k
// (NeuralNet only, length P+1). `sigma` is fixed after initialization.
struct Parameters {
  std::vector<double> mu;                      // M log-normal log-means
  std::vector<double> sigma;                   // M log-normal log-SDs, > 0
  std::vector<std::vector<std::uint8_t>> gamma;  // M x G inclusion matrix
  std::vector<std::vector<double>> lambda;     // G x L
  std::vector<std::vector<double>> beta;       // M x L
  std::vector<std::vector<double>> theta;      // K x (P+1), empty if linear
  std::vector<double> p;                       // G inclusion probabilities
  double var_mu = 1.0;
  double var_lambda = 1.0;
  double var_beta = 1.0;
  double var_theta = 1.0;

  int n_components() const { return static_cast<int>(mu.size()); }
  int n_groups() const { return static_cast<int>(lambda.size()); }

  bool gamma_column_active(int g) const {
    for (const auto& row : gamma)
      if (row[g]) return true;
    return false;
  }

  // Dimension/positivity checks against a link spec; throws on mismatch.
  void validate(const LinkSpec& link, int n_covariates) const;
};

}  // namespace mcure
