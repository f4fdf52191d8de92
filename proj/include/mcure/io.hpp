#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mcure/sampler.hpp"
#include "mcure/selection.hpp"
#include "mcure/simgen.hpp"
#include "mcure/types.hpp"

// File formats:
//   - datasets: header CSV `time,censored,group,x1..xP`; groups are 1-based
//     on disk, censor flag 1 = censored; numbers carry 17 significant digits
//   - posterior draws: line-delimited JSON, one draw per record, preceded by
//     a versioned header record
//   - reports, ground truth and manifests: single JSON documents
// All writers are atomic (temp file + rename) so partial outputs never
// appear under the final name.

namespace mcure::io {

inline constexpr const char* kArtifactVersion = "1.0";

void write_dataset_csv(const std::filesystem::path& path,
                       const SurvivalDataset& data);

// `flip_censor` inverts the censoring flag on ingestion for datasets using
// the opposite convention.
SurvivalDataset read_dataset_csv(const std::filesystem::path& path,
                                 bool flip_censor = false);

// Covariate table: header x1..xP, one subject per row, no intercept column.
std::vector<std::vector<double>> read_covariate_table(
    const std::filesystem::path& path);

// Component file for the misspecified generator: header
// xi0,...,xiP,sigma (any xi column count), one mixture component per row.
std::vector<MisspecComponent> read_components_csv(
    const std::filesystem::path& path);

void write_draws(const std::filesystem::path& path, const PosteriorDraws& draws);
PosteriorDraws read_draws(const std::filesystem::path& path);

void write_ground_truth(const std::filesystem::path& path, const GroundTruth& truth);
GroundTruth read_ground_truth(const std::filesystem::path& path);

void write_kselect_report(const std::filesystem::path& path,
                          const KSelectionReport& report);
KSelectionReport read_kselect_report(const std::filesystem::path& path);

struct Manifest {
  std::string command;
  std::string config_json;  // frozen effective configuration
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  double duration_seconds = 0.0;
};

void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

// Simple numeric table with a header row; used for CATE/MBLP/threshold and
// survival-grid outputs. Values are written with 17 significant digits.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

void write_table_csv(const std::filesystem::path& path, const Table& table);

std::string format_double(double v);

}  // namespace mcure::io
