#include "mcure/io.hpp"

#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace mcure::io {

namespace {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const char* what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(std::string("malformed ") + what + ": '" + s + "'");
  }
}

json link_to_json(const LinkSpec& link) {
  return {{"kind", link.is_nn() ? "nn" : "linear"}, {"width", link.width}};
}

LinkSpec link_from_json(const json& j) {
  LinkSpec link;
  link.kind = j.at("kind") == "nn" ? LinkKind::NeuralNet : LinkKind::Linear;
  link.width = j.at("width");
  return link;
}

json params_to_json(const Parameters& p) {
  json j;
  j["mu"] = p.mu;
  j["sigma"] = p.sigma;
  json gamma = json::array();
  for (const auto& row : p.gamma) gamma.push_back(row);
  j["gamma"] = gamma;
  j["lambda"] = p.lambda;
  j["beta"] = p.beta;
  j["theta"] = p.theta;
  j["p"] = p.p;
  j["var_mu"] = p.var_mu;
  j["var_lambda"] = p.var_lambda;
  j["var_beta"] = p.var_beta;
  j["var_theta"] = p.var_theta;
  return j;
}

Parameters params_from_json(const json& j) {
  Parameters p;
  p.mu = j.at("mu").get<std::vector<double>>();
  p.sigma = j.at("sigma").get<std::vector<double>>();
  for (const auto& row : j.at("gamma"))
    p.gamma.push_back(row.get<std::vector<std::uint8_t>>());
  p.lambda = j.at("lambda").get<std::vector<std::vector<double>>>();
  p.beta = j.at("beta").get<std::vector<std::vector<double>>>();
  p.theta = j.at("theta").get<std::vector<std::vector<double>>>();
  p.p = j.at("p").get<std::vector<double>>();
  p.var_mu = j.at("var_mu");
  p.var_lambda = j.at("var_lambda");
  p.var_beta = j.at("var_beta");
  p.var_theta = j.at("var_theta");
  return p;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_dataset_csv(const std::filesystem::path& path,
                       const SurvivalDataset& data) {
  std::ostringstream out;
  out << "time,censored,group";
  for (int p = 1; p <= data.n_covariates; ++p) out << ",x" << p;
  out << "\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << format_double(data.time[i]) << ',' << int(data.censored[i]) << ','
        << data.group[i] + 1;
    for (int p = 1; p <= data.n_covariates; ++p)
      out << ',' << format_double(data.x[i][p]);
    out << "\n";
  }
  atomic_write(path, out.str());
}

SurvivalDataset read_dataset_csv(const std::filesystem::path& path,
                                 bool flip_censor) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("empty dataset file " + path.string());
  const std::vector<std::string> header = split_csv_line(line);
  if (header.size() < 4 || header[0] != "time" || header[1] != "censored" ||
      header[2] != "group")
    throw std::runtime_error("dataset header must be time,censored,group,x1..");
  const int n_cov = static_cast<int>(header.size()) - 3;
  for (int p = 0; p < n_cov; ++p)
    if (header[3 + p] != "x" + std::to_string(p + 1))
      throw std::runtime_error("dataset covariate columns must be x1..xP in order");

  SurvivalDataset data;
  data.n_covariates = n_cov;
  int max_group = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != header.size())
      throw std::runtime_error("dataset row has wrong field count: " + line);
    data.time.push_back(parse_double(f[0], "time"));
    const double c = parse_double(f[1], "censor flag");
    if (c != 0.0 && c != 1.0)
      throw std::runtime_error("censor flag must be 0 or 1");
    std::uint8_t flag = static_cast<std::uint8_t>(c);
    if (flip_censor) flag = flag ? 0 : 1;
    data.censored.push_back(flag);
    const double g = parse_double(f[2], "group");
    if (g < 1 || g != static_cast<int>(g))
      throw std::runtime_error("group must be a positive integer");
    data.group.push_back(static_cast<int>(g) - 1);
    max_group = std::max(max_group, static_cast<int>(g));
    std::vector<double> row(n_cov + 1);
    row[0] = 1.0;
    for (int p = 0; p < n_cov; ++p)
      row[p + 1] = parse_double(f[3 + p], "covariate");
    data.x.push_back(std::move(row));
  }
  data.n_groups = max_group;
  data.validate();
  return data;
}

std::vector<std::vector<double>> read_covariate_table(
    const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("empty covariate table " + path.string());
  const std::size_t n_cols = split_csv_line(line).size();
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != n_cols)
      throw std::runtime_error("covariate row has wrong field count: " + line);
    std::vector<double> row;
    for (const auto& s : f) row.push_back(parse_double(s, "covariate"));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("covariate table has no rows");
  return rows;
}

std::vector<MisspecComponent> read_components_csv(
    const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("missing component file " + path.string());
  const std::vector<std::string> header = split_csv_line(line);
  if (header.size() < 2 || header.back() != "sigma")
    throw std::runtime_error("component file header must end with sigma");
  std::vector<MisspecComponent> comps;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != header.size())
      throw std::runtime_error("component row has wrong field count: " + line);
    MisspecComponent c;
    for (std::size_t j = 0; j + 1 < f.size(); ++j)
      c.xi.push_back(parse_double(f[j], "xi"));
    c.sigma = parse_double(f.back(), "sigma");
    comps.push_back(std::move(c));
  }
  if (comps.empty()) throw std::runtime_error("component file has no rows");
  return comps;
}

void write_draws(const std::filesystem::path& path, const PosteriorDraws& draws) {
  std::ostringstream out;
  json header;
  header["format"] = "mcure-draws";
  header["version"] = 1;
  header["link"] = link_to_json(draws.link);
  header["n_covariates"] = draws.n_covariates;
  header["n_groups"] = draws.n_groups;
  header["n_draws"] = draws.draws.size();
  json acc = json::array();
  for (const auto& a : draws.acceptance)
    acc.push_back({{"block", a.block}, {"rate", a.rate}, {"step", a.step}});
  header["acceptance"] = acc;
  out << header.dump() << "\n";
  for (std::size_t b = 0; b < draws.draws.size(); ++b) {
    json rec = params_to_json(draws.draws[b]);
    rec["log_lik"] = draws.log_lik[b];
    out << rec.dump() << "\n";
  }
  atomic_write(path, out.str());
}

PosteriorDraws read_draws(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("empty draws file " + path.string());
  const json header = json::parse(line);
  if (header.at("format") != "mcure-draws" || header.at("version") != 1)
    throw std::runtime_error("unsupported draws format in " + path.string());

  PosteriorDraws draws;
  draws.link = link_from_json(header.at("link"));
  draws.n_covariates = header.at("n_covariates");
  draws.n_groups = header.at("n_groups");
  for (const auto& a : header.at("acceptance"))
    draws.acceptance.push_back({a.at("block"), a.at("rate"), a.at("step")});
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json rec = json::parse(line);
    draws.draws.push_back(params_from_json(rec));
    draws.log_lik.push_back(rec.at("log_lik"));
  }
  if (draws.draws.size() != header.at("n_draws"))
    throw std::runtime_error("draw count does not match header in " +
                             path.string());
  return draws;
}

void write_ground_truth(const std::filesystem::path& path,
                        const GroundTruth& truth) {
  json j;
  j["n_gen_covariates"] = truth.n_gen_covariates;
  j["lambda0"] = truth.lambda0;
  j["beta0"] = truth.beta0;
  json gamma = json::array();
  for (const auto& row : truth.gamma0) gamma.push_back(row);
  j["gamma0"] = gamma;
  j["mu0"] = truth.mu0;
  j["sigma0"] = truth.sigma0;
  j["xi"] = truth.xi;
  j["offset"] = truth.offset;
  j["susceptible_prob"] = truth.susceptible_prob;
  j["cured"] = truth.cured;
  j["latent_time"] = truth.latent_time;
  j["censor_time"] = truth.censor_time;
  atomic_write(path, j.dump(2) + "\n");
}

GroundTruth read_ground_truth(const std::filesystem::path& path) {
  const json j = json::parse(read_file(path));
  GroundTruth t;
  t.n_gen_covariates = j.at("n_gen_covariates");
  t.lambda0 = j.at("lambda0").get<std::vector<std::vector<double>>>();
  t.beta0 = j.at("beta0").get<std::vector<std::vector<double>>>();
  for (const auto& row : j.at("gamma0"))
    t.gamma0.push_back(row.get<std::vector<std::uint8_t>>());
  t.mu0 = j.at("mu0").get<std::vector<double>>();
  t.sigma0 = j.at("sigma0").get<std::vector<double>>();
  t.xi = j.at("xi").get<std::vector<std::vector<double>>>();
  t.offset = j.at("offset");
  t.susceptible_prob = j.at("susceptible_prob").get<std::vector<double>>();
  t.cured = j.at("cured").get<std::vector<std::uint8_t>>();
  t.latent_time = j.at("latent_time").get<std::vector<double>>();
  t.censor_time = j.at("censor_time").get<std::vector<double>>();
  return t;
}

void write_kselect_report(const std::filesystem::path& path,
                          const KSelectionReport& report) {
  json j;
  j["candidates"] = report.candidates;
  j["predictive"] = report.predictive;
  j["chosen"] = report.chosen;
  j["train_index"] = report.train_index;
  j["test_index"] = report.test_index;
  j["seed"] = report.seed;
  j["train_fraction"] = report.train_fraction;
  atomic_write(path, j.dump(2) + "\n");
}

KSelectionReport read_kselect_report(const std::filesystem::path& path) {
  const json j = json::parse(read_file(path));
  KSelectionReport r;
  r.candidates = j.at("candidates").get<std::vector<int>>();
  // Failed fits are recorded as -inf, which JSON renders as null.
  for (const auto& v : j.at("predictive"))
    r.predictive.push_back(v.is_null()
                               ? -std::numeric_limits<double>::infinity()
                               : v.get<double>());
  r.chosen = j.at("chosen");
  r.train_index = j.at("train_index").get<std::vector<int>>();
  r.test_index = j.at("test_index").get<std::vector<int>>();
  r.seed = j.at("seed");
  r.train_fraction = j.at("train_fraction");
  return r;
}

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  json j;
  j["artifact_version"] = kArtifactVersion;
  j["command"] = manifest.command;
  j["config"] = json::parse(manifest.config_json);
  j["seed"] = manifest.seed;
  j["inputs"] = manifest.inputs;
  j["outputs"] = manifest.outputs;
  j["duration_seconds"] = manifest.duration_seconds;
  atomic_write(path, j.dump(2) + "\n");
}

void write_table_csv(const std::filesystem::path& path, const Table& table) {
  std::ostringstream out;
  for (std::size_t j = 0; j < table.header.size(); ++j)
    out << (j ? "," : "") << table.header[j];
  out << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t j = 0; j < row.size(); ++j)
      out << (j ? "," : "") << format_double(row[j]);
    out << "\n";
  }
  atomic_write(path, out.str());
}

}  // namespace mcure::io
