#include "bnpood/model_io.hpp"

#include <fstream>
#include <json.hpp>

#include "bnpood/errors.hpp"
#include "bnpood/scoring.hpp"

namespace bnpood::model_io {

namespace {

using nlohmann::json;

json to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::VectorXd vector_from_json(const json& a) {
  Eigen::VectorXd v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
  return v;
}

Eigen::MatrixXd matrix_from_json(const json& rows) {
  if (rows.empty()) return {};
  Eigen::MatrixXd m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size())
      throw IoError("model file: ragged matrix");
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[i][j].get<double>();
  }
  return m;
}

json whitener_to_json(const Whitener& w) {
  json j;
  j["mean"] = to_json(w.mean);
  j["basis"] = to_json(w.basis);
  j["lambda_inv_sqrt"] = to_json(w.lambda_inv_sqrt);
  j["rotation"] = to_json(w.rotation);
  j["sigma_sq"] = to_json(w.sigma_sq);
  j["retained"] = w.retained;
  return j;
}

Whitener whitener_from_json(const json& j) {
  Whitener w;
  w.mean = vector_from_json(j.at("mean"));
  w.basis = matrix_from_json(j.at("basis"));
  w.lambda_inv_sqrt = vector_from_json(j.at("lambda_inv_sqrt"));
  w.rotation = matrix_from_json(j.at("rotation"));
  w.sigma_sq = vector_from_json(j.at("sigma_sq"));
  w.retained = j.at("retained").get<Eigen::Index>();
  return w;
}

json base_document(const std::string& variant,
                   const std::vector<double>& counts,
                   const std::optional<Whitener>& whitener) {
  json j;
  j["format"] = "bnpood-model";
  j["version"] = 1;
  j["variant"] = variant;
  j["counts"] = counts;
  if (whitener) j["whitener"] = whitener_to_json(*whitener);
  return j;
}

void write_document(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << j.dump(1) << "\n";
  if (!out) throw IoError("write failed for '" + path + "'");
}

json read_document(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw IoError(path + ": malformed model JSON: " + e.what());
  }
  if (j.value("format", "") != "bnpood-model")
    throw IoError(path + ": not a model file");
  return j;
}

}  // namespace

void save_tied(const std::string& path, const TiedModel& model,
               const std::optional<Whitener>& whitener) {
  json j = base_document("tied", model.class_counts(), whitener);
  j["hyperparameters"] = {{"mu0", to_json(model.hyper().mu0)},
                          {"sigma0", to_json(model.hyper().sigma0)},
                          {"sigma", to_json(model.hyper().sigma)}};
  Eigen::MatrixXd means(model.num_classes(), model.hyper().mu0.size());
  for (int k = 0; k < model.num_classes(); ++k)
    means.row(k) = model.posterior_mean(k).transpose();
  j["posterior"] = {{"mean", to_json(means)}};
  write_document(path, j);
}

void save_full(const std::string& path, const FullModel& model,
               const std::optional<Whitener>& whitener) {
  json j = base_document("full", model.class_counts(), whitener);
  j["hyperparameters"] = {{"nu0", model.hyper().nu0},
                          {"kappa0", model.hyper().kappa0},
                          {"mu0", to_json(model.hyper().mu0)},
                          {"sigma0", to_json(model.hyper().sigma0)}};
  json psis = json::array();
  for (const auto& psi : model.posterior().psi) psis.push_back(to_json(psi));
  j["posterior"] = {{"nu", model.posterior().nu},
                    {"kappa", model.posterior().kappa},
                    {"mean", to_json(model.posterior().mu)},
                    {"psi", std::move(psis)}};
  write_document(path, j);
}

void save_diag(const std::string& path, const DiagModel& model,
               const std::optional<Whitener>& whitener) {
  json j = base_document("diag", model.class_counts(), whitener);
  j["hyperparameters"] = {{"nu0", to_json(model.hyper().nu0)},
                          {"kappa0", to_json(model.hyper().kappa0)},
                          {"mu0", to_json(model.hyper().mu0)},
                          {"sigma0_sq", to_json(model.hyper().sigma0_sq)}};
  j["posterior"] = {{"nu", to_json(model.posterior().nu)},
                    {"kappa", to_json(model.posterior().kappa)},
                    {"mean", to_json(model.posterior().mu)},
                    {"sigma_sq", to_json(model.posterior().sigma_sq)}};
  write_document(path, j);
}

void save_coupled(const std::string& path, const CoupledModel& model,
                  const std::optional<Whitener>& whitener) {
  json j = base_document("coupled", model.class_counts(), whitener);
  j["hyperparameters"] = {{"nu0", to_json(model.hyper().nix.nu0)},
                          {"kappa0", to_json(model.hyper().nix.kappa0)},
                          {"mu0", to_json(model.hyper().nix.mu0)},
                          {"sigma0_sq", to_json(model.hyper().nix.sigma0_sq)},
                          {"alpha0", model.hyper().alpha0}};
  j["grid"] = {{"nodes", to_json(model.grid().nodes)},
               {"log_weight", to_json(model.grid().log_weight)}};
  json sigmas = json::array();
  for (const auto& s : model.posterior().sigma_sq) sigmas.push_back(to_json(s));
  j["posterior"] = {{"nu", to_json(model.posterior().nu)},
                    {"kappa", to_json(model.posterior().kappa)},
                    {"mean", to_json(model.posterior().mu)},
                    {"sigma_sq", std::move(sigmas)},
                    {"log_weight", to_json(model.posterior().log_weight)}};
  write_document(path, j);
}

void save_baseline(const std::string& path, const std::string& variant,
                   const EmpiricalMoments& moments,
                   const std::optional<Whitener>& whitener) {
  if (variant != "mds" && variant != "rmds" && variant != "irmds")
    throw IoError("save_baseline: unknown variant '" + variant + "'");
  json j = base_document(variant, moments.count, whitener);
  j["hyperparameters"] = {{"mu0", to_json(moments.mu0)},
                          {"sigma0", to_json(moments.sigma0)},
                          {"sigma", to_json(moments.sigma_within)}};
  json post = {{"mean", to_json(moments.class_mean)}};
  if (variant == "irmds") {
    json covs = json::array();
    for (const auto& c : moments.class_cov) covs.push_back(to_json(c));
    post["cov"] = std::move(covs);
  }
  j["posterior"] = std::move(post);
  write_document(path, j);
}

double LoadedModel::mean_count() const {
  double t = 0.0;
  for (double c : counts) t += c;
  return t / static_cast<double>(counts.size());
}

double LoadedModel::score(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd z = whitener ? apply_whitener(*whitener, x) : x;
  if (dpmm) return dpmm_score(*dpmm, z);
  if (variant == "mds") return baseline->mds_score(z);
  if (variant == "rmds") return baseline->rmds_score(z);
  return baseline->independent_rmds_score(z);
}

int LoadedModel::classify(const Eigen::VectorXd& x, bool count_weighted) const {
  const Eigen::VectorXd z = whitener ? apply_whitener(*whitener, x) : x;
  if (dpmm) return bnpood::classify(*dpmm, z, count_weighted);
  return baseline->classify(z);
}

LoadedModel load_model(const std::string& path) {
  const json j = read_document(path);
  LoadedModel m;
  m.variant = j.at("variant").get<std::string>();
  m.counts = j.at("counts").get<std::vector<double>>();
  if (j.contains("whitener")) m.whitener = whitener_from_json(j["whitener"]);

  const json& h = j.at("hyperparameters");
  const json& p = j.at("posterior");
  if (m.variant == "tied") {
    TiedModel::Hyper hyper;
    hyper.mu0 = vector_from_json(h.at("mu0"));
    hyper.sigma0 = matrix_from_json(h.at("sigma0"));
    hyper.sigma = matrix_from_json(h.at("sigma"));
    m.dpmm = std::make_unique<TiedModel>(std::move(hyper), m.counts,
                                         matrix_from_json(p.at("mean")));
  } else if (m.variant == "full") {
    NiwHyper hyper;
    hyper.nu0 = h.at("nu0").get<double>();
    hyper.kappa0 = h.at("kappa0").get<double>();
    hyper.mu0 = vector_from_json(h.at("mu0"));
    hyper.sigma0 = matrix_from_json(h.at("sigma0"));
    NiwPosterior post;
    post.nu = p.at("nu").get<std::vector<double>>();
    post.kappa = p.at("kappa").get<std::vector<double>>();
    post.mu = matrix_from_json(p.at("mean"));
    for (const auto& psi : p.at("psi")) post.psi.push_back(matrix_from_json(psi));
    m.dpmm = std::make_unique<FullModel>(std::move(hyper), std::move(post),
                                         m.counts);
  } else if (m.variant == "diag") {
    NixHyper hyper;
    hyper.nu0 = vector_from_json(h.at("nu0"));
    hyper.kappa0 = vector_from_json(h.at("kappa0"));
    hyper.mu0 = vector_from_json(h.at("mu0"));
    hyper.sigma0_sq = vector_from_json(h.at("sigma0_sq"));
    NixPosterior post;
    post.nu = matrix_from_json(p.at("nu"));
    post.kappa = matrix_from_json(p.at("kappa"));
    post.mu = matrix_from_json(p.at("mean"));
    post.sigma_sq = matrix_from_json(p.at("sigma_sq"));
    m.dpmm = std::make_unique<DiagModel>(std::move(hyper), std::move(post),
                                         m.counts);
  } else if (m.variant == "coupled") {
    CoupledHyper hyper;
    hyper.nix.nu0 = vector_from_json(h.at("nu0"));
    hyper.nix.kappa0 = vector_from_json(h.at("kappa0"));
    hyper.nix.mu0 = vector_from_json(h.at("mu0"));
    hyper.nix.sigma0_sq = vector_from_json(h.at("sigma0_sq"));
    hyper.alpha0 = h.at("alpha0").get<double>();
    GammaGrid grid;
    grid.nodes = vector_from_json(j.at("grid").at("nodes"));
    grid.log_weight = vector_from_json(j.at("grid").at("log_weight"));
    CoupledPosterior post;
    post.nu = matrix_from_json(p.at("nu"));
    post.kappa = matrix_from_json(p.at("kappa"));
    post.mu = matrix_from_json(p.at("mean"));
    for (const auto& s : p.at("sigma_sq"))
      post.sigma_sq.push_back(matrix_from_json(s));
    post.log_weight = matrix_from_json(p.at("log_weight"));
    m.dpmm = std::make_unique<CoupledModel>(std::move(hyper), std::move(grid),
                                            std::move(post), m.counts);
  } else if (m.variant == "mds" || m.variant == "rmds" ||
             m.variant == "irmds") {
    EmpiricalMoments moments;
    moments.mu0 = vector_from_json(h.at("mu0"));
    moments.sigma0 = matrix_from_json(h.at("sigma0"));
    moments.sigma_within = matrix_from_json(h.at("sigma"));
    moments.class_mean = matrix_from_json(p.at("mean"));
    moments.count = m.counts;
    if (m.variant == "irmds")
      for (const auto& c : p.at("cov"))
        moments.class_cov.push_back(matrix_from_json(c));
    m.baseline =
        std::make_unique<MahalanobisModel>(moments, m.variant == "irmds");
  } else {
    throw IoError(path + ": unknown model variant '" + m.variant + "'");
  }
  return m;
}

}  // namespace bnpood::model_io
