#ifndef BNPOOD_MODEL_IO_HPP
#define BNPOOD_MODEL_IO_HPP

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bnpood/baselines.hpp"
#include "bnpood/coupled.hpp"
#include "bnpood/diag.hpp"
#include "bnpood/full.hpp"
#include "bnpood/preprocess.hpp"
#include "bnpood/scoring.hpp"
#include "bnpood/tied.hpp"

namespace bnpood::model_io {

// Model files are JSON: {variant, hyperparameters, per-class posterior
// arrays (row-major), counts, optional whitener}.
void save_tied(const std::string& path, const TiedModel& model,
               const std::optional<Whitener>& whitener = std::nullopt);
void save_full(const std::string& path, const FullModel& model,
               const std::optional<Whitener>& whitener = std::nullopt);
void save_diag(const std::string& path, const DiagModel& model,
               const std::optional<Whitener>& whitener = std::nullopt);
void save_coupled(const std::string& path, const CoupledModel& model,
                  const std::optional<Whitener>& whitener = std::nullopt);
// mds / rmds / irmds share one representation built on the sample moments.
void save_baseline(const std::string& path, const std::string& variant,
                   const EmpiricalMoments& moments,
                   const std::optional<Whitener>& whitener = std::nullopt);

// A deserialized model of any variant, scoring through the right rule.
struct LoadedModel {
  std::string variant;
  std::unique_ptr<PredictiveModel> dpmm;          // tied/full/diag/coupled
  std::unique_ptr<MahalanobisModel> baseline;     // mds/rmds/irmds
  std::optional<Whitener> whitener;
  std::vector<double> counts;

  bool is_dpmm() const { return dpmm != nullptr; }
  double mean_count() const;
  // Applies the stored whitener (when present) before scoring.
  double score(const Eigen::VectorXd& x) const;
  int classify(const Eigen::VectorXd& x, bool count_weighted = true) const;
};

LoadedModel load_model(const std::string& path);

}  // namespace bnpood::model_io

#endif
