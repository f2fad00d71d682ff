#ifndef BNPOOD_IO_HPP
#define BNPOOD_IO_HPP

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "bnpood/data.hpp"

namespace bnpood::io {

// Binary embedding format: "BNPE", u32 version=1, u64 N, u64 D, then N*D
// little-endian float64 row-major.
void save_embeddings(const std::string& path, const Eigen::MatrixXd& X);
Eigen::MatrixXd load_embeddings(const std::string& path);

// Labels: "BNPL", u32 version=1, u64 N, then N little-endian u32.
void save_labels(const std::string& path, const std::vector<int>& y);
std::vector<int> load_labels(const std::string& path);

// CSV: optional header, D float columns then an integer label column.
EmbeddingDataset load_dataset_csv(const std::string& path);

// Convenience loaders; num_classes inferred as max(label)+1 when not given.
EmbeddingDataset load_dataset(const std::string& path_x,
                              const std::string& path_y,
                              std::optional<int> num_classes = std::nullopt);

struct ScoreRow {
  std::size_t index = 0;
  double score = 0.0;
  std::optional<double> inlier_prob;
  std::optional<int> predicted_class;
};

// "index,score[,inlier_prob][,predicted_class]"; floats with 17 significant
// digits so round-trips are exact.
void save_scores(const std::string& path, const std::vector<ScoreRow>& rows);
std::vector<double> load_score_column(const std::string& path);

std::string format_double(double v);

}  // namespace bnpood::io

#endif
