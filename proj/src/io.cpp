#include "bnpood/io.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "bnpood/errors.hpp"

namespace bnpood::io {

namespace {

constexpr std::uint32_t kFormatVersion = 1;

void write_bytes(std::ofstream& out, const void* p, std::size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void read_bytes(std::ifstream& in, void* p, std::size_t n,
                const std::string& path) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n)
    throw IoError(path + ": payload size mismatch");
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

void check_magic(std::ifstream& in, const char expect[4],
                 const std::string& path) {
  char magic[4];
  read_bytes(in, magic, 4, path);
  if (std::memcmp(magic, expect, 4) != 0)
    throw IoError(path + ": malformed header (bad magic)");
  std::uint32_t version = 0;
  read_bytes(in, &version, sizeof version, path);
  if (version != kFormatVersion)
    throw IoError(path + ": unsupported format version " +
                  std::to_string(version));
}

}  // namespace

void save_embeddings(const std::string& path, const Eigen::MatrixXd& X) {
  auto out = open_output(path);
  write_bytes(out, "BNPE", 4);
  write_bytes(out, &kFormatVersion, sizeof kFormatVersion);
  const std::uint64_t n = static_cast<std::uint64_t>(X.rows());
  const std::uint64_t d = static_cast<std::uint64_t>(X.cols());
  write_bytes(out, &n, sizeof n);
  write_bytes(out, &d, sizeof d);
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      const double v = X(i, j);
      write_bytes(out, &v, sizeof v);
    }
  if (!out) throw IoError("write failed for '" + path + "'");
}

Eigen::MatrixXd load_embeddings(const std::string& path) {
  auto in = open_input(path);
  check_magic(in, "BNPE", path);
  std::uint64_t n = 0, d = 0;
  read_bytes(in, &n, sizeof n, path);
  read_bytes(in, &d, sizeof d, path);
  Eigen::MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::uint64_t i = 0; i < n; ++i)
    for (std::uint64_t j = 0; j < d; ++j) {
      double v = 0.0;
      read_bytes(in, &v, sizeof v, path);
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  char extra;
  if (in.read(&extra, 1) && in.gcount() == 1)
    throw IoError(path + ": payload size mismatch (trailing bytes)");
  return X;
}

void save_labels(const std::string& path, const std::vector<int>& y) {
  auto out = open_output(path);
  write_bytes(out, "BNPL", 4);
  write_bytes(out, &kFormatVersion, sizeof kFormatVersion);
  const std::uint64_t n = y.size();
  write_bytes(out, &n, sizeof n);
  for (int label : y) {
    if (label < 0) throw IoError("labels must be non-negative");
    const std::uint32_t v = static_cast<std::uint32_t>(label);
    write_bytes(out, &v, sizeof v);
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

std::vector<int> load_labels(const std::string& path) {
  auto in = open_input(path);
  check_magic(in, "BNPL", path);
  std::uint64_t n = 0;
  read_bytes(in, &n, sizeof n, path);
  std::vector<int> y(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    std::uint32_t v = 0;
    read_bytes(in, &v, sizeof v, path);
    y[i] = static_cast<int>(v);
  }
  char extra;
  if (in.read(&extra, 1) && in.gcount() == 1)
    throw IoError(path + ": payload size mismatch (trailing bytes)");
  return y;
}

EmbeddingDataset load_dataset_csv(const std::string& path) {
  auto in = open_input(path);
  std::string line;
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  bool first = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::stringstream ss(line);
    std::string tok;
    std::vector<std::string> toks;
    while (std::getline(ss, tok, ',')) toks.push_back(tok);
    if (first) {
      first = false;
      // Header row iff the first token does not parse as a number.
      char* end = nullptr;
      std::strtod(toks[0].c_str(), &end);
      if (end == toks[0].c_str()) continue;
    }
    if (toks.size() < 2)
      throw IoError(path + ": line " + std::to_string(line_no) +
                    " needs at least one feature and a label");
    std::vector<double> row;
    row.reserve(toks.size() - 1);
    for (std::size_t j = 0; j + 1 < toks.size(); ++j) {
      char* end = nullptr;
      const double v = std::strtod(toks[j].c_str(), &end);
      if (end == toks[j].c_str())
        throw IoError(path + ": line " + std::to_string(line_no) +
                      ": bad numeric field '" + toks[j] + "'");
      row.push_back(v);
    }
    char* end = nullptr;
    const long label = std::strtol(toks.back().c_str(), &end, 10);
    if (end == toks.back().c_str())
      throw IoError(path + ": line " + std::to_string(line_no) +
                    ": bad label field '" + toks.back() + "'");
    if (!rows.empty() && row.size() != rows.front().size())
      throw IoError(path + ": line " + std::to_string(line_no) +
                    ": dimension mismatch");
    rows.push_back(std::move(row));
    labels.push_back(static_cast<int>(label));
  }
  if (rows.empty()) throw IoError(path + ": no data rows");
  EmbeddingDataset ds;
  ds.X.resize(static_cast<Eigen::Index>(rows.size()),
              static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      ds.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[i][j];
  ds.y = std::move(labels);
  ds.num_classes = 1 + *std::max_element(ds.y.begin(), ds.y.end());
  ds.validate();
  return ds;
}

EmbeddingDataset load_dataset(const std::string& path_x,
                              const std::string& path_y,
                              std::optional<int> num_classes) {
  EmbeddingDataset ds;
  ds.X = load_embeddings(path_x);
  ds.y = load_labels(path_y);
  if (ds.y.empty()) throw IoError(path_y + ": empty label file");
  ds.num_classes =
      num_classes ? *num_classes
                  : 1 + *std::max_element(ds.y.begin(), ds.y.end());
  ds.validate();
  return ds;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void save_scores(const std::string& path, const std::vector<ScoreRow>& rows) {
  auto out = open_output(path);
  const bool with_prob =
      !rows.empty() && rows.front().inlier_prob.has_value();
  const bool with_class =
      !rows.empty() && rows.front().predicted_class.has_value();
  out << "index,score";
  if (with_prob) out << ",inlier_prob";
  if (with_class) out << ",predicted_class";
  out << "\n";
  for (const auto& r : rows) {
    out << r.index << ',' << format_double(r.score);
    if (with_prob) out << ',' << format_double(r.inlier_prob.value_or(0.0));
    if (with_class) out << ',' << r.predicted_class.value_or(-1);
    out << "\n";
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

std::vector<double> load_score_column(const std::string& path) {
  auto in = open_input(path);
  std::string line;
  std::vector<double> scores;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::vector<std::string> toks;
    while (std::getline(ss, tok, ',')) toks.push_back(tok);
    if (toks.size() < 2) throw IoError(path + ": malformed score row");
    if (first) {
      first = false;
      char* end = nullptr;
      std::strtod(toks[1].c_str(), &end);
      if (end == toks[1].c_str()) continue;  // header
    }
    scores.push_back(std::strtod(toks[1].c_str(), nullptr));
  }
  if (scores.empty()) throw IoError(path + ": no score rows");
  return scores;
}

}  // namespace bnpood::io
