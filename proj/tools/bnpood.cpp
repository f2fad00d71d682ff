// Command-line front end: preprocess | fit | score | eval | synth |
// fm-analysis. Every subcommand writes its primary output plus a
// "<output>.manifest.json" sidecar recording the command, flags, input
// digests, seed and version.

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bnpood/baselines.hpp"
#include "bnpood/coupled.hpp"
#include "bnpood/data.hpp"
#include "bnpood/diag.hpp"
#include "bnpood/errors.hpp"
#include "bnpood/eval.hpp"
#include "bnpood/full.hpp"
#include "bnpood/io.hpp"
#include "bnpood/model_io.hpp"
#include "bnpood/preprocess.hpp"
#include "bnpood/synthetic.hpp"
#include "bnpood/threading.hpp"
#include "bnpood/tied.hpp"
#include "bnpood/version.hpp"

namespace {

using nlohmann::json;
using namespace bnpood;

constexpr int kExitOk = 0;
constexpr int kExitInputError = 2;
constexpr int kExitNumericalError = 3;

std::string fnv1a_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for digest");
  std::uint64_t h = 1469598103934665603ULL;
  char buf[8192];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
    if (in.eof()) break;
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(h));
  return hex;
}

class ManifestWriter {
 public:
  ManifestWriter(std::string command)
      : command_(std::move(command)),
        start_(std::chrono::steady_clock::now()) {}

  void flag(const std::string& name, const json& value) {
    flags_[name] = value;
  }
  void input(const std::string& path) { inputs_[path] = fnv1a_digest(path); }
  void seed(std::uint64_t s) { seed_ = s; }

  void write(const std::string& output_path) const {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      start_)
            .count();
    json j;
    j["command"] = command_;
    j["flags"] = flags_;
    j["inputs"] = inputs_;
    if (seed_) j["seed"] = *seed_;
    j["version"] = BNPOOD_VERSION;
    j["wall_time_seconds"] = secs;
    std::ofstream out(output_path + ".manifest.json", std::ios::binary);
    if (!out)
      throw IoError("cannot write manifest for '" + output_path + "'");
    out << j.dump(1) << "\n";
  }

 private:
  std::string command_;
  std::map<std::string, json> flags_;
  std::map<std::string, std::string> inputs_;
  std::optional<std::uint64_t> seed_;
  std::chrono::steady_clock::time_point start_;
};

int resolve_threads(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("BNP_OOD_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return default_thread_count();
}

std::vector<double> parse_value_list(const std::string& csv) {
  std::vector<double> values;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    values.push_back(std::strtod(tok.c_str(), nullptr));
  }
  if (values.empty()) throw DomainError("empty value list '" + csv + "'");
  return values;
}

// ---------------------------------------------------------------------------

struct PreprocessArgs {
  std::string input, labels, out;
  double eig_threshold = 1e-7;
  int dims = 0;
};

int run_preprocess(const PreprocessArgs& a) {
  ManifestWriter manifest("preprocess");
  manifest.input(a.input);
  manifest.input(a.labels);
  manifest.flag("eig-threshold", a.eig_threshold);
  if (a.dims > 0) manifest.flag("dims", a.dims);

  EmbeddingDataset ds = io::load_dataset(a.input, a.labels);
  std::optional<Eigen::Index> keep;
  if (a.dims > 0) keep = a.dims;
  const Whitener w = fit_whitener(ds, a.eig_threshold, keep);
  io::save_embeddings(a.out, apply_whitener(w, ds.X));
  manifest.write(a.out);
  std::cout << "retained " << w.retained << " of " << ds.dim()
            << " dimensions\n";
  return kExitOk;
}

struct FitArgs {
  std::string model, input, labels, out;
  bool whiten = false;
  double eig_threshold = 1e-7;
  int dims = 0;
  int max_iters = 200;
  double tol = 1e-6;
  int gamma_grid_size = 100;
  int threads = 0;
};

int run_fit(const FitArgs& a) {
  static const std::vector<std::string> known{
      "tied", "full", "diag", "coupled", "mds", "rmds", "irmds"};
  if (std::find(known.begin(), known.end(), a.model) == known.end())
    throw DomainError("unknown model '" + a.model + "'");

  ManifestWriter manifest("fit");
  manifest.input(a.input);
  manifest.input(a.labels);
  manifest.flag("model", a.model);
  manifest.flag("whiten", a.whiten);
  manifest.flag("max-iters", a.max_iters);
  manifest.flag("tol", a.tol);
  if (a.model == "coupled") manifest.flag("gamma-grid-size", a.gamma_grid_size);
  if (a.dims > 0) manifest.flag("dims", a.dims);

  EmbeddingDataset ds = io::load_dataset(a.input, a.labels);
  std::optional<Whitener> whitener;
  if (a.whiten) {
    std::optional<Eigen::Index> keep;
    if (a.dims > 0) keep = a.dims;
    whitener = fit_whitener(ds, a.eig_threshold, keep);
    ds.X = apply_whitener(*whitener, ds.X);
  }

  const ClassStats stats = compute_class_stats(ds);
  const EmpiricalMoments moments = compute_empirical_moments(ds);

  if (a.model == "tied") {
    model_io::save_tied(a.out, fit_tied(moments, stats), whitener);
  } else if (a.model == "full") {
    EmOptions opts;
    opts.max_iters = a.max_iters;
    opts.tol = a.tol;
    const FullFit fit = em_fit_full(stats, moments, opts);
    model_io::save_full(a.out, FullModel(fit.hyper, fit.posterior, stats.count),
                        whitener);
    if (!fit.trace.converged)
      std::cerr << "warning: EM did not converge in " << a.max_iters
                << " iterations\n";
  } else if (a.model == "diag") {
    EmOptions opts;
    opts.max_iters = a.max_iters;
    opts.tol = a.tol;
    const DiagFit fit = em_fit_diag(stats, moments, opts);
    model_io::save_diag(a.out, DiagModel(fit.hyper, fit.posterior, stats.count),
                        whitener);
    if (!fit.trace.converged)
      std::cerr << "warning: EM did not converge in " << a.max_iters
                << " iterations\n";
  } else if (a.model == "coupled") {
    CoupledEmOptions opts;
    opts.max_iters = a.max_iters;
    opts.tol = a.tol;
    opts.grid_size = a.gamma_grid_size;
    const CoupledFit fit = em_fit_coupled(stats, moments, opts);
    model_io::save_coupled(
        a.out, CoupledModel(fit.hyper, fit.grid, fit.posterior, stats.count),
        whitener);
    if (!fit.trace.converged)
      std::cerr << "warning: EM did not converge in " << a.max_iters
                << " iterations\n";
  } else if (a.model == "mds" || a.model == "rmds" || a.model == "irmds") {
    if (a.model == "irmds")
      MahalanobisModel(moments, true);  // validates class covariances now
    model_io::save_baseline(a.out, a.model, moments, whitener);
  } else {
    throw DomainError("unknown model '" + a.model + "'");
  }
  manifest.write(a.out);
  std::cout << "wrote " << a.out << " (variant " << a.model << ")\n";
  return kExitOk;
}

struct ScoreArgs {
  std::string model, input, out;
  double alpha = 1.0;
  bool with_prob = false;
  bool with_class = false;
  bool unweighted_classes = false;
  int threads = 0;
};

int run_score(const ScoreArgs& a) {
  ManifestWriter manifest("score");
  manifest.input(a.model);
  manifest.input(a.input);
  manifest.flag("alpha", a.alpha);
  manifest.flag("prob", a.with_prob);
  manifest.flag("classes", a.with_class);

  const model_io::LoadedModel model = model_io::load_model(a.model);
  const Eigen::MatrixXd X = io::load_embeddings(a.input);
  std::vector<io::ScoreRow> rows(static_cast<std::size_t>(X.rows()));
  const bool emit_class = a.with_class || a.unweighted_classes;
  const int threads = resolve_threads(a.threads);
  parallel_for(rows.size(), threads, [&](std::size_t i) {
    const Eigen::VectorXd x = X.row(static_cast<Eigen::Index>(i)).transpose();
    io::ScoreRow& row = rows[i];
    row.index = i;
    row.score = model.score(x);
    if (a.with_prob && model.is_dpmm())
      row.inlier_prob = inlier_probability_from_score(row.score, a.alpha,
                                                      model.mean_count());
    if (emit_class)
      row.predicted_class = model.classify(x, !a.unweighted_classes);
  });
  io::save_scores(a.out, rows);
  manifest.write(a.out);
  std::cout << "scored " << rows.size() << " samples -> " << a.out << "\n";
  return kExitOk;
}

struct EvalArgs {
  std::string scores_in, scores_out, out;
};

int run_eval(const EvalArgs& a) {
  ManifestWriter manifest("eval");
  manifest.input(a.scores_in);
  manifest.input(a.scores_out);

  const std::vector<double> s_in = io::load_score_column(a.scores_in);
  const std::vector<double> s_out = io::load_score_column(a.scores_out);
  const double auroc = eval::auroc(s_in, s_out);
  std::cout << "AUROC " << io::format_double(auroc) << " (n_in "
            << s_in.size() << ", n_out " << s_out.size() << ")\n";
  if (!a.out.empty()) {
    json j;
    j["auroc"] = auroc;
    j["n_in"] = s_in.size();
    j["n_out"] = s_out.size();
    std::ofstream out(a.out, std::ios::binary);
    if (!out) throw IoError("cannot open '" + a.out + "' for writing");
    out << j.dump(1) << "\n";
    manifest.write(a.out);
  }
  return kExitOk;
}

struct SynthArgs {
  std::string sweep, methods = "tied,full,diag,coupled,rmds";
  std::string out;
  int nk = 20;
  double nu0 = 4.0;
  int d = 2;
  int k = 10;
  double kappa0 = 0.05;
  int seeds = 20;
  std::uint64_t seed = 0;
  int gamma_grid_size = 100;
  int threads = 0;
};

int run_synth(const SynthArgs& a) {
  ManifestWriter manifest("synth");
  manifest.flag("sweep", a.sweep);
  manifest.flag("methods", a.methods);
  manifest.flag("nk", a.nk);
  manifest.flag("nu0", a.nu0);
  manifest.flag("d", a.d);
  manifest.flag("k", a.k);
  manifest.flag("kappa0", a.kappa0);
  manifest.flag("seeds", a.seeds);
  manifest.seed(a.seed);

  const auto eq = a.sweep.find('=');
  if (eq == std::string::npos)
    throw DomainError("--sweep must look like nu0=2,4,8 or nk=20,80,320");
  synthetic::SweepSpec spec;
  spec.param = a.sweep.substr(0, eq);
  spec.values = parse_value_list(a.sweep.substr(eq + 1));
  spec.n_seeds = a.seeds;
  spec.coupled_grid_size = a.gamma_grid_size;
  spec.base.dim = a.d;
  spec.base.num_classes = a.k;
  spec.base.n_per_class = a.nk;
  spec.base.nu0 = a.nu0;
  spec.base.kappa0 = a.kappa0;
  spec.base.seed = a.seed;

  std::stringstream ss(a.methods);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) spec.methods.push_back(synthetic::method_from_string(tok));

  const auto rows = synthetic::run_sweep(spec, resolve_threads(a.threads));
  synthetic::save_sweep_csv(a.out, rows);
  manifest.write(a.out);
  std::cout << "wrote " << rows.size() << " sweep rows -> " << a.out << "\n";
  return kExitOk;
}

struct FmArgs {
  std::string input, labels, out;
  int null_pairs = 1000;
  std::uint64_t seed = 0;
  int dims = 0;
  double eig_threshold = 1e-7;
};

int run_fm(const FmArgs& a) {
  ManifestWriter manifest("fm-analysis");
  manifest.input(a.input);
  manifest.input(a.labels);
  manifest.flag("null-pairs", a.null_pairs);
  if (a.dims > 0) manifest.flag("dims", a.dims);
  manifest.seed(a.seed);

  EmbeddingDataset ds = io::load_dataset(a.input, a.labels);
  if (a.dims > 0) {
    const Whitener w = fit_whitener(ds, a.eig_threshold, a.dims);
    ds.X = apply_whitener(w, ds.X);
  }
  const EmpiricalMoments moments = compute_empirical_moments(ds);
  const eval::FmAnalysis fm =
      eval::fm_null_analysis(moments, a.null_pairs, a.seed);

  std::ofstream out(a.out, std::ios::binary);
  if (!out) throw IoError("cannot open '" + a.out + "' for writing");
  out << "kind,distance\n";
  for (double d : fm.data_distances)
    out << "data," << io::format_double(d) << "\n";
  for (double d : fm.null_distances)
    out << "null," << io::format_double(d) << "\n";
  manifest.write(a.out);
  std::cout << "data median " << eval::median(fm.data_distances)
            << ", null median " << eval::median(fm.null_distances) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical Gaussian DPMM out-of-distribution scoring"};
  app.require_subcommand(1);

  PreprocessArgs pre;
  auto* cmd_pre = app.add_subcommand("preprocess", "whiten and rotate embeddings");
  cmd_pre->add_option("--input", pre.input, "embeddings (.bnpe)")->required();
  cmd_pre->add_option("--labels", pre.labels, "labels (.bnpl)")->required();
  cmd_pre->add_option("--out", pre.out, "transformed embeddings")->required();
  cmd_pre->add_option("--eig-threshold", pre.eig_threshold,
                      "relative eigenvalue cutoff");
  cmd_pre->add_option("--dims", pre.dims, "keep only the top N components");

  FitArgs fit;
  auto* cmd_fit = app.add_subcommand("fit", "fit a model variant");
  cmd_fit->add_option("--model", fit.model,
                      "tied|full|diag|coupled|mds|rmds|irmds")->required();
  cmd_fit->add_option("--input", fit.input, "embeddings (.bnpe)")->required();
  cmd_fit->add_option("--labels", fit.labels, "labels (.bnpl)")->required();
  cmd_fit->add_option("--out", fit.out, "model JSON")->required();
  cmd_fit->add_flag("--whiten", fit.whiten,
                    "preprocess first and store the transform in the model");
  cmd_fit->add_option("--eig-threshold", fit.eig_threshold,
                      "relative eigenvalue cutoff for --whiten");
  cmd_fit->add_option("--dims", fit.dims, "keep top N components for --whiten");
  cmd_fit->add_option("--max-iters", fit.max_iters, "EM iteration cap");
  cmd_fit->add_option("--tol", fit.tol, "EM relative tolerance");
  cmd_fit->add_option("--gamma-grid-size", fit.gamma_grid_size,
                      "quadrature nodes for the coupled model");
  cmd_fit->add_option("--threads", fit.threads);

  ScoreArgs score;
  auto* cmd_score = app.add_subcommand("score", "score embeddings with a model");
  cmd_score->add_option("--model", score.model, "model JSON")->required();
  cmd_score->add_option("--input", score.input, "embeddings (.bnpe)")->required();
  cmd_score->add_option("--out,--output", score.out, "score CSV")->required();
  cmd_score->add_option("--alpha", score.alpha,
                        "concentration for --prob");
  cmd_score->add_flag("--prob", score.with_prob,
                      "emit the inlier probability column");
  cmd_score->add_flag("--classes", score.with_class,
                      "emit the predicted class column");
  cmd_score->add_flag("--unweighted-classes", score.unweighted_classes,
                      "classify without the count weights");
  cmd_score->add_option("--threads", score.threads);

  EvalArgs ev;
  auto* cmd_eval = app.add_subcommand("eval", "AUROC from two score files");
  cmd_eval->add_option("--scores-in", ev.scores_in,
                       "in-distribution score CSV")->required();
  cmd_eval->add_option("--scores-out", ev.scores_out,
                       "out-of-distribution score CSV")->required();
  cmd_eval->add_option("--out", ev.out, "optional JSON report");

  SynthArgs synth;
  auto* cmd_synth = app.add_subcommand("synth", "synthetic benchmark sweep");
  cmd_synth->add_option("--sweep", synth.sweep,
                        "nu0=v1,v2,... or nk=v1,v2,...")->required();
  cmd_synth->add_option("--methods", synth.methods, "comma-separated methods");
  cmd_synth->add_option("--out", synth.out, "long-format results CSV")->required();
  cmd_synth->add_option("--nk", synth.nk, "training points per class");
  cmd_synth->add_option("--nu0", synth.nu0, "covariance concentration");
  cmd_synth->add_option("--d", synth.d, "dimension");
  cmd_synth->add_option("--k", synth.k, "number of classes");
  cmd_synth->add_option("--kappa0", synth.kappa0, "mean precision scale");
  cmd_synth->add_option("--seeds", synth.seeds, "replicates per setting");
  cmd_synth->add_option("--seed", synth.seed, "base seed");
  cmd_synth->add_option("--gamma-grid-size", synth.gamma_grid_size);
  cmd_synth->add_option("--threads", synth.threads);

  FmArgs fm;
  auto* cmd_fm = app.add_subcommand("fm-analysis",
                                    "covariance heterogeneity vs Wishart null");
  cmd_fm->add_option("--input", fm.input, "embeddings (.bnpe)")->required();
  cmd_fm->add_option("--labels", fm.labels, "labels (.bnpl)")->required();
  cmd_fm->add_option("--out", fm.out, "distance CSV")->required();
  cmd_fm->add_option("--null-pairs", fm.null_pairs, "Wishart null pair count");
  cmd_fm->add_option("--seed", fm.seed);
  cmd_fm->add_option("--dims", fm.dims, "keep top N components first");
  cmd_fm->add_option("--eig-threshold", fm.eig_threshold);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInputError;
  }

  try {
    if (cmd_pre->parsed()) return run_preprocess(pre);
    if (cmd_fit->parsed()) return run_fit(fit);
    if (cmd_score->parsed()) return run_score(score);
    if (cmd_eval->parsed()) return run_eval(ev);
    if (cmd_synth->parsed()) return run_synth(synth);
    if (cmd_fm->parsed()) return run_fm(fm);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumericalError;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumericalError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumericalError;
  }
  return kExitOk;
}
