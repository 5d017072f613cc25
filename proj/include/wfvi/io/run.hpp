#ifndef WFVI_IO_RUN_HPP
#define WFVI_IO_RUN_HPP

#include <wfvi/diagnostics/compare.hpp>
#include <wfvi/diagnostics/reference_samples.hpp>
#include <wfvi/diagnostics/report_io.hpp>
#include <wfvi/io/config.hpp>
#include <wfvi/io/csv_table.hpp>
#include <wfvi/io/design.hpp>
#include <wfvi/io/fit_json.hpp>
#include <wfvi/io/glmm_recipes.hpp>
#include <wfvi/io/libsvm.hpp>
#include <wfvi/io/returns.hpp>
#include <wfvi/optim/fit.hpp>
#include <wfvi/targets/gaussian.hpp>
#include <wfvi/targets/glmm.hpp>
#include <wfvi/targets/logistic.hpp>
#include <wfvi/targets/stochastic_volatility.hpp>
#include <wfvi/targets/synthetic.hpp>

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace wfvi {

using AnyModel = std::variant<GaussianTarget, LogisticModel, GlmmModel, SvModel>;

/**
 * Everything needed to reproduce one fit.
 *
 * Recognized settings (all keys are flat and dotted):
 *   model.kind            gaussian | logistic | logistic_sim | glmm | sv
 *   model.data            data file (logistic, glmm, sv)
 *   model.mean, model.precision
 *                         CSV files for a gaussian target, or else
 *   model.dim, model.band, model.seed
 *                         a random banded gaussian target
 *   model.format          csv | libsvm (logistic)
 *   model.response, model.categorical, model.positive_label,
 *   model.delimiter (comma | whitespace), model.header, model.intercept
 *                         CSV design options (logistic)
 *   model.n, model.dim, model.seed
 *                         simulated logistic data (logistic_sim)
 *   model.recipe          epilepsy1 | epilepsy2 | toenail | polypharmacy
 *   model.prior_variance  prior variance σ₀²
 *   fit.divergence, fit.batch_size, fit.max_iter, fit.window,
 *   fit.stop_rule, fit.stop_points, fit.init_scale, fit.fixed_rate,
 *   fit.adadelta.decay, fit.adadelta.eps, fit.pattern (hint | dense)
 *   seed                  required
 *   output.dir            directory for the artifacts
 *   compare.reference, compare.replicates, compare.m, compare.threads
 *                         optional comparison against posterior draws
 */
struct RunConfig {
  KeyValueConfig settings;
  std::string model_kind;
  FitConfig fit;
  bool dense_pattern = false;
  std::string output_dir = ".";
  std::optional<std::string> reference;
  CompareOptions compare;
};

/// Batch size used when fit.batch_size is not set.
inline int default_batch_size(const std::string& kind) {
  if (kind == "logistic" || kind == "logistic_sim")
    return 3;
  if (kind == "sv")
    return 10;
  return 5;
}

/// @throw std::runtime_error on a missing or malformed setting
inline RunConfig make_run_config(const KeyValueConfig& kv) {
  RunConfig rc;
  rc.settings = kv;
  const KeyValueConfig& c = rc.settings;
  rc.model_kind = c.require("model.kind");
  if (rc.model_kind != "gaussian" && rc.model_kind != "logistic"
      && rc.model_kind != "logistic_sim" && rc.model_kind != "glmm"
      && rc.model_kind != "sv")
    throw std::runtime_error("unknown model.kind '" + rc.model_kind + "'");
  FitConfig& f = rc.fit;
  try {
    f.divergence = parse_divergence(c.get_string("fit.divergence", "KLD"));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(e.what());
  }
  f.batch_size = static_cast<int>(
      c.get_int("fit.batch_size", default_batch_size(rc.model_kind)));
  f.max_iter = c.get_int("fit.max_iter", f.max_iter);
  f.window = static_cast<int>(c.get_int("fit.window", f.window));
  f.stop_rule = c.get_bool("fit.stop_rule", f.stop_rule);
  f.stop_points = static_cast<int>(c.get_int("fit.stop_points", f.stop_points));
  f.init_T_scale = c.get_double("fit.init_scale", f.init_T_scale);
  f.fixed_rate = c.get_double("fit.fixed_rate", f.fixed_rate);
  f.adadelta.decay = c.get_double("fit.adadelta.decay", f.adadelta.decay);
  f.adadelta.eps = c.get_double("fit.adadelta.eps", f.adadelta.eps);
  const std::string pattern = c.get_string("fit.pattern", "hint");
  if (pattern != "hint" && pattern != "dense")
    throw std::runtime_error("fit.pattern must be 'hint' or 'dense'");
  rc.dense_pattern = pattern == "dense";
  f.seed = c.get_seed("seed");
  rc.output_dir = c.get_string("output.dir", ".");
  rc.reference = c.get("compare.reference");
  rc.compare.seed = f.seed;
  rc.compare.replicates =
      static_cast<int>(c.get_int("compare.replicates", rc.compare.replicates));
  rc.compare.m = static_cast<int>(c.get_int("compare.m", rc.compare.m));
  rc.compare.threads =
      static_cast<int>(c.get_int("compare.threads", rc.compare.threads));
  return rc;
}

/// Numeric CSV without a header; rows x columns.
inline Eigen::MatrixXd read_numeric_matrix(const std::string& path) {
  const TextTable t = read_text_table(path, Delimiter::comma, false);
  Eigen::MatrixXd M(static_cast<Eigen::Index>(t.rows.size()),
                    static_cast<Eigen::Index>(t.cols()));
  for (std::size_t j = 0; j < t.cols(); ++j) {
    const auto col = numeric_column(t, j);
    for (std::size_t i = 0; i < col.size(); ++i)
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
  }
  return M;
}

/// @throw std::runtime_error naming any missing data file
inline AnyModel build_model(const RunConfig& rc) {
  const KeyValueConfig& c = rc.settings;
  const std::string& kind = rc.model_kind;
  if (kind == "gaussian") {
    if (c.has("model.precision")) {
      const Eigen::MatrixXd lambda = read_numeric_matrix(c.require("model.precision"));
      const Eigen::MatrixXd m = read_numeric_matrix(c.require("model.mean"));
      const Eigen::VectorXd nu = m.reshaped();
      return GaussianTarget(nu, lambda);
    }
    return banded_gaussian_target(static_cast<int>(c.get_int("model.dim", 20)),
                                  static_cast<int>(c.get_int("model.band", 1)),
                                  static_cast<std::uint64_t>(c.get_int("model.seed", 1)));
  }
  if (kind == "logistic_sim") {
    const SimulatedLogistic s = simulate_logistic(
        static_cast<int>(c.get_int("model.n", 200)),
        static_cast<int>(c.get_int("model.dim", 10)),
        static_cast<std::uint64_t>(c.get_int("model.seed", 1)));
    return LogisticModel(s.X, s.y, c.get_double("model.prior_variance", 100.0));
  }
  if (kind == "logistic") {
    const std::string path = c.require("model.data");
    const double prior = c.get_double("model.prior_variance", 100.0);
    const std::string format = c.get_string("model.format", "csv");
    const bool intercept = c.get_bool("model.intercept", true);
    if (format == "libsvm") {
      const LibsvmData d = load_libsvm(path, intercept);
      return LogisticModel(Eigen::MatrixXd(d.X), d.y, prior);
    }
    if (format != "csv")
      throw std::runtime_error("model.format must be 'csv' or 'libsvm'");
    DesignOptions opt;
    const std::string delim = c.get_string("model.delimiter", "comma");
    if (delim != "comma" && delim != "whitespace")
      throw std::runtime_error("model.delimiter must be 'comma' or 'whitespace'");
    opt.delimiter = delim == "comma" ? Delimiter::comma : Delimiter::whitespace;
    opt.header = c.get_bool("model.header", true);
    opt.response = c.require("model.response");
    opt.categorical = c.get_list("model.categorical");
    opt.intercept = intercept;
    opt.positive_label = c.get("model.positive_label");
    const Design d = load_csv_design(path, opt);
    return LogisticModel(d.X, d.y, prior);
  }
  if (kind == "glmm") {
    const std::string recipe = c.require("model.recipe");
    const TextTable t = read_text_table(c.require("model.data"));
    GlmmData d;
    if (recipe == "epilepsy1")
      d = epilepsy_recipe(t, EpilepsyModel::random_intercept);
    else if (recipe == "epilepsy2")
      d = epilepsy_recipe(t, EpilepsyModel::random_slope);
    else if (recipe == "toenail")
      d = toenail_recipe(t);
    else if (recipe == "polypharmacy")
      d = polypharmacy_recipe(t);
    else
      throw std::runtime_error("unknown model.recipe '" + recipe + "'");
    const double prior = c.get_double("model.prior_variance", 100.0);
    return GlmmModel(d.family, std::move(d.subjects), prior, prior);
  }
  return SvModel(load_returns(c.require("model.data")),
                 c.get_double("model.prior_variance", 10.0));
}

inline int model_dim(const AnyModel& m) {
  return std::visit([](const auto& x) { return x.dim(); }, m);
}

struct RunArtifacts {
  FitResult result;
  std::optional<ComparisonReport> comparison;
  std::vector<std::string> files;
};

/**
 * Fits the configured model and writes into output.dir:
 *   fit.json (FitResult), trace.csv (lower-bound windows), timing.txt,
 *   run.cfg (the settings echo) and, with a reference, compare.json,
 *   compare.csv and mstar.csv.
 */
inline RunArtifacts run(const RunConfig& rc) {
  const AnyModel model = build_model(rc);
  std::optional<ReferenceSamples> ref;
  if (rc.reference)
    ref = read_reference_samples(*rc.reference);
  const auto unused = rc.settings.unused_keys();
  if (!unused.empty())
    throw std::runtime_error("unknown setting '" + unused.front() + "'");

  FitConfig cfg = rc.fit;
  if (rc.dense_pattern)
    cfg.pattern = SparsityPattern::dense(model_dim(model));
  RunArtifacts out;
  out.result = std::visit([&](const auto& m) { return fit(m, cfg); }, model);

  namespace fs = std::filesystem;
  fs::create_directories(rc.output_dir);
  auto path = [&](const char* name) {
    out.files.push_back((fs::path(rc.output_dir) / name).string());
    return out.files.back();
  };
  write_fit_json(out.result, path("fit.json"));
  write_trace_csv(out.result, path("trace.csv"));
  write_text(path("timing.txt"),
             "seconds = " + std::to_string(out.result.seconds) + "\n");
  write_text(path("run.cfg"), rc.settings.dump());
  if (ref) {
    out.comparison = compare(out.result.state.mu, out.result.state.factor, *ref,
                             rc.compare);
    write_text(path("compare.json"),
               comparison_report_to_json(*out.comparison).dump(2) + "\n");
    write_text(path("compare.csv"), comparison_report_csv(*out.comparison));
    write_text(path("mstar.csv"), mstar_csv(*out.comparison));
  }
  return out;
}

}  // namespace wfvi

#endif
