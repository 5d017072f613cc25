// Command-line front end: fit, compare, meanfield, unilab, recursion,
// gradvar and sweep.

#include <wfvi/analytics/gradient_variance.hpp>
#include <wfvi/analytics/meanfield.hpp>
#include <wfvi/analytics/recursion.hpp>
#include <wfvi/io/run.hpp>
#include <wfvi/optim/gradient_study.hpp>
#include <wfvi/unilab/loggamma.hpp>
#include <wfvi/unilab/tables.hpp>

#include <CLI11.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

namespace {

using namespace wfvi;
namespace fs = std::filesystem;

/// Writes to the file when a path is given, to stdout otherwise.
void emit(const std::string& path, const std::string& text) {
  if (path.empty())
    std::cout << text;
  else
    write_text(path, text);
}

std::string num(double v) {
  return Json(v).dump();
}

Eigen::VectorXd parse_vector(const std::string& list, const char* what) {
  std::vector<double> v;
  for (auto f : detail::split_csv_line(list)) {
    const auto x = detail::try_parse_double(f);
    if (!x)
      throw std::runtime_error(std::string(what) + ": '" + std::string(f)
                               + "' is not a number");
    v.push_back(*x);
  }
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

struct FitArgs {
  std::string config;
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  std::string out, model, data, divergence, reference;
  int batch_size = 0;
  long long max_iter = 0;
  int window = 0;
};

KeyValueConfig fit_settings(const FitArgs& a) {
  KeyValueConfig kv = a.config.empty() ? KeyValueConfig{}
                                       : KeyValueConfig::load(a.config);
  auto put = [&](const char* key, const std::string& v) {
    if (!v.empty())
      kv.set(key, v);
  };
  put("model.kind", a.model);
  put("model.data", a.data);
  put("fit.divergence", a.divergence);
  put("output.dir", a.out);
  put("compare.reference", a.reference);
  if (a.batch_size > 0)
    kv.set("fit.batch_size", std::to_string(a.batch_size));
  if (a.max_iter > 0)
    kv.set("fit.max_iter", std::to_string(a.max_iter));
  if (a.window > 0)
    kv.set("fit.window", std::to_string(a.window));
  for (const auto& s : a.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("--set expects key=value, got '" + s + "'");
    kv.set(s.substr(0, eq), s.substr(eq + 1));
  }
  kv.set("seed", std::to_string(a.seed));
  return kv;
}

void report(const RunArtifacts& a, std::ostream& os) {
  const FitResult& r = a.result;
  os << to_string(r.divergence) << ": " << r.iterations << " iterations ("
     << r.stop_reason << "), " << r.rejected_steps << " rejected, final lower bound "
     << (r.lower_bound_trace.empty() ? std::nan("") : r.lower_bound_trace.back())
     << ", " << r.seconds << " s\n";
  if (a.comparison)
    os << "M* = " << a.comparison->mstar_mean << " +- " << a.comparison->mstar_sd
       << "\n";
  for (const auto& f : a.files)
    os << "  wrote " << f << "\n";
}

int cmd_fit(const FitArgs& a) {
  const RunArtifacts art = run(make_run_config(fit_settings(a)));
  report(art, std::cout);
  return 0;
}

struct CompareArgs {
  std::string fit, reference, out;
  std::uint64_t seed = 1;
  int replicates = 50, m = 1000, threads = 0;
};

int cmd_compare(const CompareArgs& a) {
  const FittedGaussian g = read_fit_json(a.fit);
  const ReferenceSamples ref = read_reference_samples(a.reference);
  CompareOptions opt;
  opt.seed = a.seed;
  opt.replicates = a.replicates;
  opt.m = a.m;
  opt.threads = a.threads;
  const ComparisonReport r = compare(g.mu, g.factor, ref, opt);
  if (a.out.empty()) {
    std::cout << comparison_report_csv(r);
  } else {
    fs::create_directories(a.out);
    write_text((fs::path(a.out) / "compare.json").string(),
               comparison_report_to_json(r).dump(2) + "\n");
    write_text((fs::path(a.out) / "compare.csv").string(), comparison_report_csv(r));
    write_text((fs::path(a.out) / "mstar.csv").string(), mstar_csv(r));
  }
  std::cerr << "M* = " << r.mstar_mean << " +- " << r.mstar_sd << " over "
            << r.mstar.size() << " replicates\n";
  return 0;
}

struct MeanfieldArgs {
  std::string precision, mean, out;
  std::vector<double> regions;
  double step = 0.02;
};

int cmd_meanfield(const MeanfieldArgs& a) {
  if (!a.regions.empty()) {
    std::string s = "a,b,c,case\n";
    for (const auto& cell : region_sweep(a.regions, a.step))
      s += num(cell.a) + "," + num(cell.b) + "," + num(cell.c) + "," + cell.region
           + "\n";
    emit(a.out, s);
    return 0;
  }
  if (a.precision.empty())
    throw std::runtime_error("meanfield: give --precision or --regions");
  const Eigen::MatrixXd L = read_numeric_matrix(a.precision);
  const Eigen::VectorXd nu =
      a.mean.empty() ? Eigen::VectorXd() : Eigen::VectorXd(read_numeric_matrix(a.mean).reshaped());
  const Eigen::Index d = L.rows();
  const MeanFieldSolution kl = meanfield_kl(L, nu);
  const MeanFieldSolution fd = meanfield_weighted(L, Eigen::VectorXd::Ones(d), nu);
  const MeanFieldSolution sd = meanfield_sd_nqp(L, nu);
  std::string s = "coordinate,mu,var_kl,var_fd,var_sd,sd_collapsed\n";
  for (Eigen::Index i = 0; i < d; ++i)
    s += std::to_string(i) + "," + num(kl.mu(i)) + "," + num(kl.sigma_diag(i)) + ","
         + num(fd.sigma_diag(i)) + "," + num(sd.sigma_diag(i)) + ","
         + (sd.kkt_cases[i] == KktCase::active ? "1" : "0") + "\n";
  emit(a.out, s);
  std::cerr << "SD NQP: " << sd.iterations << " iterations, KKT residual "
            << sd.kkt_residual << "\n";
  return 0;
}

struct UnilabArgs {
  std::string family = "all", out;
  std::vector<double> nu{3, 5, 10};
  std::vector<double> a1{0.8, 2, 10};
  double b1 = 1;
  std::vector<double> skew{1, 1, 1, 2, 5, 5};
};

int cmd_unilab(const UnilabArgs& a) {
  std::vector<UniTarget> targets;
  const bool all = a.family == "all";
  if (!all && a.family != "student_t" && a.family != "loggamma"
      && a.family != "skew_normal")
    throw std::runtime_error("unilab: unknown family '" + a.family + "'");
  if (all || a.family == "student_t")
    for (double nu : a.nu)
      targets.push_back(UniTarget::student_t(nu));
  if (all || a.family == "loggamma")
    for (double a1 : a.a1)
      targets.push_back(UniTarget::log_inv_gamma(a1, a.b1));
  if (all || a.family == "skew_normal") {
    if (a.skew.size() % 2 != 0)
      throw std::runtime_error("unilab: --skew takes (scale, lambda) pairs");
    for (std::size_t k = 0; k < a.skew.size(); k += 2)
      targets.push_back(UniTarget::skew_normal(0.0, a.skew[k], a.skew[k + 1]));
  }
  std::ostringstream os;
  write_uni_table_csv(os, uni_table(targets));
  emit(a.out, os.str());
  return 0;
}

struct RecursionArgs {
  int dim = 3, steps = 500;
  double beta = 0.9;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_recursion(const RecursionArgs& a) {
  std::mt19937_64 rng(a.seed);
  std::normal_distribution<double> n01;
  Eigen::MatrixXd A(a.dim, a.dim);
  for (int i = 0; i < a.dim; ++i)
    for (int j = 0; j < a.dim; ++j)
      A(i, j) = n01(rng);
  const Eigen::MatrixXd J0 =
      A * A.transpose() / a.dim + 0.5 * Eigen::MatrixXd::Identity(a.dim, a.dim);
  Eigen::VectorXd eps0(a.dim);
  for (int i = 0; i < a.dim; ++i)
    eps0(i) = n01(rng);
  const RecursionTrace tr = natural_recursion_trace(J0, eps0, a.beta, a.steps);
  std::string s = "t,eps_norm,delta_norm,eps_bound,delta_bound\n";
  for (int t = 0; t <= a.steps; ++t)
    s += std::to_string(t) + "," + num(tr.eps_norm[t]) + "," + num(tr.delta_norm[t])
         + "," + num(tr.eps_bound[t]) + ","
         + (std::isnan(tr.delta_bound[t]) ? std::string("NA") : num(tr.delta_bound[t]))
         + "\n";
  emit(a.out, s);
  std::cerr << "delta = " << tr.delta << ", eps bound "
            << (tr.eps_bound_ok ? "ok" : "violated") << ", Delta bound "
            << (tr.delta_bound_ok ? "ok" : "violated") << ", sandwich "
            << (tr.sandwich_ok ? "ok" : "violated") << "\n";
  return tr.eps_bound_ok && tr.delta_bound_ok && tr.sandwich_ok ? 0 : 2;
}

struct GradvarArgs {
  std::string precision, mean, out;
  std::string lambda_diag, t_diag, mu, nu;
  double t_scale = 10;
  long long draws = 10000;
  std::uint64_t seed = 1;
};

int cmd_gradvar(const GradvarArgs& a) {
  if (!a.lambda_diag.empty()) {
    const Eigen::VectorXd L = parse_vector(a.lambda_diag, "--lambda-diag");
    const Eigen::Index d = L.size();
    const Eigen::VectorXd T =
        a.t_diag.empty() ? Eigen::VectorXd::Ones(d) : parse_vector(a.t_diag, "--t-diag");
    const Eigen::VectorXd mu =
        a.mu.empty() ? Eigen::VectorXd::Zero(d) : parse_vector(a.mu, "--mu");
    const Eigen::VectorXd nu =
        a.nu.empty() ? Eigen::VectorXd::Zero(d) : parse_vector(a.nu, "--nu");
    const GradientVariances v = grad_variance_formulas(L, T, mu, nu);
    std::string s = "coordinate,kl_mu,fd_mu,sd_mu,kl_T,fd_T,sd_T\n";
    for (Eigen::Index i = 0; i < d; ++i)
      s += std::to_string(i) + "," + num(v.kl_mu(i)) + "," + num(v.fd_mu(i)) + ","
           + num(v.sd_mu(i)) + "," + num(v.kl_T(i)) + "," + num(v.fd_T(i)) + ","
           + num(v.sd_T(i)) + "\n";
    emit(a.out, s);
    return 0;
  }
  if (a.precision.empty())
    throw std::runtime_error("gradvar: give --precision or --lambda-diag");
  const Eigen::MatrixXd L = read_numeric_matrix(a.precision);
  const Eigen::Index d = L.rows();
  const Eigen::VectorXd nu = a.mean.empty()
                                 ? Eigen::VectorXd::Zero(d)
                                 : Eigen::VectorXd(read_numeric_matrix(a.mean).reshaped());
  const GaussianTarget target(nu, L);
  const CholFactor T = CholFactor::scaled_identity(SparsityPattern::dense(static_cast<int>(d)),
                                                   a.t_scale);
  const auto spread =
      gradient_spread(target, Eigen::VectorXd::Zero(d), T, a.draws, a.seed);
  std::string s = "coordinate,divergence,sd_mu,sd_T\n";
  for (const auto& g : spread)
    for (Eigen::Index i = 0; i < d; ++i)
      s += std::to_string(i) + "," + to_string(g.divergence) + ","
           + num(g.sd_mu()(i)) + "," + num(g.sd_T()(i)) + "\n";
  emit(a.out, s);
  for (const auto& g : spread)
    std::cerr << to_string(g.divergence) << ": median sd(mu) " << median(g.sd_mu())
              << ", median sd(T) " << median(g.sd_T()) << "\n";
  return 0;
}

struct SweepArgs {
  std::vector<std::string> configs;
  std::string out = "sweep_out";
  int threads = 0;
};

int cmd_sweep(const SweepArgs& a) {
  // Parse everything first so a bad file fails before any work starts.
  std::vector<RunConfig> runs;
  for (const auto& path : a.configs) {
    KeyValueConfig kv = KeyValueConfig::load(path);
    if (!kv.has("seed"))
      throw std::runtime_error(path + ": missing setting 'seed'");
    if (!kv.has("output.dir"))
      kv.set("output.dir", (fs::path(a.out) / fs::path(path).stem()).string());
    runs.push_back(make_run_config(kv));
  }
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned n_threads =
      std::min<unsigned>(a.threads > 0 ? static_cast<unsigned>(a.threads) : hw,
                         static_cast<unsigned>(runs.size()));
  std::atomic<std::size_t> next{0};
  std::atomic<int> failures{0};
  std::mutex io;
  auto worker = [&] {
    for (std::size_t k = next++; k < runs.size(); k = next++) {
      try {
        const RunArtifacts art = run(runs[k]);
        std::ostringstream os;
        report(art, os);
        std::lock_guard lock(io);
        std::cout << a.configs[k] << "\n" << os.str();
      } catch (const std::exception& e) {
        ++failures;
        std::lock_guard lock(io);
        std::cerr << a.configs[k] << ": " << e.what() << "\n";
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < n_threads; ++t)
    pool.emplace_back(worker);
  for (auto& t : pool)
    t.join();
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian variational inference with weighted Fisher divergences"};
  app.require_subcommand(1);

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Fit a Gaussian approximation to a model");
  fit->add_option("--config", fa.config, "key = value settings file");
  fit->add_option("--set", fa.sets, "Override a setting (key=value)");
  fit->add_option("--seed", fa.seed, "Random seed")->required();
  fit->add_option("--out", fa.out, "Output directory");
  fit->add_option("--model", fa.model, "gaussian|logistic|logistic_sim|glmm|sv");
  fit->add_option("--data", fa.data, "Data file");
  fit->add_option("--divergence", fa.divergence, "KLD|FDr|SDr|FDb|SDb");
  fit->add_option("--batch-size", fa.batch_size, "Batch size for FDb/SDb");
  fit->add_option("--max-iter", fa.max_iter, "Iteration cap");
  fit->add_option("--window", fa.window, "Iterations per lower-bound average");
  fit->add_option("--reference", fa.reference, "Posterior draws CSV to compare against");

  CompareArgs ca;
  auto* cmp = app.add_subcommand("compare", "Compare a fit with reference posterior draws");
  cmp->add_option("--fit", ca.fit, "fit.json from `fit`")->required();
  cmp->add_option("--reference", ca.reference, "Posterior draws CSV")->required();
  cmp->add_option("--seed", ca.seed, "Replicate seed");
  cmp->add_option("--replicates", ca.replicates, "Number of M* replicates");
  cmp->add_option("--m", ca.m, "Draws per replicate");
  cmp->add_option("--threads", ca.threads, "Worker threads (0 = all cores)");
  cmp->add_option("--out", ca.out, "Output directory (CSV to stdout if absent)");

  MeanfieldArgs ma;
  auto* mf = app.add_subcommand("meanfield", "Mean-field optima for a Gaussian target");
  mf->add_option("--precision", ma.precision, "Precision matrix CSV");
  mf->add_option("--mean", ma.mean, "Mean vector CSV");
  mf->add_option("--regions", ma.regions, "c values for the 3x3 region sweep")
      ->delimiter(',');
  mf->add_option("--step", ma.step, "Grid step of the region sweep");
  mf->add_option("--out", ma.out, "Output CSV (stdout if absent)");

  UnilabArgs ua;
  auto* uni = app.add_subcommand("unilab", "Univariate Gaussian fits to non-Gaussian targets");
  uni->add_option("--family", ua.family, "student_t|loggamma|skew_normal|all");
  uni->add_option("--nu", ua.nu, "Student-t degrees of freedom")->delimiter(',');
  uni->add_option("--a1", ua.a1, "Log-gamma shape values")->delimiter(',');
  uni->add_option("--b1", ua.b1, "Log-gamma rate");
  uni->add_option("--skew", ua.skew, "Skew-normal (scale, lambda) pairs")
      ->delimiter(',');
  uni->add_option("--out", ua.out, "Output CSV (stdout if absent)");

  RecursionArgs ra;
  auto* rec = app.add_subcommand("recursion", "Trace the infinite-batch SD recursion");
  rec->add_option("--dim", ra.dim, "Dimension");
  rec->add_option("--beta", ra.beta, "Constant beta in (1/2, 1)");
  rec->add_option("--steps", ra.steps, "Number of steps");
  rec->add_option("--seed", ra.seed, "Seed for the random start");
  rec->add_option("--out", ra.out, "Output CSV (stdout if absent)");

  GradvarArgs ga;
  auto* gv = app.add_subcommand("gradvar", "Gradient estimator variances");
  gv->add_option("--precision", ga.precision, "Precision matrix CSV (Monte Carlo mode)");
  gv->add_option("--mean", ga.mean, "Target mean CSV");
  gv->add_option("--t-scale", ga.t_scale, "Factor T = scale * I");
  gv->add_option("--draws", ga.draws, "Monte Carlo draws");
  gv->add_option("--seed", ga.seed, "Seed");
  gv->add_option("--lambda-diag", ga.lambda_diag, "Diagonal precision (closed-form mode)");
  gv->add_option("--t-diag", ga.t_diag, "Diagonal of T");
  gv->add_option("--mu", ga.mu, "Variational mean");
  gv->add_option("--nu", ga.nu, "Target mean");
  gv->add_option("--out", ga.out, "Output CSV (stdout if absent)");

  SweepArgs sa;
  auto* sw = app.add_subcommand("sweep", "Run several fit configs on worker threads");
  sw->add_option("configs", sa.configs, "Config files")->required();
  sw->add_option("--out", sa.out, "Base directory for configs without output.dir");
  sw->add_option("--threads", sa.threads, "Worker threads (0 = all cores)");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*fit)
      return cmd_fit(fa);
    if (*cmp)
      return cmd_compare(ca);
    if (*mf)
      return cmd_meanfield(ma);
    if (*uni)
      return cmd_unilab(ua);
    if (*rec)
      return cmd_recursion(ra);
    if (*gv)
      return cmd_gradvar(ga);
    return cmd_sweep(sa);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
