#include <wfvi/io/config.hpp>
#include <wfvi/io/design.hpp>
#include <wfvi/io/glmm_recipes.hpp>
#include <wfvi/io/libsvm.hpp>
#include <wfvi/io/returns.hpp>
#include <wfvi/io/run.hpp>

#include <gtest/gtest.h>

#include <chrono>
#include <unistd.h>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

namespace wfvi {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path()
            / ("wfvi_io_test_" + std::to_string(::getpid()) + "_"
               + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name, const std::string& content) const {
    const auto p = (path_ / name).string();
    std::ofstream(p) << content;
    return p;
  }
  std::string path(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TextTable table(const std::string& text, Delimiter d = Delimiter::comma,
                bool header = true) {
  std::istringstream in(text);
  return parse_text_table(in, "mem", d, header);
}

TEST(Design, ConstantColumnIsRejected) {
  DesignOptions opt;
  opt.response = "y";
  EXPECT_THROW(build_design(table("x,c,y\n1,5,0\n2,5,1\n3,5,1\n"), opt),
               std::runtime_error);
}

TEST(Design, ThreeLevelCategoricalHandEncoded) {
  // Levels sorted: a (reference), b, c.
  DesignOptions opt;
  opt.response = "y";
  const Design d =
      build_design(table("g,x,y\nb,1,0\na,2,1\nc,3,1\nb,4,0\n"), opt);
  ASSERT_EQ(d.X.cols(), 4);
  EXPECT_EQ(d.names[0], "(Intercept)");
  EXPECT_EQ(d.names[1], "g=b");
  EXPECT_EQ(d.names[2], "g=c");
  EXPECT_EQ(d.names[3], "x");
  Eigen::MatrixXd dummies(4, 2);
  dummies << 1, 0, 0, 0, 0, 1, 1, 0;
  EXPECT_EQ(d.X.middleCols(1, 2), dummies);
  EXPECT_EQ(d.X.col(0), Eigen::VectorXd::Ones(4));
  // x = 1..4: mean 2.5, sd sqrt(5/3).
  const double sd = std::sqrt(5.0 / 3.0);
  EXPECT_NEAR(d.X(0, 3), (1 - 2.5) / sd, 1e-15);
  ASSERT_EQ(d.standardization.size(), 1u);
  EXPECT_DOUBLE_EQ(d.standardization[0].mean, 2.5);
  EXPECT_NEAR(d.standardization[0].sd, sd, 1e-15);
  EXPECT_EQ(d.y, (Eigen::VectorXd(4) << 0, 1, 1, 0).finished());
}

TEST(Design, NumericColumnCanBeForcedCategorical) {
  DesignOptions opt;
  opt.response = "y";
  opt.categorical = {"k"};
  const Design d = build_design(table("k,y\n1,0\n2,1\n3,0\n"), opt);
  EXPECT_EQ(d.X.cols(), 3);
  EXPECT_TRUE(d.standardization.empty());
}

TEST(Design, ResponseNeedsZeroOneOrPositiveLabel) {
  DesignOptions opt;
  opt.response = "y";
  const std::string text = "x,y\n1,good\n2,bad\n3,bad\n";
  EXPECT_THROW(build_design(table(text), opt), std::runtime_error);
  opt.positive_label = "bad";
  EXPECT_EQ(build_design(table(text), opt).y,
            (Eigen::VectorXd(3) << 0, 1, 1).finished());
}

// Seven numeric attributes and thirteen qualitative ones with the level
// counts of the German credit file, in its column order.
std::string german_shaped(int n, std::uint64_t seed) {
  const std::vector<int> levels{4, 5, 10, 5, 5, 4, 3, 4, 3, 3, 4, 2, 2};
  const std::vector<bool> is_cat{true,  false, true,  true,  false, true,  true,
                                 false, true,  true,  false, true,  false, true,
                                 true,  false, true,  false, true,  true};
  std::mt19937_64 rng(seed);
  std::string s;
  for (int i = 0; i < n; ++i) {
    std::size_t c = 0;
    for (bool cat : is_cat) {
      if (cat) {
        // Cycle through every level so each appears.
        s += "A" + std::to_string(c) + std::to_string((i + rng() % 2) % levels[c]);
        ++c;
      } else {
        s += std::to_string(1 + rng() % 97);
      }
      s += ' ';
    }
    s += std::to_string(1 + rng() % 2) + "\n";
  }
  return s;
}

TEST(Design, GermanShapedFileGives49Columns) {
  TempDir dir;
  const std::string path = dir.file("german.data", german_shaped(300, 1));
  DesignOptions opt;
  opt.delimiter = Delimiter::whitespace;
  opt.header = false;
  opt.response = "V21";
  opt.positive_label = "2";
  const Design d = load_csv_design(path, opt);
  EXPECT_EQ(d.X.cols(), 49);
  EXPECT_EQ(d.X.rows(), 300);
  EXPECT_EQ(d.standardization.size(), 7u);
  // Pure given the bytes.
  const Design again = load_csv_design(path, opt);
  EXPECT_EQ(d.X, again.X);
  EXPECT_EQ(d.names, again.names);
}

TEST(Design, MissingFileNamesPath) {
  DesignOptions opt;
  opt.response = "y";
  try {
    load_csv_design("/nonexistent/german.csv", opt);
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/german.csv"),
              std::string::npos);
  }
}

LibsvmData libsvm(const std::string& text, bool intercept = false) {
  std::istringstream in(text);
  return parse_libsvm(in, "mem", intercept);
}

TEST(Libsvm, SingleRow) {
  const LibsvmData d = libsvm("+1 3:1\n");
  ASSERT_EQ(d.X.cols(), 3);
  EXPECT_EQ(Eigen::MatrixXd(d.X), (Eigen::MatrixXd(1, 3) << 0, 0, 1).finished());
  EXPECT_EQ(d.y(0), 1.0);
}

TEST(Libsvm, EmptyFeatureListIsZeroRow) {
  const LibsvmData d = libsvm("-1\n+1 2:0.5 1:2\n");
  ASSERT_EQ(d.X.rows(), 2);
  EXPECT_EQ(Eigen::MatrixXd(d.X).row(0).squaredNorm(), 0.0);
  EXPECT_EQ(d.X.coeff(1, 0), 2.0);
  EXPECT_EQ(d.y, (Eigen::VectorXd(2) << 0, 1).finished());
}

TEST(Libsvm, DuplicateIndexIsAnError) {
  EXPECT_THROW(libsvm("+1 2:1 2:3\n"), std::runtime_error);
  EXPECT_THROW(libsvm("+1 0:1\n"), std::runtime_error);
  EXPECT_THROW(libsvm("+2 1:1\n"), std::runtime_error);
  EXPECT_THROW(libsvm("+1 1-1\n"), std::runtime_error);
}

TEST(Libsvm, InterceptAddsLeadingColumn) {
  const LibsvmData d = libsvm("-1 123:1 5:1\n+1 1:1\n", true);
  EXPECT_EQ(d.X.cols(), 124);
  EXPECT_EQ(d.X.coeff(0, 0), 1.0);
  EXPECT_EQ(d.X.coeff(0, 123), 1.0);
  EXPECT_EQ(d.X.coeff(1, 1), 1.0);
}

TEST(Returns, ConstantSeriesGivesZeros) {
  const Eigen::VectorXd y = log_returns({2.0, 2.0, 2.0, 2.0});
  EXPECT_EQ(y.size(), 3);
  EXPECT_EQ(y.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Returns, GeometricSeriesCentersToZero) {
  const double e = std::exp(1.0);
  const Eigen::VectorXd y = log_returns({1.0, e, e * e});
  ASSERT_EQ(y.size(), 2);
  EXPECT_NEAR(y(0), 0.0, 1e-12);
  EXPECT_NEAR(y(1), 0.0, 1e-12);
}

TEST(Returns, MeanIsZeroAndScaleIsPercent) {
  const Eigen::VectorXd y = log_returns({1.0, 1.1, 1.0, 1.2, 1.25});
  EXPECT_NEAR(y.mean(), 0.0, 1e-10);
  const double raw0 = std::log(1.1), raw1 = std::log(1.0 / 1.1);
  EXPECT_NEAR(y(0) - y(1), 100 * (raw0 - raw1), 1e-10);
}

TEST(Returns, NonpositiveRateIsAnError) {
  EXPECT_THROW(log_returns({1.0, 0.0, 2.0}), std::invalid_argument);
  EXPECT_THROW(log_returns({1.0, -1.0}), std::invalid_argument);
  EXPECT_THROW(log_returns({1.0}), std::invalid_argument);
}

TEST(Returns, FileWithHeaderAndDateColumn) {
  TempDir dir;
  const std::string p =
      dir.file("rates.csv", "date,rate\n2000-01-03,1.5\n2000-01-04,1.5\n"
                            "2000-01-05,1.5\n");
  EXPECT_EQ(load_returns(p), Eigen::VectorXd::Zero(2));
  const std::string bad = dir.file("bad.csv", "1.0\n-2\n");
  try {
    load_returns(bad);
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find(bad), std::string::npos);
  }
}

TEST(Config, ParsesCommentsOverridesAndTypes) {
  std::istringstream in(
      "# leading comment\n"
      "fit.batch_size = 3   # trailing\n"
      "model.kind=gaussian\n"
      "\n"
      "fit.stop_rule = off\n"
      "fit.batch_size = 4\n"
      "model.categorical = a, b ,c\n");
  const KeyValueConfig c = KeyValueConfig::parse(in, "mem");
  EXPECT_EQ(c.get_int("fit.batch_size", 0), 4);
  EXPECT_EQ(c.require("model.kind"), "gaussian");
  EXPECT_FALSE(c.get_bool("fit.stop_rule", true));
  EXPECT_EQ(c.get_list("model.categorical"),
            (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(c.get_double("absent", 2.5), 2.5);
  EXPECT_TRUE(c.unused_keys().empty());
}

TEST(Config, RejectsMalformedLinesAndValues) {
  std::istringstream no_eq("fit.window 10\n");
  EXPECT_THROW(KeyValueConfig::parse(no_eq, "mem"), std::runtime_error);
  KeyValueConfig c;
  c.set("a", "1.5x");
  c.set("b", "maybe");
  EXPECT_THROW(c.get_double("a", 0), std::runtime_error);
  EXPECT_THROW(c.get_int("a", 0), std::runtime_error);
  EXPECT_THROW(c.get_bool("b", false), std::runtime_error);
  EXPECT_THROW(c.require("missing"), std::runtime_error);
}

TEST(Config, RunConfigRequiresSeedAndKnownKinds) {
  KeyValueConfig c;
  c.set("model.kind", "gaussian");
  EXPECT_THROW(make_run_config(c), std::runtime_error);
  c.set("seed", "7");
  const RunConfig rc = make_run_config(c);
  EXPECT_EQ(rc.fit.seed, 7u);
  EXPECT_EQ(rc.fit.batch_size, 5);
  c.set("model.kind", "logistic");
  EXPECT_EQ(make_run_config(c).fit.batch_size, 3);
  c.set("model.kind", "sv");
  EXPECT_EQ(make_run_config(c).fit.batch_size, 10);
  c.set("model.kind", "mixture");
  EXPECT_THROW(make_run_config(c), std::runtime_error);
  c.set("model.kind", "gaussian");
  c.set("fit.divergence", "XYZ");
  EXPECT_THROW(make_run_config(c), std::runtime_error);
}

TEST(Recipes, EpilepsyCoding) {
  const std::string text =
      "subject,y,trt,base,age,visit\n"
      "1,5,0,11,31,1\n1,3,0,11,31,2\n1,3,0,11,31,3\n1,3,0,11,31,4\n"
      "2,3,1,8,20,1\n2,5,1,8,20,2\n2,3,1,8,20,3\n2,2,1,8,20,4\n";
  const TextTable t = table(text);
  const GlmmData one = epilepsy_recipe(t, EpilepsyModel::random_intercept);
  ASSERT_EQ(one.subjects.size(), 2u);
  EXPECT_EQ(one.family, GlmmFamily::poisson_log);
  const double mean_log_age = 0.5 * (std::log(31.0) + std::log(20.0));
  const auto& s2 = one.subjects[1];
  EXPECT_NEAR(s2.X(0, 1), std::log(2.0), 1e-15);
  EXPECT_EQ(s2.X(0, 2), 1.0);
  EXPECT_NEAR(s2.X(0, 3), std::log(20.0) - mean_log_age, 1e-15);
  EXPECT_NEAR(s2.X(0, 4), std::log(2.0), 1e-15);
  EXPECT_EQ(s2.X.col(5), (Eigen::VectorXd(4) << 0, 0, 0, 1).finished());
  EXPECT_EQ(s2.Z, Eigen::MatrixXd::Ones(4, 1));
  EXPECT_EQ(s2.y(1), 5.0);

  const GlmmData two = epilepsy_recipe(t, EpilepsyModel::random_slope);
  const Eigen::VectorXd visit = (Eigen::VectorXd(4) << -0.3, -0.1, 0.1, 0.3).finished();
  EXPECT_TRUE(two.subjects[0].X.col(5).isApprox(visit, 1e-15));
  EXPECT_TRUE(two.subjects[0].Z.col(1).isApprox(visit, 1e-15));
  EXPECT_EQ(two.random_names.size(), 2u);
  const GlmmModel m(two.family, two.subjects);
  EXPECT_EQ(m.dim(), 2 * 2 + 6 + 3);
}

TEST(Recipes, ToenailStandardizesTime) {
  const TextTable t = table(
      "id,y,trt,time\n1,1,1,0\n1,0,1,1\n1,0,1,2\n2,1,0,0\n2,1,0,3\n");
  const GlmmData d = toenail_recipe(t);
  ASSERT_EQ(d.subjects.size(), 2u);
  Eigen::VectorXd ts(5);
  ts << d.subjects[0].X.col(2), d.subjects[1].X.col(2);
  EXPECT_NEAR(ts.mean(), 0.0, 1e-15);
  EXPECT_NEAR((ts.array() - ts.mean()).square().sum() / 4, 1.0, 1e-14);
  EXPECT_EQ(d.subjects[1].X.col(3), Eigen::VectorXd::Zero(2));
  EXPECT_EQ(d.subjects[0].X.col(3), d.subjects[0].X.col(2));
}

TEST(Recipes, PolypharmacyVisitBands) {
  const TextTable t = table(
      "ID,Y,GENDER,RACE,AGE,MHV,INPTMHV\n"
      "7,0,1,0,40,0,0\n7,1,1,0,41,5,2\n7,1,1,0,42,6,0\n7,0,1,0,43,14,0\n"
      "7,1,1,0,44,15,1\n");
  const GlmmData d = polypharmacy_recipe(t);
  ASSERT_EQ(d.subjects.size(), 1u);
  Eigen::MatrixXd bands(5, 3);
  bands << 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 1, 0, 0, 0, 1;
  EXPECT_EQ(d.subjects[0].X.middleCols(4, 3), bands);
  EXPECT_NEAR(d.subjects[0].X(0, 3), std::log(4.0), 1e-15);
  EXPECT_EQ(d.subjects[0].X.col(7),
            (Eigen::VectorXd(5) << 0, 1, 0, 0, 1).finished());
  EXPECT_THROW(toenail_recipe(t), std::runtime_error);
}

KeyValueConfig smoke_config(const std::string& out_dir) {
  KeyValueConfig c;
  c.set("model.kind", "gaussian");
  c.set("model.dim", "6");
  c.set("model.band", "1");
  c.set("fit.divergence", "SDb");
  c.set("fit.max_iter", "3000");
  c.set("fit.window", "200");
  c.set("seed", "11");
  c.set("output.dir", out_dir);
  return c;
}

TEST(Run, GaussianSmokeWritesArtifacts) {
  TempDir dir;
  const auto t0 = std::chrono::steady_clock::now();
  const RunArtifacts a = run(make_run_config(smoke_config(dir.path("out"))));
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_LT(secs, 10.0);
  for (const char* f : {"fit.json", "trace.csv", "timing.txt", "run.cfg"})
    EXPECT_TRUE(fs::exists(dir.path("out") + "/" + f)) << f;
  const FittedGaussian g = read_fit_json(dir.path("out/fit.json"));
  EXPECT_EQ(g.mu, a.result.state.mu);
  EXPECT_EQ(g.factor.pattern(), a.result.state.factor.pattern());
  const std::string echo = slurp(dir.path("out/run.cfg"));
  EXPECT_NE(echo.find("seed = 11"), std::string::npos);
}

TEST(Run, RerunIsByteIdentical) {
  TempDir dir;
  run(make_run_config(smoke_config(dir.path("a"))));
  run(make_run_config(smoke_config(dir.path("b"))));
  EXPECT_EQ(slurp(dir.path("a/fit.json")), slurp(dir.path("b/fit.json")));
  EXPECT_EQ(slurp(dir.path("a/trace.csv")), slurp(dir.path("b/trace.csv")));
}

TEST(Run, MissingDataFileNamesPath) {
  TempDir dir;
  KeyValueConfig c = smoke_config(dir.path("out"));
  c.set("model.kind", "sv");
  c.set("model.data", "/nonexistent/rates.csv");
  try {
    run(make_run_config(c));
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/rates.csv"),
              std::string::npos);
  }
}

TEST(Run, UnknownSettingIsRejected) {
  TempDir dir;
  KeyValueConfig c = smoke_config(dir.path("out"));
  c.set("fit.bach_size", "4");
  EXPECT_THROW(run(make_run_config(c)), std::runtime_error);
}

TEST(Run, ComparisonAgainstReferenceDraws) {
  TempDir dir;
  KeyValueConfig c = smoke_config(dir.path("out"));
  const GaussianTarget target = banded_gaussian_target(6, 1, 1);
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd L = target.covariance().llt().matrixL();
  std::string csv = "a,b,c,d,e,f\n";
  std::normal_distribution<double> n01;
  for (int i = 0; i < 2000; ++i) {
    Eigen::VectorXd z(6);
    for (int j = 0; j < 6; ++j)
      z(j) = n01(rng);
    const Eigen::VectorXd x = target.nu() + L * z;
    for (int j = 0; j < 6; ++j)
      csv += Json(x(j)).dump() + (j < 5 ? "," : "\n");
  }
  c.set("compare.reference", dir.file("ref.csv", csv));
  c.set("compare.replicates", "3");
  c.set("compare.m", "300");
  const RunArtifacts a = run(make_run_config(c));
  ASSERT_TRUE(a.comparison.has_value());
  EXPECT_EQ(a.comparison->mstar.size(), 3u);
  EXPECT_TRUE(fs::exists(dir.path("out/compare.csv")));
  EXPECT_TRUE(fs::exists(dir.path("out/mstar.csv")));
}

TEST(Synthetic, BandedTargetMatchesHint) {
  const GaussianTarget t = banded_gaussian_target(8, 2, 5);
  const Eigen::MatrixXd L = t.lambda().llt().matrixL();
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < i; ++j)
      if (i - j > 2)
        EXPECT_NEAR(L(i, j), 0.0, 1e-12);
  EXPECT_EQ(t.sparsity_hint().markov_order(), 2);
}

}  // namespace
}  // namespace wfvi
