#ifndef WFVI_IO_FIT_JSON_HPP
#define WFVI_IO_FIT_JSON_HPP

#include <wfvi/core/chol_factor.hpp>
#include <wfvi/core/sparsity_pattern.hpp>
#include <wfvi/optim/fit.hpp>

#include <json.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace wfvi {

using Json = nlohmann::json;

inline Json to_json_array(const Eigen::VectorXd& v) {
  return Json(std::vector<double>(v.data(), v.data() + v.size()));
}

inline Eigen::VectorXd vector_from_json(const Json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                           static_cast<Eigen::Index>(v.size()));
}

inline Json pattern_to_json(const SparsityPattern& p) {
  return Json{{"kind", p.is_dense() ? "dense" : "block_banded"},
              {"dim", p.dim()},
              {"nnz", p.nnz()},
              {"n_blocks", p.n_blocks()},
              {"block_dims", p.block_dims()},
              {"global_dim", p.global_dim()},
              {"markov_order", p.markov_order()}};
}

/// @throw std::invalid_argument if the descriptor is malformed
inline SparsityPattern pattern_from_json(const Json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  SparsityPattern p;
  if (kind == "dense")
    p = SparsityPattern::dense(j.at("dim").get<int>());
  else if (kind == "block_banded")
    p = SparsityPattern::block_banded(
        j.at("n_blocks").get<int>(), j.at("block_dims").get<std::vector<int>>(),
        j.at("global_dim").get<int>(), j.at("markov_order").get<int>());
  else
    throw std::invalid_argument("unknown pattern kind '" + kind + "'");
  if (j.contains("nnz") && j.at("nnz").get<int>() != p.nnz())
    throw std::invalid_argument("pattern descriptor nnz mismatch");
  return p;
}

inline Json fit_config_to_json(const FitConfig& c) {
  Json j{{"divergence", to_string(c.divergence)},
         {"batch_size", c.batch_size},
         {"max_iter", c.max_iter},
         {"window", c.window},
         {"seed", c.seed},
         {"adadelta_decay", c.adadelta.decay},
         {"adadelta_eps", c.adadelta.eps},
         {"fixed_rate", c.fixed_rate},
         {"stop_rule", c.stop_rule},
         {"stop_points", c.stop_points},
         {"max_consecutive_rejects", c.max_consecutive_rejects},
         {"init_T_scale", c.init_T_scale}};
  j["init_mu"] = c.init_mu ? to_json_array(*c.init_mu) : Json(nullptr);
  j["pattern"] = c.pattern ? pattern_to_json(*c.pattern) : Json(nullptr);
  return j;
}

/// Everything except wall-clock time, so reruns compare byte for byte.
inline Json fit_result_to_json(const FitResult& r) {
  return Json{{"divergence", to_string(r.divergence)},
              {"seed", r.seed},
              {"config", fit_config_to_json(r.config)},
              {"mu", to_json_array(r.state.mu)},
              {"pattern", pattern_to_json(r.state.factor.pattern())},
              {"T", to_json_array(r.state.factor.values())},
              {"lower_bound_trace", r.lower_bound_trace},
              {"iterations", r.iterations},
              {"rejected_steps", r.rejected_steps},
              {"stop_reason", r.stop_reason}};
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
  if (!out)
    throw std::runtime_error("failed writing '" + path + "'");
}

inline void write_fit_json(const FitResult& r, const std::string& path) {
  write_text(path, fit_result_to_json(r).dump(2) + "\n");
}

/// One row per lower-bound window: window index, last iteration, mean.
inline void write_trace_csv(const FitResult& r, const std::string& path) {
  std::string s = "window,iteration,lower_bound\n";
  const long long w = r.config.window;
  for (std::size_t k = 0; k < r.lower_bound_trace.size(); ++k) {
    const long long it = std::min<long long>((k + 1) * w, r.iterations);
    s += std::to_string(k) + "," + std::to_string(it) + ","
         + Json(r.lower_bound_trace[k]).dump() + "\n";
  }
  write_text(path, s);
}

/// Variational parameters read back from a FitResult document.
struct FittedGaussian {
  Divergence divergence = Divergence::KLD;
  std::uint64_t seed = 0;
  Eigen::VectorXd mu;
  CholFactor factor;
};

inline FittedGaussian fitted_gaussian_from_json(const Json& j) {
  FittedGaussian f;
  f.divergence = parse_divergence(j.at("divergence").get<std::string>());
  f.seed = j.at("seed").get<std::uint64_t>();
  f.mu = vector_from_json(j.at("mu"));
  f.factor = CholFactor::from_values(pattern_from_json(j.at("pattern")),
                                     vector_from_json(j.at("T")));
  if (f.mu.size() != f.factor.dim())
    throw std::invalid_argument("fit document: mu and T dimensions differ");
  return f;
}

/// @throw std::runtime_error naming the path if it cannot be read or parsed
inline FittedGaussian read_fit_json(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open '" + path + "'");
  try {
    return fitted_gaussian_from_json(Json::parse(in));
  } catch (const Json::exception& e) {
    throw std::runtime_error("malformed fit document '" + path + "': "
                             + e.what());
  }
}

}  // namespace wfvi

#endif
