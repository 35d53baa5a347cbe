#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "sgflow/problem.hpp"

namespace sgflow {

namespace detail {

inline Eigen::MatrixXd json_matrix(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw ConfigError(where + ": expected a matrix (array of rows)");
  const int rows = int(j.size()), cols = int(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (!j[i].is_array() || int(j[i].size()) != cols)
      throw ConfigError(where + ": ragged matrix rows");
    for (int k = 0; k < cols; ++k) {
      if (!j[i][k].is_number()) throw ConfigError(where + ": non-numeric entry");
      m(i, k) = j[i][k].get<double>();
    }
  }
  return m;
}

inline Eigen::VectorXd json_vector(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array() || j.empty() || j[0].is_array())
    throw ConfigError(where + ": expected a vector (flat array)");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(where + ": non-numeric entry");
    v[int(i)] = j[i].get<double>();
  }
  return v;
}

}  // namespace detail

/// Problem document: either {"builtin": name} or the LTI-quadratic family
/// (see README for the schema). One document per problem.
inline ProblemSpec problem_from_json(const nlohmann::json& j, const std::string& source) {
  if (j.contains("builtin")) {
    if (!j["builtin"].is_string()) throw ConfigError(source + ": field 'builtin' must be a string");
    return builtin_problem(j["builtin"].get<std::string>());
  }
  for (const char* field : {"A", "B", "phi", "h", "b", "r"})
    if (!j.contains(field))
      throw ConfigError(source + ": missing field '" + field + "' (or use \"builtin\")");

  LtiQuadraticData d;
  d.A = detail::json_matrix(j["A"], source + ": field 'A'");
  d.B = detail::json_matrix(j["B"], source + ": field 'B'");
  if (d.A.rows() != d.A.cols()) throw ConfigError(source + ": field 'A' must be square");
  const int n = int(d.A.rows());
  if (d.B.rows() != n) throw ConfigError(source + ": field 'B' row count must match A");

  const auto& phi = j["phi"];
  if (!phi.contains("target")) throw ConfigError(source + ": field 'phi.target' missing");
  d.phi_target = detail::json_vector(phi["target"], source + ": field 'phi.target'");
  d.phi_weight = phi.contains("weight")
                     ? detail::json_matrix(phi["weight"], source + ": field 'phi.weight'")
                     : Eigen::MatrixXd(Eigen::MatrixXd::Identity(n, n));

  const auto& h = j["h"];
  for (const char* f : {"center", "shape"})
    if (!h.contains(f)) throw ConfigError(source + ": field 'h." + std::string(f) + "' missing");
  d.h_center = detail::json_vector(h["center"], source + ": field 'h.center'");
  d.h_shape = detail::json_matrix(h["shape"], source + ": field 'h.shape'");
  d.h_level = h.value("level", 1.0);

  const auto& b = j["b"];
  if (!b.contains("radius_squared"))
    throw ConfigError(source + ": field 'b.radius_squared' missing");
  if (!b["radius_squared"].is_number())
    throw ConfigError(source + ": field 'b.radius_squared' must be a number");
  d.b_radius_sq = b["radius_squared"].get<double>();

  if (!j["r"].is_number_integer() || j["r"].get<int>() < 1)
    throw ConfigError(source + ": field 'r' must be a positive integer");
  const int r = j["r"].get<int>();
  const double beta = j.value("beta", 5.0);
  if (!(beta > 0.0)) throw ConfigError(source + ": field 'beta' must be > 0");

  std::string name = j.value("name", std::string("config_problem"));
  return lti_quadratic_problem(std::move(name), std::move(d), r, beta);
}

inline ProblemSpec load_problem_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open problem config '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return problem_from_json(j, path.filename().string());
}

}  // namespace sgflow
