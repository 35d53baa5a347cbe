#pragma once

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sgflow/sim.hpp"

namespace sgflow {

/// Shortest representation that parses back to the same double (%.17g is
/// exact; shorter forms are preferred when they round-trip).
inline std::string format_double(double v) {
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string trajectory_csv_header(int n, int m, int r) {
  std::string hdr = "t";
  for (int i = 1; i <= n; ++i) hdr += ",x" + std::to_string(i);
  for (int i = 1; i <= m; ++i) hdr += ",u" + std::to_string(i);
  hdr += ",h,b";
  for (int i = 1; i <= r; ++i) hdr += ",h" + std::to_string(i);
  hdr += ",phi_x,phi_wu,g_norm,f_norm,active_b,active_h,lambda_b,lambda_h";
  return hdr;
}

inline void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path) {
  if (traj.empty()) throw DimensionError("write_trajectory_csv: empty trajectory");
  const int n = int(traj.states[0].size());
  const int m = int(traj.inputs[0].size());
  const int r = int(traj.h_levels[0].size());
  std::ofstream os(path);
  if (!os) throw Error("cannot open '" + path.string() + "' for writing");
  os << trajectory_csv_header(n, m, r) << "\n";
  for (std::size_t k = 0; k < traj.size(); ++k) {
    os << format_double(traj.times[k]);
    for (int i = 0; i < n; ++i) os << ',' << format_double(traj.states[k][i]);
    for (int i = 0; i < m; ++i) os << ',' << format_double(traj.inputs[k][i]);
    os << ',' << format_double(traj.h[k]) << ',' << format_double(traj.b[k]);
    for (int i = 0; i < r; ++i) os << ',' << format_double(traj.h_levels[k][i]);
    os << ',' << format_double(traj.phi_x[k]) << ',' << format_double(traj.phi_wu[k]) << ','
       << format_double(traj.g_norm[k]) << ',' << format_double(traj.f_norm[k]) << ','
       << traj.active_b[k] << ',' << traj.active_h[k] << ',' << format_double(traj.lambda_b[k])
       << ',' << format_double(traj.lambda_h[k]) << "\n";
  }
}

/// Reads back the sample columns of a trajectory CSV (metadata lives in the
/// sidecar and is not restored here). Values round-trip exactly.
inline Trajectory read_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open '" + path.string() + "'");
  std::string header;
  if (!std::getline(is, header)) throw Error("empty trajectory file '" + path.string() + "'");

  int n = 0, m = 0, r = 0;
  {
    std::stringstream ss(header);
    std::string col;
    while (std::getline(ss, col, ',')) {
      if (col.size() >= 2 && col[0] == 'x') ++n;
      else if (col.size() >= 2 && col[0] == 'u' && std::isdigit(col[1])) ++m;
      else if (col.size() >= 2 && col[0] == 'h' && std::isdigit(col[1])) ++r;
    }
  }

  Trajectory traj;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    auto next = [&]() -> double {
      if (!std::getline(ss, cell, ',')) throw Error("short row in '" + path.string() + "'");
      return std::strtod(cell.c_str(), nullptr);
    };
    traj.times.push_back(next());
    Eigen::VectorXd x(n), u(m), hl(r);
    for (int i = 0; i < n; ++i) x[i] = next();
    for (int i = 0; i < m; ++i) u[i] = next();
    traj.states.push_back(std::move(x));
    traj.inputs.push_back(std::move(u));
    traj.h.push_back(next());
    traj.b.push_back(next());
    for (int i = 0; i < r; ++i) hl[i] = next();
    traj.h_levels.push_back(std::move(hl));
    traj.phi_x.push_back(next());
    traj.phi_wu.push_back(next());
    traj.g_norm.push_back(next());
    traj.f_norm.push_back(next());
    traj.active_b.push_back(int(next()));
    traj.active_h.push_back(int(next()));
    traj.lambda_b.push_back(next());
    traj.lambda_h.push_back(next());
  }
  return traj;
}

inline nlohmann::json metadata_to_json(const TrajectoryMetadata& md) {
  nlohmann::json j;
  j["problem"] = md.problem;
  j["epsilon"] = md.params.epsilon;
  j["alpha"] = md.params.alpha;
  j["gamma"] = md.params.gamma;
  j["mode"] = md.params.mode == ControllerParams::Mode::hocbf ? "hocbf" : "input_only";
  j["beta"] = md.beta;
  j["dt"] = md.dt;
  j["T"] = md.T;
  j["x0"] = std::vector<double>(md.x0.data(), md.x0.data() + md.x0.size());
  j["u0"] = std::vector<double>(md.u0.data(), md.u0.data() + md.u0.size());
  j["seed"] = md.seed;
  j["feasible_start"] = md.feasible_start;
  j["warnings"] = md.warnings;
  if (md.abort) j["abort"] = {{"time", md.abort->time}, {"reason", md.abort->reason}};
  return j;
}

inline void write_metadata_json(const TrajectoryMetadata& md, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open '" + path.string() + "' for writing");
  os << metadata_to_json(md).dump(2) << "\n";
}

}  // namespace sgflow
