#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sgflow/analysis.hpp"
#include "sgflow/config.hpp"
#include "sgflow/sim.hpp"
#include "sgflow/trajectory_io.hpp"

namespace sgflow::cli {

/// Exit-code contract: 0 success, 1 domain failure (violation, check failed,
/// nothing found), 2 usage/config error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDomainFailure = 1;
inline constexpr int kExitUsage = 2;

struct RunConfig {
  std::string problem;      // builtin name; empty when config_path is used
  std::string config_path;  // problem JSON document
  double epsilon = 0.1;
  double alpha = 1.0;
  double gamma = 5.0;
  std::optional<double> beta_override;
  std::string mode = "hocbf";
  std::string x0 = "auto";  // "auto", "v1,v2,..." or ";"-separated list (sweep)
  std::string u0 = "auto";
  double T = 50.0;
  double dt = 1e-3;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  double delta = 0.05;       // regularize: target suboptimality
  int candidates = 16;       // compare: ring size
  int sweep_points = 12;     // sweep: default grid size
};

struct ResolvedRun {
  ProblemSpec spec;
  HocbfStack stack;
  ControllerParams params;
  Eigen::VectorXd x0, u0;
  std::vector<Eigen::VectorXd> x0_list;  // all parsed initial states (sweep)
  double T = 0.0, dt = 0.0;
  std::filesystem::path out;
  std::uint64_t seed = 0;
  double delta = 0.05;
};

namespace detail {

inline std::vector<Eigen::VectorXd> parse_vector_list(const std::string& text, int dim,
                                                      const std::string& field) {
  std::vector<Eigen::VectorXd> out;
  std::stringstream groups(text);
  std::string group;
  while (std::getline(groups, group, ';')) {
    if (group.empty()) continue;
    std::vector<double> vals;
    std::stringstream ss(group);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t pos = 0;
        double v = std::stod(cell, &pos);
        if (pos != cell.size()) throw std::invalid_argument(cell);
        vals.push_back(v);
      } catch (const std::exception&) {
        throw ConfigError("field '" + field + "': cannot parse '" + cell + "' as a number");
      }
    }
    if (int(vals.size()) != dim)
      throw ConfigError("field '" + field + "': expected " + std::to_string(dim) +
                        " components, got " + std::to_string(vals.size()));
    out.push_back(Eigen::Map<Eigen::VectorXd>(vals.data(), dim));
  }
  if (out.empty()) throw ConfigError("field '" + field + "': empty");
  return out;
}

/// Default interior starting state: the state-constraint center for the
/// LTI-quadratic family, zero otherwise.
inline Eigen::VectorXd default_x0(const ProblemSpec& spec) {
  if (spec.lti) return spec.lti->h_center;
  return Eigen::VectorXd::Zero(spec.state_dim());
}

inline std::string format_vec(const Eigen::VectorXd& v) {
  std::string s = "(";
  for (int i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
  return s + ")";
}

}  // namespace detail

inline ResolvedRun resolve(const RunConfig& cfg) {
  if (!cfg.problem.empty() && !cfg.config_path.empty())
    throw ConfigError("give either --problem or --config, not both");
  ProblemSpec spec = !cfg.config_path.empty() ? load_problem_config(cfg.config_path)
                     : !cfg.problem.empty()   ? builtin_problem(cfg.problem)
                                              : builtin_problem("paper_lti_r1");
  if (cfg.beta_override) {
    if (!(*cfg.beta_override > 0.0)) throw ConfigError("field 'beta': must be > 0");
    spec.beta = *cfg.beta_override;
  }

  ControllerParams params;
  params.epsilon = cfg.epsilon;
  params.alpha = cfg.alpha;
  params.gamma = cfg.gamma;
  if (cfg.mode == "hocbf") params.mode = ControllerParams::Mode::hocbf;
  else if (cfg.mode == "input_only") params.mode = ControllerParams::Mode::input_only;
  else throw ConfigError("field 'mode': must be 'hocbf' or 'input_only'");
  try {
    validate_params(params);
  } catch (const Error& e) {
    throw ConfigError(std::string("invalid gains: ") + e.what());
  }
  if (!(cfg.dt > 0.0)) throw ConfigError("field 'dt': must be > 0");
  if (!(cfg.T >= cfg.dt)) throw ConfigError("field 'T': must be >= dt");

  ResolvedRun run{spec, build_stack(spec), params, {}, {}, {}, cfg.T, cfg.dt,
                  std::filesystem::path(cfg.out_dir), cfg.seed, cfg.delta};

  if (cfg.x0 == "auto") {
    run.x0 = detail::default_x0(spec);
    run.x0_list = {run.x0};
  } else {
    run.x0_list = detail::parse_vector_list(cfg.x0, spec.state_dim(), "x0");
    run.x0 = run.x0_list.front();
  }
  if (cfg.u0 == "auto") {
    auto u = consistent_input(spec, run.x0);
    run.u0 = u ? *u : Eigen::VectorXd::Zero(spec.input_dim());
  } else {
    run.u0 = detail::parse_vector_list(cfg.u0, spec.input_dim(), "u0").front();
  }
  return run;
}

/// Template for plotting the emitted CSVs; written alongside the data so runs
/// are self-contained.
inline void write_plot_template(const std::filesystem::path& dir) {
  std::ofstream os(dir / "plot.py");
  os << R"PY(#!/usr/bin/env python3
"""Plot trajectory CSVs produced by the sgflow CLI (matplotlib required)."""
import glob, sys
import matplotlib.pyplot as plt
import numpy as np

files = sys.argv[1:] or sorted(glob.glob("*.csv"))
fig, (ax_xy, ax_hb) = plt.subplots(1, 2, figsize=(11, 4.5))
for path in files:
    data = np.genfromtxt(path, delimiter=",", names=True)
    names = data.dtype.names
    xs = [n for n in names if n.startswith("x") and n[1:].isdigit()]
    if len(xs) >= 2:
        ax_xy.plot(data[xs[0]], data[xs[1]], label=path)
    ax_hb.plot(data["t"], data["h"], label=f"{path}: h")
    ax_hb.plot(data["t"], data["b"] / max(1.0, abs(data["b"]).max()), "--",
               label=f"{path}: b (scaled)")
ax_xy.set_xlabel("x1"); ax_xy.set_ylabel("x2"); ax_xy.legend(fontsize=7)
ax_hb.axhline(0.0, color="k", lw=0.5)
ax_hb.set_xlabel("t"); ax_hb.legend(fontsize=7)
fig.tight_layout()
plt.show()
)PY";
}

inline int cmd_simulate(const RunConfig& cfg, Trajectory* traj_out = nullptr,
                        SafetyReport* report_out = nullptr) {
  try {
    ResolvedRun run = resolve(cfg);
    Trajectory traj = integrate(run.spec, run.stack, run.params, run.x0, run.u0, run.T, run.dt);
    traj.metadata.seed = run.seed;
    SafetyReport rep = safety_report(traj);

    std::filesystem::create_directories(run.out);
    write_trajectory_csv(traj, run.out / "trajectory.csv");
    write_metadata_json(traj.metadata, run.out / "trajectory.meta.json");
    write_plot_template(run.out);

    std::ostream& os = std::cout;
    os << "problem " << run.spec.name << ", mode " << cfg.mode << ", T " << run.T << ", dt "
       << run.dt << "\n";
    os << "samples " << traj.size() << ", min h " << rep.min_h << ", min b " << rep.min_b
       << ", final |g| " << traj.g_norm.back() << ", final |f| " << traj.f_norm.back() << "\n";
    for (const auto& w : traj.metadata.warnings) os << "warning: " << w << "\n";
    if (traj.metadata.abort)
      os << "aborted at t=" << traj.metadata.abort->time << ": " << traj.metadata.abort->reason
         << "\n";

    if (traj_out) *traj_out = traj;
    if (report_out) *report_out = rep;
    bool violated = rep.min_h < -kViolationTol || rep.min_b < -kViolationTol ||
                    rep.min_h_levels.minCoeff() < -kViolationTol;
    return (violated || traj.metadata.abort) ? kExitDomainFailure : kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDomainFailure;
  }
}

inline int cmd_compare(const RunConfig& cfg, BaselineComparison* out = nullptr) {
  try {
    ResolvedRun run = resolve(cfg);
    std::vector<Eigen::VectorXd> candidates =
        cfg.x0 == "auto" ? boundary_ring_candidates(run.spec, cfg.candidates)
                         : run.x0_list;
    BaselineComparison cmp =
        find_baseline_violation(run.spec, run.stack, run.params, candidates, run.T, run.dt);

    std::filesystem::create_directories(run.out);
    std::ofstream log(run.out / "search_log.txt");
    for (const auto& e : cmp.log) {
      log << "x0=" << detail::format_vec(e.x0);
      if (e.skipped) log << " skipped: " << e.note << "\n";
      else log << " baseline min_h=" << e.baseline_min_h
               << (e.note.empty() ? "" : " (" + e.note + ")") << "\n";
    }
    if (cmp.found) {
      write_trajectory_csv(cmp.baseline, run.out / "baseline.csv");
      write_metadata_json(cmp.baseline.metadata, run.out / "baseline.meta.json");
      write_trajectory_csv(cmp.hocbf, run.out / "hocbf.csv");
      write_metadata_json(cmp.hocbf.metadata, run.out / "hocbf.meta.json");
      write_plot_template(run.out);
      std::cout << "violating start found: x0=" << detail::format_vec(cmp.x0)
                << " baseline min_h=" << safety_report(cmp.baseline).min_h
                << " hocbf min_h=" << safety_report(cmp.hocbf).min_h << "\n";
    } else {
      std::cout << "no violating start found among " << cmp.log.size()
                << " candidates (see search_log.txt); widen the search\n";
    }
    if (out) *out = cmp;
    return cmp.found ? kExitOk : kExitDomainFailure;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDomainFailure;
  }
}

inline int cmd_sweep(const RunConfig& cfg, std::vector<SweepRun>* out = nullptr) {
  try {
    ResolvedRun run = resolve(cfg);
    std::vector<Eigen::VectorXd> x0s =
        cfg.x0 == "auto" ? boundary_ring_candidates(run.spec, cfg.sweep_points, 0.75)
                         : run.x0_list;

    std::optional<Eigen::VectorXd> target;
    OptimizeSettings osng;
    osng.seed = run.seed + 1;
    try {
      target = offline_optimize(run.spec, osng).x;
    } catch (const Error&) {
      // no oracle optimizer; convergence column reports residuals only
    }

    std::vector<SweepRun> runs =
        sweep(run.spec, run.stack, run.params, x0s, run.T, run.dt, nullptr, target);

    std::filesystem::create_directories(run.out);
    std::ofstream table(run.out / "sweep_summary.csv");
    table << "run,x0,converged,final_distance,min_h,min_b,skipped,error\n";
    bool all_ok = true;
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const auto& rr = runs[i];
      char x0s_buf[64];
      std::snprintf(x0s_buf, sizeof(x0s_buf), "run_%03zu", i);
      if (rr.traj) {
        write_trajectory_csv(*rr.traj, run.out / (std::string(x0s_buf) + ".csv"));
        write_metadata_json(rr.traj->metadata, run.out / (std::string(x0s_buf) + ".meta.json"));
      }
      table << x0s_buf << ",\"" << detail::format_vec(rr.x0) << "\","
            << (rr.report && rr.report->converged ? 1 : 0) << ","
            << (rr.report && rr.report->final_distance_to_target
                    ? format_double(*rr.report->final_distance_to_target)
                    : "")
            << "," << (rr.report ? format_double(rr.report->min_h) : "") << ","
            << (rr.report ? format_double(rr.report->min_b) : "") << "," << (rr.skipped ? 1 : 0)
            << "," << rr.error << "\n";
      bool hard = rr.report && rr.report->hard_violation;
      if (hard || (!rr.skipped && !rr.traj)) all_ok = false;
    }
    write_plot_template(run.out);
    std::cout << runs.size() << " runs written to " << run.out.string() << "\n";
    if (out) *out = std::move(runs);
    return all_ok ? kExitOk : kExitDomainFailure;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDomainFailure;
  }
}

struct CheckOutcome {
  RelativeDegreeReport relative_degree;
  int certificate_failures = 0;
  int certificate_samples = 0;
  CrcqReport crcq;
  KKTReport optimizer_kkt;
  EquivalenceConditionsReport optimizer_conditions;
  bool optimizer_found = false;
  bool passed = false;
};

inline int cmd_check(const RunConfig& cfg, CheckOutcome* out = nullptr) {
  try {
    ResolvedRun run = resolve(cfg);
    const ProblemSpec& spec = run.spec;
    const HocbfStack& stack = run.stack;
    std::mt19937_64 rng(run.seed + 17);

    CheckOutcome oc;
    auto samples = relative_degree_samples(stack, spec.sample_box, 4000, 400, rng);
    oc.relative_degree = verify_relative_degree(stack, samples);

    // Feasibility certificates on the h_r boundary and on bulk samples.
    for (const auto& [x, u] : samples) {
      MembershipReport mem = membership(stack, x, u);
      if (!(mem.h >= 0.0 && mem.b >= 0.0)) continue;
      ++oc.certificate_samples;
      if (!feasibility_certificate(spec, stack, x, u).certified) ++oc.certificate_failures;
    }

    auto dbl = sample_double_boundary(spec, stack, spec.sample_box, 200, rng);
    oc.crcq = crcq_sufficient_check(spec, stack, dbl);

    try {
      OptimizeSettings osng;
      osng.seed = run.seed + 29;
      OptimizeResult opt = offline_optimize(spec, osng);
      oc.optimizer_found = true;
      oc.optimizer_kkt = opt.kkt;
      oc.optimizer_conditions = equivalence_conditions(spec, stack, opt.x, opt.u);
    } catch (const Error&) {
      oc.optimizer_found = false;
    }

    oc.passed = oc.relative_degree.passed && oc.certificate_failures == 0 &&
                (!oc.crcq.conclusive || oc.crcq.passed) && oc.optimizer_found &&
                oc.optimizer_kkt.is_critical;

    std::filesystem::create_directories(run.out);
    nlohmann::json j;
    j["problem"] = spec.name;
    j["relative_degree"] = {{"r", oc.relative_degree.r},
                            {"max_du_below", oc.relative_degree.max_du_below},
                            {"boundary_samples", oc.relative_degree.boundary_samples},
                            {"min_du_at_r", oc.relative_degree.min_du_at_r},
                            {"passed", oc.relative_degree.passed}};
    j["feasibility_certificates"] = {{"samples", oc.certificate_samples},
                                     {"failures", oc.certificate_failures}};
    j["crcq"] = {{"samples", oc.crcq.sample_count},
                 {"max_ratio", oc.crcq.max_ratio},
                 {"conclusive", oc.crcq.conclusive},
                 {"passed", oc.crcq.passed}};
    if (oc.optimizer_found) {
      j["optimizer"] = {{"x", std::vector<double>(oc.optimizer_kkt.x.data(),
                                                  oc.optimizer_kkt.x.data() + oc.optimizer_kkt.x.size())},
                        {"is_critical", oc.optimizer_kkt.is_critical},
                        {"stationarity", oc.optimizer_kkt.stationarity_residual},
                        {"interior", oc.optimizer_conditions.interior},
                        {"equivalence_condition_holds", oc.optimizer_conditions.any_condition}};
    }
    j["passed"] = oc.passed;
    std::ofstream(run.out / "check.json") << j.dump(2) << "\n";

    std::cout << "relative degree r=" << oc.relative_degree.r << ": "
              << (oc.relative_degree.passed ? "ok" : "FLAGGED");
    if (!oc.relative_degree.max_du_below.empty()) {
      std::cout << " (max |dL^i h/du| below r:";
      for (double v : oc.relative_degree.max_du_below) std::cout << " " << v;
      std::cout << "; boundary samples " << oc.relative_degree.boundary_samples << ", min |dL^r h/du| "
                << oc.relative_degree.min_du_at_r << ")";
    }
    std::cout << "\nfeasibility certificates: " << oc.certificate_failures << " failures on "
              << oc.certificate_samples << " samples\n";
    std::cout << "crcq double-boundary: "
              << (oc.crcq.conclusive
                      ? (oc.crcq.passed ? "ok" : "FAILED") + std::string(" (max ratio ") +
                            format_double(oc.crcq.max_ratio) + " on " +
                            std::to_string(oc.crcq.sample_count) + " samples)"
                      : "inconclusive (no double-boundary samples)")
              << "\n";
    if (oc.optimizer_found)
      std::cout << "optimizer: " << detail::format_vec(oc.optimizer_kkt.x)
                << " critical=" << oc.optimizer_kkt.is_critical
                << " interior=" << oc.optimizer_conditions.interior << "\n";
    else
      std::cout << "optimizer: not found\n";
    std::cout << (oc.passed ? "all checks passed" : "CHECKS FAILED") << "\n";

    if (out) *out = std::move(oc);
    return oc.passed ? kExitOk : kExitDomainFailure;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDomainFailure;
  }
}

inline int cmd_regularize(const RunConfig& cfg, RegularizationSweep* out = nullptr) {
  try {
    ResolvedRun run = resolve(cfg);
    OptimizeSettings osng;
    osng.seed = run.seed + 41;
    RegularizationSweep sweep = regularization_sweep(run.spec, run.delta, {}, {}, osng);

    std::filesystem::create_directories(run.out);
    std::ofstream table(run.out / "regularization.csv");
    table << "p,eps_reg,h_value,suboptimality\n";
    for (const auto& pt : sweep.grid)
      table << format_double(pt.p) << "," << format_double(pt.eps_reg) << ","
            << format_double(pt.h_value) << "," << format_double(pt.suboptimality) << "\n";

    std::cout << "unregularized optimizer " << detail::format_vec(sweep.x_star)
              << " phi*=" << format_double(sweep.phi_star) << "\n";
    std::cout << "pareto (h, suboptimality):\n";
    for (const auto& pt : sweep.pareto)
      std::cout << "  p=" << pt.p << " eps=" << pt.eps_reg << " h=" << format_double(pt.h_value)
                << " subopt=" << format_double(pt.suboptimality) << "\n";
    if (sweep.first_achieving)
      std::cout << "first grid point with h>0 and suboptimality<" << run.delta << ": p="
                << sweep.first_achieving->p << " eps=" << sweep.first_achieving->eps_reg << "\n";
    else
      std::cout << "no grid point achieves h>0 with suboptimality<" << run.delta << "\n";

    bool achieved = sweep.first_achieving.has_value();
    if (out) *out = std::move(sweep);
    return achieved ? kExitOk : kExitDomainFailure;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDomainFailure;
  }
}

}  // namespace sgflow::cli
