#include "pnct/harness.hpp"

#include "pnct/image_io.hpp"
#include "pnct/lbfgs.hpp"
#include "pnct/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <stdexcept>

namespace pnct {

namespace fs = std::filesystem;

SolverKind parse_solver(const std::string& name) {
  if (name == "pn-exact") return SolverKind::PnExact;
  if (name == "pn-lbfgs") return SolverKind::PnLbfgs;
  if (name == "fista") return SolverKind::Fista;
  throw std::invalid_argument("unknown solver '" + name + "' (expected pn-exact, pn-lbfgs or fista)");
}

std::string to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::PnExact: return "pn-exact";
    case SolverKind::PnLbfgs: return "pn-lbfgs";
    case SolverKind::Fista: return "fista";
  }
  return "unknown";
}

double ExperimentConfig::effective_lambda() const {
  return lambda_scaling ? lambda * size / 64.0 : lambda;
}

void ExperimentConfig::validate() const {
  if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
  if (!(i0 > 0.0)) throw std::invalid_argument("i0 must be > 0");
  if (!(max_line_integral > 0.0)) throw std::invalid_argument("max_line_integral must be > 0");
  if (lbfgs_memory < 1) throw std::invalid_argument("lbfgs_memory must be >= 1");
  solver_cfg.validate();
}

nlohmann::json ExperimentConfig::to_json() const {
  const auto& s = solver_cfg;
  return {
      {"size", size},
      {"angles", angles},
      {"rays", rays},
      {"fov_mm", fov_mm},
      {"span_deg", span_deg},
      {"i0", i0},
      {"lambda", lambda},
      {"lambda_scaling", lambda_scaling},
      {"effective_lambda", effective_lambda()},
      {"seed", seed},
      {"noisy", noisy},
      {"max_line_integral", max_line_integral},
      {"i0_in_hessian", i0_in_hessian},
      {"lbfgs_memory", lbfgs_memory},
      {"clip_max", clip_max},
      {"solver", to_string(solver)},
      {"tol_f", s.tol_f},
      {"tol_x", s.tol_x},
      {"max_outer", s.max_outer},
      {"inner_tol", s.inner_tol},
      {"max_inner", s.max_inner},
      {"adaptive_stop", s.adaptive_stop},
      {"ls_a", s.ls_a},
      {"ls_shrink", s.ls_shrink},
      {"ls_min_step", s.ls_min_step},
      {"fista_tol", s.fista_tol},
      {"fista_max_iter", s.fista_max_iter},
      {"prox_max_iter", prox.max_iter},
      {"prox_rel_tol", prox.rel_tol},
      {"out", out_dir},
  };
}

namespace {

bool parse_bool(const std::string& v) {
  if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
  if (v == "off" || v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("expected on/off, got '" + v + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  auto& s = cfg.solver_cfg;
  if (key == "size") cfg.size = std::stoi(value);
  else if (key == "angles") cfg.angles = std::stoi(value);
  else if (key == "rays") cfg.rays = std::stoi(value);
  else if (key == "fov") cfg.fov_mm = std::stod(value);
  else if (key == "span") cfg.span_deg = std::stod(value);
  else if (key == "i0") cfg.i0 = std::stod(value);
  else if (key == "lambda") cfg.lambda = std::stod(value);
  else if (key == "lambda-scaling") cfg.lambda_scaling = parse_bool(value);
  else if (key == "seed") cfg.seed = std::stoull(value);
  else if (key == "noise") cfg.noisy = parse_bool(value);
  else if (key == "max-line-integral") cfg.max_line_integral = std::stod(value);
  else if (key == "i0-in-hessian") cfg.i0_in_hessian = parse_bool(value);
  else if (key == "lbfgs-memory") cfg.lbfgs_memory = std::stoi(value);
  else if (key == "clip-max") cfg.clip_max = std::stod(value);
  else if (key == "solver") cfg.solver = parse_solver(value);
  else if (key == "adaptive-stop") s.adaptive_stop = parse_bool(value);
  else if (key == "tol-f") s.tol_f = std::stod(value);
  else if (key == "tol-x") s.tol_x = std::stod(value);
  else if (key == "max-outer") s.max_outer = std::stoi(value);
  else if (key == "inner-tol") s.inner_tol = std::stod(value);
  else if (key == "max-inner") s.max_inner = std::stoi(value);
  else if (key == "ls-a") s.ls_a = std::stod(value);
  else if (key == "fista-tol") s.fista_tol = std::stod(value);
  else if (key == "fista-max-iter") s.fista_max_iter = std::stoi(value);
  else if (key == "prox-max-iter") cfg.prox.max_iter = std::stoi(value);
  else if (key == "prox-rel-tol") cfg.prox.rel_tol = std::stod(value);
  else if (key == "out") cfg.out_dir = value;
  else throw std::invalid_argument("unknown setting '" + key + "'");
}

void load_config_file(ExperimentConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    apply_setting(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

Scenario build_scenario(const ExperimentConfig& cfg) {
  cfg.validate();
  Scenario sc;
  sc.geometry = build_geometry(cfg.size, cfg.fov_mm, cfg.angles, cfg.span_deg, cfg.rays);
  sc.system = build_system_matrix(sc.geometry);
  sc.phantom = shepp_logan(cfg.size);
  sc.attenuation = attenuation_scale(sc.system, sc.phantom.values, cfg.max_line_integral);
  sc.x_true = sc.phantom;
  sc.x_true.values *= sc.attenuation;
  sc.noiseless = simulate_noiseless(sc.system, sc.geometry, sc.x_true, cfg.i0);
  sc.measured = cfg.noisy ? simulate_noisy(sc.noiseless, cfg.seed) : sc.noiseless;
  return sc;
}

RunOutcome run_solver(const Scenario& scenario, const ExperimentConfig& cfg, SolverKind kind,
                      const SolverConfig& solver_cfg) {
  FidelityOracle fidelity(scenario.system, scenario.measured.values, cfg.i0);
  fidelity.set_i0_in_hessian(cfg.i0_in_hessian);
  TvTerm tv(cfg.size, cfg.size, cfg.effective_lambda(), cfg.prox);

  std::unique_ptr<CurvatureModel> curvature;
  if (kind == SolverKind::PnExact) curvature = std::make_unique<ExactHessian>(fidelity);
  if (kind == SolverKind::PnLbfgs) {
    curvature = std::make_unique<LbfgsHessian>(fidelity, cfg.lbfgs_memory);
  }
  CompositeProblem problem{&fidelity, &tv, curvature.get()};
  const Vector x0 = Vector::Zero(fidelity.dimension());

  SolveResult res = kind == SolverKind::Fista ? fista(problem, x0, solver_cfg)
                                              : pn_solve(problem, x0, solver_cfg);
  return RunOutcome{kind, std::move(res.x), std::move(res.trace), fidelity.counters()};
}

double objective_at_time(const ConvergenceTrace& trace, double seconds) {
  double f = trace.rows.front().f;
  for (const auto& r : trace.rows) {
    if (r.seconds > seconds) break;
    f = r.f;
  }
  return f;
}

double time_to_objective(const ConvergenceTrace& trace, double target) {
  for (const auto& r : trace.rows) {
    if (r.f <= target) return r.seconds;
  }
  return std::numeric_limits<double>::infinity();
}

int iterations_to_objective(const ConvergenceTrace& trace, double target) {
  for (const auto& r : trace.rows) {
    if (r.f <= target) return r.iter;
  }
  return -1;
}

namespace {

nlohmann::json run_summary(const RunOutcome& run) {
  const auto& t = run.trace;
  return {
      {"solver", to_string(run.solver)},
      {"status", to_string(t.status)},
      {"message", t.message},
      {"terminal_objective", t.last().f},
      {"terminal_fidelity", t.last().l},
      {"terminal_regularizer", t.last().h},
      {"outer_iterations", t.outer_iterations()},
      {"inner_iterations", t.total_inner_iterations()},
      {"seconds", t.last().seconds},
      {"gradient_evals", run.counters.gradient_evals},
      {"value_evals", run.counters.value_evals},
      {"hessian_applies", t.last().hess_applies},
      {"forward_projections", run.counters.forward_projections},
      {"back_projections", run.counters.back_projections},
  };
}

class Output {
 public:
  Output(const ExperimentConfig& cfg, ExperimentReport& report)
      : enabled_(cfg.write_outputs), dir_(cfg.out_dir), report_(report) {
    if (enabled_) fs::create_directories(dir_);
  }

  void trace(const std::string& label, const ConvergenceTrace& t) {
    report_.traces[label] = t;
    if (!enabled_) return;
    const auto path = (dir_ / ("trace_" + label + ".csv")).string();
    write_trace_csv(t, path);
    report_.artifacts.push_back(path);
  }

  void image(const std::string& label, const Image& img, double hi) {
    if (!enabled_) return;
    const auto pgm = (dir_ / ("recon_" + label + ".pgm")).string();
    const auto csv = (dir_ / ("recon_" + label + ".csv")).string();
    write_pgm16(img, pgm, 0.0, hi);
    write_image_csv(img, csv);
    report_.artifacts.push_back(pgm);
    report_.artifacts.push_back(csv);
  }

  void data(const Scenario& sc, const ExperimentConfig& cfg, const std::string& suffix) {
    if (!enabled_) return;
    const double hi = sc.x_true.values.maxCoeff();
    const auto phantom = (dir_ / ("phantom" + suffix + ".pgm")).string();
    write_pgm16(sc.x_true, phantom, 0.0, hi);
    report_.artifacts.push_back(phantom);
    for (const auto& [name, sino] : {std::pair{"noiseless", &sc.noiseless}, std::pair{"measured", &sc.measured}}) {
      const auto base = dir_ / ("sinogram_" + std::string(name) + suffix);
      write_sinogram_csv(*sino, base.string() + ".csv");
      write_pgm16(negative_log_display(*sino, cfg.i0, cfg.clip_max), base.string() + ".pgm", 0.0,
                  cfg.clip_max);
      report_.artifacts.push_back(base.string() + ".csv");
      report_.artifacts.push_back(base.string() + ".pgm");
    }
  }

  void finish(const ExperimentConfig& cfg) {
    report_.summary["config"] = cfg.to_json();
    if (!enabled_) return;
    const auto path = (dir_ / "report.json").string();
    report_.artifacts.push_back(path);
    report_.summary["artifacts"] = report_.artifacts;
    std::ofstream out(path);
    out << report_.summary.dump(2) << '\n';
  }

 private:
  bool enabled_;
  fs::path dir_;
  ExperimentReport& report_;
};

Image as_image(const Vector& x, int n) { return Image(n, n, x); }

bool solver_ok(const ConvergenceTrace& t) {
  return t.status == SolverStatus::Converged || t.status == SolverStatus::TargetReached;
}

}  // namespace

ExperimentReport run_reconstruction(const ExperimentConfig& cfg) {
  ExperimentReport report;
  Output out(cfg, report);
  const Scenario sc = build_scenario(cfg);
  const RunOutcome run = run_solver(sc, cfg, cfg.solver, cfg.solver_cfg);
  const std::string label = to_string(cfg.solver);

  out.data(sc, cfg, "");
  out.trace(label, run.trace);
  out.image(label, as_image(run.x, cfg.size), sc.x_true.values.maxCoeff());

  auto& s = report.summary;
  s["run"] = run_summary(run);
  s["pixel_size_mm"] = sc.geometry.pixel_size();
  s["attenuation_scale"] = sc.attenuation;
  s["measured_total_counts"] = sc.measured.values.sum();
  s["ssim"] = ssim(as_image(run.x, cfg.size), sc.x_true, sc.x_true.values.maxCoeff());
  report.ok = solver_ok(run.trace);
  s["ok"] = report.ok;
  out.finish(cfg);
  return report;
}

ExperimentReport experiment_pn_vs_fista(const ExperimentConfig& cfg) {
  ExperimentReport report;
  Output out(cfg, report);
  const Scenario sc = build_scenario(cfg);
  const SolverKind pn_kind = cfg.solver == SolverKind::Fista ? SolverKind::PnExact : cfg.solver;
  const RunOutcome pn = run_solver(sc, cfg, pn_kind, cfg.solver_cfg);

  const double f_pn = pn.trace.last().f;
  SolverConfig fista_cfg = cfg.solver_cfg;
  fista_cfg.target_objective = f_pn + 1e-4 * std::abs(f_pn);
  const RunOutcome fi = run_solver(sc, cfg, SolverKind::Fista, fista_cfg);

  const std::string pn_label = to_string(pn_kind);
  out.data(sc, cfg, "");
  out.trace(pn_label, pn.trace);
  out.trace("fista", fi.trace);
  const double hi = sc.x_true.values.maxCoeff();
  out.image(pn_label, as_image(pn.x, cfg.size), hi);
  out.image("fista", as_image(fi.x, cfg.size), hi);

  const int fista_iters = iterations_to_objective(fi.trace, *fista_cfg.target_objective);
  const double fista_time = time_to_objective(fi.trace, *fista_cfg.target_objective);
  const double pn_time = pn.trace.last().seconds;
  auto& s = report.summary;
  s["pn"] = run_summary(pn);
  s["fista"] = run_summary(fi);
  s["target_objective"] = *fista_cfg.target_objective;
  s["fista_iterations_to_target"] = fista_iters;
  s["fista_seconds_to_target"] = std::isfinite(fista_time) ? nlohmann::json(fista_time) : nlohmann::json(nullptr);
  s["pn_seconds"] = pn_time;
  s["pn_inner_over_fista_iterations"] =
      fista_iters > 0 ? static_cast<double>(pn.trace.total_inner_iterations()) / fista_iters : 0.0;
  s["pn_gradient_evals_over_fista_iterations"] =
      fista_iters > 0 ? static_cast<double>(pn.counters.gradient_evals) / fista_iters : 0.0;
  s["speedup"] = std::isfinite(fista_time) && pn_time > 0.0 ? fista_time / pn_time : 0.0;
  report.ok = solver_ok(pn.trace) && fista_iters > 0;
  s["ok"] = report.ok;
  out.finish(cfg);
  return report;
}

ExperimentReport experiment_scalability(const ExperimentConfig& cfg, const std::vector<int>& sizes) {
  ExperimentReport report;
  Output out(cfg, report);
  auto& s = report.summary;
  s["sizes"] = nlohmann::json::array();
  int lo = std::numeric_limits<int>::max();
  int hi = 0;
  const SolverKind kind = cfg.solver == SolverKind::Fista ? SolverKind::PnExact : cfg.solver;
  for (int n : sizes) {
    ExperimentConfig c = cfg;
    c.size = n;
    const Scenario sc = build_scenario(c);
    const RunOutcome run = run_solver(sc, c, kind, c.solver_cfg);
    const std::string label = to_string(kind) + "_" + std::to_string(n);
    out.trace(label, run.trace);
    out.image(label, as_image(run.x, n), sc.x_true.values.maxCoeff());

    const int iters = run.trace.outer_iterations();
    lo = std::min(lo, iters);
    hi = std::max(hi, iters);
    nlohmann::json entry = run_summary(run);
    entry["size"] = n;
    entry["pixel_size_mm"] = sc.geometry.pixel_size();
    entry["lambda"] = c.effective_lambda();
    s["sizes"].push_back(entry);
    report.ok = report.ok && solver_ok(run.trace);
  }
  s["min_outer_iterations"] = lo;
  s["max_outer_iterations"] = hi;
  s["spread"] = hi - lo;
  s["ok"] = report.ok;
  out.finish(cfg);
  return report;
}

ExperimentReport experiment_hessian_variants(const ExperimentConfig& cfg,
                                             const std::vector<int>& sizes, double tight_tol_f) {
  ExperimentReport report;
  Output out(cfg, report);
  auto& s = report.summary;
  s["sizes"] = nlohmann::json::array();
  for (int n : sizes) {
    ExperimentConfig c = cfg;
    c.size = n;
    const Scenario sc = build_scenario(c);
    const RunOutcome exact = run_solver(sc, c, SolverKind::PnExact, c.solver_cfg);
    const RunOutcome lbfgs = run_solver(sc, c, SolverKind::PnLbfgs, c.solver_cfg);
    const std::string suffix = "_" + std::to_string(n);
    out.trace("pn-exact" + suffix, exact.trace);
    out.trace("pn-lbfgs" + suffix, lbfgs.trace);

    const double fe = exact.trace.last().f;
    const double fl = lbfgs.trace.last().f;
    nlohmann::json entry{{"size", n},
                         {"pn_exact", run_summary(exact)},
                         {"pn_lbfgs", run_summary(lbfgs)},
                         {"terminal_relative_gap", std::abs(fe - fl) / std::abs(fe)}};
    if (exact.trace.rows.size() > 3) {
      const double t3 = exact.trace.rows[3].seconds;
      entry["exact_iter3_seconds"] = t3;
      entry["exact_objective_at_iter3"] = exact.trace.rows[3].f;
      entry["lbfgs_objective_at_iter3_time"] = objective_at_time(lbfgs.trace, t3);
    }
    if (tight_tol_f > 0.0) {
      SolverConfig tight = c.solver_cfg;
      tight.tol_f = tight_tol_f;
      const RunOutcome te = run_solver(sc, c, SolverKind::PnExact, tight);
      const RunOutcome tl = run_solver(sc, c, SolverKind::PnLbfgs, tight);
      out.trace("pn-exact-tight" + suffix, te.trace);
      out.trace("pn-lbfgs-tight" + suffix, tl.trace);
      entry["tight_tol_f"] = tight_tol_f;
      entry["tight_exact"] = run_summary(te);
      entry["tight_lbfgs"] = run_summary(tl);
    }
    s["sizes"].push_back(entry);
    report.ok = report.ok && solver_ok(exact.trace) && solver_ok(lbfgs.trace);
  }
  s["ok"] = report.ok;
  out.finish(cfg);
  return report;
}

}  // namespace pnct
