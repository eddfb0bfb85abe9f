#include "pnct/harness.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <sstream>

namespace {

struct Flag {
  const char* key;
  const char* help;
};

// Every flag maps onto a config-file key of the same name.
constexpr Flag kFlags[] = {
    {"size", "image side length in pixels"},
    {"angles", "number of view angles"},
    {"rays", "detector bins per view"},
    {"fov", "field-of-view diameter (mm)"},
    {"span", "angular span (degrees)"},
    {"i0", "mean photon count per ray"},
    {"lambda", "TV weight at 64x64 (scaled with size unless --lambda-scaling off)"},
    {"lambda-scaling", "on|off"},
    {"solver", "pn-exact | pn-lbfgs | fista"},
    {"seed", "noise seed"},
    {"noise", "on|off (Poisson noise)"},
    {"adaptive-stop", "on|off (forcing-term inner stop)"},
    {"max-line-integral", "largest line integral through the phantom"},
    {"i0-in-hessian", "on|off"},
    {"lbfgs-memory", "L-BFGS pairs"},
    {"clip-max", "clip for the log sinogram display"},
    {"tol-f", "outer relative objective tolerance"},
    {"tol-x", "outer relative step tolerance"},
    {"max-outer", "outer iteration limit"},
    {"inner-tol", "subproblem relative change tolerance"},
    {"max-inner", "subproblem iteration limit"},
    {"ls-a", "sufficient decrease constant"},
    {"fista-tol", "FISTA relative change tolerance"},
    {"fista-max-iter", "FISTA iteration limit"},
    {"prox-max-iter", "TV prox iteration limit"},
    {"prox-rel-tol", "TV prox relative tolerance"},
    {"out", "output directory"},
};

struct Command {
  CLI::App* app = nullptr;
  std::map<std::string, std::string> values;
  std::string config;
  std::vector<int> sizes;
  double tight_tol_f = 0.0;
};

void add_common(Command& cmd) {
  for (const auto& f : kFlags) {
    cmd.app->add_option(std::string("--") + f.key, cmd.values[f.key], f.help);
  }
  cmd.app->add_option("--config", cmd.config, "key=value settings file (flags override)");
}

pnct::ExperimentConfig resolve(const Command& cmd) {
  pnct::ExperimentConfig cfg;
  if (!cmd.config.empty()) pnct::load_config_file(cfg, cmd.config);
  for (const auto& f : kFlags) {
    if (cmd.app->count(std::string("--") + f.key) > 0) {
      pnct::apply_setting(cfg, f.key, cmd.values.at(f.key));
    }
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Proximal Newton and FISTA for TV-regularized Poisson CT reconstruction"};
  app.require_subcommand(1);

  Command reconstruct{app.add_subcommand("reconstruct", "simulate data and reconstruct once")};
  Command compare{app.add_subcommand("compare", "proximal Newton vs FISTA on the same data")};
  Command scale{app.add_subcommand("scale", "outer iterations across image sizes")};
  Command hessian{app.add_subcommand("hessian", "exact Hessian vs L-BFGS")};
  for (Command* c : {&reconstruct, &compare, &scale, &hessian}) add_common(*c);
  scale.sizes = {32, 64, 128, 256};
  hessian.sizes = {32, 64, 128, 256};
  scale.app->add_option("--sizes", scale.sizes, "image sizes")->delimiter(',');
  hessian.app->add_option("--sizes", hessian.sizes, "image sizes")->delimiter(',');
  hessian.app->add_option("--tight-tol-f", hessian.tight_tol_f,
                          "also run both variants at this objective tolerance");

  CLI11_PARSE(app, argc, argv);

  try {
    pnct::ExperimentReport report;
    if (*reconstruct.app) {
      report = pnct::run_reconstruction(resolve(reconstruct));
    } else if (*compare.app) {
      report = pnct::experiment_pn_vs_fista(resolve(compare));
    } else if (*scale.app) {
      report = pnct::experiment_scalability(resolve(scale), scale.sizes);
    } else {
      report = pnct::experiment_hessian_variants(resolve(hessian), hessian.sizes,
                                                 hessian.tight_tol_f);
    }
    report.summary.erase("artifacts");
    std::cout << report.summary.dump(2) << '\n';
    return report.ok ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
