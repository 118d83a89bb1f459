// Command-line driver: convergence studies of the decoupled fourth-order
// solver plus structural audits (exactness, unisolvence, inf-sup).
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "feec/element.hpp"
#include "feec/harness.hpp"
#include "feec/mesh.hpp"
#include "feec/system.hpp"

namespace {

constexpr int kExitSolver = 2;
constexpr int kExitInvariant = 3;

int run_audit(int d, int k) {
  using namespace feec;
  int failures = 0;
  // Unisolvence: every element family on a reference and a generic mesh cell.
  SimplicialMesh mesh = box_mesh(d, 1);
  CellConnectivity conn = mesh_connectivity(mesh, 0);
  const CellGeometry& geo = mesh.geometry(0);
  for (int j = 0; j <= d; ++j) {
    for (SpaceKind kind : {SpaceKind::Full, SpaceKind::Trimmed}) {
      try {
        ShapeBasis sb = build_element(ElementSpec{kind, k, j}, geo, conn);
        std::printf("audit unisolvence %s k=%d j=%d: dofs=%zu cond=%.3e\n",
                    kind == SpaceKind::Full ? "full" : "trimmed", k, j,
                    sb.dofs.size(), sb.condition);
      } catch (const std::exception& e) {
        std::printf("audit unisolvence FAILED (k=%d j=%d): %s\n", k, j,
                    e.what());
        ++failures;
      }
    }
  }
  for (int j = 0; j <= d - 1; ++j) {
    try {
      ShapeBasis sb = build_element(ElementSpec{SpaceKind::Phi, k, j + 1},
                                    geo, conn);
      std::printf("audit unisolvence phi k=%d field=%d: dofs=%zu cond=%.3e\n",
                  k, j + 1, sb.dofs.size(), sb.condition);
    } catch (const std::exception& e) {
      std::printf("audit unisolvence phi FAILED (k=%d j=%d): %s\n", k, j,
                  e.what());
      ++failures;
    }
  }
  // Exactness of the trimmed complexes.
  for (bool bc : {false, true}) {
    ExactnessReport rep = exactness_audit(mesh, k, bc);
    std::printf("audit exactness k=%d bc=%d dims=[", k, bc ? 1 : 0);
    for (size_t i = 0; i < rep.space_dims.size(); ++i)
      std::printf("%s%d", i ? "," : "", rep.space_dims[i]);
    std::printf("] %s\n", rep.exact ? "exact" : "NOT EXACT");
    if (!rep.exact) ++failures;
  }
  // Discrete inf-sup stability for the Stokes pair at j = d-2.
  double beta0 = 0.0;
  for (int n : {1, 2}) {
    InfSupResult r = infsup_probe(box_mesh(d, n), d - 2, k);
    if (!r.applicable) continue;
    std::printf("audit inf-sup j=%d n=%d beta=%.6f\n", d - 2, n, r.beta);
    if (n == 1) beta0 = r.beta;
    if (n > 1 && r.beta < 0.5 * beta0) {
      std::printf("audit inf-sup FAILED: beta degenerates\n");
      ++failures;
    }
  }
  return failures;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decoupled conforming FEM for fourth-order exterior "
               "differential equations on the unit box"};
  app.require_subcommand(1);

  CLI::App* solve = app.add_subcommand("solve", "Run a convergence study");
  std::string problem = "biharmonic";
  int dim = 3;
  int k = 1;
  std::vector<int> levels;
  bool deep = false;
  std::string solver = "auto";
  double rtol = 1e-10;
  bool no_eliminate = false;
  std::string out_path;
  std::string mesh_dump;
  bool audit = false;
  solve->add_option("--problem", problem, "biharmonic|quadcurl|fourthdiv")
      ->check(CLI::IsMember({"biharmonic", "quadcurl", "fourthdiv"}));
  solve->add_option("--dim", dim, "Ambient dimension")->check(CLI::IsMember({2, 3}));
  solve->add_option("--k", k, "Polynomial degree parameter")
      ->check(CLI::IsMember({1, 2}));
  solve->add_option("--levels", levels, "Mesh subdivisions per axis")
      ->delimiter(',');
  solve->add_flag("--deep", deep, "Append the n=32 level");
  solve->add_option("--solver", solver, "auto|direct|iterative")
      ->check(CLI::IsMember({"auto", "direct", "iterative"}));
  solve->add_option("--rtol", rtol, "Iterative solver relative tolerance");
  solve->add_flag("--no-eliminate", no_eliminate,
                  "Solve the full saddle systems instead of the eliminated "
                  "positive definite ones");
  solve->add_option("--out", out_path, "Write the CSV report to this path");
  solve->add_option("--mesh-dump", mesh_dump,
                    "Write the coarsest mesh to this path");
  solve->add_flag("--audit", audit,
                  "Run exactness/inf-sup/unisolvence audits first");

  CLI11_PARSE(app, argc, argv);

  using namespace feec;
  if (levels.empty()) levels = {4, 8, 16};
  if (deep) levels.push_back(32);

  if (audit) {
    int failures = run_audit(dim, k);
    if (failures > 0) {
      std::fprintf(stderr, "audit failed (%d failures)\n", failures);
      return kExitInvariant;
    }
  }

  ManufacturedCase mc;
  try {
    mc = make_case(problem, dim);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }

  if (!mesh_dump.empty()) {
    std::ofstream os(mesh_dump);
    box_mesh(dim, levels.front()).dump(os);
  }

  SolverConfig cfg;
  cfg.rtol = rtol;
  cfg.eliminate = !no_eliminate;
  if (solver == "direct") cfg.kind = SolverConfig::Kind::Direct;
  if (solver == "iterative") cfg.kind = SolverConfig::Kind::Iterative;

  ConvergenceReport rep;
  try {
    rep = run_convergence(mc, k, levels, cfg);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitSolver;
  }

  std::string csv = to_csv(rep);
  if (!out_path.empty()) {
    std::ofstream os(out_path);
    os << csv;
  }
  std::cout << csv;
  std::cerr << "\n" << to_markdown(rep);

  if (!rep.solver_ok) {
    std::fprintf(stderr, "error: linear solver did not converge\n");
    return kExitSolver;
  }
  if (!rep.multipliers_ok) {
    std::fprintf(stderr,
                 "error: multiplier norm exceeds tolerance (data violating "
                 "the divergence constraint, or a bug)\n");
    return kExitInvariant;
  }
  return 0;
}
