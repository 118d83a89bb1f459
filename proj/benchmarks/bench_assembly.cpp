// Assembly and end-to-end solve benchmarks on uniform box meshes.
#include <benchmark/benchmark.h>

#include "feec/fespace.hpp"
#include "feec/harness.hpp"
#include "feec/mesh.hpp"
#include "feec/system.hpp"

namespace {

using namespace feec;

void BM_StiffnessAssembly3D(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  SimplicialMesh mesh = box_mesh(3, n);
  FESpace W(mesh, ElementSpec{SpaceKind::Full, 1, 0}, /*bc=*/true);
  for (auto _ : state) {
    SpMat S = assemble_bilinear(W, Deriv::D, W, Deriv::D);
    benchmark::DoNotOptimize(S.nonZeros());
  }
  state.SetItemsProcessed(state.iterations() * mesh.num_cells());
}
BENCHMARK(BM_StiffnessAssembly3D)->Arg(4)->Arg(8)->Arg(16);

void BM_MixedAssembly3D(benchmark::State& state) {
  // The velocity-pressure coupling block of the Stokes stage (j = 0, k = 1).
  const int n = static_cast<int>(state.range(0));
  SimplicialMesh mesh = box_mesh(3, n);
  FESpace Phi(mesh, ElementSpec{SpaceKind::Phi, 1, 1}, /*bc=*/true);
  FESpace P(mesh, ElementSpec{SpaceKind::Trimmed, 1, 2}, /*bc=*/false,
            /*star=*/true);
  for (auto _ : state) {
    SpMat B = assemble_bilinear(P, Deriv::None, Phi, Deriv::D);
    benchmark::DoNotOptimize(B.nonZeros());
  }
  state.SetItemsProcessed(state.iterations() * mesh.num_cells());
}
BENCHMARK(BM_MixedAssembly3D)->Arg(4)->Arg(8);

void BM_LoadAssembly3D(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  SimplicialMesh mesh = box_mesh(3, n);
  FESpace W(mesh, ElementSpec{SpaceKind::Full, 1, 0}, /*bc=*/true);
  ManufacturedCase mc = make_case("biharmonic", 3);
  FormField f = mc.f.field();
  for (auto _ : state) {
    Eigen::VectorXd F = assemble_load(W, Deriv::None, f, 10);
    benchmark::DoNotOptimize(F.sum());
  }
  state.SetItemsProcessed(state.iterations() * mesh.num_cells());
}
BENCHMARK(BM_LoadAssembly3D)->Arg(4)->Arg(8);

void BM_DecoupledSolve3D(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  SimplicialMesh mesh = box_mesh(3, n);
  ManufacturedCase mc = make_case("biharmonic", 3);
  FormField f = mc.f.field();
  SolverConfig cfg;
  for (auto _ : state) {
    DecoupledSolution sol = solve_fourth_order(mesh, 0, 1, f, FormField(), cfg);
    benchmark::DoNotOptimize(sol.u.norm());
  }
}
BENCHMARK(BM_DecoupledSolve3D)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
