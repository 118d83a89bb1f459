// Assembly and solution of the decoupled method: two mixed second-order
// problems and one generalized Stokes problem, with diagonal multiplier
// elimination and sparse solvers.
#ifndef FEEC_SYSTEM_HPP
#define FEEC_SYSTEM_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <memory>

#include "feec/fespace.hpp"
#include "feec/mesh.hpp"

namespace feec {

using SpMat = Eigen::SparseMatrix<double>;

// Component values (npts x C(d, deg)) of a form field at barycentric points
// of a cell.
using FormField =
    std::function<Eigen::MatrixXd(const CellGeometry&, const Eigen::MatrixXd&)>;

// Operator applied to a basis before taking L2 inner products.
enum class Deriv { None, D, Delta, Grad };

// M(i, j) = integral < op_row basis_row_i , op_col basis_col_j >.
SpMat assemble_bilinear(const FESpace& row_space, Deriv row_op,
                        const FESpace& col_space, Deriv col_op);
// F(i) = integral < data , op basis_i >, with quadrature of at least the
// given degree.
Eigen::VectorXd assemble_load(const FESpace& test, Deriv op,
                              const FormField& data, int quad_degree);
// F(i) = integral < op_src (sum_j coeffs_j basis_src_j) , op basis_test_i >.
Eigen::VectorXd assemble_load_fe(const FESpace& test, Deriv test_op,
                                 const FESpace& src, Deriv src_op,
                                 const Eigen::VectorXd& src_coeffs);
// m(i) = integral < basis_i , constant unit form > (single increasing
// component when the field degree is 0 or d; otherwise all components must
// be specified by `component`).
Eigen::VectorXd mean_vector(const FESpace& space, int component = 0);

double l2_norm(const FESpace& space, const Eigen::VectorXd& coeffs);

struct SolverConfig {
  enum class Kind { Auto, Direct, Iterative };
  Kind kind = Kind::Auto;
  double rtol = 1e-10;
  int max_iterations = 0;  // 0: heuristic
  bool eliminate = true;   // diagonal multiplier elimination
  int load_quadrature = 10;
  int direct_size_cap = 6000;  // Auto: direct solve up to this many unknowns
};

struct SolveStats {
  bool converged = true;
  int iterations = 0;
  double residual = 0.0;
};

Eigen::VectorXd solve_spd(const SpMat& A, const Eigen::VectorXd& b,
                          const SolverConfig& cfg, SolveStats* stats);
// Preconditioned MINRES for symmetric (indefinite) systems; precond_inv is
// the inverse of a positive diagonal preconditioner.
Eigen::VectorXd minres_solve(const SpMat& A, const Eigen::VectorXd& b,
                             const Eigen::VectorXd& precond_inv, double rtol,
                             int max_iterations, SolveStats* stats);

struct MixedSolution {
  Eigen::VectorXd primal, multiplier;
  SolveStats stats;
};

// Solves (d w, d v) + (v, d lambda) = F_v, (w, d eta) - <lambda, eta>_D = G.
MixedSolution solve_mixed_darcy(const FESpace& V, const FESpace& L,
                                const Eigen::VectorXd& F,
                                const Eigen::VectorXd& G,
                                const SolverConfig& cfg);

struct StokesSolution {
  Eigen::VectorXd phi, p, r;
  SolveStats stats;
};

// Solves (grad phi, grad psi) + <r, s>_D + (d psi + delta s, p) = F_psi,
// (d phi + delta r, q) = 0; collapses to the mean-constrained Poisson
// problem when the pressure space is empty.
StokesSolution solve_generalized_stokes(const FESpace& Phi, const FESpace& P,
                                        const FESpace& R,
                                        const Eigen::VectorXd& F_phi,
                                        const SolverConfig& cfg);

struct DecoupledSolution {
  std::shared_ptr<FESpace> W, L, Phi, P, R, U;  // L also hosts z
  Eigen::VectorXd w, lambda, phi, p, r, u, z;
  SolveStats stats_w, stats_stokes, stats_u;
  double mult_norm_max = 0.0;  // max of ||lambda||, ||r||, ||z||
  double primal_scale = 0.0;   // L2 norm of u_h
  double seconds = 0.0;
};

// End-to-end decoupled solve of -delta Delta d u + d lambda = f, delta u = g
// with homogeneous boundary conditions; g may be empty for j = 0.
DecoupledSolution solve_fourth_order(const SimplicialMesh& mesh, int j, int k,
                                     const FormField& f, const FormField& g,
                                     const SolverConfig& cfg);

struct InfSupResult {
  bool applicable = false;
  double beta = 0.0;
};

// Discrete inf-sup constant of the Stokes pair via the dense pressure Schur
// generalized eigenproblem; requires j <= d-2 and a modest problem size.
InfSupResult infsup_probe(const SimplicialMesh& mesh, int j, int k,
                          int size_cap = 6000);

}  // namespace feec

#endif
