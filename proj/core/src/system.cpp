#include "feec/system.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "feec/quadrature.hpp"

namespace feec {

namespace {

int max_poly_deg(const std::vector<PolynomialForm>& forms) {
  int deg = 0;
  for (const auto& f : forms) deg = std::max(deg, f.poly_deg);
  return deg;
}

std::vector<PolynomialForm> apply_op(std::vector<PolynomialForm> basis,
                                     Deriv op) {
  if (op == Deriv::D) {
    for (auto& f : basis) f = exterior_derivative(f);
  } else if (op == Deriv::Delta) {
    for (auto& f : basis) f = codifferential(f);
  }
  return basis;  // None and Grad keep the forms themselves
}

// Flattened value table of an operated basis at quadrature points: one
// column per basis form, rows run over (point, component) pairs. For Grad
// the components are the ncomb*dim cartesian derivative entries.
Eigen::MatrixXd value_table(const std::vector<PolynomialForm>& basis, Deriv op,
                            const Eigen::MatrixXd& bary) {
  const int n = static_cast<int>(basis.size());
  const int npts = static_cast<int>(bary.rows());
  if (n == 0) return Eigen::MatrixXd(0, 0);
  Eigen::MatrixXd first = (op == Deriv::Grad) ? basis[0].gradients(bary)
                                              : basis[0].values(bary);
  const int ncomp = static_cast<int>(first.cols());
  Eigen::MatrixXd X(npts * ncomp, n);
  auto pack = [&](const Eigen::MatrixXd& v, int col) {
    for (int c = 0; c < ncomp; ++c) X.block(c * npts, col, npts, 1) = v.col(c);
  };
  pack(first, 0);
  for (int i = 1; i < n; ++i)
    pack(op == Deriv::Grad ? basis[i].gradients(bary) : basis[i].values(bary),
         i);
  return X;
}

Eigen::MatrixXd weighted(const Eigen::MatrixXd& X,
                         const Eigen::VectorXd& wts) {
  const int npts = static_cast<int>(wts.size());
  Eigen::MatrixXd Y = X;
  const int blocks = npts == 0 ? 0 : static_cast<int>(X.rows()) / npts;
  for (int b = 0; b < blocks; ++b)
    Y.middleRows(b * npts, npts).array().colwise() *= wts.array();
  return Y;
}

void scatter(std::vector<Eigen::Triplet<double>>& trips,
             const std::vector<int>& rows, const std::vector<int>& cols,
             const Eigen::MatrixXd& M) {
  for (int i = 0; i < static_cast<int>(rows.size()); ++i) {
    if (rows[i] < 0) continue;
    for (int j = 0; j < static_cast<int>(cols.size()); ++j) {
      if (cols[j] < 0) continue;
      trips.emplace_back(rows[i], cols[j], M(i, j));
    }
  }
}

Eigen::VectorXd diag_mass(const FESpace& space) {
  SpMat M = assemble_bilinear(space, Deriv::None, space, Deriv::None);
  return M.diagonal();
}

int heuristic_max_iter(const SolverConfig& cfg, int n) {
  if (cfg.max_iterations > 0) return cfg.max_iterations;
  return std::max(2000, 20 * n);
}

// Symmetric sparse block matrix builder for the saddle systems.
struct BlockBuilder {
  std::vector<int> offsets{0};
  std::vector<Eigen::Triplet<double>> trips;

  int add_block_dim(int n) {
    offsets.push_back(offsets.back() + n);
    return static_cast<int>(offsets.size()) - 2;
  }
  int total() const { return offsets.back(); }
  void add(int bi, int bj, const SpMat& A, double scale = 1.0,
           bool also_transpose = false) {
    const int r0 = offsets[bi], c0 = offsets[bj];
    for (int k = 0; k < A.outerSize(); ++k)
      for (SpMat::InnerIterator it(A, k); it; ++it) {
        trips.emplace_back(r0 + static_cast<int>(it.row()),
                           c0 + static_cast<int>(it.col()), scale * it.value());
        if (also_transpose)
          trips.emplace_back(c0 + static_cast<int>(it.col()),
                             r0 + static_cast<int>(it.row()),
                             scale * it.value());
      }
  }
  void add_vector(int bi, int bj, const Eigen::VectorXd& v) {
    const int r0 = offsets[bi], c0 = offsets[bj];
    for (int i = 0; i < v.size(); ++i) {
      trips.emplace_back(r0 + i, c0, v[i]);
      trips.emplace_back(c0, r0 + i, v[i]);
    }
  }
  SpMat build() const {
    SpMat A(total(), total());
    A.setFromTriplets(trips.begin(), trips.end());
    return A;
  }
};

// Exact solver for an SPD matrix whose trailing dofs split into independent
// dense blocks (cell-interior dofs): static condensation of those blocks,
// then Cholesky (or conjugate gradients when large) on the leading part.
class CondensedSpd {
 public:
  CondensedSpd(const SpMat& A, int offset, int block, const SolverConfig& cfg)
      : n_(static_cast<int>(A.rows())), off_(offset), blk_(block) {
    Avv_ = A.topLeftCorner(off_, off_);
    if (off_ < n_) {
      Avb_ = A.topRightCorner(off_, n_ - off_);
      std::vector<Eigen::Triplet<double>> trips;
      Eigen::MatrixXd blockm(blk_, blk_);
      for (int base = off_; base < n_; base += blk_) {
        for (int i = 0; i < blk_; ++i)
          for (int j = 0; j < blk_; ++j) blockm(i, j) = A.coeff(base + i, base + j);
        Eigen::MatrixXd inv = blockm.inverse();
        for (int i = 0; i < blk_; ++i)
          for (int j = 0; j < blk_; ++j)
            trips.emplace_back(base - off_ + i, base - off_ + j, inv(i, j));
      }
      AbbInv_.resize(n_ - off_, n_ - off_);
      AbbInv_.setFromTriplets(trips.begin(), trips.end());
      Avv_ = (Avv_ - SpMat(Avb_ * AbbInv_ * SpMat(Avb_.transpose()))).pruned();
    }
    use_ldlt_ = off_ <= 60000;
    if (use_ldlt_) {
      ldlt_.compute(Avv_);
      ok_ = ldlt_.info() == Eigen::Success;
    } else {
      cg_.setTolerance(std::min(cfg.rtol * 0.1, 1e-12));
      cg_.setMaxIterations(heuristic_max_iter(cfg, off_));
      cg_.compute(Avv_);
      ok_ = cg_.preconditioner().info() == Eigen::Success;
    }
  }

  bool ok() const { return ok_; }

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
    Eigen::VectorXd x(n_);
    if (off_ == n_) {
      x = use_ldlt_ ? ldlt_.solve(b).eval() : cg_.solve(b).eval();
      return x;
    }
    Eigen::VectorXd bv = b.head(off_), bb = b.tail(n_ - off_);
    Eigen::VectorXd rv = bv - Avb_ * (AbbInv_ * bb);
    Eigen::VectorXd xv = use_ldlt_ ? ldlt_.solve(rv).eval() : cg_.solve(rv).eval();
    x.head(off_) = xv;
    x.tail(n_ - off_) = AbbInv_ * (bb - Avb_.transpose() * xv);
    return x;
  }

 private:
  int n_, off_, blk_;
  SpMat Avv_, Avb_, AbbInv_;
  Eigen::SimplicialLDLT<SpMat> ldlt_;
  // Incomplete Cholesky cuts CG iteration counts several-fold versus a
  // Jacobi preconditioner on these stiffness-dominated systems.
  Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper,
                           Eigen::IncompleteCholesky<double>>
      cg_;
  bool use_ldlt_ = true;
  bool ok_ = true;
};

// Preconditioned conjugate gradients with functional operator and
// preconditioner.
using VecOp = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
Eigen::VectorXd pcg_solve(const VecOp& apply, const Eigen::VectorXd& b,
                          const VecOp& precond_inv, double rtol,
                          int max_iterations, SolveStats* stats) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(b.size());
  Eigen::VectorXd r = b;
  Eigen::VectorXd z = precond_inv(r);
  double rz = r.dot(z);
  const double res0 = std::sqrt(std::max(rz, 0.0));
  if (stats) {
    stats->converged = true;
    stats->iterations = 0;
    stats->residual = 0.0;
  }
  if (res0 == 0.0) return x;
  Eigen::VectorXd p = z;
  int it = 0;
  double rel = 1.0;
  for (; it < max_iterations; ++it) {
    Eigen::VectorXd Ap = apply(p);
    const double alpha = rz / p.dot(Ap);
    x += alpha * p;
    Eigen::VectorXd r_prev = r;
    r -= alpha * Ap;
    z = precond_inv(r);
    const double rz_next = r.dot(z);
    rel = std::sqrt(std::max(rz_next, 0.0)) / res0;
    if (rel <= rtol) {
      ++it;
      break;
    }
    // Polak-Ribiere update: flexible CG, tolerant of preconditioners that
    // are themselves inexact inner solves; identical to Fletcher-Reeves
    // when the preconditioner is a fixed linear operator.
    const double beta = z.dot(r - r_prev) / rz;
    p = z + std::max(beta, 0.0) * p;
    rz = rz_next;
  }
  if (stats) {
    stats->iterations = it;
    stats->residual = rel;
    stats->converged = rel <= rtol * 10;
  }
  return x;
}

Eigen::VectorXd solve_symmetric(const SpMat& A, const Eigen::VectorXd& b,
                                const Eigen::VectorXd& precond_diag,
                                const SolverConfig& cfg, SolveStats* stats) {
  const int n = static_cast<int>(A.rows());
  const bool direct = cfg.kind == SolverConfig::Kind::Direct ||
                      (cfg.kind == SolverConfig::Kind::Auto &&
                       n <= cfg.direct_size_cap);
  if (direct) {
    Eigen::SparseLU<SpMat> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) {
      if (stats) stats->converged = false;
      return Eigen::VectorXd::Zero(n);
    }
    Eigen::VectorXd x = lu.solve(b);
    if (stats) {
      stats->converged = true;
      stats->iterations = 0;
      stats->residual = (A * x - b).norm() / std::max(b.norm(), 1e-300);
    }
    return x;
  }
  Eigen::VectorXd pinv = precond_diag.cwiseMax(1e-300).cwiseInverse();
  return minres_solve(A, b, pinv, cfg.rtol, heuristic_max_iter(cfg, n), stats);
}

}  // namespace

SpMat assemble_bilinear(const FESpace& row_space, Deriv row_op,
                        const FESpace& col_space, Deriv col_op) {
  const SimplicialMesh& mesh = row_space.mesh();
  SpMat A(row_space.dim(), col_space.dim());
  if (row_space.dim() == 0 || col_space.dim() == 0) return A;
  const bool same = (&row_space == &col_space) && (row_op == col_op);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(mesh.num_cells()) *
                row_space.local_size() * col_space.local_size());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    auto basis_r = apply_op(row_space.local_basis(c), row_op);
    auto basis_c = same ? basis_r : apply_op(col_space.local_basis(c), col_op);
    const int degq = max_poly_deg(basis_r) + max_poly_deg(basis_c);
    const auto& quad = simplex_quadrature(mesh.dim(), degq);
    Eigen::MatrixXd Xr = value_table(basis_r, row_op, quad.barycentric);
    Eigen::MatrixXd Xc = same ? Xr : value_table(basis_c, col_op,
                                                 quad.barycentric);
    if (Xr.rows() == 0 || Xc.rows() == 0 || Xr.rows() != Xc.rows()) continue;
    Eigen::MatrixXd M = mesh.geometry(c).measure *
                        (weighted(Xr, quad.weights).transpose() * Xc);
    scatter(trips, row_space.cell_dofs(c), col_space.cell_dofs(c), M);
  }
  A.setFromTriplets(trips.begin(), trips.end());
  return A;
}

Eigen::VectorXd assemble_load(const FESpace& test, Deriv op,
                              const FormField& data, int quad_degree) {
  const SimplicialMesh& mesh = test.mesh();
  Eigen::VectorXd F = Eigen::VectorXd::Zero(test.dim());
  if (test.dim() == 0) return F;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    auto basis = apply_op(test.local_basis(c), op);
    const int degq = std::max(quad_degree, 2 * max_poly_deg(basis));
    const auto& quad = simplex_quadrature(mesh.dim(), degq);
    Eigen::MatrixXd X = value_table(basis, op, quad.barycentric);
    Eigen::MatrixXd D = data(mesh.geometry(c), quad.barycentric);
    const int npts = quad.size();
    if (X.rows() != D.rows() * D.cols() || X.rows() == 0) continue;
    Eigen::VectorXd dflat(X.rows());
    for (int comp = 0; comp < D.cols(); ++comp)
      dflat.segment(comp * npts, npts) = D.col(comp);
    Eigen::VectorXd loc = mesh.geometry(c).measure *
                          (weighted(X, quad.weights).transpose() * dflat);
    const auto& ids = test.cell_dofs(c);
    for (int i = 0; i < static_cast<int>(ids.size()); ++i)
      if (ids[i] >= 0) F[ids[i]] += loc[i];
  }
  return F;
}

Eigen::VectorXd assemble_load_fe(const FESpace& test, Deriv test_op,
                                 const FESpace& src, Deriv src_op,
                                 const Eigen::VectorXd& src_coeffs) {
  const SimplicialMesh& mesh = test.mesh();
  Eigen::VectorXd F = Eigen::VectorXd::Zero(test.dim());
  if (test.dim() == 0 || src.dim() == 0) return F;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    auto basis_t = apply_op(test.local_basis(c), test_op);
    auto basis_s = apply_op(src.local_basis(c), src_op);
    const int degq = max_poly_deg(basis_t) + max_poly_deg(basis_s);
    const auto& quad = simplex_quadrature(mesh.dim(), degq);
    Eigen::MatrixXd Xt = value_table(basis_t, test_op, quad.barycentric);
    Eigen::MatrixXd Xs = value_table(basis_s, src_op, quad.barycentric);
    if (Xt.rows() == 0 || Xs.rows() == 0 || Xt.rows() != Xs.rows()) continue;
    const auto& sids = src.cell_dofs(c);
    Eigen::VectorXd sloc = Eigen::VectorXd::Zero(sids.size());
    for (int i = 0; i < static_cast<int>(sids.size()); ++i)
      if (sids[i] >= 0) sloc[i] = src_coeffs[sids[i]];
    Eigen::VectorXd loc = mesh.geometry(c).measure *
                          (weighted(Xt, quad.weights).transpose() * (Xs * sloc));
    const auto& ids = test.cell_dofs(c);
    for (int i = 0; i < static_cast<int>(ids.size()); ++i)
      if (ids[i] >= 0) F[ids[i]] += loc[i];
  }
  return F;
}

Eigen::VectorXd mean_vector(const FESpace& space, int component) {
  // The constant unit form has a single nonzero increasing component.
  const int m = space.field_deg();
  const int d = space.mesh().dim();
  const int ncomb = static_cast<int>(FormIndex(d, m).size());
  FormField data = [component, ncomb](const CellGeometry&,
                                      const Eigen::MatrixXd& bary) {
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(bary.rows(), ncomb);
    v.col(component).setOnes();
    return v;
  };
  return assemble_load(space, Deriv::None, data, 0);
}

double l2_norm(const FESpace& space, const Eigen::VectorXd& coeffs) {
  if (space.dim() == 0 || coeffs.size() == 0) return 0.0;
  const SimplicialMesh& mesh = space.mesh();
  double acc = 0.0;
  const auto& quad = simplex_quadrature(mesh.dim(), 2 * (space.spec().k + 1));
  for (int c = 0; c < mesh.num_cells(); ++c) {
    Eigen::MatrixXd V = space.evaluate(coeffs, c, quad.barycentric);
    acc += mesh.geometry(c).measure *
           (quad.weights.transpose() * V.array().square().matrix()).sum();
  }
  return std::sqrt(std::max(acc, 0.0));
}

Eigen::VectorXd solve_spd(const SpMat& A, const Eigen::VectorXd& b,
                          const SolverConfig& cfg, SolveStats* stats) {
  const int n = static_cast<int>(A.rows());
  const bool direct = cfg.kind == SolverConfig::Kind::Direct ||
                      (cfg.kind == SolverConfig::Kind::Auto &&
                       n <= cfg.direct_size_cap);
  if (direct) {
    Eigen::SimplicialLDLT<SpMat> ldlt;
    ldlt.compute(A);
    if (ldlt.info() != Eigen::Success) {
      if (stats) stats->converged = false;
      return Eigen::VectorXd::Zero(n);
    }
    Eigen::VectorXd x = ldlt.solve(b);
    if (stats) {
      stats->converged = true;
      stats->iterations = 0;
      stats->residual = (A * x - b).norm() / std::max(b.norm(), 1e-300);
    }
    return x;
  }
  Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper,
                           Eigen::IncompleteCholesky<double>>
      cg;
  cg.setTolerance(cfg.rtol);
  cg.setMaxIterations(heuristic_max_iter(cfg, n));
  cg.compute(A);
  Eigen::VectorXd x = cg.solve(b);
  if (stats) {
    stats->converged = cg.info() == Eigen::Success;
    stats->iterations = static_cast<int>(cg.iterations());
    stats->residual = cg.error();
  }
  return x;
}

Eigen::VectorXd minres_solve(const SpMat& A, const Eigen::VectorXd& b,
                             const Eigen::VectorXd& precond_inv, double rtol,
                             int max_iterations, SolveStats* stats) {
  const int n = static_cast<int>(A.rows());
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd v_prev = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd v = b;
  Eigen::VectorXd z = precond_inv.cwiseProduct(v);
  double gamma_prev = 1.0;
  double gamma = std::sqrt(std::max(v.dot(z), 0.0));
  const double res0 = gamma;
  if (stats) {
    stats->converged = true;
    stats->iterations = 0;
    stats->residual = 0.0;
  }
  if (res0 == 0.0) return x;
  double eta = gamma;
  double s_prev = 0.0, s_cur = 0.0, c_prev = 1.0, c_cur = 1.0;
  Eigen::VectorXd w_prev = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd w_cur = Eigen::VectorXd::Zero(n);
  int it = 0;
  double rel = 1.0;
  for (; it < max_iterations; ++it) {
    Eigen::VectorXd q = z / gamma;
    Eigen::VectorXd Aq = A * q;
    const double alpha = q.dot(Aq);
    Eigen::VectorXd v_next =
        Aq - (alpha / gamma) * v - (gamma / gamma_prev) * v_prev;
    Eigen::VectorXd z_next = precond_inv.cwiseProduct(v_next);
    const double gamma_next = std::sqrt(std::max(v_next.dot(z_next), 0.0));
    const double a0 = c_cur * alpha - c_prev * s_cur * gamma;
    const double a1 = std::sqrt(a0 * a0 + gamma_next * gamma_next);
    const double a2 = s_cur * alpha + c_prev * c_cur * gamma;
    const double a3 = s_prev * gamma;
    c_prev = c_cur;
    s_prev = s_cur;
    c_cur = a0 / a1;
    s_cur = gamma_next / a1;
    Eigen::VectorXd w_next = (q - a3 * w_prev - a2 * w_cur) / a1;
    x += (c_cur * eta) * w_next;
    eta = -s_cur * eta;
    rel = std::abs(eta) / res0;
    v_prev.swap(v);
    v.swap(v_next);
    z.swap(z_next);
    gamma_prev = gamma;
    gamma = gamma_next;
    w_prev.swap(w_cur);
    w_cur.swap(w_next);
    if (rel <= rtol || gamma <= 1e-300) {
      ++it;
      break;
    }
  }
  if (stats) {
    stats->iterations = it;
    stats->residual = rel;
    stats->converged = rel <= rtol * 10;
  }
  return x;
}

MixedSolution solve_mixed_darcy(const FESpace& V, const FESpace& L,
                                const Eigen::VectorXd& F,
                                const Eigen::VectorXd& G,
                                const SolverConfig& cfg) {
  MixedSolution sol;
  SpMat S = assemble_bilinear(V, Deriv::D, V, Deriv::D);
  if (L.dim() == 0) {
    sol.primal = solve_spd(S, F, cfg, &sol.stats);
    sol.multiplier.resize(0);
    return sol;
  }
  SpMat C = assemble_bilinear(V, Deriv::None, L, Deriv::D);
  Eigen::VectorXd Dm = diag_mass(L);
  Eigen::VectorXd Dinv = Dm.cwiseInverse();
  if (cfg.eliminate) {
    SpMat K = S + SpMat(C * Dinv.asDiagonal() * SpMat(C.transpose()));
    Eigen::VectorXd rhs = F + C * Dinv.cwiseProduct(G);
    sol.primal = solve_spd(K, rhs, cfg, &sol.stats);
    sol.multiplier =
        Dinv.cwiseProduct(C.transpose() * sol.primal - G);
  } else {
    BlockBuilder bb;
    const int bw = bb.add_block_dim(V.dim());
    const int bl = bb.add_block_dim(L.dim());
    bb.add(bw, bw, S);
    bb.add(bw, bl, C, 1.0, /*also_transpose=*/true);
    SpMat Dmat(L.dim(), L.dim());
    for (int i = 0; i < L.dim(); ++i) Dmat.insert(i, i) = Dm[i];
    bb.add(bl, bl, Dmat, -1.0);
    SpMat K = bb.build();
    Eigen::VectorXd rhs(K.rows());
    rhs << F, G;
    Eigen::VectorXd pd(K.rows());
    pd << S.diagonal().cwiseAbs().cwiseMax(1e-14), Dm;
    Eigen::VectorXd xy = solve_symmetric(K, rhs, pd, cfg, &sol.stats);
    sol.primal = xy.head(V.dim());
    sol.multiplier = xy.tail(L.dim());
  }
  return sol;
}

StokesSolution solve_generalized_stokes(const FESpace& Phi, const FESpace& P,
                                        const FESpace& R,
                                        const Eigen::VectorXd& F_phi,
                                        const SolverConfig& cfg) {
  StokesSolution sol;
  const int d = Phi.mesh().dim();
  SpMat A = assemble_bilinear(Phi, Deriv::Grad, Phi, Deriv::Grad);
  if (P.dim() == 0) {
    // Degenerate branch (top form degree): mean-constrained vector Poisson.
    sol.p.resize(0);
    sol.r.resize(0);
    if (Phi.field_deg() == d) {
      Eigen::VectorXd m = mean_vector(Phi);
      BlockBuilder bb;
      const int bphi = bb.add_block_dim(Phi.dim());
      const int bmu = bb.add_block_dim(1);
      bb.add(bphi, bphi, A);
      bb.add_vector(bphi, bmu, m);
      Eigen::VectorXd rhs(bb.total());
      rhs << F_phi, 0.0;
      Eigen::VectorXd pd(bb.total());
      pd << A.diagonal().cwiseAbs().cwiseMax(1e-14),
          Eigen::VectorXd::Ones(1);
      Eigen::VectorXd xy = solve_symmetric(bb.build(), rhs, pd, cfg, &sol.stats);
      sol.phi = xy.head(Phi.dim());
    } else {
      sol.phi = solve_spd(A, F_phi, cfg, &sol.stats);
    }
    return sol;
  }
  SpMat B = assemble_bilinear(P, Deriv::None, Phi, Deriv::D);
  SpMat Rm;
  Eigen::VectorXd Drinv;
  if (R.dim() > 0) {
    Rm = assemble_bilinear(P, Deriv::None, R, Deriv::Delta);
    Drinv = diag_mass(R).cwiseInverse();
  }
  const bool mean_p = (P.field_deg() == d);
  const int n_total = Phi.dim() + P.dim() + (mean_p ? 1 : 0);
  const bool direct = cfg.kind == SolverConfig::Kind::Direct ||
                      (cfg.kind == SolverConfig::Kind::Auto &&
                       n_total <= cfg.direct_size_cap);
  if (!direct) {
    // Pressure-Schur conjugate gradients with exact velocity solves: the
    // cell-interior (bubble) block of A is condensed away, leaving a small
    // SPD system. A possible constant pressure mode is removed by a rank-one
    // penalty, which is exact because the mean vector annihilates the range
    // of B.
    CondensedSpd Ainv(A, Phi.interior_offset(),
                      std::max(Phi.interior_per_cell(), 1), cfg);
    if (!Ainv.ok()) {
      sol.stats.converged = false;
      return sol;
    }
    Eigen::VectorXd mdiag = diag_mass(P);
    Eigen::VectorXd mp;
    double sigma = 0.0;
    if (mean_p) {
      mp = mean_vector(P);
      sigma = mdiag.maxCoeff() / std::max(mp.squaredNorm(), 1e-300);
    }
    SpMat Sp;
    if (R.dim() > 0)
      Sp = SpMat(Rm * Drinv.asDiagonal() * SpMat(Rm.transpose())).pruned();
    auto schur = [&](const Eigen::VectorXd& q) {
      Eigen::VectorXd y = B * Ainv.solve(B.transpose() * q);
      if (R.dim() > 0) y += Sp * q;
      if (mean_p) y += (sigma * mp.dot(q)) * mp;
      return y;
    };
    // B Ainv B^T is spectrally equivalent to the pressure mass matrix, but
    // the eliminated r-block Sp scales like h^-2 on its range, so the
    // preconditioner must include it: apply (M_p + Sp)^-1 approximately by
    // an inner conjugate gradient sweep (incomplete Cholesky inside; an
    // exact factorization fills in badly), and fold the rank-one mean
    // penalty in via Sherman-Morrison. The outer iteration is flexible CG,
    // which tolerates the inexact inner solves.
    SpMat Pmat = assemble_bilinear(P, Deriv::None, P, Deriv::None);
    if (R.dim() > 0) Pmat = SpMat(Pmat + Sp).pruned();
    Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper,
                             Eigen::IncompleteCholesky<double>>
        pcg_inner;
    pcg_inner.setTolerance(1e-2);
    pcg_inner.setMaxIterations(400);
    pcg_inner.compute(Pmat);
    VecOp precond;
    if (pcg_inner.preconditioner().info() == Eigen::Success) {
      Eigen::VectorXd cmp;
      double denom = 1.0;
      if (mean_p) {
        pcg_inner.setTolerance(1e-10);
        cmp = pcg_inner.solve(mp);
        denom = 1.0 + sigma * mp.dot(cmp);
        pcg_inner.setTolerance(1e-2);
      }
      precond = [&pcg_inner, cmp, sigma, denom,
                 mean_p](const Eigen::VectorXd& q) {
        Eigen::VectorXd y = pcg_inner.solve(q);
        if (mean_p) y -= cmp * (sigma * cmp.dot(q) / denom);
        return y;
      };
    } else {
      Eigen::VectorXd dinv = mdiag.cwiseInverse();
      precond = [dinv](const Eigen::VectorXd& q) {
        return Eigen::VectorXd(dinv.cwiseProduct(q));
      };
    }
    Eigen::VectorXd rhs_p = B * Ainv.solve(F_phi);
    sol.p = pcg_solve(schur, rhs_p, precond, cfg.rtol,
                      heuristic_max_iter(cfg, P.dim()), &sol.stats);
    sol.phi = Ainv.solve(F_phi - B.transpose() * sol.p);
    if (R.dim() > 0)
      sol.r = -Drinv.cwiseProduct(Rm.transpose() * sol.p);
    else
      sol.r.resize(0);
    return sol;
  }
  BlockBuilder bb;
  const int bphi = bb.add_block_dim(Phi.dim());
  const int bp = bb.add_block_dim(P.dim());
  bb.add(bphi, bphi, A);
  bb.add(bp, bphi, B, 1.0, /*also_transpose=*/true);
  if (R.dim() > 0) {
    SpMat Sp = SpMat(Rm * Drinv.asDiagonal() * SpMat(Rm.transpose())).pruned();
    bb.add(bp, bp, Sp, -1.0);
  }
  if (mean_p) {
    const int bmu = bb.add_block_dim(1);
    Eigen::VectorXd mp = mean_vector(P);
    bb.add_vector(bp, bmu, mp);
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(bb.total());
  rhs.head(Phi.dim()) = F_phi;
  Eigen::VectorXd pd(bb.total());
  pd.head(Phi.dim()) = A.diagonal().cwiseAbs().cwiseMax(1e-14);
  pd.segment(Phi.dim(), P.dim()) = diag_mass(P).cwiseAbs().cwiseMax(1e-14);
  if (mean_p) pd.tail(1).setOnes();
  Eigen::VectorXd xy = solve_symmetric(bb.build(), rhs, pd, cfg, &sol.stats);
  sol.phi = xy.head(Phi.dim());
  sol.p = xy.segment(Phi.dim(), P.dim());
  if (R.dim() > 0)
    sol.r = -Drinv.cwiseProduct(Rm.transpose() * sol.p);
  else
    sol.r.resize(0);
  return sol;
}

DecoupledSolution solve_fourth_order(const SimplicialMesh& mesh, int j, int k,
                                     const FormField& f, const FormField& g,
                                     const SolverConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const int d = mesh.dim();
  if (j < 0 || j > d - 1) throw std::invalid_argument("j out of range");
  DecoupledSolution out;
  out.W = std::make_shared<FESpace>(mesh, ElementSpec{SpaceKind::Full, k, j},
                                    /*bc=*/true);
  out.L = std::make_shared<FESpace>(
      mesh, ElementSpec{SpaceKind::Trimmed, k + 1, j - 1}, /*bc=*/true);
  out.U = std::make_shared<FESpace>(
      mesh, ElementSpec{SpaceKind::Trimmed, k + 1, j}, /*bc=*/true);
  out.Phi = std::make_shared<FESpace>(mesh, ElementSpec{SpaceKind::Phi, k, j + 1},
                                      /*bc=*/true);
  out.P = std::make_shared<FESpace>(
      mesh, ElementSpec{SpaceKind::Trimmed, k, j + 2}, /*bc=*/false,
      /*star=*/true);
  out.R = std::make_shared<FESpace>(
      mesh, ElementSpec{SpaceKind::Trimmed, k, j + 3}, /*bc=*/false,
      /*star=*/true);

  // Step one: mixed source problem for w_h ~ u. The load must satisfy the
  // discrete divergence constraint (f, d eta) = 0 to solver accuracy, which
  // on coarse cells needs quadrature well beyond the error-norm degree;
  // those cells are few, so the extra points are cheap.
  int load_deg = cfg.load_quadrature;
  const double h = mesh.mesh_size();
  if (h > 0.8)
    load_deg += 16;
  else if (h > 0.4)
    load_deg += 10;
  else if (h > 0.2)
    load_deg += 4;
  Eigen::VectorXd Fw = assemble_load(*out.W, Deriv::None, f, load_deg);
  MixedSolution step1 = solve_mixed_darcy(
      *out.W, *out.L, Fw, Eigen::VectorXd::Zero(out.L->dim()), cfg);
  out.w = step1.primal;
  out.lambda = step1.multiplier;
  out.stats_w = step1.stats;

  // Step two: generalized Stokes problem for phi_h ~ d u.
  Eigen::VectorXd Fphi =
      assemble_load_fe(*out.Phi, Deriv::None, *out.W, Deriv::D, out.w);
  StokesSolution step2 = solve_generalized_stokes(*out.Phi, *out.P, *out.R,
                                                  Fphi, cfg);
  out.phi = step2.phi;
  out.p = step2.p;
  out.r = step2.r;
  out.stats_stokes = step2.stats;

  // Step three: mixed problem recovering u_h from phi_h and g.
  Eigen::VectorXd Fu =
      assemble_load_fe(*out.U, Deriv::D, *out.Phi, Deriv::None, out.phi);
  Eigen::VectorXd Gz = Eigen::VectorXd::Zero(out.L->dim());
  if (g && out.L->dim() > 0)
    Gz = assemble_load(*out.L, Deriv::None, g, load_deg);
  MixedSolution step3 = solve_mixed_darcy(*out.U, *out.L, Fu, Gz, cfg);
  out.u = step3.primal;
  out.z = step3.multiplier;
  out.stats_u = step3.stats;

  out.primal_scale = l2_norm(*out.U, out.u);
  double m = 0.0;
  if (out.lambda.size() > 0) m = std::max(m, l2_norm(*out.L, out.lambda));
  if (out.r.size() > 0) m = std::max(m, l2_norm(*out.R, out.r));
  if (out.z.size() > 0) m = std::max(m, l2_norm(*out.L, out.z));
  out.mult_norm_max = m;
  out.seconds = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  return out;
}

InfSupResult infsup_probe(const SimplicialMesh& mesh, int j, int k,
                          int size_cap) {
  InfSupResult res;
  const int d = mesh.dim();
  if (j < 0 || j > d - 2) return res;
  FESpace Phi(mesh, ElementSpec{SpaceKind::Phi, k, j + 1}, /*bc=*/true);
  FESpace P(mesh, ElementSpec{SpaceKind::Trimmed, k, j + 2}, /*bc=*/false,
            /*star=*/true);
  FESpace R(mesh, ElementSpec{SpaceKind::Trimmed, k, j + 3}, /*bc=*/false,
            /*star=*/true);
  if (P.dim() == 0 || Phi.dim() + R.dim() + P.dim() > size_cap) return res;

  // Velocity-block norm: full H1 on Phi, mass + <delta., delta.> on R.
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(Phi.dim() + R.dim(),
                                            Phi.dim() + R.dim());
  K.topLeftCorner(Phi.dim(), Phi.dim()) =
      Eigen::MatrixXd(assemble_bilinear(Phi, Deriv::Grad, Phi, Deriv::Grad)) +
      Eigen::MatrixXd(assemble_bilinear(Phi, Deriv::None, Phi, Deriv::None));
  if (R.dim() > 0) {
    K.bottomRightCorner(R.dim(), R.dim()) =
        Eigen::MatrixXd(assemble_bilinear(R, Deriv::None, R, Deriv::None)) +
        Eigen::MatrixXd(assemble_bilinear(R, Deriv::Delta, R, Deriv::Delta));
  }
  Eigen::MatrixXd Bp(P.dim(), Phi.dim() + R.dim());
  Bp.leftCols(Phi.dim()) =
      Eigen::MatrixXd(assemble_bilinear(P, Deriv::None, Phi, Deriv::D));
  if (R.dim() > 0)
    Bp.rightCols(R.dim()) =
        Eigen::MatrixXd(assemble_bilinear(P, Deriv::None, R, Deriv::Delta));
  Eigen::MatrixXd Mp =
      Eigen::MatrixXd(assemble_bilinear(P, Deriv::None, P, Deriv::None));

  Eigen::LLT<Eigen::MatrixXd> kllt(K);
  Eigen::MatrixXd G = Bp * kllt.solve(Bp.transpose());
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Mp);
  const Eigen::VectorXd& ev = es.eigenvalues();
  // For top-codimension pressures the constant mode is an exact kernel
  // vector; skip it.
  const int skip = (P.field_deg() == d) ? 1 : 0;
  res.applicable = true;
  res.beta = std::sqrt(std::max(ev[skip], 0.0));
  return res;
}

}  // namespace feec
