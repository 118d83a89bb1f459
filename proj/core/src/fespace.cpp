#include "feec/fespace.hpp"

#include <numeric>
#include <stdexcept>

namespace feec {

FESpace::FESpace(const SimplicialMesh& mesh, ElementSpec spec, bool bc,
                 bool star)
    : mesh_(&mesh), spec_(spec), elem_spec_(spec), bc_(bc), star_(star) {
  const int d = mesh.dim();
  if (star_) elem_spec_.form_deg = d - spec_.form_deg;
  counts_ = dofs_per_subsimplex(elem_spec_, d);
  local_size_ = 0;
  for (int ell = 0; ell <= d; ++ell)
    local_size_ += counts_[ell] * static_cast<int>(binomial(d + 1, ell + 1));

  // Global layout: blocks by subsimplex dimension, then subsimplex id.
  std::vector<int> base(d + 1, 0);
  num_total_ = 0;
  for (int ell = 0; ell <= d; ++ell) {
    base[ell] = num_total_;
    int nsub = (ell == d) ? mesh.num_cells() : mesh.num_subsimplices(ell);
    num_total_ += counts_[ell] * nsub;
  }

  // Constrained dofs: everything attached to boundary subsimplices.
  std::vector<int> renumber(num_total_, -1);
  std::vector<bool> keep(num_total_, true);
  if (bc_) {
    for (int ell = 0; ell <= d - 1; ++ell) {
      if (counts_[ell] == 0) continue;
      const std::vector<Subsimplex>& subs = mesh.subsimplices(ell);
      for (size_t s = 0; s < subs.size(); ++s)
        if (subs[s].boundary)
          for (int i = 0; i < counts_[ell]; ++i)
            keep[base[ell] + static_cast<int>(s) * counts_[ell] + i] = false;
    }
  }
  num_free_ = 0;
  for (int g = 0; g < num_total_; ++g)
    if (keep[g]) renumber[g] = num_free_++;

  cell_dofs_.resize(mesh.num_cells());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    std::vector<int>& cd = cell_dofs_[c];
    cd.reserve(local_size_);
    for (int ell = 0; ell <= d; ++ell) {
      if (counts_[ell] == 0) continue;
      const FormIndex& fi = form_index(d + 1, ell + 1);
      for (int w = 0; w < fi.size(); ++w) {
        int sub = (ell == d) ? c : mesh.cell_subsimplex(c, ell, w);
        for (int i = 0; i < counts_[ell]; ++i)
          cd.push_back(renumber[base[ell] + sub * counts_[ell] + i]);
      }
    }
  }
}

ShapeBasis FESpace::local_element(int cell) const {
  return build_element(elem_spec_, mesh_->geometry(cell),
                       mesh_connectivity(*mesh_, cell));
}

namespace {

// Translation-invariant signature of a cell: barycentric gradients and
// measure (rounded at 1e-12 relative) plus the global-ascending ordering
// pattern of its subsimplices. Cells with equal signatures get identical
// nodal bases, because every element construction input is built from
// vertex differences only.
std::vector<long long> shape_signature(const SimplicialMesh& mesh, int cell) {
  const CellGeometry& geo = mesh.geometry(cell);
  std::vector<long long> key;
  const double scale =
      std::max(geo.grad_lambda.cwiseAbs().maxCoeff(), 1e-300);
  for (int i = 0; i < geo.grad_lambda.rows(); ++i)
    for (int j = 0; j < geo.grad_lambda.cols(); ++j)
      key.push_back(llround(geo.grad_lambda(i, j) / scale * 1e12));
  key.push_back(llround(geo.measure * scale * 1e12));
  CellConnectivity conn = mesh_connectivity(mesh, cell);
  for (const auto& level : conn.subs)
    for (const auto& sub : level)
      key.insert(key.end(), sub.begin(), sub.end());
  return key;
}

}  // namespace

std::vector<PolynomialForm> FESpace::local_basis(int cell) const {
  std::vector<long long> key = shape_signature(*mesh_, cell);
  auto it = basis_cache_.find(key);
  if (it == basis_cache_.end()) {
    ShapeBasis sb = local_element(cell);
    std::vector<PolynomialForm> built;
    if (!star_) {
      built = std::move(sb.dual);
    } else {
      built.reserve(sb.dual.size());
      for (const PolynomialForm& p : sb.dual) built.push_back(hodge_star(p));
    }
    it = basis_cache_.emplace(std::move(key), std::move(built)).first;
  }
  std::vector<PolynomialForm> out = it->second;
  for (PolynomialForm& p : out) p.geo = &mesh_->geometry(cell);
  return out;
}

Eigen::MatrixXd FESpace::evaluate(const Eigen::VectorXd& coeffs, int cell,
                                  const Eigen::MatrixXd& bary) const {
  if (coeffs.size() != num_free_)
    throw std::invalid_argument("FESpace::evaluate: wrong coefficient size");
  std::vector<PolynomialForm> basis = local_basis(cell);
  long nc = binomial(mesh_->dim(), std::max(field_deg(), 0));
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(bary.rows(), nc);
  const std::vector<int>& cd = cell_dofs(cell);
  for (size_t i = 0; i < basis.size(); ++i)
    if (cd[i] >= 0 && coeffs(cd[i]) != 0.0)
      out += coeffs(cd[i]) * basis[i].values(bary);
  return out;
}

Eigen::MatrixXd derivative_matrix_dense(const FESpace& from, const FESpace& to) {
  if (&from.mesh() != &to.mesh())
    throw std::invalid_argument("derivative_matrix_dense: different meshes");
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(to.dim(), from.dim());
  const SimplicialMesh& mesh = from.mesh();
  for (int c = 0; c < mesh.num_cells(); ++c) {
    std::vector<PolynomialForm> fb = from.local_basis(c);
    if (fb.empty()) continue;
    for (PolynomialForm& p : fb) p = exterior_derivative(p);
    ShapeBasis te = to.local_element(c);
    Eigen::MatrixXd V = dof_matrix(te.dofs, fb);
    const std::vector<int>& fd = from.cell_dofs(c);
    const std::vector<int>& td = to.cell_dofs(c);
    for (size_t i = 0; i < td.size(); ++i)
      for (size_t j = 0; j < fd.size(); ++j)
        if (td[i] >= 0 && fd[j] >= 0) M(td[i], fd[j]) = V(i, j);
  }
  return M;
}

namespace {

int dense_rank(const Eigen::MatrixXd& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
  qr.setThreshold(1e-9);
  return static_cast<int>(qr.rank());
}

}  // namespace

ExactnessReport exactness_audit(const SimplicialMesh& mesh, int k, bool bc) {
  const int d = mesh.dim();
  ExactnessReport rep;
  std::vector<FESpace> spaces;
  spaces.reserve(d + 1);
  for (int j = 0; j <= d; ++j)
    spaces.emplace_back(mesh, ElementSpec{SpaceKind::Trimmed, k, j}, bc);
  for (int j = 0; j <= d; ++j) rep.space_dims.push_back(spaces[j].dim());
  for (int j = 0; j < d; ++j)
    rep.d_ranks.push_back(
        dense_rank(derivative_matrix_dense(spaces[j], spaces[j + 1])));
  for (int j = 0; j < d; ++j)
    rep.kernel_dims.push_back(rep.space_dims[j] - rep.d_ranks[j]);
  rep.kernel_dims.push_back(rep.space_dims[d]);  // d vanishes on top forms

  rep.exact = true;
  // Contractible domain: cohomology is R at j=0 (no bc) or at j=d (bc).
  if (rep.kernel_dims[0] != (bc ? 0 : 1)) rep.exact = false;
  for (int j = 1; j <= d; ++j)
    if (rep.kernel_dims[j] - rep.d_ranks[j - 1] != (bc && j == d ? 1 : 0))
      rep.exact = false;
  return rep;
}

}  // namespace feec
