#include "feec/element.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <tuple>

#include "feec/exterior.hpp"
#include "feec/quadrature.hpp"

namespace feec {

namespace {

// Test spaces live on shared reference simplices; cache them per signature.
const std::vector<PolynomialForm>& ref_space(SpaceKind kind, int ell, int k, int j) {
  static std::mutex mu;
  static std::map<std::tuple<SpaceKind, int, int, int>,
                  std::unique_ptr<std::vector<PolynomialForm>>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{kind, ell, k, j}];
  if (!slot) {
    const CellGeometry& ref = reference_simplex(ell);
    std::vector<PolynomialForm> sp;
    if (kind == SpaceKind::Full)
      sp = space_P(ref, k, j);
    else
      sp = space_Pminus(ref, k, j);
    slot = std::make_unique<std::vector<PolynomialForm>>(std::move(sp));
  }
  return *slot;
}

std::shared_ptr<const PolynomialForm> borrow(const PolynomialForm& p) {
  // Aliasing pointer into a cache with static lifetime.
  return std::shared_ptr<const PolynomialForm>(
      std::shared_ptr<const void>(), &p);
}

double reference_measure(int ell) {
  double m = 1.0;
  for (int i = 2; i <= ell; ++i) m /= i;
  return m;
}

// Ambient barycentric coordinates of reference ell-simplex quadrature points
// placed on the subsimplex with the given local vertices.
Eigen::MatrixXd embed_points(const Eigen::MatrixXd& sub_bary,
                             const std::vector<int>& lverts, int d) {
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(sub_bary.rows(), d + 1);
  for (size_t a = 0; a < lverts.size(); ++a)
    B.col(lverts[a]) = sub_bary.col(a);
  return B;
}

// Minor matrix for pulling a j-form back along the frame F (d x ell):
// pulled.coeff = M^T * ambient.coeff, M(sigma, A) = det F(sigma, A).
Eigen::MatrixXd pullback_minors(const Eigen::MatrixXd& F, int j) {
  const int d = static_cast<int>(F.rows());
  const int ell = static_cast<int>(F.cols());
  const FormIndex& amb = form_index(d, j);
  const FormIndex& sub = form_index(ell, j);
  Eigen::MatrixXd M(amb.size(), sub.size());
  Eigen::MatrixXd minor(j, j);
  for (int c = 0; c < amb.size(); ++c)
    for (int a = 0; a < sub.size(); ++a) {
      const std::vector<int>& rows = amb.combo(c);
      const std::vector<int>& cols = sub.combo(a);
      for (int r = 0; r < j; ++r)
        for (int s = 0; s < j; ++s) minor(r, s) = F(rows[r], cols[s]);
      M(c, a) = (j == 0) ? 1.0 : minor.determinant();
    }
  return M;
}

}  // namespace

CellConnectivity reference_connectivity(int d) {
  CellConnectivity conn;
  conn.dim = d;
  conn.subs.resize(d + 1);
  for (int ell = 0; ell <= d; ++ell) {
    const FormIndex& fi = form_index(d + 1, ell + 1);
    for (int w = 0; w < fi.size(); ++w) conn.subs[ell].push_back(fi.combo(w));
  }
  return conn;
}

CellConnectivity mesh_connectivity(const SimplicialMesh& mesh, int cell) {
  const int d = mesh.dim();
  CellConnectivity conn;
  conn.dim = d;
  conn.subs.resize(d + 1);
  for (int ell = 0; ell <= d; ++ell) {
    const FormIndex& fi = form_index(d + 1, ell + 1);
    for (int w = 0; w < fi.size(); ++w) {
      std::vector<int> lv = fi.combo(w);
      std::sort(lv.begin(), lv.end(), [&](int a, int b) {
        return mesh.cells()(cell, a) < mesh.cells()(cell, b);
      });
      conn.subs[ell].push_back(std::move(lv));
    }
  }
  return conn;
}

std::vector<PolynomialForm> shape_span(const ElementSpec& spec,
                                       const CellGeometry& geo) {
  switch (spec.kind) {
    case SpaceKind::Full:
      return space_P(geo, spec.k, spec.form_deg);
    case SpaceKind::Trimmed:
      return space_Pminus(geo, spec.k, spec.form_deg);
    case SpaceKind::Phi:
      return space_Phi(geo, spec.k, spec.form_deg - 1);
  }
  return {};
}

std::vector<DofFunctional> make_dofs(const ElementSpec& spec,
                                     const CellGeometry& geo,
                                     const CellConnectivity& conn) {
  const int d = geo.dim();
  const int j = spec.form_deg;
  std::vector<DofFunctional> out;
  for (int ell = 0; ell <= d; ++ell) {
    for (int w = 0; w < static_cast<int>(conn.subs[ell].size()); ++w) {
      const std::vector<int>& lv = conn.subs[ell][w];
      if (spec.kind == SpaceKind::Full || spec.kind == SpaceKind::Trimmed) {
        const std::vector<PolynomialForm>& tests =
            (spec.kind == SpaceKind::Trimmed)
                ? ref_space(SpaceKind::Full, ell, spec.k + j - ell - 1, ell - j)
                : ref_space(SpaceKind::Trimmed, ell, spec.k + j - ell, ell - j);
        for (const PolynomialForm& q : tests) {
          DofFunctional f;
          f.kind = DofFunctional::Kind::TraceMoment;
          f.ell = ell;
          f.which = w;
          f.lverts = lv;
          f.q = borrow(q);
          f.geo = &geo;
          out.push_back(std::move(f));
        }
      } else {  // Phi
        const int ncomp = static_cast<int>(binomial(d, j));
        if (ell == 0) {
          for (int c = 0; c < ncomp; ++c) {
            DofFunctional f;
            f.kind = DofFunctional::Kind::PointEval;
            f.ell = 0;
            f.which = w;
            f.lverts = lv;
            f.comp = c;
            f.geo = &geo;
            out.push_back(std::move(f));
          }
        } else if (ell < d) {
          const std::vector<PolynomialForm>& tests =
              ref_space(SpaceKind::Full, ell, spec.k - ell - 1, 0);
          for (int c = 0; c < ncomp; ++c)
            for (const PolynomialForm& q : tests) {
              DofFunctional f;
              f.kind = DofFunctional::Kind::ComponentMoment;
              f.ell = ell;
              f.which = w;
              f.lverts = lv;
              f.comp = c;
              f.q = borrow(q);
              f.geo = &geo;
              out.push_back(std::move(f));
            }
        } else {
          std::vector<PolynomialForm> tests = span_delta_P(geo, spec.k, j + 1);
          for (PolynomialForm& q :
               span_star_kappa_P(geo, spec.k - d - 2, d - j + 1))
            tests.push_back(std::move(q));
          for (PolynomialForm& q : tests) {
            DofFunctional f;
            f.kind = DofFunctional::Kind::InnerMoment;
            f.ell = d;
            f.which = w;
            f.lverts = lv;
            f.q = std::make_shared<PolynomialForm>(std::move(q));
            f.geo = &geo;
            out.push_back(std::move(f));
          }
        }
      }
    }
  }
  return out;
}

std::vector<int> dofs_per_subsimplex(const ElementSpec& spec, int d) {
  std::vector<DofFunctional> dofs =
      make_dofs(spec, reference_simplex(d), reference_connectivity(d));
  std::vector<int> total(d + 1, 0);
  for (const DofFunctional& f : dofs) total[f.ell] += 1;
  for (int ell = 0; ell <= d; ++ell) {
    long nsub = binomial(d + 1, ell + 1);
    if (total[ell] % nsub != 0)
      throw std::logic_error("dofs_per_subsimplex: uneven distribution");
    total[ell] = static_cast<int>(total[ell] / nsub);
  }
  return total;
}

double pf_inner_integral(const PolynomialForm& a, const PolynomialForm& b) {
  if (a.geo != b.geo || a.form_deg != b.form_deg)
    throw std::invalid_argument("pf_inner_integral: incompatible forms");
  const SimplexQuadrature& quad =
      simplex_quadrature(a.dim(), a.poly_deg + b.poly_deg);
  Eigen::MatrixXd va = a.values(quad.barycentric);
  Eigen::MatrixXd vb = b.values(quad.barycentric);
  return a.geo->measure * (va.array() * vb.array()).rowwise().sum().matrix().dot(
                              quad.weights);
}

Eigen::MatrixXd dof_matrix(const std::vector<DofFunctional>& dofs,
                           const std::vector<PolynomialForm>& span) {
  const int n = static_cast<int>(span.size());
  Eigen::MatrixXd V(dofs.size(), n);
  if (span.empty()) return V;
  const CellGeometry& geo = *span[0].geo;
  const int d = geo.dim();
  const int j = span[0].form_deg;
  int kmax = 0;
  for (const PolynomialForm& p : span) kmax = std::max(kmax, p.poly_deg);

  for (size_t i = 0; i < dofs.size(); ++i) {
    const DofFunctional& f = dofs[i];
    switch (f.kind) {
      case DofFunctional::Kind::PointEval: {
        Eigen::MatrixXd B = Eigen::MatrixXd::Zero(1, d + 1);
        B(0, f.lverts[0]) = 1.0;
        for (int m = 0; m < n; ++m) V(i, m) = span[m].values(B)(0, f.comp);
        break;
      }
      case DofFunctional::Kind::ComponentMoment: {
        const SimplexQuadrature& quad =
            simplex_quadrature(f.ell, kmax + f.q->poly_deg);
        Eigen::MatrixXd B = embed_points(quad.barycentric, f.lverts, d);
        Eigen::VectorXd qv = f.q->values(quad.barycentric).col(0);
        Eigen::VectorXd wq =
            reference_measure(f.ell) * quad.weights.cwiseProduct(qv);
        for (int m = 0; m < n; ++m)
          V(i, m) = span[m].values(B).col(f.comp).dot(wq);
        break;
      }
      case DofFunctional::Kind::TraceMoment: {
        const int ell = f.ell;
        const SimplexQuadrature& quad =
            simplex_quadrature(ell, kmax + f.q->poly_deg);
        Eigen::MatrixXd B = embed_points(quad.barycentric, f.lverts, d);
        Eigen::MatrixXd F(d, ell);
        for (int a = 1; a <= ell; ++a)
          F.col(a - 1) = (geo.vertices.row(f.lverts[a]) -
                          geo.vertices.row(f.lverts[0])).transpose();
        Eigen::MatrixXd M = pullback_minors(F, j);
        // integrand(p) = sum_A sign(A) tr(p, A) q(p, comp(A))
        const FormIndex& sub = form_index(ell, j);
        Eigen::MatrixXd qvals = f.q->values(quad.barycentric);
        const FormIndex& fq = form_index(ell, ell - j);
        Eigen::MatrixXd qpaired(quad.size(), sub.size());
        Eigen::VectorXd signs(sub.size());
        for (int a = 0; a < sub.size(); ++a) {
          const std::vector<int>& A = sub.combo(a);
          std::vector<int> comp;
          std::vector<bool> in(ell, false);
          for (int s : A) in[s] = true;
          for (int x = 0; x < ell; ++x)
            if (!in[x]) comp.push_back(x);
          signs(a) = complement_sign(ell, A);
          qpaired.col(a) = qvals.col(fq.index(comp));
        }
        for (int m = 0; m < n; ++m) {
          Eigen::MatrixXd tr = span[m].values(B) * M;  // npts x sub.size()
          double s = 0.0;
          for (int a = 0; a < sub.size(); ++a)
            s += signs(a) *
                 quad.weights.dot(tr.col(a).cwiseProduct(qpaired.col(a)));
          V(i, m) = reference_measure(ell) * s;
        }
        break;
      }
      case DofFunctional::Kind::InnerMoment: {
        for (int m = 0; m < n; ++m) V(i, m) = pf_inner_integral(span[m], *f.q);
        break;
      }
    }
  }
  return V;
}

double apply_dof(const DofFunctional& f, const PolynomialForm& v) {
  return dof_matrix({f}, {v})(0, 0);
}

ShapeBasis build_element(const ElementSpec& spec, const CellGeometry& geo,
                         const CellConnectivity& conn) {
  std::vector<PolynomialForm> span = shape_span(spec, geo);
  int kmax = 0;
  for (const PolynomialForm& p : span) kmax = std::max(kmax, p.poly_deg);
  for (PolynomialForm& p : span) p = raise_degree(p, kmax - p.poly_deg);

  ShapeBasis sb;
  sb.spec = spec;
  sb.dofs = make_dofs(spec, geo, conn);
  const int n = static_cast<int>(span.size());
  if (static_cast<int>(sb.dofs.size()) != n)
    throw std::runtime_error("build_element: dof count does not match span");
  if (n == 0) return sb;
  Eigen::MatrixXd V = dof_matrix(sb.dofs, span);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(V);
  if (qr.rank() < n)
    throw std::runtime_error("build_element: degrees of freedom not unisolvent");
  sb.condition = std::abs(qr.matrixR()(0, 0) / qr.matrixR()(n - 1, n - 1));
  Eigen::MatrixXd C = qr.solve(Eigen::MatrixXd::Identity(n, n));
  sb.dual.reserve(n);
  for (int c = 0; c < n; ++c) {
    PolynomialForm p = PolynomialForm::zero(geo, spec.form_deg, kmax);
    for (int m = 0; m < n; ++m) p.coef += C(m, c) * span[m].coef;
    sb.dual.push_back(std::move(p));
  }
  return sb;
}

}  // namespace feec
