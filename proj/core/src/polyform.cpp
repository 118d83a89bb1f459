#include "feec/polyform.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace feec {

MonomialBasis::MonomialBasis(int nvars, int deg) : nvars_(nvars), deg_(deg) {
  if (nvars < 1 || deg < 0) return;
  // Colex enumeration of compositions of deg into nvars parts.
  Eigen::VectorXi e = Eigen::VectorXi::Zero(nvars);
  e(0) = deg;
  while (true) {
    exps_.push_back(e);
    int i = 0;
    while (i < nvars - 1 && e(i) == 0) ++i;
    if (i == nvars - 1) break;
    int head = e(i);
    e(i) = 0;
    e(0) = head - 1;
    e(i + 1) += 1;
  }
}

int MonomialBasis::index(const Eigen::VectorXi& e) const {
  for (int i = 0; i < size(); ++i)
    if (exps_[i] == e) return i;
  throw std::invalid_argument("MonomialBasis::index: exponent not in basis");
}

Eigen::MatrixXd MonomialBasis::values(const Eigen::MatrixXd& bary) const {
  if (bary.cols() != nvars_)
    throw std::invalid_argument("MonomialBasis::values: wrong number of variables");
  Eigen::MatrixXd out(bary.rows(), size());
  for (int m = 0; m < size(); ++m) {
    Eigen::VectorXd col = Eigen::VectorXd::Ones(bary.rows());
    for (int i = 0; i < nvars_; ++i)
      for (int r = 0; r < exps_[m](i); ++r) col.array() *= bary.col(i).array();
    out.col(m) = col;
  }
  return out;
}

const MonomialBasis& monomial_basis(int nvars, int deg) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::unique_ptr<MonomialBasis>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{nvars, deg}];
  if (!slot) slot = std::make_unique<MonomialBasis>(nvars, deg);
  return *slot;
}

const CellGeometry& reference_simplex(int dim) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<CellGeometry>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[dim];
  if (!slot) {
    slot = std::make_unique<CellGeometry>();
    if (dim == 0) {
      slot->vertices = Eigen::MatrixXd(1, 0);
      slot->grad_lambda = Eigen::MatrixXd(1, 0);
      slot->measure = 1.0;
      slot->diameter = 0.0;
    } else {
      Eigen::MatrixXd v = Eigen::MatrixXd::Zero(dim + 1, dim);
      for (int i = 0; i < dim; ++i) v(i + 1, i) = 1.0;
      *slot = make_cell_geometry(v);
    }
  }
  return *slot;
}

PolynomialForm PolynomialForm::zero(const CellGeometry& geo, int j, int k) {
  PolynomialForm p;
  p.geo = &geo;
  p.form_deg = j;
  p.poly_deg = std::max(k, 0);
  int nc = (j >= 0 && j <= geo.dim()) ? static_cast<int>(binomial(geo.dim(), j)) : 0;
  int nm = (k >= 0) ? monomial_basis(geo.dim() + 1, p.poly_deg).size() : 0;
  if (k < 0) {  // degenerate space: keep a valid zero of degree 0
    p.poly_deg = 0;
    nm = monomial_basis(geo.dim() + 1, 0).size();
  }
  p.coef = Eigen::MatrixXd::Zero(nm, std::max(nc, 0));
  return p;
}

PolynomialForm PolynomialForm::constant(const CellGeometry& geo,
                                        const AlternatingForm& a) {
  if (a.dim != geo.dim())
    throw std::invalid_argument("PolynomialForm::constant: dimension mismatch");
  PolynomialForm p = zero(geo, a.deg, 0);
  p.coef.row(0) = a.coeff.transpose();
  return p;
}

AlternatingForm PolynomialForm::evaluate(const Eigen::VectorXd& bary) const {
  AlternatingForm a(dim(), form_deg);
  a.coeff = values(bary.transpose()).row(0).transpose();
  return a;
}

Eigen::MatrixXd PolynomialForm::values(const Eigen::MatrixXd& bary) const {
  return monomial_basis(dim() + 1, poly_deg).values(bary) * coef;
}

// Derivative of the monomial vector along barycentric variable i, as a matrix
// mapping degree-k coefficients to degree-(k-1) coefficients.
static Eigen::MatrixXd bary_derivative_op(int nvars, int k, int i) {
  const MonomialBasis& hi = monomial_basis(nvars, k);
  const MonomialBasis& lo = monomial_basis(nvars, k - 1);
  Eigen::MatrixXd op = Eigen::MatrixXd::Zero(lo.size(), hi.size());
  for (int m = 0; m < hi.size(); ++m) {
    Eigen::VectorXi e = hi.exponent(m);
    if (e(i) == 0) continue;
    double a = e(i);
    e(i) -= 1;
    op(lo.index(e), m) = a;
  }
  return op;
}

Eigen::MatrixXd PolynomialForm::gradients(const Eigen::MatrixXd& bary) const {
  const int d = dim(), nc = ncomb();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(bary.rows(), nc * d);
  if (poly_deg == 0) return out;
  Eigen::MatrixXd lo_vals = monomial_basis(d + 1, poly_deg - 1).values(bary);
  for (int i = 0; i <= d; ++i) {
    Eigen::MatrixXd part = lo_vals * (bary_derivative_op(d + 1, poly_deg, i) * coef);
    for (int c = 0; c < nc; ++c)
      for (int x = 0; x < d; ++x)
        out.col(c * d + x) += geo->grad_lambda(i, x) * part.col(c);
  }
  return out;
}

Eigen::MatrixXd PolynomialForm::gradient(const Eigen::VectorXd& bary) const {
  Eigen::MatrixXd g = gradients(bary.transpose());
  Eigen::MatrixXd out(ncomb(), dim());
  for (int c = 0; c < ncomb(); ++c)
    for (int x = 0; x < dim(); ++x) out(c, x) = g(0, c * dim() + x);
  return out;
}

PolynomialForm raise_degree(const PolynomialForm& p, int incr) {
  if (incr < 0) throw std::invalid_argument("raise_degree: negative increment");
  PolynomialForm out = p;
  const int nv = p.dim() + 1;
  for (int step = 0; step < incr; ++step) {
    const MonomialBasis& lo = monomial_basis(nv, out.poly_deg);
    const MonomialBasis& hi = monomial_basis(nv, out.poly_deg + 1);
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(hi.size(), out.ncomb());
    for (int m = 0; m < lo.size(); ++m) {
      Eigen::VectorXi e = lo.exponent(m);
      for (int i = 0; i < nv; ++i) {
        e(i) += 1;
        c.row(hi.index(e)) += out.coef.row(m);
        e(i) -= 1;
      }
    }
    out.coef = std::move(c);
    out.poly_deg += 1;
  }
  return out;
}

PolynomialForm pf_add(const PolynomialForm& a, const PolynomialForm& b) {
  if (a.geo != b.geo || a.form_deg != b.form_deg)
    throw std::invalid_argument("pf_add: incompatible forms");
  int k = std::max(a.poly_deg, b.poly_deg);
  PolynomialForm ra = raise_degree(a, k - a.poly_deg);
  PolynomialForm rb = raise_degree(b, k - b.poly_deg);
  ra.coef += rb.coef;
  return ra;
}

PolynomialForm pf_scale(const PolynomialForm& a, double s) {
  PolynomialForm out = a;
  out.coef *= s;
  return out;
}

PolynomialForm pf_multiply(const PolynomialForm& scalar, const PolynomialForm& p) {
  if (scalar.geo != p.geo || scalar.form_deg != 0)
    throw std::invalid_argument("pf_multiply: need scalar factor on same cell");
  const int nv = p.dim() + 1;
  const MonomialBasis& ma = monomial_basis(nv, scalar.poly_deg);
  const MonomialBasis& mb = monomial_basis(nv, p.poly_deg);
  const MonomialBasis& mo = monomial_basis(nv, scalar.poly_deg + p.poly_deg);
  PolynomialForm out = PolynomialForm::zero(*p.geo, p.form_deg,
                                            scalar.poly_deg + p.poly_deg);
  for (int a = 0; a < ma.size(); ++a) {
    if (scalar.coef(a, 0) == 0.0) continue;
    for (int b = 0; b < mb.size(); ++b) {
      Eigen::VectorXi e = ma.exponent(a) + mb.exponent(b);
      out.coef.row(mo.index(e)) += scalar.coef(a, 0) * p.coef.row(b);
    }
  }
  return out;
}

PolynomialForm exterior_derivative(const PolynomialForm& p) {
  const int d = p.dim(), j = p.form_deg;
  PolynomialForm out = PolynomialForm::zero(*p.geo, j + 1,
                                            std::max(p.poly_deg - 1, 0));
  if (p.poly_deg == 0 || j >= d) return out;
  const MonomialBasis& hi = monomial_basis(d + 1, p.poly_deg);
  const MonomialBasis& lo = monomial_basis(d + 1, p.poly_deg - 1);
  const FormIndex& fin = form_index(d, j);
  const FormIndex& fout = form_index(d, j + 1);
  std::vector<int> merged;
  for (int m = 0; m < hi.size(); ++m) {
    Eigen::VectorXi e = hi.exponent(m);
    for (int i = 0; i <= d; ++i) {
      if (e(i) == 0) continue;
      double a = e(i);
      e(i) -= 1;
      int lorow = lo.index(e);
      e(i) += 1;
      // d(lambda^e) carries a * lambda^{e - e_i} dlambda_i, and
      // dlambda_i = sum_x grad_lambda(i, x) dx_x.
      for (int c = 0; c < fin.size(); ++c) {
        if (p.coef(m, c) == 0.0) continue;
        const std::vector<int>& sigma = fin.combo(c);
        for (int x = 0; x < d; ++x) {
          double g = p.geo->grad_lambda(i, x);
          if (g == 0.0) continue;
          int xs[1] = {x};
          int sign = merge_sign(std::span<const int>(xs, 1), sigma, &merged);
          if (sign == 0) continue;
          out.coef(lorow, fout.index(merged)) += sign * a * g * p.coef(m, c);
        }
      }
    }
  }
  return out;
}

PolynomialForm hodge_star(const PolynomialForm& p) {
  const int d = p.dim(), j = p.form_deg;
  const FormIndex& fin = form_index(d, j);
  const FormIndex& fout = form_index(d, d - j);
  PolynomialForm out = PolynomialForm::zero(*p.geo, d - j, p.poly_deg);
  for (int c = 0; c < fin.size(); ++c) {
    const std::vector<int>& sigma = fin.combo(c);
    std::vector<int> comp;
    std::vector<bool> in(d, false);
    for (int s : sigma) in[s] = true;
    for (int x = 0; x < d; ++x)
      if (!in[x]) comp.push_back(x);
    int sign = complement_sign(d, sigma);
    out.coef.col(fout.index(comp)) = sign * p.coef.col(c);
  }
  return out;
}

PolynomialForm codifferential(const PolynomialForm& p) {
  const int d = p.dim(), j = p.form_deg;
  if (j == 0) return PolynomialForm::zero(*p.geo, -1, 0);
  // delta = (-1)^{d(j+1)+1} star d star on Lambda^j.
  int s = ((d * (j + 1) + 1) % 2 == 0) ? 1 : -1;
  return pf_scale(hodge_star(exterior_derivative(hodge_star(p))), s);
}

PolynomialForm koszul(const PolynomialForm& p, const Eigen::VectorXd& origin) {
  const int d = p.dim(), j = p.form_deg;
  if (j == 0) return PolynomialForm::zero(*p.geo, -1, 0);
  const MonomialBasis& lo = monomial_basis(d + 1, p.poly_deg);
  const MonomialBasis& hi = monomial_basis(d + 1, p.poly_deg + 1);
  const FormIndex& fin = form_index(d, j);
  const FormIndex& fout = form_index(d, j - 1);
  PolynomialForm out = PolynomialForm::zero(*p.geo, j - 1, p.poly_deg + 1);
  // x - origin = sum_i lambda_i (v_i - origin).
  for (int i = 0; i <= d; ++i) {
    Eigen::VectorXd ci = p.geo->vertices.row(i).transpose() - origin;
    for (int m = 0; m < lo.size(); ++m) {
      Eigen::VectorXi e = lo.exponent(m);
      e(i) += 1;
      int hirow = hi.index(e);
      for (int c = 0; c < fin.size(); ++c) {
        if (p.coef(m, c) == 0.0) continue;
        const std::vector<int>& sigma = fin.combo(c);
        std::vector<int> rest(sigma.size() - 1);
        for (size_t pos = 0; pos < sigma.size(); ++pos) {
          double comp = ci(sigma[pos]);
          if (comp == 0.0) continue;
          int sign = (pos % 2 == 0) ? 1 : -1;
          size_t t = 0;
          for (size_t q = 0; q < sigma.size(); ++q)
            if (q != pos) rest[t++] = sigma[q];
          out.coef(hirow, fout.index(rest)) += sign * comp * p.coef(m, c);
        }
      }
    }
  }
  return out;
}

PolynomialForm koszul(const PolynomialForm& p) {
  Eigen::VectorXd bc = p.geo->vertices.colwise().mean().transpose();
  return koszul(p, bc);
}

PolynomialForm bubble(const CellGeometry& geo) {
  const int d = geo.dim();
  PolynomialForm b = PolynomialForm::zero(geo, 0, 0);
  b.coef(0, 0) = 1.0;
  for (int i = 0; i <= d; ++i) {
    PolynomialForm li = PolynomialForm::zero(geo, 0, 1);
    li.coef(i, 0) = 1.0;
    b = pf_multiply(li, b);
  }
  return b;
}

std::vector<PolynomialForm> space_P(const CellGeometry& geo, int k, int j) {
  std::vector<PolynomialForm> out;
  const int d = geo.dim();
  if (k < 0 || j < 0 || j > d) return out;
  const MonomialBasis& mb = monomial_basis(d + 1, k);
  const int nc = static_cast<int>(binomial(d, j));
  for (int c = 0; c < nc; ++c)
    for (int m = 0; m < mb.size(); ++m) {
      PolynomialForm p = PolynomialForm::zero(geo, j, k);
      p.coef(m, c) = 1.0;
      out.push_back(std::move(p));
    }
  return out;
}

std::vector<PolynomialForm> space_Pminus(const CellGeometry& geo, int k, int j) {
  const int d = geo.dim();
  if (k < 1 || j < 0 || j > d) return {};
  std::vector<PolynomialForm> cand = space_P(geo, k - 1, j);
  for (const PolynomialForm& q : space_P(geo, k - 1, j + 1))
    cand.push_back(koszul(q));
  return independent_subset(std::move(cand));
}

std::vector<PolynomialForm> span_delta_P(const CellGeometry& geo, int k, int m) {
  const int d = geo.dim();
  if (k < 0 || m < 1 || m > d + 1) return {};
  if (m == d + 1)  // P_k Lambda^{d+1} ~ R: image under delta is the constant
    return {PolynomialForm::constant(geo, AlternatingForm::volume(d))};
  std::vector<PolynomialForm> cand;
  for (const PolynomialForm& q : space_P(geo, k, m))
    cand.push_back(codifferential(q));
  return independent_subset(std::move(cand));
}

std::vector<PolynomialForm> span_star_kappa_P(const CellGeometry& geo, int k, int m) {
  const int d = geo.dim();
  if (k < 0 || m < 1 || m > d) return {};
  std::vector<PolynomialForm> cand;
  for (const PolynomialForm& q : space_P(geo, k, m))
    cand.push_back(hodge_star(koszul(q)));
  return independent_subset(std::move(cand));
}

std::vector<PolynomialForm> space_Phi(const CellGeometry& geo, int k, int j) {
  const int d = geo.dim();
  if (k < 1 || j < 0 || j > d - 1) return {};
  const int fj = j + 1;
  std::vector<PolynomialForm> cand = space_P(geo, k, fj);
  PolynomialForm b = bubble(geo);
  for (const PolynomialForm& q : span_delta_P(geo, k, fj + 1))
    cand.push_back(pf_multiply(b, q));
  return independent_subset(std::move(cand));
}

// Stack each candidate's coefficients (at a common degree) into one column.
static Eigen::MatrixXd stacked_coeffs(const std::vector<PolynomialForm>& forms) {
  int k = 0;
  for (const PolynomialForm& p : forms) k = std::max(k, p.poly_deg);
  Eigen::MatrixXd mat;
  for (size_t i = 0; i < forms.size(); ++i) {
    PolynomialForm r = raise_degree(forms[i], k - forms[i].poly_deg);
    Eigen::VectorXd col = Eigen::Map<Eigen::VectorXd>(r.coef.data(), r.coef.size());
    if (mat.size() == 0) mat.resize(col.size(), forms.size());
    mat.col(i) = col;
  }
  return mat;
}

std::vector<PolynomialForm> independent_subset(std::vector<PolynomialForm> cand,
                                               double rel_tol) {
  if (cand.empty()) return cand;
  Eigen::MatrixXd mat = stacked_coeffs(cand);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(mat);
  double top = std::abs(qr.matrixR()(0, 0));
  int rank = 0;
  int nmax = static_cast<int>(std::min(mat.rows(), mat.cols()));
  for (int i = 0; i < nmax; ++i)
    if (std::abs(qr.matrixR()(i, i)) > rel_tol * top) ++rank;
  std::vector<int> keep(qr.colsPermutation().indices().data(),
                        qr.colsPermutation().indices().data() + rank);
  std::sort(keep.begin(), keep.end());
  std::vector<PolynomialForm> out;
  out.reserve(rank);
  for (int i : keep) out.push_back(std::move(cand[i]));
  return out;
}

int span_rank(const std::vector<PolynomialForm>& forms, double rel_tol) {
  if (forms.empty()) return 0;
  Eigen::MatrixXd mat = stacked_coeffs(forms);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(mat);
  double top = std::abs(qr.matrixR()(0, 0));
  if (top == 0.0) return 0;
  int rank = 0;
  int nmax = static_cast<int>(std::min(mat.rows(), mat.cols()));
  for (int i = 0; i < nmax; ++i)
    if (std::abs(qr.matrixR()(i, i)) > rel_tol * top) ++rank;
  return rank;
}

}  // namespace feec
