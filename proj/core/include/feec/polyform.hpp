// Polynomial differential forms on a simplex, stored as homogeneous
// barycentric monomial coefficients, with exterior derivative,
// codifferential, Koszul contraction, and the P_k / P_k^- / Phi_k spans.
#ifndef FEEC_POLYFORM_HPP
#define FEEC_POLYFORM_HPP

#include <Eigen/Dense>
#include <vector>

#include "feec/exterior.hpp"
#include "feec/mesh.hpp"

namespace feec {

// Homogeneous barycentric monomials of total degree deg in nvars variables.
class MonomialBasis {
 public:
  MonomialBasis(int nvars, int deg);
  int size() const { return static_cast<int>(exps_.size()); }
  const Eigen::VectorXi& exponent(int i) const { return exps_[i]; }
  int index(const Eigen::VectorXi& e) const;
  // Monomial values at barycentric points: (npts x size).
  Eigen::MatrixXd values(const Eigen::MatrixXd& bary) const;

 private:
  int nvars_, deg_;
  std::vector<Eigen::VectorXi> exps_;
};

const MonomialBasis& monomial_basis(int nvars, int deg);

// Reference simplex of a given dimension ([0, e_1, ..., e_dim]).
const CellGeometry& reference_simplex(int dim);

// A differential form with polynomial coefficients on one cell. The
// coefficient layout is (monomial, increasing form index); the polynomial
// part is kept homogeneous of degree poly_deg (sum of barycentrics = 1).
struct PolynomialForm {
  const CellGeometry* geo = nullptr;  // non-owning
  int form_deg = 0;
  int poly_deg = 0;
  Eigen::MatrixXd coef;  // nmono x ncomb

  int dim() const { return geo->dim(); }
  int ncomb() const { return static_cast<int>(coef.cols()); }
  int nmono() const { return static_cast<int>(coef.rows()); }

  static PolynomialForm zero(const CellGeometry& geo, int j, int k);
  // Constant form with the given alternating value.
  static PolynomialForm constant(const CellGeometry& geo, const AlternatingForm& a);

  AlternatingForm evaluate(const Eigen::VectorXd& bary) const;
  // Component values at many barycentric points: (npts x ncomb).
  Eigen::MatrixXd values(const Eigen::MatrixXd& bary) const;
  // Cartesian gradient of each component at one point: (ncomb x dim).
  Eigen::MatrixXd gradient(const Eigen::VectorXd& bary) const;
  // Gradients at many points: (npts x ncomb*dim), gradient of component c in
  // columns [c*dim, (c+1)*dim).
  Eigen::MatrixXd gradients(const Eigen::MatrixXd& bary) const;
};

// Homogenize to a higher degree by multiplying with (sum lambda)^incr.
PolynomialForm raise_degree(const PolynomialForm& p, int incr);
PolynomialForm pf_add(const PolynomialForm& a, const PolynomialForm& b);
PolynomialForm pf_scale(const PolynomialForm& a, double s);
// Product with a scalar polynomial (form degree 0) on the same cell.
PolynomialForm pf_multiply(const PolynomialForm& scalar, const PolynomialForm& p);

PolynomialForm exterior_derivative(const PolynomialForm& p);
PolynomialForm hodge_star(const PolynomialForm& p);
PolynomialForm codifferential(const PolynomialForm& p);
// Koszul contraction with the position field x - origin (cartesian origin).
PolynomialForm koszul(const PolynomialForm& p, const Eigen::VectorXd& origin);
PolynomialForm koszul(const PolynomialForm& p);  // origin = barycenter

// bubble b_T = lambda_0 ... lambda_d (scalar, degree d+1)
PolynomialForm bubble(const CellGeometry& geo);

// Monomial spanning set of P_k Lambda^j(T); empty for k < 0.
std::vector<PolynomialForm> space_P(const CellGeometry& geo, int k, int j);
// Trimmed family P_k^- Lambda^j(T) = P_{k-1} Lambda^j + kappa P_{k-1} Lambda^{j+1},
// reduced to an independent subset. k >= 1.
std::vector<PolynomialForm> space_Pminus(const CellGeometry& geo, int k, int j);
// Bubble-enriched shape space Phi_k(T) of Lambda^{j+1}-valued fields:
// P_k Lambda^{j+1} + b_T delta P_k Lambda^{j+2}; j ranges 0..d-1.
std::vector<PolynomialForm> space_Phi(const CellGeometry& geo, int k, int j);
// Span of delta P_k Lambda^{m}(T); for m = d+1 this is the constant
// volume-form line (the paper's convention P_k Lambda^{d+1} ~ R).
std::vector<PolynomialForm> span_delta_P(const CellGeometry& geo, int k, int m);
// Span of star kappa P_k Lambda^{m}(T) about the barycenter.
std::vector<PolynomialForm> span_star_kappa_P(const CellGeometry& geo, int k, int m);

// Reduce a spanning list to an independent subset (rank-revealing QR on the
// coefficient matrix at a common homogeneous degree).
std::vector<PolynomialForm> independent_subset(std::vector<PolynomialForm> cand,
                                               double rel_tol = 1e-9);
int span_rank(const std::vector<PolynomialForm>& forms, double rel_tol = 1e-9);

}  // namespace feec

#endif
