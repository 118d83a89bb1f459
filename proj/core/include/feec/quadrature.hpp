// Grundmann-Moller quadrature on the unit simplex, any dimension and degree.
#ifndef FEEC_QUADRATURE_HPP
#define FEEC_QUADRATURE_HPP

#include <Eigen/Dense>

namespace feec {

// Nodes in barycentric coordinates; weights normalized so they sum to 1.
// Integrating f over a physical simplex T: |T| * sum_q w_q f(x_q).
struct SimplexQuadrature {
  int dim = 0;
  int degree = 0;                // polynomial degree integrated exactly
  Eigen::MatrixXd barycentric;   // npts x (dim+1)
  Eigen::VectorXd weights;       // npts
  int size() const { return static_cast<int>(weights.size()); }
};

SimplexQuadrature make_grundmann_moller(int dim, int degree);

// Cached shared rules.
const SimplexQuadrature& simplex_quadrature(int dim, int degree);

// Exact integral of a barycentric monomial over a simplex of measure 1:
// integral of prod lambda_i^{a_i} = dim! * prod(a_i!) / (|a| + dim)!.
double monomial_integral(int dim, const Eigen::VectorXi& powers);

}  // namespace feec

#endif
