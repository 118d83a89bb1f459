// Finite elements on a single cell: shape-function spans, degrees of freedom,
// and dual (nodal) bases for the full, trimmed, and bubble-enriched families.
#ifndef FEEC_ELEMENT_HPP
#define FEEC_ELEMENT_HPP

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "feec/mesh.hpp"
#include "feec/polyform.hpp"

namespace feec {

enum class SpaceKind { Full, Trimmed, Phi };

// A cellwise element description. form_deg is the form degree of the field;
// for Phi it equals the paper-index j plus one.
struct ElementSpec {
  SpaceKind kind = SpaceKind::Full;
  int k = 1;         // polynomial degree parameter
  int form_deg = 0;  // field is a form of this degree

  bool operator<(const ElementSpec& o) const {
    return std::tie(kind, k, form_deg) < std::tie(o.kind, o.k, o.form_deg);
  }
};

// Local-to-global subsimplex vertex orderings of one cell. subs[ell][w] lists
// the local vertex ids of subsimplex w (combos in lexicographic order, and
// ell = dim for the cell itself), reordered so that global vertex ids
// ascend. Degree-of-freedom functionals built from this ordering agree
// between the two cells sharing a facet, which is what makes the assembled
// spaces conforming.
struct CellConnectivity {
  int dim = 0;
  std::vector<std::vector<std::vector<int>>> subs;
};

CellConnectivity reference_connectivity(int d);
CellConnectivity mesh_connectivity(const SimplicialMesh& mesh, int cell);

struct DofFunctional {
  enum class Kind { PointEval, ComponentMoment, TraceMoment, InnerMoment };
  Kind kind = Kind::PointEval;
  int ell = 0;    // subsimplex dimension
  int which = 0;  // local subsimplex index
  std::vector<int> lverts;  // local vertices, ascending global ids
  int comp = 0;   // ambient component (PointEval, ComponentMoment)
  // Test data: a form on reference_simplex(ell) for TraceMoment and
  // ComponentMoment (scalar), or on the cell itself for InnerMoment.
  std::shared_ptr<const PolynomialForm> q;
  const CellGeometry* geo = nullptr;
};

double apply_dof(const DofFunctional& f, const PolynomialForm& v);
// Matrix of dof_i(span_j); shares quadrature tables across the span.
Eigen::MatrixXd dof_matrix(const std::vector<DofFunctional>& dofs,
                           const std::vector<PolynomialForm>& span);

std::vector<PolynomialForm> shape_span(const ElementSpec& spec,
                                       const CellGeometry& geo);
std::vector<DofFunctional> make_dofs(const ElementSpec& spec,
                                     const CellGeometry& geo,
                                     const CellConnectivity& conn);
// Number of dofs attached to each subsimplex dimension ell = 0..d
// (ell = d meaning the cell interior).
std::vector<int> dofs_per_subsimplex(const ElementSpec& spec, int d);

struct ShapeBasis {
  ElementSpec spec;
  std::vector<DofFunctional> dofs;
  std::vector<PolynomialForm> dual;  // dof_i(dual[j]) = delta_ij
  double condition = 0.0;            // estimate for the dof/span matrix
};

// Throws std::runtime_error when the dof/span matrix is rank deficient.
ShapeBasis build_element(const ElementSpec& spec, const CellGeometry& geo,
                         const CellConnectivity& conn);

// L2 inner product of two forms over their (common) cell.
double pf_inner_integral(const PolynomialForm& a, const PolynomialForm& b);

}  // namespace feec

#endif
