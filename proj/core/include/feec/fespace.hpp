// Global conforming finite element spaces over a simplicial mesh: dof
// numbering by subsimplex, homogeneous boundary conditions, Hodge-starred
// variants, and dense audit matrices for the discrete complexes.
#ifndef FEEC_FESPACE_HPP
#define FEEC_FESPACE_HPP

#include <Eigen/Dense>
#include <map>
#include <vector>

#include "feec/element.hpp"
#include "feec/mesh.hpp"
#include "feec/polyform.hpp"

namespace feec {

class FESpace {
 public:
  // When star is set, the fields are Hodge stars of the element family for
  // the complementary form degree d - spec.form_deg; the dof layout is that
  // of the underlying element.
  FESpace(const SimplicialMesh& mesh, ElementSpec spec, bool bc,
          bool star = false);

  const SimplicialMesh& mesh() const { return *mesh_; }
  const ElementSpec& spec() const { return spec_; }
  bool starred() const { return star_; }
  bool constrained() const { return bc_; }
  int field_deg() const { return spec_.form_deg; }

  int dim() const { return num_free_; }         // free global dofs
  int full_dim() const { return num_total_; }   // including constrained
  int local_size() const { return local_size_; }
  // Free dof ids per local dof of a cell; -1 marks a constrained dof.
  const std::vector<int>& cell_dofs(int cell) const { return cell_dofs_[cell]; }

  // Cell-interior dofs form the trailing contiguous block of the free
  // numbering (cell-major); these accessors expose it for static
  // condensation.
  int interior_per_cell() const { return counts_.back(); }
  int interior_offset() const {
    return num_free_ - static_cast<int>(cell_dofs_.size()) * counts_.back();
  }

  // Nodal basis of the element on one cell (starred when starred()). Forms
  // follow the local dof order of cell_dofs.
  std::vector<PolynomialForm> local_basis(int cell) const;
  ShapeBasis local_element(int cell) const;

  // Evaluate a coefficient vector (length dim()) at barycentric points of a
  // cell, as component values (npts x ncomb).
  Eigen::MatrixXd evaluate(const Eigen::VectorXd& coeffs, int cell,
                           const Eigen::MatrixXd& bary) const;

 private:
  const SimplicialMesh* mesh_;
  ElementSpec spec_;       // field description
  ElementSpec elem_spec_;  // underlying element (complement degree if star)
  bool bc_, star_;
  int local_size_ = 0, num_total_ = 0, num_free_ = 0;
  std::vector<int> counts_;              // dofs per subsimplex dimension
  std::vector<std::vector<int>> cell_dofs_;
  // Nodal bases keyed by cell shape class (translation-invariant signature);
  // uniform meshes have only a handful of classes, so rebuilding the element
  // per cell is avoided.
  mutable std::map<std::vector<long long>, std::vector<PolynomialForm>>
      basis_cache_;
};

// Dense matrix of the global exterior derivative `to_dofs(d from_basis)`.
// Spaces must form consecutive members of a discrete complex. Intended for
// small audit meshes.
Eigen::MatrixXd derivative_matrix_dense(const FESpace& from, const FESpace& to);

struct ExactnessReport {
  std::vector<int> space_dims;   // trimmed complex Lambda^0..Lambda^d
  std::vector<int> d_ranks;      // rank of each derivative matrix
  std::vector<int> kernel_dims;
  bool exact = false;  // Betti numbers of a contractible domain
};

// Rank audit of the trimmed complex of degree k on a (small) mesh.
ExactnessReport exactness_audit(const SimplicialMesh& mesh, int k, bool bc);

}  // namespace feec

#endif
