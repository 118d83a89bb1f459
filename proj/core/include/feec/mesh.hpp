// Simplicial meshes of the unit box in dimensions 2 and 3: Kuhn triangulation,
// uniform refinement, oriented subsimplex tables, boundary classification.
#ifndef FEEC_MESH_HPP
#define FEEC_MESH_HPP

#include <Eigen/Dense>
#include <iosfwd>
#include <vector>

namespace feec {

// Geometric data of one cell: affine map, barycentric gradients, size.
struct CellGeometry {
  Eigen::MatrixXd vertices;   // (d+1) x d, row per vertex
  Eigen::MatrixXd grad_lambda;  // (d+1) x d, row i = grad of barycentric i
  double measure = 0.0;       // |T| > 0
  double diameter = 0.0;      // h_T

  int dim() const { return static_cast<int>(vertices.cols()); }
  // Cartesian point of a barycentric coordinate vector (d+1).
  Eigen::VectorXd point(const Eigen::VectorXd& bary) const {
    return vertices.transpose() * bary;
  }
};

CellGeometry make_cell_geometry(const Eigen::MatrixXd& vertices);

struct Subsimplex {
  std::vector<int> vertices;  // global ids, sorted ascending
  std::vector<int> cells;     // incident cells (the set T_f)
  bool boundary = false;
};

class SimplicialMesh {
 public:
  // Explicit construction from vertex coordinates and positively oriented
  // cells; reorients cells with negative signed volume.
  SimplicialMesh(Eigen::MatrixXd vertices, Eigen::MatrixXi cells);

  int dim() const { return dim_; }
  int num_vertices() const { return static_cast<int>(vertices_.rows()); }
  int num_cells() const { return static_cast<int>(cells_.rows()); }
  const Eigen::MatrixXd& vertices() const { return vertices_; }
  const Eigen::MatrixXi& cells() const { return cells_; }

  // Subsimplices of dimension ell, 0 <= ell <= d-1, in a deterministic
  // global order (lexicographic on sorted vertex ids).
  const std::vector<Subsimplex>& subsimplices(int ell) const;
  int num_subsimplices(int ell) const;
  // Index into subsimplices(ell) of the local subsimplex `which` of a cell,
  // where local subsimplices are ordered by increasing local vertex combos.
  int cell_subsimplex(int cell, int ell, int which) const;

  bool vertex_on_boundary(int v) const { return vertex_boundary_[v]; }
  const CellGeometry& geometry(int cell) const { return geometry_[cell]; }
  double mesh_size() const;  // max h_T

  // Cells-per-axis when built by box_mesh, 0 otherwise.
  int axis_divisions() const { return axis_n_; }

  void dump(std::ostream& os) const;

 private:
  friend SimplicialMesh box_mesh(int d, int n);
  void build_tables();

  int dim_;
  int axis_n_ = 0;
  Eigen::MatrixXd vertices_;
  Eigen::MatrixXi cells_;
  std::vector<std::vector<Subsimplex>> subs_;         // per ell = 0..d-1
  std::vector<std::vector<std::vector<int>>> cell_subs_;  // [ell][cell][which]
  std::vector<bool> vertex_boundary_;
  std::vector<CellGeometry> geometry_;
};

// Kuhn (Freudenthal) triangulation of [0,1]^d with n cells per axis:
// each subcube split into d! simplices along the main diagonal.
SimplicialMesh box_mesh(int d, int n);

// Uniform refinement; equals box_mesh(d, 2n) for box meshes.
SimplicialMesh refine_uniform(const SimplicialMesh& m);

}  // namespace feec

#endif
