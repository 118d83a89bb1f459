#include "feec/mesh.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "feec/exterior.hpp"

namespace feec {

CellGeometry make_cell_geometry(const Eigen::MatrixXd& vertices) {
  const int d = static_cast<int>(vertices.cols());
  if (vertices.rows() != d + 1)
    throw std::invalid_argument("cell geometry: need d+1 vertices");
  CellGeometry g;
  g.vertices = vertices;
  Eigen::MatrixXd jac(d, d);
  for (int i = 0; i < d; ++i)
    jac.col(i) = (vertices.row(i + 1) - vertices.row(0)).transpose();
  double det = jac.determinant();
  double dfact = 1.0;
  for (int i = 2; i <= d; ++i) dfact *= i;
  g.measure = det / dfact;
  // Barycentric gradients: rows 1..d of inv(jac)^T; row 0 from sum = 0.
  Eigen::MatrixXd invT = jac.inverse().transpose();
  g.grad_lambda.resize(d + 1, d);
  for (int i = 0; i < d; ++i) g.grad_lambda.row(i + 1) = invT.col(i).transpose();
  g.grad_lambda.row(0) = -invT.rowwise().sum().transpose();
  g.diameter = 0.0;
  for (int a = 0; a <= d; ++a)
    for (int b = a + 1; b <= d; ++b)
      g.diameter = std::max(g.diameter, (vertices.row(a) - vertices.row(b)).norm());
  return g;
}

SimplicialMesh::SimplicialMesh(Eigen::MatrixXd vertices, Eigen::MatrixXi cells)
    : dim_(static_cast<int>(vertices.cols())),
      vertices_(std::move(vertices)),
      cells_(std::move(cells)) {
  if (cells_.cols() != dim_ + 1)
    throw std::invalid_argument("mesh: cells need d+1 vertices");
  // Enforce positive orientation by swapping the last two vertices if needed.
  for (int c = 0; c < cells_.rows(); ++c) {
    Eigen::MatrixXd vs(dim_ + 1, dim_);
    for (int a = 0; a <= dim_; ++a) vs.row(a) = vertices_.row(cells_(c, a));
    if (make_cell_geometry(vs).measure < 0.0)
      std::swap(cells_(c, dim_ - 1), cells_(c, dim_));
  }
  build_tables();
}

void SimplicialMesh::build_tables() {
  const int d = dim_;
  geometry_.reserve(cells_.rows());
  for (int c = 0; c < cells_.rows(); ++c) {
    Eigen::MatrixXd vs(d + 1, d);
    for (int a = 0; a <= d; ++a) vs.row(a) = vertices_.row(cells_(c, a));
    geometry_.push_back(make_cell_geometry(vs));
    if (geometry_.back().measure <= 0.0)
      throw std::runtime_error("mesh: nonpositive cell volume");
  }

  subs_.assign(d, {});
  cell_subs_.assign(d, {});
  for (int ell = 0; ell < d; ++ell) {
    const FormIndex& fi = form_index(d + 1, ell + 1);  // local vertex combos
    std::map<std::vector<int>, int> ids;
    cell_subs_[ell].assign(cells_.rows(), std::vector<int>(fi.size(), -1));
    for (int c = 0; c < cells_.rows(); ++c) {
      for (int w = 0; w < fi.size(); ++w) {
        std::vector<int> key;
        for (int lv : fi.combo(w)) key.push_back(cells_(c, lv));
        std::sort(key.begin(), key.end());
        auto [it, fresh] = ids.emplace(key, -1);
        if (fresh) it->second = -1;
        cell_subs_[ell][c][w] = 0;  // fill after ids are final
      }
    }
    // Deterministic global ordering: lexicographic on sorted vertex ids.
    int next = 0;
    for (auto& [key, id] : ids) id = next++;
    subs_[ell].resize(ids.size());
    for (auto& [key, id] : ids) subs_[ell][id].vertices = key;
    for (int c = 0; c < cells_.rows(); ++c) {
      for (int w = 0; w < fi.size(); ++w) {
        std::vector<int> key;
        for (int lv : fi.combo(w)) key.push_back(cells_(c, lv));
        std::sort(key.begin(), key.end());
        int id = ids.at(key);
        cell_subs_[ell][c][w] = id;
        subs_[ell][id].cells.push_back(c);
      }
    }
  }

  // Boundary (d-1)-faces have exactly one incident cell.
  for (auto& f : subs_[d - 1]) f.boundary = (f.cells.size() == 1);
  // Lower subsimplices are on the boundary iff contained in a boundary face.
  std::map<std::vector<int>, bool> bnd_face;
  for (const auto& f : subs_[d - 1]) bnd_face[f.vertices] = f.boundary;
  for (int ell = 0; ell < d - 1; ++ell) {
    for (auto& s : subs_[ell]) {
      for (int c : s.cells) {
        for (const auto& f : cell_subs_[d - 1][c]) {
          const auto& fv = subs_[d - 1][f].vertices;
          if (!subs_[d - 1][f].boundary) continue;
          if (std::includes(fv.begin(), fv.end(), s.vertices.begin(),
                            s.vertices.end())) {
            s.boundary = true;
            break;
          }
        }
        if (s.boundary) break;
      }
    }
  }
  vertex_boundary_.assign(vertices_.rows(), false);
  for (const auto& v : subs_[0])
    if (v.boundary) vertex_boundary_[v.vertices[0]] = true;
}

const std::vector<Subsimplex>& SimplicialMesh::subsimplices(int ell) const {
  if (ell < 0 || ell >= dim_)
    throw std::invalid_argument("subsimplices: ell out of range");
  return subs_[ell];
}

int SimplicialMesh::num_subsimplices(int ell) const {
  return static_cast<int>(subsimplices(ell).size());
}

int SimplicialMesh::cell_subsimplex(int cell, int ell, int which) const {
  return cell_subs_[ell][cell][which];
}

double SimplicialMesh::mesh_size() const {
  double h = 0.0;
  for (const auto& g : geometry_) h = std::max(h, g.diameter);
  return h;
}

void SimplicialMesh::dump(std::ostream& os) const {
  os << dim_ << ' ' << num_vertices() << ' ' << num_cells() << '\n';
  for (int v = 0; v < num_vertices(); ++v) {
    for (int m = 0; m < dim_; ++m) os << (m ? " " : "") << vertices_(v, m);
    os << '\n';
  }
  for (int c = 0; c < num_cells(); ++c) {
    for (int a = 0; a <= dim_; ++a) os << (a ? " " : "") << cells_(c, a);
    os << '\n';
  }
}

SimplicialMesh box_mesh(int d, int n) {
  if (d < 2 || d > 3) throw std::invalid_argument("box_mesh: d must be 2 or 3");
  if (n < 1) throw std::invalid_argument("box_mesh: n must be >= 1");
  const int nv1 = n + 1;
  int nv = 1;
  for (int i = 0; i < d; ++i) nv *= nv1;
  Eigen::MatrixXd vertices(nv, d);
  auto vid = [&](const std::vector<int>& p) {
    int id = 0;
    for (int i = d - 1; i >= 0; --i) id = id * nv1 + p[i];
    return id;
  };
  std::vector<int> p(d, 0);
  for (int v = 0; v < nv; ++v) {
    int rem = v;
    for (int i = 0; i < d; ++i) {
      p[i] = rem % nv1;
      rem /= nv1;
    }
    for (int i = 0; i < d; ++i) vertices(v, i) = static_cast<double>(p[i]) / n;
  }

  std::vector<int> perm(d);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::vector<int>> perms;
  do {
    perms.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));

  int ncubes = 1;
  for (int i = 0; i < d; ++i) ncubes *= n;
  Eigen::MatrixXi cells(ncubes * static_cast<int>(perms.size()), d + 1);
  int row = 0;
  std::vector<int> corner(d, 0), cur(d);
  for (int cube = 0; cube < ncubes; ++cube) {
    int rem = cube;
    for (int i = 0; i < d; ++i) {
      corner[i] = rem % n;
      rem /= n;
    }
    for (const auto& pi : perms) {
      cur = corner;
      cells(row, 0) = vid(cur);
      for (int s = 0; s < d; ++s) {
        cur[pi[s]] += 1;
        cells(row, s + 1) = vid(cur);
      }
      ++row;
    }
  }
  SimplicialMesh m(std::move(vertices), std::move(cells));
  m.axis_n_ = n;
  return m;
}

SimplicialMesh refine_uniform(const SimplicialMesh& m) {
  if (m.axis_divisions() <= 0)
    throw std::invalid_argument("refine_uniform: mesh not built by box_mesh");
  return box_mesh(m.dim(), 2 * m.axis_divisions());
}

}  // namespace feec
