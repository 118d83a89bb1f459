#include "feec/mesh.hpp"

#include <set>
#include <sstream>

#include "doctest.h"

using namespace feec;

TEST_CASE("kuhn box mesh counts in 3d") {
  auto m = box_mesh(3, 1);
  CHECK(m.num_vertices() == 8);
  CHECK(m.num_cells() == 6);
  CHECK(m.num_subsimplices(1) == 19);
  CHECK(m.num_subsimplices(2) == 18);
  // Euler characteristic of a contractible domain
  CHECK(8 - 19 + 18 - 6 == 1);

  int interior_faces = 0;
  for (const auto& f : m.subsimplices(2))
    if (!f.boundary) ++interior_faces;
  CHECK(interior_faces == 6);

  int interior_vertices = 0;
  for (const auto& v : m.subsimplices(0))
    if (!v.boundary) ++interior_vertices;
  CHECK(interior_vertices == 0);

  CHECK(box_mesh(3, 4).num_cells() == 384);
}

TEST_CASE("kuhn box mesh counts in 2d") {
  auto m = box_mesh(2, 2);
  CHECK(m.num_vertices() == 9);
  CHECK(m.num_cells() == 8);
  int iv = 0;
  for (const auto& v : m.subsimplices(0))
    if (!v.boundary) ++iv;
  CHECK(iv == 1);
}

TEST_CASE("interior vertex of the n=2 cube") {
  auto m = box_mesh(3, 2);
  int iv = 0;
  for (const auto& v : m.subsimplices(0))
    if (!v.boundary) ++iv;
  CHECK(iv == 1);
}

TEST_CASE("orientation and manifold checks") {
  for (int d = 2; d <= 3; ++d) {
    for (int n : {1, 2, 3}) {
      auto m = box_mesh(d, n);
      for (int c = 0; c < m.num_cells(); ++c) CHECK(m.geometry(c).measure > 0.0);
      for (const auto& f : m.subsimplices(d - 1)) {
        if (f.boundary)
          CHECK(f.cells.size() == 1);
        else
          CHECK(f.cells.size() == 2);
      }
    }
  }
}

TEST_CASE("barycentric gradients sum to zero") {
  auto m = box_mesh(3, 2);
  for (int c = 0; c < m.num_cells(); ++c) {
    const auto& g = m.geometry(c);
    CHECK(g.grad_lambda.colwise().sum().cwiseAbs().maxCoeff() < 1e-12);
    CHECK(g.measure > 0.0);
  }
}

TEST_CASE("refinement consistency") {
  auto m = box_mesh(3, 2);
  auto r = refine_uniform(m);
  auto b = box_mesh(3, 4);
  CHECK(r.num_vertices() == b.num_vertices());
  CHECK(r.num_cells() == b.num_cells());
  CHECK(r.num_subsimplices(1) == b.num_subsimplices(1));
  CHECK((r.vertices() - b.vertices()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(r.mesh_size() == doctest::Approx(0.5 * m.mesh_size()));

  // boundary faces quadruple in 3d
  auto count_bnd = [](const SimplicialMesh& mm) {
    int nb = 0;
    for (const auto& f : mm.subsimplices(mm.dim() - 1))
      if (f.boundary) ++nb;
    return nb;
  };
  CHECK(count_bnd(r) == 4 * count_bnd(m));
}

TEST_CASE("shape regularity is preserved under refinement") {
  for (int d = 2; d <= 3; ++d) {
    std::set<long> classes;
    double ratio1 = 0.0;
    {
      auto m = box_mesh(d, 1);
      double r = 0.0;
      for (int c = 0; c < m.num_cells(); ++c) {
        const auto& g = m.geometry(c);
        r = std::max(r, std::pow(g.diameter, d) / g.measure);
      }
      ratio1 = r;
    }
    for (int n : {2, 4}) {
      auto m = box_mesh(d, n);
      double r = 0.0;
      for (int c = 0; c < m.num_cells(); ++c) {
        const auto& g = m.geometry(c);
        r = std::max(r, std::pow(g.diameter, d) / g.measure);
      }
      CHECK(r == doctest::Approx(ratio1).epsilon(1e-12));
    }
    (void)classes;
  }
}

TEST_CASE("mesh dump format") {
  auto m = box_mesh(2, 1);
  std::ostringstream os;
  m.dump(os);
  std::istringstream is(os.str());
  int d, nv, nc;
  is >> d >> nv >> nc;
  CHECK(d == 2);
  CHECK(nv == 4);
  CHECK(nc == 2);
}

TEST_CASE("subsimplex queries") {
  auto m = box_mesh(2, 1);
  CHECK_THROWS(m.subsimplices(2));
  CHECK_THROWS(m.subsimplices(-1));
  // every edge knows its incident cells
  for (const auto& e : m.subsimplices(1)) CHECK(!e.cells.empty());
}
