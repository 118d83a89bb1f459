#include "feec/exterior.hpp"

#include <random>

#include "doctest.h"
#include "feec/quadrature.hpp"

using namespace feec;

namespace {

AlternatingForm dx(int d, int i) { return AlternatingForm::basis(d, std::vector<int>{i}); }

AlternatingForm random_form(int d, int j, std::mt19937& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  AlternatingForm a(d, j);
  for (int i = 0; i < a.coeff.size(); ++i) a.coeff[i] = dist(rng);
  return a;
}

// Independent wedge oracle: (i+j choose j) skw(a (x) b) expanded over all
// index tuples, evaluated on the canonical basis vectors.
double wedge_oracle_component(const AlternatingForm& a, const AlternatingForm& b,
                              const std::vector<int>& combo) {
  const int d = a.dim;
  const int k = a.deg + b.deg;
  // Evaluate (a wedge b)(e_{combo}) by summing over permutations.
  std::vector<int> idx(combo);
  std::sort(idx.begin(), idx.end());
  double total = 0.0;
  do {
    // signature of the permutation taking sorted order to idx
    int inv = 0;
    for (size_t p = 0; p < idx.size(); ++p)
      for (size_t q = p + 1; q < idx.size(); ++q)
        if (idx[p] > idx[q]) ++inv;
    double sgn = (inv % 2) ? -1.0 : 1.0;
    Eigen::MatrixXd va = Eigen::MatrixXd::Zero(d, a.deg);
    Eigen::MatrixXd vb = Eigen::MatrixXd::Zero(d, b.deg);
    for (int p = 0; p < a.deg; ++p) va(idx[p], p) = 1.0;
    for (int p = 0; p < b.deg; ++p) vb(idx[a.deg + p], p) = 1.0;
    total += sgn * a(va) * b(vb);
  } while (std::next_permutation(idx.begin(), idx.end()));
  // skw has 1/k!; the binomial factor cancels the i! j! double counting.
  double ifact = 1.0, jfact = 1.0;
  for (int p = 2; p <= a.deg; ++p) ifact *= p;
  for (int p = 2; p <= b.deg; ++p) jfact *= p;
  (void)k;
  return total / (ifact * jfact);
}

}  // namespace

TEST_CASE("wedge of basis one-forms") {
  const int d = 3;
  auto w = wedge(dx(d, 0), dx(d, 1));
  CHECK(w.deg == 2);
  CHECK(w.coeff[form_index(3, 2).index(std::vector<int>{0, 1})] == doctest::Approx(1.0));
  auto r = wedge(dx(d, 1), dx(d, 0));
  CHECK(r.coeff[form_index(3, 2).index(std::vector<int>{0, 1})] == doctest::Approx(-1.0));
}

TEST_CASE("wedge matches the skew tensor-product oracle") {
  // (2dx1 + dx3) wedge (dx1 ^ dx2) in R^3 -> +1 * vol
  AlternatingForm a(3, 1);
  a.coeff[0] = 2.0;  // dx1
  a.coeff[2] = 1.0;  // dx3
  auto b = wedge(dx(3, 0), dx(3, 1));
  auto w = wedge(a, b);
  CHECK(w.deg == 3);
  CHECK(w.coeff[0] == doctest::Approx(1.0));
  CHECK(wedge_oracle_component(a, b, {0, 1, 2}) == doctest::Approx(1.0));

  std::mt19937 rng(7);
  for (int d = 2; d <= 4; ++d) {
    for (int i = 0; i <= d; ++i) {
      for (int j = 0; i + j <= d; ++j) {
        auto x = random_form(d, i, rng);
        auto y = random_form(d, j, rng);
        auto xy = wedge(x, y);
        const FormIndex& fi = form_index(d, i + j);
        for (int c = 0; c < fi.size(); ++c)
          CHECK(xy.coeff[c] ==
                doctest::Approx(wedge_oracle_component(x, y, fi.combo(c))).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("wedge errors") {
  CHECK_THROWS(wedge(dx(3, 0), dx(2, 0)));
  auto vol = AlternatingForm::volume(3);
  CHECK_THROWS(wedge(vol, dx(3, 0)));
}

TEST_CASE("anticommutativity and associativity on random forms") {
  std::mt19937 rng(11);
  for (int d = 2; d <= 4; ++d) {
    for (int i = 0; i <= d; ++i) {
      for (int j = 0; i + j <= d; ++j) {
        auto a = random_form(d, i, rng);
        auto b = random_form(d, j, rng);
        auto ab = wedge(a, b);
        auto ba = wedge(b, a);
        double sgn = (i * j % 2) ? -1.0 : 1.0;
        CHECK((ab.coeff - sgn * ba.coeff).cwiseAbs().maxCoeff() < 1e-14);
        for (int k = 0; i + j + k <= d; ++k) {
          auto c = random_form(d, k, rng);
          auto l = wedge(ab, c);
          auto r = wedge(a, wedge(b, c));
          CHECK((l.coeff - r.coeff).cwiseAbs().maxCoeff() < 1e-13);
        }
      }
    }
  }
}

TEST_CASE("hodge star basics") {
  AlternatingForm one(3, 0);
  one.coeff[0] = 1.0;
  auto v = hodge_star(one);
  CHECK(v.deg == 3);
  CHECK(v.coeff[0] == doctest::Approx(1.0));

  // star dx2 = -dx1^dx3 in R^3
  auto s = hodge_star(dx(3, 1));
  CHECK(s.coeff[form_index(3, 2).index(std::vector<int>{0, 2})] == doctest::Approx(-1.0));
  // oracle: solve <star dx2, eta> vol = dx2 ^ eta over the Alt^2 basis
  const FormIndex& f2 = form_index(3, 2);
  for (int c = 0; c < f2.size(); ++c) {
    auto eta = AlternatingForm::basis(3, f2.combo(c));
    auto w = wedge(dx(3, 1), eta);
    CHECK(s.coeff[c] == doctest::Approx(w.coeff[0]));
  }
}

TEST_CASE("double star sign law and isometry") {
  std::mt19937 rng(3);
  for (int d = 2; d <= 3; ++d) {
    for (int j = 0; j <= d; ++j) {
      const FormIndex& fi = form_index(d, j);
      for (int c = 0; c < fi.size(); ++c) {
        auto b = AlternatingForm::basis(d, fi.combo(c));
        auto ss = hodge_star(hodge_star(b));
        double sgn = ((j * (d - j)) % 2) ? -1.0 : 1.0;
        CHECK((ss.coeff - sgn * b.coeff).cwiseAbs().maxCoeff() == 0.0);
      }
      auto a = random_form(d, j, rng);
      auto b = random_form(d, j, rng);
      CHECK(alt_inner(hodge_star(a), hodge_star(b)) ==
            doctest::Approx(alt_inner(a, b)).epsilon(1e-14));
    }
  }
  // random d=3, j=1 double-star check
  std::mt19937 rng2(5);
  auto w = random_form(3, 1, rng2);
  auto ss = hodge_star(hodge_star(w));
  CHECK((ss.coeff - w.coeff).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("inner product examples") {
  auto e12 = wedge(dx(3, 0), dx(3, 1));
  auto e13 = wedge(dx(3, 0), dx(3, 2));
  CHECK(alt_inner(e12, e12) == doctest::Approx(1.0));
  CHECK(alt_inner(e12, e13) == doctest::Approx(0.0));
  AlternatingForm a(3, 1), b(3, 1);
  a.coeff << 2, 1, 0;
  b.coeff << 1, -1, 0;
  CHECK(alt_inner(a, b) == doctest::Approx(1.0));
  CHECK_THROWS(alt_inner(a, e12));
}

TEST_CASE("interior product lowers degree with alternating signs") {
  Eigen::VectorXd c(3);
  c << 1.0, 2.0, 3.0;
  auto e123 = AlternatingForm::volume(3);
  auto r = interior_product(e123, c);
  // iota_c (dx1^dx2^dx3) = c1 dx2^dx3 - c2 dx1^dx3 + c3 dx1^dx2
  const FormIndex& f2 = form_index(3, 2);
  CHECK(r.coeff[f2.index(std::vector<int>{1, 2})] == doctest::Approx(1.0));
  CHECK(r.coeff[f2.index(std::vector<int>{0, 2})] == doctest::Approx(-2.0));
  CHECK(r.coeff[f2.index(std::vector<int>{0, 1})] == doctest::Approx(3.0));
}

TEST_CASE("grundmann-moller integrates monomials exactly") {
  for (int dim = 1; dim <= 3; ++dim) {
    for (int degree : {2, 5, 8, 11}) {
      const auto& q = simplex_quadrature(dim, degree);
      // check on a few monomials of total degree <= degree
      Eigen::VectorXi pw = Eigen::VectorXi::Zero(dim + 1);
      pw[0] = degree / 2;
      pw[dim] = degree - pw[0];
      double exact = monomial_integral(dim, pw);
      double approx = 0.0;
      for (int p = 0; p < q.size(); ++p) {
        double v = 1.0;
        for (int i = 0; i <= dim; ++i) v *= std::pow(q.barycentric(p, i), pw[i]);
        approx += q.weights[p] * v;
      }
      CHECK(approx == doctest::Approx(exact).epsilon(1e-12));
    }
  }
}
