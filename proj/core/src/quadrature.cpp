#include "feec/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace feec {

namespace {

// All compositions of `total` into `parts` nonnegative integers.
void compositions(int total, int parts, std::vector<int>& cur,
                  std::vector<std::vector<int>>& out) {
  if (parts == 1) {
    cur.push_back(total);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (int v = 0; v <= total; ++v) {
    cur.push_back(v);
    compositions(total - v, parts - 1, cur, out);
    cur.pop_back();
  }
}

}  // namespace

SimplexQuadrature make_grundmann_moller(int dim, int degree) {
  SimplexQuadrature q;
  q.dim = dim;
  if (dim == 0) {
    q.degree = 1000;
    q.barycentric = Eigen::MatrixXd::Ones(1, 1);
    q.weights = Eigen::VectorXd::Ones(1);
    return q;
  }
  int s = std::max(0, (degree - 1 + 1) / 2);  // 2s+1 >= degree
  q.degree = 2 * s + 1;
  const int n = dim;
  const int dd = 2 * s + 1;
  std::vector<Eigen::VectorXd> pts;
  std::vector<double> wts;
  for (int i = 0; i <= s; ++i) {
    // Grundmann-Moller weight for layer i (relative to simplex volume 1/n!).
    double lw = -2.0 * s * std::log(2.0) + dd * std::log(dd + n - 2.0 * i) -
                std::lgamma(i + 1.0) - std::lgamma(dd + n - i + 1.0);
    double w = ((i % 2) ? -1.0 : 1.0) * std::exp(lw);
    std::vector<std::vector<int>> comps;
    std::vector<int> cur;
    compositions(s - i, n + 1, cur, comps);
    for (const auto& k : comps) {
      Eigen::VectorXd b(n + 1);
      for (int j = 0; j <= n; ++j) b[j] = (2.0 * k[j] + 1.0) / (dd + n - 2.0 * i);
      pts.push_back(b);
      wts.push_back(w);
    }
  }
  q.barycentric.resize(static_cast<int>(pts.size()), n + 1);
  q.weights.resize(static_cast<int>(pts.size()));
  for (size_t p = 0; p < pts.size(); ++p) {
    q.barycentric.row(static_cast<int>(p)) = pts[p].transpose();
    q.weights[static_cast<int>(p)] = wts[p];
  }
  // Normalize so weights sum to exactly 1 (they sum to 1 analytically).
  q.weights /= q.weights.sum();
  return q;
}

const SimplexQuadrature& simplex_quadrature(int dim, int degree) {
  static std::map<std::pair<int, int>, SimplexQuadrature> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  int s = std::max(0, degree / 2);
  auto key = std::make_pair(dim, s);
  auto it = cache.find(key);
  if (it == cache.end())
    it = cache.emplace(key, make_grundmann_moller(dim, degree)).first;
  return it->second;
}

double monomial_integral(int dim, const Eigen::VectorXi& powers) {
  if (powers.size() != dim + 1)
    throw std::invalid_argument("monomial_integral: need dim+1 exponents");
  double lg = std::lgamma(dim + 1.0);
  int total = 0;
  for (int i = 0; i <= dim; ++i) {
    lg += std::lgamma(powers[i] + 1.0);
    total += powers[i];
  }
  lg -= std::lgamma(total + dim + 1.0);
  return std::exp(lg);
}

}  // namespace feec
