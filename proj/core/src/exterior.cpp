#include "feec/exterior.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <stdexcept>

namespace feec {

long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  long r = 1;
  for (int i = 0; i < std::min(k, n - k); ++i) r = r * (n - i) / (i + 1);
  return r;
}

FormIndex::FormIndex(int dim, int deg) : dim_(dim), deg_(deg) {
  if (deg < 0 || deg > dim) return;  // empty basis
  std::vector<int> c(deg);
  for (int i = 0; i < deg; ++i) c[i] = i;
  while (true) {
    combos_.push_back(c);
    int i = deg - 1;
    while (i >= 0 && c[i] == dim - deg + i) --i;
    if (i < 0) break;
    ++c[i];
    for (int m = i + 1; m < deg; ++m) c[m] = c[m - 1] + 1;
  }
}

int FormIndex::index(std::span<const int> combo) const {
  // Lexicographic rank of an increasing sequence.
  long r = 0;
  int prev = -1;
  for (int a = 0; a < deg_; ++a) {
    for (int v = prev + 1; v < combo[a]; ++v)
      r += binomial(dim_ - 1 - v, deg_ - 1 - a);
    prev = combo[a];
  }
  return static_cast<int>(r);
}

const FormIndex& form_index(int dim, int deg) {
  static std::map<std::pair<int, int>, FormIndex> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find({dim, deg});
  if (it == cache.end())
    it = cache.emplace(std::make_pair(dim, deg), FormIndex(dim, deg)).first;
  return it->second;
}

int merge_sign(std::span<const int> a, std::span<const int> b,
               std::vector<int>* merged) {
  // Count inversions moving each element of b past the tail of a.
  int sign = 1;
  std::vector<int> out;
  out.reserve(a.size() + b.size());
  size_t ia = 0, ib = 0;
  while (ia < a.size() && ib < b.size()) {
    if (a[ia] == b[ib]) return 0;
    if (a[ia] < b[ib]) {
      out.push_back(a[ia++]);
    } else {
      if ((a.size() - ia) % 2 == 1) sign = -sign;
      out.push_back(b[ib++]);
    }
  }
  while (ia < a.size()) out.push_back(a[ia++]);
  while (ib < b.size()) out.push_back(b[ib++]);
  if (merged) *merged = std::move(out);
  return sign;
}

int complement_sign(int dim, std::span<const int> combo) {
  std::vector<int> comp;
  std::vector<bool> in(dim, false);
  for (int v : combo) in[v] = true;
  for (int v = 0; v < dim; ++v)
    if (!in[v]) comp.push_back(v);
  return merge_sign(combo, comp);
}

AlternatingForm::AlternatingForm(int d, int j)
    : dim(d), deg(j), coeff(Eigen::VectorXd::Zero(binomial(d, j))) {
  if (d < 1 || j < 0 || j > d) throw std::invalid_argument("AlternatingForm: bad degree");
}

AlternatingForm AlternatingForm::basis(int d, std::span<const int> combo) {
  AlternatingForm a(d, static_cast<int>(combo.size()));
  a.coeff[form_index(d, a.deg).index(combo)] = 1.0;
  return a;
}

AlternatingForm AlternatingForm::volume(int d) {
  AlternatingForm a(d, d);
  a.coeff[0] = 1.0;
  return a;
}

double AlternatingForm::operator()(const Eigen::MatrixXd& vecs) const {
  if (vecs.rows() != dim || vecs.cols() != deg)
    throw std::invalid_argument("AlternatingForm: vector tuple shape mismatch");
  const FormIndex& fi = form_index(dim, deg);
  double val = 0.0;
  Eigen::MatrixXd sub(deg, deg);
  for (int i = 0; i < fi.size(); ++i) {
    if (coeff[i] == 0.0) continue;
    const auto& c = fi.combo(i);
    for (int r = 0; r < deg; ++r)
      for (int s = 0; s < deg; ++s) sub(r, s) = vecs(c[r], s);
    val += coeff[i] * sub.determinant();
  }
  return val;
}

AlternatingForm wedge(const AlternatingForm& a, const AlternatingForm& b) {
  if (a.dim != b.dim) throw std::invalid_argument("wedge: dimension mismatch");
  if (a.deg + b.deg > a.dim) throw std::invalid_argument("wedge: degree overflow");
  const FormIndex& fa = form_index(a.dim, a.deg);
  const FormIndex& fb = form_index(b.dim, b.deg);
  const FormIndex& fc = form_index(a.dim, a.deg + b.deg);
  AlternatingForm out(a.dim, a.deg + b.deg);
  std::vector<int> merged;
  for (int i = 0; i < fa.size(); ++i) {
    if (a.coeff[i] == 0.0) continue;
    for (int j = 0; j < fb.size(); ++j) {
      if (b.coeff[j] == 0.0) continue;
      int s = merge_sign(fa.combo(i), fb.combo(j), &merged);
      if (s == 0) continue;
      out.coeff[fc.index(merged)] += s * a.coeff[i] * b.coeff[j];
    }
  }
  return out;
}

AlternatingForm hodge_star(const AlternatingForm& a) {
  const FormIndex& fi = form_index(a.dim, a.deg);
  const FormIndex& fo = form_index(a.dim, a.dim - a.deg);
  AlternatingForm out(a.dim, a.dim - a.deg);
  std::vector<int> comp;
  for (int i = 0; i < fi.size(); ++i) {
    if (a.coeff[i] == 0.0) continue;
    const auto& c = fi.combo(i);
    comp.clear();
    std::vector<bool> in(a.dim, false);
    for (int v : c) in[v] = true;
    for (int v = 0; v < a.dim; ++v)
      if (!in[v]) comp.push_back(v);
    out.coeff[fo.index(comp)] += complement_sign(a.dim, c) * a.coeff[i];
  }
  return out;
}

double alt_inner(const AlternatingForm& a, const AlternatingForm& b) {
  if (a.dim != b.dim || a.deg != b.deg)
    throw std::invalid_argument("alt_inner: degree mismatch");
  return a.coeff.dot(b.coeff);
}

AlternatingForm interior_product(const AlternatingForm& a,
                                 const Eigen::VectorXd& c) {
  if (a.deg < 1) throw std::invalid_argument("interior_product: 0-form");
  const FormIndex& fi = form_index(a.dim, a.deg);
  const FormIndex& fo = form_index(a.dim, a.deg - 1);
  AlternatingForm out(a.dim, a.deg - 1);
  std::vector<int> rest(a.deg - 1);
  for (int i = 0; i < fi.size(); ++i) {
    if (a.coeff[i] == 0.0) continue;
    const auto& cb = fi.combo(i);
    for (int pos = 0; pos < a.deg; ++pos) {
      int r = 0;
      for (int m = 0; m < a.deg; ++m)
        if (m != pos) rest[r++] = cb[m];
      double s = (pos % 2 == 0) ? 1.0 : -1.0;
      out.coeff[fo.index(rest)] += s * c[cb[pos]] * a.coeff[i];
    }
  }
  return out;
}

}  // namespace feec
