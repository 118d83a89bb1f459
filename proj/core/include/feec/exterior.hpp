// Dimension-generic exterior algebra over R^d: alternating forms indexed by
// increasing index sequences, wedge product, inner product, Hodge star.
#ifndef FEEC_EXTERIOR_HPP
#define FEEC_EXTERIOR_HPP

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace feec {

long binomial(int n, int k);

// Canonical labeling of the basis of Alt^j(R^d) by strictly increasing
// index sequences (0-based). All sign conventions flow through merge_sign.
class FormIndex {
 public:
  FormIndex(int dim, int deg);

  int dim() const { return dim_; }
  int deg() const { return deg_; }
  int size() const { return static_cast<int>(combos_.size()); }
  const std::vector<int>& combo(int i) const { return combos_[i]; }
  // Rank of an increasing sequence within the lexicographic enumeration.
  int index(std::span<const int> combo) const;

 private:
  int dim_, deg_;
  std::vector<std::vector<int>> combos_;
};

// Shared immutable tables, one per (dim, deg).
const FormIndex& form_index(int dim, int deg);

// Sign of the permutation sorting the concatenation (a, b) of two disjoint
// increasing sequences; fills `merged` with the sorted union. Returns 0 when
// the sequences intersect.
int merge_sign(std::span<const int> a, std::span<const int> b,
               std::vector<int>* merged = nullptr);

// Sign of the permutation (combo, complement) of (0, ..., d-1).
int complement_sign(int dim, std::span<const int> combo);

// An element of Alt^j(R^d) in the canonical increasing-index basis.
struct AlternatingForm {
  int dim = 0;
  int deg = 0;
  Eigen::VectorXd coeff;  // size C(dim, deg)

  AlternatingForm() = default;
  AlternatingForm(int d, int j);

  static AlternatingForm basis(int d, std::span<const int> combo);
  static AlternatingForm volume(int d);

  // Value on a tuple of vectors, columns of `vecs` (d x deg).
  double operator()(const Eigen::MatrixXd& vecs) const;
};

AlternatingForm wedge(const AlternatingForm& a, const AlternatingForm& b);
AlternatingForm hodge_star(const AlternatingForm& a);
double alt_inner(const AlternatingForm& a, const AlternatingForm& b);
// Contraction with a constant vector: iota_c, degree j -> j-1.
AlternatingForm interior_product(const AlternatingForm& a,
                                 const Eigen::VectorXd& c);

}  // namespace feec

#endif
