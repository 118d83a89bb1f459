// Experiment driver: manufactured solutions with closed-form exterior
// calculus, error norms against exact fields, and convergence reporting.
#ifndef FEEC_HARNESS_HPP
#define FEEC_HARNESS_HPP

#include <array>
#include <string>
#include <vector>

#include "feec/system.hpp"

namespace feec {

// One-dimensional profile closed under differentiation:
// sum_i a_i * t^p_i * sin(m_i pi t + q_i pi/2), where m_i = 0 drops the
// trigonometric factor (pure monomial term).
struct Trig1D {
  struct Term {
    double a = 0.0;
    int p = 0;  // monomial exponent
    int m = 0;  // frequency multiple of pi (0: no trig factor)
    int q = 0;  // phase in quarter turns
  };
  std::vector<Term> terms;

  double eval(double t) const;
  Trig1D derivative() const;

  static Trig1D one();
  static Trig1D sin_cubed();  // (3 sin(pi t) - sin(3 pi t)) / 4
  static Trig1D poly(const std::vector<double>& coeffs);  // sum c_i t^i
};

// Sum of separable products of 1D profiles on the unit box.
struct TensorTrig {
  struct Term {
    double c = 1.0;
    std::vector<Trig1D> fac;  // one per axis
  };
  int d = 0;
  std::vector<Term> terms;

  static TensorTrig zero(int d);
  static TensorTrig separable(std::vector<Trig1D> factors, double c = 1.0);
  double eval(const Eigen::VectorXd& x) const;
  TensorTrig partial(int axis) const;
};

TensorTrig tt_add(const TensorTrig& a, const TensorTrig& b);
TensorTrig tt_scale(const TensorTrig& a, double s);

// A differential form with closed-form components (one TensorTrig per
// increasing index), supporting symbolic d, star, delta, and the
// componentwise Laplacian.
struct AnalyticForm {
  int d = 0, form_deg = 0;
  std::vector<TensorTrig> comp;

  static AnalyticForm zero(int d, int j);
  bool trivially_zero() const;
  // Component values at cartesian points of a cell (FormField signature).
  FormField field() const;
  // Gradient field matching PolynomialForm::gradients layout:
  // npts x ncomb*d with component c derivatives in columns [c*d, (c+1)*d).
  FormField gradient_field() const;
};

AnalyticForm af_d(const AnalyticForm& w);
AnalyticForm af_star(const AnalyticForm& w);
AnalyticForm af_delta(const AnalyticForm& w);
AnalyticForm af_laplace(const AnalyticForm& w);  // componentwise
AnalyticForm af_scale(const AnalyticForm& w, double s);

struct ManufacturedCase {
  std::string problem;
  int d = 3, j = 0;
  AnalyticForm u, phi, f;  // phi = d u; f = -delta Laplace d u
  bool has_g = false;      // quadcurl has g = 0; fourthdiv has g = delta u
  AnalyticForm g;
};

// problem in {biharmonic, quadcurl, fourthdiv}; throws std::invalid_argument
// on unsupported combinations.
ManufacturedCase make_case(const std::string& problem, int d);
ManufacturedCase scale_case(const ManufacturedCase& mc, double s);

struct LevelRecord {
  int n = 0;
  double h = 0.0;
  double err_u_l2 = 0.0, err_u_h1 = 0.0;      // u-seminorm is ||d(u - u_h)||
  double err_phi_l2 = 0.0, err_phi_h1 = 0.0;  // phi-seminorm is full gradient
  double mult_norm_max = 0.0, primal_scale = 0.0, seconds = 0.0;
  bool solver_ok = true;
};

LevelRecord error_norms(const DecoupledSolution& sol,
                        const ManufacturedCase& mc,
                        const SimplicialMesh& mesh);

struct ConvergenceReport {
  std::string problem;
  int d = 0, j = 0, k = 0;
  std::vector<LevelRecord> levels;
  // Four log2 error ratios vs the previous level (u L2, u H1, phi L2,
  // phi H1); NaN entries on the first level.
  std::vector<std::array<double, 4>> rates;
  bool solver_ok = true;
  bool multipliers_ok = true;  // max multiplier norm <= 1e-6 * primal scale
};

ConvergenceReport run_convergence(const ManufacturedCase& mc, int k,
                                  const std::vector<int>& levels,
                                  const SolverConfig& cfg);

// CSV with header n,h,err_u_l2,rate_u_l2,...,mult_norm_max,seconds; floats
// printed as shortest round-trip decimals, empty rate cells on the first
// level.
std::string to_csv(const ConvergenceReport& rep);
std::string to_markdown(const ConvergenceReport& rep);

}  // namespace feec

#endif
