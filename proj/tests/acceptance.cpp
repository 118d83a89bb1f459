// End-to-end acceptance gate: one pass/fail line per criterion, exit code
// equals the number of failed criteria. The convergence studies recompute
// everything from scratch, so the full run takes tens of minutes.
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <string>
#include <vector>

#include "feec/element.hpp"
#include "feec/harness.hpp"
#include "feec/mesh.hpp"
#include "feec/polyform.hpp"
#include "feec/system.hpp"

namespace {

using namespace feec;

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("criterion %d: %s  %s\n", criterion, pass ? "PASS" : "FAIL",
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

bool within_factor(double got, double ref, double factor) {
  return got <= factor * ref && got >= ref / factor;
}

long binom(int n, int k) {
  if (k < 0 || k > n) return 0;
  long r = 1;
  for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
  return r;
}

// Criteria 1-3 share the deep biharmonic run; 3 also folds in the other
// convergence studies, which are returned for reuse by criteria 7 and 8.
struct Runs {
  ConvergenceReport biharmonic, quadcurl, fourthdiv2;
};

void criteria_tables(Runs* runs) {
  SolverConfig cfg;
  ManufacturedCase mc = make_case("biharmonic", 3);
  ConvergenceReport rep = run_convergence(mc, 1, {4, 8, 16, 32}, cfg);
  runs->biharmonic = rep;

  const double u_l2[] = {1.30759e-1, 5.04489e-2, 1.42827e-2, 3.67529e-3};
  const double u_h1[] = {9.92045e-1, 4.34958e-1, 1.33687e-1, 3.52141e-2};
  const double p_l2[] = {1.69698e+0, 7.45455e-1, 2.29390e-1, 6.04572e-2};
  const double p_h1[] = {1.10196e+1, 6.38092e+0, 2.83386e+0, 1.37843e+0};

  bool ok1 = rep.solver_ok && rep.levels.size() == 4;
  double r_l2 = 0, r_h1 = 0, t16 = 0, t32 = 0;
  if (ok1) {
    r_l2 = rep.rates[3][0];
    r_h1 = rep.rates[3][1];
    ok1 = r_l2 >= 1.85 && r_h1 >= 1.80;
    for (int i = 0; i < 4; ++i) {
      ok1 = ok1 && within_factor(rep.levels[i].err_u_l2, u_l2[i], 2.0);
      ok1 = ok1 && within_factor(rep.levels[i].err_u_h1, u_h1[i], 2.0);
    }
    for (int i = 0; i < 3; ++i) t16 += rep.levels[i].seconds;
    t32 = rep.levels[3].seconds;
    ok1 = ok1 && t16 < 120.0 && t32 < 1800.0;
  }
  report(1, ok1,
         fmt("u rates at finest transition L2=%.4f (>=1.85) H1=%.4f (>=1.80), "
             "magnitudes within x2 of the reference table, n<=16 in %.1fs, "
             "n=32 in %.1fs",
             r_l2, r_h1, t16, t32));

  bool ok2 = rep.solver_ok && rep.levels.size() == 4;
  double rp_l2 = 0, rp_h1 = 0;
  if (ok2) {
    rp_l2 = rep.rates[3][2];
    rp_h1 = rep.rates[3][3];
    ok2 = rp_l2 >= 1.85 && rp_h1 >= 0.85 && rp_h1 <= 1.25;
    for (int i = 0; i < 4; ++i) {
      ok2 = ok2 && within_factor(rep.levels[i].err_phi_l2, p_l2[i], 2.0);
      ok2 = ok2 && within_factor(rep.levels[i].err_phi_h1, p_h1[i], 2.0);
    }
  }
  report(2, ok2,
         fmt("phi rates at finest transition L2=%.4f (>=1.85) H1=%.4f "
             "(in [0.85,1.25]), magnitudes within x2 of the reference table",
             rp_l2, rp_h1));

  runs->quadcurl = run_convergence(make_case("quadcurl", 3), 1, {2, 4, 8}, cfg);
  runs->fourthdiv2 =
      run_convergence(make_case("fourthdiv", 2), 1, {2, 4, 8}, cfg);

  bool ok3 = true;
  double worst = 0.0;
  for (const ConvergenceReport* r :
       {&runs->biharmonic, &runs->quadcurl, &runs->fourthdiv2}) {
    ok3 = ok3 && r->multipliers_ok;
    for (const LevelRecord& lv : r->levels) {
      double ratio = lv.mult_norm_max / std::max(lv.primal_scale, 1e-300);
      worst = std::max(worst, ratio);
      ok3 = ok3 && ratio <= 1e-6;
    }
  }
  report(3, ok3,
         fmt("max multiplier-to-primal ratio over all convergence runs "
             "%.3e (<=1e-6)", worst));
}

void criterion_equivalence() {
  ManufacturedCase mc = make_case("biharmonic", 3);
  SimplicialMesh mesh = box_mesh(3, 2);
  SolverConfig full, elim;
  full.eliminate = false;
  full.kind = SolverConfig::Kind::Direct;
  elim.eliminate = true;
  elim.kind = SolverConfig::Kind::Direct;
  DecoupledSolution a = solve_fourth_order(mesh, mc.j, 1, mc.f.field(),
                                           FormField(), full);
  DecoupledSolution b = solve_fourth_order(mesh, mc.j, 1, mc.f.field(),
                                           FormField(), elim);
  auto rel = [](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    double den = std::max(x.norm(), 1e-300);
    return (x - y).norm() / den;
  };
  double dw = rel(a.w, b.w), dphi = rel(a.phi, b.phi), du = rel(a.u, b.u);
  bool ok = dw <= 1e-8 && dphi <= 1e-8 && du <= 1e-8;
  report(4, ok,
         fmt("full vs eliminated primal vectors agree: |dw|=%.2e |dphi|=%.2e "
             "|du|=%.2e (<=1e-8)", dw, dphi, du));
}

void criterion_structure() {
  bool ok = true;
  std::string detail;
  double worst_cond = 0.0;
  for (int d : {2, 3}) {
    SimplicialMesh mesh = box_mesh(d, 1);
    CellConnectivity conn = mesh_connectivity(mesh, 0);
    const CellGeometry& geo = mesh.geometry(0);
    // Unisolvence of every element family used by the pipeline.
    for (int j = 0; j <= d; ++j) {
      for (SpaceKind kind : {SpaceKind::Full, SpaceKind::Trimmed}) {
        try {
          ShapeBasis sb = build_element(ElementSpec{kind, 1, j}, geo, conn);
          worst_cond = std::max(worst_cond, sb.condition);
        } catch (const std::exception& e) {
          ok = false;
          detail += fmt(" unisolvence(d=%d,j=%d): %s;", d, j, e.what());
        }
      }
    }
    for (int j = 0; j <= d - 1; ++j) {
      try {
        ShapeBasis sb = build_element(ElementSpec{SpaceKind::Phi, 1, j + 1},
                                      geo, conn);
        worst_cond = std::max(worst_cond, sb.condition);
      } catch (const std::exception& e) {
        ok = false;
        detail += fmt(" unisolvence(phi,d=%d,j=%d): %s;", d, j, e.what());
      }
    }
    // d compose d = 0 and delta compose delta = 0 at the matrix level, both
    // locally on shape spaces and globally on the assembled complex.
    for (int j = 0; j <= d; ++j)
      for (const PolynomialForm& p : space_P(geo, 2, j)) {
        if (j + 2 <= d &&
            exterior_derivative(exterior_derivative(p)).coef.norm() > 1e-12) {
          ok = false;
          detail += fmt(" dd!=0(d=%d,j=%d);", d, j);
        }
        if (j - 2 >= 0 &&
            codifferential(codifferential(p)).coef.norm() > 1e-12) {
          ok = false;
          detail += fmt(" deltadelta!=0(d=%d,j=%d);", d, j);
        }
        // Star-star sign law: ** = (-1)^{j(d-j)} on j-forms.
        PolynomialForm ss = hodge_star(hodge_star(p));
        double sign = ((j * (d - j)) % 2 == 0) ? 1.0 : -1.0;
        if ((ss.coef - sign * p.coef).norm() > 1e-12 * (1 + p.coef.norm())) {
          ok = false;
          detail += fmt(" starstar(d=%d,j=%d);", d, j);
        }
      }
    SimplicialMesh m2 = box_mesh(d, 2);
    for (bool bc : {false, true}) {
      std::vector<FESpace> sp;
      for (int j = 0; j <= d; ++j)
        sp.emplace_back(m2, ElementSpec{SpaceKind::Trimmed, 1, j}, bc);
      for (int j = 0; j + 2 <= d; ++j) {
        Eigen::MatrixXd dd = derivative_matrix_dense(sp[j + 1], sp[j + 2]) *
                             derivative_matrix_dense(sp[j], sp[j + 1]);
        if (dd.size() > 0 && dd.cwiseAbs().maxCoeff() > 1e-12) {
          ok = false;
          detail += fmt(" global dd!=0(d=%d,j=%d,bc=%d);", d, j, bc ? 1 : 0);
        }
      }
      // Exactness ranks of the discrete complexes by dense null spaces.
      ExactnessReport rep = exactness_audit(box_mesh(d, 1), 1, bc);
      if (!rep.exact) {
        ok = false;
        detail += fmt(" exactness(d=%d,bc=%d);", d, bc ? 1 : 0);
      }
    }
    // Koszul decomposition rank identity for k <= 3:
    // dim P_k L^j = dim(star kappa P_{k-1} L^{d-j+1}) + dim(delta P_{k+1} L^{j+1}).
    for (int k = 0; k <= 3; ++k)
      for (int j = 0; j <= d; ++j) {
        std::vector<PolynomialForm> both =
            span_star_kappa_P(geo, k - 1, d - j + 1);
        for (const PolynomialForm& p :
             span_delta_P(geo, k + 1, j == d ? d + 1 : j + 1))
          both.push_back(p);
        long want = binom(k + d, d) * binom(d, j);
        if (span_rank(both) != want) {
          ok = false;
          detail += fmt(" koszul(d=%d,k=%d,j=%d);", d, k, j);
        }
      }
  }
  report(5, ok,
         ok ? fmt("unisolvence (worst cond %.2e), d.d=0, delta.delta=0, "
                  "star-star sign, Koszul ranks k<=3, exactness on n=1, "
                  "for d in {2,3}", worst_cond)
            : "failures:" + detail);
}

void criterion_infsup() {
  bool ok = true;
  std::string detail;
  for (int d : {2, 3}) {
    double beta0 = 0.0, betaf = 0.0;
    for (int n : {1, 2, 4}) {
      InfSupResult r = infsup_probe(box_mesh(d, n), d - 2, 1);
      if (!r.applicable) {
        ok = false;
        detail += fmt(" d=%d n=%d not applicable;", d, n);
        continue;
      }
      if (n == 1) beta0 = r.beta;
      betaf = r.beta;
      detail += fmt(" d=%d n=%d beta=%.4f", d, n, r.beta);
    }
    if (betaf < 0.5 * beta0) {
      ok = false;
      detail += fmt(" (degenerates, d=%d);", d);
    }
  }
  report(6, ok, "inf-sup j=d-2:" + detail);
}

void criterion_quadcurl(const ConvergenceReport& rep) {
  bool ok = rep.solver_ok && rep.levels.size() == 3;
  double rate = 0.0;
  if (ok) {
    rate = rep.rates[2][1];  // ||d(u - u_h)|| transition n=4 -> n=8
    ok = rate >= 1.6 && rate <= 2.4;
  }
  report(7, ok,
         fmt("quad-curl ||d(u-u_h)|| rate at finest transition %.4f "
             "(in [1.6,2.4])", rate));
}

void criterion_degenerate(const ConvergenceReport& manufactured) {
  bool ok = manufactured.solver_ok && manufactured.multipliers_ok;
  std::string detail = ok ? "manufactured j=d-1 run converges" :
                            "manufactured j=d-1 run failed";
  // Homogeneous data must give the zero solution to solver tolerance, with
  // zero-dimensional pressure-type spaces exercised without special cases.
  for (int d : {2, 3}) {
    SimplicialMesh mesh = box_mesh(d, 2);
    int j = d - 1;
    FormField zf = AnalyticForm::zero(d, j).field();
    FormField zg = AnalyticForm::zero(d, j - 1).field();
    DecoupledSolution sol;
    try {
      sol = solve_fourth_order(mesh, j, 1, zf, zg, SolverConfig{});
    } catch (const std::exception& e) {
      ok = false;
      detail += fmt("; d=%d threw: %s", d, e.what());
      continue;
    }
    if (sol.P->dim() != 0 || sol.R->dim() != 0) {
      ok = false;
      detail += fmt("; d=%d pressure spaces not empty", d);
    }
    double mag = std::max({sol.w.norm(), sol.phi.norm(), sol.u.norm(),
                           sol.lambda.norm(), sol.z.norm()});
    detail += fmt("; d=%d zero-data |solution|=%.2e", d, mag);
    if (mag > 1e-8) ok = false;
  }
  report(8, ok, detail);
}

}  // namespace

int main() {
  Runs runs;
  criteria_tables(&runs);
  criterion_equivalence();
  criterion_structure();
  criterion_infsup();
  criterion_quadcurl(runs.quadcurl);
  criterion_degenerate(runs.fourthdiv2);
  std::printf("acceptance: %d of 8 criteria failed\n", g_failures);
  return g_failures;
}
