#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "kurv/common.hpp"
#include "kurv/fibration.hpp"
#include "kurv/hermitian.hpp"
#include "kurv/models.hpp"

// Fiberwise Kaehler-Einstein machinery: the scalar Liouville solver for
// one-dimensional fibers, the e^phi = det identity, the trace identity for
// the geodesic curvature, and the 1-D Griffiths verdict.  Only n = 1 is
// solved numerically; for n >= 2 the identities are checked on closed-form
// jets.  The normalization fixes the fiberwise Ricci constant at -1 (so the
// scalar equation is u_{v vbar} = e^u); rescaling the Einstein constant to
// -a rescales the fiber metric by 1/a and the fiber curvature bound
// accordingly.
namespace kurv::ke {

// exact solution log 2 - 2 log(1 - |v|^2) of u_{v vbar} = e^u on the disk
double liouville_exact(double x, double y);

// Solution of Delta u = 4 e^u (i.e. u_{v vbar} = e^u, 4 d/dv dvbar = Delta)
// on the disk |v| < radius, on the N x N square grid restricted to the open
// disk.  Nodes outside carry NaN; the Dirichlet source on the circle is the
// (constant) trace of the exact solution.
struct LiouvilleSolution {
  double radius = 0.0;
  int N = 0;
  double spacing = 0.0;
  std::vector<double> u;          // N*N row-major (y-major), NaN off-disk
  double boundary_value = 0.0;    // exact-solution trace on |v| = radius
  double residual = 0.0;  // final scaled defect (rows / Laplacian diagonal)
  int iterations = 0;
  std::vector<double> residual_history;  // per Newton step, starting value first

  bool inside(int ix, int iy) const;
  double x_of(int ix) const { return -radius + spacing * ix; }
  double y_of(int iy) const { return -radius + spacing * iy; }
  double max_error() const;  // against the exact solution, interior nodes
};

// Five-point scheme with shortened boundary arms at the circle, solved by
// Newton from u = log 2 with a sparse LU factorization per step.  Throws
// NotConverged after 50 steps above tol.
LiouvilleSolution solve_liouville(double radius, int N, double tol = 1e-10);

// CSV rows "x,y,u,u_exact,error" for the in-disk nodes.
void write_csv(const LiouvilleSolution& sol, std::ostream& os);

// e^phi = det(phi_{i jbar}): the scalar Kaehler-Einstein constraint at the
// jet's point.  `ok` gates on the absolute residual.
struct DetIdentityReport {
  double exp_phi = 0.0;
  double det_vertical = 0.0;
  double residual = 0.0;   // |e^phi - det|
  double relative = 0.0;   // residual / max(e^phi, det)
  bool ok = false;
};

DetIdentityReport verify_ke_det_identity(const fibration::FibrationJet& fj,
                                         double tol = 1e-10);

// Trace identity c(phi)_{a bbar} = -R^V_{a bbar i jbar} phi^{i jbar}, with
// the curvature contracted on the adapted frame.  It is derived only under
// the e^phi = det constraint, so the check is gated: when the det residual
// exceeds `gate` the result is flagged and the residual matrix is
// diagnostics only.
struct TraceIdentityReport {
  bool precondition_ok = false;
  double det_residual = 0.0;
  hermitian::Matrix residual;  // m x m entries c(phi) + tr_phi(R^V frame)
  double max_residual = 0.0;
};

TraceIdentityReport trace_identity_check(const fibration::FibrationJet& fj,
                                         double gate = 1e-8);

// 1-D fiber Griffiths verdict: sign scan of R^V_{X Xbar V Vbar} over
// points x sampled directions (X cycling full/horizontal/vertical strata,
// V Gaussian).  NEGATIVE iff every normalized sample is below -tol; for
// n = 1 this is exactly the Griffiths negativity of the relative tangent
// bundle.
struct CorollaryReport {
  hermitian::Verdict verdict = hermitian::Verdict::INDEFINITE;
  double sup = 0.0;  // max normalized R^V sample
  int samples = 0;
  long skipped = 0;
  std::uint64_t seed = 0;
};

CorollaryReport corollary_1d_check(const models::ModelSpec& model,
                                   std::span<const jets::ChartPoint> points,
                                   int samples, std::uint64_t seed = 2024,
                                   double tol = 1e-9);

}  // namespace kurv::ke
