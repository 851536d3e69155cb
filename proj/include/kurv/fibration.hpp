#pragma once

#include <span>
#include <vector>

#include "kurv/common.hpp"
#include "kurv/hermitian.hpp"
#include "kurv/jets.hpp"
#include "kurv/models.hpp"
#include "kurv/series.hpp"

namespace kurv::fibration {

using jets::ChartPoint;
using jets::VarMap;
using hermitian::Matrix;

// Order-4 Wirtinger jet of one fibration chart point.  phi and psi share a
// layout over all 2(m+n) variables; psi only touches the base ones.
struct FibrationJet {
  int m = 0, n = 0;
  ChartPoint at;
  wirt::Series phi, psi;

  VarMap map() const { return {m, n}; }
};

// Closed-form models evaluate their weights through jet arithmetic; synthetic
// models draw a reproducible random jet keyed by (seed, point).
FibrationJet make_jet(const models::ModelSpec& model, const ChartPoint& p);

// Adapted frame delta_a = d/dz^a - L^i_a d/dv^i with L^i_a = phi_{a jbar} phi^{jbar i}.
struct AdaptedFrame {
  int m = 0, n = 0;
  std::vector<std::vector<wirt::Series>> L;  // L[a][i], valid to order 2
};

AdaptedFrame horizontal_lift(const FibrationJet& fj);

// c(phi)_{a bbar} = phi_{a bbar} - phi_{a jbar} phi^{jbar i} phi_{i bbar}.
Matrix geodesic_curvature(const FibrationJet& fj);

// mu[a][k][l]: coefficient of d/dv^k (x) dvbar^l in -dbar_l(L^k_a).
std::vector<std::vector<std::vector<Cplx>>> kodaira_spencer(
    const FibrationJet& fj);

struct OmegaMetric {
  double k = 0.0;
  Matrix horizontal;  // k psi_{a bbar} + c(phi)_{a bbar}
  Matrix vertical;    // phi_{i jbar}
  // Degenerate blocks at small k are a reported state, not an error.
  bool horizontal_positive = false;
  bool vertical_positive = false;
  double min_horizontal_eig = 0.0;
  double min_vertical_eig = 0.0;
};

OmegaMetric omega_metric(const FibrationJet& fj, double k);

using Block4 = hermitian::Tensor4;

// Curvature of Omega(k) contracted with the adapted frame {delta_a, dv_i}.
// Naming: first two letters give the bundle pair <R e, f>, last two the
// direction pair the curvature 2-form is evaluated on (h = horizontal index,
// v = vertical index):
//   hh_hh[a][b][g][s] = <R delta_a, delta_b>(delta_g, conj delta_s)
//   vv_hh[i][j][g][s] = <R dv_i,    dv_j>   (delta_g, conj delta_s)
//   vv_vv[i][j][k][l] = <R dv_i,    dv_j>   (dv_k,    conj dv_l)
//   vv_vh[i][j][k][b] = <R dv_i,    dv_j>   (dv_k,    conj delta_b)
//   vv_hv[i][j][a][l] = <R dv_i,    dv_j>   (delta_a, conj dv_l)
//   hv_hv[g][j][a][l] = <R delta_g, dv_j>   (delta_a, conj dv_l)
//   hh_vh[a][b][i][s] = <R delta_a, delta_b>(dv_i,    conj delta_s)
struct AdaptedFrameCurvature {
  int m = 0, n = 0;
  double k = 0.0;
  Block4 hh_hh, vv_hh, vv_vv, vv_vh, vv_hv, hv_hv, hh_vh;
};

// Closed-route evaluation: horizontal-lift identities block by block.
AdaptedFrameCurvature adapted_curvature_blocks(const FibrationJet& fj,
                                               double k);

// Independent oracle: assemble the raw (m+n)-dimensional metric of Omega(k),
// take its Chern curvature componentwise, contract with the frame vectors.
AdaptedFrameCurvature generic_frame_oracle(const FibrationJet& fj, double k);

// max entry difference across all seven blocks / max(1e-12, max |entry of a|).
double curvature_gap(const AdaptedFrameCurvature& a,
                     const AdaptedFrameCurvature& b);

// Raw-coordinate curvature data at the point, for direction sampling.
struct RawCurvature {
  int m = 0, n = 0;
  double k = 0.0;
  Matrix metric;  // G_{P Qbar} of Omega(k), (m+n) x (m+n)
  Block4 tensor;  // R[P][Q][A][B] = R_{P Qbar A Bbar}
  Matrix lift;    // L[a][i] values of the horizontal lift
};

RawCurvature raw_curvature(const FibrationJet& fj, double k);

// Chern curvature of the vertical bundle (V, phi_{i jbar}) along all
// total-space directions: rv[i][j][A][B], A and B raw (z then v).
Block4 vertical_bundle_curvature(const FibrationJet& fj);

// Chern curvature of (T_B, psi_{a bbar}) at the base point: rb[a][b][g][s].
Block4 base_curvature(const FibrationJet& fj);

// Value-level metric jets feeding the hermitian module: the fiber metric
// (phi_{i jbar}) with fiber-direction derivatives, and the base metric.
hermitian::MetricJet fiber_metric_jet(const FibrationJet& fj);
hermitian::MetricJet base_metric_jet(const FibrationJet& fj);

// Direction at a point, split into horizontal coefficients a (length m,
// lifted through delta_a) and vertical coefficients b (length n).
struct DirectionPair {
  std::vector<Cplx> a, b;
};

// ||a||^2 = a^al conj(a^be) psi_{al bebar};  ||b||^2 = b^i conj(b^j) phi_{i jbar}.
double horizontal_norm2(const FibrationJet& fj, std::span<const Cplx> a);
double vertical_norm2(const FibrationJet& fj, std::span<const Cplx> b);

struct DecompositionReport {
  double horizontal_residual = 0.0;  // omega_X(delta_a, conj delta_b) vs c(phi)
  double mixed_residual = 0.0;       // omega_X(delta_a, conj dv_j) vs 0
};

DecompositionReport decomposition_check(const FibrationJet& fj);

}  // namespace kurv::fibration
