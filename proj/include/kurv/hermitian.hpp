#pragma once

#include <span>
#include <utility>
#include <vector>

#include "kurv/common.hpp"

namespace kurv::hermitian {

using Matrix = std::vector<std::vector<Cplx>>;
using Tensor4 = std::vector<std::vector<std::vector<std::vector<Cplx>>>>;

// Pointwise 2-jet of a Hermitian metric h_{i jbar} on a rank-r bundle over a
// chart with N holomorphic directions.  Antiholomorphic first derivatives
// follow from hermiticity: d_Bbar h_{i jbar} = conj(d_B h_{j ibar}).
struct MetricJet {
  int rank = 0;  // bundle rank r
  int dim = 0;   // holomorphic directions N
  Matrix h;                              // h[i][j]         = h_{i jbar}
  std::vector<Matrix> dh;                // dh[A][i][j]     = d_A h_{i jbar}
  std::vector<std::vector<Matrix>> d2h;  // d2h[A][B][i][j] = d_A d_Bbar h_{i jbar}
};

double min_eigenvalue(const Matrix& h);

// Hermitian and min eigenvalue > 1e-12 * trace / r.
bool positive_definite(const Matrix& h);

// inv[j][i] = h^{jbar i}, via Hermitian factorization; throws SingularMetric
// below the positive-definite threshold.
Matrix hermitian_inverse(const Matrix& h);

// theta[A][i][j]: connection coefficient (d_A h_{i kbar}) h^{kbar j}.
std::vector<Matrix> chern_connection(const Matrix& h,
                                     const std::vector<Matrix>& dh);

// R[i][j][A][B] = R_{i jbar A Bbar}
//   = -d_A d_Bbar h_{i jbar} + h^{lbar k} d_A h_{i lbar} d_Bbar h_{k jbar}
Tensor4 chern_curvature(const MetricJet& mj);

// R_{xi xibar xi xibar} / ||xi||^4 for tangent-bundle data (rank == dim).
double hsc(const Tensor4& R, const Matrix& h, std::span<const Cplx> xi);

// R_{xi xibar eta etabar} / (||xi||^2 ||eta||^2).
double hbc(const Tensor4& R, const Matrix& h, std::span<const Cplx> xi,
           std::span<const Cplx> eta);

enum class Verdict { NEGATIVE, INDEFINITE };

struct GriffithsReport {
  double sup = 0.0;
  Verdict verdict = Verdict::INDEFINITE;
  int samples = 0;
};

// Sign scan of R_{v vbar xi xibar} / (||v||^2_bundle ||xi||^2_base) over the
// supplied (bundle direction, base direction) pairs.  Verdict NEGATIVE iff
// every sample is below -tol; empirical, not a proof.
GriffithsReport griffiths_sample_test(
    const Tensor4& R, const Matrix& h_bundle, const Matrix& h_base,
    std::span<const std::pair<std::vector<Cplx>, std::vector<Cplx>>> samples,
    double tol = 1e-9);

}  // namespace kurv::hermitian
