#include "kurv/hermitian.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace kurv::hermitian {

namespace {

Eigen::MatrixXcd to_eigen(const Matrix& h) {
  const int r = static_cast<int>(h.size());
  if (r == 0) throw BadArgument("hermitian: empty matrix");
  Eigen::MatrixXcd H(r, r);
  for (int i = 0; i < r; ++i) {
    if (static_cast<int>(h[i].size()) != r)
      throw BadArgument("hermitian: matrix is not square");
    for (int j = 0; j < r; ++j) H(i, j) = h[i][j];
  }
  return H;
}

// Provably-real quantities: assert the imaginary residue is numerical noise.
double realize(Cplx x) {
  if (std::abs(x.imag()) > std::max(1e-12, 1e-10 * std::abs(x)))
    throw Error("hermitian: value expected real has imaginary residue");
  return x.real();
}

Cplx pairing(const Matrix& h, std::span<const Cplx> a, std::span<const Cplx> b) {
  const int r = static_cast<int>(h.size());
  if (static_cast<int>(a.size()) != r || static_cast<int>(b.size()) != r)
    throw BadArgument("hermitian: direction length does not match the metric");
  Cplx acc = 0.0;
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) acc += a[i] * std::conj(b[j]) * h[i][j];
  return acc;
}

double norm2(const Matrix& h, std::span<const Cplx> a) {
  const double n = realize(pairing(h, a, a));
  if (n <= 0.0) throw BadArgument("hermitian: zero or degenerate direction");
  return n;
}

}  // namespace

double min_eigenvalue(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(to_eigen(h));
  return es.eigenvalues().minCoeff();
}

bool positive_definite(const Matrix& h) {
  const Eigen::MatrixXcd H = to_eigen(h);
  const int r = static_cast<int>(h.size());
  double worst = 0.0, scale = 0.0;
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) {
      worst = std::max(worst, std::abs(H(i, j) - std::conj(H(j, i))));
      scale = std::max(scale, std::abs(H(i, j)));
    }
  if (worst > 1e-10 * std::max(1.0, scale)) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
  return es.eigenvalues().minCoeff() > 1e-12 * std::abs(H.trace()) / r;
}

Matrix hermitian_inverse(const Matrix& h) {
  if (!positive_definite(h))
    throw SingularMetric("hermitian: metric is not positive definite");
  const int r = static_cast<int>(h.size());
  Eigen::LLT<Eigen::MatrixXcd> llt(to_eigen(h));
  if (llt.info() != Eigen::Success)
    throw SingularMetric("hermitian: factorization failed");
  Eigen::MatrixXcd inv = llt.solve(Eigen::MatrixXcd::Identity(r, r));
  Matrix out(r, std::vector<Cplx>(r));
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) out[i][j] = inv(i, j);
  return out;
}

std::vector<Matrix> chern_connection(const Matrix& h,
                                     const std::vector<Matrix>& dh) {
  const int r = static_cast<int>(h.size());
  const Matrix inv = hermitian_inverse(h);
  std::vector<Matrix> theta(dh.size(), Matrix(r, std::vector<Cplx>(r)));
  for (size_t A = 0; A < dh.size(); ++A)
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j) {
        Cplx acc = 0.0;
        for (int k = 0; k < r; ++k) acc += dh[A][i][k] * inv[k][j];
        theta[A][i][j] = acc;
      }
  return theta;
}

Tensor4 chern_curvature(const MetricJet& mj) {
  const int r = mj.rank, d = mj.dim;
  const Matrix inv = hermitian_inverse(mj.h);
  Tensor4 R(r, std::vector<std::vector<std::vector<Cplx>>>(
                   r, std::vector<std::vector<Cplx>>(
                          d, std::vector<Cplx>(d))));
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      for (int A = 0; A < d; ++A)
        for (int B = 0; B < d; ++B) {
          Cplx acc = -mj.d2h[A][B][i][j];
          // d_Bbar h_{k jbar} = conj(d_B h_{j kbar})
          for (int k = 0; k < r; ++k)
            for (int l = 0; l < r; ++l)
              acc += inv[l][k] * mj.dh[A][i][l] * std::conj(mj.dh[B][j][k]);
          R[i][j][A][B] = acc;
        }
  return R;
}

double hsc(const Tensor4& R, const Matrix& h, std::span<const Cplx> xi) {
  const int r = static_cast<int>(h.size());
  if (static_cast<int>(R.size()) != r ||
      static_cast<int>(R[0][0].size()) != r)
    throw BadArgument("hermitian: sectional curvature needs tangent-bundle data");
  const double n2 = norm2(h, xi);
  Cplx acc = 0.0;
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      for (int A = 0; A < r; ++A)
        for (int B = 0; B < r; ++B)
          acc += R[i][j][A][B] * xi[i] * std::conj(xi[j]) * xi[A] *
                 std::conj(xi[B]);
  return realize(acc) / (n2 * n2);
}

double hbc(const Tensor4& R, const Matrix& h, std::span<const Cplx> xi,
           std::span<const Cplx> eta) {
  const int r = static_cast<int>(h.size());
  if (static_cast<int>(R.size()) != r ||
      static_cast<int>(R[0][0].size()) != r)
    throw BadArgument("hermitian: sectional curvature needs tangent-bundle data");
  const double nxi = norm2(h, xi), neta = norm2(h, eta);
  Cplx acc = 0.0;
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      for (int A = 0; A < r; ++A)
        for (int B = 0; B < r; ++B)
          acc += R[i][j][A][B] * xi[i] * std::conj(xi[j]) * eta[A] *
                 std::conj(eta[B]);
  return realize(acc) / (nxi * neta);
}

GriffithsReport griffiths_sample_test(
    const Tensor4& R, const Matrix& h_bundle, const Matrix& h_base,
    std::span<const std::pair<std::vector<Cplx>, std::vector<Cplx>>> samples,
    double tol) {
  if (samples.empty())
    throw BadArgument("hermitian: griffiths test needs at least one sample");
  const int r = static_cast<int>(h_bundle.size());
  const int d = static_cast<int>(h_base.size());
  GriffithsReport rep;
  rep.samples = static_cast<int>(samples.size());
  bool first = true;
  for (const auto& [v, xi] : samples) {
    if (static_cast<int>(v.size()) != r || static_cast<int>(xi.size()) != d)
      throw BadArgument("hermitian: sample direction length mismatch");
    Cplx acc = 0.0;
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j)
        for (int A = 0; A < d; ++A)
          for (int B = 0; B < d; ++B)
            acc += R[i][j][A][B] * v[i] * std::conj(v[j]) * xi[A] *
                   std::conj(xi[B]);
    const double val =
        realize(acc) / (norm2(h_bundle, v) * norm2(h_base, xi));
    if (first || val > rep.sup) rep.sup = val;
    first = false;
  }
  rep.verdict = rep.sup < -tol ? Verdict::NEGATIVE : Verdict::INDEFINITE;
  return rep;
}

}  // namespace kurv::hermitian
