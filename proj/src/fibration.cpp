#include "kurv/fibration.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstring>
#include <initializer_list>

namespace kurv::fibration {

namespace {

using SMatrix = std::vector<std::vector<wirt::Series>>;

Cplx dmulti(const wirt::Series& s, int nvars, std::initializer_list<int> vars) {
  std::uint8_t e[wirt::Layout::kMaxVars] = {0};
  for (int v : vars) ++e[v];
  return s.deriv(e, nvars);
}

Matrix vertical_hessian(const FibrationJet& fj) {
  const VarMap vm = fj.map();
  Matrix h(fj.n, std::vector<Cplx>(fj.n));
  for (int i = 0; i < fj.n; ++i)
    for (int j = 0; j < fj.n; ++j)
      h[i][j] = dmulti(fj.phi, vm.nvars(), {vm.fiber(i), vm.fiber_bar(j)});
  return h;
}

Matrix base_hessian(const FibrationJet& fj) {
  const VarMap vm = fj.map();
  Matrix h(fj.m, std::vector<Cplx>(fj.m));
  for (int a = 0; a < fj.m; ++a)
    for (int b = 0; b < fj.m; ++b)
      h[a][b] = dmulti(fj.psi, vm.nvars(), {vm.base(a), vm.base_bar(b)});
  return h;
}

SMatrix mat_mul(const SMatrix& A, const SMatrix& B) {
  const int r = static_cast<int>(A.size());
  const int k = static_cast<int>(B.size());
  const int c = static_cast<int>(B[0].size());
  SMatrix out(r, std::vector<wirt::Series>(c));
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) {
      wirt::Series acc = A[i][0] * B[0][j];
      for (int t = 1; t < k; ++t) acc += A[i][t] * B[t][j];
      out[i][j] = acc;
    }
  return out;
}

// Inverse of a series matrix whose constant part is invertible, by the
// Neumann expansion (A0 + E)^{-1} = sum_t (-A0^{-1} E)^t A0^{-1}; E has no
// constant term, so t runs only to the valid degree.
SMatrix series_inverse(const SMatrix& A) {
  const int r = static_cast<int>(A.size());
  const wirt::Layout& lay = A[0][0].layout();
  int d = wirt::Layout::kMaxDegree;
  for (const auto& row : A)
    for (const auto& s : row) d = std::min(d, s.valid());

  Eigen::MatrixXcd A0(r, r);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) A0(i, j) = A[i][j].value();
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(A0);
  if (!lu.isInvertible())
    throw SingularMetric("fibration: vertical Hessian is singular");
  const Eigen::MatrixXcd M0 = lu.inverse();

  SMatrix B(r, std::vector<wirt::Series>(r));
  SMatrix negBE(r, std::vector<wirt::Series>(r));
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) B[i][j] = wirt::Series(lay, M0(i, j), d);
  {
    SMatrix E(r, std::vector<wirt::Series>(r));
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j)
        E[i][j] = A[i][j] - wirt::Series(lay, A[i][j].value(), d);
    negBE = mat_mul(B, E);
    for (auto& row : negBE)
      for (auto& s : row) s *= -1.0;
  }

  SMatrix X = B, T = B;
  for (int t = 1; t <= d; ++t) {
    T = mat_mul(negBE, T);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j) X[i][j] += T[i][j];
  }
  return X;
}

// phi_{i jbar} as series, valid to order 2.
SMatrix vertical_series(const FibrationJet& fj) {
  const VarMap vm = fj.map();
  SMatrix P(fj.n, std::vector<wirt::Series>(fj.n));
  for (int i = 0; i < fj.n; ++i)
    for (int j = 0; j < fj.n; ++j)
      P[i][j] = fj.phi.derivative(vm.fiber(i)).derivative(vm.fiber_bar(j));
  return P;
}

// L^i_a = phi_{a jbar} phi^{jbar i} as series, valid to order 2.
SMatrix lift_series(const FibrationJet& fj, const SMatrix& vinv) {
  const VarMap vm = fj.map();
  SMatrix L(fj.m, std::vector<wirt::Series>(fj.n));
  for (int a = 0; a < fj.m; ++a) {
    std::vector<wirt::Series> mix(fj.n);
    for (int j = 0; j < fj.n; ++j)
      mix[j] = fj.phi.derivative(vm.base(a)).derivative(vm.fiber_bar(j));
    for (int i = 0; i < fj.n; ++i) {
      wirt::Series acc = mix[0] * vinv[0][i];
      for (int j = 1; j < fj.n; ++j) acc += mix[j] * vinv[j][i];
      L[a][i] = acc;
    }
  }
  return L;
}

// Omega_{a bbar} = k psi_{a bbar} + phi_{a bbar} - sum_i L^i_a phi_{i bbar},
// valid to order 2.
SMatrix omega_series(const FibrationJet& fj, double k, const SMatrix& L) {
  const VarMap vm = fj.map();
  SMatrix om(fj.m, std::vector<wirt::Series>(fj.m));
  for (int a = 0; a < fj.m; ++a)
    for (int b = 0; b < fj.m; ++b) {
      wirt::Series s =
          fj.phi.derivative(vm.base(a)).derivative(vm.base_bar(b)) +
          k * fj.psi.derivative(vm.base(a)).derivative(vm.base_bar(b));
      for (int i = 0; i < fj.n; ++i)
        s -= L[a][i] *
             fj.phi.derivative(vm.fiber(i)).derivative(vm.base_bar(b));
      om[a][b] = s;
    }
  return om;
}

// Center values of d_A s, d_Abar s and d_A d_Bbar s over the m+n coordinate
// directions (holomorphic variable of coordinate c is 2c, its bar is 2c+1).
struct Tab {
  Cplx value;
  std::vector<Cplx> d1, d1b;
  std::vector<std::vector<Cplx>> d2;
};

Tab tabulate(const wirt::Series& s, int nc) {
  Tab t;
  t.value = s.value();
  t.d1.resize(nc);
  t.d1b.resize(nc);
  t.d2.assign(nc, std::vector<Cplx>(nc));
  const int nv = 2 * nc;
  for (int A = 0; A < nc; ++A) {
    std::uint8_t e[wirt::Layout::kMaxVars] = {0};
    e[2 * A] = 1;
    t.d1[A] = s.deriv(e, nv);
    e[2 * A] = 0;
    e[2 * A + 1] = 1;
    t.d1b[A] = s.deriv(e, nv);
  }
  for (int A = 0; A < nc; ++A)
    for (int B = 0; B < nc; ++B) {
      std::uint8_t e[wirt::Layout::kMaxVars] = {0};
      ++e[2 * A];
      ++e[2 * B + 1];
      t.d2[A][B] = s.deriv(e, nv);
    }
  return t;
}

Block4 tensor4(int d0, int d1, int d2, int d3) {
  return Block4(d0, std::vector<std::vector<std::vector<Cplx>>>(
                        d1, std::vector<std::vector<Cplx>>(
                                d2, std::vector<Cplx>(d3))));
}

std::uint64_t point_key(std::uint64_t seed, const ChartPoint& p) {
  auto mix = [&seed](double x) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, sizeof bits);
    seed ^= bits + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2);
  };
  for (const Cplx& z : p.z) {
    mix(z.real());
    mix(z.imag());
  }
  for (const Cplx& v : p.v) {
    mix(v.real());
    mix(v.imag());
  }
  return seed;
}

}  // namespace

FibrationJet make_jet(const models::ModelSpec& model, const ChartPoint& p) {
  model.require_inside(p);
  if (model.synthetic) {
    FibrationJet fj =
        models::random_fibration_jet(model.m, model.n, point_key(model.seed, p));
    fj.at = p;
    return fj;
  }
  if (!model.phi_jet || !model.psi_jet)
    throw BadArgument("fibration: model carries no weight formulas");
  const VarMap vm{model.m, model.n};
  const auto zv = p.coords();
  const auto co = jets::jet_coords(vm, zv);
  FibrationJet fj;
  fj.m = model.m;
  fj.n = model.n;
  fj.at = p;
  fj.phi = model.phi_jet(co);
  fj.psi = model.psi_jet(co);
  if (!hermitian::positive_definite(vertical_hessian(fj)))
    throw SingularMetric("fibration: vertical Hessian not positive definite");
  if (!hermitian::positive_definite(base_hessian(fj)))
    throw SingularMetric("fibration: base Hessian not positive definite");
  return fj;
}

AdaptedFrame horizontal_lift(const FibrationJet& fj) {
  AdaptedFrame frame;
  frame.m = fj.m;
  frame.n = fj.n;
  frame.L = lift_series(fj, series_inverse(vertical_series(fj)));
  return frame;
}

Matrix geodesic_curvature(const FibrationJet& fj) {
  const VarMap vm = fj.map();
  const int N = vm.nvars();
  const Matrix inv = hermitian::hermitian_inverse(vertical_hessian(fj));
  Matrix c(fj.m, std::vector<Cplx>(fj.m));
  for (int a = 0; a < fj.m; ++a)
    for (int b = 0; b < fj.m; ++b) {
      Cplx acc = dmulti(fj.phi, N, {vm.base(a), vm.base_bar(b)});
      for (int j = 0; j < fj.n; ++j)
        for (int i = 0; i < fj.n; ++i)
          acc -= dmulti(fj.phi, N, {vm.base(a), vm.fiber_bar(j)}) * inv[j][i] *
                 dmulti(fj.phi, N, {vm.fiber(i), vm.base_bar(b)});
      c[a][b] = acc;
    }
  return c;
}

std::vector<std::vector<std::vector<Cplx>>> kodaira_spencer(
    const FibrationJet& fj) {
  const VarMap vm = fj.map();
  const AdaptedFrame frame = horizontal_lift(fj);
  std::vector<std::vector<std::vector<Cplx>>> mu(
      fj.m, std::vector<std::vector<Cplx>>(fj.n, std::vector<Cplx>(fj.n)));
  for (int a = 0; a < fj.m; ++a)
    for (int k = 0; k < fj.n; ++k)
      for (int l = 0; l < fj.n; ++l)
        mu[a][k][l] = -frame.L[a][k].derivative(vm.fiber_bar(l)).value();
  return mu;
}

OmegaMetric omega_metric(const FibrationJet& fj, double k) {
  if (k < 0.0) throw BadArgument("fibration: k must be nonnegative");
  OmegaMetric om;
  om.k = k;
  om.vertical = vertical_hessian(fj);
  const Matrix psi = base_hessian(fj);
  const Matrix c = geodesic_curvature(fj);
  om.horizontal.assign(fj.m, std::vector<Cplx>(fj.m));
  for (int a = 0; a < fj.m; ++a)
    for (int b = 0; b < fj.m; ++b)
      om.horizontal[a][b] = k * psi[a][b] + c[a][b];
  om.min_horizontal_eig = hermitian::min_eigenvalue(om.horizontal);
  om.min_vertical_eig = hermitian::min_eigenvalue(om.vertical);
  om.horizontal_positive = hermitian::positive_definite(om.horizontal);
  om.vertical_positive = hermitian::positive_definite(om.vertical);
  return om;
}

AdaptedFrameCurvature adapted_curvature_blocks(const FibrationJet& fj,
                                               double k) {
  if (k < 0.0) throw BadArgument("fibration: k must be nonnegative");
  const int m = fj.m, n = fj.n, nc = m + n;

  const SMatrix Phi = vertical_series(fj);
  const SMatrix Vinv = series_inverse(Phi);
  const SMatrix L = lift_series(fj, Vinv);
  SMatrix Lb(m, std::vector<wirt::Series>(n));
  for (int a = 0; a < m; ++a)
    for (int i = 0; i < n; ++i) Lb[a][i] = L[a][i].conjugate();
  const SMatrix Om = omega_series(fj, k, L);

  Matrix phiV(n, std::vector<Cplx>(n)), vinvV(n, std::vector<Cplx>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      phiV[i][j] = Phi[i][j].value();
      vinvV[i][j] = Vinv[i][j].value();
    }
  Matrix omV(m, std::vector<Cplx>(m));
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) omV[a][b] = Om[a][b].value();
  const Matrix omInv = hermitian::hermitian_inverse(omV);

  std::vector<std::vector<Tab>> TOm(m, std::vector<Tab>(m));
  std::vector<std::vector<Tab>> TPhi(n, std::vector<Tab>(n));
  std::vector<std::vector<Tab>> TL(m, std::vector<Tab>(n));
  std::vector<std::vector<Tab>> TLb(m, std::vector<Tab>(n));
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) TOm[a][b] = tabulate(Om[a][b], nc);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) TPhi[i][j] = tabulate(Phi[i][j], nc);
  for (int a = 0; a < m; ++a)
    for (int i = 0; i < n; ++i) {
      TL[a][i] = tabulate(L[a][i], nc);
      TLb[a][i] = tabulate(Lb[a][i], nc);
    }

  // <R delta_a, delta_b> over raw direction pairs (A, Bbar):
  //   dbar d Omega_{a bbar} + d Omega_{a sbar} ^ dbar Omega_{g bbar} Om^{sbar g}
  //   + dbar L^i_a ^ d Lbar^l_b phi_{i lbar}
  Block4 F1 = tensor4(m, m, nc, nc);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int A = 0; A < nc; ++A)
        for (int B = 0; B < nc; ++B) {
          Cplx acc = -TOm[a][b].d2[A][B];
          for (int s = 0; s < m; ++s)
            for (int g = 0; g < m; ++g)
              acc += omInv[s][g] * TOm[a][s].d1[A] * TOm[g][b].d1b[B];
          for (int i = 0; i < n; ++i)
            for (int l = 0; l < n; ++l)
              acc -= TLb[b][l].d1[A] * TL[a][i].d1b[B] * phiV[i][l];
          F1[a][b][A][B] = acc;
        }

  // <R dv_i, dv_j>:
  //   dbar d phi_{i jbar} + d phi_{i lbar} ^ dbar phi_{k jbar} phi^{lbar k}
  //   + d Lbar^q_be phi_{i qbar} Om^{bebar al} ^ dbar L^k_al phi_{k jbar}
  Block4 F2 = tensor4(n, n, nc, nc);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int A = 0; A < nc; ++A)
        for (int B = 0; B < nc; ++B) {
          Cplx acc = -TPhi[i][j].d2[A][B];
          for (int l = 0; l < n; ++l)
            for (int t = 0; t < n; ++t)
              acc += vinvV[l][t] * TPhi[i][l].d1[A] * TPhi[t][j].d1b[B];
          for (int be = 0; be < m; ++be)
            for (int al = 0; al < m; ++al)
              for (int q = 0; q < n; ++q)
                for (int t = 0; t < n; ++t)
                  acc += omInv[be][al] * phiV[i][q] * phiV[t][j] *
                         TLb[be][q].d1[A] * TL[al][t].d1b[B];
          F2[i][j][A][B] = acc;
        }

  // <R delta_g, dv_l>:
  //   [ -d dbar L^i_g + dbar L^t_g ^ d phi_{t jbar} phi^{jbar i}
  //     + d Omega_{g bbar} Om^{bbar s} ^ dbar L^i_s ] phi_{i lbar}
  Block4 F3 = tensor4(m, n, nc, nc);
  for (int g = 0; g < m; ++g)
    for (int l = 0; l < n; ++l)
      for (int A = 0; A < nc; ++A)
        for (int B = 0; B < nc; ++B) {
          Cplx acc = 0.0;
          for (int i = 0; i < n; ++i) {
            Cplx term = -TL[g][i].d2[A][B];
            for (int t = 0; t < n; ++t)
              for (int j = 0; j < n; ++j)
                term -= TPhi[t][j].d1[A] * TL[g][t].d1b[B] * vinvV[j][i];
            for (int b = 0; b < m; ++b)
              for (int s = 0; s < m; ++s)
                term += TOm[g][b].d1[A] * omInv[b][s] * TL[s][i].d1b[B];
            acc += term * phiV[i][l];
          }
          F3[g][l][A][B] = acc;
        }

  // Frame vectors in raw coordinates: delta_g = d_g - L^i_g d_{v_i}.
  Matrix X(m, std::vector<Cplx>(nc, Cplx(0.0)));
  for (int g = 0; g < m; ++g) {
    X[g][g] = 1.0;
    for (int i = 0; i < n; ++i) X[g][m + i] = -TL[g][i].value;
  }

  AdaptedFrameCurvature out;
  out.m = m;
  out.n = n;
  out.k = k;
  out.hh_hh = tensor4(m, m, m, m);
  out.vv_hh = tensor4(n, n, m, m);
  out.vv_vv = tensor4(n, n, n, n);
  out.vv_vh = tensor4(n, n, n, m);
  out.vv_hv = tensor4(n, n, m, n);
  out.hv_hv = tensor4(m, n, m, n);
  out.hh_vh = tensor4(m, m, n, m);

  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      for (int g = 0; g < m; ++g)
        for (int s = 0; s < m; ++s) {
          Cplx acc = 0.0;
          for (int A = 0; A < nc; ++A)
            for (int B = 0; B < nc; ++B)
              acc += X[g][A] * std::conj(X[s][B]) * F1[a][b][A][B];
          out.hh_hh[a][b][g][s] = acc;
        }
      for (int i = 0; i < n; ++i)
        for (int s = 0; s < m; ++s) {
          Cplx acc = 0.0;
          for (int B = 0; B < nc; ++B)
            acc += std::conj(X[s][B]) * F1[a][b][m + i][B];
          out.hh_vh[a][b][i][s] = acc;
        }
    }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      for (int g = 0; g < m; ++g)
        for (int s = 0; s < m; ++s) {
          Cplx acc = 0.0;
          for (int A = 0; A < nc; ++A)
            for (int B = 0; B < nc; ++B)
              acc += X[g][A] * std::conj(X[s][B]) * F2[i][j][A][B];
          out.vv_hh[i][j][g][s] = acc;
        }
      for (int t = 0; t < n; ++t)
        for (int l = 0; l < n; ++l)
          out.vv_vv[i][j][t][l] = F2[i][j][m + t][m + l];
      for (int t = 0; t < n; ++t)
        for (int b = 0; b < m; ++b) {
          Cplx acc = 0.0;
          for (int B = 0; B < nc; ++B)
            acc += std::conj(X[b][B]) * F2[i][j][m + t][B];
          out.vv_vh[i][j][t][b] = acc;
        }
      for (int a = 0; a < m; ++a)
        for (int l = 0; l < n; ++l) {
          Cplx acc = 0.0;
          for (int A = 0; A < nc; ++A)
            acc += X[a][A] * F2[i][j][A][m + l];
          out.vv_hv[i][j][a][l] = acc;
        }
    }
  for (int g = 0; g < m; ++g)
    for (int j = 0; j < n; ++j)
      for (int a = 0; a < m; ++a)
        for (int l = 0; l < n; ++l) {
          Cplx acc = 0.0;
          for (int A = 0; A < nc; ++A)
            acc += X[a][A] * F3[g][j][A][m + l];
          out.hv_hv[g][j][a][l] = acc;
        }
  return out;
}

RawCurvature raw_curvature(const FibrationJet& fj, double k) {
  if (k < 0.0) throw BadArgument("fibration: k must be nonnegative");
  const VarMap vm = fj.map();
  const int m = fj.m, n = fj.n, nc = m + n, N = vm.nvars();
  auto w = [&](std::initializer_list<int> vars) {
    return dmulti(fj.phi, N, vars) + k * dmulti(fj.psi, N, vars);
  };
  auto hv = [](int c) { return 2 * c; };
  auto bv = [](int c) { return 2 * c + 1; };

  hermitian::MetricJet mj;
  mj.rank = nc;
  mj.dim = nc;
  mj.h.assign(nc, std::vector<Cplx>(nc));
  mj.dh.assign(nc, Matrix(nc, std::vector<Cplx>(nc)));
  mj.d2h.assign(nc, std::vector<Matrix>(nc, Matrix(nc, std::vector<Cplx>(nc))));
  for (int P = 0; P < nc; ++P)
    for (int Q = 0; Q < nc; ++Q) {
      mj.h[P][Q] = w({hv(P), bv(Q)});
      for (int A = 0; A < nc; ++A) {
        mj.dh[A][P][Q] = w({hv(A), hv(P), bv(Q)});
        for (int B = 0; B < nc; ++B)
          mj.d2h[A][B][P][Q] = w({hv(A), bv(B), hv(P), bv(Q)});
      }
    }

  RawCurvature rc;
  rc.m = m;
  rc.n = n;
  rc.k = k;
  rc.metric = mj.h;
  rc.tensor = hermitian::chern_curvature(mj);
  const Matrix vinv = hermitian::hermitian_inverse(vertical_hessian(fj));
  rc.lift.assign(m, std::vector<Cplx>(n, Cplx(0.0)));
  for (int a = 0; a < m; ++a)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        rc.lift[a][i] +=
            dmulti(fj.phi, N, {vm.base(a), vm.fiber_bar(j)}) * vinv[j][i];
  return rc;
}

AdaptedFrameCurvature generic_frame_oracle(const FibrationJet& fj, double k) {
  const RawCurvature rc = raw_curvature(fj, k);
  const int m = fj.m, n = fj.n, nc = m + n;
  const Block4& R = rc.tensor;

  Matrix X(m, std::vector<Cplx>(nc, Cplx(0.0)));
  for (int g = 0; g < m; ++g) {
    X[g][g] = 1.0;
    for (int i = 0; i < n; ++i) X[g][m + i] = -rc.lift[g][i];
  }

  AdaptedFrameCurvature out;
  out.m = m;
  out.n = n;
  out.k = k;
  out.hh_hh = tensor4(m, m, m, m);
  out.vv_hh = tensor4(n, n, m, m);
  out.vv_vv = tensor4(n, n, n, n);
  out.vv_vh = tensor4(n, n, n, m);
  out.vv_hv = tensor4(n, n, m, n);
  out.hv_hv = tensor4(m, n, m, n);
  out.hh_vh = tensor4(m, m, n, m);

  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      for (int g = 0; g < m; ++g)
        for (int s = 0; s < m; ++s) {
          Cplx acc = 0.0;
          for (int P = 0; P < nc; ++P)
            for (int Q = 0; Q < nc; ++Q)
              for (int A = 0; A < nc; ++A)
                for (int B = 0; B < nc; ++B)
                  acc += R[P][Q][A][B] * X[a][P] * std::conj(X[b][Q]) *
                         X[g][A] * std::conj(X[s][B]);
          out.hh_hh[a][b][g][s] = acc;
        }
      for (int i = 0; i < n; ++i)
        for (int s = 0; s < m; ++s) {
          Cplx acc = 0.0;
          for (int P = 0; P < nc; ++P)
            for (int Q = 0; Q < nc; ++Q)
              for (int B = 0; B < nc; ++B)
                acc += R[P][Q][m + i][B] * X[a][P] * std::conj(X[b][Q]) *
                       std::conj(X[s][B]);
          out.hh_vh[a][b][i][s] = acc;
        }
    }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      for (int g = 0; g < m; ++g)
        for (int s = 0; s < m; ++s) {
          Cplx acc = 0.0;
          for (int A = 0; A < nc; ++A)
            for (int B = 0; B < nc; ++B)
              acc += R[m + i][m + j][A][B] * X[g][A] * std::conj(X[s][B]);
          out.vv_hh[i][j][g][s] = acc;
        }
      for (int t = 0; t < n; ++t) {
        for (int l = 0; l < n; ++l)
          out.vv_vv[i][j][t][l] = R[m + i][m + j][m + t][m + l];
        for (int b = 0; b < m; ++b) {
          Cplx acc = 0.0;
          for (int B = 0; B < nc; ++B)
            acc += R[m + i][m + j][m + t][B] * std::conj(X[b][B]);
          out.vv_vh[i][j][t][b] = acc;
        }
      }
      for (int a = 0; a < m; ++a)
        for (int l = 0; l < n; ++l) {
          Cplx acc = 0.0;
          for (int A = 0; A < nc; ++A)
            acc += R[m + i][m + j][A][m + l] * X[a][A];
          out.vv_hv[i][j][a][l] = acc;
        }
    }
  for (int g = 0; g < m; ++g)
    for (int j = 0; j < n; ++j)
      for (int a = 0; a < m; ++a)
        for (int l = 0; l < n; ++l) {
          Cplx acc = 0.0;
          for (int P = 0; P < nc; ++P)
            for (int A = 0; A < nc; ++A)
              acc += R[P][m + j][A][m + l] * X[g][P] * X[a][A];
          out.hv_hv[g][j][a][l] = acc;
        }
  return out;
}

namespace {

void gap_scan(const Block4& x, const Block4& y, double& num, double& den) {
  for (size_t i = 0; i < x.size(); ++i)
    for (size_t j = 0; j < x[i].size(); ++j)
      for (size_t t = 0; t < x[i][j].size(); ++t)
        for (size_t l = 0; l < x[i][j][t].size(); ++l) {
          num = std::max(num, std::abs(x[i][j][t][l] - y[i][j][t][l]));
          den = std::max(den, std::abs(x[i][j][t][l]));
        }
}

}  // namespace

double curvature_gap(const AdaptedFrameCurvature& a,
                     const AdaptedFrameCurvature& b) {
  if (a.m != b.m || a.n != b.n)
    throw BadArgument("fibration: curvature block dimensions differ");
  double num = 0.0, den = 0.0;
  gap_scan(a.hh_hh, b.hh_hh, num, den);
  gap_scan(a.vv_hh, b.vv_hh, num, den);
  gap_scan(a.vv_vv, b.vv_vv, num, den);
  gap_scan(a.vv_vh, b.vv_vh, num, den);
  gap_scan(a.vv_hv, b.vv_hv, num, den);
  gap_scan(a.hv_hv, b.hv_hv, num, den);
  gap_scan(a.hh_vh, b.hh_vh, num, den);
  return num / std::max(1e-12, den);
}

Block4 vertical_bundle_curvature(const FibrationJet& fj) {
  const VarMap vm = fj.map();
  const int N = vm.nvars(), n = fj.n, nc = fj.m + fj.n;
  auto hv = [](int c) { return 2 * c; };
  auto bv = [](int c) { return 2 * c + 1; };
  hermitian::MetricJet mj;
  mj.rank = n;
  mj.dim = nc;
  mj.h.assign(n, std::vector<Cplx>(n));
  mj.dh.assign(nc, Matrix(n, std::vector<Cplx>(n)));
  mj.d2h.assign(nc, std::vector<Matrix>(nc, Matrix(n, std::vector<Cplx>(n))));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      mj.h[i][j] = dmulti(fj.phi, N, {vm.fiber(i), vm.fiber_bar(j)});
      for (int A = 0; A < nc; ++A) {
        mj.dh[A][i][j] =
            dmulti(fj.phi, N, {hv(A), vm.fiber(i), vm.fiber_bar(j)});
        for (int B = 0; B < nc; ++B)
          mj.d2h[A][B][i][j] = dmulti(
              fj.phi, N, {hv(A), bv(B), vm.fiber(i), vm.fiber_bar(j)});
      }
    }
  return hermitian::chern_curvature(mj);
}

Block4 base_curvature(const FibrationJet& fj) {
  return hermitian::chern_curvature(base_metric_jet(fj));
}

hermitian::MetricJet fiber_metric_jet(const FibrationJet& fj) {
  const VarMap vm = fj.map();
  const int N = vm.nvars(), n = fj.n;
  hermitian::MetricJet mj;
  mj.rank = n;
  mj.dim = n;
  mj.h.assign(n, std::vector<Cplx>(n));
  mj.dh.assign(n, Matrix(n, std::vector<Cplx>(n)));
  mj.d2h.assign(n, std::vector<Matrix>(n, Matrix(n, std::vector<Cplx>(n))));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      mj.h[i][j] = dmulti(fj.phi, N, {vm.fiber(i), vm.fiber_bar(j)});
      for (int A = 0; A < n; ++A) {
        mj.dh[A][i][j] =
            dmulti(fj.phi, N, {vm.fiber(A), vm.fiber(i), vm.fiber_bar(j)});
        for (int B = 0; B < n; ++B)
          mj.d2h[A][B][i][j] = dmulti(fj.phi, N,
                                      {vm.fiber(A), vm.fiber_bar(B),
                                       vm.fiber(i), vm.fiber_bar(j)});
      }
    }
  return mj;
}

hermitian::MetricJet base_metric_jet(const FibrationJet& fj) {
  const VarMap vm = fj.map();
  const int N = vm.nvars(), m = fj.m;
  hermitian::MetricJet mj;
  mj.rank = m;
  mj.dim = m;
  mj.h.assign(m, std::vector<Cplx>(m));
  mj.dh.assign(m, Matrix(m, std::vector<Cplx>(m)));
  mj.d2h.assign(m, std::vector<Matrix>(m, Matrix(m, std::vector<Cplx>(m))));
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      mj.h[a][b] = dmulti(fj.psi, N, {vm.base(a), vm.base_bar(b)});
      for (int A = 0; A < m; ++A) {
        mj.dh[A][a][b] =
            dmulti(fj.psi, N, {vm.base(A), vm.base(a), vm.base_bar(b)});
        for (int B = 0; B < m; ++B)
          mj.d2h[A][B][a][b] = dmulti(fj.psi, N,
                                      {vm.base(A), vm.base_bar(B), vm.base(a),
                                       vm.base_bar(b)});
      }
    }
  return mj;
}

double horizontal_norm2(const FibrationJet& fj, std::span<const Cplx> a) {
  if (static_cast<int>(a.size()) != fj.m)
    throw BadArgument("fibration: horizontal coefficient length mismatch");
  const Matrix psi = base_hessian(fj);
  Cplx acc = 0.0;
  for (int al = 0; al < fj.m; ++al)
    for (int be = 0; be < fj.m; ++be)
      acc += a[al] * std::conj(a[be]) * psi[al][be];
  return acc.real();
}

double vertical_norm2(const FibrationJet& fj, std::span<const Cplx> b) {
  if (static_cast<int>(b.size()) != fj.n)
    throw BadArgument("fibration: vertical coefficient length mismatch");
  const Matrix phiv = vertical_hessian(fj);
  Cplx acc = 0.0;
  for (int i = 0; i < fj.n; ++i)
    for (int j = 0; j < fj.n; ++j) acc += b[i] * std::conj(b[j]) * phiv[i][j];
  return acc.real();
}

DecompositionReport decomposition_check(const FibrationJet& fj) {
  const VarMap vm = fj.map();
  const int N = vm.nvars();
  const AdaptedFrame frame = horizontal_lift(fj);
  const Matrix c = geodesic_curvature(fj);
  const Matrix phiv = vertical_hessian(fj);

  Matrix L(fj.m, std::vector<Cplx>(fj.n));
  for (int a = 0; a < fj.m; ++a)
    for (int i = 0; i < fj.n; ++i) L[a][i] = frame.L[a][i].value();

  DecompositionReport rep;
  for (int a = 0; a < fj.m; ++a) {
    for (int b = 0; b < fj.m; ++b) {
      Cplx w = dmulti(fj.phi, N, {vm.base(a), vm.base_bar(b)});
      for (int j = 0; j < fj.n; ++j)
        w -= std::conj(L[b][j]) *
             dmulti(fj.phi, N, {vm.base(a), vm.fiber_bar(j)});
      for (int i = 0; i < fj.n; ++i)
        w -= L[a][i] * dmulti(fj.phi, N, {vm.fiber(i), vm.base_bar(b)});
      for (int i = 0; i < fj.n; ++i)
        for (int j = 0; j < fj.n; ++j)
          w += L[a][i] * std::conj(L[b][j]) * phiv[i][j];
      rep.horizontal_residual =
          std::max(rep.horizontal_residual, std::abs(w - c[a][b]));
    }
    for (int j = 0; j < fj.n; ++j) {
      Cplx x = dmulti(fj.phi, N, {vm.base(a), vm.fiber_bar(j)});
      for (int i = 0; i < fj.n; ++i) x -= L[a][i] * phiv[i][j];
      rep.mixed_residual = std::max(rep.mixed_residual, std::abs(x));
    }
  }
  return rep;
}

}  // namespace kurv::fibration
