#include "kurv/ke.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <utility>

#include "kurv/rng.hpp"

namespace kurv::ke {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// sum rv[i][j][A][B] V[i] conj(V[j]) X[A] conj(X[B])
double contract_vertical(const fibration::Block4& rv,
                         const std::vector<Cplx>& V,
                         const std::vector<Cplx>& X) {
  Cplx s = 0.0;
  const int n = static_cast<int>(rv.size());
  const int nc = static_cast<int>(rv[0][0].size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Cplx vij = V[i] * std::conj(V[j]);
      if (vij == Cplx(0.0)) continue;
      for (int A = 0; A < nc; ++A)
        for (int B = 0; B < nc; ++B)
          s += vij * X[A] * std::conj(X[B]) * rv[i][j][A][B];
    }
  return s.real();
}

double quad_norm2(const hermitian::Matrix& H, const std::vector<Cplx>& x) {
  Cplx s = 0.0;
  const int r = static_cast<int>(H.size());
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) s += x[i] * std::conj(x[j]) * H[i][j];
  return s.real();
}

}  // namespace

double liouville_exact(double x, double y) {
  return std::log(2.0) - 2.0 * std::log(1.0 - (x * x + y * y));
}

bool LiouvilleSolution::inside(int ix, int iy) const {
  if (ix < 0 || iy < 0 || ix >= N || iy >= N) return false;
  const double x = x_of(ix), y = y_of(iy);
  return x * x + y * y < radius * radius - 1e-14;
}

double LiouvilleSolution::max_error() const {
  double worst = 0.0;
  for (int iy = 0; iy < N; ++iy)
    for (int ix = 0; ix < N; ++ix)
      if (inside(ix, iy))
        worst = std::max(
            worst, std::abs(u[iy * N + ix] - liouville_exact(x_of(ix), y_of(iy))));
  return worst;
}

LiouvilleSolution solve_liouville(double radius, int N, double tol) {
  if (!(radius > 0.0) || radius >= 1.0)
    throw BadArgument("ke: radius must lie in (0, 1)");
  if (N < 17) throw BadArgument("ke: need N >= 17");
  if (!(tol > 0.0)) throw BadArgument("ke: tol must be positive");

  LiouvilleSolution sol;
  sol.radius = radius;
  sol.N = N;
  sol.spacing = 2.0 * radius / (N - 1);
  sol.boundary_value = std::log(2.0) - 2.0 * std::log(1.0 - radius * radius);
  sol.u.assign(static_cast<std::size_t>(N) * N, kNaN);

  const double h = sol.spacing;
  const double R2 = radius * radius;

  std::vector<int> id(static_cast<std::size_t>(N) * N, -1);
  std::vector<std::pair<int, int>> nodes;
  for (int iy = 0; iy < N; ++iy)
    for (int ix = 0; ix < N; ++ix)
      if (sol.inside(ix, iy)) {
        id[static_cast<std::size_t>(iy) * N + ix] =
            static_cast<int>(nodes.size());
        nodes.emplace_back(ix, iy);
      }
  const int M = static_cast<int>(nodes.size());

  // Five-point Laplacian with arms shortened to the circle where a neighbor
  // falls outside; the Dirichlet value there moves to the right-hand side.
  // u_xx ~ 2/h^2 [ uE/(tE(tE+tW)) + uW/(tW(tE+tW)) - uP/(tE tW) ].
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(M) * 5);
  Eigen::VectorXd bb = Eigen::VectorXd::Zero(M);
  Eigen::VectorXd dscale(M);  // 1/|diagonal|, for the scaled residual norm
  const double h2 = h * h;
  for (int r = 0; r < M; ++r) {
    const auto [ix, iy] = nodes[r];
    const double x = sol.x_of(ix), y = sol.y_of(iy);

    auto arm = [&](int jx, int jy, double exact_len) {
      // neighbor index, or -1 with the fractional arm length to the circle
      const int idn = sol.inside(jx, jy)
                          ? id[static_cast<std::size_t>(jy) * N + jx]
                          : -1;
      const double th = idn >= 0 ? 1.0 : std::max(exact_len / h, 1e-8);
      return std::pair<int, double>(idn, th);
    };
    const auto [iE, tE] = arm(ix + 1, iy, std::sqrt(std::max(R2 - y * y, 0.0)) - x);
    const auto [iW, tW] = arm(ix - 1, iy, x + std::sqrt(std::max(R2 - y * y, 0.0)));
    const auto [iN, tN] = arm(ix, iy + 1, std::sqrt(std::max(R2 - x * x, 0.0)) - y);
    const auto [iS, tS] = arm(ix, iy - 1, y + std::sqrt(std::max(R2 - x * x, 0.0)));

    const double cE = 2.0 / (h2 * tE * (tE + tW));
    const double cW = 2.0 / (h2 * tW * (tE + tW));
    const double cN = 2.0 / (h2 * tN * (tN + tS));
    const double cS = 2.0 / (h2 * tS * (tN + tS));
    const double cP = -2.0 / h2 * (1.0 / (tE * tW) + 1.0 / (tN * tS));
    dscale[r] = 1.0 / std::abs(cP);
    trips.emplace_back(r, r, cP);
    for (const auto& [idn, c] : {std::pair(iE, cE), std::pair(iW, cW),
                                 std::pair(iN, cN), std::pair(iS, cS)}) {
      if (idn >= 0)
        trips.emplace_back(r, idn, c);
      else
        bb[r] += c * sol.boundary_value;
    }
  }
  Eigen::SparseMatrix<double> A(M, M);
  A.setFromTriplets(trips.begin(), trips.end());

  auto residual_of = [&](const Eigen::VectorXd& uu) {
    Eigen::VectorXd F = A * uu + bb;
    for (int r = 0; r < M; ++r) F[r] -= 4.0 * std::exp(uu[r]);
    return F;
  };
  // Rows carrying shaved arms have O(1/(theta h^2)) coefficients; the raw
  // sup-norm bottoms out at fp noise times that scale, so convergence is
  // judged on the diagonally scaled defect instead.
  auto scaled_norm = [&](const Eigen::VectorXd& F) {
    return F.cwiseProduct(dscale).lpNorm<Eigen::Infinity>();
  };

  Eigen::VectorXd u = Eigen::VectorXd::Constant(M, std::log(2.0));
  Eigen::VectorXd F = residual_of(u);
  sol.residual_history.push_back(scaled_norm(F));

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  int it = 0;
  while (sol.residual_history.back() > tol) {
    if (it >= 50)
      throw NotConverged("ke: Newton stalled above tolerance after 50 steps");
    Eigen::SparseMatrix<double> J = A;
    for (int r = 0; r < M; ++r) J.coeffRef(r, r) -= 4.0 * std::exp(u[r]);
    lu.compute(J);
    if (lu.info() != Eigen::Success)
      throw NotConverged("ke: Jacobian factorization failed");
    const Eigen::VectorXd step = lu.solve(F);

    // plain Newton with a safety backtrack; full steps are the normal path
    double damp = 1.0;
    Eigen::VectorXd trial;
    Eigen::VectorXd Ftrial;
    for (int half = 0; half < 30; ++half) {
      trial = u - damp * step;
      Ftrial = residual_of(trial);
      if (scaled_norm(Ftrial) < sol.residual_history.back()) break;
      damp *= 0.5;
    }
    u = trial;
    F = Ftrial;
    sol.residual_history.push_back(scaled_norm(F));
    ++it;
  }
  sol.iterations = it;
  sol.residual = sol.residual_history.back();
  for (int r = 0; r < M; ++r)
    sol.u[static_cast<std::size_t>(nodes[r].second) * N + nodes[r].first] =
        u[r];
  return sol;
}

void write_csv(const LiouvilleSolution& sol, std::ostream& os) {
  os << "x,y,u,u_exact,error\n";
  os << std::setprecision(15);
  for (int iy = 0; iy < sol.N; ++iy)
    for (int ix = 0; ix < sol.N; ++ix) {
      if (!sol.inside(ix, iy)) continue;
      const double x = sol.x_of(ix), y = sol.y_of(iy);
      const double uu = sol.u[static_cast<std::size_t>(iy) * sol.N + ix];
      const double ex = liouville_exact(x, y);
      os << x << ',' << y << ',' << uu << ',' << ex << ','
         << std::abs(uu - ex) << '\n';
    }
}

DetIdentityReport verify_ke_det_identity(const fibration::FibrationJet& fj,
                                         double tol) {
  const hermitian::Matrix phiV = fibration::fiber_metric_jet(fj).h;
  const int n = fj.n;
  Eigen::MatrixXcd H(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) H(i, j) = phiV[i][j];

  DetIdentityReport rep;
  rep.exp_phi = std::exp(fj.phi.value().real());
  rep.det_vertical = H.determinant().real();
  rep.residual = std::abs(rep.exp_phi - rep.det_vertical);
  rep.relative =
      rep.residual / std::max({std::abs(rep.exp_phi),
                               std::abs(rep.det_vertical), 1e-300});
  rep.ok = rep.residual <= tol;
  return rep;
}

TraceIdentityReport trace_identity_check(const fibration::FibrationJet& fj,
                                         double gate) {
  TraceIdentityReport rep;
  rep.det_residual = verify_ke_det_identity(fj).residual;
  rep.precondition_ok = rep.det_residual <= gate;

  const int m = fj.m, n = fj.n, nc = m + n;
  const hermitian::Matrix c = fibration::geodesic_curvature(fj);
  const fibration::Block4 rv = fibration::vertical_bundle_curvature(fj);
  const fibration::AdaptedFrame af = fibration::horizontal_lift(fj);
  const hermitian::Matrix phiInv =
      hermitian::hermitian_inverse(fibration::fiber_metric_jet(fj).h);

  std::vector<std::vector<Cplx>> X(m, std::vector<Cplx>(nc, Cplx(0.0)));
  for (int g = 0; g < m; ++g) {
    X[g][g] = 1.0;
    for (int i = 0; i < n; ++i) X[g][m + i] = -af.L[g][i].value();
  }

  rep.residual.assign(m, std::vector<Cplx>(m, Cplx(0.0)));
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      Cplx trace = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          Cplx rf = 0.0;
          for (int A = 0; A < nc; ++A)
            for (int B = 0; B < nc; ++B)
              rf += rv[i][j][A][B] * X[a][A] * std::conj(X[b][B]);
          trace += rf * phiInv[j][i];
        }
      rep.residual[a][b] = c[a][b] + trace;
      rep.max_residual = std::max(rep.max_residual,
                                  std::abs(rep.residual[a][b]));
    }
  return rep;
}

CorollaryReport corollary_1d_check(const models::ModelSpec& model,
                                   std::span<const jets::ChartPoint> points,
                                   int samples, std::uint64_t seed,
                                   double tol) {
  if (model.n != 1)
    throw BadArgument("ke: the corollary check needs fiber dimension 1");
  if (points.empty()) throw BadArgument("ke: no points");
  if (samples < 1) throw BadArgument("ke: need samples >= 1");

  CorollaryReport rep;
  rep.samples = samples;
  rep.seed = seed;
  rep.sup = -std::numeric_limits<double>::infinity();

  const int m = model.m, n = model.n;
  for (std::size_t p = 0; p < points.size(); ++p) {
    const fibration::FibrationJet fj = fibration::make_jet(model, points[p]);
    const fibration::Block4 rv = fibration::vertical_bundle_curvature(fj);
    const fibration::AdaptedFrame af = fibration::horizontal_lift(fj);
    hermitian::Matrix L(m, std::vector<Cplx>(n, Cplx(0.0)));
    for (int a = 0; a < m; ++a)
      for (int i = 0; i < n; ++i) L[a][i] = af.L[a][i].value();
    const hermitian::Matrix psi = fibration::base_metric_jet(fj).h;
    const hermitian::Matrix phi = fibration::fiber_metric_jet(fj).h;

    rng::Stream st(rng::derive_stream(seed, p));
    std::vector<Cplx> a(m), b(n), V(n), X(m + n);
    for (int t = 0; t < samples; ++t) {
      for (Cplx& ci : a) ci = st.cnormal();
      for (Cplx& ci : b) ci = st.cnormal();
      for (Cplx& ci : V) ci = st.cnormal();
      if (t % 3 == 1) std::fill(b.begin(), b.end(), Cplx(0.0));
      if (t % 3 == 2) std::fill(a.begin(), a.end(), Cplx(0.0));

      for (int g = 0; g < m; ++g) X[g] = a[g];
      for (int i = 0; i < n; ++i) {
        Cplx vi = b[i];
        for (int g = 0; g < m; ++g) vi -= a[g] * L[g][i];
        X[m + i] = vi;
      }
      const double den = (quad_norm2(psi, a) + quad_norm2(phi, b)) *
                         quad_norm2(phi, V);
      if (den < 1e-14) {
        ++rep.skipped;
        continue;
      }
      rep.sup = std::max(rep.sup, contract_vertical(rv, V, X) / den);
    }
  }
  rep.verdict = rep.sup < -tol ? hermitian::Verdict::NEGATIVE
                               : hermitian::Verdict::INDEFINITE;
  return rep;
}

}  // namespace kurv::ke
