#include "kurv/certifier.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "kurv/hermitian.hpp"
#include "kurv/rng.hpp"

namespace kurv::certifier {

namespace {

constexpr int kChunk = 512;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

int worker_count() {
  static const int n = [] {
    if (const char* env = std::getenv("KURV_THREADS")) {
      const int v = std::atoi(env);
      if (v >= 1) return std::min(v, 256);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 4;
  }();
  return n;
}

// Runs fn(0..tasks-1) on the pool.  Tasks write into preallocated slots and
// reductions happen after the join, in index order, so the worker count can
// never influence results.  The first exception wins and is rethrown.
template <typename Fn>
void parallel_for(int tasks, Fn&& fn) {
  const int workers = std::min(worker_count(), tasks);
  if (workers <= 1) {
    for (int t = 0; t < tasks; ++t) fn(t);
    return;
  }
  std::atomic<int> next{0};
  std::mutex err_mu;
  std::exception_ptr err;
  auto body = [&] {
    for (;;) {
      const int t = next.fetch_add(1);
      if (t >= tasks) return;
      try {
        fn(t);
      } catch (...) {
        const std::scoped_lock lock(err_mu);
        if (!err) err = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

void gaussian_fill(rng::Stream& st, std::vector<Cplx>& out) {
  for (auto& c : out) c = st.cnormal();
}

double coeff_norm2(const DirectionPair& d) {
  double s = 0.0;
  for (const Cplx& c : d.a) s += std::norm(c);
  for (const Cplx& c : d.b) s += std::norm(c);
  return s;
}

void normalize(DirectionPair& d) {
  const double s = std::sqrt(coeff_norm2(d));
  for (Cplx& c : d.a) c /= s;
  for (Cplx& c : d.b) c /= s;
}

void zero(std::vector<Cplx>& v) { std::fill(v.begin(), v.end(), Cplx(0.0)); }

// Raw chart components of a delta-lifted direction: base part a, fiber part
// b - a.L.
std::vector<Cplx> lift_components(const DirectionPair& d,
                                  const hermitian::Matrix& L, int m, int n) {
  std::vector<Cplx> X(m + n, Cplx(0.0));
  for (int a = 0; a < m; ++a) X[a] = d.a[a];
  for (int i = 0; i < n; ++i) {
    Cplx v = d.b[i];
    for (int a = 0; a < m; ++a) v -= d.a[a] * L[a][i];
    X[m + i] = v;
  }
  return X;
}

double eval_quantity(const fibration::RawCurvature& rc, Quantity q,
                     const DirectionPair& x, const DirectionPair* w) {
  const auto X = lift_components(x, rc.lift, rc.m, rc.n);
  if (q == Quantity::HSC) return hermitian::hsc(rc.tensor, rc.metric, X);
  const auto W = lift_components(*w, rc.lift, rc.m, rc.n);
  return hermitian::hbc(rc.tensor, rc.metric, X, W);
}

// Local refinement from the best sampled direction: cyclic coordinate moves
// on the real/imaginary parts the sample mode leaves free, halving the step
// whenever a full sweep fails to improve.  Scale invariance of hsc/hbc means
// no renormalization is needed; near-zero trials are skipped.
double ascend(const fibration::RawCurvature& rc, Quantity q, SampleMode mode,
              DirectionPair x, DirectionPair w, double best) {
  struct Slot {
    DirectionPair* vec;
    bool fiber;
    int idx;
    bool imag;
  };
  std::vector<Slot> slots;
  auto add = [&](DirectionPair* d, bool fiber, int count) {
    for (int i = 0; i < count; ++i) {
      slots.push_back({d, fiber, i, false});
      slots.push_back({d, fiber, i, true});
    }
  };
  if (mode != SampleMode::Vertical) add(&x, false, static_cast<int>(x.a.size()));
  if (mode != SampleMode::Horizontal) add(&x, true, static_cast<int>(x.b.size()));
  if (mode == SampleMode::Pairs) {
    add(&w, false, static_cast<int>(w.a.size()));
    add(&w, true, static_cast<int>(w.b.size()));
  }

  const bool pairs = mode == SampleMode::Pairs;
  auto nudge = [](Slot& s, double d) {
    Cplx& c = s.fiber ? s.vec->b[s.idx] : s.vec->a[s.idx];
    if (s.imag)
      c.imag(c.imag() + d);
    else
      c.real(c.real() + d);
  };

  double step = 0.25;
  for (int it = 0; it < 20; ++it) {
    bool improved = false;
    for (Slot& s : slots)
      for (const double d : {step, -step}) {
        nudge(s, d);
        if (coeff_norm2(x) < 1e-12 || (pairs && coeff_norm2(w) < 1e-12)) {
          nudge(s, -d);
          continue;
        }
        const double v = eval_quantity(rc, q, x, pairs ? &w : nullptr);
        if (v > best) {
          best = v;
          improved = true;
        } else {
          nudge(s, -d);
        }
      }
    if (!improved) step *= 0.5;
  }
  return best;
}

// Quadratic form x^t H conj(y) for a Hermitian value matrix.
double quad_norm2(const hermitian::Matrix& H, std::span<const Cplx> x) {
  Cplx s = 0.0;
  const int r = static_cast<int>(H.size());
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) s += x[i] * std::conj(x[j]) * H[i][j];
  return s.real();
}

// sum rv[i][j][A][B] V[i] conj(W[j]) X[A] conj(Y[B])
Cplx contract_vertical(const fibration::Block4& rv, std::span<const Cplx> V,
                       std::span<const Cplx> W, std::span<const Cplx> X,
                       std::span<const Cplx> Y) {
  Cplx s = 0.0;
  const int n = static_cast<int>(rv.size());
  const int nc = static_cast<int>(rv[0][0].size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Cplx vij = V[i] * std::conj(W[j]);
      if (vij == Cplx(0.0)) continue;
      for (int A = 0; A < nc; ++A)
        for (int B = 0; B < nc; ++B)
          s += vij * X[A] * std::conj(Y[B]) * rv[i][j][A][B];
    }
  return s;
}

double max_abs(const fibration::Block4& t) {
  double m = 0.0;
  for (const auto& a : t)
    for (const auto& b : a)
      for (const auto& c : b)
        for (const Cplx& v : c) m = std::max(m, std::abs(v));
  return m;
}

struct OlsFit {
  double slope = 0.0, stderr_slope = 0.0;
  int used = 0;
};

OlsFit ols(std::span<const double> xs, std::span<const double> ys) {
  OlsFit f;
  const int n = static_cast<int>(xs.size());
  f.used = n;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double det = n * sxx - sx * sx;
  f.slope = (n * sxy - sx * sy) / det;
  const double alpha = (sy - f.slope * sx) / n;
  if (n > 2) {
    double ss = 0.0;
    for (int i = 0; i < n; ++i) {
      const double e = ys[i] - alpha - f.slope * xs[i];
      ss += e * e;
    }
    f.stderr_slope = std::sqrt(ss / (n - 2) * n / det);
  }
  return f;
}

// Fits one law from its per-k deviations.  `ref` is the per-k magnitude of
// the quantity the deviation was formed from; deviations below roundoff of
// it count as exact zeros and are excluded from (or short-circuit) the fit.
void fit_law(LawFit& law, std::span<const double> k_grid,
             const std::vector<bool>& valid, std::span<const double> ref) {
  const int G = static_cast<int>(k_grid.size());
  int smallest = -1;
  for (int i = 0; i < G; ++i)
    if (valid[i]) {
      smallest = i;
      break;
    }
  std::vector<double> xs, ys;
  bool all_exact = true;
  for (int i = 0; i < G; ++i) {
    if (!valid[i]) continue;
    const bool zero = law.dev[i] <= 1e-10 * (1.0 + ref[i]);
    if (!zero) all_exact = false;
    if (i == smallest || zero) continue;  // drop pre-asymptotic k and zeros
    xs.push_back(std::log(k_grid[i]));
    ys.push_back(std::log(law.dev[i]));
  }
  law.exact = all_exact && smallest >= 0;
  if (law.exact) {
    law.pass = true;
    return;
  }
  if (xs.size() < 4) return;  // not enough points; pass stays false
  const OlsFit f = ols(xs, ys);
  law.fitted = true;
  law.slope = f.slope;
  law.stderr_slope = f.stderr_slope;
  law.pass = law.one_sided ? f.slope <= law.target + law.band
                           : std::abs(f.slope - law.target) <= law.band;
}

}  // namespace

const char* to_string(Quantity q) {
  return q == Quantity::HSC ? "hsc" : "hbc";
}

const char* to_string(SampleMode m) {
  switch (m) {
    case SampleMode::Full: return "full";
    case SampleMode::Horizontal: return "horizontal";
    case SampleMode::Vertical: return "vertical";
    case SampleMode::Pairs: return "pairs";
  }
  return "?";
}

DirectionSample sample_directions(int m, int n, int count, std::uint64_t seed,
                                  SampleMode mode) {
  if (m < 1 || n < 1) throw BadArgument("sample_directions: need m, n >= 1");
  if (count < 1) throw BadArgument("sample_directions: need count >= 1");

  DirectionSample s;
  s.seed = seed;
  s.m = m;
  s.n = n;
  s.mode = mode;
  s.first.resize(count);
  if (mode == SampleMode::Pairs) s.second.resize(count);

  const int chunks = (count + kChunk - 1) / kChunk;
  parallel_for(chunks, [&](int c) {
    rng::Stream st(rng::derive_stream(seed, static_cast<std::uint64_t>(c)));
    const int lo = c * kChunk, hi = std::min(count, lo + kChunk);
    for (int t = lo; t < hi; ++t) {
      DirectionPair x;
      x.a.resize(m);
      x.b.resize(n);
      gaussian_fill(st, x.a);
      gaussian_fill(st, x.b);
      if (mode == SampleMode::Horizontal) zero(x.b);
      if (mode == SampleMode::Vertical) zero(x.a);
      if (mode == SampleMode::Pairs) {
        DirectionPair w;
        w.a.resize(m);
        w.b.resize(n);
        gaussian_fill(st, w.a);
        gaussian_fill(st, w.b);
        // Strata are applied after drawing so every entry consumes the same
        // number of draws and the stream stays aligned.
        switch (t % 5) {
          case 1: zero(x.b); zero(w.a); break;
          case 2: zero(x.a); zero(w.b); break;
          case 3: zero(x.b); zero(w.b); break;
          case 4: zero(x.a); zero(w.a); break;
          default: break;
        }
        normalize(w);
        s.second[t] = std::move(w);
      }
      normalize(x);
      s.first[t] = std::move(x);
    }
  });
  return s;
}

double sup_curvature(const models::ModelSpec& model,
                     std::span<const ChartPoint> points, double k, Quantity q,
                     const DirectionSample& sample) {
  if (points.empty()) throw BadArgument("sup_curvature: no points");
  if (sample.count() == 0) throw BadArgument("sup_curvature: empty sample");
  if (sample.m != model.m || sample.n != model.n)
    throw BadArgument("sup_curvature: sample dimensions do not match model");
  const bool pairs = sample.mode == SampleMode::Pairs;
  if ((q == Quantity::HBC) != pairs)
    throw BadArgument(q == Quantity::HBC
                          ? "sup_curvature: HBC needs a pairs sample"
                          : "sup_curvature: HSC needs a single-direction sample");

  std::vector<fibration::RawCurvature> rcs;
  rcs.reserve(points.size());
  for (const ChartPoint& p : points)
    rcs.push_back(fibration::raw_curvature(fibration::make_jet(model, p), k));

  const int P = static_cast<int>(points.size());
  const long D = sample.count();
  const int dchunks = static_cast<int>((D + kChunk - 1) / kChunk);
  struct Best {
    double v = -kInf;
    long idx = -1;
  };
  std::vector<Best> partial(static_cast<std::size_t>(P) * dchunks);

  parallel_for(P * dchunks, [&](int task) {
    const int p = task / dchunks;
    const long lo = static_cast<long>(task % dchunks) * kChunk;
    const long hi = std::min(D, lo + kChunk);
    Best b;
    for (long t = lo; t < hi; ++t) {
      const double v = eval_quantity(rcs[p], q, sample.first[t],
                                     pairs ? &sample.second[t] : nullptr);
      if (v > b.v) {
        b.v = v;
        b.idx = p * D + t;
      }
    }
    partial[task] = b;
  });

  Best g;
  for (const Best& b : partial)
    if (b.v > g.v) g = b;

  const int p_star = static_cast<int>(g.idx / D);
  const long t_star = g.idx % D;
  return ascend(rcs[p_star], q, sample.mode, sample.first[t_star],
                pairs ? sample.second[t_star] : DirectionPair{}, g.v);
}

NegativityCertificate find_threshold(const models::ModelSpec& model,
                                     std::span<const ChartPoint> points,
                                     Quantity q, double k_min, double k_max,
                                     const DirectionSample& sample,
                                     double tol) {
  if (!(k_min > 0.0) || !(k_min < k_max))
    throw BadArgument("find_threshold: need 0 < k_min < k_max");
  if (!(tol > 0.0)) throw BadArgument("find_threshold: need tol > 0");

  NegativityCertificate cert;
  cert.model = model.name;
  cert.params = model.params;
  cert.points.assign(points.begin(), points.end());
  cert.quantity = q;
  cert.k_min = k_min;
  cert.k_max = k_max;
  cert.tol = tol;
  cert.seed = sample.seed;
  cert.sample_count = sample.count();

  for (double k = k_min; k < k_max; k *= 2.0) cert.k_grid.push_back(k);
  cert.k_grid.push_back(k_max);

  auto eval_k = [&](double k) -> double {
    try {
      return sup_curvature(model, points, k, q, sample);
    } catch (const SingularMetric&) {
      return kNaN;
    }
  };
  auto good = [&](double v) { return v < -tol; };  // NaN compares false

  cert.sup_per_k.resize(cert.k_grid.size());
  for (std::size_t i = 0; i < cert.k_grid.size(); ++i)
    cert.sup_per_k[i] = eval_k(cert.k_grid[i]);

  // Certify on the stable suffix only; a sign flip inside the scan must not
  // be bridged by bisection.
  const int G = static_cast<int>(cert.k_grid.size());
  int suffix = G;
  while (suffix > 0 && good(cert.sup_per_k[suffix - 1])) --suffix;
  if (suffix == G) return cert;  // not certified anywhere on the grid

  if (suffix == 0) {
    cert.certified = true;
    cert.k0 = k_min;
    return cert;
  }

  double lo = cert.k_grid[suffix - 1], hi = cert.k_grid[suffix];
  for (int it = 0; it < 30; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (good(eval_k(mid)))
      hi = mid;
    else
      lo = mid;
  }
  cert.certified = true;
  cert.k0 = hi;
  return cert;
}

AsymptoticsReport asymptotic_check(const models::ModelSpec& model,
                                   const ChartPoint& point,
                                   std::span<const double> k_grid) {
  const int G = static_cast<int>(k_grid.size());
  if (G < 5)
    throw BadArgument("asymptotic_check: need >= 5 grid points");
  for (int i = 0; i < G; ++i) {
    if (!(k_grid[i] > 0.0))
      throw BadArgument("asymptotic_check: grid must be positive");
    if (i > 0 && !(k_grid[i] > k_grid[i - 1]))
      throw BadArgument("asymptotic_check: grid must be strictly increasing");
  }

  AsymptoticsReport rep;
  rep.model = model.name;
  rep.point = point;
  rep.k_grid.assign(k_grid.begin(), k_grid.end());

  const fibration::FibrationJet fj = fibration::make_jet(model, point);
  const int m = fj.m, n = fj.n;
  const fibration::Block4 rb = fibration::base_curvature(fj);
  const fibration::Block4 rv = fibration::vertical_bundle_curvature(fj);

  // Frame vectors of the horizontal lift (k-independent), then the vertical
  // curvature contracted on them: the large-k limit of the vv_hh block.
  const fibration::AdaptedFrame af = fibration::horizontal_lift(fj);
  std::vector<std::vector<Cplx>> X(m, std::vector<Cplx>(m + n, Cplx(0.0)));
  for (int g = 0; g < m; ++g) {
    X[g][g] = 1.0;
    for (int i = 0; i < n; ++i) X[g][m + i] = -af.L[g][i].value();
  }
  fibration::Block4 rv_frame(n,
      std::vector<std::vector<std::vector<Cplx>>>(n,
          std::vector<std::vector<Cplx>>(m, std::vector<Cplx>(m, Cplx(0.0)))));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int g = 0; g < m; ++g)
        for (int s = 0; s < m; ++s) {
          Cplx acc = 0.0;
          for (int A = 0; A < m + n; ++A)
            for (int B = 0; B < m + n; ++B)
              acc += rv[i][j][A][B] * X[g][A] * std::conj(X[s][B]);
          rv_frame[i][j][g][s] = acc;
        }

  const double rb_scale = max_abs(rb);
  const double rv_scale = max_abs(rv);

  rep.valid.assign(G, false);
  for (LawFit* law : {&rep.hh, &rep.vv_fiber, &rep.vv_frame, &rep.cross})
    law->dev.assign(G, kNaN);
  rep.hh.target = 0.0;
  rep.vv_fiber.target = -1.0;
  rep.vv_frame.target = -1.0;
  rep.cross.target = 0.0;
  rep.cross.one_sided = true;

  std::vector<double> ref_hh(G, 0.0), ref_rv(G, 0.0), ref_cross(G, 0.0);
  std::vector<char> ok(G, 0);

  parallel_for(G, [&](int gi) {
    const double k = rep.k_grid[gi];
    fibration::AdaptedFrameCurvature bl;
    try {
      bl = fibration::adapted_curvature_blocks(fj, k);
    } catch (const SingularMetric&) {
      return;  // reported per-k via valid[]
    }
    double d = 0.0;
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        for (int g = 0; g < m; ++g)
          for (int s = 0; s < m; ++s)
            d = std::max(d, std::abs(bl.hh_hh[a][b][g][s] - k * rb[a][b][g][s]));
    rep.hh.dev[gi] = d;

    d = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int kk = 0; kk < n; ++kk)
          for (int l = 0; l < n; ++l)
            d = std::max(d, std::abs(bl.vv_vv[i][j][kk][l] -
                                     rv[i][j][m + kk][m + l]));
    rep.vv_fiber.dev[gi] = d;

    d = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int g = 0; g < m; ++g)
          for (int s = 0; s < m; ++s)
            d = std::max(d, std::abs(bl.vv_hh[i][j][g][s] - rv_frame[i][j][g][s]));
    rep.vv_frame.dev[gi] = d;

    rep.cross.dev[gi] = std::max({max_abs(bl.vv_vh), max_abs(bl.vv_hv),
                                  max_abs(bl.hv_hv), max_abs(bl.hh_vh)});
    ref_hh[gi] = k * rb_scale;
    ref_rv[gi] = rv_scale;
    ref_cross[gi] = std::max(1.0, k * rb_scale);
    ok[gi] = 1;
  });
  for (int gi = 0; gi < G; ++gi) rep.valid[gi] = ok[gi] != 0;

  fit_law(rep.hh, rep.k_grid, rep.valid, ref_hh);
  fit_law(rep.vv_fiber, rep.k_grid, rep.valid, ref_rv);
  fit_law(rep.vv_frame, rep.k_grid, rep.valid, ref_rv);
  fit_law(rep.cross, rep.k_grid, rep.valid, ref_cross);
  return rep;
}

HscSupEstimate estimate_hsc_sup_base_fiber(const models::ModelSpec& model,
                                           std::span<const ChartPoint> points,
                                           int samples, std::uint64_t seed) {
  if (points.empty())
    throw BadArgument("estimate_hsc_sup_base_fiber: no points");
  if (samples < 1)
    throw BadArgument("estimate_hsc_sup_base_fiber: need samples >= 1");

  HscSupEstimate est;
  est.samples = samples;
  est.seed = seed;

  const int P = static_cast<int>(points.size());
  struct PointData {
    hermitian::Matrix bh, fh;
    hermitian::Tensor4 bR, fR;
  };
  std::vector<PointData> pd(P);
  for (int p = 0; p < P; ++p) {
    const fibration::FibrationJet fj = fibration::make_jet(model, points[p]);
    const hermitian::MetricJet bm = fibration::base_metric_jet(fj);
    const hermitian::MetricJet fm = fibration::fiber_metric_jet(fj);
    pd[p] = {bm.h, fm.h, hermitian::chern_curvature(bm),
             hermitian::chern_curvature(fm)};
  }

  const int chunks = (samples + kChunk - 1) / kChunk;
  std::vector<double> bmax(static_cast<std::size_t>(P) * chunks, -kInf);
  std::vector<double> fmax(static_cast<std::size_t>(P) * chunks, -kInf);
  parallel_for(P * chunks, [&](int task) {
    const int p = task / chunks, c = task % chunks;
    rng::Stream st(rng::derive_stream(
        seed, static_cast<std::uint64_t>(p) * 65536 + c));
    const int lo = c * kChunk, hi = std::min(samples, lo + kChunk);
    std::vector<Cplx> xi(model.m), eta(model.n);
    double bb = -kInf, ff = -kInf;
    for (int t = lo; t < hi; ++t) {
      gaussian_fill(st, xi);
      gaussian_fill(st, eta);
      bb = std::max(bb, hermitian::hsc(pd[p].bR, pd[p].bh, xi));
      ff = std::max(ff, hermitian::hsc(pd[p].fR, pd[p].fh, eta));
    }
    bmax[task] = bb;
    fmax[task] = ff;
  });

  est.base_sup = -kInf;
  est.fiber_sup = -kInf;
  for (double v : bmax) est.base_sup = std::max(est.base_sup, v);
  for (double v : fmax) est.fiber_sup = std::max(est.fiber_sup, v);
  est.eps_base = -est.base_sup + 0.0;  // avoid -0.0 in reports
  est.eps_fiber = -est.fiber_sup + 0.0;
  est.base_strict = est.base_sup < -1e-12;
  est.fiber_strict = est.fiber_sup < -1e-12;
  return est;
}

GriffithsBounds estimate_griffiths_bounds(const models::ModelSpec& model,
                                          std::span<const ChartPoint> points,
                                          int samples, std::uint64_t seed) {
  if (points.empty()) throw BadArgument("estimate_griffiths_bounds: no points");
  if (samples < 1)
    throw BadArgument("estimate_griffiths_bounds: need samples >= 1");

  GriffithsBounds gb;
  gb.samples = samples;
  gb.seed = seed;

  const int m = model.m, n = model.n;
  const int P = static_cast<int>(points.size());
  struct PointData {
    fibration::Block4 rv;
    hermitian::Matrix L;   // lift values
    hermitian::Matrix psi; // base Hessian
    hermitian::Matrix phi; // fiber Hessian
  };
  std::vector<PointData> pd(P);
  for (int p = 0; p < P; ++p) {
    const fibration::FibrationJet fj = fibration::make_jet(model, points[p]);
    PointData d;
    d.rv = fibration::vertical_bundle_curvature(fj);
    const fibration::AdaptedFrame af = fibration::horizontal_lift(fj);
    d.L.assign(m, std::vector<Cplx>(n, Cplx(0.0)));
    for (int a = 0; a < m; ++a)
      for (int i = 0; i < n; ++i) d.L[a][i] = af.L[a][i].value();
    d.psi = fibration::base_metric_jet(fj).h;
    d.phi = fibration::fiber_metric_jet(fj).h;
    pd[p] = std::move(d);
  }

  struct Partial {
    double c0 = kInf, C0 = -kInf, c1 = kInf;
    long skipped = 0;
  };
  const int chunks = (samples + kChunk - 1) / kChunk;
  std::vector<Partial> partial(static_cast<std::size_t>(P) * chunks);

  parallel_for(P * chunks, [&](int task) {
    const int p = task / chunks, c = task % chunks;
    const PointData& d = pd[p];
    rng::Stream st(rng::derive_stream(
        seed, 0x47524946ULL + static_cast<std::uint64_t>(p) * 65536 + c));
    const int lo = c * kChunk, hi = std::min(samples, lo + kChunk);
    Partial acc;
    DirectionPair x;
    x.a.resize(m);
    x.b.resize(n);
    std::vector<Cplx> V(n), Ya(m), Zb(n), V2(n);
    for (int t = lo; t < hi; ++t) {
      gaussian_fill(st, x.a);
      gaussian_fill(st, x.b);
      gaussian_fill(st, V);
      gaussian_fill(st, Ya);
      gaussian_fill(st, Zb);
      gaussian_fill(st, V2);

      // X strata: block-degenerate models must report their exact bounds,
      // so pure-horizontal and pure-vertical test vectors appear verbatim.
      DirectionPair xs = x;
      if (t % 3 == 1) zero(xs.b);
      if (t % 3 == 2) zero(xs.a);
      const auto X = lift_components(xs, d.L, m, n);
      const double nX = quad_norm2(d.psi, xs.a) + quad_norm2(d.phi, xs.b);
      const double nV = quad_norm2(d.phi, V);
      const double den = nX * nV;
      if (den < 1e-14) {
        ++acc.skipped;
      } else {
        const double ratio =
            -contract_vertical(d.rv, V, V, X, X).real() / den;
        acc.c0 = std::min(acc.c0, ratio);
        acc.C0 = std::max(acc.C0, ratio);
      }

      // Gap ratio on (Y horizontal, Z vertical, V) triples.
      DirectionPair yp, zp;
      yp.a = Ya;
      yp.b.assign(n, Cplx(0.0));
      zp.a.assign(m, Cplx(0.0));
      zp.b = Zb;
      const auto Y = lift_components(yp, d.L, m, n);
      const auto Z = lift_components(zp, d.L, m, n);
      const double ryy = contract_vertical(d.rv, V2, V2, Y, Y).real();
      const double rzz = contract_vertical(d.rv, V2, V2, Z, Z).real();
      const Cplx cross = contract_vertical(d.rv, V2, V2, Y, Z) +
                         contract_vertical(d.rv, V2, V2, Z, Y);
      const double prod = ryy * rzz;
      const double den1 = quad_norm2(d.phi, V2) *
                          std::sqrt(quad_norm2(d.phi, Zb)) *
                          std::sqrt(quad_norm2(d.psi, Ya));
      if (den1 < 1e-14 || prod < 0.0) {
        ++acc.skipped;
      } else {
        const double gap = 2.0 * std::sqrt(prod) - std::abs(cross);
        acc.c1 = std::min(acc.c1, gap / den1);
      }
    }
    partial[task] = acc;
  });

  Partial total;
  for (const Partial& a : partial) {
    total.c0 = std::min(total.c0, a.c0);
    total.C0 = std::max(total.C0, a.C0);
    total.c1 = std::min(total.c1, a.c1);
    total.skipped += a.skipped;
  }
  gb.c0 = std::isfinite(total.c0) ? total.c0 + 0.0 : 0.0;  // flush -0.0
  gb.C0 = std::isfinite(total.C0) ? total.C0 + 0.0 : 0.0;
  gb.c1 = std::isfinite(total.c1) ? total.c1 + 0.0 : 0.0;
  gb.skipped = total.skipped;
  gb.griffiths_negative = gb.c0 > 1e-12;
  gb.eps_griffiths =
      (gb.c1 > 0.0 && gb.C0 > 0.0) ? gb.c1 / (2.0 * gb.C0) : 0.0;
  return gb;
}

}  // namespace kurv::certifier
