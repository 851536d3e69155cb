#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "doctest.h"
#include "kurv/fibration.hpp"
#include "kurv/hermitian.hpp"
#include "kurv/models.hpp"
#include "kurv/rng.hpp"

using kurv::Cplx;
namespace fib = kurv::fibration;
namespace jets = kurv::jets;

namespace {

jets::ChartPoint random_point(kurv::rng::Stream& st,
                              const kurv::models::ModelSpec& model,
                              double shrink = 0.95) {
  jets::ChartPoint p;
  for (int a = 0; a < model.m; ++a)
    p.z.push_back(st.disk(shrink * model.base_radius));
  for (int i = 0; i < model.n; ++i)
    p.v.push_back(st.disk(shrink * model.fiber_radius));
  return p;
}

double max_abs(const fib::Block4& t) {
  double worst = 0.0;
  for (const auto& a : t)
    for (const auto& b : a)
      for (const auto& c : b)
        for (const Cplx& x : c) worst = std::max(worst, std::abs(x));
  return worst;
}

// Smallest k (doubling from 1) whose metric is positive on both blocks.
double positivity_scale(const fib::FibrationJet& fj) {
  for (double k = 1.0; k < 1e9; k *= 2.0) {
    const auto om = fib::omega_metric(fj, k);
    if (om.horizontal_positive && om.vertical_positive) return k;
  }
  FAIL("no positive k found");
  return -1.0;
}

}  // namespace

TEST_CASE("adapted blocks match the generic-frame oracle on random jets") {
  kurv::rng::Stream st(kurv::rng::derive_stream(99, 1));
  int t = 0;
  for (int m = 1; m <= 3; ++m)
    for (int n = 1; n <= 3; ++n)
      for (int rep = 0; rep < 4; ++rep) {
        const auto fj = kurv::models::random_fibration_jet(
            m, n, 1000 + 17 * static_cast<std::uint64_t>(t++));
        const double k = positivity_scale(fj) * (1.0 + rep);
        const auto a = fib::adapted_curvature_blocks(fj, k);
        const auto b = fib::generic_frame_oracle(fj, k);
        INFO("m=", m, " n=", n, " rep=", rep, " k=", k);
        CHECK(fib::curvature_gap(a, b) < 1e-8);
      }
}

TEST_CASE("adapted blocks match the oracle on every closed-form model") {
  kurv::rng::Stream st(kurv::rng::derive_stream(99, 2));
  const char* names[] = {"product_poincare", "translation_family",
                         "moebius_family", "sheared_poincare", "flat"};
  for (const char* name : names) {
    auto model = kurv::models::instantiate(name);
    for (int t = 0; t < 10; ++t) {
      const auto p = random_point(st, model);
      const auto fj = fib::make_jet(model, p);
      for (double k : {1.0, 7.5, 120.0}) {
        const auto a = fib::adapted_curvature_blocks(fj, k);
        const auto b = fib::generic_frame_oracle(fj, k);
        INFO("model ", std::string(name), " k=", k);
        CHECK(fib::curvature_gap(a, b) < 1e-8);
      }
    }
  }
}

TEST_CASE("product model: block anchors at the origin") {
  auto model = kurv::models::instantiate("product_poincare");
  const auto fj = fib::make_jet(model, {{Cplx(0, 0)}, {Cplx(0, 0)}});
  const auto R = fib::adapted_curvature_blocks(fj, 1.0);

  // Base and fiber are unit-disk Poincare factors: curvature -4 at 0.
  CHECK(std::abs(R.hh_hh[0][0][0][0] - Cplx(-4.0)) < 1e-12);
  CHECK(std::abs(R.vv_vv[0][0][0][0] - Cplx(-4.0)) < 1e-12);
  CHECK(max_abs(R.vv_hh) < 1e-13);
  CHECK(max_abs(R.vv_vh) < 1e-13);
  CHECK(max_abs(R.vv_hv) < 1e-13);
  CHECK(max_abs(R.hv_hv) < 1e-13);
  CHECK(max_abs(R.hh_vh) < 1e-13);

  const auto R7 = fib::adapted_curvature_blocks(fj, 7.0);
  CHECK(std::abs(R7.hh_hh[0][0][0][0] - Cplx(-28.0)) < 1e-11);
  CHECK(std::abs(R7.vv_vv[0][0][0][0] - Cplx(-4.0)) < 1e-12);
}

TEST_CASE("product model: mixed block vanishes away from the origin too") {
  auto model = kurv::models::instantiate("product_poincare");
  kurv::rng::Stream st(kurv::rng::derive_stream(99, 3));
  for (int t = 0; t < 20; ++t) {
    const auto fj = fib::make_jet(model, random_point(st, model));
    const auto R = fib::adapted_curvature_blocks(fj, 3.0);
    CHECK(max_abs(R.vv_hh) < 1e-12);
    CHECK(max_abs(R.hv_hv) < 1e-12);
    CHECK(max_abs(R.hh_vh) < 1e-12);
  }
}

TEST_CASE("flat model: every curvature block vanishes") {
  auto model = kurv::models::instantiate("flat");
  kurv::rng::Stream st(kurv::rng::derive_stream(99, 4));
  for (int t = 0; t < 10; ++t) {
    const auto fj = fib::make_jet(model, random_point(st, model));
    const auto R = fib::adapted_curvature_blocks(fj, 2.5);
    for (const fib::Block4* blk :
         {&R.hh_hh, &R.vv_hh, &R.vv_vv, &R.vv_vh, &R.vv_hv, &R.hv_hv,
          &R.hh_vh})
      CHECK(max_abs(*blk) < 1e-12);
  }
}

TEST_CASE("translation family: lift is constant, c and mu vanish") {
  auto model = kurv::models::instantiate("translation_family");
  const double eps = model.param("eps");
  kurv::rng::Stream st(kurv::rng::derive_stream(99, 5));
  for (int t = 0; t < 20; ++t) {
    const auto fj = fib::make_jet(model, random_point(st, model));
    const auto frame = fib::horizontal_lift(fj);
    CHECK(std::abs(frame.L[0][0].value() - Cplx(eps)) < 1e-10);
    const auto c = fib::geodesic_curvature(fj);
    CHECK(std::abs(c[0][0]) < 1e-10);
    const auto mu = fib::kodaira_spencer(fj);
    CHECK(std::abs(mu[0][0][0]) < 1e-10);
  }
}

TEST_CASE("moebius family: c and mu vanish identically") {
  auto model = kurv::models::instantiate("moebius_family");
  kurv::rng::Stream st(kurv::rng::derive_stream(99, 6));
  for (int t = 0; t < 20; ++t) {
    const auto fj = fib::make_jet(model, random_point(st, model));
    CHECK(std::abs(fib::geodesic_curvature(fj)[0][0]) < 1e-10);
    CHECK(std::abs(fib::kodaira_spencer(fj)[0][0][0]) < 1e-10);
  }
}

TEST_CASE("sheared family: geodesic curvature and Kodaira-Spencer anchors") {
  auto model = kurv::models::instantiate("sheared_poincare");
  const double eps = model.param("eps");
  const double c0 = model.param("c");

  const auto at_origin = fib::make_jet(model, {{Cplx(0, 0)}, {Cplx(0, 0)}});
  CHECK(std::abs(fib::geodesic_curvature(at_origin)[0][0] - Cplx(c0)) < 1e-12);
  CHECK(std::abs(fib::kodaira_spencer(at_origin)[0][0][0] - Cplx(-eps / 2)) <
        1e-12);

  // Lift vanishes on the zero section v = 0 at any z.
  kurv::rng::Stream st(kurv::rng::derive_stream(99, 7));
  for (int t = 0; t < 10; ++t) {
    jets::ChartPoint p{{st.disk(0.95 * model.base_radius)}, {Cplx(0, 0)}};
    const auto fj = fib::make_jet(model, p);
    CHECK(std::abs(fib::horizontal_lift(fj).L[0][0].value()) < 1e-12);
  }
}

TEST_CASE("curvature blocks carry the Hermitian and Kahler symmetries") {
  kurv::rng::Stream st(kurv::rng::derive_stream(99, 8));
  for (int t = 0; t < 6; ++t) {
    const int m = 1 + t % 3, n = 1 + (t / 2) % 3;
    const auto fj =
        kurv::models::random_fibration_jet(m, n, 555 + 7 * t);
    const double k = positivity_scale(fj);
    const auto R = fib::adapted_curvature_blocks(fj, k);
    const double scale = std::max({max_abs(R.hh_hh), max_abs(R.vv_vv), 1.0});
    const double tol = 1e-10 * scale;

    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        for (int g = 0; g < m; ++g)
          for (int s = 0; s < m; ++s) {
            // Hermitian pairing and Kahler exchanges of like slots.
            CHECK(std::abs(R.hh_hh[a][b][g][s] -
                           std::conj(R.hh_hh[b][a][s][g])) < tol);
            CHECK(std::abs(R.hh_hh[a][b][g][s] - R.hh_hh[g][b][a][s]) < tol);
            CHECK(std::abs(R.hh_hh[a][b][g][s] - R.hh_hh[a][s][g][b]) < tol);
          }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        for (int p = 0; p < n; ++p)
          for (int l = 0; l < n; ++l) {
            CHECK(std::abs(R.vv_vv[i][j][p][l] -
                           std::conj(R.vv_vv[j][i][l][p])) < tol);
            CHECK(std::abs(R.vv_vv[i][j][p][l] - R.vv_vv[p][j][i][l]) < tol);
            CHECK(std::abs(R.vv_vv[i][j][p][l] - R.vv_vv[i][l][p][j]) < tol);
          }
        for (int g = 0; g < m; ++g)
          for (int s = 0; s < m; ++s)
            CHECK(std::abs(R.vv_hh[i][j][g][s] -
                           std::conj(R.vv_hh[j][i][s][g])) < tol);
        for (int p = 0; p < n; ++p)
          for (int b = 0; b < m; ++b) {
            CHECK(std::abs(R.vv_vh[i][j][p][b] -
                           std::conj(R.vv_hv[j][i][b][p])) < tol);
            CHECK(std::abs(R.vv_vh[i][j][p][b] - R.vv_vh[p][j][i][b]) < tol);
          }
        for (int a = 0; a < m; ++a)
          for (int l = 0; l < n; ++l)
            CHECK(std::abs(R.vv_hv[i][j][a][l] - R.vv_hv[i][l][a][j]) < tol);
      }
    for (int g = 0; g < m; ++g)
      for (int j = 0; j < n; ++j)
        for (int a = 0; a < m; ++a)
          for (int l = 0; l < n; ++l)
            CHECK(std::abs(R.hv_hv[g][j][a][l] - R.hv_hv[a][j][g][l]) < tol);
  }
}

TEST_CASE("large k drives the blocks to the base and vertical curvatures") {
  auto model = kurv::models::instantiate("sheared_poincare");
  kurv::rng::Stream st(kurv::rng::derive_stream(99, 9));
  const auto fj = fib::make_jet(model, random_point(st, model));
  const auto rb = fib::base_curvature(fj);
  const auto rv = fib::vertical_bundle_curvature(fj);
  const auto R = fib::adapted_curvature_blocks(fj, 1e6);

  CHECK(std::abs(R.hh_hh[0][0][0][0] / 1e6 - rb[0][0][0][0]) < 1e-4);
  // vv_vv approaches the vertical-bundle curvature along fiber directions.
  const int mm = fj.m;
  CHECK(std::abs(R.vv_vv[0][0][0][0] - rv[0][0][mm][mm]) < 1e-4);
  // vv_hh approaches it along the lifted horizontal direction.
  Cplx acc = 0.0;
  const auto frame = fib::horizontal_lift(fj);
  const Cplx L = frame.L[0][0].value();
  const Cplx e[2] = {1.0, -L};
  for (int A = 0; A < 2; ++A)
    for (int B = 0; B < 2; ++B) acc += rv[0][0][A][B] * e[A] * std::conj(e[B]);
  CHECK(std::abs(R.vv_hh[0][0][0][0] - acc) < 1e-4);
}

TEST_CASE("metric decomposition holds at random points of every model") {
  kurv::rng::Stream st(kurv::rng::derive_stream(99, 10));
  const char* names[] = {"product_poincare", "translation_family",
                         "moebius_family", "sheared_poincare", "flat"};
  for (const char* name : names) {
    auto model = kurv::models::instantiate(name);
    double worst_h = 0.0, worst_m = 0.0;
    for (int t = 0; t < 100; ++t) {
      const auto fj = fib::make_jet(model, random_point(st, model));
      const auto rep = fib::decomposition_check(fj);
      worst_h = std::max(worst_h, rep.horizontal_residual);
      worst_m = std::max(worst_m, rep.mixed_residual);
    }
    INFO("model ", std::string(name));
    CHECK(worst_h < 1e-12);
    CHECK(worst_m < 1e-12);
  }
}

TEST_CASE("omega metric: positivity states across k") {
  auto product = kurv::models::instantiate("product_poincare");
  const auto fj = fib::make_jet(product, {{Cplx(0.1, 0.2)}, {Cplx(0.3, 0.0)}});

  const auto deg = fib::omega_metric(fj, 0.0);
  CHECK_FALSE(deg.horizontal_positive);
  CHECK(deg.vertical_positive);
  CHECK(std::abs(deg.min_horizontal_eig) < 1e-12);

  const auto pos = fib::omega_metric(fj, 2.0);
  CHECK(pos.horizontal_positive);
  CHECK(pos.min_horizontal_eig > 0.0);

  auto sheared = kurv::models::instantiate("sheared_poincare");
  const auto sj = fib::make_jet(sheared, {{Cplx(0, 0)}, {Cplx(0, 0)}});
  const auto s0 = fib::omega_metric(sj, 0.0);
  CHECK(s0.horizontal_positive);  // c(phi) alone is already positive here
  CHECK(std::abs(s0.horizontal[0][0] - Cplx(1.0)) < 1e-12);

  CHECK_THROWS_AS(fib::omega_metric(fj, -1.0), kurv::BadArgument);
}

TEST_CASE("random jets reach positivity at finite k and stay positive") {
  for (std::uint64_t seed : {11u, 22u, 33u}) {
    const auto fj = kurv::models::random_fibration_jet(2, 2, seed);
    const double k = positivity_scale(fj);
    CHECK(fib::omega_metric(fj, k).horizontal_positive);
    CHECK(fib::omega_metric(fj, 2 * k).horizontal_positive);
    CHECK(fib::omega_metric(fj, 4 * k).horizontal_positive);
  }
}

TEST_CASE("curvature gap guards dimension mismatches") {
  const auto a = kurv::models::random_fibration_jet(1, 1, 5);
  const auto b = kurv::models::random_fibration_jet(2, 1, 5);
  const double ka = positivity_scale(a), kb = positivity_scale(b);
  const auto Ra = fib::adapted_curvature_blocks(a, ka);
  const auto Rb = fib::adapted_curvature_blocks(b, kb);
  CHECK_THROWS_AS(fib::curvature_gap(Ra, Rb), kurv::BadArgument);
  CHECK(fib::curvature_gap(Ra, Ra) == 0.0);
}
