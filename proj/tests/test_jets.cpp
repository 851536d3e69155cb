#include "doctest.h"

#include <cmath>
#include <complex>
#include <vector>

#include "kurv/common.hpp"
#include "kurv/fibration.hpp"
#include "kurv/jets.hpp"
#include "kurv/models.hpp"
#include "kurv/rng.hpp"

using kurv::BadArgument;
using kurv::Cplx;
using kurv::OutsideRegion;
namespace jets = kurv::jets;
namespace wirt = kurv::wirt;

namespace {

// Poincare-type weight usable with both Coords<Cplx> and Coords<Series>.
constexpr auto kPoincare = [](const auto& w) {
  using std::log;
  using wirt::log;
  return w.konst(std::log(2.0)) -
         2.0 * log(w.konst(1.0) - w.v(0) * w.vb(0));
};

constexpr auto kMixed = [](const auto& w) {
  using std::exp;
  using std::log;
  using wirt::exp;
  using wirt::log;
  return w.konst(std::log(2.0)) -
         2.0 * (exp(0.7 * (w.z(0) * w.zb(0))) *
                log(w.konst(1.0) - w.v(0) * w.vb(0))) +
         0.05 * (w.z(0) * (w.vb(0) * w.vb(0)) + w.zb(0) * (w.v(0) * w.v(0))) +
         1.0 * (w.z(0) * w.zb(0));
};

}  // namespace

TEST_CASE("coordinate bindings carry point values and unit derivatives") {
  const jets::VarMap vm{1, 1};
  const std::vector<Cplx> zv = {Cplx(0.2, 0.1), Cplx(-0.3, 0.05)};

  auto vc = jets::value_coords(vm, zv);
  CHECK(vc.z(0) == zv[0]);
  CHECK(vc.v(0) == zv[1]);
  CHECK(vc.zb(0) == std::conj(zv[0]));
  CHECK(vc.vb(0) == std::conj(zv[1]));

  auto jc = jets::jet_coords(vm, zv);
  CHECK(jc.z(0).value() == zv[0]);
  CHECK(jc.vb(0).value() == std::conj(zv[1]));
  CHECK(jc.z(0).deriv({1, 0, 0, 0}) == Cplx(1.0));
  CHECK(jc.vb(0).deriv({0, 0, 0, 1}) == Cplx(1.0));
  CHECK(jc.v(0).deriv({0, 0, 1, 0}) == Cplx(1.0));

  CHECK_THROWS_AS(jets::value_coords(vm, std::vector<Cplx>{Cplx(0.0)}),
                  BadArgument);
}

TEST_CASE("fd oracle reproduces the Poincare jet") {
  const jets::VarMap vm{0, 1};
  const std::vector<Cplx> zv = {Cplx(0.3, 0.05)};
  const std::vector<double> scales = {0.35};

  wirt::Series sj = kPoincare(jets::jet_coords(vm, zv));
  wirt::Series sf = jets::fd_jet(
      vm, zv, [](const jets::Coords<Cplx>& w) { return kPoincare(w); }, scales);

  CHECK(jets::jet_discrepancy(sj, sf) < 1e-6);

  // closed-form spot values
  const Cplx v = zv[0];
  const double s = std::norm(v);
  const double u = 1.0 / (1.0 - s);
  CHECK(std::abs(sf.deriv({1, 1}) - Cplx(2.0 * u * u)) < 1e-7);
  CHECK(std::abs(sf.deriv({1, 0}) - 2.0 * std::conj(v) * u) < 1e-8);
}

TEST_CASE("fd oracle handles mixed base/fiber weights") {
  const jets::VarMap vm{1, 1};
  const std::vector<Cplx> zv = {Cplx(0.1, 0.2), Cplx(0.3, -0.1)};
  const std::vector<double> scales = {0.4, 0.3};

  wirt::Series sj = kMixed(jets::jet_coords(vm, zv));
  wirt::Series sf = jets::fd_jet(
      vm, zv, [](const jets::Coords<Cplx>& w) { return kMixed(w); }, scales);

  CHECK(jets::jet_discrepancy(sj, sf) < 1e-6);
}

TEST_CASE("explicit low-order steps stay accurate") {
  const jets::VarMap vm{0, 1};
  const std::vector<Cplx> zv = {Cplx(0.25, 0.0)};
  const std::vector<double> scales = {0.35};

  wirt::Series sj = kPoincare(jets::jet_coords(vm, zv)).truncated(2);
  wirt::Series sf = jets::fd_jet(
      vm, zv, [](const jets::Coords<Cplx>& w) { return kPoincare(w); }, scales,
      2, 1e-3);

  CHECK(jets::jet_discrepancy(sj, sf) < 1e-6);
}

TEST_CASE("constant and polynomial weights difference cleanly") {
  const jets::VarMap vm{0, 1};
  const std::vector<Cplx> zv = {Cplx(0.2, 0.1)};
  const std::vector<double> scales = {0.4};

  // Nonzero reads below are pure cancellation noise; the floor scales like
  // eps * |f| / h^degree, so degree-4 entries sit around 1e-6 in doubles.
  wirt::Series sc = jets::fd_jet(
      vm, zv, [](const jets::Coords<Cplx>& w) { return w.konst(3.25); },
      scales);
  CHECK(std::abs(sc.value() - 3.25) < 1e-14);
  const wirt::Layout& lay = sc.layout();
  for (int i = 0; i < lay.size(); ++i) {
    const int d = lay.degree(i);
    if (d == 0) continue;
    const double floor = d <= 2 ? 1e-8 : (d == 3 ? 1e-6 : 1e-4);
    CHECK(std::abs(sc.coeff(i)) * lay.factorial_prod(i) < floor);
  }

  wirt::Series sflat = jets::fd_jet(
      vm, zv, [](const jets::Coords<Cplx>& w) { return w.v(0) * w.vb(0); },
      scales);
  CHECK(std::abs(sflat.deriv({1, 1}) - 1.0) < 1e-9);
  CHECK(std::abs(sflat.deriv({2, 1})) < 1e-6);
  CHECK(std::abs(sflat.deriv({2, 2})) < 1e-4);
}

TEST_CASE("jet arithmetic is exact on polynomial weights") {
  const jets::VarMap vm{1, 1};
  const std::vector<Cplx> zv = {Cplx(0.37, -0.21), Cplx(-0.12, 0.4)};
  auto poly = [](const auto& w) {
    return (w.konst(2.0) + w.z(0) * w.zb(0)) * (w.v(0) * w.vb(0)) +
           0.25 * ((w.z(0) * w.z(0)) * (w.zb(0) * w.zb(0)));
  };
  wirt::Series s = poly(jets::jet_coords(vm, zv));

  // d/dz d/dzb d/dv d/dvb -> 1;  d^2/dz^2 d^2/dzb^2 -> 0.25 * 4 = 1
  CHECK(std::abs(s.deriv({1, 1, 1, 1}) - 1.0) < 1e-14);
  CHECK(std::abs(s.deriv({2, 2, 0, 0}) - 1.0) < 1e-14);
  const Cplx z = zv[0], v = zv[1];
  CHECK(std::abs(s.deriv({0, 0, 1, 1}) - (2.0 + std::norm(z))) < 1e-14);
  CHECK(std::abs(s.deriv({1, 0, 0, 1}) - std::conj(z) * v) < 1e-13);
}

TEST_CASE("weight jets expose multi-index reads and reality checks") {
  auto model = kurv::models::instantiate("product_poincare");
  jets::ChartPoint p{{Cplx(0.1, 0.1)}, {Cplx(0.25, -0.1)}};
  auto jet = jets::evaluate_jet(model, p);

  jets::MultiIndex zero{{0, 0}, {0, 0}};
  CHECK(std::abs(std::imag(jet.value(zero))) < 1e-14);

  // phi_{v vbar} for the Poincare factor
  jets::MultiIndex vv{{0, 1}, {0, 1}};
  const double u = 1.0 / (1.0 - std::norm(p.v[0]));
  CHECK(std::abs(jet.value(vv) - 2.0 * u * u) < 1e-12);

  CHECK(jets::check_reality(jet, 1e-12));
  CHECK(jets::reality_defect(jet) < 1e-13);

  // perturb one off-diagonal coefficient: reality must fail
  const wirt::Layout& lay = jet.series().layout();
  std::vector<Cplx> c(lay.size());
  for (int i = 0; i < lay.size(); ++i) c[i] = jet.series().coeff(i);
  std::uint8_t e[wirt::Layout::kMaxVars] = {0, 0, 1, 0};
  c[lay.index_of(e)] += 1e-3;
  jets::WeightJet bad(jet.map(), p,
                      wirt::Series::from_coeffs(lay, std::move(c)));
  CHECK_FALSE(jets::check_reality(bad, 1e-9));

  CHECK_THROWS_AS(jet.value(jets::MultiIndex{{5, 0}, {0, 0}}), BadArgument);
  CHECK_THROWS_AS(jet.value(jets::MultiIndex{{1}, {0}}), BadArgument);
}

TEST_CASE("evaluate_jet and fd_jet_oracle agree on every closed-form model") {
  kurv::rng::Stream st(kurv::rng::derive_stream(2026, 4));
  const char* names[] = {"product_poincare", "translation_family",
                         "moebius_family", "sheared_poincare", "flat"};
  for (const char* name : names) {
    auto model = kurv::models::instantiate(name);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      jets::ChartPoint p;
      for (int a = 0; a < model.m; ++a)
        p.z.push_back(st.disk(0.95 * model.base_radius));
      for (int i = 0; i < model.n; ++i)
        p.v.push_back(st.disk(0.95 * model.fiber_radius));
      auto a = jets::evaluate_jet(model, p);
      auto b = jets::fd_jet_oracle(model, p);
      worst = std::max(worst,
                       jets::jet_discrepancy(a.series(), b.series()));
    }
    INFO("model ", std::string(name), " worst fd gap ", worst);
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("fd oracle agreement holds in higher dimensions") {
  auto model = kurv::models::instantiate("product_poincare",
                                         {{"m", 2.0}, {"n", 2.0}});
  kurv::rng::Stream st(kurv::rng::derive_stream(2026, 5));
  for (int t = 0; t < 5; ++t) {
    jets::ChartPoint p;
    for (int a = 0; a < 2; ++a) p.z.push_back(st.disk(0.5));
    for (int i = 0; i < 2; ++i) p.v.push_back(st.disk(0.5));
    auto a = jets::evaluate_jet(model, p);
    auto b = jets::fd_jet_oracle(model, p);
    CHECK(jets::jet_discrepancy(a.series(), b.series()) < 1e-6);
  }
}

TEST_CASE("region and order guards") {
  auto model = kurv::models::instantiate("sheared_poincare");
  jets::ChartPoint outside{{Cplx(0.35, 0.0)}, {Cplx(0.0, 0.0)}};
  CHECK_THROWS_AS(jets::evaluate_jet(model, outside), OutsideRegion);

  jets::ChartPoint inside{{Cplx(0.1, 0.0)}, {Cplx(0.2, 0.0)}};
  CHECK_THROWS_AS(jets::evaluate_jet(model, inside, 5), BadArgument);
  CHECK_THROWS_AS(jets::evaluate_jet(model, inside, -1), BadArgument);

  // an explicit 0.2 step pushes the stencil past the clearance radius
  CHECK_THROWS_AS(jets::fd_jet_oracle(model, inside, 4, 0.2), OutsideRegion);

  jets::ChartPoint wrong_dims{{}, {Cplx(0.1, 0.0)}};
  CHECK_THROWS_AS(jets::evaluate_jet(model, wrong_dims), BadArgument);
}

TEST_CASE("jet discrepancy normalizes per degree") {
  const jets::VarMap vm{0, 1};
  const std::vector<Cplx> zv = {Cplx(0.1, 0.0)};
  wirt::Series a = kPoincare(jets::jet_coords(vm, zv));
  CHECK(jets::jet_discrepancy(a, a) == 0.0);

  const wirt::Layout& lay = a.layout();
  std::vector<Cplx> c(lay.size());
  for (int i = 0; i < lay.size(); ++i) c[i] = a.coeff(i);
  std::uint8_t e[wirt::Layout::kMaxVars] = {2, 2};
  c[lay.index_of(e)] += 1e-4;
  wirt::Series b = wirt::Series::from_coeffs(lay, std::move(c));
  const double gap = jets::jet_discrepancy(a, b);
  CHECK(gap > 1e-7);
  CHECK(gap < 1e-2);
}
