#include "doctest.h"

#include <cmath>
#include <complex>
#include <set>
#include <vector>

#include "kurv/common.hpp"
#include "kurv/fibration.hpp"
#include "kurv/jets.hpp"
#include "kurv/models.hpp"
#include "kurv/rng.hpp"

using kurv::BadArgument;
using kurv::Cplx;
namespace jets = kurv::jets;
namespace models = kurv::models;
namespace wirt = kurv::wirt;

TEST_CASE("catalog covers the builtin entries and validates parameters") {
  std::set<std::string> names;
  for (const auto& e : models::catalog()) names.insert(e.name);
  CHECK(names == std::set<std::string>{"product_poincare", "translation_family",
                                       "moebius_family", "sheared_poincare",
                                       "flat", "random_jet"});

  CHECK_THROWS_AS(models::instantiate("poincare"), BadArgument);
  CHECK_THROWS_AS(models::instantiate("sheared_poincare", {{"eps", 0.5}}),
                  BadArgument);
  CHECK_THROWS_AS(models::instantiate("sheared_poincare", {{"sigma", 0.1}}),
                  BadArgument);
  CHECK_THROWS_AS(models::instantiate("product_poincare", {{"m", 1.5}}),
                  BadArgument);
  CHECK_THROWS_AS(models::instantiate("product_poincare", {{"n", 4.0}}),
                  BadArgument);

  auto spec = models::instantiate("sheared_poincare", {{"eps", 0.2}});
  CHECK(spec.param("eps") == 0.2);
  CHECK(spec.param("c") == 1.0);
  CHECK(spec.m == 1);
  CHECK(spec.n == 1);
}

TEST_CASE("expected hypothesis flags per entry") {
  auto product = models::instantiate("product_poincare");
  CHECK(product.flags.fiberwise_positive);
  CHECK(product.flags.base_negative_hsc);
  CHECK(product.flags.base_negative_hbc);
  CHECK(product.flags.ke_family);
  CHECK_FALSE(product.flags.griffiths_negative_vertical);
  CHECK_FALSE(product.flags.effectively_parametrized);

  auto product2 = models::instantiate("product_poincare", {{"m", 2.0}});
  CHECK(product2.flags.base_negative_hsc);
  CHECK_FALSE(product2.flags.base_negative_hbc);

  auto sheared = models::instantiate("sheared_poincare");
  CHECK(sheared.flags.griffiths_negative_vertical);
  CHECK(sheared.flags.effectively_parametrized);
  CHECK_FALSE(sheared.flags.ke_family);

  auto flat = models::instantiate("flat");
  CHECK(flat.flags.fiberwise_positive);
  CHECK_FALSE(flat.flags.base_negative_hsc);
  CHECK_FALSE(flat.flags.base_negative_hbc);
  CHECK_FALSE(flat.flags.griffiths_negative_vertical);
  CHECK_FALSE(flat.flags.ke_family);

  auto moebius = models::instantiate("moebius_family");
  CHECK(moebius.flags.ke_family);
  CHECK_FALSE(moebius.flags.effectively_parametrized);
}

TEST_CASE("poincare product weight anchors") {
  auto model = models::instantiate("product_poincare");
  jets::ChartPoint origin{{Cplx(0.0)}, {Cplx(0.0)}};
  auto jet = jets::evaluate_jet(model, origin, 2);
  CHECK(std::abs(jet.value({{0, 0}, {0, 0}}) - std::log(2.0)) < 1e-15);
  CHECK(std::abs(jet.value({{0, 1}, {0, 1}}) - 2.0) < 1e-15);

  jets::ChartPoint p{{Cplx(0.3, 0.2)}, {Cplx(0.5, 0.0)}};
  auto jp = jets::evaluate_jet(model, p);
  const double u = 1.0 / (1.0 - 0.25);
  CHECK(std::abs(jp.value({{0, 1}, {0, 1}}) - 2.0 * u * u) < 1e-12);
  // psi jet through the same chart
  const jets::VarMap vm{1, 1};
  wirt::Series psi = model.psi_jet(jets::jet_coords(vm, p.coords()));
  const double w = 1.0 / (1.0 - std::norm(p.z[0]));
  CHECK(std::abs(psi.deriv({1, 1, 0, 0}) - 2.0 * w * w) < 1e-13);
  CHECK(std::abs(psi.deriv({0, 0, 1, 1})) == 0.0);
}

TEST_CASE("translation family is a sheared pullback: phi_{z vbar} = eps phi_{v vbar}") {
  auto model = models::instantiate("translation_family", {{"eps", 0.25}});
  jets::ChartPoint p{{Cplx(0.2, -0.1)}, {Cplx(0.1, 0.3)}};
  auto jet = jets::evaluate_jet(model, p);
  const Cplx pvv = jet.value({{0, 1}, {0, 1}});
  const Cplx pzv = jet.value({{1, 0}, {0, 1}});
  CHECK(std::abs(pzv - 0.25 * pvv) < 1e-12);

  const Cplx w = p.v[0] + 0.25 * p.z[0];
  const double u = 1.0 / (1.0 - std::norm(w));
  CHECK(std::abs(pvv - 2.0 * u * u) < 1e-12);
}

TEST_CASE("moebius family keeps |w| < 1 and the exact KE identity") {
  const double eps = 0.1;
  auto model = models::instantiate("moebius_family", {{"eps", eps}});
  kurv::rng::Stream st(kurv::rng::derive_stream(11, 2));
  for (int t = 0; t < 25; ++t) {
    jets::ChartPoint p{{st.disk(0.4)}, {st.disk(0.5)}};
    const Cplx w =
        (p.v[0] + eps * p.z[0]) / (1.0 + eps * p.z[0] * p.v[0]);
    CHECK(std::abs(w) < 0.9);

    auto jet = jets::evaluate_jet(model, p);
    CHECK(jets::check_reality(jet, 1e-12));
    const Cplx phi = jet.value({{0, 0}, {0, 0}});
    const Cplx pvv = jet.value({{0, 1}, {0, 1}});
    // e^phi = phi_{v vbar}: the family is Kaehler-Einstein fiberwise
    CHECK(std::abs(std::exp(phi) - pvv) / std::abs(pvv) < 1e-13);
  }
}

TEST_CASE("sheared model anchors at the origin") {
  auto model = models::instantiate("sheared_poincare");  // eps=0.1, c=1, lam=1
  jets::ChartPoint origin{{Cplx(0.0)}, {Cplx(0.0)}};
  auto jet = jets::evaluate_jet(model, origin);
  CHECK(std::abs(jet.value({{1, 0}, {0, 1}})) < 1e-15);        // phi_{z vbar}
  CHECK(std::abs(jet.value({{1, 0}, {1, 0}}) - 1.0) < 1e-15);  // phi_{z zbar} = c
  CHECK(std::abs(jet.value({{0, 1}, {0, 1}}) - 2.0) < 1e-15);  // phi_{v vbar}
  // the shear enters phi_{z vbar vbar}: d_z d_vb^2 of (eps/2) z vbar^2 = eps
  CHECK(std::abs(jet.value({{1, 0}, {0, 2}}) - 0.1) < 1e-15);
}

TEST_CASE("flat weight has unit vertical Hessian and nothing else") {
  auto model = models::instantiate("flat", {{"m", 2.0}, {"n", 2.0}});
  jets::ChartPoint p{{Cplx(0.3, 0.1), Cplx(-0.2, 0.4)},
                     {Cplx(0.1, -0.5), Cplx(0.0, 0.2)}};
  auto jet = jets::evaluate_jet(model, p);
  CHECK(jet.value({{0, 0, 1, 0}, {0, 0, 1, 0}}) == Cplx(1.0));
  CHECK(jet.value({{0, 0, 1, 0}, {0, 0, 0, 1}}) == Cplx(0.0));
  CHECK(jet.value({{0, 0, 2, 0}, {0, 0, 0, 0}}) == Cplx(0.0));
  CHECK(jet.value({{1, 0, 1, 0}, {0, 0, 1, 0}}) == Cplx(0.0));
}

TEST_CASE("random fibration jets are reproducible, real, and positive") {
  auto fj1 = models::random_fibration_jet(2, 2, 7);
  auto fj2 = models::random_fibration_jet(2, 2, 7);
  const wirt::Layout& lay = fj1.phi.layout();
  for (int i = 0; i < lay.size(); ++i) {
    CHECK(fj1.phi.coeff(i) == fj2.phi.coeff(i));
    CHECK(fj1.psi.coeff(i) == fj2.psi.coeff(i));
  }
  auto fj3 = models::random_fibration_jet(2, 2, 8);
  bool differs = false;
  for (int i = 0; i < lay.size(); ++i)
    if (fj1.phi.coeff(i) != fj3.phi.coeff(i)) differs = true;
  CHECK(differs);

  // reality is exact by construction
  for (int i = 0; i < lay.size(); ++i) {
    CHECK(fj1.phi.coeff(i) == std::conj(fj1.phi.coeff(lay.conj_index(i))));
    CHECK(fj1.psi.coeff(i) == std::conj(fj1.psi.coeff(lay.conj_index(i))));
  }

  CHECK_THROWS_AS(models::random_fibration_jet(0, 1, 1), BadArgument);
  CHECK_THROWS_AS(models::random_fibration_jet(1, 4, 1), BadArgument);
}

TEST_CASE("random jet Hessians clear the 0.5 eigenvalue floor") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const int m = 1 + static_cast<int>(seed % 3);
    const int n = 1 + static_cast<int>((seed / 3) % 3);
    auto fj = models::random_fibration_jet(m, n, seed);
    const jets::VarMap vm{m, n};

    auto phi_h = kurv::fibration::fiber_metric_jet(fj).h;
    auto psi_h = kurv::fibration::base_metric_jet(fj).h;
    CHECK(kurv::hermitian::min_eigenvalue(phi_h) >= 0.5 - 1e-12);
    CHECK(kurv::hermitian::min_eigenvalue(psi_h) >= 0.5 - 1e-12);

    // psi involves base variables only
    const wirt::Layout& lay = fj.psi.layout();
    for (int idx = 0; idx < lay.size(); ++idx) {
      bool fiber = false;
      for (int t = 0; t < n; ++t)
        if (lay.exp(idx)[vm.fiber(t)] != 0 || lay.exp(idx)[vm.fiber_bar(t)] != 0)
          fiber = true;
      if (fiber) CHECK(fj.psi.coeff(idx) == Cplx(0.0));
    }
  }
}

TEST_CASE("synthetic model spec plumbs through instantiate") {
  auto spec = models::instantiate("random_jet", {{"m", 2.0}, {"seed", 42.0}});
  CHECK(spec.synthetic);
  CHECK(spec.m == 2);
  CHECK(spec.n == 1);
  CHECK(spec.seed == 42);
  CHECK_FALSE(static_cast<bool>(spec.phi_value));
  jets::ChartPoint p{{Cplx(0.1), Cplx(0.0)}, {Cplx(0.0)}};
  CHECK_THROWS_AS(jets::evaluate_jet(spec, p), BadArgument);
}
