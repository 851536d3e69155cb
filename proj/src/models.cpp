#include "kurv/models.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <utility>

#include "kurv/fibration.hpp"
#include "kurv/rng.hpp"

namespace kurv::models {

namespace {

template <typename T>
T wlog(const T& x) {
  if constexpr (std::is_same_v<T, Cplx>)
    return std::log(x);
  else
    return wirt::log(x);
}

template <typename T>
T wexp(const T& x) {
  if constexpr (std::is_same_v<T, Cplx>)
    return std::exp(x);
  else
    return wirt::exp(x);
}

// phi = sum_i [log 2 - 2 log(1 - |v_i|^2)]
template <typename T>
T product_phi(const jets::Coords<T>& w) {
  T acc = w.konst(0.0);
  for (int i = 0; i < w.vm.n; ++i)
    acc += w.konst(std::log(2.0)) - 2.0 * wlog(w.konst(1.0) - w.v(i) * w.vb(i));
  return acc;
}

// psi = -2 sum_a log(1 - |z_a|^2)
template <typename T>
T poincare_psi(const jets::Coords<T>& w) {
  T acc = w.konst(0.0);
  for (int a = 0; a < w.vm.m; ++a)
    acc += -2.0 * wlog(w.konst(1.0) - w.z(a) * w.zb(a));
  return acc;
}

// phi = log 2 - 2 log(1 - |v + eps z|^2)
template <typename T>
T translation_phi(const jets::Coords<T>& w, double eps) {
  T u = w.v(0) + eps * w.z(0);
  T ub = w.vb(0) + eps * w.zb(0);
  return w.konst(std::log(2.0)) - 2.0 * wlog(w.konst(1.0) - u * ub);
}

// Fiberwise Moebius twist w = (v + eps z)/(1 + eps z v), holomorphic in both
// coordinates, plus log-Jacobian terms log w_v + conj (with
// w_v = (1 - eps^2 z^2)/(1 + eps z v)^2) keeping e^phi = phi_{v vbar} exact.
// The denominator logs cancel against the Jacobian:
//   phi = log 2 - 2 log(den denb - num numb) + log(1-eps^2 z^2) + conj.
template <typename T>
T moebius_phi(const jets::Coords<T>& w, double eps) {
  T den = w.konst(1.0) + eps * (w.z(0) * w.v(0));
  T denb = w.konst(1.0) + eps * (w.zb(0) * w.vb(0));
  T num = w.v(0) + eps * w.z(0);
  T numb = w.vb(0) + eps * w.zb(0);
  return w.konst(std::log(2.0)) - 2.0 * wlog(den * denb - num * numb) +
         wlog(w.konst(1.0) - (eps * eps) * (w.z(0) * w.z(0))) +
         wlog(w.konst(1.0) - (eps * eps) * (w.zb(0) * w.zb(0)));
}

// phi = log 2 - 2 e^{lam |z|^2} log(1 - |v|^2) + (eps/2)(z vbar^2 + zbar v^2) + c|z|^2
template <typename T>
T sheared_phi(const jets::Coords<T>& w, double eps, double c, double lam) {
  T zzb = w.z(0) * w.zb(0);
  return w.konst(std::log(2.0)) -
         2.0 * (wexp(lam * zzb) * wlog(w.konst(1.0) - w.v(0) * w.vb(0))) +
         (eps / 2.0) * (w.z(0) * (w.vb(0) * w.vb(0)) + w.zb(0) * (w.v(0) * w.v(0))) +
         c * zzb;
}

template <typename T>
T flat_phi(const jets::Coords<T>& w) {
  T acc = w.konst(0.0);
  for (int i = 0; i < w.vm.n; ++i) acc += w.v(i) * w.vb(i);
  return acc;
}

template <typename T>
T flat_psi(const jets::Coords<T>& w) {
  T acc = w.konst(0.0);
  for (int a = 0; a < w.vm.m; ++a) acc += w.z(a) * w.zb(a);
  return acc;
}

int int_param(const std::map<std::string, double>& p, const std::string& key) {
  const double x = p.at(key);
  if (x != std::floor(x))
    throw BadArgument("models: parameter '" + key + "' must be an integer");
  return static_cast<int>(x);
}

}  // namespace

double ModelSpec::param(const std::string& key) const {
  auto it = params.find(key);
  if (it == params.end())
    throw BadArgument("models: unknown parameter '" + key + "'");
  return it->second;
}

void ModelSpec::require_inside(const jets::ChartPoint& p) const {
  if (p.m() != m || p.n() != n)
    throw BadArgument("models: point dimensions do not match the chart");
  for (const Cplx& z : p.z)
    if (std::abs(z) > base_radius + 1e-12)
      throw OutsideRegion("models: base point outside the validity region");
  for (const Cplx& v : p.v)
    if (std::abs(v) > fiber_radius + 1e-12)
      throw OutsideRegion("models: fiber point outside the validity region");
}

std::vector<double> ModelSpec::fd_scales(const jets::ChartPoint& p) const {
  std::vector<double> s;
  s.reserve(m + n);
  for (const Cplx& z : p.z)
    s.push_back(std::clamp(0.5 * (base_sing - std::abs(z)), 1e-3, 0.5));
  for (const Cplx& v : p.v)
    s.push_back(std::clamp(0.5 * (fiber_sing - std::abs(v)), 1e-3, 0.5));
  return s;
}

const std::vector<CatalogEntry>& catalog() {
  static const std::vector<CatalogEntry> cat = [] {
    std::vector<CatalogEntry> c;

    CatalogEntry product;
    product.name = "product_poincare";
    product.summary =
        "product of Poincare disks: phi = sum_i [log 2 - 2 log(1-|v_i|^2)], "
        "psi = -2 sum_a log(1-|z_a|^2)";
    product.params = {{"m", 1, 1, 3}, {"n", 1, 1, 3}};
    product.dims_adjustable = true;
    product.base_radius = 0.7;
    product.fiber_radius = 0.7;
    product.flags.fiberwise_positive = true;
    product.flags.base_negative_hsc = true;
    product.flags.base_negative_hbc = true;  // m = 1 default; cleared for m > 1
    product.flags.ke_family = true;
    c.push_back(product);

    CatalogEntry translation;
    translation.name = "translation_family";
    translation.summary =
        "fiberwise-translated Poincare disk: phi = log 2 - 2 log(1-|v+eps z|^2)";
    translation.params = {{"eps", 0.1, 0.0, 0.3}};
    translation.base_radius = 0.4;
    translation.fiber_radius = 0.5;
    translation.flags.fiberwise_positive = true;
    translation.flags.base_negative_hsc = true;
    translation.flags.base_negative_hbc = true;
    translation.flags.ke_family = true;
    c.push_back(translation);

    CatalogEntry moebius;
    moebius.name = "moebius_family";
    moebius.summary =
        "fiberwise Moebius family: phi = log 2 - 2 log(1-|w|^2) + log|w_v|^2, "
        "w = (v+eps z)/(1+eps z v)";
    moebius.params = {{"eps", 0.1, 0.0, 0.3}};
    moebius.base_radius = 0.4;
    moebius.fiber_radius = 0.5;
    moebius.flags.fiberwise_positive = true;
    moebius.flags.base_negative_hsc = true;
    moebius.flags.base_negative_hbc = true;
    moebius.flags.ke_family = true;
    c.push_back(moebius);

    CatalogEntry sheared;
    sheared.name = "sheared_poincare";
    sheared.summary =
        "sheared Poincare disk: phi = log 2 - 2 e^{lam|z|^2} log(1-|v|^2) "
        "+ eps Re(z vbar^2) + c|z|^2";
    sheared.params = {{"eps", 0.1, 0.0, 0.2},
                      {"c", 1.0, 0.5, 2.0},
                      {"lam", 1.0, 0.0, 1.5}};
    sheared.base_radius = 0.3;
    sheared.fiber_radius = 0.5;
    sheared.flags.fiberwise_positive = true;
    sheared.flags.base_negative_hsc = true;
    sheared.flags.base_negative_hbc = true;
    sheared.flags.griffiths_negative_vertical = true;
    sheared.flags.effectively_parametrized = true;
    c.push_back(sheared);

    CatalogEntry flat;
    flat.name = "flat";
    flat.summary = "flat chart: phi = |v|^2, psi = |z|^2";
    flat.params = {{"m", 1, 1, 3}, {"n", 1, 1, 3}};
    flat.dims_adjustable = true;
    flat.base_radius = 1.0;
    flat.fiber_radius = 1.0;
    flat.flags.fiberwise_positive = true;
    c.push_back(flat);

    CatalogEntry random;
    random.name = "random_jet";
    random.summary =
        "synthetic order-4 fibration jet (no closed form): Gaussian "
        "coefficients, reality-symmetrized, Hessians shifted positive";
    random.params = {{"m", 1, 1, 3}, {"n", 1, 1, 3}, {"seed", 1, 0, 9.0e15}};
    random.dims_adjustable = true;
    random.base_radius = 1.0;
    random.fiber_radius = 1.0;
    random.flags.fiberwise_positive = true;
    c.push_back(random);

    return c;
  }();
  return cat;
}

ModelSpec instantiate(const std::string& name,
                      const std::map<std::string, double>& params) {
  const CatalogEntry* entry = nullptr;
  for (const CatalogEntry& e : catalog())
    if (e.name == name) entry = &e;
  if (!entry) throw BadArgument("models: unknown model '" + name + "'");

  std::map<std::string, double> merged;
  for (const ParamSpec& ps : entry->params) merged[ps.name] = ps.def;
  for (const auto& [key, val] : params) {
    auto it = merged.find(key);
    if (it == merged.end())
      throw BadArgument("models: model '" + name + "' has no parameter '" +
                        key + "'");
    const ParamSpec* ps = nullptr;
    for (const ParamSpec& q : entry->params)
      if (q.name == key) ps = &q;
    if (val < ps->lo || val > ps->hi)
      throw BadArgument("models: parameter '" + key + "' out of range");
    it->second = val;
  }

  ModelSpec spec;
  spec.name = entry->name;
  spec.params = merged;
  spec.m = entry->dims_adjustable ? int_param(merged, "m") : entry->m;
  spec.n = entry->dims_adjustable ? int_param(merged, "n") : entry->n;
  spec.base_radius = entry->base_radius;
  spec.fiber_radius = entry->fiber_radius;
  spec.flags = entry->flags;

  if (name == "product_poincare") {
    spec.base_sing = 1.0;
    spec.fiber_sing = 1.0;
    spec.flags.base_negative_hbc = (spec.m == 1);
    spec.phi_value = [](const jets::Coords<Cplx>& w) { return product_phi(w); };
    spec.phi_jet = [](const jets::Coords<wirt::Series>& w) {
      return product_phi(w);
    };
    spec.psi_value = [](const jets::Coords<Cplx>& w) { return poincare_psi(w); };
    spec.psi_jet = [](const jets::Coords<wirt::Series>& w) {
      return poincare_psi(w);
    };
  } else if (name == "translation_family") {
    const double eps = merged.at("eps");
    spec.base_sing = 0.9;
    spec.fiber_sing = 0.85;
    spec.phi_value = [eps](const jets::Coords<Cplx>& w) {
      return translation_phi(w, eps);
    };
    spec.phi_jet = [eps](const jets::Coords<wirt::Series>& w) {
      return translation_phi(w, eps);
    };
    spec.psi_value = [](const jets::Coords<Cplx>& w) { return poincare_psi(w); };
    spec.psi_jet = [](const jets::Coords<wirt::Series>& w) {
      return poincare_psi(w);
    };
  } else if (name == "moebius_family") {
    const double eps = merged.at("eps");
    spec.base_sing = 0.9;
    spec.fiber_sing = 0.85;
    spec.phi_value = [eps](const jets::Coords<Cplx>& w) {
      return moebius_phi(w, eps);
    };
    spec.phi_jet = [eps](const jets::Coords<wirt::Series>& w) {
      return moebius_phi(w, eps);
    };
    spec.psi_value = [](const jets::Coords<Cplx>& w) { return poincare_psi(w); };
    spec.psi_jet = [](const jets::Coords<wirt::Series>& w) {
      return poincare_psi(w);
    };
  } else if (name == "sheared_poincare") {
    const double eps = merged.at("eps");
    const double cc = merged.at("c");
    const double lam = merged.at("lam");
    spec.base_sing = 0.9;
    spec.fiber_sing = 0.9;
    spec.phi_value = [=](const jets::Coords<Cplx>& w) {
      return sheared_phi(w, eps, cc, lam);
    };
    spec.phi_jet = [=](const jets::Coords<wirt::Series>& w) {
      return sheared_phi(w, eps, cc, lam);
    };
    spec.psi_value = [](const jets::Coords<Cplx>& w) { return poincare_psi(w); };
    spec.psi_jet = [](const jets::Coords<wirt::Series>& w) {
      return poincare_psi(w);
    };
  } else if (name == "flat") {
    spec.base_sing = 4.0;
    spec.fiber_sing = 4.0;
    spec.phi_value = [](const jets::Coords<Cplx>& w) { return flat_phi(w); };
    spec.phi_jet = [](const jets::Coords<wirt::Series>& w) {
      return flat_phi(w);
    };
    spec.psi_value = [](const jets::Coords<Cplx>& w) { return flat_psi(w); };
    spec.psi_jet = [](const jets::Coords<wirt::Series>& w) {
      return flat_psi(w);
    };
  } else if (name == "random_jet") {
    spec.synthetic = true;
    spec.seed = static_cast<std::uint64_t>(merged.at("seed"));
  }
  return spec;
}

namespace {

// Draw reality-symmetric coefficients: c[conj(idx)] = conj(c[idx]), with
// self-paired entries forced real.
std::vector<Cplx> symmetric_coeffs(const wirt::Layout& lay, rng::Stream& st,
                                   const jets::VarMap& vm, bool base_only) {
  std::vector<Cplx> c(lay.size(), Cplx(0.0));
  for (int i = 0; i < lay.size(); ++i) {
    const int j = lay.conj_index(i);
    if (j < i) continue;
    if (base_only) {
      bool touches_fiber = false;
      for (int t = 0; t < vm.n; ++t)
        if (lay.exp(i)[vm.fiber(t)] != 0 || lay.exp(i)[vm.fiber_bar(t)] != 0)
          touches_fiber = true;
      if (touches_fiber) continue;
    }
    if (j == i) {
      c[i] = Cplx(0.3 * st.normal(), 0.0);
    } else {
      c[i] = 0.3 * st.cnormal();
      c[j] = std::conj(c[i]);
    }
  }
  return c;
}

// Shift the diagonal of the (var_of x var_of-bar) Hessian until its minimum
// eigenvalue reaches 0.5.
void hessian_shift(const wirt::Layout& lay, std::vector<Cplx>& c, int count,
                   const std::function<int(int)>& var_of,
                   const std::function<int(int)>& var_bar_of) {
  Eigen::MatrixXcd H(count, count);
  std::vector<int> diag_idx(count);
  for (int i = 0; i < count; ++i)
    for (int j = 0; j < count; ++j) {
      std::uint8_t e[wirt::Layout::kMaxVars] = {0};
      e[var_of(i)] = 1;
      e[var_bar_of(j)] = 1;
      const int idx = lay.index_of(e);
      H(i, j) = c[idx];
      if (i == j) diag_idx[i] = idx;
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
  const double min_ev = es.eigenvalues().minCoeff();
  const double shift = 0.5 - min_ev;
  if (shift > 0)
    for (int i = 0; i < count; ++i) c[diag_idx[i]] += shift;
}

}  // namespace

fibration::FibrationJet random_fibration_jet(int m, int n, std::uint64_t seed) {
  if (m < 1 || m > 3 || n < 1 || n > 3)
    throw BadArgument("models: jet dimensions must lie in 1..3");
  const jets::VarMap vm{m, n};
  const wirt::Layout& lay = wirt::Layout::get(vm.nvars());
  rng::Stream st(rng::derive_stream(seed, 1));

  std::vector<Cplx> phi_c = symmetric_coeffs(lay, st, vm, false);
  std::vector<Cplx> psi_c = symmetric_coeffs(lay, st, vm, true);
  hessian_shift(lay, phi_c, n, [&](int i) { return vm.fiber(i); },
                [&](int j) { return vm.fiber_bar(j); });
  hessian_shift(lay, psi_c, m, [&](int a) { return vm.base(a); },
                [&](int b) { return vm.base_bar(b); });

  fibration::FibrationJet fj;
  fj.m = m;
  fj.n = n;
  fj.at = jets::ChartPoint{std::vector<Cplx>(m, Cplx(0.0)),
                           std::vector<Cplx>(n, Cplx(0.0))};
  fj.phi = wirt::Series::from_coeffs(lay, std::move(phi_c));
  fj.psi = wirt::Series::from_coeffs(lay, std::move(psi_c));
  return fj;
}

}  // namespace kurv::models
