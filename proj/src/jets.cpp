#include "kurv/jets.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <utility>

#include "kurv/models.hpp"

namespace kurv::jets {

std::vector<Cplx> ChartPoint::coords() const {
  std::vector<Cplx> out;
  out.reserve(z.size() + v.size());
  out.insert(out.end(), z.begin(), z.end());
  out.insert(out.end(), v.begin(), v.end());
  return out;
}

int MultiIndex::order() const {
  int t = 0;
  for (int k : hol) t += k;
  for (int k : anti) t += k;
  return t;
}

Coords<Cplx> value_coords(const VarMap& vm, std::span<const Cplx> zv) {
  if (static_cast<int>(zv.size()) != vm.coords())
    throw BadArgument("jets: coordinate count does not match chart");
  Coords<Cplx> c;
  c.vm = vm;
  c.hol.assign(zv.begin(), zv.end());
  c.bar.reserve(zv.size());
  for (Cplx p : zv) c.bar.push_back(std::conj(p));
  return c;
}

Coords<wirt::Series> jet_coords(const VarMap& vm, std::span<const Cplx> zv) {
  if (static_cast<int>(zv.size()) != vm.coords())
    throw BadArgument("jets: coordinate count does not match chart");
  const wirt::Layout& lay = wirt::Layout::get(vm.nvars());
  Coords<wirt::Series> c;
  c.vm = vm;
  c.lay = &lay;
  c.hol.reserve(zv.size());
  c.bar.reserve(zv.size());
  for (int i = 0; i < vm.coords(); ++i) {
    c.hol.push_back(wirt::Series::variable(lay, vm.hol(i), zv[i]));
    c.bar.push_back(wirt::Series::variable(lay, vm.bar(i), std::conj(zv[i])));
  }
  return c;
}

WeightJet::WeightJet(VarMap vm, ChartPoint p, wirt::Series s)
    : vm_(vm), point_(std::move(p)), s_(std::move(s)) {
  if (s_.empty() || s_.layout().nvars() != vm_.nvars())
    throw BadArgument("jets: series layout does not match chart");
}

Cplx WeightJet::value(const MultiIndex& mi) const {
  const int nc = vm_.coords();
  if (static_cast<int>(mi.hol.size()) != nc ||
      static_cast<int>(mi.anti.size()) != nc)
    throw BadArgument("jets: multi-index length does not match chart");
  std::uint8_t e[wirt::Layout::kMaxVars] = {0};
  for (int c = 0; c < nc; ++c) {
    if (mi.hol[c] < 0 || mi.anti[c] < 0)
      throw BadArgument("jets: negative derivative order");
    if (mi.hol[c] > wirt::Layout::kMaxDegree ||
        mi.anti[c] > wirt::Layout::kMaxDegree)
      throw BadArgument("jets: derivative order above table degree");
    e[vm_.hol(c)] = static_cast<std::uint8_t>(mi.hol[c]);
    e[vm_.bar(c)] = static_cast<std::uint8_t>(mi.anti[c]);
  }
  return s_.deriv(e, vm_.nvars());
}

double reality_defect(const WeightJet& jet) {
  const wirt::Series& s = jet.series();
  const wirt::Layout& lay = s.layout();
  double worst = 0.0;
  for (int i = 0; i < lay.size(); ++i) {
    if (lay.degree(i) > s.valid()) continue;
    const int j = lay.conj_index(i);
    const Cplx a = s.coeff(i) * lay.factorial_prod(i);
    const Cplx b = s.coeff(j) * lay.factorial_prod(j);
    worst = std::max(worst, std::abs(a - std::conj(b)));
  }
  return worst;
}

bool check_reality(const WeightJet& jet, double tol) {
  return reality_defect(jet) <= tol;
}

namespace {

// Fourth-order central first-derivative stencil; weights carry no 1/h factor.
constexpr std::pair<int, double> kD1[4] = {
    {-2, 1.0 / 12}, {-1, -8.0 / 12}, {1, 8.0 / 12}, {2, -1.0 / 12}};

std::vector<std::pair<int, double>> composed_stencil(int r) {
  std::vector<std::pair<int, double>> taps = {{0, 1.0}};
  for (int t = 0; t < r; ++t) {
    std::map<int, double> next;
    for (auto [o, w] : taps)
      for (auto [bo, bw] : kD1) next[o + bo] += w * bw;
    taps.assign(next.begin(), next.end());
  }
  return taps;
}

// Balances the O(h^4) truncation of the composed stencils against the
// eps/h^r cancellation loss of an r-th total-order difference (biased a
// little large: cancellation, not truncation, dominates at these scales).
double auto_step(int r, double scale) {
  constexpr double eps = std::numeric_limits<double>::epsilon();
  return std::pow(eps, 1.0 / (r + 5)) * scale;
}

int binom(int p, int a) {
  static constexpr int tab[5][5] = {{1, 0, 0, 0, 0},
                                    {1, 1, 0, 0, 0},
                                    {1, 2, 1, 0, 0},
                                    {1, 3, 3, 1, 0},
                                    {1, 4, 6, 4, 1}};
  return tab[p][a];
}

Cplx ipow(int k) {
  static const Cplx t[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  return t[k & 3];
}

Cplx mipow(int k) {
  static const Cplx t[4] = {{1, 0}, {0, -1}, {-1, 0}, {0, 1}};
  return t[k & 3];
}

}  // namespace

wirt::Series fd_jet(const VarMap& vm, std::span<const Cplx> zv,
                    const ValueFn& f, std::span<const double> scales,
                    int order, double step) {
  const int nc = vm.coords();
  if (static_cast<int>(zv.size()) != nc)
    throw BadArgument("jets: coordinate count does not match chart");
  if (static_cast<int>(scales.size()) != nc)
    throw BadArgument("jets: one step scale per coordinate required");
  if (order < 0 || order > wirt::Layout::kMaxDegree)
    throw BadArgument("jets: unsupported order");
  const wirt::Layout& lay = wirt::Layout::get(vm.nvars());

  // Pass 1: real-axis derivatives over the same exponent layout, reading
  // variable 2c as the x_c axis and 2c+1 as the y_c axis.
  std::vector<Cplx> realtab(lay.size(), Cplx(0.0));
  const std::vector<Cplx> base(zv.begin(), zv.end());
  for (int idx = 0; idx < lay.size(); ++idx) {
    if (lay.degree(idx) > order) continue;
    const std::uint8_t* e = lay.exp(idx);

    struct Axis {
      int var;
      double h;
      std::vector<std::pair<int, double>> taps;
    };
    // The step must be tuned to the entry's *total* order: the combined
    // division is by prod h_k^{r_k} = h^degree, so per-axis tuning would
    // let mixed entries drown in cancellation noise.
    const int total = lay.degree(idx);
    std::vector<Axis> axes;
    double hprod = 1.0;
    for (int var = 0; var < vm.nvars(); ++var) {
      const int r = e[var];
      if (r == 0) continue;
      const double h = step > 0 ? step : auto_step(total, scales[var / 2]);
      axes.push_back({var, h, composed_stencil(r)});
      hprod *= std::pow(h, r);
    }
    if (axes.empty()) {
      realtab[idx] = f(value_coords(vm, base));
      continue;
    }

    std::vector<size_t> pos(axes.size(), 0);
    Cplx acc = 0.0;
    for (;;) {
      double w = 1.0;
      std::vector<Cplx> pt = base;
      for (size_t k = 0; k < axes.size(); ++k) {
        const auto [off, tw] = axes[k].taps[pos[k]];
        w *= tw;
        const int cidx = axes[k].var / 2;
        if (axes[k].var % 2 == 0)
          pt[cidx] += static_cast<double>(off) * axes[k].h;
        else
          pt[cidx] += Cplx(0.0, static_cast<double>(off) * axes[k].h);
      }
      acc += w * f(value_coords(vm, pt));
      size_t k = 0;
      while (k < axes.size() && ++pos[k] == axes[k].taps.size()) pos[k++] = 0;
      if (k == axes.size()) break;
    }
    realtab[idx] = acc / hprod;
  }

  // Pass 2: Wirtinger combination, d/dz = (d/dx - i d/dy)/2 and
  // d/dzbar = (d/dx + i d/dy)/2 expanded binomially per coordinate.
  std::vector<Cplx> coeffs(lay.size(), Cplx(0.0));
  for (int idx = 0; idx < lay.size(); ++idx) {
    if (lay.degree(idx) > order) continue;
    const std::uint8_t* e = lay.exp(idx);
    std::uint8_t re[wirt::Layout::kMaxVars] = {0};
    Cplx total = 0.0;
    std::function<void(int, Cplx)> walk = [&](int c, Cplx factor) {
      if (c == nc) {
        total += factor * realtab[lay.index_of(re)];
        return;
      }
      const int p = e[vm.hol(c)], q = e[vm.bar(c)];
      for (int a = 0; a <= p; ++a)
        for (int b = 0; b <= q; ++b) {
          re[vm.hol(c)] = static_cast<std::uint8_t>(a + b);
          re[vm.bar(c)] = static_cast<std::uint8_t>((p - a) + (q - b));
          walk(c + 1, factor * static_cast<double>(binom(p, a) * binom(q, b)) *
                          mipow(p - a) * ipow(q - b));
        }
    };
    walk(0, Cplx(1.0));
    coeffs[idx] =
        total * std::ldexp(1.0, -lay.degree(idx)) / lay.factorial_prod(idx);
  }
  return wirt::Series::from_coeffs(lay, std::move(coeffs), order);
}

double jet_discrepancy(const wirt::Series& a, const wirt::Series& b) {
  if (a.empty() || b.empty() || &a.layout() != &b.layout())
    throw BadArgument("jets: comparing jets over different charts");
  const wirt::Layout& lay = a.layout();
  const int through = std::min(a.valid(), b.valid());

  std::array<double, wirt::Layout::kMaxDegree + 1> den;
  den.fill(1.0);
  for (int i = 0; i < lay.size(); ++i) {
    const int d = lay.degree(i);
    if (d > through) continue;
    den[d] = std::max(den[d], std::abs(a.coeff(i)) * lay.factorial_prod(i));
  }
  double worst = 0.0;
  for (int i = 0; i < lay.size(); ++i) {
    const int d = lay.degree(i);
    if (d > through) continue;
    const double diff = std::abs(a.coeff(i) - b.coeff(i)) * lay.factorial_prod(i);
    worst = std::max(worst, diff / den[d]);
  }
  return worst;
}

WeightJet evaluate_jet(const models::ModelSpec& model, const ChartPoint& p,
                       int order) {
  if (order < 0 || order > wirt::Layout::kMaxDegree)
    throw BadArgument("jets: unsupported order");
  model.require_inside(p);
  if (!model.phi_jet)
    throw BadArgument("jets: model carries no closed-form weight");
  const VarMap vm{model.m, model.n};
  const auto zv = p.coords();
  wirt::Series s = model.phi_jet(jet_coords(vm, zv));
  return WeightJet(vm, p, s.truncated(order));
}

WeightJet fd_jet_oracle(const models::ModelSpec& model, const ChartPoint& p,
                        int order, double step) {
  if (order < 0 || order > wirt::Layout::kMaxDegree)
    throw BadArgument("jets: unsupported order");
  model.require_inside(p);
  if (!model.phi_value)
    throw BadArgument("jets: model carries no closed-form weight");
  const VarMap vm{model.m, model.n};
  const auto zv = p.coords();
  const std::vector<double> scales = model.fd_scales(p);

  // Offsets reach +-2r <= 8 taps on each of two real axes per coordinate;
  // 12h covers the diagonal excursion.
  for (int c = 0; c < vm.coords(); ++c) {
    const double h =
        step > 0 ? step : auto_step(wirt::Layout::kMaxDegree, scales[c]);
    const double clear = c < vm.m ? model.base_sing : model.fiber_sing;
    if (std::abs(zv[c]) + 12.0 * h > clear)
      throw OutsideRegion("jets: finite-difference stencil exits the region");
  }
  wirt::Series s =
      fd_jet(vm, zv, [&](const Coords<Cplx>& w) { return model.phi_value(w); },
             scales, order, step);
  return WeightJet(vm, p, s);
}

}  // namespace kurv::jets
