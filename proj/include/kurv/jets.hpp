#pragma once

#include <functional>
#include <span>
#include <type_traits>
#include <vector>

#include "kurv/common.hpp"
#include "kurv/series.hpp"

namespace kurv::models {
struct ModelSpec;
}

namespace kurv::jets {

// Chart layout: base coordinates z^0..z^{m-1} come first, fiber coordinates
// v^0..v^{n-1} after them.  Coordinate c owns formal variables 2c (holomorphic)
// and 2c+1 (conjugate).
struct VarMap {
  int m = 0, n = 0;

  int coords() const { return m + n; }
  int nvars() const { return 2 * (m + n); }
  int hol(int c) const { return 2 * c; }
  int bar(int c) const { return 2 * c + 1; }
  int base(int a) const { return 2 * a; }
  int base_bar(int a) const { return 2 * a + 1; }
  int fiber(int i) const { return 2 * (m + i); }
  int fiber_bar(int i) const { return 2 * (m + i) + 1; }
};

struct ChartPoint {
  std::vector<Cplx> z, v;

  int m() const { return static_cast<int>(z.size()); }
  int n() const { return static_cast<int>(v.size()); }
  std::vector<Cplx> coords() const;
};

// Derivative request: hol[c] holomorphic and anti[c] antiholomorphic orders
// per coordinate.
struct MultiIndex {
  std::vector<int> hol, anti;

  int order() const;
};

// Coordinates as seen by a weight formula.  T = Cplx evaluates the closed
// form at a point (finite-difference oracle path); T = wirt::Series carries
// formal variables and extracts the full jet in one evaluation.
template <typename T>
struct Coords {
  VarMap vm;
  std::vector<T> hol, bar;
  const wirt::Layout* lay = nullptr;

  const T& z(int a) const { return hol[a]; }
  const T& zb(int a) const { return bar[a]; }
  const T& v(int i) const { return hol[vm.m + i]; }
  const T& vb(int i) const { return bar[vm.m + i]; }
  const T& c(int idx) const { return hol[idx]; }
  const T& cb(int idx) const { return bar[idx]; }

  T konst(Cplx x) const {
    if constexpr (std::is_same_v<T, wirt::Series>)
      return wirt::Series(*lay, x);
    else
      return x;
  }
};

Coords<Cplx> value_coords(const VarMap& vm, std::span<const Cplx> zv);
Coords<wirt::Series> jet_coords(const VarMap& vm, std::span<const Cplx> zv);

using ValueFn = std::function<Cplx(const Coords<Cplx>&)>;

// All mixed Wirtinger derivatives of a real weight at a chart point, up to
// total order 4 (or less when requested).
class WeightJet {
 public:
  WeightJet() = default;
  WeightJet(VarMap vm, ChartPoint p, wirt::Series s);

  const VarMap& map() const { return vm_; }
  const ChartPoint& point() const { return point_; }
  const wirt::Series& series() const { return s_; }
  int order() const { return s_.valid(); }

  Cplx value(const MultiIndex& mi) const;

 private:
  VarMap vm_;
  ChartPoint point_;
  wirt::Series s_;
};

WeightJet evaluate_jet(const models::ModelSpec& model, const ChartPoint& p,
                       int order = 4);

// Independent finite-difference oracle over the plain-complex evaluation of
// the same weight.  step <= 0 selects per-order tuned steps (composed
// fourth-order central stencils balance truncation against cancellation at
// h ~ eps^(1/(r+5)) with r the total order of the entry, scaled by the
// distance to the model's region edge); an explicit step > 0 is used
// verbatim on every axis.
WeightJet fd_jet_oracle(const models::ModelSpec& model, const ChartPoint& p,
                        int order = 4, double step = 0.0);

bool check_reality(const WeightJet& jet, double tol);
double reality_defect(const WeightJet& jet);

// Raw FD engine, exposed for tests with ad-hoc weights.  scales holds one
// step scale per coordinate.  Returns a series whose derivative reads match
// the FD estimates.
wirt::Series fd_jet(const VarMap& vm, std::span<const Cplx> zv,
                    const ValueFn& f, std::span<const double> scales,
                    int order = 4, double step = 0.0);

// max over entries of |a - b| / max(1, largest same-order |a| entry),
// comparing derivative values through min(valid) degree.
double jet_discrepancy(const wirt::Series& a, const wirt::Series& b);

}  // namespace kurv::jets
