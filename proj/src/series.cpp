#include "kurv/series.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <utility>

namespace kurv::wirt {

namespace {

void enumerate_exps(int nvars, int total, int pos,
                    std::array<std::uint8_t, Layout::kMaxVars>& work,
                    std::vector<std::array<std::uint8_t, Layout::kMaxVars>>& out) {
  if (pos == nvars - 1) {
    work[pos] = static_cast<std::uint8_t>(total);
    out.push_back(work);
    return;
  }
  for (int e = 0; e <= total; ++e) {
    work[pos] = static_cast<std::uint8_t>(e);
    enumerate_exps(nvars, total - e, pos + 1, work, out);
  }
}

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

}  // namespace

std::int64_t Layout::key_of(const std::uint8_t* e) const {
  std::int64_t key = 0;
  for (int i = 0; i < nvars_; ++i) key |= static_cast<std::int64_t>(e[i]) << (3 * i);
  return key;
}

Layout::Layout(int nvars) : nvars_(nvars) {
  if (nvars < 1 || nvars > kMaxVars)
    throw BadArgument("series: variable count out of range");

  std::array<std::uint8_t, kMaxVars> work{};
  for (int total = 0; total <= kMaxDegree; ++total)
    enumerate_exps(nvars, total, 0, work, exps_);

  const int n = size();
  deg_.resize(n);
  fact_.resize(n);
  sorted_keys_.reserve(n);
  for (int i = 0; i < n; ++i) {
    int d = 0;
    double f = 1.0;
    for (int v = 0; v < nvars_; ++v) {
      d += exps_[i][v];
      f *= factorial(exps_[i][v]);
    }
    deg_[i] = static_cast<std::uint8_t>(d);
    fact_[i] = f;
    sorted_keys_.emplace_back(key_of(exps_[i].data()), i);
  }
  std::sort(sorted_keys_.begin(), sorted_keys_.end());

  up_.assign(nvars_, std::vector<std::int32_t>(n, -1));
  for (int i = 0; i < n; ++i) {
    for (int v = 0; v < nvars_; ++v) {
      if (deg_[i] == kMaxDegree) continue;
      auto e = exps_[i];
      e[v]++;
      up_[v][i] = index_of(e.data());
    }
  }

  conj_.resize(n);
  for (int i = 0; i < n; ++i) {
    auto e = exps_[i];
    for (int c = 0; c + 1 < nvars_; c += 2) std::swap(e[c], e[c + 1]);
    conj_[i] = index_of(e.data());
  }

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (deg_[i] + deg_[j] > kMaxDegree) continue;
      auto e = exps_[i];
      for (int v = 0; v < nvars_; ++v) e[v] = static_cast<std::uint8_t>(e[v] + exps_[j][v]);
      triples_.push_back({i, j, index_of(e.data())});
    }
  }
}

int Layout::index_of(const std::uint8_t* e) const {
  int d = 0;
  for (int i = 0; i < nvars_; ++i) d += e[i];
  if (d > kMaxDegree) return -1;
  const std::int64_t key = key_of(e);
  auto it = std::lower_bound(sorted_keys_.begin(), sorted_keys_.end(),
                             std::make_pair(key, std::int32_t{-1}));
  return static_cast<int>(it->second);
}

const Layout& Layout::get(int nvars) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<Layout>> registry;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = registry[nvars];
  if (!slot) slot.reset(new Layout(nvars));
  return *slot;
}

Series::Series(const Layout& lay, Cplx constant, int valid)
    : lay_(&lay), valid_(valid), c_(lay.size(), Cplx(0.0)) {
  c_[0] = constant;
}

Series Series::variable(const Layout& lay, int var, Cplx value) {
  if (var < 0 || var >= lay.nvars()) throw BadArgument("series: variable index out of range");
  Series s(lay, value);
  std::uint8_t e[Layout::kMaxVars] = {0};
  e[var] = 1;
  s.c_[lay.index_of(e)] = 1.0;
  return s;
}

Series Series::from_coeffs(const Layout& lay, std::vector<Cplx> coeffs, int valid) {
  if (static_cast<int>(coeffs.size()) != lay.size())
    throw BadArgument("series: coefficient vector does not match layout size");
  Series s(lay, 0.0, valid);
  s.c_ = std::move(coeffs);
  return s;
}

void Series::check_same(const Series& o) const {
  if (lay_ != o.lay_ || lay_ == nullptr)
    throw BadArgument("series: operands use different layouts");
}

Cplx Series::deriv(const std::uint8_t* e, int len) const {
  std::uint8_t padded[Layout::kMaxVars] = {0};
  if (len > lay_->nvars()) throw BadArgument("series: exponent vector too long");
  std::copy(e, e + len, padded);
  const int idx = lay_->index_of(padded);
  if (idx < 0) throw BadArgument("series: derivative order above table degree");
  if (lay_->degree(idx) > valid_)
    throw Error("series: derivative read beyond valid degree");
  return c_[idx] * lay_->factorial_prod(idx);
}

Cplx Series::deriv(std::initializer_list<std::uint8_t> e) const {
  return deriv(e.begin(), static_cast<int>(e.size()));
}

Series Series::derivative(int var) const {
  Series out(*lay_, 0.0, valid_ - 1);
  for (int i = 0; i < lay_->size(); ++i) {
    const int j = lay_->shift_up(var, i);
    if (j >= 0) out.c_[i] = c_[j] * static_cast<double>(lay_->exp(i)[var] + 1);
  }
  return out;
}

Series Series::conjugate() const {
  Series out(*lay_, 0.0, valid_);
  for (int i = 0; i < lay_->size(); ++i)
    out.c_[lay_->conj_index(i)] = std::conj(c_[i]);
  return out;
}

Series Series::truncated(int valid) const {
  Series out(*lay_, 0.0, std::min(valid, valid_));
  for (int i = 0; i < lay_->size(); ++i)
    if (lay_->degree(i) <= out.valid_) out.c_[i] = c_[i];
  return out;
}

Series& Series::operator+=(const Series& o) {
  check_same(o);
  valid_ = std::min(valid_, o.valid_);
  for (size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
  return *this;
}

Series& Series::operator-=(const Series& o) {
  check_same(o);
  valid_ = std::min(valid_, o.valid_);
  for (size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
  return *this;
}

Series& Series::operator*=(double s) {
  for (auto& x : c_) x *= s;
  return *this;
}

Series& Series::operator*=(Cplx s) {
  for (auto& x : c_) x *= s;
  return *this;
}

Series operator*(const Series& a, const Series& b) {
  a.check_same(b);
  Series out(*a.lay_, 0.0, std::min(a.valid_, b.valid_));
  for (const auto& t : a.lay_->triples())
    out.c_[t.dst] += a.c_[t.a] * b.c_[t.b];
  return out;
}

Series compose(const Series& s, const std::array<Cplx, 5>& cs) {
  Series u = s;
  u.c_[0] = 0.0;
  Series r(*s.lay_, cs[0], s.valid_);
  Series p = u;
  r += cs[1] * p;
  for (int k = 2; k <= Layout::kMaxDegree; ++k) {
    p = p * u;
    r += cs[k] * p;
  }
  r.valid_ = s.valid_;
  return r;
}

Series log(const Series& s) {
  const Cplx c = s.value();
  if (std::abs(c) < 1e-300) throw SingularMetric("series: log of (near) zero");
  const Cplx ic = 1.0 / c;
  return compose(s, {std::log(c), ic, -0.5 * ic * ic, ic * ic * ic / 3.0,
                     -0.25 * ic * ic * ic * ic});
}

Series exp(const Series& s) {
  const Cplx e = std::exp(s.value());
  return compose(s, {e, e, e / 2.0, e / 6.0, e / 24.0});
}

Series recip(const Series& s) {
  const Cplx c = s.value();
  if (std::abs(c) < 1e-300) throw SingularMetric("series: reciprocal of (near) zero");
  const Cplx ic = 1.0 / c;
  const Cplx ic2 = ic * ic;
  return compose(s, {ic, -ic2, ic2 * ic, -ic2 * ic2, ic2 * ic2 * ic});
}

Series sqr(const Series& s) { return s * s; }

}  // namespace kurv::wirt
