#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <vector>

#include "kurv/common.hpp"

namespace kurv::wirt {

// Truncated multivariate Taylor arithmetic over complex scalars, total degree
// at most 4.  A holomorphic coordinate and its conjugate are carried as two
// independent formal variables, so mixed Wirtinger derivatives of a weight are
// plain coefficient reads: for coordinate c, variable 2c is the holomorphic
// direction and variable 2c+1 the conjugate one.
//
// Each Series tracks a "valid" degree: coefficients above it are garbage left
// behind by truncation (e.g. after differentiating).  Reads beyond the valid
// degree throw instead of silently returning wrong numbers.

class Layout {
 public:
  static constexpr int kMaxDegree = 4;
  static constexpr int kMaxVars = 12;

  // Shared immutable table for a given number of formal variables.
  static const Layout& get(int nvars);

  int nvars() const { return nvars_; }
  int size() const { return static_cast<int>(exps_.size()); }

  const std::uint8_t* exp(int idx) const { return exps_[idx].data(); }
  int degree(int idx) const { return deg_[idx]; }
  double factorial_prod(int idx) const { return fact_[idx]; }

  // Index of an exponent vector, -1 when its degree exceeds kMaxDegree.
  int index_of(const std::uint8_t* e) const;

  // Index of exp(idx) + e_var, -1 when that leaves the table.
  int shift_up(int var, int idx) const { return up_[var][idx]; }

  // Index of exp(idx) with each variable pair (2c, 2c+1) swapped.
  int conj_index(int idx) const { return conj_[idx]; }

  struct Triple {
    std::int32_t a, b, dst;
  };
  const std::vector<Triple>& triples() const { return triples_; }

 private:
  explicit Layout(int nvars);

  int nvars_;
  std::vector<std::array<std::uint8_t, kMaxVars>> exps_;
  std::vector<std::uint8_t> deg_;
  std::vector<double> fact_;
  std::vector<std::vector<std::int32_t>> up_;     // [var][idx]
  std::vector<std::int32_t> conj_;
  std::vector<Triple> triples_;
  std::vector<std::pair<std::int64_t, std::int32_t>> sorted_keys_;
  std::int64_t key_of(const std::uint8_t* e) const;
};

class Series {
 public:
  Series() = default;

  Series(const Layout& lay, Cplx constant, int valid = Layout::kMaxDegree);

  // value + X_var; carries full degree.
  static Series variable(const Layout& lay, int var, Cplx value);

  // Wraps raw Taylor coefficients (dense, layout order).
  static Series from_coeffs(const Layout& lay, std::vector<Cplx> coeffs,
                            int valid = Layout::kMaxDegree);

  bool empty() const { return lay_ == nullptr; }
  const Layout& layout() const { return *lay_; }
  int valid() const { return valid_; }

  Cplx value() const { return c_[0]; }
  Cplx coeff(int idx) const { return c_[idx]; }

  // Derivative value (coefficient times factorials) for the exponent vector.
  Cplx deriv(const std::uint8_t* e, int len) const;
  Cplx deriv(std::initializer_list<std::uint8_t> e) const;

  Series derivative(int var) const;   // valid degree drops by one
  Series conjugate() const;
  Series truncated(int valid) const;  // lowers the valid degree, zeros the rest

  Series& operator+=(const Series& o);
  Series& operator-=(const Series& o);
  Series& operator*=(double s);
  Series& operator*=(Cplx s);

  friend Series operator+(Series a, const Series& b) { return a += b; }
  friend Series operator-(Series a, const Series& b) { return a -= b; }
  friend Series operator-(Series a) {
    for (auto& x : a.c_) x = -x;
    return a;
  }
  friend Series operator*(Series a, double s) { return a *= s; }
  friend Series operator*(double s, Series a) { return a *= s; }
  friend Series operator*(Series a, Cplx s) { return a *= s; }
  friend Series operator*(Cplx s, Series a) { return a *= s; }
  friend Series operator+(Series a, Cplx s) {
    a.c_[0] += s;
    return a;
  }
  friend Series operator+(Cplx s, Series a) { return std::move(a) + s; }
  friend Series operator-(Series a, Cplx s) { return std::move(a) + (-s); }
  friend Series operator-(Cplx s, Series a) { return (-std::move(a)) + s; }

  friend Series operator*(const Series& a, const Series& b);

  // Composition with an analytic germ: cs[0] + cs[1]*u + ... + cs[4]*u^4
  // where u = s - s(0).
  friend Series compose(const Series& s, const std::array<Cplx, 5>& cs);

  friend Series log(const Series& s);
  friend Series exp(const Series& s);
  friend Series recip(const Series& s);
  friend Series sqr(const Series& s);

 private:
  const Layout* lay_ = nullptr;
  int valid_ = -1;
  std::vector<Cplx> c_;

  void check_same(const Series& o) const;
};

Series compose(const Series& s, const std::array<Cplx, 5>& cs);
Series log(const Series& s);
Series exp(const Series& s);
Series recip(const Series& s);
Series sqr(const Series& s);

}  // namespace kurv::wirt
