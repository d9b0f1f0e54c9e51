#pragma once

// Exact scalar layer: rationals, the truncated ring Q[[h]]/(h^N), generalized
// binomial expansions and the Laurent-in-u series with HSeries coefficients
// that every operator factor reduces to.

#include <gmpxx.h>

#include <algorithm>
#include <cstddef>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace dyfock {

using Rational = mpq_class;
using Integer = mpz_class;

struct NonUnit : std::domain_error {
  NonUnit() : std::domain_error("HSeries has zero constant term") {}
};

struct NotDivisible : std::domain_error {
  explicit NotDivisible(const std::string& what) : std::domain_error(what) {}
};

inline Rational make_rational(long num, long den = 1) {
  Rational q(num, den);
  q.canonicalize();
  return q;
}

inline Rational parse_rational(const std::string& text) {
  Rational q;
  if (q.set_str(text, 10) != 0) throw std::invalid_argument("bad rational: " + text);
  q.canonicalize();
  return q;
}

inline std::string to_string(const Rational& q) { return q.get_str(); }

inline bool is_integer(const Rational& q) { return q.get_den() == 1; }

inline long to_long(const Rational& q) {
  if (!is_integer(q)) throw std::domain_error("rational is not an integer: " + q.get_str());
  if (!q.get_num().fits_slong_p()) throw std::overflow_error("integer too large");
  return q.get_num().get_si();
}

inline Rational pow(const Rational& base, unsigned long e) {
  Rational out(1);
  mpz_pow_ui(out.get_num_mpz_t(), base.get_num_mpz_t(), e);
  mpz_pow_ui(out.get_den_mpz_t(), base.get_den_mpz_t(), e);
  return out;
}

/// Truncated power series in h with exact rational coefficients, computed
/// modulo h^order. Mixed-order arithmetic truncates to the smaller order.
class HSeries {
 public:
  HSeries() = default;
  explicit HSeries(std::size_t order) : c_(order) {
    if (order == 0) throw std::invalid_argument("HSeries order must be positive");
  }
  HSeries(std::vector<Rational> coeffs) : c_(std::move(coeffs)) {
    if (c_.empty()) throw std::invalid_argument("HSeries order must be positive");
  }

  static HSeries constant(const Rational& q, std::size_t order) {
    HSeries s(order);
    s.c_[0] = q;
    return s;
  }
  /// q * h^k truncated to the given order.
  static HSeries monomial(const Rational& q, std::size_t k, std::size_t order) {
    HSeries s(order);
    if (k < order) s.c_[k] = q;
    return s;
  }

  std::size_t order() const { return c_.size(); }
  const Rational& operator[](std::size_t k) const { return c_[k]; }
  Rational& operator[](std::size_t k) { return c_[k]; }
  const std::vector<Rational>& coeffs() const { return c_; }

  bool is_zero() const {
    return std::all_of(c_.begin(), c_.end(), [](const Rational& q) { return sgn(q) == 0; });
  }
  bool is_unit() const { return !c_.empty() && sgn(c_[0]) != 0; }

  /// Lowest k with a nonzero coefficient, or order() for the zero series.
  std::size_t valuation() const {
    for (std::size_t k = 0; k < c_.size(); ++k)
      if (sgn(c_[k]) != 0) return k;
    return c_.size();
  }

  HSeries truncated(std::size_t order) const {
    HSeries out(std::min(order, c_.size()));
    for (std::size_t k = 0; k < out.order(); ++k) out.c_[k] = c_[k];
    return out;
  }

  /// Same coefficients at a larger (or smaller) order; new slots are zero.
  HSeries resized(std::size_t order) const {
    HSeries out(order);
    for (std::size_t k = 0; k < std::min(order, c_.size()); ++k) out.c_[k] = c_[k];
    return out;
  }

  HSeries& operator+=(const HSeries& o) {
    if (o.order() < order()) c_.resize(o.order());
    for (std::size_t k = 0; k < c_.size(); ++k) c_[k] += o.c_[k];
    return *this;
  }
  HSeries& operator-=(const HSeries& o) {
    if (o.order() < order()) c_.resize(o.order());
    for (std::size_t k = 0; k < c_.size(); ++k) c_[k] -= o.c_[k];
    return *this;
  }
  HSeries& operator*=(const Rational& q) {
    for (auto& x : c_) x *= q;
    return *this;
  }

  /// this += a * b, at the order of *this (a and b may be longer).
  void add_product(const HSeries& a, const HSeries& b) {
    const std::size_t n = std::min({order(), a.order(), b.order()});
    if (n < order()) c_.resize(n);
    Rational t;
    for (std::size_t i = 0; i < n; ++i) {
      if (sgn(a.c_[i]) == 0) continue;
      for (std::size_t j = 0; i + j < n; ++j) {
        if (sgn(b.c_[j]) == 0) continue;
        t = a.c_[i] * b.c_[j];
        c_[i + j] += t;
      }
    }
  }

  friend HSeries operator+(HSeries a, const HSeries& b) { return a += b; }
  friend HSeries operator-(HSeries a, const HSeries& b) { return a -= b; }
  friend HSeries operator*(HSeries a, const Rational& q) { return a *= q; }
  friend HSeries operator*(const Rational& q, HSeries a) { return a *= q; }
  HSeries operator-() const {
    HSeries out(*this);
    for (auto& x : out.c_) x = -x;
    return out;
  }
  friend HSeries operator*(const HSeries& a, const HSeries& b) {
    HSeries out(std::min(a.order(), b.order()));
    out.add_product(a, b);
    return out;
  }
  friend bool operator==(const HSeries& a, const HSeries& b) {
    const std::size_t n = std::min(a.order(), b.order());
    for (std::size_t k = 0; k < n; ++k)
      if (a.c_[k] != b.c_[k]) return false;
    return true;
  }

  /// Multiply by h^k (keeps the order).
  HSeries times_h(std::size_t k) const {
    HSeries out(order());
    for (std::size_t i = 0; i + k < order(); ++i) out.c_[i + k] = c_[i];
    return out;
  }

  /// Exact division by h^k. Order drops by k. Throws NotDivisible if any of
  /// the first k coefficients is nonzero.
  HSeries divided_by_h(std::size_t k = 1) const {
    if (k >= order()) throw NotDivisible("division by h^k leaves no coefficients");
    for (std::size_t i = 0; i < k; ++i)
      if (sgn(c_[i]) != 0) throw NotDivisible("HSeries not divisible by h");
    HSeries out(order() - k);
    for (std::size_t i = 0; i < out.order(); ++i) out.c_[i] = c_[i + k];
    return out;
  }

  std::string str() const {
    std::ostringstream os;
    bool first = true;
    for (std::size_t k = 0; k < c_.size(); ++k) {
      if (sgn(c_[k]) == 0) continue;
      if (!first) os << " + ";
      first = false;
      os << c_[k].get_str();
      if (k == 1) os << "*h";
      if (k > 1) os << "*h^" << k;
    }
    if (first) os << "0";
    os << " mod h^" << c_.size();
    return os.str();
  }

 private:
  std::vector<Rational> c_;
};

inline HSeries hseries_mul(const HSeries& a, const HSeries& b) { return a * b; }

/// Multiplicative inverse modulo h^N; throws NonUnit for a zero constant term.
inline HSeries hseries_inv(const HSeries& a) {
  if (!a.is_unit()) throw NonUnit();
  const std::size_t n = a.order();
  HSeries out(n);
  const Rational inv0 = 1 / a[0];
  out[0] = inv0;
  for (std::size_t k = 1; k < n; ++k) {
    Rational acc;
    for (std::size_t i = 1; i <= k; ++i) acc += a[i] * out[k - i];
    out[k] = -acc * inv0;
  }
  return out;
}

/// t(t-1)...(t-k+1)/k!, the coefficient of x^k in (1+x)^t.
inline Rational binom(const Rational& t, long k) {
  if (k < 0) return Rational(0);
  Rational out(1);
  for (long i = 0; i < k; ++i) {
    out *= (t - i);
    out /= (i + 1);
  }
  return out;
}

/// Checked half-integer exponent, as produced by powers of the grading
/// operators on lattice points.
class BinomExponent {
 public:
  explicit BinomExponent(Rational v) : value_(std::move(v)) {
    if (!is_integer(Rational(2 * value_)))
      throw std::domain_error("exponent is not a half-integer: " + value_.get_str());
  }
  const Rational& value() const { return value_; }

 private:
  Rational value_;
};

/// Coefficients of x^0..x^{K-1} in (1+x)^t.
inline std::vector<Rational> binom_coeffs(const Rational& t, long count) {
  std::vector<Rational> out;
  if (count <= 0) return out;
  out.reserve(count);
  Rational cur(1);
  out.push_back(cur);
  for (long k = 1; k < count; ++k) {
    cur *= (t - (k - 1));
    cur /= k;
    out.push_back(cur);
  }
  return out;
}

inline std::vector<Rational> binom_coeffs(const BinomExponent& t, long count) {
  return binom_coeffs(t.value(), count);
}

/// Laurent series in one variable u with HSeries coefficients. Only finitely
/// many terms are ever stored; producers document which range is complete.
class USeries {
 public:
  explicit USeries(std::size_t order = 1) : order_(order) {}

  std::size_t order() const { return order_; }
  const std::map<int, HSeries>& terms() const { return t_; }
  bool empty() const { return t_.empty(); }

  static USeries one(std::size_t order) {
    USeries s(order);
    s.t_.emplace(0, HSeries::constant(1, order));
    return s;
  }

  HSeries at(int p) const {
    auto it = t_.find(p);
    return it == t_.end() ? HSeries(order_) : it->second;
  }

  void add(int p, const HSeries& c) {
    auto it = t_.find(p);
    if (it == t_.end()) {
      if (!c.is_zero()) t_.emplace(p, c.truncated(order_));
      return;
    }
    it->second += c;
    if (it->second.is_zero()) t_.erase(it);
  }

  void add_monomial(int p, const Rational& q, std::size_t hk) {
    if (hk >= order_ || sgn(q) == 0) return;
    add(p, HSeries::monomial(q, hk, order_));
  }

  int min_exponent() const { return t_.empty() ? 0 : t_.begin()->first; }
  int max_exponent() const { return t_.empty() ? 0 : t_.rbegin()->first; }

  /// Product, dropping exponents above `cap`.
  USeries times(const USeries& o, int cap = INT_MAX_CAP) const {
    USeries out(std::min(order_, o.order_));
    for (const auto& [p, a] : t_) {
      for (const auto& [q, b] : o.t_) {
        if (p + q > cap) break;
        HSeries prod = a * b;
        out.add(p + q, prod);
      }
    }
    return out;
  }

  USeries scaled(const Rational& q) const {
    USeries out(order_);
    for (const auto& [p, c] : t_) out.add(p, c * q);
    return out;
  }

  friend bool operator==(const USeries& a, const USeries& b) {
    if (a.order_ != b.order_) return false;
    USeries d = a;
    for (const auto& [p, c] : b.t_) d.add(p, -c);
    return d.t_.empty();
  }

  static constexpr int INT_MAX_CAP = 1 << 29;

 private:
  std::size_t order_;
  std::map<int, HSeries> t_;
};

/// (u + c h)^r modulo h^N as (u-exponent -> HSeries). For r >= 0 the r+1
/// exponents r..0 are all present; for r < 0 the N exponents r..r-N+1.
inline std::map<int, HSeries> shifted_power(long r, const Rational& c, std::size_t order) {
  std::map<int, HSeries> out;
  const long count = r >= 0 ? r + 1 : static_cast<long>(order);
  const auto b = binom_coeffs(Rational(r), count);
  Rational cpow(1);
  for (long k = 0; k < count; ++k) {
    HSeries s(order);
    if (static_cast<std::size_t>(k) < order) s[k] = b[k] * cpow;
    out.emplace(static_cast<int>(r - k), std::move(s));
    cpow *= c;
  }
  return out;
}

inline USeries shifted_power_series(long r, const Rational& c, std::size_t order) {
  USeries s(order);
  for (auto& [p, h] : shifted_power(r, c, order)) s.add(p, h);
  return s;
}

/// (alpha*u + c*h)^r for alpha in {0,1}; with alpha = 0 this is the scalar
/// (c h)^r and requires r >= 0.
inline USeries linear_power_series(int alpha, long r, const Rational& c, std::size_t order) {
  if (alpha == 1) return shifted_power_series(r, c, order);
  if (r < 0) throw std::domain_error("negative power of a pure h term");
  USeries s(order);
  s.add_monomial(0, pow(c, r), r);
  return s;
}

/// Expansion of u^T * prod_i (1 + c_i h/u)^{t_i} where T = sum t_i must be an
/// integer; every (u + c h)^t is read as u^t (1 + c h/u)^t.
struct GradedBase {
  Rational c;
  Rational exponent;
};

inline USeries graded_product(const std::vector<GradedBase>& bases, std::size_t order) {
  Rational total;
  std::vector<Rational> x(order);  // coefficients of (h/u)^k
  x[0] = 1;
  for (const auto& b : bases) {
    total += b.exponent;
    if (sgn(b.exponent) == 0 || sgn(b.c) == 0) continue;
    const auto bc = binom_coeffs(b.exponent, static_cast<long>(order));
    std::vector<Rational> f(order);
    Rational cp(1);
    for (std::size_t k = 0; k < order; ++k) {
      f[k] = bc[k] * cp;
      cp *= b.c;
    }
    std::vector<Rational> next(order);
    for (std::size_t i = 0; i < order; ++i) {
      if (sgn(x[i]) == 0) continue;
      for (std::size_t j = 0; i + j < order; ++j) next[i + j] += x[i] * f[j];
    }
    x = std::move(next);
  }
  if (!is_integer(total))
    throw std::domain_error("graded factor has non-integral total u-exponent " + total.get_str());
  const long T = to_long(total);
  USeries s(order);
  for (std::size_t k = 0; k < order; ++k) s.add_monomial(static_cast<int>(T - static_cast<long>(k)), x[k], k);
  return s;
}

}  // namespace dyfock
