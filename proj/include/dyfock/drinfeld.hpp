#pragma once

// Action of the RTT generator series t_ij^±(u) on Fock vectors, rebuilt from
// the Drinfeld currents. With g = t11^-1 t12 and f = t21 t11^-1 at level 1,
//   X^+(u) = g^+(u - h/4) - g^-(u + h/4),   X^-(u) = f^+(u + h/4) - f^-(u - h/4),
// and g^+, f^+ carry only negative u-powers while g^-, f^- carry only
// nonnegative ones. Hence
//   g^+(u) = [X^+(u + h/4)]_{<0},   g^-(u) = -[X^+(u - h/4)]_{>=0},
//   f^+(u) = [X^-(u - h/4)]_{<0},   f^-(u) = -[X^-(u + h/4)]_{>=0},
// with X^± = h X_{±alpha}, and
//   t11 = k1, t12 = k1 g, t21 = f k1, t22 = k2 + f k1 g.

#include "dyfock/ops.hpp"

#include <functional>
#include <map>
#include <stdexcept>
#include <string>

namespace dyfock {

enum class Sign { plus, minus };

inline const char* sign_name(Sign s) { return s == Sign::plus ? "+" : "-"; }

/// Exponent -> vector; for Sign::plus every term (all exponents <= 0), for
/// Sign::minus every exponent in [0, hi].
using SeriesTerms = std::map<int, FockVector>;

/// A same-variable series operator.
using SeriesOp = std::function<SeriesTerms(const FockVector&, int hi)>;

namespace detail {

inline void terms_add(SeriesTerms& out, int p, const FockVector& v) {
  if (v.is_zero()) return;
  auto it = out.find(p);
  if (it == out.end()) {
    out.emplace(p, v);
    return;
  }
  it->second += v;
  if (it->second.is_zero()) out.erase(it);
}

inline SeriesOp spec_op(OperatorSpec spec, Sign sign, std::size_t N) {
  return [spec = std::move(spec), sign, N](const FockVector& v, int hi) {
    SeriesTerms out = expand(spec, v, sign == Sign::plus ? 0 : hi, N).terms;
    if (sign == Sign::minus)
      for (auto it = out.begin(); it != out.end();) it = it->first < 0 ? out.erase(it) : std::next(it);
    return out;
  };
}

/// The half of h * spec(u + c h) of the given sign, times `scale`.
inline SeriesOp half_op(OperatorSpec spec, const Rational& c, Sign sign, const Rational& scale, std::size_t N) {
  return [spec = spec.shifted(c), sign, scale, N](const FockVector& v, int hi) {
    SeriesTerms out;
    const Expansion e = expand(spec, v, sign == Sign::plus ? -1 : hi, N);
    for (const auto& [p, w] : e.terms) {
      if ((sign == Sign::plus) != (p < 0)) continue;
      FockVector x(N);
      x.add_scaled(w.times_h(1), scale);
      terms_add(out, p, x);
    }
    return out;
  };
}

/// (A B)(u) v, both series in the same variable; B acts first.
inline SeriesOp compose(SeriesOp a, SeriesOp b, Sign sign) {
  return [a = std::move(a), b = std::move(b), sign](const FockVector& v, int hi) {
    SeriesTerms out;
    for (const auto& [p, w] : b(v, hi)) {
      for (const auto& [q, x] : a(w, sign == Sign::plus ? hi : hi - p)) terms_add(out, p + q, x);
    }
    return out;
  };
}

inline SeriesOp sum(SeriesOp a, SeriesOp b) {
  return [a = std::move(a), b = std::move(b)](const FockVector& v, int hi) {
    SeriesTerms out = a(v, hi);
    for (const auto& [p, w] : b(v, hi)) terms_add(out, p, w);
    return out;
  };
}

}  // namespace detail

/// The series operator t_ij^sign(u) at truncation order N.
inline SeriesOp t_operator(int i, int j, Sign sign, Variant variant, std::size_t N) {
  if (i < 1 || i > 2 || j < 1 || j > 2) throw std::invalid_argument("t_ij needs i, j in {1, 2}");
  using namespace detail;
  const bool plus = sign == Sign::plus;
  const Rational quarter = make_rational(1, 4);
  const SeriesOp k1 = spec_op(catalog(plus ? "k1_plus" : "k1_minus", variant), sign, N);
  const SeriesOp k2 = spec_op(catalog(plus ? "k2_plus" : "k2_minus", variant), sign, N);
  const Rational one = plus ? Rational(1) : Rational(-1);
  const SeriesOp g = half_op(catalog("X_alpha", variant), plus ? quarter : -quarter, sign, one, N);
  const SeriesOp f = half_op(catalog("X_malpha", variant), plus ? -quarter : quarter, sign, one, N);
  if (i == 1 && j == 1) return k1;
  if (i == 1 && j == 2) return compose(k1, g, sign);
  if (i == 2 && j == 1) return compose(f, k1, sign);
  return sum(k2, compose(f, compose(k1, g, sign), sign));
}

/// Windowed coefficients of t_ij^sign(u) v on [lo, hi].
inline USeriesVector t_action(int i, int j, Sign sign, const FockVector& v, int lo, int hi, std::size_t N,
                              Variant variant = Variant::norm, const std::string& var = "u") {
  if (lo > hi) throw std::invalid_argument("empty window");
  const SeriesTerms terms = t_operator(i, j, sign, variant, N)(v.truncated(N), hi);
  USeriesVector out({var}, {{lo, hi}}, N);
  bool below_empty = true;
  for (const auto& [p, w] : terms) {
    if (p < lo) below_empty = false;
    else if (p <= hi) out.add({p}, w);
  }
  out.below_window_empty[0] = below_empty;
  return out;
}

}  // namespace dyfock
