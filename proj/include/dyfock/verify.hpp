#pragma once

// Coefficient-wise verification of operator identities on finite windows.

#include "dyfock/drinfeld.hpp"
#include "dyfock/ops.hpp"

#include <array>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace dyfock {

struct CheckReport {
  std::string relation;
  std::map<std::string, std::string> params;
  bool passed = true;
  std::size_t discrepancy_count = 0;
  std::string first_discrepancy;
  std::string convention;
  std::size_t cells_checked = 0;

  void fail(const std::string& where) {
    passed = false;
    if (discrepancy_count++ == 0) first_discrepancy = where;
  }
  void merge(const CheckReport& o) {
    cells_checked += o.cells_checked;
    if (!o.passed) {
      if (passed) first_discrepancy = o.first_discrepancy;
      passed = false;
    }
    discrepancy_count += o.discrepancy_count;
  }
};

/// Two-variable coefficient array (u-exponent, v-exponent) -> vector.
using Grid2 = std::map<std::pair<int, int>, FockVector>;

/// Fixed test vectors: both vacua, e^(+-alpha), single modes a_j(-r) with
/// r <= 3, and one mixed weight-4 vector, all at order N.
inline std::vector<FockVector> battery(std::size_t N) {
  std::vector<FockVector> out;
  out.push_back(FockVector::vacuum(0, N));
  out.push_back(FockVector::vacuum(1, N));
  out.push_back(FockVector::basis(LatticePoint::make(0, 1), AMonomial(), N));
  out.push_back(FockVector::basis(LatticePoint::make(0, -1), AMonomial(), N));
  for (int j = 1; j <= 2; ++j)
    for (int r = 1; r <= 3; ++r) out.push_back(FockVector::basis(LatticePoint::make(0, 0), AMonomial::from_modes({{j, r}}), N));
  out.push_back(FockVector::basis(LatticePoint::make(1, 0), AMonomial::from_modes({{1, 1}, {2, 3}}), N));
  return out;
}

/// Seeded random vectors for the property checks.
inline std::vector<FockVector> random_battery(std::uint64_t seed, std::size_t count, std::size_t N) {
  std::vector<FockVector> out;
  for (std::size_t k = 0; k < count; ++k)
    out.push_back(random_vector(seed + k, static_cast<int>(k % 2), N, 3, 3, 1));
  return out;
}

namespace detail {

inline void grid_add(Grid2& g, int a, int b, const FockVector& v) {
  if (v.is_zero()) return;
  auto it = g.find({a, b});
  if (it == g.end()) {
    g.emplace(std::make_pair(a, b), v);
    return;
  }
  it->second += v;
  if (it->second.is_zero()) g.erase(it);
}

inline FockVector grid_at(const Grid2& g, int a, int b, std::size_t N) {
  auto it = g.find({a, b});
  return it == g.end() ? FockVector(N) : it->second;
}

}  // namespace detail

/// (cu u + cv v + ch h) * S.
inline Grid2 mul_linear(const Grid2& s, const Rational& cu, const Rational& cv, const Rational& ch, std::size_t N) {
  Grid2 out;
  const HSeries hc = HSeries::monomial(ch, 1, N);
  for (const auto& [e, v] : s) {
    if (sgn(cu) != 0) {
      FockVector w(N);
      w.add_scaled(v, cu);
      detail::grid_add(out, e.first + 1, e.second, w);
    }
    if (sgn(cv) != 0) {
      FockVector w(N);
      w.add_scaled(v, cv);
      detail::grid_add(out, e.first, e.second + 1, w);
    }
    if (sgn(ch) != 0) {
      FockVector w(N);
      w.add_scaled(v, hc);
      detail::grid_add(out, e.first, e.second, w);
    }
  }
  return out;
}

inline Grid2 grid_sum(Grid2 a, const Grid2& b, const Rational& scale = Rational(1)) {
  for (const auto& [e, v] : b) {
    FockVector w(v.order());
    w.add_scaled(v, scale);
    detail::grid_add(a, e.first, e.second, w);
  }
  return a;
}

/// Compares two grids on the box [alo, ahi] x [blo, bhi].
inline void compare_grids(CheckReport& rep, const Grid2& lhs, const Grid2& rhs, int alo, int ahi, int blo, int bhi,
                          const std::string& tag) {
  for (int a = alo; a <= ahi; ++a) {
    for (int b = blo; b <= bhi; ++b) {
      ++rep.cells_checked;
      const std::size_t N = !lhs.empty() ? lhs.begin()->second.order() : (!rhs.empty() ? rhs.begin()->second.order() : 1);
      if (!(detail::grid_at(lhs, a, b, N) == detail::grid_at(rhs, a, b, N))) {
        std::ostringstream os;
        os << tag << " at u^" << a << " v^" << b;
        rep.fail(os.str());
      }
    }
  }
}

/// Compares two one-variable term maps on [lo, hi].
inline void compare_terms(CheckReport& rep, const SeriesTerms& lhs, const SeriesTerms& rhs, int lo, int hi,
                          std::size_t N, const std::string& tag) {
  for (int p = lo; p <= hi; ++p) {
    ++rep.cells_checked;
    auto l = lhs.find(p), r = rhs.find(p);
    const FockVector a = l == lhs.end() ? FockVector(N) : l->second;
    const FockVector b = r == rhs.end() ? FockVector(N) : r->second;
    if (!(a == b)) rep.fail(tag + " at u^" + std::to_string(p));
  }
}

/// B(v) then A(u): (a, b) -> coefficient of u^a v^b in A(u) B(v) x. Each
/// operator returns exponent -> vector; `hi_a`/`hi_b` bound what is requested.
inline Grid2 product_grid(const SeriesOp& a, const SeriesOp& b, const FockVector& x, int hi_a, int hi_b) {
  Grid2 out;
  for (const auto& [q, w] : b(x, hi_b)) {
    if (q > hi_b) continue;
    for (const auto& [p, y] : a(w, hi_a))
      if (p <= hi_a) detail::grid_add(out, p, q, y);
  }
  return out;
}

/// The same product with the roles of the variables swapped: A(v) then B(u),
/// stored as (u-exponent, v-exponent).
inline Grid2 product_grid_swapped(const SeriesOp& first_u, const SeriesOp& then_v, const FockVector& x, int hi_u,
                                  int hi_v) {
  Grid2 out;
  for (const auto& [p, w] : first_u(x, hi_u)) {
    if (p > hi_u) continue;
    for (const auto& [q, y] : then_v(w, hi_v))
      if (q <= hi_v) detail::grid_add(out, p, q, y);
  }
  return out;
}

enum class RttPattern { pp, mm, pm };

inline const char* rtt_pattern_name(RttPattern p) {
  switch (p) {
    case RttPattern::pp: return "++";
    case RttPattern::mm: return "--";
    case RttPattern::pm: return "+-";
  }
  return "?";
}

/// The 16 entry identities of the RTT relation, cross-multiplied by the
/// denominators of the R-matrices:
///   same sign: (u-v) t_ij(u) t_kl(v) + h t_kj(u) t_il(v)
///            = (u-v) t_kl(v) t_ij(u) + h t_kj(v) t_il(u)
///   mixed:     (u-v+3h/2) [ (u-v-h/2) t+_ij(u) t-_kl(v) + h t+_kj(u) t-_il(v) ]
///            = (u-v+h/2) [ (u-v+h/2) t-_kl(v) t+_ij(u) + h t-_kj(v) t+_il(u) ]
inline CheckReport check_rtt(RttPattern pattern, const std::vector<FockVector>& vectors, int lo, int hi,
                             std::size_t N, Variant variant) {
  CheckReport rep;
  rep.relation = "rtt";
  rep.params = {{"pattern", rtt_pattern_name(pattern)}, {"variant", variant_name(variant)},
                {"window", std::to_string(lo) + ":" + std::to_string(hi)}, {"order", std::to_string(N)}};
  rep.convention = "cross-multiplied polynomial form";
  const Sign su = pattern == RttPattern::mm ? Sign::minus : Sign::plus;
  const Sign sv = pattern == RttPattern::pp ? Sign::plus : Sign::minus;
  std::array<std::array<SeriesOp, 2>, 2> tu, tv;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      tu[i][j] = t_operator(i + 1, j + 1, su, variant, N);
      tv[i][j] = t_operator(i + 1, j + 1, sv, variant, N);
    }
  // products need exponents up to hi + 2 before the polynomial prefactors lower nothing
  const int H = hi;
  const Rational one(1), zero(0);
  for (std::size_t vi = 0; vi < vectors.size(); ++vi) {
    const FockVector x = vectors[vi].truncated(N);
    // uv[i][j][k][l] = t_ij(u) t_kl(v) x ; vu = t_kl(v) t_ij(u) x
    std::map<std::array<int, 4>, Grid2> uv, vu;
    auto get_uv = [&](int i, int j, int k, int l) -> const Grid2& {
      auto key = std::array<int, 4>{i, j, k, l};
      auto it = uv.find(key);
      if (it == uv.end()) it = uv.emplace(key, product_grid(tu[i][j], tv[k][l], x, H, H)).first;
      return it->second;
    };
    auto get_vu = [&](int i, int j, int k, int l) -> const Grid2& {
      auto key = std::array<int, 4>{i, j, k, l};
      auto it = vu.find(key);
      if (it == vu.end()) it = vu.emplace(key, product_grid_swapped(tu[i][j], tv[k][l], x, H, H)).first;
      return it->second;
    };
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k)
          for (int l = 0; l < 2; ++l) {
            Grid2 lhs, rhs;
            if (pattern != RttPattern::pm) {
              lhs = grid_sum(mul_linear(get_uv(i, j, k, l), one, -one, zero, N),
                             mul_linear(get_uv(k, j, i, l), zero, zero, one, N));
              rhs = grid_sum(mul_linear(get_vu(i, j, k, l), one, -one, zero, N),
                             mul_linear(get_vu(i, l, k, j), zero, zero, one, N));
            } else {
              const Grid2 inner_l = grid_sum(mul_linear(get_uv(i, j, k, l), one, -one, make_rational(-1, 2), N),
                                             mul_linear(get_uv(k, j, i, l), zero, zero, one, N));
              lhs = mul_linear(inner_l, one, -one, make_rational(3, 2), N);
              const Grid2 inner_r = grid_sum(mul_linear(get_vu(i, j, k, l), one, -one, make_rational(1, 2), N),
                                             mul_linear(get_vu(i, l, k, j), zero, zero, one, N));
              rhs = mul_linear(inner_r, one, -one, make_rational(1, 2), N);
            }
            std::ostringstream tag;
            tag << "vector " << vi << " entry (" << i + 1 << j + 1 << "," << k + 1 << l + 1 << ")";
            compare_grids(rep, lhs, rhs, lo, hi, lo, hi, tag.str());
          }
  }
  return rep;
}


/// Windowed coefficients of delta(u - v - c h) = sum_r u^(-r-1) (v + c h)^r.
struct DeltaSeries {
  Rational c;
  std::pair<int, int> window_u, window_v;
  std::size_t order = 1;
  std::map<std::pair<int, int>, HSeries> coeffs;

  HSeries at(int a, int b) const {
    auto it = coeffs.find({a, b});
    return it == coeffs.end() ? HSeries(order) : it->second;
  }
};

/// Coefficient of u^a v^b in delta(u - v - c h): with r = -a-1 and k = r-b,
/// binom(r, k) (c h)^k when 0 <= k < N.
inline HSeries delta_coefficient(const Rational& c, int a, int b, std::size_t N) {
  const long r = -static_cast<long>(a) - 1;
  const long k = r - b;
  if (k < 0 || k >= static_cast<long>(N)) return HSeries(N);
  return HSeries::monomial(binom(Rational(r), k) * pow(c, static_cast<unsigned long>(k)), static_cast<std::size_t>(k), N);
}

inline DeltaSeries delta_expand(const Rational& c, std::pair<int, int> wu, std::pair<int, int> wv, std::size_t N) {
  DeltaSeries d{c, wu, wv, N, {}};
  for (int a = wu.first; a <= wu.second; ++a)
    for (int b = wv.first; b <= wv.second; ++b) {
      HSeries x = delta_coefficient(c, a, b, N);
      if (!x.is_zero()) d.coeffs.emplace(std::make_pair(a, b), std::move(x));
    }
  return d;
}

namespace detail {

inline SeriesOp full_op(OperatorSpec spec, std::size_t N) {
  return [spec = std::move(spec), N](const FockVector& v, int hi) { return expand(spec, v, hi, N).terms; };
}

inline FockVector term_at(const SeriesTerms& t, int p, std::size_t N) {
  auto it = t.find(p);
  return it == t.end() ? FockVector(N) : it->second;
}

}  // namespace detail

/// [X_alpha(u), X_-alpha(v)] = (1/h) ( delta(u-v-h/2) k2+(u-h/4) k1+(u-h/4)^-1
///                                  - delta(u-v+h/2) k2-(v-h/4) k1-(v-h/4)^-1 ).
/// The right side is formed at order N+1 and divided by h exactly.
inline CheckReport check_jps1(const std::vector<FockVector>& vectors, int lo, int hi, std::size_t N,
                              Variant variant = Variant::norm) {
  CheckReport rep;
  rep.relation = "jps1";
  rep.params = {{"variant", variant_name(variant)},
                {"window", std::to_string(lo) + ":" + std::to_string(hi)},
                {"order", std::to_string(N)}};
  rep.convention = "delta expanded as sum_r u^(-r-1) (v + c h)^r";
  const std::size_t N1 = N + 1;
  const SeriesOp xa = detail::full_op(catalog("X_alpha", variant), N);
  const SeriesOp xm = detail::full_op(catalog("X_malpha", variant), N);
  const Rational q = make_rational(-1, 4);
  const OperatorSpec kp =
      catalog("k2_plus", variant).shifted(q).then_after(catalog("k1_plus", variant).shifted(q).inverse());
  const OperatorSpec km =
      catalog("k2_minus", variant).shifted(q).then_after(catalog("k1_minus", variant).shifted(q).inverse());
  for (std::size_t vi = 0; vi < vectors.size(); ++vi) {
    if (vectors[vi].order() < N1) throw std::invalid_argument("check_jps1 needs vectors of order N+1");
    const FockVector x1 = vectors[vi].truncated(N1);
    const FockVector x = vectors[vi].truncated(N);
    const Grid2 lhs = grid_sum(product_grid(xa, xm, x, hi, hi), product_grid_swapped(xa, xm, x, hi, hi), Rational(-1));
    const SeriesTerms A = expand(kp, x1, 0, N1).terms;
    const SeriesTerms B = expand(km, x1, 2 * hi + 1 + static_cast<int>(N1), N1).terms;
    Grid2 rhs;
    for (int a = lo; a <= hi; ++a) {
      for (int b = lo; b <= hi; ++b) {
        FockVector acc(N1);
        for (long k = 0; k < static_cast<long>(N1); ++k) {
          const long r = b + k;
          const HSeries d = HSeries::monomial(binom(Rational(r), k) * pow(make_rational(1, 2), k), k, N1);
          acc.add_scaled(detail::term_at(A, static_cast<int>(a + r + 1), N1), d);
          const long r2 = -static_cast<long>(a) - 1;
          const HSeries d2 = HSeries::monomial(binom(Rational(r2), k) * pow(make_rational(-1, 2), k), k, N1);
          FockVector bq = detail::term_at(B, static_cast<int>(b - r2 + k), N1);
          acc.add_scaled(bq, -d2);
        }
        FockVector divided(N);
        try {
          divided = acc.divided_by_h();
        } catch (const NotDivisible&) {
          throw NotDivisible("jps1 right side not divisible by h at u^" + std::to_string(a) + " v^" +
                             std::to_string(b));
        }
        detail::grid_add(rhs, a, b, divided);
      }
    }
    compare_grids(rep, lhs, rhs, lo, hi, lo, hi, "vector " + std::to_string(vi));
  }
  return rep;
}


/// Lower bound on the u-exponents of Xbar(u) Xbar(v) x mod h^N, read off the
/// factorisation f(u,v) Xbar(u,v) with f a polynomial: annihilators give
/// u^(-r) with r at most the weight, each power of h lowers by at most one,
/// and the grading contributes u^(d_alpha).
inline int xbar_pair_lower_bound(const FockVector& x, std::size_t N) {
  int lo = INT_MAX;
  for (const auto& [mu, terms] : x.data()) {
    const Rational d = graded_eigenvalue(Graded::dalpha, mu);
    int w = 0;
    for (const auto& [m, c] : terms) w = std::max(w, m.weight());
    lo = std::min(lo, static_cast<int>(to_long(d)) - w - static_cast<int>(N) + 1);
  }
  return lo == INT_MAX ? 0 : lo;
}

/// Xbar(u) Xbar(v) = Xbar(v) Xbar(u) on [lo, hi]^2, and Xbar(u) Xbar(u +- h) = 0
/// for u-exponents in [lo, hi].
inline CheckReport check_comm_int(const std::vector<FockVector>& vectors, int lo, int hi, std::size_t N) {
  CheckReport rep;
  rep.relation = "comm_int";
  rep.params = {{"window", std::to_string(lo) + ":" + std::to_string(hi)}, {"order", std::to_string(N)}};
  rep.convention = "symmetry compared on the box; substitution by shifted_power re-expansion";
  const OperatorSpec xb = catalog("Xbar", Variant::norm);
  const int n1 = static_cast<int>(N) - 1;
  const int T = hi + n1;
  for (std::size_t vi = 0; vi < vectors.size(); ++vi) {
    const FockVector x = vectors[vi].truncated(N);
    const std::string tag = "vector " + std::to_string(vi);
    const int bound = xbar_pair_lower_bound(x, N);
    const Expansion ev = expand(xb, x, std::max(hi, T - bound), N);
    const int B0 = std::min(ev.lowest, bound);
    const int A0 = bound;
    USeriesVector sv({"u", "v"}, {{A0, T - B0}, {B0, T - A0}}, N);
    sv.total_cap = T;
    sv.below_window_empty = {true, true};
    Grid2 box;
    for (const auto& [b, w] : ev.terms) {
      const int cap = b >= lo && b <= hi ? std::max(T - b, hi) : T - b;
      const Expansion eu = expand(xb, w, cap, N);
      for (const auto& [a, y] : eu.terms) {
        if (a < A0) {
          rep.fail(tag + ": u-exponent below the certified bound");
          continue;
        }
        if (a + b <= T) sv.add({a, b}, y);
        if (a >= lo && a <= hi && b >= lo && b <= hi) detail::grid_add(box, a, b, y);
      }
    }
    Grid2 swapped;
    for (const auto& [e, y] : box) swapped.emplace(std::make_pair(e.second, e.first), y);
    compare_grids(rep, box, swapped, lo, hi, lo, hi, tag + " symmetry");
    for (int sgn_c : {1, -1}) {
      const USeriesVector sub = substitute_shift(sv, "v", "u", Rational(sgn_c), A0, B0);
      if (sub.window[0].second < hi) {
        rep.fail(tag + ": substitution window too small");
        continue;
      }
      for (int m = lo; m <= hi; ++m) {
        ++rep.cells_checked;
        if (!sub.at({m}).is_zero())
          rep.fail(tag + (sgn_c > 0 ? " v->u+h" : " v->u-h") + " at u^" + std::to_string(m));
      }
    }
  }
  return rep;
}


/// One linear factor cu u + cv v + ch h of a polynomial prefactor.
struct Linear {
  Rational cu, cv, ch;
};

inline Grid2 mul_poly(Grid2 s, const std::vector<Linear>& factors, std::size_t N) {
  for (const auto& f : factors) s = mul_linear(s, f.cu, f.cv, f.ch, N);
  return s;
}

/// (u + c h)^k as k copies of a linear factor.
inline std::vector<Linear> u_power(const Rational& c, long k) {
  return std::vector<Linear>(static_cast<std::size_t>(std::max(k, 0L)), Linear{Rational(1), Rational(0), c});
}

inline std::vector<Linear> concat(std::vector<Linear> a, const std::vector<Linear>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

/// The series operator followed by the lattice shift e^d.
inline SeriesOp then_shift(SeriesOp op, Displacement d) {
  return [op = std::move(op), d](const FockVector& v, int hi) {
    SeriesTerms t = op(v, hi);
    for (auto& [p, w] : t) w = apply_lattice_shift(d, w);
    return t;
  };
}

/// Places a one-variable series in the v column: (0, q) -> coefficient.
inline Grid2 v_column(const SeriesTerms& t) {
  Grid2 g;
  for (const auto& [q, w] : t) detail::grid_add(g, 0, q, w);
  return g;
}

/// Multiplies a one-variable series by a u-series.
inline SeriesTerms mul_series(const USeries& f, const SeriesTerms& t, std::size_t N) {
  SeriesTerms out;
  for (const auto& [p, w] : t)
    for (const auto& [q, hs] : f.terms()) {
      FockVector x(N);
      x.add_scaled(w, hs);
      detail::terms_add(out, p + q, x);
    }
  return out;
}

enum class Exchange { e_plus_e_minus, e_zero_e_zero, ebar_plus_e_minus, ebar_zero_e_zero };

inline const char* exchange_name(Exchange e) {
  switch (e) {
    case Exchange::e_plus_e_minus: return "E+E-";
    case Exchange::e_zero_e_zero: return "E0E0";
    case Exchange::ebar_plus_e_minus: return "Ebar+E-";
    case Exchange::ebar_zero_e_zero: return "Ebar0E0";
  }
  return "?";
}

/// Exchange relations A(u) B(v) = f(u, v) B(v) A(u), cross-multiplied to
/// P A(u) B(v) = Q B(v) A(u) with polynomials P, Q:
///   E+(u) E-(v):    (u+h/4)^2         | (u-v)(u-v+h)
///   E0(u) E0(v):    (v+h/4)^2         | (u+h/4)^2
///   Ebar+(u) E-(v): (u-v)(u-7h/4)     | (u-v-h)(u+h/4)
///   Ebar0(u) E0(v): u                 | u-h
inline CheckReport check_exchange(Exchange which, const std::vector<FockVector>& vectors, int lo, int hi,
                                  std::size_t N) {
  CheckReport rep;
  rep.relation = std::string("exchange ") + exchange_name(which);
  rep.params = {{"window", std::to_string(lo) + ":" + std::to_string(hi)}, {"order", std::to_string(N)}};
  rep.convention = "cross-multiplied polynomial form";
  const Rational one(1), zero(0), q4 = make_rational(1, 4);
  std::string a, b;
  std::vector<Linear> P, Q;
  switch (which) {
    case Exchange::e_plus_e_minus:
      a = "E_plus", b = "E_minus";
      P = {{one, zero, q4}, {one, zero, q4}};
      Q = {{one, -one, zero}, {one, -one, one}};
      break;
    case Exchange::e_zero_e_zero:
      a = "E_zero", b = "E_zero";
      P = {{zero, one, q4}, {zero, one, q4}};
      Q = {{one, zero, q4}, {one, zero, q4}};
      break;
    case Exchange::ebar_plus_e_minus:
      a = "Ebar_plus", b = "E_minus";
      P = {{one, -one, zero}, {one, zero, make_rational(-7, 4)}};
      Q = {{one, -one, -one}, {one, zero, q4}};
      break;
    case Exchange::ebar_zero_e_zero:
      a = "Ebar_zero", b = "E_zero";
      P = {{one, zero, zero}};
      Q = {{one, zero, -one}};
      break;
  }
  const SeriesOp A = detail::full_op(catalog(a, Variant::norm), N);
  const SeriesOp B = detail::full_op(catalog(b, Variant::norm), N);
  for (std::size_t vi = 0; vi < vectors.size(); ++vi) {
    const FockVector x = vectors[vi].truncated(N);
    const Grid2 lhs = mul_poly(product_grid(A, B, x, hi, hi), P, N);
    const Grid2 rhs = mul_poly(product_grid_swapped(A, B, x, hi, hi), Q, N);
    compare_grids(rep, lhs, rhs, lo, hi, lo, hi, "vector " + std::to_string(vi));
  }
  return rep;
}

enum class Closure { e_plus, cal_e_minus, x_malpha, lambda1 };

inline const char* closure_name(Closure c) {
  switch (c) {
    case Closure::e_plus: return "E+ on e^(k alpha) X(v) 1";
    case Closure::cal_e_minus: return "calE- on e^(k alpha) X(v) 1";
    case Closure::x_malpha: return "X_-alpha on e^(k alpha) X(v) 1";
    case Closure::lambda1: return "commutation with e^lambda1";
  }
  return "?";
}

namespace detail {

/// e^(k alpha) X_alpha(v) 1 in sector i as a v-series up to v^hi.
inline SeriesTerms charged_current(int sector, long k, int hi, std::size_t N) {
  const SeriesOp X = then_shift(full_op(catalog("X_alpha", Variant::norm), N), Displacement::alpha(k));
  return X(FockVector::vacuum(sector, N), hi);
}

}  // namespace detail

/// Exchange identities on e^(k alpha) X_alpha(v) 1, k in `charges`, both sectors:
///   E+(u) w = (1 - v/u)(1 - v/(u+h)) w,
///   (v-u)(v-u+h) calE-(u) e^(k alpha) X(v) 1 = e^((k-1) alpha) X(v) X(u) 1,
///   X_-alpha(u) e^(k alpha) X(v) 1 = F calE-(u+h/2)^-1 e^((k-1) alpha) X(v) 1 with
///     F = (u-h/2)^-k (u+h/2)^-k (u-v-h/2)^-1 (u-v+h/2)^-1,
/// all cross-multiplied, in sector 0. Closure::lambda1 checks the four relations of the
/// currents with e^lambda1 on the sector-0 vectors in `vectors`.
inline CheckReport check_closure(Closure which, const std::vector<long>& charges, const std::vector<FockVector>& vectors,
                                 int lo, int hi, std::size_t N) {
  CheckReport rep;
  rep.relation = std::string("closure ") + closure_name(which);
  rep.params = {{"window", std::to_string(lo) + ":" + std::to_string(hi)}, {"order", std::to_string(N)}};
  rep.convention = "cross-multiplied polynomial form";
  const Rational one(1), zero(0), half = make_rational(1, 2);
  using detail::full_op;
  if (which == Closure::lambda1) {
    struct Rel {
      const char* op;
      std::vector<GradedBase> factor;
    };
    const std::vector<Rel> rels = {
        {"X_alpha", {{zero, half}, {one, half}}},
        {"X_malpha", {{-half, -half}, {half, -half}}},
        {"H_plus", {{make_rational(7, 4), half}, {make_rational(-1, 4), -half}}},
        {"H_minus", {}},
    };
    const Displacement l1 = Displacement::lambda1();
    for (const auto& rel : rels) {
      const OperatorSpec spec = catalog(rel.op, Variant::norm);
      const USeries f = graded_product(rel.factor, N);
      for (std::size_t vi = 0; vi < vectors.size(); ++vi) {
        const FockVector x = vectors[vi].truncated(N);
        const SeriesTerms lhs = expand(spec, apply_lattice_shift(l1, x), hi, N).terms;
        SeriesTerms moved = expand(spec, x, hi - f.min_exponent(), N).terms;
        for (auto& [p, w] : moved) w = apply_lattice_shift(l1, w);
        compare_terms(rep, lhs, mul_series(f, moved, N), lo, hi, N,
                      std::string(rel.op) + " vector " + std::to_string(vi));
      }
    }
    return rep;
  }
  const int sector = 0;
  {
    for (long k : charges) {
      const std::string tag = "sector " + std::to_string(sector) + " k=" + std::to_string(k);
      const SeriesTerms w = detail::charged_current(sector, k, hi, N);
      Grid2 lhs, rhs;
      if (which == Closure::e_plus) {
        const SeriesOp E = full_op(catalog("E_plus", Variant::norm), N);
        for (const auto& [q, y] : w)
          for (const auto& [p, z] : E(y, hi)) detail::grid_add(lhs, p, q, z);
        lhs = mul_poly(lhs, {{one, zero, zero}, {one, zero, one}}, N);
        rhs = mul_poly(v_column(w), {{one, -one, zero}, {one, -one, one}}, N);
      } else if (which == Closure::cal_e_minus) {
        const SeriesOp E = full_op(catalog("cal_E_minus", Variant::norm), N);
        for (const auto& [q, y] : w)
          for (const auto& [p, z] : E(y, hi)) detail::grid_add(lhs, p, q, z);
        lhs = mul_poly(lhs, {{-one, one, zero}, {-one, one, one}}, N);
        const SeriesOp X = full_op(catalog("X_alpha", Variant::norm), N);
        rhs = product_grid_swapped(X, then_shift(X, Displacement::alpha(k - 1)), FockVector::vacuum(sector, N), hi,
                                   hi);
      } else {
        const SeriesOp Xm = full_op(catalog("X_malpha", Variant::norm), N);
        const SeriesOp Einv = full_op(catalog("cal_E_minus", Variant::norm).shifted(half).inverse(), N);
        const SeriesTerms w1 = detail::charged_current(sector, k - 1, hi, N);
        // lhs = X_-alpha(u) w and rhs = calE-(u+h/2)^-1 w1
        for (const auto& [q, y] : w)
          for (const auto& [p, z] : Xm(y, hi)) detail::grid_add(lhs, p, q, z);
        for (const auto& [q, y] : w1)
          for (const auto& [p, z] : Einv(y, hi)) detail::grid_add(rhs, p, q, z);
        const std::vector<Linear> pair = {{one, -one, -half}, {one, -one, half}};
        const std::vector<Linear> charge = concat(u_power(-half, std::labs(k)), u_power(half, std::labs(k)));
        lhs = mul_poly(lhs, k >= 0 ? concat(pair, charge) : pair, N);
        if (k < 0) rhs = mul_poly(rhs, charge, N);
      }
      compare_grids(rep, lhs, rhs, lo, hi, lo, hi, tag);
    }
  }
  return rep;
}

/// X~(u2) X~(u1) 1 = (1 + h/u2)^-1 X(u2) X(u1) 1 as (u+h) X~X~ 1 = u X X 1 in
/// sector 0; x~(-1) 1 = e^alpha 1 and x~(1-i) e^(lambda_i - alpha) 1 = e^(lambda_i) 1;
/// X~(u) e^-alpha = e^-alpha X~(u) u^-2 on `vectors`.
inline CheckReport check_translation(const std::vector<FockVector>& vectors, int lo, int hi, std::size_t N) {
  CheckReport rep;
  rep.relation = "translation";
  rep.params = {{"window", std::to_string(lo) + ":" + std::to_string(hi)}, {"order", std::to_string(N)}};
  rep.convention = "cross-multiplied polynomial form; modes x~(r) = coefficient of u^(-r-1)";
  const Rational one(1), zero(0);
  const OperatorSpec xt = catalog("Xtilde", Variant::norm);
  const SeriesOp Xt = detail::full_op(xt, N);
  const SeriesOp X = detail::full_op(catalog("X_alpha", Variant::norm), N);
  for (int sector : {0, 1}) {
    const FockVector vac = FockVector::vacuum(sector, N);
    const std::string tag = "sector " + std::to_string(sector);
    if (sector == 0) {
      const Grid2 lhs = mul_poly(product_grid(Xt, Xt, vac, hi, hi), {{one, zero, one}}, N);
      const Grid2 rhs = mul_poly(product_grid(X, X, vac, hi, hi), {{one, zero, zero}}, N);
      compare_grids(rep, lhs, rhs, lo, hi, lo, hi, tag + " product");
    }
    // x~(1-i) applied to e^(lambda_i - alpha) 1 is the u^(i-2) coefficient
    const FockVector seed = FockVector::basis(LatticePoint::make(sector, -1), AMonomial(), N);
    const int p = sector - 2;
    ++rep.cells_checked;
    if (!(detail::term_at(Xt(seed, p), p, N) == FockVector::basis(LatticePoint::make(sector, 0), AMonomial(), N)))
      rep.fail(tag + " seed mode");
  }
  ++rep.cells_checked;
  if (!(detail::term_at(Xt(FockVector::vacuum(0, N), 0), 0, N) ==
        FockVector::basis(LatticePoint::make(0, 1), AMonomial(), N)))
    rep.fail("x~(-1) 1");
  const Displacement ma = Displacement::alpha(-1);
  for (std::size_t vi = 0; vi < vectors.size(); ++vi) {
    const FockVector x = vectors[vi].truncated(N);
    const SeriesTerms lhs = Xt(apply_lattice_shift(ma, x), hi);
    SeriesTerms rhs;
    for (const auto& [p, w] : Xt(x, hi + 2)) detail::terms_add(rhs, p - 2, apply_lattice_shift(ma, w));
    compare_terms(rep, lhs, rhs, lo, hi, N, "e^-alpha vector " + std::to_string(vi));
  }
  return rep;
}

/// K(u) K(v) = K(v) K(u) for each sign, and
///   (u-v-3h/2)(u-v+3h/2) K+(u) K-(v) = (u-v-h/2)(u-v+h/2) K-(v) K+(u).
inline CheckReport check_heisenberg(const std::vector<FockVector>& vectors, int lo, int hi, std::size_t N) {
  CheckReport rep;
  rep.relation = "heisenberg";
  rep.params = {{"window", std::to_string(lo) + ":" + std::to_string(hi)}, {"order", std::to_string(N)}};
  rep.convention = "cross-multiplied polynomial form";
  const Rational one(1), zero(0), half = make_rational(1, 2), three_half = make_rational(3, 2);
  const SeriesOp Kp = detail::full_op(catalog("K_plus", Variant::norm), N);
  const SeriesOp Km = detail::full_op(catalog("K_minus", Variant::norm), N);
  for (std::size_t vi = 0; vi < vectors.size(); ++vi) {
    const FockVector x = vectors[vi].truncated(N);
    const std::string tag = "vector " + std::to_string(vi);
    compare_grids(rep, product_grid(Kp, Kp, x, hi, hi), product_grid_swapped(Kp, Kp, x, hi, hi), lo, hi, lo, hi,
                  tag + " ++");
    compare_grids(rep, product_grid(Km, Km, x, hi, hi), product_grid_swapped(Km, Km, x, hi, hi), lo, hi, lo, hi,
                  tag + " --");
    const Grid2 lhs = mul_poly(product_grid(Kp, Km, x, hi, hi), {{one, -one, -three_half}, {one, -one, three_half}}, N);
    const Grid2 rhs = mul_poly(product_grid_swapped(Kp, Km, x, hi, hi), {{one, -one, -half}, {one, -one, half}}, N);
    compare_grids(rep, lhs, rhs, lo, hi, lo, hi, tag + " +-");
  }
  return rep;
}

namespace detail {

/// Largest mode s with xbar(s) w possibly nonzero.
inline int xbar_top_mode(const OperatorSpec& xb, const FockVector& w, std::size_t N) {
  return -lowest_exponent(xb, w, 0, N) - 1;
}

/// sum over unordered pairs {r >= s}, r + s + k = K, of w_k(r, s) h^k xbar(s) xbar(r) w,
/// the u^(-K-2) coefficient of Xbar(u) Xbar(u+h) w with the larger mode applied first.
inline FockVector xbar_square_coefficient(const OperatorSpec& xb, int K, const FockVector& w, std::size_t N) {
  FockVector out(N);
  const int top = xbar_top_mode(xb, w, N);
  for (long k = 0; k < static_cast<long>(N); ++k)
    for (int r = top; 2 * r >= K - k; --r) {
      const int s = K - static_cast<int>(k) - r;
      Rational c = binom(Rational(-s - 1), k);
      if (r != s) c += binom(Rational(-r - 1), k);
      if (sgn(c) == 0) continue;
      const FockVector y = apply_mode(xb, r, w, N);
      if (y.is_zero()) continue;
      out.add_scaled(apply_mode(xb, s, y, N), HSeries::monomial(c, static_cast<std::size_t>(k), N));
    }
  return out;
}

}  // namespace detail

/// Modulo h on each vector:
///   xbar(r) xbar(r+1) + sum_{l>=1} xbar(r-l) xbar(r+l+1) = 0,
///   xbar(r) xbar(r) + 2 sum_{l>=1} xbar(r-l) xbar(r+l) = 0,
/// and modulo h^N the same coefficients of Xbar(u) Xbar(u+h) with their
/// h-corrections.
inline CheckReport check_straightening_ids(int r, const std::vector<FockVector>& vectors, std::size_t N) {
  CheckReport rep;
  rep.relation = "straightening";
  rep.params = {{"r", std::to_string(r)}, {"order", std::to_string(N)}};
  rep.convention = "larger mode applied first; sums end at the top nonvanishing mode";
  const OperatorSpec xb = catalog("Xbar", Variant::norm);
  for (std::size_t vi = 0; vi < vectors.size(); ++vi) {
    const std::string tag = "vector " + std::to_string(vi);
    const FockVector x1 = vectors[vi].truncated(1);
    const int top = detail::xbar_top_mode(xb, x1, 1);
    for (int shift : {1, 0}) {
      FockVector acc = apply_mode(xb, r, apply_mode(xb, r + shift, x1, 1), 1);
      const Rational mult = shift ? Rational(1) : Rational(2);
      for (int l = 1; r + l + shift <= top; ++l)
        acc.add_scaled(apply_mode(xb, r - l, apply_mode(xb, r + l + shift, x1, 1), 1), mult);
      ++rep.cells_checked;
      if (!acc.is_zero()) rep.fail(tag + (shift ? " odd congruence" : " even congruence"));
    }
    const FockVector x = vectors[vi].truncated(N);
    for (int K : {2 * r + 1, 2 * r}) {
      ++rep.cells_checked;
      if (!detail::xbar_square_coefficient(xb, K, x, N).is_zero())
        rep.fail(tag + " exact coefficient K=" + std::to_string(K));
    }
  }
  return rep;
}

}  // namespace dyfock
