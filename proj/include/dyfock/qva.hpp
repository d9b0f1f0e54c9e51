#pragma once

// Restrictedness of T^+(u), the module vertex operator map
//   Y(T^-_13(u1) T^-_23(u2), z) = T^-_13(z+u1) T^-_23(z+u2) T^+_23(z+u2-h/2)^-1 T^+_13(z+u1-h/2)^-1
// at arity <= 2, its classical limit, and the Heisenberg vertex operator
//   Y(K^-(u), z) = K^-(z+u) K^+(z+u-h/2)^-1.
// Arguments z + u + c h are Taylor expanded in u and h for |z| > |u|;
// states are u1^k1 u2^k2 coefficients.

#include "dyfock/drinfeld.hpp"
#include "dyfock/verify.hpp"

#include <array>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace dyfock {

class InverseNotUnit : public std::runtime_error {
 public:
  explicit InverseNotUnit(const std::string& w) : std::runtime_error(w) {}
};

/// (z-exponent, u1-power, u2-power) -> vector.
using ZKey = std::array<int, 3>;
using ZTerms = std::map<ZKey, FockVector>;

/// An operator series in z whose nonnegative part is complete up to hi; the
/// negative part, when present, is always complete.
struct ZOp {
  std::function<ZTerms(const FockVector&, int hi)> fn;
  bool zero = false;
  ZTerms operator()(const FockVector& v, int hi) const { return zero ? ZTerms{} : fn(v, hi); }
};

namespace detail {

inline void zadd(ZTerms& out, const ZKey& k, const FockVector& v, const Rational& scale = Rational(1)) {
  if (v.is_zero() || sgn(scale) == 0) return;
  auto it = out.find(k);
  if (it == out.end()) {
    FockVector w(v.order());
    w.add_scaled(v, scale);
    out.emplace(k, std::move(w));
    return;
  }
  it->second.add_scaled(v, scale);
  if (it->second.is_zero()) out.erase(it);
}

inline ZOp zidentity() {
  return {[](const FockVector& v, int) { return ZTerms{{ZKey{0, 0, 0}, v}}; }};
}

inline ZOp zzero() {
  ZOp z;
  z.zero = true;
  return z;
}

/// a after b; u-powers above the caps are dropped.
inline ZOp zcompose(const ZOp& a, const ZOp& b, std::array<int, 2> caps) {
  if (a.zero || b.zero) return zzero();
  return {[a, b, caps](const FockVector& v, int hi) {
    ZTerms out;
    for (const auto& [kb, w] : b(v, hi))
      for (const auto& [ka, x] : a(w, hi - kb[0])) {
        const ZKey k{ka[0] + kb[0], ka[1] + kb[1], ka[2] + kb[2]};
        if (k[1] <= caps[0] && k[2] <= caps[1]) zadd(out, k, x);
      }
    return out;
  }};
}

inline ZOp zsum(const ZOp& a, const ZOp& b, const Rational& sb = Rational(1)) {
  if (b.zero) return a;
  if (a.zero && sb == 1) return b;
  return {[a, b, sb](const FockVector& v, int hi) {
    ZTerms out = a(v, hi);
    for (const auto& [k, w] : b(v, hi)) zadd(out, k, w, sb);
    return out;
  }};
}

/// s(z + u_slot + c h) with u-power at most cap: w^p = sum binom(p, j) binom(j, a) c^(j-a) h^(j-a) z^(p-j) u^a.
inline ZOp zshift(SeriesOp s, int slot, const Rational& c, int cap, std::size_t N) {
  return {[s = std::move(s), slot, c, cap, N](const FockVector& v, int hi) {
    ZTerms out;
    const int reach = cap + static_cast<int>(N) - 1;
    for (const auto& [p, w] : s(v, hi + reach))
      for (int a = 0; a <= cap; ++a)
        for (std::size_t b = 0; b < N; ++b) {
          if (b > 0 && sgn(c) == 0) break;
          const long j = a + static_cast<long>(b);
          const Rational coeff = binom(Rational(p), j) * binom(Rational(j), a) * pow(c, static_cast<unsigned long>(b));
          if (sgn(coeff) == 0) continue;
          const int zexp = p - static_cast<int>(j);
          if (zexp > hi && zexp >= 0) continue;
          ZKey k{zexp, 0, 0};
          k[1 + slot] = a;
          zadd(out, k, w.times_h(b), coeff);
        }
    return out;
  }};
}

using ZMatrix = std::array<std::array<ZOp, 2>, 2>;

inline ZMatrix zmat_mul(const ZMatrix& a, const ZMatrix& b, std::array<int, 2> caps) {
  ZMatrix out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out[i][j] = zsum(zcompose(a[i][0], b[0][j], caps), zcompose(a[i][1], b[1][j], caps));
  return out;
}

}  // namespace detail

/// T^sign(z + u_slot + c h) as a matrix of z-series operators.
inline detail::ZMatrix t_matrix(Sign sign, int slot, const Rational& c, int cap, std::size_t N,
                                Variant variant = Variant::norm) {
  detail::ZMatrix m;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) m[i][j] = detail::zshift(t_operator(i + 1, j + 1, sign, variant, N), slot, c, cap, N);
  return m;
}

/// Inverse of a matrix M = I + O(h) by the geometric series in I - M.
inline detail::ZMatrix unit_inverse(const detail::ZMatrix& m, std::array<int, 2> caps, std::size_t N,
                                    const FockVector* probe = nullptr) {
  detail::ZMatrix d;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      ZOp id = i == j ? detail::zidentity() : detail::zzero();
      d[i][j] = detail::zsum(id, m[i][j], Rational(-1));
    }
  if (probe) {
    const FockVector v = probe->truncated(1);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (const auto& [k, w] : d[i][j](v.with_order(N), 0))
          if (!w.truncated(1).is_zero()) throw InverseNotUnit("inverted factor is not the identity modulo h");
  }
  detail::ZMatrix acc, power;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) acc[i][j] = power[i][j] = i == j ? detail::zidentity() : detail::zzero();
  for (std::size_t n = 1; n < N; ++n) {
    power = detail::zmat_mul(d, power, caps);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) acc[i][j] = detail::zsum(acc[i][j], power[i][j]);
  }
  return acc;
}

/// An entry state: the u1^k1 u2^k2 coefficient of T^-_13(u1)_{i1 j1} T^-_23(u2)_{i2 j2} 1,
/// with arity the number of factors (0, 1 or 2); entries are 1-based.
struct StateSpec {
  int arity = 0;
  std::array<std::array<int, 2>, 2> entries{};
  std::array<int, 2> powers{};
  Rational level = 1;
};

namespace detail {

/// sum_k T^-_{ik}(z+u) [T^+(z+u-h/2)^-1]_{kj} with u in the given slot.
inline ZOp y_single_leg(int i, int j, int slot, std::array<int, 2> caps, std::size_t N) {
  const ZMatrix minus = t_matrix(Sign::minus, slot, Rational(0), caps[slot], N);
  const ZMatrix inverse = unit_inverse(t_matrix(Sign::plus, slot, make_rational(-1, 2), caps[slot], N), caps, N);
  return zsum(zcompose(minus[i - 1][0], inverse[0][j - 1], caps), zcompose(minus[i - 1][1], inverse[1][j - 1], caps));
}

}  // namespace detail

/// Y(state, z) as an operator on the carrier, at order N.
inline ZOp y_module_operator(const StateSpec& s, std::size_t N) {
  if (s.arity < 0 || s.arity > 2) throw std::invalid_argument("arity must be 0, 1 or 2");
  if (s.level != 1) throw std::invalid_argument("the carriers have level 1");
  for (int k = 0; k < s.arity; ++k)
    for (int e : s.entries[k])
      if (e < 1 || e > 2) throw std::invalid_argument("entries must be 1 or 2");
  if (s.arity == 0) return detail::zidentity();
  const std::array<int, 2> caps = s.powers;
  const auto& e = s.entries;
  if (s.arity == 1) return detail::y_single_leg(e[0][0], e[0][1], 0, caps, N);
  std::vector<detail::ZMatrix> minus, inverse;
  for (int k = 0; k < 2; ++k) {
    minus.push_back(t_matrix(Sign::minus, k, Rational(0), caps[k], N));
    inverse.push_back(unit_inverse(t_matrix(Sign::plus, k, make_rational(-1, 2), caps[k], N), caps, N));
  }
  const int i1 = e[0][0] - 1, j1 = e[0][1] - 1, i2 = e[1][0] - 1, j2 = e[1][1] - 1;
  ZOp out = detail::zzero();
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      // T-_{i1 a}(z+u1) T-_{i2 b}(z+u2) Inv2_{b j2} Inv1_{a j1}
      const ZOp right = detail::zcompose(inverse[1][b][j2], inverse[0][a][j1], caps);
      const ZOp left = detail::zcompose(minus[0][i1][a], minus[1][i2][b], caps);
      out = detail::zsum(out, detail::zcompose(left, right, caps));
    }
  return out;
}

/// Windowed z-coefficients of Y(state, z) v for z-exponents in [lo, hi] at
/// the state's u-powers.
inline USeriesVector y_module_map(const StateSpec& s, const FockVector& v, int lo, int hi, std::size_t N) {
  if (lo > hi) throw std::invalid_argument("empty window");
  USeriesVector out({"z"}, {{lo, hi}}, N);
  bool below_empty = true;
  for (const auto& [k, w] : y_module_operator(s, N)(v.truncated(N), hi)) {
    if (k[1] != s.powers[0] || k[2] != s.powers[1]) continue;
    if (k[0] < lo) below_empty = false;
    else if (k[0] <= hi) out.add({k[0]}, w);
  }
  out.below_window_empty[0] = below_empty;
  return out;
}

// ---------------------------------------------------------------------------
// checks

namespace detail {

inline std::size_t h_valuation(const FockVector& v) {
  std::size_t val = v.order();
  for (const auto& [p, terms] : v.data())
    for (const auto& [m, x] : terms) val = std::min(val, x.valuation());
  return val;
}

/// Certified floor of the u-exponents of T^+(u) v: each annihilator lowers by
/// at most the a-weight, and each power of h by at most one for each of the
/// three factors k1, g, f.
inline int restricted_floor(const FockVector& v, std::size_t N) {
  return -(v.weight() + 3 * static_cast<int>(N)) - 1;
}

}  // namespace detail

/// Each entry of T^+(u) v is delta_ij v plus h-divisible terms with negative
/// u-powers, finitely many of them, all above a floor linear in the a-weight;
/// the order-(N+1) series has no u-powers below the order-N support modulo h^N.
inline CheckReport check_restricted(const std::vector<FockVector>& vectors, std::size_t N, int probe = 4) {
  CheckReport rep;
  rep.relation = "restricted";
  rep.params = {{"order", std::to_string(N)}, {"probe", std::to_string(probe)}};
  rep.convention = "t^+_ij(u) = delta_ij + h sum_r t_ij^(r) u^(-r-1)";
  int worst = 0;
  for (std::size_t vi = 0; vi < vectors.size(); ++vi) {
    const std::string tag = "vector " + std::to_string(vi);
    const FockVector v = vectors[vi].truncated(N);
    for (int i = 1; i <= 2; ++i)
      for (int j = 1; j <= 2; ++j) {
        const std::string where = tag + " t" + std::to_string(i) + std::to_string(j);
        const SeriesTerms t = t_operator(i, j, Sign::plus, Variant::norm, N)(v, 0);
        const SeriesTerms t1 = t_operator(i, j, Sign::plus, Variant::norm, N + 1)(v.with_order(N + 1), 0);
        FockVector constant(N);
        if (auto it = t.find(0); it != t.end()) constant = it->second;
        if (i == j) constant -= v;
        ++rep.cells_checked;
        if (!constant.is_zero()) rep.fail(where + " u^0 coefficient");
        int low = 0;
        for (const auto& [p, w] : t) {
          ++rep.cells_checked;
          low = std::min(low, p);
          if (p > 0) rep.fail(where + " positive power u^" + std::to_string(p));
          if (p < 0 && detail::h_valuation(w) < 1) rep.fail(where + " not h-divisible at u^" + std::to_string(p));
        }
        if (low < detail::restricted_floor(v, N)) rep.fail(where + " below the weight floor");
        worst = std::min(worst, low + v.weight());
        for (const auto& [p, w] : t1) {
          if (p >= low - probe && p < low) {
            ++rep.cells_checked;
            if (!w.truncated(N).is_zero()) rep.fail(where + " order N+1 support below u^" + std::to_string(low));
          }
          if (p >= low) {
            FockVector d = w.truncated(N);
            if (auto it = t.find(p); it != t.end()) d -= it->second;
            ++rep.cells_checked;
            if (!d.is_zero()) rep.fail(where + " order coherence at u^" + std::to_string(p));
          }
        }
      }
  }
  rep.params["lowest_plus_weight"] = std::to_string(worst);
  return rep;
}

/// Y(1, z) = id exactly, and on the vacuum of L_0, Y(a, z) 1 has no negative
/// z-powers and its z^0 coefficient is the state a itself.
inline CheckReport check_vacuum_axiom(const std::vector<FockVector>& vectors, const std::vector<StateSpec>& states,
                                      int hi, std::size_t N) {
  CheckReport rep;
  rep.relation = "qva_vacuum";
  rep.params = {{"order", std::to_string(N)}, {"hi", std::to_string(hi)}};
  for (std::size_t vi = 0; vi < vectors.size(); ++vi) {
    const FockVector v = vectors[vi].truncated(N);
    const ZTerms t = y_module_operator(StateSpec{}, N)(v, hi);
    ++rep.cells_checked;
    if (t.size() != 1 || t.begin()->first != ZKey{0, 0, 0} || !(t.begin()->second == v))
      rep.fail("vector " + std::to_string(vi) + " Y(1, z) is not the identity");
  }
  const FockVector one = FockVector::vacuum(0, N);
  for (std::size_t si = 0; si < states.size(); ++si) {
    const StateSpec& s = states[si];
    const std::string tag = "state " + std::to_string(si);
    const USeriesVector y = y_module_map(s, one, -hi, hi, N);
    for (int p = -hi; p < 0; ++p) {
      ++rep.cells_checked;
      if (!y.at({p}).is_zero()) rep.fail(tag + " negative z-power " + std::to_string(p));
    }
    ++rep.cells_checked;
    if (!y.below_window_empty[0]) rep.fail(tag + " negative z-powers below the window");
    // the state itself: T^-_{i1 j1}(u1) T^-_{i2 j2}(u2) 1 at the requested u-powers
    FockVector state(N);
    if (s.arity == 0) state = one;
    else {
      SeriesTerms inner{{0, one}};
      if (s.arity == 2) {
        const SeriesTerms all = t_operator(s.entries[1][0], s.entries[1][1], Sign::minus, Variant::norm, N)(one, s.powers[1]);
        inner = {{0, detail::term_at(all, s.powers[1], N)}};
      }
      const SeriesTerms outer =
          t_operator(s.entries[0][0], s.entries[0][1], Sign::minus, Variant::norm, N)(inner.at(0), s.powers[0]);
      state = detail::term_at(outer, s.powers[0], N);
    }
    ++rep.cells_checked;
    if (!(y.at({0}) == state)) rep.fail(tag + " z^0 coefficient differs from the state");
  }
  return rep;
}

namespace detail {

/// op / h on order-1 vectors: op is I + O(h) minus its identity part, run at order 2.
inline ZOp over_h(const ZOp& op) {
  if (op.zero) return op;
  return {[op](const FockVector& v, int hi) {
    ZTerms out;
    for (const auto& [k, w] : op(v.with_order(2), hi)) zadd(out, k, w.divided_by_h());
    return out;
  }};
}

}  // namespace detail

/// Modulo h, Y(t^-_13(u1) t^-_23(u2), z) = :t_13(z+u1) t_23(z+u2): with
/// t^± = ±(I - T^±)/h, t = t^- + t^+ and :t(w1) t(w2): = t^-(w1) t(w2) + t(w2) t^+(w1).
/// The left side is h^-2 (Y(T13 T23) - d2 Y(T13) - d1 Y(T23) + d1 d2) with d_k the
/// Kronecker delta of leg k.
inline CheckReport check_normal_ordered_limit(const std::vector<FockVector>& vectors,
                                              const std::vector<StateSpec>& states, int lo, int hi) {
  CheckReport rep;
  rep.relation = "normal_ordered_limit";
  rep.params = {{"window", std::to_string(lo) + ":" + std::to_string(hi)}};
  rep.convention = "entries per auxiliary leg; |z| > |u_k|";
  constexpr std::size_t N3 = 3, N2 = 2;
  for (std::size_t si = 0; si < states.size(); ++si) {
    const StateSpec& s = states[si];
    if (s.arity != 2) throw std::invalid_argument("normal-ordered limit is checked at arity 2");
    const std::array<int, 2> caps = s.powers;
    const int i1 = s.entries[0][0], j1 = s.entries[0][1], i2 = s.entries[1][0], j2 = s.entries[1][1];
    const Rational d1 = i1 == j1 ? 1 : 0, d2 = i2 == j2 ? 1 : 0;
    const ZOp id = detail::zidentity();
    const ZOp y12 = y_module_operator(s, N3);
    const ZOp y1 = sgn(d2) ? detail::y_single_leg(i1, j1, 0, caps, N3) : detail::zzero();
    const ZOp y2 = sgn(d1) ? detail::y_single_leg(i2, j2, 1, caps, N3) : detail::zzero();
    auto t_at = [&](Sign sign, int i, int j, int slot) {
      return detail::zshift(t_operator(i, j, sign, Variant::norm, N2), slot, Rational(0), caps[slot], N2);
    };
    // t^-(w) = (T^- - I)/h, t^+(w) = (I - T^+)/h, t(w) = (T^- - T^+)/h
    const ZOp tm1 = detail::over_h(detail::zsum(t_at(Sign::minus, i1, j1, 0), d1 != 0 ? id : detail::zzero(), Rational(-1)));
    const ZOp tp1 = detail::over_h(detail::zsum(d1 != 0 ? id : detail::zzero(), t_at(Sign::plus, i1, j1, 0), Rational(-1)));
    const ZOp t2 = detail::over_h(detail::zsum(t_at(Sign::minus, i2, j2, 1), t_at(Sign::plus, i2, j2, 1), Rational(-1)));
    const ZOp nop = detail::zsum(detail::zcompose(tm1, t2, caps), detail::zcompose(t2, tp1, caps));
    for (std::size_t vi = 0; vi < vectors.size(); ++vi) {
      const std::string tag = "state " + std::to_string(si) + " vector " + std::to_string(vi);
      const FockVector v1 = vectors[vi].truncated(1);
      const FockVector v3 = v1.with_order(N3);
      ZTerms lhs = y12(v3, hi);
      for (const auto& [k, w] : y1(v3, hi)) detail::zadd(lhs, k, w, Rational(-1));
      for (const auto& [k, w] : y2(v3, hi)) detail::zadd(lhs, k, w, Rational(-1));
      detail::zadd(lhs, ZKey{0, 0, 0}, v3, d1 * d2);
      const ZTerms rhs = nop(v1, hi);
      for (int p = lo; p <= hi; ++p) {
        const ZKey k{p, s.powers[0], s.powers[1]};
        FockVector l(N3), r(1);
        if (auto it = lhs.find(k); it != lhs.end()) l = it->second;
        if (auto it = rhs.find(k); it != rhs.end()) r = it->second;
        ++rep.cells_checked;
        if (detail::h_valuation(l) < 2) {
          rep.fail(tag + " Y not divisible by h^2 at z^" + std::to_string(p));
          continue;
        }
        if (!(l.divided_by_h().divided_by_h() == r)) rep.fail(tag + " differs at z^" + std::to_string(p));
      }
    }
  }
  return rep;
}

/// Y(K^-(u) 1, z) = K^-(z+u) K^+(z+u-h/2)^-1 at u-power k.
inline ZOp k_state_operator(int k, std::size_t N) {
  const std::array<int, 2> caps{k, 0};
  const ZOp km = detail::zshift(detail::spec_op(catalog("K_minus", Variant::norm), Sign::minus, N), 0,
                                        Rational(0), k, N);
  const ZOp kp = detail::zshift(detail::spec_op(catalog("K_plus", Variant::norm), Sign::plus, N), 0,
                                        make_rational(-1, 2), k, N);
  const ZOp d = detail::zsum(detail::zidentity(), kp, Rational(-1));
  ZOp inv = detail::zidentity(), power = detail::zidentity();
  for (std::size_t n = 1; n < N; ++n) {
    power = detail::zcompose(d, power, caps);
    inv = detail::zsum(inv, power);
  }
  return detail::zcompose(km, inv, caps);
}

/// The Heisenberg vertex operator Y(K^-(u) 1, z): on the vacuum of L_0 it has
/// no negative z-powers and returns the state K^-(u) 1 at z^0, and it
/// commutes with X_alpha(v) and X_-alpha(v) on the (z, v) window.
inline CheckReport check_k_state(const std::vector<FockVector>& vectors, int max_power, int lo, int hi, std::size_t N) {
  CheckReport rep;
  rep.relation = "k_state";
  rep.params = {{"window", std::to_string(lo) + ":" + std::to_string(hi)}, {"order", std::to_string(N)},
                {"u_powers", std::to_string(max_power)}};
  rep.convention = "K^+ shifted by h c_2/4 with c_2 = -2";
  const FockVector one = FockVector::vacuum(0, N);
  const SeriesTerms kstate = detail::spec_op(catalog("K_minus", Variant::norm), Sign::minus, N)(one, max_power);
  for (int k = 0; k <= max_power; ++k) {
    const ZOp y = k_state_operator(k, N);
    const std::string tag = "u^" + std::to_string(k);
    const ZTerms t = y(one, hi);
    for (const auto& [key, w] : t) {
      if (key[1] != k) continue;
      ++rep.cells_checked;
      if (key[0] < 0) rep.fail(tag + " negative z-power on the vacuum");
      if (key[0] == 0 && !(w == detail::term_at(kstate, k, N))) rep.fail(tag + " z^0 differs from the state");
    }
    for (const char* name : {"X_alpha", "X_malpha"}) {
      const OperatorSpec x = catalog(name, Variant::norm);
      for (std::size_t vi = 0; vi < vectors.size(); ++vi) {
        const std::string where = tag + " " + name + " vector " + std::to_string(vi);
        const FockVector v = vectors[vi].truncated(N);
        Grid2 yx, xy;  // (z, v) exponents
        for (const auto& [vp, w] : expand(x, v, hi, N).terms)
          for (const auto& [key, r] : y(w, hi))
            if (key[1] == k) detail::grid_add(yx, key[0], vp, r);
        for (const auto& [key, w] : y(v, hi)) {
          if (key[1] != k) continue;
          for (const auto& [vp, r] : expand(x, w, hi, N).terms) detail::grid_add(xy, key[0], vp, r);
        }
        compare_grids(rep, yx, xy, lo, hi, lo, hi, where);
      }
    }
  }
  return rep;
}

/// y_module_map at order N truncated to a lower order equals the direct
/// evaluation there.
inline CheckReport check_y_truncation(const std::vector<StateSpec>& states, const std::vector<FockVector>& vectors,
                                      int lo, int hi, std::size_t N, std::size_t lower) {
  CheckReport rep;
  rep.relation = "qva_truncation";
  rep.params = {{"window", std::to_string(lo) + ":" + std::to_string(hi)}, {"order", std::to_string(N)},
                {"lower", std::to_string(lower)}};
  for (std::size_t si = 0; si < states.size(); ++si)
    for (std::size_t vi = 0; vi < vectors.size(); ++vi) {
      const USeriesVector a = y_module_map(states[si], vectors[vi], lo, hi, N);
      const USeriesVector b = y_module_map(states[si], vectors[vi], lo, hi, lower);
      for (int p = lo; p <= hi; ++p) {
        ++rep.cells_checked;
        if (!(a.at({p}).truncated(lower) == b.at({p})))
          rep.fail("state " + std::to_string(si) + " vector " + std::to_string(vi) + " at z^" + std::to_string(p));
      }
    }
  return rep;
}

}  // namespace dyfock
