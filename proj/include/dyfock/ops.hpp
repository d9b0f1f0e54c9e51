#pragma once

// Operator catalog and the windowed evaluation engine.
//
// Every current is stored as a list of primitive factors that act right to
// left. Annihilation, lattice and grading factors act exactly on finite
// data; the creation exponential, which must stand leftmost, is expanded
// last under a degree bound.
//
// Soundness of the creation bound: inside exp(sum phi_j(r) a_j(-r)) the
// coefficient phi_j(r) is a combination of (u + c h)^r (or (c h)^r), so its
// u^p part carries h^(r-p). A product of such factors with total mode weight
// W and total u-power P therefore carries h^(W-P) at least. To land on u^m
// with m <= hi from a state term at u^p0 we need P = m - p0 <= hi - p0 and
// W - P < N, i.e. W <= hi - p0 + N - 1. Modes beyond that bound contribute
// only multiples of h^N, so truncating the expansion there is exact mod h^N.
// Since creation factors only raise the u-power, the lowest exponent present
// after the non-creation factors is a certified lower bound for the result.

#include "dyfock/arith.hpp"
#include "dyfock/fock.hpp"

#include <algorithm>
#include <climits>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dyfock {

struct UnknownOperator : std::invalid_argument {
  explicit UnknownOperator(const std::string& w) : std::invalid_argument("unknown operator: " + w) {}
};
struct WindowUnsound : std::logic_error {
  explicit WindowUnsound(const std::string& w) : std::logic_error(w) {}
};
struct IncompleteWindow : std::logic_error {
  explicit IncompleteWindow(const std::string& w) : std::logic_error(w) {}
};

enum class Variant { IK, norm };

inline const char* variant_name(Variant v) { return v == Variant::IK ? "IK" : "norm"; }
inline Variant parse_variant(const std::string& s) {
  if (s == "IK") return Variant::IK;
  if (s == "norm") return Variant::norm;
  throw std::invalid_argument("unknown variant: " + s);
}

/// Contributes (scale/r) (alpha*u + c*h)^(+r) to the coefficient of a_j(-r)
/// for creation factors, and (scale/r) (u + c*h)^(-r) to that of a_j(r) for
/// annihilation factors.
struct ExpTerm {
  int color;
  Rational scale;
  int alpha;
  Rational c;
};

/// (u + c h)^(scale * eigenvalue of selector); selector `one` gives a fixed exponent.
struct GradedTerm {
  Rational c;
  Rational scale;
  Graded selector;
};

enum class FactorKind { ExpCreation, ExpAnnihilation, LatticeShift, GradedPower, ScalarBinom };

inline const char* factor_kind_name(FactorKind k) {
  switch (k) {
    case FactorKind::ExpCreation: return "ExpCreation";
    case FactorKind::ExpAnnihilation: return "ExpAnnihilation";
    case FactorKind::LatticeShift: return "LatticeShift";
    case FactorKind::GradedPower: return "GradedPower";
    case FactorKind::ScalarBinom: return "ScalarBinom";
  }
  return "?";
}

struct PrimitiveFactor {
  FactorKind kind;
  std::string label;
  std::vector<ExpTerm> exp;
  Displacement shift;
  std::vector<GradedTerm> graded;

  static PrimitiveFactor creation(std::string label, std::vector<ExpTerm> t) {
    return {FactorKind::ExpCreation, std::move(label), std::move(t), {}, {}};
  }
  static PrimitiveFactor annihilation(std::string label, std::vector<ExpTerm> t) {
    for (const auto& e : t)
      if (e.alpha != 1) throw std::invalid_argument("annihilation terms need a u-dependent base");
    return {FactorKind::ExpAnnihilation, std::move(label), std::move(t), {}, {}};
  }
  static PrimitiveFactor lattice(std::string label, Displacement d) {
    return {FactorKind::LatticeShift, std::move(label), {}, std::move(d), {}};
  }
  static PrimitiveFactor graded_power(std::string label, std::vector<GradedTerm> g) {
    return {FactorKind::GradedPower, std::move(label), {}, {}, std::move(g)};
  }
  static PrimitiveFactor scalar(std::string label, std::vector<GradedTerm> g) {
    for (auto& t : g) t.selector = Graded::one;
    return {FactorKind::ScalarBinom, std::move(label), {}, {}, std::move(g)};
  }

  /// u -> u + c0 h.
  PrimitiveFactor shifted(const Rational& c0) const {
    PrimitiveFactor f = *this;
    for (auto& e : f.exp) e.c += c0 * e.alpha;
    for (auto& g : f.graded) g.c += c0;
    return f;
  }

  PrimitiveFactor inverse() const {
    PrimitiveFactor f = *this;
    for (auto& e : f.exp) e.scale = -e.scale;
    f.shift = -f.shift;
    for (auto& g : f.graded) g.scale = -g.scale;
    f.label = label + "^-1";
    return f;
  }

  std::string key() const {
    std::ostringstream os;
    os << static_cast<int>(kind) << '[';
    for (const auto& e : exp) os << e.color << ',' << e.scale.get_str() << ',' << e.alpha << ',' << e.c.get_str() << ';';
    os << '|' << shift.d1.get_str() << ',' << shift.d2.get_str() << '|';
    for (const auto& g : graded) os << g.c.get_str() << ',' << g.scale.get_str() << ',' << static_cast<int>(g.selector) << ';';
    os << ']';
    return os.str();
  }
};

struct OperatorSpec {
  std::string name;
  Variant variant = Variant::norm;
  std::vector<PrimitiveFactor> factors;  // leftmost first; applied right to left
  Rational argument_shift;

  std::string key() const {
    std::ostringstream os;
    for (const auto& f : factors) os << f.key();
    return os.str();
  }

  /// spec(u + c0 h), with the shift baked into every factor.
  OperatorSpec shifted(const Rational& c0) const {
    OperatorSpec s = *this;
    for (auto& f : s.factors) f = f.shifted(c0);
    s.argument_shift += c0;
    return s;
  }

  /// Operator inverse. Only blocks whose inverse stays normal ordered are allowed.
  OperatorSpec inverse() const {
    bool has_c = false, has_a = false;
    for (const auto& f : factors) {
      has_c |= f.kind == FactorKind::ExpCreation;
      has_a |= f.kind == FactorKind::ExpAnnihilation;
    }
    if (has_c && has_a) throw std::logic_error("inverse of a mixed normal-ordered product is not normal ordered");
    OperatorSpec s = *this;
    s.factors.clear();
    for (auto it = factors.rbegin(); it != factors.rend(); ++it) s.factors.push_back(it->inverse());
    s.name = name + "^-1";
    return s;
  }

  /// this * other (other acts first).
  OperatorSpec then_after(const OperatorSpec& other) const {
    OperatorSpec s = *this;
    s.factors.insert(s.factors.end(), other.factors.begin(), other.factors.end());
    return s;
  }
};

// ---------------------------------------------------------------------------
// Catalog

namespace detail {

inline Rational q(long a, long b = 1) { return make_rational(a, b); }

inline std::vector<ExpTerm> e_minus_terms() { return {{1, q(-1), 1, q(-3, 4)}, {2, q(1), 1, q(1, 4)}}; }
inline std::vector<ExpTerm> e_minus_zero_inv_terms() { return {{1, q(1), 0, q(-3, 4)}, {2, q(-1), 0, q(1, 4)}}; }
inline std::vector<ExpTerm> e_plus_terms() { return {{1, q(1), 1, q(1, 4)}, {2, q(-1), 1, q(1, 4)}}; }
inline std::vector<ExpTerm> ebar_plus_terms() { return {{1, q(1), 1, q(-7, 4)}, {2, q(1), 1, q(1, 4)}}; }

inline std::vector<ExpTerm> negated(std::vector<ExpTerm> t) {
  for (auto& e : t) e.scale = -e.scale;
  return t;
}
inline std::vector<ExpTerm> shifted_terms(std::vector<ExpTerm> t, const Rational& c0) {
  for (auto& e : t) e.c += c0 * e.alpha;
  return t;
}
inline std::vector<ExpTerm> concat(std::vector<ExpTerm> a, const std::vector<ExpTerm>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

inline OperatorSpec make(std::string name, Variant v, std::vector<PrimitiveFactor> f) {
  OperatorSpec s;
  s.name = std::move(name);
  s.variant = v;
  s.factors = std::move(f);
  return s;
}

inline OperatorSpec x_alpha(Variant v) {
  std::vector<PrimitiveFactor> f;
  if (v == Variant::IK) {
    f.push_back(PrimitiveFactor::creation("E^-(u)", e_minus_terms()));
  } else {
    f.push_back(PrimitiveFactor::creation("E^-(0)^-1 E^-(u)", concat(e_minus_zero_inv_terms(), e_minus_terms())));
  }
  f.push_back(PrimitiveFactor::annihilation("E^+(u)", e_plus_terms()));
  f.push_back(PrimitiveFactor::lattice("e^alpha", Displacement::alpha()));
  f.push_back(PrimitiveFactor::graded_power("(u+h/4)^d_alpha", {{q(1, 4), q(1), Graded::dalpha}}));
  if (v == Variant::norm) {
    f.push_back(PrimitiveFactor::graded_power(
        "u^d_alpha/2 (u+h)^d_alpha/2 (u+h/4)^-d_alpha",
        {{q(0), q(1), Graded::dalpha_half}, {q(1), q(1), Graded::dalpha_half}, {q(1, 4), q(-1), Graded::dalpha}}));
  }
  return make("X_alpha", v, std::move(f));
}

inline OperatorSpec x_malpha(Variant v) {
  // E^-(u+h/2)^-1 E^+(u-h/2)^-1 E^0(u-h/2)^-1
  const auto cre = negated(shifted_terms(e_minus_terms(), q(1, 2)));
  const auto ann = negated(shifted_terms(e_plus_terms(), q(-1, 2)));
  std::vector<PrimitiveFactor> f;
  if (v == Variant::IK) {
    f.push_back(PrimitiveFactor::creation("E^-(u+h/2)^-1", cre));
  } else {
    f.push_back(PrimitiveFactor::creation("E^-(0) E^-(u+h/2)^-1", concat(negated(e_minus_zero_inv_terms()), cre)));
  }
  f.push_back(PrimitiveFactor::annihilation("E^+(u-h/2)^-1", ann));
  f.push_back(PrimitiveFactor::lattice("e^-alpha", Displacement::alpha(-1)));
  f.push_back(PrimitiveFactor::graded_power("(u-h/4)^-d_alpha", {{q(-1, 4), q(-1), Graded::dalpha}}));
  if (v == Variant::norm) {
    f.push_back(PrimitiveFactor::graded_power(
        "(u-h/4)^d_alpha (u-h/2)^-d_alpha/2 (u+h/2)^-d_alpha/2",
        {{q(-1, 4), q(1), Graded::dalpha}, {q(-1, 2), q(-1), Graded::dalpha_half}, {q(1, 2), q(-1), Graded::dalpha_half}}));
  }
  return make("X_malpha", v, std::move(f));
}

inline std::vector<ExpTerm> k_plus_terms(int j) { return {{j, q(-1), 1, q(1, 2)}, {j, q(1), 1, q(-1, 2)}}; }

inline OperatorSpec k_plus(int j, Variant v) {
  std::vector<PrimitiveFactor> f;
  f.push_back(PrimitiveFactor::annihilation(j == 1 ? "exp(a_1(r))" : "exp(a_2(r))", k_plus_terms(j)));
  if (v == Variant::IK) {
    const Graded sel = j == 1 ? Graded::eps1 : Graded::eps2;
    f.push_back(PrimitiveFactor::graded_power("((u-h/2)/(u+h/2))^d_eps", {{q(-1, 2), q(1), sel}, {q(1, 2), q(-1), sel}}));
  } else if (j == 1) {
    f.push_back(PrimitiveFactor::graded_power("((u+h/4)/(u+5h/4))^d_alpha/2",
                                              {{q(1, 4), q(1), Graded::dalpha_half}, {q(5, 4), q(-1), Graded::dalpha_half}}));
  } else {
    f.push_back(PrimitiveFactor::graded_power("((u+h/4)/(u-3h/4))^d_alpha/2",
                                              {{q(1, 4), q(1), Graded::dalpha_half}, {q(-3, 4), q(-1), Graded::dalpha_half}}));
  }
  return make(j == 1 ? "k1_plus" : "k2_plus", v, std::move(f));
}

inline OperatorSpec k_minus(int j, Variant v) {
  std::vector<ExpTerm> t;
  if (j == 1) t = {{2, q(1), 1, q(1)}, {2, q(-1), 1, q(0)}};
  else t = {{1, q(1), 1, q(0)}, {1, q(-1), 1, q(-1)}};
  return make(j == 1 ? "k1_minus" : "k2_minus", v,
              {PrimitiveFactor::creation(j == 1 ? "exp(a_2(-r))" : "exp(a_1(-r))", std::move(t))});
}

inline OperatorSpec ebar_plus(Variant v) {
  return make("Ebar_plus", v, {PrimitiveFactor::annihilation("Ebar^+(u)", ebar_plus_terms())});
}

inline OperatorSpec ebar_zero(Variant v) {
  return make("Ebar_zero", v,
              {PrimitiveFactor::graded_power("(1-h/u)^d_alpha/2",
                                             {{q(-1), q(1), Graded::dalpha_half}, {q(0), q(-1), Graded::dalpha_half}})});
}

}  // namespace detail

inline const std::vector<std::string>& catalog_names() {
  static const std::vector<std::string> names = {
      "X_alpha", "X_malpha", "k1_plus", "k2_plus", "k1_minus", "k2_minus", "Xbar", "Ebar_plus", "Ebar_zero",
      "Xtilde", "H_plus", "H_minus", "K_plus", "K_minus", "E_current", "F_current", "cal_E_minus",
      "E_minus", "E_plus", "E_zero", "E_minus_zero_inv"};
  return names;
}

inline OperatorSpec catalog(const std::string& name, Variant v = Variant::norm) {
  using namespace detail;
  auto renamed = [&](OperatorSpec s) {
    s.name = name;
    s.variant = v;
    return s;
  };
  if (name == "X_alpha") return x_alpha(v);
  if (name == "X_malpha") return x_malpha(v);
  if (name == "k1_plus") return k_plus(1, v);
  if (name == "k2_plus") return k_plus(2, v);
  if (name == "k1_minus") return k_minus(1, v);
  if (name == "k2_minus") return k_minus(2, v);
  if (name == "E_minus") return make(name, v, {PrimitiveFactor::creation("E^-(u)", e_minus_terms())});
  if (name == "E_minus_zero_inv")
    return make(name, v, {PrimitiveFactor::creation("E^-(0)^-1", e_minus_zero_inv_terms())});
  if (name == "E_plus") return make(name, v, {PrimitiveFactor::annihilation("E^+(u)", e_plus_terms())});
  if (name == "E_zero")
    return make(name, v,
                {PrimitiveFactor::lattice("e^alpha", Displacement::alpha()),
                 PrimitiveFactor::graded_power("(u+h/4)^d_alpha", {{q(1, 4), q(1), Graded::dalpha}})});
  if (name == "cal_E_minus")
    return make(name, v, {PrimitiveFactor::creation("E^-(0)^-1 E^-(u)", concat(e_minus_zero_inv_terms(), e_minus_terms()))});
  if (name == "Ebar_plus") return ebar_plus(v);
  if (name == "Ebar_zero") return ebar_zero(v);
  if (name == "Xbar" || name == "Xtilde") {
    if (v != Variant::norm) throw UnknownOperator(name + " exists only for the normalized realization");
    OperatorSpec s = x_alpha(v);
    if (name == "Xbar") {
      s = s.then_after(ebar_plus(v)).then_after(ebar_zero(v));
    } else {
      s.factors.push_back(PrimitiveFactor::graded_power(
          "(1+h/u)^-d_alpha/2", {{q(1), q(-1), Graded::dalpha_half}, {q(0), q(1), Graded::dalpha_half}}));
    }
    return renamed(s);
  }
  if (name == "H_plus" || name == "H_minus") {
    const bool plus = name == "H_plus";
    OperatorSpec k2 = plus ? k_plus(2, v) : k_minus(2, v);
    OperatorSpec k1 = plus ? k_plus(1, v) : k_minus(1, v);
    return renamed(k2.shifted(q(1, 2)).then_after(k1.shifted(q(1, 2)).inverse()));
  }
  if (name == "K_plus" || name == "K_minus") {
    const bool plus = name == "K_plus";
    OperatorSpec k1 = plus ? k_plus(1, v) : k_minus(1, v);
    OperatorSpec k2 = plus ? k_plus(2, v) : k_minus(2, v);
    return renamed(k1.shifted(q(-1, 2)).then_after(k2.shifted(q(1, 2))));
  }
  if (name == "E_current") return renamed(x_alpha(v).shifted(q(1, 2)));
  if (name == "F_current") return renamed(x_malpha(v).shifted(q(1, 2)));
  throw UnknownOperator(name);
}

// ---------------------------------------------------------------------------
// Windowed series of Fock vectors

/// Coefficients of an operator series applied to a vector, on a box of
/// exponents. Entries absent from `coeffs` are zero.
struct USeriesVector {
  std::vector<std::string> vars;
  std::vector<std::pair<int, int>> window;
  std::size_t order = 1;
  std::map<std::vector<int>, FockVector> coeffs;
  std::vector<bool> below_window_empty;
  int total_cap = INT_MAX / 4;  // cells with exponent sum above this were not computed

  USeriesVector() = default;
  USeriesVector(std::vector<std::string> v, std::vector<std::pair<int, int>> w, std::size_t n)
      : vars(std::move(v)), window(std::move(w)), order(n), below_window_empty(vars.size(), false) {}

  std::size_t var_index(const std::string& name) const {
    for (std::size_t i = 0; i < vars.size(); ++i)
      if (vars[i] == name) return i;
    throw std::invalid_argument("no variable " + name);
  }

  bool in_window(const std::vector<int>& e) const {
    for (std::size_t i = 0; i < e.size(); ++i)
      if (e[i] < window[i].first || e[i] > window[i].second) return false;
    return true;
  }

  FockVector at(const std::vector<int>& e) const {
    auto it = coeffs.find(e);
    return it == coeffs.end() ? FockVector(order) : it->second;
  }

  void add(const std::vector<int>& e, const FockVector& v) {
    if (v.is_zero()) return;
    auto it = coeffs.find(e);
    if (it == coeffs.end()) {
      coeffs.emplace(e, v.order() == order ? v : v.with_order(order));
      return;
    }
    it->second += v;
    if (it->second.is_zero()) coeffs.erase(it);
  }

  bool is_zero() const { return coeffs.empty(); }
};

/// Exact data of an operator series applied to a vector: every exponent up to
/// `hi` is present, and nothing below `lowest` can occur.
struct Expansion {
  std::map<int, FockVector> terms;
  int lowest = 0;
  int hi = 0;
  std::size_t order = 1;
};

namespace detail {

using State = std::map<int, FockVector>;

inline void state_add(State& s, int p, const LatticePoint& mu, const AMonomial& m, const HSeries& c) {
  if (c.is_zero()) return;
  auto it = s.find(p);
  if (it == s.end()) it = s.emplace(p, FockVector(c.order())).first;
  it->second.add_term(mu, m, c);
  if (it->second.is_zero()) s.erase(it);
}

inline State graded_step(const State& in, const PrimitiveFactor& f, std::size_t N) {
  State out;
  for (const auto& [p, vec] : in) {
    for (const auto& [mu, terms] : vec.data()) {
      std::vector<GradedBase> bases;
      for (const auto& g : f.graded) bases.push_back({g.c, g.scale * graded_eigenvalue(g.selector, mu)});
      const USeries s = graded_product(bases, N);
      for (const auto& [qexp, hs] : s.terms())
        for (const auto& [m, x] : terms) state_add(out, p + qexp, mu, m, x * hs);
    }
  }
  return out;
}

inline State lattice_step(const State& in, const PrimitiveFactor& f) {
  State out;
  for (const auto& [p, vec] : in) out.emplace(p, apply_lattice_shift(f.shift, vec));
  return out;
}

/// r * psi_j(r)(u) = sum over terms of color j of scale (u + c h)^(-r).
inline USeries annihilation_series(const PrimitiveFactor& f, int color, int r, std::size_t N) {
  USeries s(N);
  for (const auto& e : f.exp) {
    if (e.color != color) continue;
    for (const auto& [p, hs] : shifted_power(-r, e.c, N)) s.add(p, hs * e.scale);
  }
  return s;
}

/// exp(sum psi_j(r) a_j(r)) shifts a_j(-r) -> a_j(-r) + r psi_j(r) in each monomial.
/// Terms whose exponent exceeds `limit(mu)` are dropped; partial products are
/// pruned once even the lowest reachable exponent stays above it.
template <class Limit>
State annihilation_step(const State& in, const PrimitiveFactor& f, std::size_t N, const Limit& limit) {
  std::map<int, std::vector<USeries>> powers;  // code -> (r psi)^k
  auto power = [&](int color, int r, int k) -> const USeries& {
    auto& v = powers[AMonomial::code(color, r)];
    if (v.empty()) v.push_back(USeries::one(N));
    while (static_cast<int>(v.size()) <= k) v.push_back(v.back().times(annihilation_series(f, color, r, N)));
    return v[k];
  };
  const int slack = static_cast<int>(N) - 1;
  State out;
  for (const auto& [p, vec] : in) {
    for (const auto& [mu, terms] : vec.data()) {
      const long lim = static_cast<long>(limit(mu)) - p;
      for (const auto& [m, x] : terms) {
        const auto runs = m.runs();
        std::vector<long> drop(runs.size() + 1, 0);  // largest further decrease from runs i..end
        for (std::size_t i = runs.size(); i-- > 0;)
          drop[i] = drop[i + 1] + static_cast<long>(std::get<1>(runs[i])) * std::get<2>(runs[i]);
        // partial products over runs: (remaining monomial, u-series)
        std::vector<std::pair<AMonomial, USeries>> acc{{AMonomial(), USeries::one(N)}};
        for (std::size_t ri = 0; ri < runs.size(); ++ri) {
          const auto& [j, r, n] = runs[ri];
          const long reach = drop[ri + 1] + slack;
          std::vector<std::pair<AMonomial, USeries>> next;
          for (const auto& [rem, ser] : acc) {
            for (int k = 0; k <= n; ++k) {
              const USeries& pk = power(j, r, k);
              if (k > 0 && pk.empty()) break;
              USeries prod = ser.times(pk);
              if (prod.empty() || prod.min_exponent() - reach > lim) continue;
              AMonomial nm = rem;
              for (int i = 0; i < n - k; ++i) nm.insert(j, r);
              next.emplace_back(std::move(nm), prod.scaled(binom(Rational(n), k)));
            }
          }
          acc = std::move(next);
        }
        for (const auto& [rem, ser] : acc)
          for (const auto& [qexp, hs] : ser.terms()) {
            if (qexp > lim) break;
            state_add(out, p + qexp, mu, rem, x * hs);
          }
      }
    }
  }
  return out;
}

/// Expansion of the creation exponential: power -> (monomial -> coefficient),
/// complete for all powers <= pmax modulo h^N.
struct CreationTable {
  int pmax = -1;
  std::map<int, std::map<AMonomial, HSeries>> table;
};

inline CreationTable build_creation(const std::vector<ExpTerm>& terms, int pmax, std::size_t N) {
  CreationTable t;
  t.pmax = pmax;
  std::map<int, std::map<AMonomial, HSeries>> cur;
  cur[0][AMonomial()] = HSeries::constant(1, N);
  const int rmax = pmax + static_cast<int>(N) - 1;
  for (int r = 1; r <= rmax; ++r) {
    for (int j = 1; j <= 2; ++j) {
      USeries phi(N);
      for (const auto& e : terms) {
        if (e.color != j) continue;
        USeries part = linear_power_series(e.alpha, r, e.c, N);
        for (const auto& [p, hs] : part.terms()) phi.add(p, hs * (e.scale / r));
      }
      if (phi.empty()) continue;
      // sum_n phi^n / n! a_j(-r)^n
      std::vector<USeries> pw{USeries::one(N)};
      for (int n = 1;; ++n) {
        USeries next = pw.back().times(phi, pmax).scaled(Rational(1, n));
        if (next.empty()) break;
        pw.push_back(std::move(next));
      }
      if (pw.size() == 1) continue;
      std::map<int, std::map<AMonomial, HSeries>> nxt;
      for (const auto& [p, monos] : cur) {
        for (const auto& [m, c] : monos) {
          AMonomial mm = m;
          for (std::size_t n = 0; n < pw.size(); ++n) {
            if (n > 0) mm.insert(j, r);
            for (const auto& [qexp, hs] : pw[n].terms()) {
              if (p + qexp > pmax) break;
              HSeries prod = c * hs;
              if (prod.is_zero()) continue;
              auto& slot = nxt[p + qexp];
              auto it = slot.find(mm);
              if (it == slot.end()) slot.emplace(mm, std::move(prod));
              else it->second += prod;
            }
          }
        }
      }
      cur = std::move(nxt);
    }
  }
  for (auto& [p, monos] : cur)
    for (auto it = monos.begin(); it != monos.end();)
      it = it->second.is_zero() ? monos.erase(it) : std::next(it);
  t.table = std::move(cur);
  return t;
}

class CreationCache {
 public:
  std::shared_ptr<const CreationTable> get(const std::vector<ExpTerm>& terms, int pmax, std::size_t N) {
    std::ostringstream os;
    os << N << '#';
    for (const auto& e : terms) os << e.color << ',' << e.scale.get_str() << ',' << e.alpha << ',' << e.c.get_str() << ';';
    const std::string key = os.str();
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = cache_.find(key);
      if (it != cache_.end() && it->second->pmax >= pmax) return it->second;
    }
    auto built = std::make_shared<const CreationTable>(build_creation(terms, std::max(pmax, 0), N));
    std::lock_guard<std::mutex> lock(mu_);
    auto& slot = cache_[key];
    if (!slot || slot->pmax < built->pmax) slot = built;
    return slot;
  }
  void clear() {
    std::lock_guard<std::mutex> lock(mu_);
    cache_.clear();
  }

 private:
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<const CreationTable>> cache_;
};

inline CreationCache& creation_cache() {
  static CreationCache c;
  return c;
}

}  // namespace detail

/// Bumped whenever a catalog formula changes; part of every memo key.
inline constexpr const char* catalog_version = "dyfock-catalog-1";

/// Optional memo for expand, installed by the cache layer.
class ExpandMemo {
 public:
  virtual ~ExpandMemo() = default;
  virtual bool get(const std::string& key, Expansion& out) = 0;
  virtual void put(const std::string& key, const Expansion& e) = 0;
};

inline ExpandMemo*& expand_memo() {
  static ExpandMemo* memo = nullptr;
  return memo;
}

inline Expansion expand_uncached(const OperatorSpec& spec, const FockVector& v, int hi, std::size_t N);

/// Exact expansion of spec(u) v modulo h^N for every exponent <= hi.
inline Expansion expand(const OperatorSpec& spec, const FockVector& v, int hi, std::size_t N) {
  ExpandMemo* memo = expand_memo();
  if (!memo) return expand_uncached(spec, v, hi, N);
  std::ostringstream key;
  key << catalog_version << '\n' << spec.key() << '\n' << hi << ' ' << N << '\n' << serialize(v.truncated(N));
  Expansion e;
  if (memo->get(key.str(), e)) return e;
  e = expand_uncached(spec, v, hi, N);
  memo->put(key.str(), e);
  return e;
}

inline Expansion expand_uncached(const OperatorSpec& spec, const FockVector& v, int hi, std::size_t N) {
  if (v.order() < N) throw std::invalid_argument("vector order below requested truncation");
  std::size_t first_noncreation = 0;
  while (first_noncreation < spec.factors.size() && spec.factors[first_noncreation].kind == FactorKind::ExpCreation)
    ++first_noncreation;
  for (std::size_t i = first_noncreation; i < spec.factors.size(); ++i)
    if (spec.factors[i].kind == FactorKind::ExpCreation)
      throw WindowUnsound("creation factor to the right of a non-creation factor in " + spec.name);

  // Annihilators commute with lattice shifts and gradings: merge them into one
  // exponential acting first.
  std::vector<PrimitiveFactor> factors(spec.factors.begin(), spec.factors.begin() + first_noncreation);
  std::vector<ExpTerm> ann;
  for (std::size_t i = first_noncreation; i < spec.factors.size(); ++i) {
    const auto& f = spec.factors[i];
    if (f.kind == FactorKind::ExpAnnihilation) ann.insert(ann.end(), f.exp.begin(), f.exp.end());
    else factors.push_back(f);
  }
  if (!ann.empty()) factors.push_back(PrimitiveFactor::annihilation("annihilation", std::move(ann)));

  // Largest exponent a term at lattice point mu may carry just before factor i
  // and still reach u^hi: creation only raises, later grading factors shift by
  // their total exponent and their h/u expansions lower by at most N-1 in
  // total. A later annihilation factor can lower arbitrarily, so no pruning.
  auto limit_before = [&](std::size_t i, LatticePoint mu) -> long {
    Rational raise;
    for (std::size_t k = i; k-- > first_noncreation;) {
      const auto& g = factors[k];
      if (g.kind == FactorKind::ExpAnnihilation) return LONG_MAX / 4;
      if (g.kind == FactorKind::LatticeShift) {
        mu = mu.shifted(g.shift);
      } else if (g.kind == FactorKind::GradedPower || g.kind == FactorKind::ScalarBinom) {
        for (const auto& term : g.graded) raise += term.scale * graded_eigenvalue(term.selector, mu);
      }
    }
    mpz_class fl;
    mpz_fdiv_q(fl.get_mpz_t(), raise.get_num_mpz_t(), raise.get_den_mpz_t());
    return static_cast<long>(hi) - fl.get_si() + static_cast<long>(N) - 1;
  };

  detail::State state;
  if (!v.is_zero()) state.emplace(0, v.truncated(N));
  for (std::size_t i = factors.size(); i-- > first_noncreation;) {
    const auto& f = factors[i];
    switch (f.kind) {
      case FactorKind::GradedPower:
      case FactorKind::ScalarBinom: state = detail::graded_step(state, f, N); break;
      case FactorKind::LatticeShift: state = detail::lattice_step(state, f); break;
      case FactorKind::ExpAnnihilation:
        state = detail::annihilation_step(state, f, N, [&](const LatticePoint& mu) { return limit_before(i, mu); });
        break;
      case FactorKind::ExpCreation: break;
    }
  }

  Expansion out;
  out.hi = hi;
  out.order = N;
  if (state.empty()) {
    out.lowest = hi + 1;
    return out;
  }
  out.lowest = state.begin()->first;

  std::vector<ExpTerm> cterms;
  for (std::size_t i = 0; i < first_noncreation; ++i)
    cterms.insert(cterms.end(), factors[i].exp.begin(), factors[i].exp.end());
  if (cterms.empty()) {
    for (auto& [p, vec] : state)
      if (p <= hi) out.terms.emplace(p, std::move(vec));
    return out;
  }
  const int pmax = hi - out.lowest;
  if (pmax < 0) return out;
  const auto table = detail::creation_cache().get(cterms, pmax, N);
  for (const auto& [p0, vec] : state) {
    if (p0 > hi) break;
    for (const auto& [mu, terms] : vec.data()) {
      for (const auto& [m, x] : terms) {
        const std::size_t vx = x.valuation();
        for (const auto& [p, monos] : table->table) {
          if (p0 + p > hi) break;
          auto& target = out.terms.try_emplace(p0 + p, FockVector(N)).first->second;
          for (const auto& [mm, c] : monos) {
            if (vx + c.valuation() >= N) continue;
            target.add_term(mu, m.times(mm), x * c);
          }
        }
      }
    }
  }
  for (auto it = out.terms.begin(); it != out.terms.end();)
    it = it->second.is_zero() ? out.terms.erase(it) : std::next(it);
  return out;
}

/// The mode of spec(u) = sum_r op(r) u^(-r-1) applied to v: op(r) v mod h^N.
inline FockVector apply_mode(const OperatorSpec& spec, int r, const FockVector& v, std::size_t N) {
  const int p = -r - 1;
  const Expansion e = expand(spec, v, p, N);
  auto it = e.terms.find(p);
  return it == e.terms.end() ? FockVector(N) : it->second;
}

/// Lower bound on the u-exponents of spec(u) v at or below hi.
inline int lowest_exponent(const OperatorSpec& spec, const FockVector& v, int hi, std::size_t N) {
  const Expansion e = expand(spec, v, hi, N);
  return e.terms.empty() ? hi + 1 : std::min(e.lowest, e.terms.begin()->first);
}

/// Windowed coefficients of spec(u) v on [lo, hi].
inline USeriesVector apply(const OperatorSpec& spec, const FockVector& v, int lo, int hi, std::size_t N,
                           const std::string& var = "u") {
  if (lo > hi) throw std::invalid_argument("empty window");
  const Expansion e = expand(spec, v, hi, N);
  USeriesVector out({var}, {{lo, hi}}, N);
  bool below_empty = true;
  for (const auto& [p, vec] : e.terms) {
    if (p < lo) below_empty = false;
    else out.add({p}, vec);
  }
  out.below_window_empty[0] = below_empty;
  return out;
}

/// Composition spec_1(x_1) ... spec_k(x_k) v (rightmost first), each variable
/// used once. `total_cap` drops cells whose exponent sum exceeds it.
inline USeriesVector apply_product(const std::vector<std::pair<OperatorSpec, std::string>>& specs, const FockVector& v,
                                   const std::map<std::string, std::pair<int, int>>& windows, std::size_t N,
                                   int total_cap = INT_MAX / 4) {
  if (specs.empty() || specs.size() > 3) throw std::invalid_argument("apply_product takes 1 to 3 factors");
  std::vector<std::string> vars;
  std::vector<std::pair<int, int>> win;
  for (const auto& [s, x] : specs) {
    if (std::find(vars.begin(), vars.end(), x) != vars.end())
      throw std::invalid_argument("variable used twice in apply_product: " + x);
    vars.push_back(x);
    auto it = windows.find(x);
    if (it == windows.end()) throw std::invalid_argument("no window for variable " + x);
    if (it->second.first > it->second.second) throw std::invalid_argument("empty window for " + x);
    win.push_back(it->second);
  }
  const std::size_t k = specs.size();
  int min_lo_rest = 0;
  for (const auto& w : win) min_lo_rest += w.first;
  USeriesVector out(vars, win, N);
  std::vector<bool> below(k, true);

  std::map<std::vector<int>, FockVector> cur;
  cur.emplace(std::vector<int>(k, 0), v.truncated(N));
  int lo_sum_left = min_lo_rest;  // sum of lower window ends for variables not yet applied
  for (std::size_t idx = k; idx-- > 0;) {
    const auto& [spec, x] = specs[idx];
    const auto [lo, hi] = win[idx];
    lo_sum_left -= lo;
    std::map<std::vector<int>, FockVector> nxt;
    for (const auto& [e, vec] : cur) {
      int used = 0;
      for (std::size_t j = idx + 1; j < k; ++j) used += e[j];
      const int cap = std::min(hi, total_cap - used - lo_sum_left);
      if (cap < lo) continue;
      const Expansion ex = expand(spec, vec, cap, N);
      for (const auto& [p, w] : ex.terms) {
        if (p < lo) {
          below[idx] = false;
          continue;
        }
        auto e2 = e;
        e2[idx] = p;
        nxt.emplace(std::move(e2), w);
      }
    }
    cur = std::move(nxt);
  }
  for (auto& [e, vec] : cur) out.add(e, vec);
  out.below_window_empty = below;
  out.total_cap = total_cap;
  return out;
}

/// Splits a one-variable series into strictly negative and nonnegative parts.
inline std::pair<USeriesVector, USeriesVector> split_halves(const USeriesVector& sv) {
  if (sv.vars.size() != 1) throw std::invalid_argument("split_halves needs a one-variable series");
  if (!sv.below_window_empty[0]) throw IncompleteWindow("split_halves needs a certified lower window");
  USeriesVector neg = sv, nonneg = sv;
  neg.coeffs.clear();
  nonneg.coeffs.clear();
  for (const auto& [e, v] : sv.coeffs) (e[0] < 0 ? neg : nonneg).add(e, v);
  return {neg, nonneg};
}

/// Lowest exponent of variable i present in sv (window lo when empty).
inline int lowest_present(const USeriesVector& sv, std::size_t i) {
  if (sv.coeffs.empty()) return sv.window[i].first;
  int m = INT_MAX;
  for (const auto& [e, v] : sv.coeffs) m = std::min(m, e[i]);
  return m;
}

/// Replaces variable `var` by `target + c h` and merges it into `target`.
/// `lower_target` and `lower_var` are lower bounds on the exponents of the
/// full series (not only the stored box). Output exponents of `target` are
/// kept only where every contributing cell lies inside the computed region.
inline USeriesVector substitute_shift(const USeriesVector& sv, const std::string& var, const std::string& target,
                                      const Rational& c, int lower_target, int lower_var) {
  const std::size_t iv = sv.var_index(var), it = sv.var_index(target);
  if (!sv.below_window_empty[iv] || !sv.below_window_empty[it])
    throw IncompleteWindow("substitution needs certified lower windows in both variables");
  const std::size_t N = sv.order;
  const int A0 = lower_target, B0 = lower_var;
  const int Ahi = sv.window[it].second, Bhi = sv.window[iv].second;
  const int n1 = static_cast<int>(N) - 1;
  // cell (a, b) feeds target exponents a + b - j with 0 <= j < N
  const int Mhi = std::min({Ahi + B0, Bhi + A0, sv.total_cap}) - n1;
  const int Mlo = A0 + B0 - n1;
  std::vector<std::string> vars;
  std::vector<std::pair<int, int>> win;
  for (std::size_t i = 0; i < sv.vars.size(); ++i) {
    if (i == iv) continue;
    vars.push_back(sv.vars[i]);
    win.push_back(i == it ? std::make_pair(Mlo, std::max(Mlo, Mhi)) : sv.window[i]);
  }
  USeriesVector out(vars, win, N);
  for (std::size_t i = 0, j = 0; i < sv.vars.size(); ++i) {
    if (i == iv) continue;
    out.below_window_empty[j++] = sv.below_window_empty[i];
  }
  if (Mhi < Mlo) return out;
  std::map<int, std::map<int, HSeries>> powcache;
  for (const auto& [e, vec] : sv.coeffs) {
    const int a = e[it], b = e[iv];
    if (a < A0 || b < B0) throw IncompleteWindow("stored cell below the asserted lower bound");
    auto& sp = powcache[b];
    if (sp.empty()) sp = shifted_power(b, c, N);
    for (const auto& [pw, hs] : sp) {
      const int M = a + pw;
      if (M > Mhi || hs.is_zero()) continue;
      std::vector<int> e2;
      for (std::size_t i = 0; i < e.size(); ++i) {
        if (i == iv) continue;
        e2.push_back(i == it ? M : e[i]);
      }
      FockVector w(N);
      w.add_scaled(vec, hs);
      out.add(e2, w);
    }
  }
  return out;
}

/// Substitution using the lowest stored exponents as lower bounds.
inline USeriesVector substitute_shift(const USeriesVector& sv, const std::string& var, const std::string& target,
                                      const Rational& c) {
  const std::size_t iv = sv.var_index(var), it = sv.var_index(target);
  return substitute_shift(sv, var, target, c, lowest_present(sv, it), lowest_present(sv, iv));
}

}  // namespace dyfock
