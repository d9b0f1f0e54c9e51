#pragma once

// Monomial bases of the principal submodule and of L_i: difference-two
// enumeration, straightening of xbar-monomials, flavor conversion, classical
// rank certification, semi-infinite stages and the Heisenberg extension.

#include "dyfock/linalg.hpp"
#include "dyfock/ops.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace dyfock {

class NoTermination : public std::runtime_error {
 public:
  explicit NoTermination(const std::string& w) : std::runtime_error(w) {}
};

enum class Flavor { x, xbar, xtilde };

inline const char* flavor_name(Flavor f) {
  switch (f) {
    case Flavor::x: return "x";
    case Flavor::xbar: return "xbar";
    case Flavor::xtilde: return "xtilde";
  }
  return "?";
}

inline Flavor parse_flavor(const std::string& s) {
  if (s == "x") return Flavor::x;
  if (s == "xbar") return Flavor::xbar;
  if (s == "xtilde") return Flavor::xtilde;
  throw std::invalid_argument("unknown flavor: " + s);
}

inline const OperatorSpec& flavor_spec(Flavor f) {
  static const OperatorSpec x = catalog("X_alpha", Variant::norm);
  static const OperatorSpec xb = catalog("Xbar", Variant::norm);
  static const OperatorSpec xt = catalog("Xtilde", Variant::norm);
  return f == Flavor::x ? x : (f == Flavor::xbar ? xb : xt);
}

/// kappa^(-k_m) ... kappa^(-k_1) e^(charge alpha) y(r_n) ... y(r_1) applied to
/// the vacuum of the sector; modes[0] = r_1 acts first.
struct MonomialIndex {
  Flavor flavor = Flavor::xbar;
  std::vector<int> modes;
  long charge = 0;
  int sector = 0;
  std::vector<int> kappas;

  long degree() const {
    long d = 0;
    for (int r : modes) d -= r;
    return d;
  }
  std::size_t size() const { return modes.size(); }

  /// r_1 <= -1 and r_(j+1) <= r_j - 2.
  bool admissible() const {
    for (std::size_t j = 0; j < modes.size(); ++j) {
      if (j == 0 && modes[0] > -1) return false;
      if (j > 0 && modes[j] > modes[j - 1] - 2) return false;
    }
    return true;
  }

  std::string str() const {
    std::ostringstream os;
    for (auto it = kappas.rbegin(); it != kappas.rend(); ++it) os << "kappa(" << -*it << ")";
    if (charge != 0) os << "e^(" << charge << "a)";
    for (auto it = modes.rbegin(); it != modes.rend(); ++it) os << flavor_name(flavor) << "(" << *it << ")";
    os << "|" << sector << ">";
    return os.str();
  }

  friend bool operator<(const MonomialIndex& a, const MonomialIndex& b) {
    return std::make_tuple(a.degree(), a.modes.size(), a.modes, a.flavor, a.sector, a.charge, a.kappas) <
           std::make_tuple(b.degree(), b.modes.size(), b.modes, b.flavor, b.sector, b.charge, b.kappas);
  }
  friend bool operator==(const MonomialIndex& a, const MonomialIndex& b) {
    return a.flavor == b.flavor && a.modes == b.modes && a.charge == b.charge && a.sector == b.sector &&
           a.kappas == b.kappas;
  }
};

/// An h-series combination of monomials, exact modulo h^order.
struct Combination {
  std::size_t order = 1;
  std::map<MonomialIndex, HSeries> terms;

  void add(const MonomialIndex& idx, const HSeries& c) {
    if (c.is_zero()) return;
    auto it = terms.find(idx);
    if (it == terms.end()) {
      terms.emplace(idx, c);
      return;
    }
    it->second += c;
    if (it->second.is_zero()) terms.erase(it);
  }
};

// ---------------------------------------------------------------------------
// enumeration and counts

/// Admissible indices with degree <= d_max and at most n_max modes, ordered
/// by degree, then number of modes, then modes.
inline std::vector<MonomialIndex> enumerate_basis(int d_max, int n_max, Flavor flavor = Flavor::xbar,
                                                  int sector = 0) {
  std::vector<MonomialIndex> out;
  std::vector<int> cur;
  auto rec = [&](auto&& self, int max_mode, int budget) -> void {
    MonomialIndex idx;
    idx.flavor = flavor;
    idx.sector = sector;
    idx.modes = cur;
    out.push_back(idx);
    if (static_cast<int>(cur.size()) >= n_max) return;
    for (int r = max_mode; -r <= budget; --r) {
      cur.push_back(r);
      self(self, r - 2, budget + r);
      cur.pop_back();
    }
  };
  rec(rec, -1, d_max);
  std::sort(out.begin(), out.end());
  return out;
}

/// Partitions of d with parts differing pairwise by at least 2, optionally
/// with exactly n parts. Brute force over all partitions of d.
inline long rr_count(int d, std::optional<int> n = std::nullopt) {
  if (d < 0) return 0;
  long count = 0;
  std::vector<int> parts;
  auto rec = [&](auto&& self, int remaining, int max_part) -> void {
    if (remaining == 0) {
      bool ok = true;
      for (std::size_t i = 1; i < parts.size(); ++i) ok = ok && parts[i - 1] - parts[i] >= 2;
      if (ok && (!n || static_cast<int>(parts.size()) == *n)) ++count;
      return;
    }
    for (int p = std::min(remaining, max_part); p >= 1; --p) {
      parts.push_back(p);
      self(self, remaining - p, p);
      parts.pop_back();
    }
  };
  rec(rec, d, d);
  return count;
}

/// Number of partitions of d.
inline long partition_count(int d) {
  std::vector<long> p(static_cast<std::size_t>(std::max(d, 0)) + 1, 0);
  p[0] = 1;
  for (int part = 1; part <= d; ++part)
    for (int s = part; s <= d; ++s) p[s] += p[s - part];
  return d < 0 ? 0 : p[d];
}

/// Partitions of d as non-increasing part lists.
inline std::vector<std::vector<int>> partitions(int d) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  auto rec = [&](auto&& self, int remaining, int max_part) -> void {
    if (remaining == 0) {
      out.push_back(cur);
      return;
    }
    for (int p = std::min(remaining, max_part); p >= 1; --p) {
      cur.push_back(p);
      self(self, remaining - p, p);
      cur.pop_back();
    }
  };
  rec(rec, d, d);
  return out;
}

// ---------------------------------------------------------------------------
// evaluation

/// kappa^(-r) v: the u^(r-1) coefficient of (K^-(u) - 1) v / h.
inline FockVector apply_kappa(int r, const FockVector& v, std::size_t N) {
  if (r < 1) throw std::invalid_argument("kappa^(-r) needs r >= 1");
  static const OperatorSpec km = catalog("K_minus", Variant::norm);
  const FockVector w = v.truncated(N).with_order(N + 1);
  FockVector c = apply_mode(km, -r, w, N + 1);
  if (r == 1) c -= w;
  return c.divided_by_h();
}

inline FockVector evaluate_monomial(const MonomialIndex& idx, std::size_t N) {
  FockVector v = FockVector::vacuum(idx.sector, N);
  const OperatorSpec& spec = flavor_spec(idx.flavor);
  for (int r : idx.modes) {
    if (v.is_zero()) break;
    v = apply_mode(spec, r, v, N);
  }
  if (idx.charge != 0) v = apply_lattice_shift(Displacement::alpha(idx.charge), v);
  for (int k : idx.kappas) v = apply_kappa(k, v, N);
  return v;
}

inline FockVector evaluate(const Combination& c) {
  FockVector out(c.order);
  for (const auto& [idx, coeff] : c.terms) out.add_scaled(evaluate_monomial(idx, c.order), coeff);
  return out;
}

// ---------------------------------------------------------------------------
// straightening

namespace detail {

/// Coefficient of the unordered pair {r, s} at h^k in the u^(-K-2)
/// coefficient of Xbar(u) Xbar(u+h):
///   sum over r + s + k = K of binom(-s-1, k) h^k xbar(r) xbar(s).
inline Rational pair_weight(int r, int s, long k) {
  if (r == s) return binom(Rational(-s - 1), k);
  return binom(Rational(-s - 1), k) + binom(Rational(-r - 1), k);
}

inline long square_sum(const std::vector<int>& m) {
  long s = 0;
  for (int r : m) s += static_cast<long>(r) * r;
  return s;
}

}  // namespace detail

/// Admissible xbar-combination congruent to idx modulo h^m, obtained from
/// the exact relations Xbar(u) Xbar(u+h) = 0 on the vacuum of F_0.
/// With `trace`, one JSON record per rewrite step is appended.
inline Combination straighten(const MonomialIndex& idx, std::size_t m, std::size_t budget = 1000000,
                              std::vector<std::string>* trace = nullptr) {
  if (idx.flavor != Flavor::xbar) throw std::invalid_argument("straighten needs xbar monomials");
  if (idx.sector != 0 || !idx.kappas.empty())
    throw std::invalid_argument("straighten acts on the principal submodule of F_0");
  Combination out;
  out.order = m;
  // (degree, sum of squares, modes sorted descending) -> coefficient
  using Key = std::tuple<long, long, std::vector<int>>;
  std::map<Key, HSeries> work;
  auto push = [&](std::vector<int> modes, const HSeries& c) {
    if (c.is_zero()) return;
    for (int r : modes)
      if (r >= 0) return;
    std::sort(modes.begin(), modes.end(), std::greater<>());
    long d = 0;
    for (int r : modes) d -= r;
    Key key{d, detail::square_sum(modes), std::move(modes)};
    auto it = work.find(key);
    if (it == work.end()) work.emplace(std::move(key), c);
    else {
      it->second += c;
      if (it->second.is_zero()) work.erase(it);
    }
  };
  push(idx.modes, HSeries::constant(1, m));
  std::size_t steps = 0;
  while (!work.empty()) {
    if (++steps > budget) throw NoTermination("straightening exceeded its step budget");
    auto node = work.extract(work.begin());
    const std::vector<int>& modes = std::get<2>(node.key());
    const HSeries& c = node.mapped();
    std::size_t j = 0;
    while (j + 1 < modes.size() && modes[j] - modes[j + 1] >= 2) ++j;
    if (j + 1 >= modes.size()) {
      MonomialIndex res = idx;
      res.modes = modes;
      out.add(res, c);
      continue;
    }
    const int a = modes[j], b = modes[j + 1];
    const int K = a + b;
    if (trace) {
      std::ostringstream rec;
      rec << "{\"step\":" << steps << ",\"modes\":[";
      for (std::size_t i = 0; i < modes.size(); ++i) rec << (i ? "," : "") << modes[i];
      rec << "],\"pair\":[" << a << "," << b << "],\"coefficient\":[";
      for (std::size_t i = 0; i < c.order(); ++i) rec << (i ? "," : "") << '"' << c[i].get_str() << '"';
      rec << "]}";
      trace->push_back(rec.str());
    }
    std::vector<int> rest;
    for (std::size_t i = 0; i < modes.size(); ++i)
      if (i != j && i != j + 1) rest.push_back(modes[i]);
    const Rational inv = -1 / detail::pair_weight(a, b, 0);
    for (long k = 0; k < static_cast<long>(m); ++k) {
      if (c.valuation() + static_cast<std::size_t>(k) >= m) break;
      const int sum = K - static_cast<int>(k);
      // unordered pairs r >= s with r + s = sum and r <= -1
      for (int r = -1; 2 * r >= sum; --r) {
        const int s = sum - r;
        if (k == 0 && r == a) continue;
        const Rational w = detail::pair_weight(r, s, k) * inv;
        if (sgn(w) == 0) continue;
        std::vector<int> next = rest;
        next.push_back(r);
        next.push_back(s);
        push(std::move(next), (c * w).times_h(static_cast<std::size_t>(k)));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// flavor conversion

namespace detail {

/// x(m) w vanishes on a sector-0 vector of charge c and degree D once
/// m > D - c^2 - 2c + N - 2: the annihilators lower by at most the Heisenberg
/// weight, the grading contributes u^(2c), and h/u corrections at most N-1.
inline long vanishing_bound(long degree, long charge, std::size_t N) {
  return degree - charge * charge - 2 * charge + static_cast<long>(N) - 2;
}

/// Expands prod_{r<s} g(u_s, u_r) with g = sum_j c_j h^j (u_s - u_r)^-j in the
/// region |u_s| > |u_r| and reads off target monomials of the source modes.
inline Combination convert_pairs(const MonomialIndex& src, Flavor target, const std::vector<Rational>& c,
                                 std::size_t m) {
  const std::size_t n = src.modes.size();
  Combination out;
  out.order = m;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t r = 0; r < s; ++r) pairs.emplace_back(r, s);
  std::vector<long> jv(pairs.size(), 0);
  // Xbar(u) = X(u) (1 + O(h/u)) raises the vanishing bound by at most m - 1
  const long slack = target == Flavor::xbar ? static_cast<long>(m) - 1 : 0;
  // choose h-powers j per pair with total < m
  auto choose_j = [&](auto&& self, std::size_t pi, long used) -> void {
    if (pi == pairs.size()) {
      Rational base(1);
      for (std::size_t q = 0; q < pairs.size(); ++q) base *= c[static_cast<std::size_t>(jv[q])];
      if (sgn(base) == 0) return;
      // (u_s - u_r)^-j = sum_k binom(-j, k) (-u_r)^k u_s^(-j-k); distribute k
      // position by position from the innermost factor outward.
      std::vector<int> modes = src.modes;
      for (std::size_t q = 0; q < pairs.size(); ++q) modes[pairs[q].second] -= static_cast<int>(jv[q]);
      auto place = [&](auto&& place_self, std::size_t pos, long degree, const Rational& coeff) -> void {
        if (pos == n) {
          MonomialIndex res = src;
          res.flavor = target;
          res.modes = modes;
          long total_j = 0;
          for (long j : jv) total_j += j;
          out.add(res, HSeries::monomial(coeff, static_cast<std::size_t>(total_j), m));
          return;
        }
        // pairs where pos is the inner index and j > 0
        std::vector<std::size_t> inner;
        for (std::size_t q = 0; q < pairs.size(); ++q)
          if (pairs[q].first == pos && jv[q] > 0) inner.push_back(q);
        const long bound = vanishing_bound(degree, static_cast<long>(pos), m) + slack;
        auto spread = [&](auto&& spread_self, std::size_t ii, const Rational& cf) -> void {
          if (ii == inner.size()) {
            if (modes[pos] > bound) return;
            place_self(place_self, pos + 1, degree - modes[pos], cf);
            return;
          }
          const std::size_t q = inner[ii];
          int moved = 0;
          for (long k = 0; modes[pos] <= bound; ++k) {
            const Rational w = binom(Rational(-jv[q]), k) * ((k % 2) ? Rational(-1) : Rational(1));
            spread_self(spread_self, ii + 1, cf * w);
            ++modes[pos];
            --modes[pairs[q].second];
            ++moved;
          }
          modes[pos] -= moved;
          modes[pairs[q].second] += moved;
        };
        spread(spread, 0, coeff);
      };
      place(place, 0, 0, base);
      return;
    }
    for (long j = 0; used + j < static_cast<long>(m) && j < static_cast<long>(c.size()); ++j) {
      jv[pi] = j;
      self(self, pi + 1, used + j);
    }
    jv[pi] = 0;
  };
  choose_j(choose_j, 0, 0);
  return out;
}

/// prod_{r=2..n} (1 + h/u_r)^(e (1-r)) with e = +-1.
inline Combination convert_tilde(const MonomialIndex& src, Flavor target, int e, std::size_t m) {
  const std::size_t n = src.modes.size();
  Combination out;
  out.order = m;
  std::vector<int> modes = src.modes;
  auto rec = [&](auto&& self, std::size_t pos, std::size_t hpow, const Rational& coeff) -> void {
    if (pos == n) {
      MonomialIndex res = src;
      res.flavor = target;
      res.modes = modes;
      out.add(res, HSeries::monomial(coeff, hpow, m));
      return;
    }
    const long expo = e * (1 - static_cast<long>(pos + 1));
    for (std::size_t k = 0; hpow + k < m; ++k) {
      const Rational w = binom(Rational(expo), static_cast<long>(k));
      if (sgn(w) == 0) continue;
      modes[pos] = src.modes[pos] - static_cast<int>(k);
      self(self, pos + 1, hpow + k, coeff * w);
    }
    modes[pos] = src.modes[pos];
  };
  rec(rec, 0, 0, Rational(1));
  return out;
}

inline Combination compose(const Combination& first, Flavor target, std::size_t m,
                           Combination (*step)(const MonomialIndex&, Flavor, std::size_t)) {
  Combination out;
  out.order = m;
  for (const auto& [idx, c] : first.terms)
    for (const auto& [idx2, c2] : step(idx, target, m).terms) out.add(idx2, c * c2);
  return out;
}

}  // namespace detail

/// Expansion of a sector-0 monomial in monomials of another flavor, exact
/// modulo h^m. Uses
///   Xbar(u_n)...Xbar(u_1) 1 = prod_{r<s} (1 - h/(u_s - u_r)) X(u_n)...X(u_1) 1,
///   X~(u_n)...X~(u_1) 1 = prod_{r>=2} (1 + h/u_r)^(1-r) X(u_n)...X(u_1) 1,
/// with 1/(u_s - u_r) expanded for |u_s| > |u_r|, s > r.
inline Combination convert_flavor(const MonomialIndex& idx, Flavor target, std::size_t m);

namespace detail {

inline Combination convert_step(const MonomialIndex& idx, Flavor target, std::size_t m) {
  if (idx.flavor == target) {
    Combination c;
    c.order = m;
    c.add(idx, HSeries::constant(1, m));
    return c;
  }
  if (idx.flavor == Flavor::xbar && target == Flavor::x)
    return convert_pairs(idx, target, {Rational(1), Rational(-1)}, m);
  if (idx.flavor == Flavor::x && target == Flavor::xbar)
    return convert_pairs(idx, target, std::vector<Rational>(m, Rational(1)), m);
  if (idx.flavor == Flavor::xtilde && target == Flavor::x) return convert_tilde(idx, target, 1, m);
  if (idx.flavor == Flavor::x && target == Flavor::xtilde) return convert_tilde(idx, target, -1, m);
  return compose(convert_step(idx, Flavor::x, m), target, m, &convert_step);
}

}  // namespace detail

inline Combination convert_flavor(const MonomialIndex& idx, Flavor target, std::size_t m) {
  if (idx.sector != 0) throw std::invalid_argument("flavor conversion is defined on the vacuum of F_0");
  return detail::convert_step(idx, target, m);
}

// ---------------------------------------------------------------------------
// classical rank and the Heisenberg extension

namespace detail {

inline std::size_t rank_of(const std::vector<FockVector>& vs) {
  std::map<std::pair<LatticePoint, AMonomial>, std::size_t> col;
  for (const auto& v : vs)
    for (const auto& [mu, terms] : v.data())
      for (const auto& [mono, c] : terms) col.try_emplace({mu, mono}, col.size());
  RationalMatrix mat;
  for (const auto& v : vs) {
    std::vector<Rational> row(col.size());
    for (const auto& [mu, terms] : v.data())
      for (const auto& [mono, c] : terms) row[col.at({mu, mono})] = c.coeffs()[0];
    mat.push_back(std::move(row));
  }
  return exact_rank(mat);
}

}  // namespace detail

/// Rank at h = 0 of the admissible x-monomials of charge n and degree d,
/// alongside the difference-two partition count.
inline std::pair<std::size_t, long> classical_rank(int d, int n) {
  std::vector<FockVector> vs;
  for (const auto& idx : enumerate_basis(d, n, Flavor::x))
    if (idx.degree() == d && static_cast<int>(idx.size()) == n) vs.push_back(evaluate_monomial(idx, 1));
  return {detail::rank_of(vs), rr_count(d, n)};
}

/// kappa^(-k_m) ... kappa^(-k_1) applied to the monomial.
inline FockVector heisenberg_extend(const MonomialIndex& idx, const std::vector<int>& kappas, std::size_t N) {
  MonomialIndex full = idx;
  full.kappas.insert(full.kappas.end(), kappas.begin(), kappas.end());
  return evaluate_monomial(full, N);
}

/// Rank at h = 0 of kappa-monomials times admissible x~-monomials of charge n
/// with total degree D, alongside sum over D1 + D2 = D of p(D1) rr(D2, n).
inline std::pair<std::size_t, long> extended_rank(int D, int n) {
  std::vector<FockVector> vs;
  long expected = 0;
  for (int d1 = 0; d1 <= D; ++d1) {
    const int d2 = D - d1;
    expected += partition_count(d1) * rr_count(d2, n);
    const auto parts = partitions(d1);
    for (const auto& b : enumerate_basis(d2, n, Flavor::xtilde))
      if (b.degree() == d2 && static_cast<int>(b.size()) == n)
        for (const auto& p : parts) vs.push_back(heisenberg_extend(b, p, 1));
  }
  return {detail::rank_of(vs), expected};
}

// ---------------------------------------------------------------------------
// semi-infinite stages

/// The form e^(m alpha) b (x~-flavor, sector i) rewritten one stage down:
///   e^((m-1) alpha) x~(r_n - 2) ... x~(r_1 - 2) x~(-1-i) |i>,
/// from x~(1-i) e^(lambda_i - alpha) 1 = e^(lambda_i) 1 and x~(r) e^-alpha = e^-alpha x~(r-2).
inline MonomialIndex semi_infinite_stage(int sector, long m, const MonomialIndex& b) {
  if (b.flavor != Flavor::xtilde) throw std::invalid_argument("semi-infinite stages use x~ monomials");
  MonomialIndex out;
  out.flavor = Flavor::xtilde;
  out.sector = sector;
  out.charge = m - 1;
  out.kappas = b.kappas;
  out.modes.push_back(-1 - sector);
  for (int r : b.modes) out.modes.push_back(r - 2);
  return out;
}

/// The stage-m form of b.
inline MonomialIndex stage_form(int sector, long m, const MonomialIndex& b) {
  MonomialIndex out = b;
  out.sector = sector;
  out.charge = m;
  return out;
}

/// Modes after k descents from the vacuum class of sector i: consecutive odd
/// (i = 0) or even (i = 1) integers.
inline std::vector<int> descent_tail(int sector, int k) {
  MonomialIndex b;
  b.flavor = Flavor::xtilde;
  long m = k;
  for (int s = 0; s < k; ++s) b = semi_infinite_stage(sector, m--, b);
  return b.modes;
}

}  // namespace dyfock
