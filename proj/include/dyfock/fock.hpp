#pragma once

// Fock spaces F_{i,s}: creation monomials in a_j(-r) tensored with lattice
// points, with HSeries coefficients.

#include "dyfock/arith.hpp"

#include <cstdint>
#include <functional>
#include <iterator>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace dyfock {

struct SectorViolation : std::domain_error {
  explicit SectorViolation(const std::string& w) : std::domain_error(w) {}
};

enum class Graded { eps1, eps2, dalpha, dalpha_half, one };

inline const char* graded_name(Graded g) {
  switch (g) {
    case Graded::eps1: return "d_eps1";
    case Graded::eps2: return "d_eps2";
    case Graded::dalpha: return "d_alpha";
    case Graded::dalpha_half: return "d_alpha_half";
    case Graded::one: return "one";
  }
  return "?";
}

/// Displacement in the weight lattice, in the basis eps1, eps2.
struct Displacement {
  Rational d1, d2;
  static Displacement alpha(long k = 1) { return {Rational(k), Rational(-k)}; }
  static Displacement lambda1() { return {Rational(1), Rational(0)}; }
  Displacement operator-() const { return {-d1, -d2}; }
  Displacement operator+(const Displacement& o) const { return {d1 + o.d1, d2 + o.d2}; }
  friend bool operator==(const Displacement& a, const Displacement& b) {
    return a.d1 == b.d1 && a.d2 == b.d2;
  }
};

struct LatticePoint {
  Rational m1, m2;
  int sector = 0;
  Rational s;

  /// lambda_i + k*alpha + (s/2)(eps1+eps2).
  static LatticePoint make(int sector, long k, const Rational& s = Rational(0)) {
    if (sector != 0 && sector != 1) throw std::invalid_argument("sector must be 0 or 1");
    LatticePoint p;
    p.sector = sector;
    p.s = s;
    const Rational half_s = s / 2;
    p.m1 = Rational(sector + k) + half_s;
    p.m2 = Rational(-k) + half_s;
    return p;
  }

  /// k with mu = lambda_i + k alpha + (s/2)(eps1+eps2); throws if mu is off the coset.
  long charge() const {
    const Rational half_s = s / 2;
    const Rational k = -(m2 - half_s);
    const Rational chk = m1 - half_s - sector;
    if (!is_integer(k) || chk != k) throw SectorViolation("lattice point outside lambda_i + Z alpha");
    return to_long(k);
  }

  bool in_coset() const {
    try {
      (void)charge();
      return true;
    } catch (const SectorViolation&) {
      return false;
    }
  }

  LatticePoint shifted(const Displacement& d) const {
    LatticePoint p = *this;
    p.m1 += d.d1;
    p.m2 += d.d2;
    return p;
  }

  friend bool operator<(const LatticePoint& a, const LatticePoint& b) {
    if (a.sector != b.sector) return a.sector < b.sector;
    if (a.s != b.s) return a.s < b.s;
    if (a.m1 != b.m1) return a.m1 < b.m1;
    return a.m2 < b.m2;
  }
  friend bool operator==(const LatticePoint& a, const LatticePoint& b) {
    return a.sector == b.sector && a.s == b.s && a.m1 == b.m1 && a.m2 == b.m2;
  }
  friend bool operator!=(const LatticePoint& a, const LatticePoint& b) { return !(a == b); }
};

inline Rational graded_eigenvalue(Graded which, const LatticePoint& p) {
  switch (which) {
    case Graded::eps1: return p.m1;
    case Graded::eps2: return p.m2;
    case Graded::dalpha: return p.m1 - p.m2;
    case Graded::dalpha_half: return (p.m1 - p.m2) / 2;
    case Graded::one: return Rational(1);
  }
  return Rational(0);
}

inline Rational graded_eigenvalue(Graded which, const Displacement& d) {
  switch (which) {
    case Graded::eps1: return d.d1;
    case Graded::eps2: return d.d2;
    case Graded::dalpha: return d.d1 - d.d2;
    case Graded::dalpha_half: return (d.d1 - d.d2) / 2;
    case Graded::one: return Rational(0);
  }
  return Rational(0);
}

/// Creation monomial: sorted multiset of codes 2*(r-1) + (j-1) for a_j(-r).
class AMonomial {
 public:
  AMonomial() = default;

  static int code(int color, int r) { return 2 * (r - 1) + (color - 1); }
  static int color_of(int code) { return code % 2 + 1; }
  static int mode_of(int code) { return code / 2 + 1; }

  static AMonomial from_modes(const std::vector<std::pair<int, int>>& modes) {
    AMonomial m;
    for (auto [j, r] : modes) m.insert(j, r);
    return m;
  }

  void insert(int color, int r) {
    if ((color != 1 && color != 2) || r < 1) throw std::invalid_argument("bad creation mode");
    const int c = code(color, r);
    codes_.insert(std::upper_bound(codes_.begin(), codes_.end(), c), c);
  }

  /// Removes one copy of a_j(-r); returns its multiplicity before removal.
  int remove(int color, int r) {
    const int c = code(color, r);
    auto lo = std::lower_bound(codes_.begin(), codes_.end(), c);
    auto hi = std::upper_bound(lo, codes_.end(), c);
    const int n = static_cast<int>(hi - lo);
    if (n > 0) codes_.erase(lo);
    return n;
  }

  int multiplicity(int color, int r) const {
    const int c = code(color, r);
    auto range = std::equal_range(codes_.begin(), codes_.end(), c);
    return static_cast<int>(range.second - range.first);
  }

  AMonomial times(const AMonomial& o) const {
    AMonomial m;
    m.codes_.reserve(codes_.size() + o.codes_.size());
    std::merge(codes_.begin(), codes_.end(), o.codes_.begin(), o.codes_.end(),
               std::back_inserter(m.codes_));
    return m;
  }

  int weight() const {
    int w = 0;
    for (int c : codes_) w += mode_of(c);
    return w;
  }

  const std::vector<int>& codes() const { return codes_; }
  std::size_t size() const { return codes_.size(); }
  bool empty() const { return codes_.empty(); }

  /// (color, r, multiplicity) runs in canonical order.
  std::vector<std::tuple<int, int, int>> runs() const {
    std::vector<std::tuple<int, int, int>> out;
    for (std::size_t i = 0; i < codes_.size();) {
      std::size_t k = i;
      while (k < codes_.size() && codes_[k] == codes_[i]) ++k;
      out.emplace_back(color_of(codes_[i]), mode_of(codes_[i]), static_cast<int>(k - i));
      i = k;
    }
    return out;
  }

  std::string str() const {
    if (codes_.empty()) return "1";
    std::ostringstream os;
    for (std::size_t i = 0; i < codes_.size(); ++i) {
      if (i) os << ' ';
      os << 'a' << color_of(codes_[i]) << '(' << -mode_of(codes_[i]) << ')';
    }
    return os.str();
  }

  friend bool operator<(const AMonomial& a, const AMonomial& b) { return a.codes_ < b.codes_; }
  friend bool operator==(const AMonomial& a, const AMonomial& b) { return a.codes_ == b.codes_; }

 private:
  std::vector<int> codes_;
};

/// Finite combination of (lattice point, creation monomial) terms.
class FockVector {
 public:
  using Terms = std::map<AMonomial, HSeries>;
  using Data = std::map<LatticePoint, Terms>;

  explicit FockVector(std::size_t order = 1) : order_(order) {
    if (order == 0) throw std::invalid_argument("order must be positive");
  }

  static FockVector basis(const LatticePoint& p, const AMonomial& m, std::size_t order) {
    FockVector v(order);
    v.add_term(p, m, HSeries::constant(1, order));
    return v;
  }
  static FockVector vacuum(int sector, std::size_t order) {
    return basis(LatticePoint::make(sector, 0), AMonomial(), order);
  }

  std::size_t order() const { return order_; }
  const Data& data() const { return data_; }
  bool is_zero() const { return data_.empty(); }

  std::size_t term_count() const {
    std::size_t n = 0;
    for (const auto& [p, t] : data_) n += t.size();
    return n;
  }

  void add_term(const LatticePoint& p, const AMonomial& m, const HSeries& c) {
    if (c.is_zero()) return;
    auto& terms = data_[p];
    auto it = terms.find(m);
    if (it == terms.end()) {
      terms.emplace(m, c.order() == order_ ? c : c.resized(order_));
    } else {
      it->second += c.order() < order_ ? c.resized(order_) : c;
      if (it->second.is_zero()) terms.erase(it);
    }
    if (terms.empty()) data_.erase(p);
  }

  /// this += a * c, coefficients truncated to this order.
  void add_scaled(const FockVector& a, const HSeries& c) {
    for (const auto& [p, terms] : a.data_)
      for (const auto& [m, x] : terms) add_term(p, m, x * c);
  }
  void add_scaled(const FockVector& a, const Rational& q) {
    if (sgn(q) == 0) return;
    for (const auto& [p, terms] : a.data_)
      for (const auto& [m, x] : terms) add_term(p, m, x * q);
  }

  FockVector& operator+=(const FockVector& o) {
    for (const auto& [p, terms] : o.data_)
      for (const auto& [m, x] : terms) add_term(p, m, x);
    return *this;
  }
  FockVector& operator-=(const FockVector& o) {
    for (const auto& [p, terms] : o.data_)
      for (const auto& [m, x] : terms) add_term(p, m, -x);
    return *this;
  }
  friend FockVector operator+(FockVector a, const FockVector& b) { return a += b; }
  friend FockVector operator-(FockVector a, const FockVector& b) { return a -= b; }

  FockVector truncated(std::size_t order) const {
    FockVector out(std::min(order, order_));
    for (const auto& [p, terms] : data_)
      for (const auto& [m, x] : terms) out.add_term(p, m, x.truncated(out.order_));
    return out;
  }
  /// Same vector viewed at another order; raising the order pads with zeros.
  FockVector with_order(std::size_t order) const {
    FockVector out(order);
    for (const auto& [p, terms] : data_)
      for (const auto& [m, x] : terms) out.add_term(p, m, x.resized(order));
    return out;
  }

  FockVector times_h(std::size_t k) const {
    FockVector out(order_);
    for (const auto& [p, terms] : data_)
      for (const auto& [m, x] : terms) out.add_term(p, m, x.times_h(k));
    return out;
  }
  /// Exact division by h; the order drops by one.
  FockVector divided_by_h() const {
    FockVector out(order_ - 1);
    for (const auto& [p, terms] : data_)
      for (const auto& [m, x] : terms) out.add_term(p, m, x.divided_by_h(1));
    return out;
  }

  int weight() const {
    int w = 0;
    for (const auto& [p, terms] : data_)
      for (const auto& [m, x] : terms) w = std::max(w, m.weight());
    return w;
  }

  friend bool operator==(const FockVector& a, const FockVector& b) {
    return (a - b).is_zero();
  }

  std::string str() const;

 private:
  std::size_t order_;
  Data data_;
};

inline std::string FockVector::str() const {
  std::ostringstream os;
  os << "order " << order_ << '\n';
  for (const auto& [p, terms] : data_) {
    for (const auto& [m, x] : terms) {
      os << p.m1.get_str() << ' ' << p.m2.get_str() << ' ' << p.sector << ' ' << p.s.get_str() << " |";
      for (int c : m.codes()) os << ' ' << AMonomial::color_of(c) << ':' << AMonomial::mode_of(c);
      os << " |";
      for (std::size_t k = 0; k < x.order(); ++k) os << ' ' << x[k].get_str();
      os << '\n';
    }
  }
  return os.str();
}

/// Canonical text form: one term per line, ordered by lattice point then monomial.
inline std::string serialize(const FockVector& v) { return v.str(); }

inline FockVector parse_fock_vector(const std::string& text) {
  std::istringstream in(text);
  std::string word;
  std::size_t order = 0;
  if (!(in >> word >> order) || word != "order" || order == 0)
    throw std::invalid_argument("FockVector text must start with 'order N'");
  FockVector v(order);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto bar1 = line.find('|');
    const auto bar2 = line.find('|', bar1 + 1);
    if (bar1 == std::string::npos || bar2 == std::string::npos)
      throw std::invalid_argument("malformed FockVector line: " + line);
    std::istringstream head(line.substr(0, bar1));
    std::string m1, m2, s;
    int sector = 0;
    if (!(head >> m1 >> m2 >> sector >> s)) throw std::invalid_argument("malformed lattice point");
    LatticePoint p;
    p.m1 = parse_rational(m1);
    p.m2 = parse_rational(m2);
    p.sector = sector;
    p.s = parse_rational(s);
    std::istringstream modes(line.substr(bar1 + 1, bar2 - bar1 - 1));
    AMonomial m;
    std::string tok;
    while (modes >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) throw std::invalid_argument("malformed mode " + tok);
      m.insert(std::stoi(tok.substr(0, colon)), std::stoi(tok.substr(colon + 1)));
    }
    std::istringstream coeffs(line.substr(bar2 + 1));
    std::vector<Rational> cs;
    while (coeffs >> tok) cs.push_back(parse_rational(tok));
    if (cs.size() != order) throw std::invalid_argument("coefficient count differs from order");
    v.add_term(p, m, HSeries(cs));
  }
  return v;
}

/// a_j(r): creation for r < 0, the derivation r d/da_j(-r) for r > 0 (level 1).
inline FockVector apply_mode(int color, int r, const FockVector& v) {
  if (r == 0) throw std::invalid_argument("mode index must be nonzero");
  FockVector out(v.order());
  for (const auto& [p, terms] : v.data()) {
    for (const auto& [m, x] : terms) {
      if (r < 0) {
        AMonomial n = m;
        n.insert(color, -r);
        out.add_term(p, n, x);
      } else {
        AMonomial n = m;
        const int mult = n.remove(color, r);
        if (mult > 0) out.add_term(p, n, x * Rational(static_cast<long>(r) * mult));
      }
    }
  }
  return out;
}

inline FockVector apply_lattice_shift(const Displacement& d, const FockVector& v, bool strict = false) {
  FockVector out(v.order());
  for (const auto& [p, terms] : v.data()) {
    const LatticePoint q = p.shifted(d);
    if (strict && !q.in_coset()) throw SectorViolation("shift leaves the sector coset");
    for (const auto& [m, x] : terms) out.add_term(q, m, x);
  }
  return out;
}

inline FockVector classical_project(const FockVector& v) { return v.truncated(1); }

/// Seeded random vector: a few terms with small modes and charges in sector i.
inline FockVector random_vector(std::uint64_t seed, int sector, std::size_t order, int max_weight = 3,
                                int terms = 3, int max_charge = 1) {
  std::mt19937_64 rng(seed);
  auto pick = [&rng](long lo, long hi) {
    return lo + static_cast<long>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
  };
  FockVector v(order);
  while (v.is_zero()) {
    for (int t = 0; t < terms; ++t) {
      const auto p = LatticePoint::make(sector, pick(-max_charge, max_charge));
      AMonomial m;
      int budget = static_cast<int>(pick(0, max_weight));
      while (budget > 0) {
        const int r = static_cast<int>(pick(1, budget));
        m.insert(static_cast<int>(pick(1, 2)), r);
        budget -= r;
      }
      HSeries c(order);
      for (std::size_t k = 0; k < order; ++k) c[k] = make_rational(pick(-3, 3), pick(1, 3));
      if (c[0] == 0) c[0] = 1;
      v.add_term(p, m, c);
    }
  }
  return v;
}

}  // namespace dyfock
