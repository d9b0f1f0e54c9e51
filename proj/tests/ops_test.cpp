#include "dyfock/drinfeld.hpp"
#include "dyfock/ops.hpp"

#include <gtest/gtest.h>

using namespace dyfock;

namespace {

using Grid = std::map<std::pair<int, int>, FockVector>;

void grid_add(Grid& g, int a, int b, const FockVector& v, std::size_t N) {
  auto [it, fresh] = g.emplace(std::make_pair(a, b), FockVector(N));
  it->second += v;
}

/// Classical oracle for Xbar(u) Xbar(v)|0> at h = 0, built from the lattice
/// vertex operator formula: (u - v)^2 exp(sum_r beta(-r) (u^r + v^r) / r) e^(2 alpha)
/// with beta = a_2 - a_1. Coefficients with total degree <= D.
Grid classical_xbar_pair(int D) {
  const std::size_t N = 1;
  auto beta = [](int r, const FockVector& x) {
    FockVector out = apply_mode(2, -r, x);
    out -= apply_mode(1, -r, x);
    return out;
  };
  Grid g;
  grid_add(g, 0, 0, FockVector::basis(LatticePoint::make(0, 2), AMonomial(), N), N);
  for (int r = 1; r <= D; ++r) {
    // exp(beta(-r)/r * (u^r + v^r)) = sum_k (beta(-r)/r)^k / k! * sum_j C(k,j) u^(rj) v^(r(k-j))
    Grid next;
    for (const auto& [ab, x] : g) {
      FockVector power = x;
      Rational fact(1);
      for (int k = 0; ab.first + ab.second + r * k <= D; ++k) {
        if (k > 0) {
          FockVector scaled(N);
          scaled.add_scaled(beta(r, power), make_rational(1, r));
          power = scaled;
          fact *= k;
        }
        for (int j = 0; j <= k; ++j) {
          FockVector term(N);
          term.add_scaled(power, binom(Rational(k), j) / fact);
          grid_add(next, ab.first + r * j, ab.second + r * (k - j), term, N);
        }
      }
    }
    g = next;
  }
  Grid out;
  for (const auto& [ab, x] : g) {
    FockVector m2(N);
    m2.add_scaled(x, Rational(-2));
    grid_add(out, ab.first + 2, ab.second, x, N);
    grid_add(out, ab.first + 1, ab.second + 1, m2, N);
    grid_add(out, ab.first, ab.second + 2, x, N);
  }
  return out;
}

FockVector e_alpha(std::size_t N) { return FockVector::basis(LatticePoint::make(0, 1), AMonomial(), N); }

}  // namespace

TEST(Catalog, XbarCarriesEbarZero) {
  const OperatorSpec s = catalog("Xbar", Variant::norm);
  bool found = false;
  for (const auto& f : s.factors)
    if (f.kind == FactorKind::GradedPower && f.graded.size() == 2 && f.graded[0].c == -1 &&
        f.graded[0].scale == 1 && f.graded[0].selector == Graded::dalpha_half && f.graded[1].c == 0 &&
        f.graded[1].scale == -1)
      found = true;
  EXPECT_TRUE(found);
}

TEST(Catalog, HMinusIsK2OverK1Shifted) {
  const Rational half = make_rational(1, 2);
  const OperatorSpec expected =
      catalog("k2_minus").shifted(half).then_after(catalog("k1_minus").shifted(half).inverse());
  EXPECT_EQ(catalog("H_minus").key(), expected.key());
}

TEST(Catalog, KPlusIsK1K2Shifted) {
  for (Variant v : {Variant::IK, Variant::norm}) {
    const OperatorSpec expected = catalog("k1_plus", v)
                                      .shifted(make_rational(-1, 2))
                                      .then_after(catalog("k2_plus", v).shifted(make_rational(1, 2)));
    EXPECT_EQ(catalog("K_plus", v).key(), expected.key());
  }
}

TEST(Catalog, UnknownNamesThrow) {
  EXPECT_THROW(catalog("nothing"), UnknownOperator);
  EXPECT_THROW(catalog("Xbar", Variant::IK), UnknownOperator);
}

TEST(Catalog, EveryEntryIsNormalOrdered) {
  for (const auto& name : catalog_names())
    for (Variant v : {Variant::IK, Variant::norm}) {
      OperatorSpec s;
      try {
        s = catalog(name, v);
      } catch (const UnknownOperator&) {
        continue;
      }
      bool seen_annihilation = false;
      for (const auto& f : s.factors) {
        if (f.kind == FactorKind::ExpAnnihilation) seen_annihilation = true;
        if (f.kind == FactorKind::ExpCreation) EXPECT_FALSE(seen_annihilation) << name;
      }
    }
}

TEST(Apply, XAlphaOnVacuumClassical) {
  const USeriesVector s = apply(catalog("X_alpha"), FockVector::vacuum(0, 1), -3, 0, 1);
  EXPECT_EQ(s.at({0}), e_alpha(1));
  for (int p = -3; p < 0; ++p) EXPECT_TRUE(s.at({p}).is_zero());
  EXPECT_TRUE(s.below_window_empty[0]);
}

TEST(Apply, KOneMinusIsIdentityModH) {
  const USeriesVector s = apply(catalog("k1_minus"), FockVector::vacuum(0, 1), -3, 3, 1);
  ASSERT_EQ(s.coeffs.size(), 1u);
  EXPECT_EQ(s.at({0}), FockVector::vacuum(0, 1));
}

TEST(Apply, XbarOnVacuumHasNoNegativePowers) {
  const USeriesVector s = apply(catalog("Xbar"), FockVector::vacuum(0, 3), -2, -1, 3);
  EXPECT_TRUE(s.is_zero());
  EXPECT_TRUE(s.below_window_empty[0]);
}

TEST(Apply, OrderCoherence) {
  for (const char* name : {"X_alpha", "X_malpha", "Xbar", "K_plus", "H_minus"}) {
    const FockVector v = random_vector(17, 0, 3);
    const USeriesVector hi = apply(catalog(name), v, -4, 3, 3);
    const USeriesVector lo = apply(catalog(name), v, -4, 3, 2);
    for (int p = -4; p <= 3; ++p) EXPECT_EQ(hi.at({p}).truncated(2), lo.at({p})) << name << " u^" << p;
  }
}

TEST(Apply, MemoHookIsTransparent) {
  struct Recorder : ExpandMemo {
    std::map<std::string, Expansion> store;
    bool get(const std::string& key, Expansion& out) override {
      auto it = store.find(key);
      if (it == store.end()) return false;
      out = it->second;
      return true;
    }
    void put(const std::string& key, const Expansion& e) override { store[key] = e; }
  } memo;
  const FockVector v = random_vector(21, 1, 2);
  const USeriesVector plain = apply(catalog("X_malpha"), v, -3, 3, 2);
  ExpandMemo* prev = expand_memo();
  expand_memo() = &memo;
  const USeriesVector first = apply(catalog("X_malpha"), v, -3, 3, 2);
  const USeriesVector second = apply(catalog("X_malpha"), v, -3, 3, 2);
  expand_memo() = prev;
  EXPECT_FALSE(memo.store.empty());
  for (int p = -3; p <= 3; ++p) {
    EXPECT_EQ(first.at({p}), plain.at({p}));
    EXPECT_EQ(second.at({p}), plain.at({p}));
  }
}

TEST(ApplyProduct, XbarPairIsSymmetric) {
  const OperatorSpec xb = catalog("Xbar");
  const auto s = apply_product({{xb, "u"}, {xb, "v"}}, FockVector::vacuum(0, 2), {{"u", {-2, 3}}, {"v", {-2, 3}}}, 2);
  for (int a = -2; a <= 3; ++a)
    for (int b = -2; b <= 3; ++b) EXPECT_EQ(s.at({a, b}), s.at({b, a})) << a << "," << b;
}

TEST(ApplyProduct, SingleFactorReducesToApply) {
  const FockVector v = random_vector(4, 0, 2);
  const auto p = apply_product({{catalog("X_alpha"), "u"}}, v, {{"u", {-3, 3}}}, 2);
  const auto a = apply(catalog("X_alpha"), v, -3, 3, 2);
  for (int e = -3; e <= 3; ++e) EXPECT_EQ(p.at({e}), a.at({e}));
}

TEST(ApplyProduct, XbarPairMatchesClassicalVertexOperators) {
  const int D = 6;
  const Grid oracle = classical_xbar_pair(D);
  const OperatorSpec xb = catalog("Xbar");
  const auto s = apply_product({{xb, "u"}, {xb, "v"}}, FockVector::vacuum(0, 1), {{"u", {-2, D}}, {"v", {-2, D}}}, 1);
  for (int a = -2; a <= D; ++a)
    for (int b = -2; a + b <= D && b <= D; ++b) {
      auto it = oracle.find({a, b});
      const FockVector expected = it == oracle.end() ? FockVector(1) : it->second;
      EXPECT_EQ(s.at({a, b}), expected) << "u^" << a << " v^" << b;
    }
  EXPECT_TRUE(s.at({0, 0}).is_zero());
  EXPECT_EQ(s.at({2, 0}), FockVector::basis(LatticePoint::make(0, 2), AMonomial(), 1));
}

// At order 2 the (u - v)^2 factor already kills every shift, so order 3 is needed.
TEST(SubstituteShift, XbarPairVanishesOnTheShiftedDiagonal) {
  const OperatorSpec xb = catalog("Xbar");
  const auto s = apply_product({{xb, "u"}, {xb, "v"}}, FockVector::vacuum(0, 3), {{"u", {-3, 6}}, {"v", {-3, 6}}}, 3);
  for (const Rational& c : {Rational(1), Rational(-1)}) EXPECT_TRUE(substitute_shift(s, "v", "u", c).is_zero()) << c;
  for (const Rational& c : {Rational(0), Rational(2), Rational(-2)})
    EXPECT_FALSE(substitute_shift(s, "v", "u", c).is_zero()) << c;
}

TEST(SubstituteShift, NaiveProductDoesNotVanish) {
  const OperatorSpec xa = catalog("X_alpha");
  const auto s = apply_product({{xa, "u"}, {xa, "v"}}, FockVector::vacuum(0, 3), {{"u", {-3, 6}}, {"v", {-3, 6}}}, 3);
  EXPECT_FALSE(substitute_shift(s, "v", "u", Rational(-1)).is_zero());
}

TEST(SplitHalves, XAlphaOnVacuumIsNonnegative) {
  const USeriesVector s = apply(catalog("X_alpha"), FockVector::vacuum(0, 1), -3, 3, 1);
  const auto [neg, pos] = split_halves(s);
  EXPECT_TRUE(neg.is_zero());
  for (int p = -3; p <= 3; ++p) EXPECT_EQ(pos.at({p}), s.at({p}));
}

TEST(SplitHalves, ReassemblesAndHandlesZero) {
  const USeriesVector s = apply(catalog("X_malpha"), random_vector(8, 0, 2), -12, 3, 2);
  ASSERT_TRUE(s.below_window_empty[0]);
  const auto [neg, pos] = split_halves(s);
  EXPECT_FALSE(neg.is_zero());
  for (int p = -12; p <= 3; ++p) {
    FockVector sum = neg.at({p});
    sum += pos.at({p});
    EXPECT_EQ(sum, s.at({p}));
    if (p < 0) EXPECT_TRUE(pos.at({p}).is_zero());
    else EXPECT_TRUE(neg.at({p}).is_zero());
  }
  USeriesVector empty({"u"}, {{-1, 1}}, 1);
  empty.below_window_empty[0] = true;
  const auto [n0, p0] = split_halves(empty);
  EXPECT_TRUE(n0.is_zero());
  EXPECT_TRUE(p0.is_zero());
  const USeriesVector uncertified = apply(catalog("X_malpha"), random_vector(8, 0, 2), -1, 3, 2);
  EXPECT_THROW(split_halves(uncertified), IncompleteWindow);
}

TEST(TAction, T11MinusIsIdentityModH) {
  const USeriesVector s = t_action(1, 1, Sign::minus, FockVector::vacuum(0, 1), -3, 3, 1);
  ASSERT_EQ(s.coeffs.size(), 1u);
  EXPECT_EQ(s.at({0}), FockVector::vacuum(0, 1));
}

TEST(TAction, T12PlusIsNegativeAndDivisibleByH) {
  EXPECT_TRUE(t_action(1, 2, Sign::plus, FockVector::vacuum(0, 3), -6, 3, 3).is_zero());
  const FockVector e_malpha = FockVector::basis(LatticePoint::make(0, -1), AMonomial(), 3);
  const USeriesVector s = t_action(1, 2, Sign::plus, e_malpha, -6, 3, 3);
  EXPECT_TRUE(s.below_window_empty[0]);
  EXPECT_FALSE(s.is_zero());
  for (const auto& [e, w] : s.coeffs) {
    EXPECT_LT(e[0], 0);
    EXPECT_TRUE(w.truncated(1).is_zero()) << "u^" << e[0];
  }
}
