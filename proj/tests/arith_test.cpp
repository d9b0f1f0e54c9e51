#include "dyfock/arith.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace dyfock;

namespace {

HSeries series(std::initializer_list<long> c) {
  std::vector<Rational> v;
  for (long x : c) v.push_back(Rational(x));
  return HSeries(v);
}

HSeries random_series(std::mt19937_64& rng, std::size_t N) {
  HSeries s(N);
  for (std::size_t k = 0; k < N; ++k)
    s[k] = make_rational(static_cast<long>(rng() % 11) - 5, static_cast<long>(rng() % 4) + 1);
  return s;
}

}  // namespace

TEST(HSeries, DifferenceOfSquares) { EXPECT_EQ(series({1, 1, 0}) * series({1, -1, 0}), series({1, 0, -1})); }

TEST(HSeries, IdentityProduct) {
  const HSeries b = series({3, -2, 7});
  EXPECT_EQ(HSeries::constant(1, 3) * b, b);
}

TEST(HSeries, TruncationKillsHSquared) { EXPECT_TRUE((series({0, 1}) * series({0, 1})).is_zero()); }

TEST(HSeries, MixedOrderTruncatesDown) {
  const HSeries p = series({1, 1, 1}) * series({1, 1});
  EXPECT_EQ(p.order(), 2u);
  EXPECT_EQ(p, series({1, 2}));
}

TEST(HSeries, RingAxiomsOnRandomTriples) {
  std::mt19937_64 rng(7);
  for (std::size_t N = 1; N <= 8; ++N)
    for (int trial = 0; trial < 20; ++trial) {
      const HSeries a = random_series(rng, N), b = random_series(rng, N), c = random_series(rng, N);
      EXPECT_EQ((a * b) * c, a * (b * c));
      HSeries bc = b;
      bc += c;
      HSeries ab = a * b;
      ab += a * c;
      EXPECT_EQ(a * bc, ab);
      EXPECT_EQ(a * b, b * a);
    }
}

TEST(HSeriesInv, GeometricSeries) { EXPECT_EQ(hseries_inv(series({1, -1, 0})), series({1, 1, 1})); }

TEST(HSeriesInv, ScalarInverse) {
  EXPECT_EQ(hseries_inv(HSeries::constant(2, 1)), HSeries::constant(make_rational(1, 2), 1));
}

TEST(HSeriesInv, ZeroConstantTermThrows) { EXPECT_THROW(hseries_inv(series({0, 1})), NonUnit); }

TEST(HSeriesInv, TwoSidedInverse) {
  std::mt19937_64 rng(11);
  for (std::size_t N = 1; N <= 8; ++N)
    for (int trial = 0; trial < 10; ++trial) {
      HSeries a = random_series(rng, N);
      if (a[0] == 0) a[0] = 3;
      const HSeries one = HSeries::constant(1, N);
      EXPECT_EQ(a * hseries_inv(a), one);
      EXPECT_EQ(hseries_inv(a) * a, one);
    }
}

TEST(HSeries, DivisionByH) {
  EXPECT_EQ(series({0, 2, 3}).divided_by_h(), series({2, 3}));
  EXPECT_THROW(series({1, 2}).divided_by_h(), NotDivisible);
  EXPECT_EQ(series({1, 2}).times_h(1), series({0, 1}));
}

TEST(BinomCoeffs, HalfInteger) {
  const auto c = binom_coeffs(BinomExponent(make_rational(1, 2)), 3);
  EXPECT_EQ(c, (std::vector<Rational>{1, make_rational(1, 2), make_rational(-1, 8)}));
}

TEST(BinomCoeffs, PolynomialCase) {
  EXPECT_EQ(binom_coeffs(Rational(2), 4), (std::vector<Rational>{1, 2, 1, 0}));
}

TEST(BinomCoeffs, Geometric) { EXPECT_EQ(binom_coeffs(Rational(-1), 3), (std::vector<Rational>{1, -1, 1})); }

TEST(BinomCoeffs, RejectsNonHalfInteger) { EXPECT_THROW(BinomExponent(make_rational(1, 3)), std::domain_error); }

TEST(BinomCoeffs, ConvolutionWithNegativeIsDelta) {
  const long K = 10;
  for (long twice = -10; twice <= 10; ++twice) {
    const Rational t = make_rational(twice, 2);
    const auto a = binom_coeffs(t, K), b = binom_coeffs(Rational(-t), K);
    for (long k = 0; k < K; ++k) {
      Rational acc;
      for (long i = 0; i <= k; ++i) acc += a[i] * b[k - i];
      EXPECT_EQ(acc, Rational(k == 0 ? 1 : 0)) << "t=" << t << " k=" << k;
    }
  }
}

TEST(ShiftedPower, PositiveExponent) {
  const auto p = shifted_power(2, Rational(1), 2);
  ASSERT_EQ(p.size(), 3u);
  EXPECT_EQ(p.at(2), series({1, 0}));
  EXPECT_EQ(p.at(1), series({0, 2}));
  EXPECT_TRUE(p.at(0).is_zero());
}

TEST(ShiftedPower, NegativeExponent) {
  const auto p = shifted_power(-1, make_rational(1, 4), 2);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p.at(-1), series({1, 0}));
  EXPECT_EQ(p.at(-2), HSeries({Rational(0), make_rational(-1, 4)}));
}

TEST(ShiftedPower, ZeroExponent) {
  const auto p = shifted_power(0, make_rational(5, 3), 3);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p.at(0), HSeries::constant(1, 3));
}

TEST(ShiftedPower, InversePairMultipliesToOne) {
  for (std::size_t N = 1; N <= 5; ++N)
    for (long r = 1; r <= 4; ++r)
      for (const Rational& c : {Rational(1), make_rational(-3, 4), make_rational(1, 2)}) {
        const USeries prod = shifted_power_series(r, c, N).times(shifted_power_series(-r, c, N));
        EXPECT_EQ(prod, USeries::one(N)) << "r=" << r << " N=" << N;
      }
}
