#include "dyfock/verify.hpp"

#include <gtest/gtest.h>

using namespace dyfock;

namespace {

FockVector e_alpha(std::size_t N) { return FockVector::basis(LatticePoint::make(0, 1), AMonomial(), N); }

FockVector mixed(std::size_t N) {
  return FockVector::basis(LatticePoint::make(0, 0), AMonomial::from_modes({{1, 1}, {2, 2}}), N);
}

FockVector a1_e_alpha(std::size_t N) {
  return FockVector::basis(LatticePoint::make(0, 1), AMonomial::from_modes({{1, 1}}), N);
}

}  // namespace

TEST(DeltaSeries, PlainDelta) {
  const DeltaSeries d = delta_expand(Rational(0), {-3, 0}, {0, 2}, 2);
  EXPECT_EQ(d.at(-1, 0), HSeries::constant(1, 2));
  EXPECT_EQ(d.at(-2, 1), HSeries::constant(1, 2));
  EXPECT_TRUE(d.at(-1, 1).is_zero());
}

TEST(DeltaSeries, ShiftedDelta) {
  const DeltaSeries d = delta_expand(make_rational(1, 2), {-3, 0}, {0, 2}, 2);
  EXPECT_EQ(d.at(-1, 0), HSeries::constant(1, 2));
  EXPECT_EQ(d.at(-2, 0), HSeries::monomial(make_rational(1, 2), 1, 2));
}

TEST(Jps1, VacuumAndEAlpha) {
  const auto r = check_jps1({FockVector::vacuum(0, 3), e_alpha(3)}, -4, 4, 2);
  EXPECT_TRUE(r.passed) << r.first_discrepancy;
  EXPECT_GT(r.cells_checked, 0u);
}

TEST(Jps1, ClassicalLayer) {
  const auto r = check_jps1(battery(2), -3, 3, 1);
  EXPECT_TRUE(r.passed) << r.first_discrepancy;
}

TEST(Jps1, RequiresHigherOrderVectors) {
  EXPECT_THROW(check_jps1({FockVector::vacuum(0, 2)}, -1, 1, 2), std::invalid_argument);
}

TEST(CommInt, ChargedVectorAtOrderTwo) {
  const auto r = check_comm_int({a1_e_alpha(2)}, -4, 4, 2);
  EXPECT_TRUE(r.passed) << r.first_discrepancy;
}

// The shifted-diagonal vanishing is automatic below order 3.
TEST(CommInt, VacuumAtOrderThree) {
  const auto r = check_comm_int({FockVector::vacuum(0, 3), e_alpha(3)}, -3, 3, 3);
  EXPECT_TRUE(r.passed) << r.first_discrepancy;
}

TEST(CommInt, SymmetryOnBatteryClassical) {
  const auto r = check_comm_int(battery(1), -3, 3, 1);
  EXPECT_TRUE(r.passed) << r.first_discrepancy;
}

TEST(Rtt, MixedOnVacuum) {
  for (Variant v : {Variant::IK, Variant::norm}) {
    const auto r = check_rtt(RttPattern::pm, {FockVector::vacuum(0, 2)}, -3, 3, 2, v);
    EXPECT_TRUE(r.passed) << variant_name(v) << ": " << r.first_discrepancy;
  }
}

TEST(Rtt, PlusPlusOnEAlpha) {
  const auto r = check_rtt(RttPattern::pp, {e_alpha(2)}, -3, 3, 2, Variant::norm);
  EXPECT_TRUE(r.passed) << r.first_discrepancy;
}

TEST(Rtt, MinusMinusClassical) {
  const auto r = check_rtt(RttPattern::mm, battery(1), -2, 2, 1, Variant::norm);
  EXPECT_TRUE(r.passed) << r.first_discrepancy;
}

TEST(Heisenberg, VacuumAndMixed) {
  const auto r = check_heisenberg({FockVector::vacuum(0, 2), mixed(2)}, -3, 3, 2);
  EXPECT_TRUE(r.passed) << r.first_discrepancy;
}

TEST(Exchange, AllOnSmallBattery) {
  const std::vector<FockVector> vs = {FockVector::vacuum(0, 2), FockVector::vacuum(1, 2), mixed(2)};
  for (Exchange e : {Exchange::e_plus_e_minus, Exchange::e_zero_e_zero, Exchange::ebar_plus_e_minus,
                     Exchange::ebar_zero_e_zero}) {
    const auto r = check_exchange(e, vs, -3, 3, 2);
    EXPECT_TRUE(r.passed) << exchange_name(e) << ": " << r.first_discrepancy;
  }
}

TEST(Closure, ChargedCurrentsAndLambdaOne) {
  for (Closure c : {Closure::e_plus, Closure::cal_e_minus, Closure::x_malpha}) {
    const auto r = check_closure(c, {-1, 0, 1}, {}, -3, 3, 2);
    EXPECT_TRUE(r.passed) << closure_name(c) << ": " << r.first_discrepancy;
  }
  const auto r = check_closure(Closure::lambda1, {}, {FockVector::vacuum(0, 2), mixed(2)}, -3, 3, 2);
  EXPECT_TRUE(r.passed) << r.first_discrepancy;
}

TEST(Translation, XtildeAcrossEMinusAlpha) {
  const auto r = check_translation({FockVector::vacuum(0, 2), FockVector::vacuum(1, 2)}, -3, 3, 2);
  EXPECT_TRUE(r.passed) << r.first_discrepancy;
}

TEST(Straightening, IdentitiesOnBattery) {
  for (int r = -1; r >= -3; --r) {
    const auto rep = check_straightening_ids(r, battery(2), 2);
    EXPECT_TRUE(rep.passed) << "r=" << r << ": " << rep.first_discrepancy;
  }
}

TEST(Straightening, VacuumCongruencesVanishTermwise) {
  const OperatorSpec xb = catalog("Xbar");
  const FockVector vac = FockVector::vacuum(0, 1);
  EXPECT_TRUE(apply_mode(xb, -1, apply_mode(xb, -1, vac, 1), 1).is_zero());
  EXPECT_TRUE(apply_mode(xb, -2, apply_mode(xb, -1, vac, 1), 1).is_zero());
  for (int s = 0; s <= 2; ++s) EXPECT_TRUE(apply_mode(xb, s, vac, 1).is_zero());
}

// Negative controls: a check with teeth must reject these.

TEST(NegativeControl, UncorrectedSquareRelationFailsAtOrderThree) {
  const OperatorSpec xb = catalog("Xbar");
  const FockVector v = FockVector::vacuum(0, 3);
  FockVector a = apply_mode(xb, -2, apply_mode(xb, -2, v, 3), 3);
  a.add_scaled(apply_mode(xb, -3, apply_mode(xb, -1, v, 3), 3), Rational(2));
  EXPECT_FALSE(a.is_zero());
  EXPECT_TRUE(a.truncated(1).is_zero());
}

TEST(NegativeControl, HPlusDoesNotCommuteWithXAlpha) {
  const SeriesOp hp = detail::full_op(catalog("H_plus"), 2);
  const SeriesOp xa = detail::full_op(catalog("X_alpha"), 2);
  const FockVector v = FockVector::vacuum(0, 2);
  CheckReport rep;
  compare_grids(rep, product_grid(hp, xa, v, 3, 3), product_grid_swapped(hp, xa, v, 3, 3), -3, 3, -3, 3, "H X");
  EXPECT_FALSE(rep.passed);
}

TEST(NegativeControl, KPlusCommutesButIsNotTrivial) {
  const SeriesOp kp = detail::full_op(catalog("K_plus"), 2);
  const FockVector v = mixed(2);
  CheckReport rep;
  compare_grids(rep, product_grid(kp, kp, v, 3, 3), product_grid_swapped(kp, kp, v, 3, 3), -3, 3, -3, 3, "K K");
  EXPECT_TRUE(rep.passed);
  EXPECT_GT(kp(v, 0).size(), 1u);
}

TEST(NegativeControl, MutatedXbarBreaksCommutativity) {
  OperatorSpec bad = catalog("Xbar");
  for (auto& f : bad.factors)
    if (f.kind == FactorKind::ExpAnnihilation && f.label.rfind("Ebar", 0) == 0) f.exp[0].c += Rational(1);
  const SeriesOp good = detail::full_op(catalog("Xbar"), 2);
  const SeriesOp mutated = detail::full_op(bad, 2);
  const FockVector v = FockVector::vacuum(0, 2);
  CheckReport ok, broken;
  compare_grids(ok, product_grid(good, good, v, 3, 3), product_grid_swapped(good, good, v, 3, 3), -3, 3, -3, 3, "");
  compare_grids(broken, product_grid(mutated, good, v, 3, 3), product_grid_swapped(mutated, good, v, 3, 3), -3, 3, -3,
                3, "");
  EXPECT_TRUE(ok.passed);
  EXPECT_FALSE(broken.passed);
}

TEST(Report, DiscrepancyBookkeeping) {
  CheckReport r;
  r.fail("first");
  r.fail("second");
  EXPECT_FALSE(r.passed);
  EXPECT_EQ(r.discrepancy_count, 2u);
  EXPECT_EQ(r.first_discrepancy, "first");
}
