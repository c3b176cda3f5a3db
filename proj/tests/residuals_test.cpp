// SPDX-License-Identifier: MIT
#include <implicit_pde/implicit_field.hpp>
#include <implicit_pde/parse.hpp>
#include <implicit_pde/residuals.hpp>

#include <gtest/gtest.h>

#include <array>
#include <cmath>

namespace implicit_pde {
namespace {

FieldJet jet2(double g1, double g2, double h11, double h12, double h22) {
  FieldJet j;
  j.x = {0.0, 0.0};
  j.grad = {g1, g2};
  j.hess = SymMatrix(2);
  j.hess(0, 0) = h11;
  j.hess(0, 1) = h12;
  j.hess(1, 1) = h22;
  return j;
}

FieldJet explicit_jet(const char* text, std::vector<std::string> coords, std::vector<double> x) {
  return explicit_field_jet(parse(text), coords, x);
}

/// Max normalized residual of check over `points` seeded random box points of
/// an implicit family.
template <class Check>
double max_over_family(const ImplicitFamily& fam, std::vector<std::pair<double, double>> box, Check&& check,
                       int points = 50, std::uint64_t seed = 1) {
  SampleSpec spec;
  spec.box = std::move(box);
  spec.points = points;
  spec.mode = SampleMode::random;
  spec.seed = seed;
  double worst = 0.0;
  int solved = 0;
  for (const auto& p : sample(fam, spec)) {
    if (!p.ok()) continue;
    ++solved;
    worst = std::max(worst, std::abs(check(*p.jet).normalized()));
  }
  EXPECT_EQ(solved, points);
  return worst;
}

TEST(FPair, DirectSubstitution) {
  const FieldJet j = jet2(1, 2, 3, 4, 5);
  EXPECT_EQ(f_pair(j, 0, 1).raw, 1.0);
  EXPECT_EQ(f_pair(j, 0, 1).scale, 5.0 + 16.0 + 12.0);
}

TEST(FPair, LinearFieldVanishesExactly) {
  const auto j = explicit_jet("2*x1 - 3*x2 + 1", {"x1", "x2"}, {0.3, 0.4});
  EXPECT_EQ(f_pair(j, 0, 1).raw, 0.0);
}

TEST(FPair, FunctionOfSumVanishes) {
  const auto j = explicit_jet("sin(x1 + x2) + (x1 + x2)^3", {"x1", "x2"}, {0.3, 0.4});
  EXPECT_LE(std::abs(f_pair(j, 0, 1).normalized()), 1e-15);
}

TEST(FPair, SymmetricAndGuarded) {
  const auto j = explicit_jet("x1*x2^2 + exp(x3*x1)", {"x1", "x2", "x3"}, {0.3, 0.4, -0.7});
  for (std::size_t p = 0; p < 3; ++p)
    for (std::size_t q = 0; q < 3; ++q)
      if (p != q) {
        EXPECT_EQ(f_pair(j, p, q).raw, f_pair(j, q, p).raw);
      }
  EXPECT_THROW(f_pair(j, 1, 1), Error);
  EXPECT_THROW(f_pair(j, 0, 3), Error);
}

TEST(Bateman, ImplicitFamilyIsASolution) {
  const auto fam = make_family(parse("t*phi + x*phi^2 - 1"), {"t", "x"});
  EXPECT_LE(max_over_family(fam, {{1, 2}, {1, 2}}, bateman_residual), 1e-8);
}

TEST(Bateman, LinearField) {
  const auto j = explicit_jet("0.5*t - 2*x", {"t", "x"}, {1.0, 2.0});
  EXPECT_EQ(bateman_residual(j).raw, 0.0);
}

TEST(Bateman, AForm) {
  const auto fam = make_family(parse("phi + phi^3*x - t"), {"t", "x"});
  EXPECT_LE(max_over_family(fam, {{1, 2}, {1, 2}}, bateman_residual), 1e-8);
}

TEST(Bateman, DimensionMismatch) {
  const auto j = explicit_jet("x1 + x2 + x3", {"x1", "x2", "x3"}, {1, 2, 3});
  try {
    bateman_residual(j);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::dimension_mismatch);
  }
}

TEST(Bateman, ScaleInvariance) {
  const auto fam = make_family(parse("t*phi + x*phi^2 - 1"), {"t", "x"});
  const std::array<double, 2> x{1.3, 1.7};
  const FieldJet j = field_jet(fam, x, solve_phi(fam, x));
  FieldJet k = j;
  k.phi *= 2;
  for (double& g : k.grad) g *= 2;
  for (double& h : k.hess.packed()) h *= 2;
  const Residual a = bateman_residual(j), b = bateman_residual(k);
  EXPECT_EQ(b.raw, 8 * a.raw);
  EXPECT_EQ(b.scale, 8 * a.scale);
  EXPECT_EQ(a.normalized(), b.normalized());
}

TEST(Bateman, CovarianceUnderExp) {
  const auto fam = make_family(parse("t*phi + x*phi^2 - 1"), {"t", "x"});
  EXPECT_LE(max_over_family(fam, {{1, 2}, {1, 2}}, [](const FieldJet& j) { return bateman_residual(compose_exp(j)); }),
            1e-8);
}

TEST(Ufe, CofactorExpansion) {
  const Residual r = ufe_residual(jet2(1, 2, 3, 4, 5));
  EXPECT_NEAR(r.raw, -1.0, 1e-14);
}

TEST(Ufe, MinusFPairInTwoDimensions) {
  Rng rng(11);
  for (int k = 0; k < 100; ++k) {
    const FieldJet j = jet2(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2),
                            rng.uniform(-2, 2));
    const Residual u = ufe_residual(j), f = f_pair(j, 0, 1);
    EXPECT_NEAR(u.raw, -f.raw, 1e-13 * f.scale);
    EXPECT_NEAR(u.scale, f.scale, 1e-13 * f.scale);
  }
}

TEST(Ufe, HomogeneousWeightZero) {
  const auto j = explicit_jet("(x1 + x2)/(x2 + x3)", {"x1", "x2", "x3"}, {0.7, 1.1, 0.4});
  EXPECT_LE(std::abs(ufe_residual(j).normalized()), 1e-9);
}

TEST(Ufe, LinearFamilyAffineCoefficients) {
  const auto fam = make_family(parse("(1 + phi)*x1 + (2 - phi)*x2 + (0.5 + 3*phi)*x3 - 1"), {"x1", "x2", "x3"});
  EXPECT_LE(max_over_family(fam, {{1, 2}, {1, 2}, {1, 2}}, ufe_residual), 1e-8);
}

TEST(Ufe, GenericFieldFails) {
  const auto j = explicit_jet("x1^2 + x2^2 + x3^2", {"x1", "x2", "x3"}, {0.7, 1.1, 0.4});
  EXPECT_GE(std::abs(ufe_residual(j).normalized()), 1e-2);
}

TEST(SumBateman, TrivialFields) {
  EXPECT_EQ(sum_bateman_residual(explicit_jet("x1 - x2 + 4*x3", {"x1", "x2", "x3"}, {1, 2, 3})).raw, 0.0);
  EXPECT_LE(std::abs(sum_bateman_residual(explicit_jet("exp(x1 + x2 + x3)", {"x1", "x2", "x3"}, {0.1, 0.2, 0.3}))
                         .normalized()),
            1e-15);
}

TEST(SumBateman, ScherkLevelSurfaces) {
  // t = log(cos(phi x2)/cos(phi x1))/phi is a minimal surface for each phi
  const auto fam = make_family(parse("log(cos(phi*x2)/cos(phi*x1))/phi - t"), {"x1", "x2", "t"}, Guess{0.75});
  SampleSpec spec;
  spec.box = {{-0.5, 0.5}, {-0.5, 0.5}, {-1, 1}};
  spec.points = 50;
  spec.mode = SampleMode::axis;
  spec.phi_range = {0.5, 1.0};
  spec.axis_range = {-5, 5};
  int solved = 0;
  for (const auto& p : sample(fam, spec)) {
    if (!p.ok()) continue;
    ++solved;
    EXPECT_LE(std::abs(sum_bateman_residual(*p.jet).normalized()), 1e-6);
    const std::vector<std::string> xs{"x1", "x2"};
    const auto a = a_surface_residuals(parse("log(cos(phi*x2)/cos(phi*x1))/phi"), xs,
                                       std::span<const double>(p.x).first(2), p.jet->phi);
    EXPECT_LE(std::abs(a.bateman2d.normalized()), 1e-12);
  }
  EXPECT_EQ(solved, 50);
}

TEST(ComplexBateman, ProductOfSums) {
  const auto j = explicit_jet("(x+y)*(z+w)", {"x", "y", "z", "w"}, {0.3, 1.2, -0.4, 2.0});
  EXPECT_EQ(complex_bateman_residual(j).raw, 0.0);
}

TEST(ComplexBateman, ChaundyRational) {
  const auto j = explicit_jet("(z - x)/(y - w)", {"x", "y", "z", "w"}, {0.3, 1.2, -0.4, 2.0});
  EXPECT_LE(std::abs(complex_bateman_residual(j).normalized()), 1e-12);
  // the sign pattern with the last two terms flipped leaves 2(z-x)/(y-w)^5
  const double d = 1.2 - 2.0;
  EXPECT_NEAR(complex_bateman_residual(j, ComplexBatemanForm::sign_flipped).raw, 2 * (-0.4 - 0.3) / std::pow(d, 5), 1e-12);
}

TEST(ComplexBateman, ExplicitComposite) {
  // F(u, v) = u v + u^2 with u = x y, v = z + w^2
  Rng rng(4);
  for (int k = 0; k < 50; ++k) {
    const auto j = explicit_jet("x*y*(z + w^2) + (x*y)^2", {"x", "y", "z", "w"},
                                {rng.uniform(0.5, 2), rng.uniform(0.5, 2), rng.uniform(0.5, 2), rng.uniform(0.5, 2)});
    EXPECT_LE(std::abs(complex_bateman_residual(j).normalized()), 1e-10);
  }
}

TEST(ComplexBateman, GenericFieldFails) {
  const auto j = explicit_jet("x*z + y^2*w + x*w^3", {"x", "y", "z", "w"}, {0.3, 1.2, -0.4, 2.0});
  EXPECT_GE(std::abs(complex_bateman_residual(j).normalized()), 1e-2);
}

TEST(ASurface, LinearInX) {
  const std::vector<std::string> xs{"x1", "x2"};
  const std::array<double, 2> x{0.3, -0.8};
  const auto r = a_surface_residuals(parse("sin(phi) + phi^2*x1 - exp(phi)*x2"), xs, x, 0.7);
  EXPECT_EQ(r.monge_ampere.raw, 0.0);
}

TEST(ASurface, DegenerateSecondVariable) {
  const std::vector<std::string> xs{"x1", "x2"};
  const std::array<double, 2> x{0.3, -0.8};
  EXPECT_EQ(a_surface_residuals(parse("x1^2"), xs, x, 0.7).monge_ampere.raw, 0.0);
}

TEST(ASurface, HemisphereBateman2d) {
  const std::vector<std::string> xs{"x1", "x2"};
  const std::array<double, 2> x{0.1, 0.2};
  const auto r = a_surface_residuals(parse("sqrt(1 - x1^2 - x2^2)*phi"), xs, x, 1.0);
  // hand-coded derivatives of A = sqrt(1 - r^2)
  const double a = std::sqrt(1 - 0.01 - 0.04);
  const double a1 = -0.1 / a, a2 = -0.2 / a;
  const double a11 = -(1 - 0.04) / (a * a * a), a22 = -(1 - 0.01) / (a * a * a), a12 = -0.02 / (a * a * a);
  const double expected = (1 + a1 * a1) * a22 + (1 + a2 * a2) * a11 - 2 * a1 * a2 * a12;
  EXPECT_NEAR(r.bateman2d.raw, expected, 1e-12);
  EXPECT_NEAR(r.monge_ampere.raw, a11 * a22 - a12 * a12, 1e-12);
}

FieldJet chaundy_jet(const char* f, const char* g, std::vector<double> x) {
  const auto fam = make_family(parse(f) - parse(g), {"x", "y", "z", "w"});
  return field_jet(fam, x, solve_phi(fam, x));
}

TEST(FirstOrder, LinearChaundy) {
  const FieldJet j = chaundy_jet("x + y*phi", "z + w*phi", {1, 2, 3, 5});
  EXPECT_NEAR(j.phi, -2.0 / 3.0, 1e-15);
  const auto r = first_order_system_residual(parse("x + y*phi"), parse("z + w*phi"), j);
  for (const auto& res : r.residuals) EXPECT_LE(std::abs(res.raw), 1e-10);
  EXPECT_NEAR(r.v, -1.5, 1e-15);
}

TEST(FirstOrder, SwappedChaundy) {
  const FieldJet j = chaundy_jet("x*phi + y", "z*phi + w", {1, 2, 3, 5});
  EXPECT_NEAR(j.phi, -1.5, 1e-15);
  const auto r = first_order_system_residual(parse("x*phi + y"), parse("z*phi + w"), j);
  for (const auto& res : r.residuals) EXPECT_LE(std::abs(res.raw), 1e-10);
}

TEST(FirstOrder, NonlinearChaundy) {
  const FieldJet j = chaundy_jet("x + y*phi^3 + phi", "z*w + sin(phi)*w", {0.4, 1.2, 0.9, 0.7});
  const auto r = first_order_system_residual(parse("x + y*phi^3 + phi"), parse("z*w + sin(phi)*w"), j);
  for (const auto& res : r.residuals) EXPECT_LE(std::abs(res.normalized()), 1e-10);
  EXPECT_LE(std::abs(complex_bateman_residual(j).normalized()), 1e-10);
}

TEST(FirstOrder, VanishingFy) {
  // phi = 0 at (1, 2, 1, 5), so F_y = phi = 0
  const FieldJet j = chaundy_jet("x + y*phi", "z + w*phi", {1, 2, 1, 5});
  try {
    first_order_system_residual(parse("x + y*phi"), parse("z + w*phi"), j);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::singular_point);
  }
}

TEST(FirstOrder, ExplicitField) {
  const auto j = explicit_jet("x*y*(z + w^2) + (x*y)^2", {"x", "y", "z", "w"}, {0.6, 1.1, 0.8, 1.3});
  for (const auto& res : first_order_system_residual(j).residuals) EXPECT_LE(std::abs(res.normalized()), 1e-10);
}

TEST(Example2, DiagonalQuadraticFamily) {
  const auto fam = make_family(parse("phi*x1^2 + phi^2*x2^2 - 1"), {"x1", "x2"}, Bracket{0, 10, 64});
  EXPECT_LE(max_over_family(fam, {{0.5, 1.5}, {0.5, 1.5}}, example2_residual), 1e-7);
}

TEST(Example2, ConstantField) {
  EXPECT_EQ(example2_residual(explicit_jet("3 + 0*x1", {"x1", "x2"}, {0.4, 0.5})).raw, 0.0);
}

TEST(Example2, NotImpliedByBateman) {
  const auto fam = make_family(parse("t*phi + x*phi^2 - 1"), {"t", "x"});
  const std::array<double, 2> x{1.3, 1.6};
  const FieldJet j = field_jet(fam, x, solve_phi(fam, x));
  EXPECT_LE(std::abs(bateman_residual(j).normalized()), 1e-12);
  EXPECT_GE(std::abs(example2_residual(j).normalized()), 1e-2);
}

TEST(Report, SummaryAndErrors) {
  ResidualReport rep{"bateman", 1e-7, {}};
  const std::array<double, 2> x{1, 2};
  rep.add(0, x, 0.5, {1e-9, 1.0});
  rep.add(1, x, 0.5, {-3e-8, 1.0});
  rep.add_error(2, x, "NoRoot: nothing");
  EXPECT_EQ(rep.evaluated(), 2u);
  EXPECT_EQ(rep.errors(), 1u);
  EXPECT_DOUBLE_EQ(rep.max_normalized(), 3e-8);
  EXPECT_DOUBLE_EQ(rep.mean_normalized(), (1e-9 + 3e-8) / 2);
  EXPECT_TRUE(rep.pass());
  rep.add(3, x, 0.5, {1e-3, 1.0});
  EXPECT_FALSE(rep.pass());
  EXPECT_EQ(rep.points[3].status, PointStatus::fail);
}

TEST(Report, ZeroScaleFloored) {
  const Residual r{0.0, 0.0};
  EXPECT_EQ(r.normalized(), 0.0);
}

}  // namespace
}  // namespace implicit_pde
