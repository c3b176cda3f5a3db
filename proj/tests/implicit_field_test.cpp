// SPDX-License-Identifier: MIT
#include <implicit_pde/eval.hpp>
#include <implicit_pde/implicit_field.hpp>
#include <implicit_pde/parse.hpp>

#include <gtest/gtest.h>

#include <array>
#include <cmath>

namespace implicit_pde {
namespace {

ErrorKind error_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::config;
}

TEST(SolvePhi, LinearInPhi) {
  const auto fam = make_family(parse("t*phi + x*phi - 1"), {"t", "x"});
  const std::array<double, 2> x{1.0, 1.0};
  EXPECT_NEAR(solve_phi(fam, x), 0.5, 1e-15);
}

TEST(SolvePhi, QuadraticBracket) {
  const auto fam = make_family(parse("t*phi + x*phi^2 - 1"), {"t", "x"}, Bracket{0.0, 1.0, 64});
  const std::array<double, 2> x{1.0, 1.0};
  EXPECT_NEAR(solve_phi(fam, x), (std::sqrt(5.0) - 1.0) / 2.0, 1e-15);
}

TEST(SolvePhi, BracketPicksFirstRootInIncreasingPhi) {
  // roots -1.618 and 0.618
  const auto fam = make_family(parse("t*phi + x*phi^2 - 1"), {"t", "x"});
  const std::array<double, 2> x{1.0, 1.0};
  EXPECT_NEAR(solve_phi(fam, x), -(std::sqrt(5.0) + 1.0) / 2.0, 1e-14);
}

TEST(SolvePhi, GuessSelectsBranch) {
  const auto fam = make_family(parse("t*phi + x*phi^2 - 1"), {"t", "x"}, Guess{0.5});
  const std::array<double, 2> x{1.0, 1.0};
  EXPECT_NEAR(solve_phi(fam, x), (std::sqrt(5.0) - 1.0) / 2.0, 1e-15);
  EXPECT_NEAR(solve_phi(fam, x, -2.0), -(std::sqrt(5.0) + 1.0) / 2.0, 1e-14);
}

TEST(SolvePhi, EmptyLocus) {
  const std::array<double, 2> x{0.3, -2.0};
  EXPECT_EQ(error_of([&] { solve_phi(make_family(parse("phi^2 + 1"), {"t", "x"}), x); }), ErrorKind::no_root);
  EXPECT_EQ(error_of([&] { solve_phi(make_family(parse("phi^2 + 1"), {"t", "x"}, Guess{0.3}), x); }),
            ErrorKind::no_root);
}

TEST(SolvePhi, PoleIsNotARoot) {
  // sign change of 1/(phi - 0.3) at the pole must not be accepted
  const auto fam = make_family(parse("1/(phi - 0.3) + x"), {"x"}, Bracket{0.0, 1.0, 10});
  const std::array<double, 1> x{-2.0};
  EXPECT_NEAR(solve_phi(fam, x), 0.8, 1e-15);
}

TEST(SolvePhi, SingularAtDoubleRoot) {
  const auto fam = make_family(parse("phi^2 - x1"), {"x1"});
  const std::array<double, 1> x{0.0};
  EXPECT_EQ(error_of([&] { solve_phi(fam, x); }), ErrorKind::singular_point);
}

TEST(MakeFamily, Validation) {
  EXPECT_EQ(error_of([] { make_family(parse("x1 + 1"), {"x1"}); }), ErrorKind::arity_mismatch);
  try {
    make_family(parse("x1*phi + q"), {"x1"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("q"), std::string::npos);
  }
}

TEST(FieldJet, GoldenRatioDerivatives) {
  const auto fam = make_family(parse("t*phi + x*phi^2 - 1"), {"t", "x"}, Bracket{0.0, 1.0, 64});
  const std::array<double, 2> x{1.0, 1.0};
  const FieldJet j = field_jet(fam, x, solve_phi(fam, x));
  // phi_t = -phi/sqrt(5), phi_x = -phi^2/sqrt(5)
  EXPECT_NEAR(j.grad[0], -0.2763932, 1e-7);
  EXPECT_NEAR(j.grad[1], -0.1708204, 1e-7);
}

TEST(FieldJet, Reciprocal) {
  const auto fam = make_family(parse("x1*phi - 1"), {"x1"});
  const std::array<double, 1> x{2.0};
  const FieldJet j = field_jet(fam, x, solve_phi(fam, x));
  EXPECT_DOUBLE_EQ(j.phi, 0.5);
  EXPECT_DOUBLE_EQ(j.grad[0], -0.25);
  EXPECT_DOUBLE_EQ(j.hess(0, 0), 0.25);
}

TEST(FieldJet, SingularThreshold) {
  const auto fam = make_family(parse("phi^2 - x1"), {"x1"});
  const std::array<double, 1> x{1e-20};
  EXPECT_EQ(error_of([&] { field_jet(fam, x, 1e-10); }), ErrorKind::singular_point);
}

// Central differences of solve_phi (h = 1e-4) against the implicit jet.
void expect_matches_finite_differences(const ImplicitFamily& fam, std::vector<double> x) {
  const std::size_t n = x.size();
  const double phi = solve_phi(fam, x);
  const FieldJet j = field_jet(fam, x, phi);
  const double h = 1e-4;
  auto at = [&](std::size_t p, double dp, std::size_t q, double dq) {
    std::vector<double> y = x;
    y[p] += dp;
    y[q] += dq;
    return solve_phi(fam, y, phi);
  };
  double scale = 0.0;
  for (double g : j.grad) scale = std::max(scale, std::abs(g));
  scale = std::max(scale, j.hess.max_abs());
  for (std::size_t p = 0; p < n; ++p) {
    EXPECT_NEAR(j.grad[p], (at(p, h, p, 0) - at(p, -h, p, 0)) / (2 * h), 1e-5 * scale) << "grad " << p;
    EXPECT_NEAR(j.hess(p, p), (at(p, h, p, 0) - 2 * phi + at(p, -h, p, 0)) / (h * h), 1e-5 * scale);
    for (std::size_t q = p + 1; q < n; ++q) {
      const double fd = (at(p, h, q, h) - at(p, h, q, -h) - at(p, -h, q, h) + at(p, -h, q, -h)) / (4 * h * h);
      EXPECT_NEAR(j.hess(p, q), fd, 1e-5 * scale) << "hess " << p << q;
    }
  }
  EXPECT_LE(std::abs(eval(fam.constraint, [&] {
              Bindings b{{fam.field, phi}};
              for (std::size_t i = 0; i < n; ++i) b[fam.coords[i]] = x[i];
              return b;
            }())),
            fam.root_tol);
}

TEST(FieldJet, FiniteDifferenceOracle) {
  expect_matches_finite_differences(make_family(parse("t*phi + x*phi^2 - 1"), {"t", "x"}, Bracket{0.0, 1.0, 64}),
                                    {1.0, 1.0});
  expect_matches_finite_differences(make_family(parse("t*sin(phi) + x*cos(phi) - 1"), {"t", "x"}, Guess{0.3}),
                                    {1.2, 0.7});
  expect_matches_finite_differences(
      make_family(parse("x1^2*phi + x2*x3*phi^3 + x3^2 + exp(phi) - 4"), {"x1", "x2", "x3"}, Guess{0.5}),
      {0.8, 0.6, 1.1});
}

TEST(SampleGrid, LinearFamilyEverywhereSolvable) {
  // Bateman family with F = G = phi: t*phi + x*phi - 1 = 0
  const auto fam = make_family(parse("t*phi + x*phi - 1"), {"t", "x"});
  SampleSpec spec;
  spec.box = {{1.0, 2.0}, {1.0, 2.0}};
  spec.counts = {5, 5};
  const auto pts = sample(fam, spec);
  ASSERT_EQ(pts.size(), 25u);
  for (const auto& p : pts) {
    ASSERT_TRUE(p.ok()) << p.message;
    EXPECT_LE(std::abs(eval(fam.constraint, {{"t", p.x[0]}, {"x", p.x[1]}, {"phi", p.jet->phi}})), 1e-12);
  }
  EXPECT_EQ(pts.front().x, (std::vector<double>{1.0, 1.0}));
  EXPECT_EQ(pts.back().x, (std::vector<double>{2.0, 2.0}));
}

TEST(SampleGrid, DiscriminantLocusRecorded) {
  // C_phi = 2 phi vanishes at the double root phi = 0, i.e. x1 = 0
  const auto fam = make_family(parse("phi^2 - x1"), {"x1"});
  SampleSpec spec;
  spec.box = {{-1.0, 1.0}};
  spec.counts = {5};
  const auto pts = sample(fam, spec);
  ASSERT_EQ(pts.size(), 5u);
  EXPECT_EQ(pts[0].error, ErrorKind::no_root);
  EXPECT_EQ(pts[1].error, ErrorKind::no_root);
  EXPECT_EQ(pts[2].error, ErrorKind::singular_point);
  EXPECT_TRUE(pts[3].ok());
  EXPECT_TRUE(pts[4].ok());
  EXPECT_NEAR(pts[4].jet->phi, -1.0, 1e-15);
}

TEST(SampleGrid, Deterministic) {
  const auto fam = make_family(parse("t*phi + x*phi^2 - 1"), {"t", "x"}, Guess{0.5});
  SampleSpec spec;
  spec.box = {{0.5, 2.0}, {0.5, 2.0}};
  spec.points = 40;
  spec.mode = SampleMode::random;
  spec.seed = 17;
  const auto a = sample(fam, spec);
  const auto b = sample(fam, spec);
  ASSERT_EQ(a.size(), 40u);
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].x, b[k].x);
    ASSERT_EQ(a[k].ok(), b[k].ok());
    if (a[k].ok()) {
      EXPECT_EQ(a[k].jet->phi, b[k].jet->phi);
    }
  }
  spec.seed = 18;
  EXPECT_NE(sample(fam, spec)[0].x, a[0].x);
}

TEST(SampleGrid, ContinuationKeepsBranch) {
  // positive root of x*phi^2 + t*phi - 1, tracked across a 9x9 grid
  const auto fam = make_family(parse("t*phi + x*phi^2 - 1"), {"t", "x"}, Guess{0.6});
  SampleSpec spec;
  spec.box = {{0.5, 2.0}, {0.5, 2.0}};
  spec.counts = {9, 9};
  const auto pts = sample(fam, spec);
  for (const auto& p : pts) {
    ASSERT_TRUE(p.ok());
    const double t = p.x[0], x = p.x[1];
    EXPECT_NEAR(p.jet->phi, (-t + std::sqrt(t * t + 4 * x)) / (2 * x), 1e-14);
  }
}

TEST(SampleManifold, RayModeLandsOnLevelSet) {
  const auto fam = make_family(parse("(x1^2 + x2^2) * phi - 1"), {"x1", "x2"}, Guess{1.0});
  SampleSpec spec;
  spec.box = {{-1.0, 1.0}, {-1.0, 1.0}};
  spec.points = 20;
  spec.mode = SampleMode::ray;
  spec.phi_range = {0.5, 2.0};
  spec.seed = 3;
  for (const auto& p : sample(fam, spec)) {
    ASSERT_TRUE(p.ok()) << p.message;
    EXPECT_NEAR(p.jet->phi * (p.x[0] * p.x[0] + p.x[1] * p.x[1]), 1.0, 1e-12);
    EXPECT_GE(p.jet->phi, 0.5);
    EXPECT_LE(p.jet->phi, 2.0);
  }
}

TEST(SampleManifold, AxisMode) {
  const auto fam = make_family(parse("x2 - phi*x1^2"), {"x1", "x2"}, Guess{0.0});
  SampleSpec spec;
  spec.box = {{0.5, 1.5}, {-1.0, 1.0}};
  spec.points = 10;
  spec.mode = SampleMode::axis;
  spec.phi_range = {-1.0, 1.0};
  for (const auto& p : sample(fam, spec)) {
    ASSERT_TRUE(p.ok()) << p.message;
    EXPECT_NEAR(p.jet->phi, p.x[1] / (p.x[0] * p.x[0]), 1e-14);
  }
}

}  // namespace
}  // namespace implicit_pde
