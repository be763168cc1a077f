#include <gtest/gtest.h>

#include <random>

#include "algver/ed_analysis.hpp"
#include "algver/network.hpp"
#include "algver/quadric.hpp"
#include "engineered_quadrics.hpp"
#include "test_support.hpp"

using namespace algver;
using algver::testing::cst;
using algver::testing::var;
using algver::testing::worked_example;

namespace {

QuadricForm make(std::initializer_list<double> a, std::initializer_list<double> b, double c) {
  const auto n = static_cast<Eigen::Index>(b.size());
  QuadricForm q;
  q.A = Eigen::Map<const Eigen::MatrixXd>(a.begin(), n, n);
  q.b = Eigen::Map<const Eigen::VectorXd>(b.begin(), n);
  q.c = c;
  return q;
}

QuadricForm first_quadric() { return extract_quadric(boundary_polynomial(worked_example(false), 0, 1)); }
QuadricForm second_quadric() { return extract_quadric(boundary_polynomial(worked_example(true), 0, 1)); }

}  // namespace

TEST(Extract, WorkedExamples) {
  const auto q1 = first_quadric();
  EXPECT_TRUE(q1.A.isApprox((Eigen::Matrix2d() << -8, -1, -1, 3).finished(), 0));
  EXPECT_TRUE(q1.b.isApprox(Eigen::Vector2d(-6, -2), 0));
  EXPECT_EQ(q1.c, 0.0);
  EXPECT_NEAR(q1.A.determinant(), -25.0, 1e-12);

  const auto q2 = second_quadric();
  EXPECT_TRUE(q2.A.isApprox(q1.A, 0));
  EXPECT_TRUE(q2.b.isApprox(Eigen::Vector2d(-10, 0), 0));
  EXPECT_EQ(q2.c, -3.0);
  EXPECT_NEAR(q2.M().determinant(), 0.0, 1e-12);
}

TEST(Extract, UnitCircleAndRoundTrip) {
  const auto x = var(2, 0), y = var(2, 1);
  const auto B = x * x + y * y - cst(2, 1);
  const auto q = extract_quadric(B);
  EXPECT_TRUE(q.A.isIdentity(0));
  EXPECT_TRUE(q.b.isZero(0));
  EXPECT_EQ(q.c, -1.0);
  EXPECT_TRUE(q.polynomial() == B);
  const auto B1 = boundary_polynomial(worked_example(false), 0, 1);
  EXPECT_TRUE(extract_quadric(B1).polynomial() == B1);
}

TEST(Extract, RejectsOtherDegreesAndComplexCoefficients) {
  const auto x = var(2, 0);
  EXPECT_THROW(extract_quadric(x * x * x), DimensionError);
  EXPECT_THROW(extract_quadric(x + cst(2, 1)), DimensionError);
  EXPECT_THROW(extract_quadric(x * x * Complex(0, 1)), Error);
}

TEST(EdDegree, WorkedExamplesAndParabola) {
  const auto r1 = quadric_ed_degree(first_quadric());
  EXPECT_EQ(r1.rank_case, QuadricCase::rank_plus_one);
  EXPECT_EQ(r1.r, 2U);
  EXPECT_EQ(r1.ed_degree, 4U);
  EXPECT_EQ(r1.conic_class, ConicClass::hyperbola);

  const auto r2 = quadric_ed_degree(second_quadric());
  EXPECT_EQ(r2.rank_case, QuadricCase::equal_rank);
  EXPECT_EQ(r2.r, 2U);
  EXPECT_EQ(r2.ed_degree, 2U);
  EXPECT_EQ(r2.conic_class, ConicClass::degenerate);

  const auto x = var(2, 0), y = var(2, 1);
  const auto parabola = quadric_ed_degree(extract_quadric(y - x * x));
  EXPECT_EQ(parabola.rank_case, QuadricCase::rank_plus_two);
  EXPECT_EQ(parabola.ed_degree, 3U);
  EXPECT_EQ(parabola.conic_class, ConicClass::parabola);
}

TEST(EdDegree, ConicTaxonomy) {
  EXPECT_EQ(classify_conic(make({1, 0, 0, 1}, {0, 0}, -1)), ConicClass::circle);
  EXPECT_EQ(classify_conic(make({2, 0, 0, 3}, {0, 0}, -1)), ConicClass::ellipse);
  EXPECT_EQ(classify_conic(make({2, 0, 0, -3}, {0, 0}, -1)), ConicClass::hyperbola);
  EXPECT_EQ(classify_conic(make({1, 0, 0, 0}, {0, -1}, 0)), ConicClass::parabola);
  // x² + y² = 0 is singular: degenerate wins over circle.
  EXPECT_EQ(classify_conic(make({1, 0, 0, 1}, {0, 0}, 0)), ConicClass::degenerate);
  EXPECT_THROW(classify_conic(make({1, 0, 0, 0, 1, 0, 0, 0, 1}, {0, 0, 0}, -1)), DimensionError);

  EXPECT_EQ(quadric_ed_degree(make({1, 0, 0, 1}, {0, 0}, -1)).ed_degree, 2U);
  EXPECT_EQ(quadric_ed_degree(make({2, 0, 0, 3}, {0, 0}, -1)).ed_degree, 4U);
}

TEST(EdDegree, ReportCarriesThresholdGaps) {
  const auto r = quadric_ed_degree(first_quadric());
  EXPECT_GT(r.rank_gap, 3.0);
  EXPECT_GT(r.eigen_gap, 3.0);
  const auto j = to_json(r);
  EXPECT_EQ(j["case"], "rank_M=rank_A+1");
  EXPECT_EQ(j["conic_class"], "hyperbola");
  EXPECT_EQ(j["ed_degree"], 4);
  EXPECT_TRUE(j["discriminant"].contains("circ"));
}

TEST(EdDegree, BorderlineRankGapIsSmall) {
  // det M is 1e-9 relative: just at the rank threshold.
  auto q = make({1, 0, 0, 1}, {0, 0}, -1e-9);
  const auto r = quadric_ed_degree(q);
  EXPECT_LT(r.rank_gap, 0.5);
}

TEST(EdDegree, ZeroFormFitsNoCase) {
  EXPECT_THROW(quadric_ed_degree(make({0, 0, 0, 0}, {0, 0}, 0)), QuadricRankError);
  try {
    quadric_ed_degree(make({0, 0, 0, 0}, {0, 0}, 0));
  } catch (const QuadricRankError& e) {
    EXPECT_NE(std::string(e.what()).find("rank_M=rank_A"), std::string::npos);
  }
}

TEST(Discriminant, Components) {
  const auto ell = parameter_discriminant(make({2, 0, 0, 3}, {0, 0}, -1));
  EXPECT_NEAR(ell.det_A, 6.0, 1e-12);
  EXPECT_NEAR(ell.det_M, -6.0, 1e-12);
  EXPECT_NEAR(ell.eigen_disc, 1.0, 1e-12);
  EXPECT_NEAR(ell.delta, -36.0, 1e-10);
  ASSERT_TRUE(ell.conic.has_value());
  EXPECT_NEAR((*ell.conic)[0], -6.0, 1e-12);
  EXPECT_NEAR((*ell.conic)[1], 6.0, 1e-12);
  EXPECT_NEAR((*ell.conic)[2], 1.0, 1e-12);

  const auto circ = parameter_discriminant(make({1, 0, 0, 1}, {0, 0}, -1));
  EXPECT_EQ((*circ.conic)[2], 0.0);
  EXPECT_EQ(circ.eigen_disc, 0.0);

  const auto two = parameter_discriminant(second_quadric());
  EXPECT_NEAR(two.det_M, 0.0, 1e-12);
  EXPECT_NEAR(two.delta, 0.0, 1e-9);

  const auto three = parameter_discriminant(make({1, 0, 0, 0, 2, 0, 0, 0, 4}, {0, 0, 0}, -1));
  EXPECT_FALSE(three.conic.has_value());
  EXPECT_NEAR(three.eigen_disc, 1.0 * 9.0 * 4.0, 1e-12);
}

TEST(QuadricProperty, PerturbedCircleLeavesEveryStratum) {
  Rng rng(31);
  std::normal_distribution<double> normal(0.0, 1e-2);
  for (int i = 0; i < 20; ++i) {
    auto q = make({1, 0, 0, 1}, {0, 0}, -1);
    const double off = normal(rng);
    q.A(0, 0) += normal(rng);
    q.A(1, 1) += normal(rng);
    q.A(0, 1) = q.A(1, 0) = off;
    q.b << normal(rng), normal(rng);
    q.c += normal(rng);
    const auto d = parameter_discriminant(q);
    for (double v : *d.conic) EXPECT_NE(v, 0.0);
    EXPECT_NE(d.delta, 0.0);
    EXPECT_EQ(quadric_ed_degree(q).ed_degree, 4U);
  }
}

TEST(Phi, WorkedExampleAndZeroDifference) {
  const auto k = phi_map_222(worked_example(false));
  const std::array<double, 6> expected = {-8, -2, 3, -6, -2, 0};
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(k[i], expected[i], 1e-12) << i;

  auto p = worked_example(false);
  p.weights[1].row(1) = p.weights[1].row(0);
  p.biases[1](1) = p.biases[1](0);
  for (double v : phi_map_222(p)) EXPECT_EQ(v, 0.0);

  Rng rng(3);
  EXPECT_THROW(phi_map_222(NetworkParams::gaussian({{3, 2, 2}, 2}, rng)), DimensionError);
  EXPECT_THROW(phi_map_222(NetworkParams::gaussian({{2, 2, 2}, 3}, rng)), DimensionError);
}

TEST(QuadricProperty, PhiMatchesExpandedBoundary) {
  Rng rng(2024);
  for (int i = 0; i < 100; ++i) {
    const auto p = NetworkParams::gaussian({{2, 2, 2}, 2}, rng);
    const auto k = phi_map_222(p);
    const auto q = extract_quadric(boundary_polynomial(p, 0, 1));
    const auto from_phi = conic_form(k);
    const double scale = 1.0 + std::abs(k[0]) + std::abs(k[2]) + std::abs(k[5]);
    EXPECT_LE((q.A - from_phi.A).cwiseAbs().maxCoeff(), 1e-12 * scale);
    EXPECT_LE((q.b - from_phi.b).cwiseAbs().maxCoeff(), 1e-12 * scale);
    EXPECT_LE(std::abs(q.c - from_phi.c), 1e-12 * scale);
  }
}

TEST(QuadricProperty, EngineeredCasesHitTheirFormula) {
  for (const auto& e : algver::testing::engineered_suite(30, 11)) {
    const auto r = quadric_ed_degree(e.form);
    EXPECT_EQ(r.rank_case, e.rank_case);
    EXPECT_EQ(r.r, e.r);
    EXPECT_EQ(r.ed_degree, e.expected_ed);
    // ED = 2n exactly for full rank A, full rank M and distinct eigenvalues.
    const std::size_t n = e.form.dim();
    const bool generic = r.rank_A == n && r.rank_M == n + 1 && r.r == n;
    EXPECT_EQ(r.ed_degree == 2 * n, generic);
  }
}

TEST(QuadricProperty, EngineeredCasesMatchNumericCount) {
  // A third of the full suite here; the acceptance run covers all 90.
  for (const auto& e : algver::testing::engineered_suite(10, 12)) {
    const auto B = e.form.polynomial();
    const auto numeric = ed_degree_numeric(B, 3, 5);
    EXPECT_EQ(numeric.numeric_count, quadric_ed_degree(e.form).ed_degree)
        << to_string(e.rank_case) << " n=" << e.form.dim();
  }
}
