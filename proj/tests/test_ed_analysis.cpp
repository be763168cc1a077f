#include <gtest/gtest.h>

#include <random>

#include "algver/ed_analysis.hpp"
#include "algver/network.hpp"
#include "algver/network_io.hpp"
#include "test_support.hpp"

using namespace algver;
using algver::testing::cst;
using algver::testing::var;
using algver::testing::worked_example;

namespace {

Polynomial first_boundary() { return boundary_polynomial(worked_example(false), 0, 1); }
Polynomial second_boundary() { return boundary_polynomial(worked_example(true), 0, 1); }

NetworkParams random_net(std::vector<std::size_t> dims, unsigned d, std::uint64_t draw) {
  Rng rng = make_rng(1234, "ed-test-net", draw);
  return NetworkParams::gaussian({std::move(dims), d}, rng);
}

bool has_point(const std::vector<Eigen::VectorXd>& pts, const Eigen::Vector2d& target, double tol) {
  for (const auto& p : pts) {
    if ((p - target).norm() <= tol) return true;
  }
  return false;
}

// First-order distance |D| / ‖∇D‖ from u to the zero set of the sextic.
double distance_to_discriminant(double u1, double u2) {
  static const Polynomial D = discriminant_fixture();
  static const Polynomial D1 = D.derivative(0);
  static const Polynomial D2 = D.derivative(1);
  const double p[2] = {u1, u2};
  const std::span<const double> s(p, 2);
  const double g = std::hypot(D1.evaluate(s), D2.evaluate(s));
  return std::abs(D.evaluate(s)) / std::max(g, 1e-300);
}

}  // namespace

TEST(Formulas, ShallowExamples) {
  EXPECT_EQ(ed_degree_shallow(3, 2, 3), 9U);
  EXPECT_EQ(ed_degree_shallow(3, 3, 3), 21U);
  EXPECT_EQ(ed_degree_shallow(4, 4, 3), 45U);
  for (std::uint64_t n = 1; n <= 6; ++n) {
    for (std::uint64_t h = 1; h <= 6; ++h) {
      EXPECT_EQ(ed_degree_shallow(n, h, 2), 2 * std::min(n, h));
      EXPECT_EQ(ed_degree_shallow(n, h, 1), 1U);
    }
  }
}

TEST(Formulas, BottleneckAndDeep) {
  EXPECT_EQ(ed_degree_bottleneck(2, 3, 2), 16U);
  EXPECT_EQ(ed_degree_bottleneck(3, 2, 2), 12U);
  EXPECT_EQ(ed_degree_deep_generic(2, 2, 2), 16U);
  EXPECT_EQ(ed_degree_deep_generic(3, 2, 2), 52U);
  for (std::uint64_t n = 1; n <= 4; ++n) {
    for (std::uint64_t d = 1; d <= 4; ++d) {
      EXPECT_EQ(ed_degree_bottleneck(n, 1, d), ed_degree_shallow(n, n + 1, d));
      EXPECT_EQ(ed_degree_deep_generic(n, 1, d), ed_degree_shallow(n, n, d));
    }
  }
}

TEST(Formulas, RejectZeroArgumentsAndOverflow) {
  EXPECT_THROW(ed_degree_shallow(0, 2, 2), DimensionError);
  EXPECT_THROW(ed_degree_bottleneck(2, 0, 2), DimensionError);
  EXPECT_THROW(ed_degree_deep_generic(2, 2, 0), DimensionError);
  EXPECT_THROW(ed_degree_deep_generic(40, 8, 9), Error);
}

TEST(EdNumeric, WorkedExamplesAndCircle) {
  EXPECT_EQ(ed_degree_numeric(first_boundary(), 5, 1).numeric_count, 4U);
  EXPECT_EQ(ed_degree_numeric(second_boundary(), 5, 2).numeric_count, 2U);
  const auto x = var(2, 0), y = var(2, 1);
  const auto circle = ed_degree_numeric(x * x + y * y - cst(2, 1), 5, 3);
  EXPECT_EQ(circle.numeric_count, 2U);
  EXPECT_TRUE(circle.trials_agree);
  EXPECT_LE(circle.real_count, circle.numeric_count);
}

TEST(EdNumeric, RejectsZeroBoundary) {
  EXPECT_THROW(ed_degree_numeric(Polynomial(2), 3, 0), DimensionError);
}

TEST(EdNumeric, ReportJsonHasTrials) {
  const auto r = ed_degree_numeric(first_boundary(), 3, 4);
  const auto j = to_json(r);
  EXPECT_EQ(j["numeric_count"], 4);
  EXPECT_EQ(j["trials"].size(), 3U);
  EXPECT_TRUE(j["formula_value"].is_null());
}

TEST(EdNumeric, ModalValueBreaksTiesUpward) {
  EXPECT_EQ(modal_value({4, 4, 3}), 4U);
  EXPECT_EQ(modal_value({3, 4}), 4U);
  EXPECT_EQ(modal_value({36, 35, 36, 34, 36}), 36U);
}

TEST(EdNumericProperty, FormulaAgreementOnRandomNets) {
  struct Case {
    std::vector<std::size_t> dims;
    unsigned d;
    std::uint64_t expected;
  };
  const std::vector<Case> cases = {{{3, 2, 2}, 3, ed_degree_shallow(3, 2, 3)},
                                   {{2, 2, 2}, 2, ed_degree_shallow(2, 2, 2)},
                                   {{3, 3, 2}, 2, ed_degree_shallow(3, 3, 2)}};
  for (const auto& c : cases) {
    for (std::uint64_t draw = 0; draw < 5; ++draw) {
      const auto B = boundary_polynomial(random_net(c.dims, c.d, draw), 0, 1);
      const auto r = ed_degree_numeric(B, 3, draw);
      EXPECT_EQ(r.numeric_count, c.expected) << "dims " << c.dims.size() << " draw " << draw;
      EXPECT_LE(r.real_count, r.numeric_count);
      EXPECT_LE(r.numeric_count, r.bezout);
    }
  }
}

TEST(EdNumeric, DeepNetWithNarrowHiddenLayers) {
  const auto B = boundary_polynomial(random_net({3, 3, 2, 2}, 2, 0), 0, 1);
  EXPECT_EQ(ed_degree_numeric(B, 3, 0).numeric_count, 36U);
}

TEST(Profile, FirstExampleRegions) {
  const auto B = first_boundary();
  const auto origin = real_critical_profile(B, Eigen::Vector2d(0, 0));
  EXPECT_EQ(origin.distinct_real, 2U);
  EXPECT_EQ(origin.max_cluster, 1U);
  for (double s : {10.0, -10.0}) {
    const auto far = real_critical_profile(B, Eigen::Vector2d(s, 0));
    EXPECT_EQ(far.distinct_real, 4U);
    EXPECT_EQ(far.max_cluster, 1U);
  }
}

TEST(Profile, DiscriminantPointCollides) {
  const auto p = real_critical_profile(first_boundary(), Eigen::Vector2d(-2, 0));
  EXPECT_EQ(p.distinct_real, 3U);
  EXPECT_EQ(p.max_cluster, 2U);
  bool found = false;
  for (std::size_t i = 0; i < p.real_points.size(); ++i) {
    if (p.real_cluster_sizes[i] == 2) {
      EXPECT_LE((p.real_points[i] - Eigen::Vector2d(-0.8, 0.4)).norm(), 1e-6);
      found = true;
    }
  }
  EXPECT_TRUE(found);
}

TEST(Profile, SecondExampleNodeCollides) {
  const auto B = second_boundary();
  const auto node = real_critical_profile(B, Eigen::Vector2d(-0.6, -0.2));
  EXPECT_EQ(node.max_cluster, 2U);
  EXPECT_EQ(node.distinct_real, 1U);
  EXPECT_TRUE(has_point(node.real_points, Eigen::Vector2d(-0.6, -0.2), 1e-6));
  const auto origin = real_critical_profile(B, Eigen::Vector2d(0, 0));
  EXPECT_EQ(origin.distinct_real, 2U);
  EXPECT_TRUE(has_point(origin.real_points, Eigen::Vector2d(-0.4, 0.2), 1e-8));
  EXPECT_TRUE(has_point(origin.real_points, Eigen::Vector2d(-12.0 / 25, -9.0 / 25), 1e-8));
}

TEST(Fixture, DiscriminantValues) {
  EXPECT_EQ(discriminant_fixture_eval(0, 0), -152.0);
  EXPECT_EQ(discriminant_fixture_eval(-2, 0), 0.0);
  EXPECT_GT(discriminant_fixture_eval(10, 0), 0.0);
  const Polynomial D = discriminant_fixture();
  EXPECT_EQ(D.degree(), 6U);
  Rng rng(5);
  std::uniform_real_distribution<double> unif(-3, 3);
  for (int i = 0; i < 50; ++i) {
    const double p[2] = {unif(rng), unif(rng)};
    EXPECT_NEAR(D.evaluate(std::span<const double>(p, 2)), discriminant_fixture_eval(p[0], p[1]),
                1e-9 * (1 + std::abs(discriminant_fixture_eval(p[0], p[1]))));
  }
}

TEST(Fixture, WorkedExampleFilesMatchInlineNets) {
  const auto one = load_network(algver::testing::data_path("example1.json"));
  const auto two = load_network(algver::testing::data_path("example2.json"));
  EXPECT_TRUE(boundary_polynomial(one, 0, 1) == first_boundary());
  EXPECT_TRUE(boundary_polynomial(two, 0, 1) == second_boundary());
}

TEST(EdProperty, DiscriminantSignPredictsRealCount) {
  const auto B = first_boundary();
  std::size_t checked = 0;
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 20; ++j) {
      const double u1 = -3.0 + 6.0 * i / 19.0;
      const double u2 = -3.0 + 6.0 * j / 19.0;
      if (distance_to_discriminant(u1, u2) < 1e-2) continue;
      const double D = discriminant_fixture_eval(u1, u2);
      const auto p = real_critical_profile(B, Eigen::Vector2d(u1, u2));
      EXPECT_EQ(p.distinct_real, D > 0 ? 4U : 2U) << "u = (" << u1 << ", " << u2 << ")";
      ++checked;
    }
  }
  EXPECT_GT(checked, 350U);
}

TEST(EdProperty, ProbeReportsSignAndCount) {
  const auto rows = discriminant_probe(first_boundary(), -3, 3, 4, discriminant_fixture_eval);
  ASSERT_EQ(rows.size(), 16U);
  for (const auto& r : rows) {
    if (distance_to_discriminant(r.u1, r.u2) < 1e-2) continue;
    EXPECT_EQ(r.real_count, r.sign > 0 ? 4U : 2U);
  }
  EXPECT_THROW(discriminant_probe(var(3, 0), -1, 1, 2), DimensionError);
}

// For a pair of crossing lines the two projections meet only at the crossing.
TEST(EdProperty, LinePairCriticalPointsCollideOnlyAtCrossing) {
  Rng rng(77);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::Vector2d n1(normal(rng), normal(rng)), n2(normal(rng), normal(rng));
    const double c1 = normal(rng), c2 = normal(rng);
    const auto L1 = n1(0) * var(2, 0) + n1(1) * var(2, 1) + cst(2, c1);
    const auto L2 = n2(0) * var(2, 0) + n2(1) * var(2, 1) + cst(2, c2);
    Eigen::Matrix2d N;
    N << n1.transpose(), n2.transpose();
    const Eigen::Vector2d crossing = N.partialPivLu().solve(Eigen::Vector2d(-c1, -c2));
    const auto B = L1 * L2;

    const Eigen::Vector2d u = crossing + Eigen::Vector2d(normal(rng), normal(rng));
    const auto generic = real_critical_profile(B, u);
    std::vector<Eigen::VectorXd> off_node;
    for (const auto& p : generic.real_points) {
      if ((p - crossing).norm() > 1e-6) off_node.push_back(p);
    }
    ASSERT_EQ(off_node.size(), 2U);
    EXPECT_GT((off_node[0] - off_node[1]).norm(), 1e-3 * (u - crossing).norm());
    EXPECT_EQ(ed_degree_numeric(B, 3, static_cast<std::uint64_t>(trial)).numeric_count, 2U);

    const auto at = real_critical_profile(B, crossing);
    EXPECT_GE(at.max_cluster, 2U);
  }
}
