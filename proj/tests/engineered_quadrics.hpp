#pragma once

// Quadrics built to land in a chosen rank case: a diagonal form conjugated by
// a random orthogonal matrix, then translated.

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "algver/quadric.hpp"
#include "algver/random.hpp"

namespace algver::testing {

struct EngineeredQuadric {
  QuadricForm form;
  QuadricCase rank_case;
  std::size_t r = 0;  // distinct nonzero eigenvalues
  std::size_t expected_ed = 0;
};

inline Eigen::MatrixXd random_orthogonal(std::size_t n, Rng& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  return qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
}

/// Eigenvalues are distinct, nonzero where nonzero, and at least 0.5 apart.
/// rank_A is n or n − 1; the case fixes how b and c are chosen:
///   rank_plus_one: b in range(A), c generic;
///   rank_plus_two: rank_A = n − 1 and b has a null-space component;
///   equal_rank:    b in range(A), c on the cone, rank_A >= 2.
inline EngineeredQuadric engineer_quadric(std::size_t n, QuadricCase kind, Rng& rng) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::size_t rank_A = n;
  if (kind == QuadricCase::rank_plus_two) rank_A = n - 1;
  else if (n >= 3 && unif(rng) < 0.5) rank_A = n - 1;

  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  double level = (unif(rng) < 0.5 ? -1.0 : 1.0) * (0.5 + unif(rng));
  for (std::size_t i = 0; i < rank_A; ++i) {
    diag(i) = level;
    level += (0.5 + unif(rng)) * (unif(rng) < 0.5 ? -1.0 : 1.0);
    // keep eigenvalues off zero and apart from all previous ones
    bool clash = std::abs(level) < 0.5;
    for (std::size_t k = 0; k <= i; ++k) clash = clash || std::abs(level - diag(k)) < 0.5;
    if (clash) level = diag.head(i + 1).cwiseAbs().maxCoeff() + 0.5 + unif(rng);
  }
  const Eigen::MatrixXd Q = random_orthogonal(n, rng);
  EngineeredQuadric e;
  e.rank_case = kind;
  e.r = rank_A;
  e.form.A = Q * diag.asDiagonal() * Q.transpose();
  e.form.A = 0.5 * (e.form.A + e.form.A.transpose());

  // Centre t in range(A): B = (x − t)ᵀA(x − t) + κ (+ a linear null-space term).
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 0; i < rank_A; ++i) y(i) = normal(rng);
  const Eigen::VectorXd t = Q * y;
  const double kappa = (kind == QuadricCase::equal_rank) ? 0.0 : (unif(rng) < 0.5 ? -1.0 : 1.0) * (0.5 + unif(rng));
  e.form.b = -2.0 * e.form.A * t;
  e.form.c = t.dot(e.form.A * t) + kappa;
  if (kind == QuadricCase::rank_plus_two) {
    e.form.b += (0.5 + unif(rng)) * Q.col(static_cast<Eigen::Index>(n - 1));
  }
  switch (kind) {
    case QuadricCase::rank_plus_one: e.expected_ed = 2 * e.r; break;
    case QuadricCase::rank_plus_two: e.expected_ed = 2 * e.r + 1; break;
    case QuadricCase::equal_rank: e.expected_ed = 2 * e.r - 2; break;
  }
  return e;
}

/// `per_case` quadrics for each rank case, dimensions cycling through 2, 3, 4.
inline std::vector<EngineeredQuadric> engineered_suite(std::size_t per_case, std::uint64_t seed) {
  std::vector<EngineeredQuadric> out;
  const QuadricCase kinds[] = {QuadricCase::rank_plus_one, QuadricCase::rank_plus_two, QuadricCase::equal_rank};
  for (QuadricCase kind : kinds) {
    Rng rng = make_rng(seed, to_string(kind));
    for (std::size_t i = 0; i < per_case; ++i) out.push_back(engineer_quadric(2 + i % 3, kind, rng));
  }
  return out;
}

}  // namespace algver::testing
