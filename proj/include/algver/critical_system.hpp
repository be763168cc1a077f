#pragma once

// Critical-point systems for the distance from a point to a decision boundary.
//
// Relaxed (one pair of classes, boundary B = f_c − f_c'):
//   unknowns (x_1..x_n, λ)
//   B(x) = 0,   x_i − u_i + λ ∂B/∂x_i = 0.
//
// Full (all k classes; μ_j for every class j ∉ {c, c'}, in increasing order):
//   unknowns (x_1..x_n, λ, μ_j...)
//   x_i − ξ_i + λ ∂(f_c − f_c')/∂x_i + Σ_j μ_j ∂(f_j − f_c)/∂x_i = 0
//   f_c(x) − f_c'(x) = 0
//   μ_j (f_j(x) − f_c(x)) = 0
// with μ_j ≥ 0 and f_j ≤ f_c checked after solving. The λ sign is chosen so
// that the μ = 0 branch is exactly the relaxed system.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "algver/error.hpp"
#include "algver/homotopy.hpp"
#include "algver/polynomial.hpp"

namespace algver {

enum class SystemKind { relaxed, full };

struct CriticalSystem {
  PolySystem system;
  SystemKind kind = SystemKind::relaxed;
  Eigen::VectorXd datapoint;
  std::size_t c = 0;
  std::size_t c_prime = 1;
  Polynomial boundary;                  // f_c − f_c' in the n input variables
  std::vector<Polynomial> logits;       // full systems only
  std::vector<std::size_t> mu_classes;  // class of each μ, in unknown order

  std::size_t input_dim() const { return static_cast<std::size_t>(datapoint.size()); }
};

struct CriticalPoint {
  Eigen::VectorXd x;
  double lambda = 0.0;
  Eigen::VectorXd mu;
  double distance = 0.0;
  std::size_t multiplicity = 1;  // endpoints in the cluster
};

inline CriticalSystem build_relaxed(const Polynomial& B, const Eigen::VectorXd& u) {
  const std::size_t n = B.nvars();
  if (B.is_zero()) throw DimensionError("boundary polynomial is zero");
  if (static_cast<std::size_t>(u.size()) != n) {
    throw DimensionError("data point has length " + std::to_string(u.size()) + ", boundary has " +
                         std::to_string(n) + " variables");
  }
  CriticalSystem cs;
  cs.kind = SystemKind::relaxed;
  cs.datapoint = u;
  cs.boundary = B;
  const Polynomial Bz = B.with_nvars(n + 1);
  const Polynomial lambda = Polynomial::variable(n + 1, n);
  cs.system.nvars = n + 1;
  cs.system.equations.push_back(Bz);
  for (std::size_t i = 0; i < n; ++i) {
    Polynomial eq = Polynomial::variable(n + 1, i) - Polynomial::constant(n + 1, u(static_cast<Eigen::Index>(i)));
    eq += lambda * Bz.derivative(i);
    cs.system.equations.push_back(std::move(eq));
  }
  return cs;
}

inline CriticalSystem build_full(const std::vector<Polynomial>& logits, const Eigen::VectorXd& xi,
                                 std::size_t c, std::size_t c_prime) {
  const std::size_t k = logits.size();
  if (k < 2) throw DimensionError("need at least two classes");
  if (c >= k || c_prime >= k || c == c_prime) throw DimensionError("invalid class pair");
  const std::size_t n = logits[0].nvars();
  for (const auto& f : logits) {
    if (f.nvars() != n) throw DimensionError("logits have different variable counts");
  }
  const Polynomial B = logits[c] - logits[c_prime];
  if (k == 2) {
    CriticalSystem cs = build_relaxed(B, xi);
    cs.c = c;
    cs.c_prime = c_prime;
    cs.logits = logits;
    return cs;
  }
  if (B.is_zero()) throw DimensionError("boundary polynomial is zero");
  if (static_cast<std::size_t>(xi.size()) != n) throw DimensionError("data point length mismatch");

  CriticalSystem cs;
  cs.kind = SystemKind::full;
  cs.datapoint = xi;
  cs.c = c;
  cs.c_prime = c_prime;
  cs.boundary = B;
  cs.logits = logits;
  for (std::size_t j = 0; j < k; ++j) {
    if (j != c && j != c_prime) cs.mu_classes.push_back(j);
  }

  const std::size_t N = n + 1 + cs.mu_classes.size();
  const Polynomial Bz = B.with_nvars(N);
  const Polynomial lambda = Polynomial::variable(N, n);
  std::vector<Polynomial> gaps;  // f_j − f_c
  for (std::size_t j : cs.mu_classes) gaps.push_back((logits[j] - logits[c]).with_nvars(N));

  cs.system.nvars = N;
  for (std::size_t i = 0; i < n; ++i) {
    Polynomial eq = Polynomial::variable(N, i) - Polynomial::constant(N, xi(static_cast<Eigen::Index>(i)));
    eq += lambda * Bz.derivative(i);
    for (std::size_t m = 0; m < gaps.size(); ++m) {
      eq += Polynomial::variable(N, n + 1 + m) * gaps[m].derivative(i);
    }
    cs.system.equations.push_back(std::move(eq));
  }
  cs.system.equations.push_back(Bz);
  for (std::size_t m = 0; m < gaps.size(); ++m) {
    cs.system.equations.push_back(Polynomial::variable(N, n + 1 + m) * gaps[m]);
  }
  return cs;
}

/// Max-norm of the system's equations at a candidate.
inline double residual(const CriticalSystem& cs, const VectorXc& candidate) {
  if (static_cast<std::size_t>(candidate.size()) != cs.system.nvars) {
    throw DimensionError("candidate has wrong length");
  }
  const std::span<const Complex> z(candidate.data(), static_cast<std::size_t>(candidate.size()));
  double r = 0.0;
  for (const auto& eq : cs.system.equations) r = std::max(r, std::abs(eq.evaluate(z)));
  return r;
}

/// Σ |c_α x^α| over the terms of p: the natural scale of p(x).
inline double term_magnitude(const Polynomial& p, std::span<const double> x) {
  double s = 0.0;
  for (const auto& [m, c] : p.terms()) {
    double t = std::abs(c);
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (m[i] != 0) t *= std::pow(std::abs(x[i]), static_cast<double>(m[i]));
    }
    s += t;
  }
  return s;
}

/// True when ∇B(x) vanishes relative to the scale of its entries.
inline bool gradient_vanishes(const Polynomial& B, std::span<const double> x, double sing_tol) {
  double norm = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < B.nvars(); ++i) {
    const Polynomial d = B.derivative(i);
    norm = std::max(norm, std::abs(d.evaluate(x)));
    scale = std::max({scale, d.max_coefficient(), term_magnitude(d, x)});
  }
  return norm <= sing_tol * std::max(scale, 1e-300);
}

struct CriticalSolve {
  SolveResult solve;
  std::vector<CriticalPoint> points;  // real, non-singular, feasible; by distance
  std::size_t singular_discarded = 0;
  std::size_t infeasible_discarded = 0;
  std::size_t complex_clusters = 0;
};

struct CriticalOptions {
  SolveOptions solve;
  double singular_tol = 1e-8;
  double feasibility_tol = 1e-8;
};

/// Solves a critical system and extracts its real critical points: one per
/// real cluster of x-coordinates, dropping points where ∇B vanishes and, for
/// full systems, points violating μ ≥ 0 or f_j ≤ f_c.
inline CriticalSolve solve_critical(const CriticalSystem& cs, const CriticalOptions& opts = {}) {
  CriticalSolve out;
  SolveOptions so = opts.solve;
  const std::size_t n = cs.input_dim();
  so.classify.cluster_coords = n;
  out.solve = solve(cs.system, so);

  const auto& set = out.solve.solutions;
  for (std::size_t k = 0; k < set.cluster_count(); ++k) {
    const Solution& s = set.representative(k);
    if (!s.is_real) {
      ++out.complex_clusters;
      continue;
    }
    CriticalPoint p;
    p.x = s.point.head(static_cast<Eigen::Index>(n)).real();
    p.lambda = s.point(static_cast<Eigen::Index>(n)).real();
    p.multiplicity = set.cluster_sizes[k];
    const std::span<const double> xs(p.x.data(), n);
    if (gradient_vanishes(cs.boundary, xs, opts.singular_tol)) {
      ++out.singular_discarded;
      continue;
    }
    if (cs.kind == SystemKind::full) {
      p.mu = s.point.tail(static_cast<Eigen::Index>(cs.mu_classes.size())).real();
      bool feasible = true;
      const double fc = cs.logits[cs.c].evaluate(xs);
      for (std::size_t m = 0; m < cs.mu_classes.size() && feasible; ++m) {
        const Polynomial& fj = cs.logits[cs.mu_classes[m]];
        const double scale = std::max({1.0, term_magnitude(fj, xs), term_magnitude(cs.logits[cs.c], xs)});
        if (p.mu(static_cast<Eigen::Index>(m)) < -opts.feasibility_tol) feasible = false;
        if (fj.evaluate(xs) - fc > opts.feasibility_tol * scale) feasible = false;
      }
      if (!feasible) {
        ++out.infeasible_discarded;
        continue;
      }
    }
    p.distance = (p.x - cs.datapoint).norm();
    out.points.push_back(std::move(p));
  }
  std::stable_sort(out.points.begin(), out.points.end(),
                   [](const CriticalPoint& a, const CriticalPoint& b) { return a.distance < b.distance; });
  return out;
}

}  // namespace algver
