#pragma once

// Degree-2 decision boundaries B(x) = xᵀAx + bᵀx + c.
//
// With M = [[A, b/2], [bᵀ/2, c]] and r the number of distinct nonzero
// eigenvalues of A, the ED degree of {B = 0} is
//   2r      if rank M = rank A + 1
//   2r + 1  if rank M = rank A + 2
//   2r − 2  if rank M = rank A.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "algver/error.hpp"
#include "algver/network.hpp"
#include "algver/polynomial.hpp"

namespace algver {

struct QuadricForm {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  double c = 0.0;

  std::size_t dim() const { return static_cast<std::size_t>(A.rows()); }

  Eigen::MatrixXd M() const {
    const Eigen::Index n = A.rows();
    Eigen::MatrixXd m(n + 1, n + 1);
    m.topLeftCorner(n, n) = A;
    m.topRightCorner(n, 1) = b / 2.0;
    m.bottomLeftCorner(1, n) = b.transpose() / 2.0;
    m(n, n) = c;
    return m;
  }

  /// The polynomial xᵀAx + bᵀx + c.
  Polynomial polynomial() const {
    const std::size_t n = dim();
    Polynomial p = Polynomial::constant(n, c);
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const Polynomial xi = Polynomial::variable(n, i);
      p += xi * Complex(b(ii));
      p += xi * xi * Complex(A(ii, ii));
      for (std::size_t j = i + 1; j < n; ++j) {
        p += xi * Polynomial::variable(n, j) * Complex(2.0 * A(ii, static_cast<Eigen::Index>(j)));
      }
    }
    return p;
  }
};

enum class QuadricCase { rank_plus_one, rank_plus_two, equal_rank };

inline const char* to_string(QuadricCase k) {
  switch (k) {
    case QuadricCase::rank_plus_one: return "rank_M=rank_A+1";
    case QuadricCase::rank_plus_two: return "rank_M=rank_A+2";
    case QuadricCase::equal_rank: return "rank_M=rank_A";
  }
  return "?";
}

enum class ConicClass { ellipse, hyperbola, parabola, circle, degenerate };

inline const char* to_string(ConicClass k) {
  switch (k) {
    case ConicClass::ellipse: return "ellipse";
    case ConicClass::hyperbola: return "hyperbola";
    case ConicClass::parabola: return "parabola";
    case ConicClass::circle: return "circle";
    case ConicClass::degenerate: return "degenerate";
  }
  return "?";
}

struct QuadricTolerances {
  double rank = 1e-9;        // singular values below rank·σ_max count as zero
  double eigenvalue = 1e-7;  // eigenvalues closer than eigenvalue·‖A‖ coincide
};

/// Δ = det A · det M · Disc(char poly of A); for n = 2 also the conic triple.
struct ParameterDiscriminant {
  double delta = 0.0;
  double det_A = 0.0;
  double det_M = 0.0;
  double eigen_disc = 0.0;  // ∏_{i<j} (λ_i − λ_j)²
  std::optional<std::array<double, 3>> conic;  // (Δ_sing, Δ_par, Δ_circ)
};

struct QuadricReport {
  std::size_t n = 0;
  std::size_t rank_A = 0;
  std::size_t rank_M = 0;
  std::size_t r = 0;
  QuadricCase rank_case = QuadricCase::rank_plus_one;
  std::size_t ed_degree = 0;
  Eigen::VectorXd eigenvalues;
  std::optional<ConicClass> conic_class;
  ParameterDiscriminant discriminant;
  // |log10(value / threshold)| for the decision closest to its threshold;
  // small values mean the report is tolerance-sensitive.
  double rank_gap = std::numeric_limits<double>::infinity();
  double eigen_gap = std::numeric_limits<double>::infinity();
  QuadricTolerances tol;
};

/// Reads A, b, c off a degree-2 polynomial with real coefficients.
inline QuadricForm extract_quadric(const Polynomial& B) {
  if (B.degree() != 2) {
    throw DimensionError("extract_quadric needs a degree-2 polynomial, got degree " + std::to_string(B.degree()));
  }
  const std::size_t n = B.nvars();
  QuadricForm q;
  q.A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  q.b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (const auto& [m, coef] : B.terms()) {
    if (std::abs(coef.imag()) > 1e-12 * std::max(1.0, std::abs(coef))) {
      throw Error("extract_quadric needs real coefficients");
    }
    const double v = coef.real();
    std::vector<Eigen::Index> vars;
    for (std::size_t i = 0; i < n; ++i) {
      for (unsigned e = 0; e < m[i]; ++e) vars.push_back(static_cast<Eigen::Index>(i));
    }
    if (vars.empty()) {
      q.c = v;
    } else if (vars.size() == 1) {
      q.b(vars[0]) = v;
    } else if (vars[0] == vars[1]) {
      q.A(vars[0], vars[0]) = v;
    } else {
      q.A(vars[0], vars[1]) = v / 2.0;
      q.A(vars[1], vars[0]) = v / 2.0;
    }
  }
  return q;
}

namespace detail {

inline double log_gap(double value, double threshold) {
  if (value <= 0.0) return std::numeric_limits<double>::infinity();  // exact zero is unambiguous
  return std::abs(std::log10(value / threshold));
}

inline std::size_t numeric_rank(const Eigen::MatrixXd& m, double tol, double& gap) {
  const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    const double rel = sv(i) / sv(0);
    if (rel > tol) ++rank;
    gap = std::min(gap, log_gap(rel, tol));
  }
  return rank;
}

inline double eigen_discriminant(const Eigen::VectorXd& ev) {
  double d = 1.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    for (Eigen::Index j = i + 1; j < ev.size(); ++j) d *= (ev(i) - ev(j)) * (ev(i) - ev(j));
  }
  return d;
}

}  // namespace detail

inline ParameterDiscriminant parameter_discriminant(const QuadricForm& q) {
  ParameterDiscriminant d;
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(q.A).eigenvalues();
  d.det_A = q.A.determinant();
  d.det_M = q.M().determinant();
  d.eigen_disc = detail::eigen_discriminant(ev);
  d.delta = d.det_A * d.det_M * d.eigen_disc;
  if (q.dim() == 2) {
    const double a = q.A(0, 0);
    const double b = 2.0 * q.A(0, 1);
    const double c = q.A(1, 1);
    d.conic = std::array<double, 3>{d.det_M, a * c - b * b / 4.0, (a - c) * (a - c) + b * b};
  }
  return d;
}

/// Conic type of a plane quadric, decided by the same rank and eigenvalue
/// tolerances as the ED-degree report. A singular conic is degenerate even
/// when A is a multiple of the identity.
inline ConicClass classify_conic(const QuadricForm& q, const QuadricTolerances& tol = {}) {
  if (q.dim() != 2) throw DimensionError("classify_conic needs a plane conic (n = 2)");
  double gap = 0.0;
  if (detail::numeric_rank(q.M(), tol.rank, gap) < 3) return ConicClass::degenerate;
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(q.A).eigenvalues();
  const double norm = ev.cwiseAbs().maxCoeff();
  if (std::abs(ev(1) - ev(0)) <= tol.eigenvalue * norm) return ConicClass::circle;
  if (detail::numeric_rank(q.A, tol.rank, gap) < 2) return ConicClass::parabola;
  return ev(0) * ev(1) > 0.0 ? ConicClass::ellipse : ConicClass::hyperbola;
}

inline QuadricReport quadric_ed_degree(const QuadricForm& q, const QuadricTolerances& tol = {}) {
  QuadricReport rep;
  rep.tol = tol;
  rep.n = q.dim();
  if (rep.n == 0) throw DimensionError("quadric has no variables");
  rep.rank_A = detail::numeric_rank(q.A, tol.rank, rep.rank_gap);
  rep.rank_M = detail::numeric_rank(q.M(), tol.rank, rep.rank_gap);

  rep.eigenvalues = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(q.A).eigenvalues();
  const double norm = rep.eigenvalues.cwiseAbs().maxCoeff();
  std::vector<double> nonzero;
  for (Eigen::Index i = 0; i < rep.eigenvalues.size(); ++i) {
    const double lam = rep.eigenvalues(i);
    if (norm > 0.0) rep.eigen_gap = std::min(rep.eigen_gap, detail::log_gap(std::abs(lam) / norm, tol.rank));
    if (norm > 0.0 && std::abs(lam) > tol.rank * norm) nonzero.push_back(lam);
  }
  std::sort(nonzero.begin(), nonzero.end());
  for (std::size_t i = 0; i < nonzero.size(); ++i) {
    if (i == 0) {
      rep.r = 1;
      continue;
    }
    const double diff = nonzero[i] - nonzero[i - 1];
    rep.eigen_gap = std::min(rep.eigen_gap, detail::log_gap(diff / norm, tol.eigenvalue));
    if (diff > tol.eigenvalue * norm) ++rep.r;
  }

  if (rep.rank_M == rep.rank_A + 1) {
    rep.rank_case = QuadricCase::rank_plus_one;
    rep.ed_degree = 2 * rep.r;
  } else if (rep.rank_M == rep.rank_A + 2) {
    rep.rank_case = QuadricCase::rank_plus_two;
    rep.ed_degree = 2 * rep.r + 1;
  } else if (rep.rank_M == rep.rank_A && rep.r >= 1) {
    rep.rank_case = QuadricCase::equal_rank;
    rep.ed_degree = 2 * rep.r - 2;
  } else {
    throw QuadricRankError("rank(A) = " + std::to_string(rep.rank_A) + " and rank(M) = " +
                           std::to_string(rep.rank_M) + " fit no case; nearest cases are " +
                           to_string(QuadricCase::equal_rank) + " and " + to_string(QuadricCase::rank_plus_two) +
                           " (rank gap " + std::to_string(rep.rank_gap) + ")");
  }
  rep.discriminant = parameter_discriminant(q);
  if (rep.n == 2) rep.conic_class = classify_conic(q, tol);
  return rep;
}

/// Conic coefficients (a, b, c, d, e, f) of the boundary f_0 − f_1 of a
/// (2, 2, 2) network with squaring activation, as polynomials in θ.
inline std::array<double, 6> phi_map_222(const NetworkParams& params) {
  if (params.arch.dims != std::vector<std::size_t>{2, 2, 2} || params.arch.degree != 2) {
    throw DimensionError("phi_map_222 needs architecture (2,2,2) with degree 2");
  }
  const Eigen::MatrixXd& W1 = params.weights[0];
  const Eigen::MatrixXd& W2 = params.weights[1];
  const Eigen::VectorXd& b1 = params.biases[0];
  const Eigen::VectorXd& b2 = params.biases[1];
  const double d1 = W2(0, 0) - W2(1, 0);
  const double d2 = W2(0, 1) - W2(1, 1);
  return {
      W1(0, 0) * W1(0, 0) * d1 + W1(1, 0) * W1(1, 0) * d2,
      2.0 * W1(0, 0) * W1(0, 1) * d1 + 2.0 * W1(1, 0) * W1(1, 1) * d2,
      W1(0, 1) * W1(0, 1) * d1 + W1(1, 1) * W1(1, 1) * d2,
      2.0 * W1(0, 0) * b1(0) * d1 + 2.0 * W1(1, 0) * b1(1) * d2,
      2.0 * W1(0, 1) * b1(0) * d1 + 2.0 * W1(1, 1) * b1(1) * d2,
      b1(0) * b1(0) * d1 + b1(1) * b1(1) * d2 + b2(0) - b2(1),
  };
}

/// Plane quadric a x² + b xy + c y² + d x + e y + f.
inline QuadricForm conic_form(const std::array<double, 6>& k) {
  QuadricForm q;
  q.A.resize(2, 2);
  q.A << k[0], k[1] / 2.0, k[1] / 2.0, k[2];
  q.b.resize(2);
  q.b << k[3], k[4];
  q.c = k[5];
  return q;
}

inline nlohmann::ordered_json to_json(const QuadricReport& r) {
  nlohmann::ordered_json j;
  j["n"] = r.n;
  j["rank_A"] = r.rank_A;
  j["rank_M"] = r.rank_M;
  j["r"] = r.r;
  j["case"] = to_string(r.rank_case);
  j["ed_degree"] = r.ed_degree;
  j["eigenvalues"] = std::vector<double>(r.eigenvalues.data(), r.eigenvalues.data() + r.eigenvalues.size());
  j["conic_class"] = r.conic_class ? nlohmann::ordered_json(to_string(*r.conic_class)) : nlohmann::ordered_json(nullptr);
  nlohmann::ordered_json d;
  d["delta"] = r.discriminant.delta;
  d["det_A"] = r.discriminant.det_A;
  d["det_M"] = r.discriminant.det_M;
  d["eigen_disc"] = r.discriminant.eigen_disc;
  if (r.discriminant.conic) {
    d["sing"] = (*r.discriminant.conic)[0];
    d["par"] = (*r.discriminant.conic)[1];
    d["circ"] = (*r.discriminant.conic)[2];
  }
  j["discriminant"] = std::move(d);
  auto finite_or_null = [](double v) { return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr); };
  j["tolerances"] = {{"rank", r.tol.rank}, {"eigenvalue", r.tol.eigenvalue}};
  j["threshold_gaps"] = {{"rank", finite_or_null(r.rank_gap)}, {"eigenvalue", finite_or_null(r.eigen_gap)}};
  return j;
}

}  // namespace algver
