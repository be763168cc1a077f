#pragma once

// Total-degree homotopy continuation for square polynomial systems.
//
//   H(z, t; γ) = γ(1 − t) G(z) + t F(z),   G_i(z) = z_i^{d_i} − 1,
//
// tracked from t = 0 to t = 1 with an Euler tangent predictor (the Davidenko
// direction −H_z⁻¹ H_t) and a Newton corrector. Paths are tracked in
// homogeneous coordinates on a random affine chart, so solutions of very
// different sizes are equally well conditioned; a path whose affine norm
// exceeds `path_norm_cap` is declared diverged.
//
// Residuals are relative: |H_i(z)| divided by max(largest coefficient of H_i,
// Σ |term_i(z)|), so the Newton tolerance means the same thing for equations of
// any scale or degree.

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "algver/error.hpp"
#include "algver/polynomial.hpp"
#include "algver/random.hpp"

namespace algver {

using VectorXc = Eigen::VectorXcd;
using MatrixXc = Eigen::MatrixXcd;

struct TrackerConfig {
  double initial_step = 0.05;
  double min_step = 1e-7;
  double max_step = 0.1;
  double step_grow = 1.5;
  int grow_after = 4;  // consecutive corrector successes before growing
  double step_shrink = 0.5;
  double newton_tol = 1e-10;
  int newton_max_iters = 6;
  int endpoint_max_iters = 60;  // Newton budget for the final landing on t = 1
  double path_norm_cap = 1e8;
  double t_end = 1.0;
  double endgame_t = 0.95;
  double endgame_max_step = 1e-3;
  double endgame_min_step = 1e-10;  // step floor once t ≥ endgame_t
  std::size_t max_steps = 200000;

  void validate() const {
    if (!(0.0 < min_step && min_step < initial_step && initial_step < 1.0)) {
      throw Error("tracker config needs 0 < min_step < initial_step < 1");
    }
    if (!(step_shrink > 0.0 && step_shrink < 1.0 && step_grow >= 1.0)) {
      throw Error("tracker config has invalid step factors");
    }
    if (!(0.0 < endgame_min_step && endgame_min_step <= min_step)) {
      throw Error("tracker config needs 0 < endgame_min_step <= min_step");
    }
  }
};

struct ClassifyConfig {
  double dedup_tol = 1e-6;
  double real_tol = 1e-6;
  double sing_tol = 1e-8;
  /// Cluster on the first `cluster_coords` coordinates only (0 means all).
  std::size_t cluster_coords = 0;
};

enum class PathStatus { converged, diverged, stalled };

inline const char* to_string(PathStatus s) {
  switch (s) {
    case PathStatus::converged: return "converged";
    case PathStatus::diverged: return "diverged";
    case PathStatus::stalled: return "stalled";
  }
  return "?";
}

struct TraceRow {
  double t;
  double step;
  double residual;
};

struct PathResult {
  VectorXc endpoint;
  PathStatus status = PathStatus::stalled;
  std::size_t steps_taken = 0;
  double final_residual = 0.0;
};

struct NewtonResult {
  VectorXc z;
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;
};

/// Polynomial flattened for repeated evaluation from a table of powers.
class CompiledPolynomial {
 public:
  CompiledPolynomial() = default;
  explicit CompiledPolynomial(const Polynomial& p) : degree_(p.degree()) {
    offsets_.push_back(0);
    for (const auto& [m, c] : p.terms()) {
      coeffs_.push_back(c);
      coeff_max_ = std::max(coeff_max_, std::abs(c));
      for (std::size_t v = 0; v < m.nvars(); ++v) {
        if (m[v] != 0) factors_.push_back({static_cast<std::uint32_t>(v), m[v]});
      }
      offsets_.push_back(static_cast<std::uint32_t>(factors_.size()));
    }
  }

  unsigned degree() const noexcept { return degree_; }
  double coeff_max() const noexcept { return coeff_max_; }
  bool empty() const noexcept { return coeffs_.empty(); }

  /// Value at the point whose powers fill `pw` (pw[v * stride + e] = z_v^e);
  /// `magnitude` receives Σ |term|.
  Complex eval(std::span<const Complex> pw, std::size_t stride, double& magnitude) const {
    Complex sum = 0.0;
    magnitude = 0.0;
    for (std::size_t t = 0; t < coeffs_.size(); ++t) {
      Complex term = coeffs_[t];
      for (std::uint32_t f = offsets_[t]; f < offsets_[t + 1]; ++f) {
        term *= pw[factors_[f].var * stride + factors_[f].exp];
      }
      sum += term;
      magnitude += std::abs(term);
    }
    return sum;
  }

 private:
  struct Factor {
    std::uint32_t var;
    unsigned exp;
  };
  std::vector<Complex> coeffs_;
  std::vector<std::uint32_t> offsets_;
  std::vector<Factor> factors_;
  double coeff_max_ = 0.0;
  unsigned degree_ = 0;
};

/// A square system with its Jacobian, compiled for fast evaluation.
class CompiledSystem {
 public:
  CompiledSystem() = default;
  explicit CompiledSystem(const PolySystem& sys) : n_(sys.nvars), m_(sys.size()) {
    for (const auto& eq : sys.equations) {
      eqs_.emplace_back(eq);
      max_degree_ = std::max(max_degree_, eq.degree());
      for (std::size_t j = 0; j < n_; ++j) {
        Polynomial d = eq.derivative(j);
        if (!d.is_zero()) jac_.push_back({eqs_.size() - 1, j, CompiledPolynomial(d)});
      }
    }
    stride_ = max_degree_ + 1;
  }

  std::size_t nvars() const noexcept { return n_; }
  std::size_t size() const noexcept { return m_; }
  double coeff_max(std::size_t i) const { return eqs_[i].coeff_max(); }

  void fill_powers(const VectorXc& z, std::vector<Complex>& pw) const {
    pw.resize(n_ * stride_);
    for (std::size_t v = 0; v < n_; ++v) {
      Complex p = 1.0;
      for (std::size_t e = 0; e < stride_; ++e) {
        pw[v * stride_ + e] = p;
        p *= z(static_cast<Eigen::Index>(v));
      }
    }
  }

  /// Values and per-equation term magnitudes; optionally the Jacobian.
  void evaluate(const VectorXc& z, std::vector<Complex>& pw, VectorXc& value,
                Eigen::VectorXd& magnitude, MatrixXc* jac) const {
    fill_powers(z, pw);
    value.resize(static_cast<Eigen::Index>(m_));
    magnitude.resize(static_cast<Eigen::Index>(m_));
    for (std::size_t i = 0; i < m_; ++i) {
      double mag = 0.0;
      value(static_cast<Eigen::Index>(i)) = eqs_[i].eval(pw, stride_, mag);
      magnitude(static_cast<Eigen::Index>(i)) = mag;
    }
    if (jac != nullptr) {
      jac->setZero(static_cast<Eigen::Index>(m_), static_cast<Eigen::Index>(n_));
      double unused = 0.0;
      for (const auto& e : jac_) {
        (*jac)(static_cast<Eigen::Index>(e.row), static_cast<Eigen::Index>(e.col)) =
            e.poly.eval(pw, stride_, unused);
      }
    }
  }

 private:
  struct JacEntry {
    std::size_t row;
    std::size_t col;
    CompiledPolynomial poly;
  };
  std::size_t n_ = 0;
  std::size_t m_ = 0;
  std::size_t stride_ = 1;
  unsigned max_degree_ = 0;
  std::vector<CompiledPolynomial> eqs_;
  std::vector<JacEntry> jac_;
};

/// Scratch buffers for one evaluation thread.
struct EvalWorkspace {
  std::vector<Complex> pw;
  VectorXc fv, gv;
  Eigen::VectorXd fmag, gmag;
  MatrixXc fj, gj;
};

/// Relative residual of a compiled system at z (max over equations).
inline double relative_residual(const CompiledSystem& sys, const VectorXc& z, EvalWorkspace& ws) {
  sys.evaluate(z, ws.pw, ws.fv, ws.fmag, nullptr);
  double r = 0.0;
  for (std::size_t i = 0; i < sys.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    const double scale = std::max(sys.coeff_max(i), ws.fmag(k));
    r = std::max(r, scale > 0.0 ? std::abs(ws.fv(k)) / scale : std::abs(ws.fv(k)));
  }
  return r;
}

inline double relative_residual(const PolySystem& sys, const VectorXc& z) {
  CompiledSystem c(sys);
  EvalWorkspace ws;
  return relative_residual(c, z, ws);
}

namespace detail {

/// ‖δ‖∞ / (1 + ‖z‖∞) for the least-squares Newton update δ of F at z. Near
/// a root, even a double one, this is tiny; at points that only look like
/// roots because every term of F is huge, δ is as large as z itself.
inline double newton_step_ratio(const CompiledSystem& sys, const VectorXc& z, EvalWorkspace& ws) {
  MatrixXc jac;
  sys.evaluate(z, ws.pw, ws.fv, ws.fmag, &jac);
  // Pivots below 1e-12 of the coefficient scale count as zero too, so at an
  // exact multiple root the noise direction is dropped instead of amplified.
  double coeff_ref = 0.0;
  for (std::size_t i = 0; i < sys.size(); ++i) coeff_ref = std::max(coeff_ref, sys.coeff_max(i));
  const double jmax = jac.size() ? jac.cwiseAbs().maxCoeff() : 0.0;
  Eigen::CompleteOrthogonalDecomposition<MatrixXc> cod(jac.rows(), jac.cols());
  cod.setThreshold(jmax > 0.0 ? std::max(1e-12, 1e-12 * coeff_ref / jmax) : 1e-12);
  cod.compute(jac);
  const VectorXc dz = cod.solve(ws.fv);
  if (!dz.allFinite()) return std::numeric_limits<double>::infinity();
  return dz.cwiseAbs().maxCoeff() / (1.0 + z.cwiseAbs().maxCoeff());
}

/// Converged-endpoint test against the target system.
inline bool accept_endpoint(const CompiledSystem& sys, const VectorXc& z, double tol, double& residual) {
  EvalWorkspace ws;
  residual = relative_residual(sys, z, ws);
  const double norm = z.size() ? z.cwiseAbs().maxCoeff() : 0.0;
  return residual <= tol * (1.0 + norm) && newton_step_ratio(sys, z, ws) <= 1e-6;
}

}  // namespace detail

/// Start system G_i = z_i^{d_i} − 1 with all ∏ d_i roots-of-unity solutions.
struct StartSystem {
  PolySystem system;
  std::vector<VectorXc> points;
};

/// Product of equation degrees.
inline std::size_t bezout_count(const PolySystem& F) {
  std::size_t count = 1;
  for (unsigned d : F.degrees()) {
    if (d != 0 && count > std::numeric_limits<std::size_t>::max() / d) {
      return std::numeric_limits<std::size_t>::max();
    }
    count *= d;
  }
  return count;
}

inline StartSystem total_degree_start(const PolySystem& F, std::size_t path_budget = 100000) {
  if (!F.is_square()) throw DimensionError("homotopy target must be square");
  const std::size_t n = F.nvars;
  const auto degrees = F.degrees();
  for (std::size_t i = 0; i < n; ++i) {
    if (F.equations[i].is_zero() || degrees[i] == 0) {
      throw DimensionError("equation " + std::to_string(i) + " is constant");
    }
  }
  const std::size_t count = bezout_count(F);
  if (count > path_budget) throw BudgetError("Bezout path count exceeds budget", count, path_budget);

  StartSystem s;
  s.system.nvars = n;
  for (std::size_t i = 0; i < n; ++i) {
    Monomial m(n);
    m[i] = degrees[i];
    Polynomial g(n);
    g.add_term(m, 1.0);
    g.add_term(Monomial(n), -1.0);
    s.system.equations.push_back(std::move(g));
  }

  std::vector<std::size_t> idx(n, 0);
  s.points.reserve(count);
  for (std::size_t p = 0; p < count; ++p) {
    VectorXc z(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(idx[i]) / degrees[i];
      z(static_cast<Eigen::Index>(i)) = std::polar(1.0, angle);
    }
    s.points.push_back(std::move(z));
    for (std::size_t i = n; i-- > 0;) {  // odometer, last coordinate fastest
      if (++idx[i] < degrees[i]) break;
      idx[i] = 0;
    }
  }
  return s;
}

/// H(z, t; γ) = γ(1 − t)G + tF over compiled target and start systems.
/// p with an extra last variable z₀ making every term of degree deg p.
inline Polynomial homogenize(const Polynomial& p) {
  const std::size_t n = p.nvars();
  const unsigned d = p.degree();
  Polynomial out(n + 1);
  for (const auto& [m, c] : p.terms()) {
    std::vector<unsigned> e(n + 1, 0);
    unsigned deg = 0;
    for (std::size_t i = 0; i < n; ++i) {
      e[i] = m[i];
      deg += m[i];
    }
    e[n] = d - deg;
    out.add_term(Monomial(std::move(e)), c);
  }
  return out;
}

inline PolySystem homogenize(const PolySystem& sys) {
  PolySystem out;
  out.nvars = sys.nvars + 1;
  for (const auto& eq : sys.equations) out.equations.push_back(homogenize(eq));
  return out;
}

/// Unit-norm complex vector from the "patch" sub-stream.
inline VectorXc random_patch(std::uint64_t seed, std::size_t size) {
  Rng rng = make_rng(seed, "patch");
  std::normal_distribution<double> nd;
  VectorXc a(static_cast<Eigen::Index>(size));
  for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = Complex(nd(rng), nd(rng));
  return a / a.norm();
}

/// The homotopy in homogeneous coordinates Z = (z·z₀, z₀) restricted to the
/// affine chart a·Z = 1. Paths running off to infinity in z stay bounded in Z
/// and end with z₀ → 0; the last component of H is the chart equation.
class Homotopy {
 public:
  Homotopy(PolySystem target, PolySystem start, Complex gamma, VectorXc patch = {})
      : target_(std::move(target)), start_(std::move(start)), gamma_(gamma) {
    if (!target_.is_square() || !start_.is_square() || target_.nvars != start_.nvars) {
      throw DimensionError("homotopy needs square systems of equal size");
    }
    if (target_.degrees() != start_.degrees()) {
      throw DimensionError("start system degrees must match target degrees");
    }
    if (gamma == Complex(0.0)) throw Error("gamma must be nonzero");
    const std::size_t n = target_.nvars;
    patch_ = patch.size() == 0 ? random_patch(0, n + 1) : std::move(patch);
    if (static_cast<std::size_t>(patch_.size()) != n + 1) throw DimensionError("patch must have nvars + 1 entries");
    degrees_ = target_.degrees();
    f_ = CompiledSystem(target_);
    fh_ = CompiledSystem(homogenize(target_));
    gh_ = CompiledSystem(homogenize(start_));
  }

  const PolySystem& target() const noexcept { return target_; }
  const PolySystem& start() const noexcept { return start_; }
  Complex gamma() const noexcept { return gamma_; }
  const VectorXc& patch() const noexcept { return patch_; }
  const CompiledSystem& compiled_target() const noexcept { return f_; }
  std::size_t nvars() const noexcept { return target_.nvars; }

  /// Homogeneous coordinates of z on the chart.
  VectorXc lift(const VectorXc& z) const {
    const auto n = static_cast<Eigen::Index>(nvars());
    VectorXc Z(n + 1);
    Z.head(n) = z;
    Z(n) = 1.0;
    const Complex s = patch_.cwiseProduct(Z).sum();
    if (std::abs(s) < 1e-300) throw Error("point lies on the chart's hyperplane at infinity");
    return Z / s;
  }

  VectorXc affine(const VectorXc& Z) const {
    const auto n = static_cast<Eigen::Index>(nvars());
    return Z.head(n) / Z(n);
  }

  /// ‖z‖∞ of the affine point, +∞ when z₀ = 0.
  double affine_norm(const VectorXc& Z) const {
    const auto n = static_cast<Eigen::Index>(nvars());
    const double z0 = std::abs(Z(n));
    const double top = n ? Z.head(n).cwiseAbs().maxCoeff() : 0.0;
    return z0 > 0.0 ? top / z0 : std::numeric_limits<double>::infinity();
  }

  /// H, its relative scale, and optionally H_Z and H_t at (Z, t).
  void evaluate(const VectorXc& Z, double t, EvalWorkspace& ws, VectorXc& h,
                Eigen::VectorXd& scale, MatrixXc* hz, VectorXc* ht) const {
    const Complex a = gamma_ * (1.0 - t);
    const double abs_a = std::abs(a);
    const auto n = static_cast<Eigen::Index>(nvars());
    fh_.evaluate(Z, ws.pw, ws.fv, ws.fmag, hz ? &ws.fj : nullptr);
    gh_.evaluate(Z, ws.pw, ws.gv, ws.gmag, hz ? &ws.gj : nullptr);
    const double r = Z.cwiseAbs().maxCoeff();
    h.resize(n + 1);
    scale.resize(n + 1);
    h.head(n) = a * ws.gv + t * ws.fv;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      const double rd = std::pow(r, static_cast<double>(degrees_[k]));
      const double cmax = (abs_a * gh_.coeff_max(k) + t * fh_.coeff_max(k)) * rd;
      scale(i) = std::max(cmax, abs_a * ws.gmag(i) + t * ws.fmag(i));
    }
    const VectorXc az = patch_.cwiseProduct(Z);
    h(n) = az.sum() - 1.0;
    scale(n) = std::max(1.0, az.cwiseAbs().sum());
    if (hz != nullptr) {
      hz->resize(n + 1, n + 1);
      hz->topRows(n) = a * ws.gj + t * ws.fj;
      hz->row(n) = patch_.transpose();
    }
    if (ht != nullptr) {
      ht->resize(n + 1);
      ht->head(n) = ws.fv - gamma_ * ws.gv;
      (*ht)(n) = 0.0;
    }
  }

 private:
  PolySystem target_;
  PolySystem start_;
  Complex gamma_;
  VectorXc patch_;
  std::vector<unsigned> degrees_;
  CompiledSystem f_;
  CompiledSystem fh_;
  CompiledSystem gh_;
};

namespace detail {

inline double relative_of(const VectorXc& h, const Eigen::VectorXd& scale) {
  double r = 0.0;
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    r = std::max(r, scale(i) > 0.0 ? std::abs(h(i)) / scale(i) : std::abs(h(i)));
  }
  return r;
}

inline double inf_norm(const VectorXc& z) { return z.size() ? z.cwiseAbs().maxCoeff() : 0.0; }

enum class LinearSolver { lu, least_squares };

/// Newton iteration on an evaluator `eval(z, h, scale, jac)`.
///
/// Converged when the relative residual is at most tol·(1 + ‖z‖). Fails when
/// the linearization is singular, an update is not at most `max_ratio` times
/// the previous one, or the iteration budget runs out. With `polish`, iteration continues after
/// convergence while updates keep contracting (for linearly convergent
/// multiple roots).
template <class Eval>
NewtonResult newton_iterate(Eval&& eval, VectorXc z, double tol, int max_iters,
                            LinearSolver solver, bool polish, double max_ratio = 1.0) {
  NewtonResult out;
  VectorXc h;
  Eigen::VectorXd scale;
  MatrixXc jac;
  eval(z, h, scale, &jac);
  double res = relative_of(h, scale);
  out.residual = res;
  if (!std::isfinite(res)) {
    out.z = std::move(z);
    return out;
  }
  if (res <= tol * (1.0 + inf_norm(z))) {
    out.converged = true;
    if (!polish) {
      out.z = std::move(z);
      return out;
    }
  }
  double prev_step = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iters; ++it) {
    VectorXc dz;
    if (solver == LinearSolver::lu) {
      Eigen::PartialPivLU<MatrixXc> lu(jac);
      if (!(lu.rcond() > 1e-15)) break;
      dz = lu.solve(h);
    } else {
      Eigen::CompleteOrthogonalDecomposition<MatrixXc> cod(jac);
      cod.setThreshold(1e-12);
      dz = cod.compute(jac).solve(h);
    }
    if (!dz.allFinite()) break;
    const double step = inf_norm(dz);
    if (it > 0 && step > max_ratio * prev_step) break;  // not contracting
    VectorXc znew = z - dz;
    VectorXc hnew;
    Eigen::VectorXd scale_new;
    MatrixXc jac_new;
    eval(znew, hnew, scale_new, &jac_new);
    const double res_new = relative_of(hnew, scale_new);
    if (!std::isfinite(res_new)) break;
    if (out.converged && res_new > 10.0 * res && res_new > 1e-15) break;  // polishing went astray
    z = std::move(znew);
    h = std::move(hnew);
    scale = std::move(scale_new);
    jac = std::move(jac_new);
    res = res_new;
    prev_step = step;
    out.iterations = it + 1;
    out.residual = res;
    if (res <= tol * (1.0 + inf_norm(z))) {
      out.converged = true;
      if (!polish) break;
    }
    if (out.converged && step <= 1e-15 * (1.0 + inf_norm(z))) break;
  }
  out.z = std::move(z);
  return out;
}

}  // namespace detail

/// Newton's method on F(z) = 0 from z; converged when the relative residual
/// drops to newton_tol·(1 + ‖z‖) within newton_max_iters iterations.
inline NewtonResult newton_correct(const PolySystem& F, const VectorXc& z,
                                   const TrackerConfig& cfg = {}) {
  if (static_cast<std::size_t>(z.size()) != F.nvars) throw DimensionError("newton start has wrong length");
  CompiledSystem sys(F);
  EvalWorkspace ws;
  auto eval = [&](const VectorXc& x, VectorXc& h, Eigen::VectorXd& scale, MatrixXc* jac) {
    sys.evaluate(x, ws.pw, h, scale, jac);
    for (std::size_t i = 0; i < sys.size(); ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      scale(k) = std::max(scale(k), sys.coeff_max(i));
    }
  };
  return detail::newton_iterate(eval, z, cfg.newton_tol, cfg.newton_max_iters,
                                detail::LinearSolver::lu, false);
}

/// Tracks one path of `h` from its start point z0 (t = 0) to t = t_end.
inline PathResult track_path(const Homotopy& h, const VectorXc& z0, const TrackerConfig& cfg = {},
                             std::vector<TraceRow>* trace = nullptr) {
  cfg.validate();
  if (static_cast<std::size_t>(z0.size()) != h.nvars()) throw DimensionError("start point has wrong length");
  EvalWorkspace ws;
  VectorXc hv, ht;
  Eigen::VectorXd scale;
  MatrixXc hz;

  VectorXc z = h.lift(z0);
  h.evaluate(z, 0.0, ws, hv, scale, nullptr, nullptr);
  if (detail::relative_of(hv, scale) > 1e-8) {
    throw Error("track_path: start point does not solve the start system");
  }

  PathResult out;
  double t = 0.0;
  double dt = cfg.initial_step;
  int successes = 0;

  while (t < cfg.t_end) {
    if (out.steps_taken >= cfg.max_steps) break;
    double step = std::min({dt, cfg.max_step, cfg.t_end - t});
    bool to_endgame = false;
    if (t >= cfg.endgame_t - 1e-14) {
      step = std::min(step, cfg.endgame_max_step);
    } else if (t + step >= cfg.endgame_t - 1e-14) {
      to_endgame = true;
    }
    const bool landing = !to_endgame && t + step >= cfg.t_end - 1e-14;
    const double t_next = landing ? cfg.t_end : to_endgame ? cfg.endgame_t : t + step;
    step = t_next - t;

    bool ok = false;
    VectorXc z_new;
    double res_new = 0.0;
    h.evaluate(z, t, ws, hv, scale, &hz, &ht);
    Eigen::PartialPivLU<MatrixXc> lu(hz);
    if (lu.rcond() > 1e-15) {
      const VectorXc velocity = -lu.solve(ht);
      if (velocity.allFinite()) {
        VectorXc predicted = z + step * velocity;
        auto eval = [&](const VectorXc& x, VectorXc& hh, Eigen::VectorXd& sc, MatrixXc* jac) {
          h.evaluate(x, t_next, ws, hh, sc, jac, nullptr);
        };
        const NewtonResult corr =
            landing ? detail::newton_iterate(eval, predicted, cfg.newton_tol,
                                             cfg.endpoint_max_iters,
                                             detail::LinearSolver::least_squares, true)
                    : detail::newton_iterate(eval, predicted, cfg.newton_tol,
                                             cfg.newton_max_iters, detail::LinearSolver::lu, false,
                                             0.5);
        // A correction comparable to the predicted move means the predictor
        // was poor and the corrector may have jumped to another path.
        // Landing on a singular endpoint the Euler prediction is poor, so only
        // the total move is bounded there.
        const double moved = step * detail::inf_norm(velocity);
        const double slack = 1e-9 * (1.0 + detail::inf_norm(z));
        const bool near_path = landing ? detail::inf_norm(corr.z - z) <= 3.0 * moved + 1e3 * slack
                                       : detail::inf_norm(corr.z - predicted) <= 0.5 * moved + slack;
        if (corr.converged && near_path) {
          ok = true;
          z_new = corr.z;
          res_new = corr.residual;
        }
      }
    }

    if (ok) {
      z = std::move(z_new);
      t = t_next;
      ++out.steps_taken;
      if (trace != nullptr) trace->push_back({t, step, res_new});
      if (h.affine_norm(z) > cfg.path_norm_cap) {
        out.endpoint = h.affine(z);
        out.status = PathStatus::diverged;
        out.final_residual = res_new;
        return out;
      }
      if (++successes >= cfg.grow_after) {
        dt = std::min(dt * cfg.step_grow, cfg.max_step);
        successes = 0;
      }
    } else {
      successes = 0;
      dt *= cfg.step_shrink;
      if (dt < (t >= cfg.endgame_t - 1e-14 ? cfg.endgame_min_step : cfg.min_step)) break;
    }
  }

  out.endpoint = h.affine(z);
  const bool far = h.affine_norm(z) > cfg.path_norm_cap;
  if (t >= cfg.t_end && !far) {
    out.status = detail::accept_endpoint(h.compiled_target(), out.endpoint, cfg.newton_tol, out.final_residual)
                     ? PathStatus::converged
                     : PathStatus::stalled;
  } else {
    h.evaluate(z, t, ws, hv, scale, nullptr, nullptr);
    out.final_residual = detail::relative_of(hv, scale);
    out.status = far ? PathStatus::diverged : PathStatus::stalled;
  }
  return out;
}

struct Solution {
  VectorXc point;
  bool is_real = false;
  bool is_regular = false;
  std::size_t cluster_id = 0;
};

/// Converged endpoints grouped into clusters. Cluster c is represented by
/// points[representatives[c]] and holds cluster_sizes[c] endpoints.
struct SolutionSet {
  std::vector<Solution> points;
  std::vector<std::size_t> representatives;
  std::vector<std::size_t> cluster_sizes;

  std::size_t cluster_count() const noexcept { return representatives.size(); }
  const Solution& representative(std::size_t cluster) const { return points[representatives[cluster]]; }
};

/// Smallest and largest singular values of the Jacobian of F at z.
inline std::pair<double, double> jacobian_singular_range(const PolySystem& F, const VectorXc& z) {
  CompiledSystem sys(F);
  EvalWorkspace ws;
  VectorXc v;
  Eigen::VectorXd mag;
  MatrixXc jac;
  sys.evaluate(z, ws.pw, v, mag, &jac);
  Eigen::JacobiSVD<MatrixXc> svd(jac);
  const auto& s = svd.singularValues();
  if (s.size() == 0) return {0.0, 0.0};
  return {s(s.size() - 1), s(0)};
}

inline SolutionSet classify_solutions(std::span<const VectorXc> endpoints, const PolySystem& F,
                                      const ClassifyConfig& cfg = {}) {
  SolutionSet set;
  CompiledSystem sys(F);
  EvalWorkspace ws;
  VectorXc v;
  Eigen::VectorXd mag;
  MatrixXc jac;
  double coeff_ref = 0.0;
  for (std::size_t i = 0; i < sys.size(); ++i) coeff_ref = std::max(coeff_ref, sys.coeff_max(i));

  for (const auto& z : endpoints) {
    Solution s;
    s.point = z;
    const double zn = detail::inf_norm(z);
    s.is_real = (z.size() == 0 ? 0.0 : z.imag().cwiseAbs().maxCoeff()) < cfg.real_tol * (1.0 + zn);
    sys.evaluate(z, ws.pw, v, mag, &jac);
    Eigen::JacobiSVD<MatrixXc> svd(jac);
    const auto& sv = svd.singularValues();
    // σmax alone is no reference for n = 1, where σmin = σmax always
    s.is_regular = sv.size() > 0 && sv(sv.size() - 1) > cfg.sing_tol * std::max(sv(0), coeff_ref);

    const Eigen::Index k = cfg.cluster_coords == 0 ? z.size()
                                                   : std::min<Eigen::Index>(z.size(), static_cast<Eigen::Index>(cfg.cluster_coords));
    const VectorXc head = z.head(k);
    std::optional<std::size_t> found;
    for (std::size_t c = 0; c < set.representatives.size() && !found; ++c) {
      const VectorXc rep = set.points[set.representatives[c]].point.head(k);
      const double scale = std::max({1.0, detail::inf_norm(head), detail::inf_norm(rep)});
      if (detail::inf_norm(head - rep) <= cfg.dedup_tol * scale) found = c;
    }
    if (found) {
      s.cluster_id = *found;
      ++set.cluster_sizes[*found];
    } else {
      s.cluster_id = set.representatives.size();
      set.representatives.push_back(set.points.size());
      set.cluster_sizes.push_back(1);
    }
    set.points.push_back(std::move(s));
  }
  return set;
}

struct SolveOptions {
  TrackerConfig tracker;
  ClassifyConfig classify;
  std::uint64_t seed = 0;
  std::size_t path_budget = 100000;
  unsigned workers = 1;
  bool record_trace = false;
  // Tracks F(s ∘ y) = 0 instead when set; endpoints are mapped back to z = s ∘ y.
  std::optional<Eigen::VectorXd> variable_scale;
  // Extra solves in variables rescaled to the size of the regular solutions
  // found so far; used only while those sizes are far from 1.
  unsigned rescale_passes = 3;
  // Rounds of re-tracking, each with a quarter of the previous max step, for
  // paths that share a regular endpoint.
  unsigned jump_retries = 3;
  // For real systems, add missing conjugates of regular solutions.
  bool complete_conjugates = true;
};

/// F̃_i(y) = F_i(s ∘ y) / max |coefficient of F_i(s ∘ y)|.
inline PolySystem scale_variables(const PolySystem& F, const Eigen::VectorXd& s) {
  PolySystem out;
  out.nvars = F.nvars;
  for (const auto& eq : F.equations) {
    Polynomial p(F.nvars);
    for (const auto& [mono, c] : eq.terms()) {
      double f = 1.0;
      for (std::size_t j = 0; j < F.nvars; ++j) {
        if (mono[j] != 0) f *= std::pow(s(static_cast<Eigen::Index>(j)), static_cast<double>(mono[j]));
      }
      p.add_term(mono, c * f);
    }
    const double cmax = p.max_coefficient();
    out.equations.push_back(cmax > 0.0 ? p * Complex(1.0 / cmax) : p);
  }
  return out;
}

struct SolveResult {
  std::size_t bezout = 0;
  Complex gamma;
  std::vector<PathResult> paths;
  std::vector<std::vector<TraceRow>> traces;
  SolutionSet solutions;  // classified converged endpoints
  std::size_t converged = 0;
  std::size_t diverged = 0;
  std::size_t stalled = 0;
  std::size_t conjugates_added = 0;  // solutions not reached by any path
  std::size_t recovered = 0;         // regular solutions taken from other scaling passes
};

namespace detail {

inline bool has_real_coefficients(const PolySystem& F) {
  for (const auto& eq : F.equations) {
    for (const auto& [m, c] : eq.terms()) {
      if (c.imag() != 0.0) return false;
    }
  }
  return true;
}

inline std::size_t regular_count(const SolutionSet& set) {
  std::size_t k = 0;
  for (std::size_t c = 0; c < set.cluster_count(); ++c) k += set.representative(c).is_regular ? 1 : 0;
  return k;
}

/// Per-variable size of `points`: the largest |z_j| (large coordinates are
/// what make a path arrive late), or with `geometric` the geometric mean of
/// |z_j|. Nothing when there are no points or the sizes are already near 1.
inline std::optional<Eigen::VectorXd> solution_scale(const std::vector<VectorXc>& points, std::size_t n,
                                                     bool geometric = false) {
  if (points.empty()) return std::nullopt;
  Eigen::VectorXd logs = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n),
                                                   geometric ? 0.0 : -std::numeric_limits<double>::infinity());
  for (const auto& z : points) {
    const double floor = 1e-3 * (1.0 + inf_norm(z));
    for (Eigen::Index j = 0; j < logs.size(); ++j) {
      const double v = std::log10(std::max(std::abs(z(j)), floor));
      logs(j) = geometric ? logs(j) + v : std::max(logs(j), v);
    }
  }
  if (geometric) logs /= static_cast<double>(points.size());
  if (logs.cwiseAbs().maxCoeff() < 0.5) return std::nullopt;
  return logs.unaryExpr([](double v) { return std::pow(10.0, v); });
}

/// Adds the regular representatives of `set` not already in `known`.
inline void merge_regular(const SolutionSet& set, double tol, std::vector<VectorXc>& known) {
  for (std::size_t c = 0; c < set.cluster_count(); ++c) {
    const Solution& s = set.representative(c);
    if (!s.is_regular) continue;
    const double scale = 1.0 + inf_norm(s.point);
    const bool seen = std::any_of(known.begin(), known.end(),
                                  [&](const VectorXc& k) { return inf_norm(k - s.point) <= tol * scale; });
    if (!seen) known.push_back(s.point);
  }
}

}  // namespace detail

/// Unit-modulus γ = exp(iφ), φ uniform on [0, 2π) from the "gamma" sub-stream.
inline Complex random_gamma(std::uint64_t seed) {
  Rng rng = make_rng(seed, "gamma");
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  return std::polar(1.0, angle(rng));
}

namespace detail {

inline SolveResult solve_pass(const PolySystem& F, const SolveOptions& opts) {
  StartSystem start = total_degree_start(F, opts.path_budget);
  SolveResult out;
  out.bezout = start.points.size();
  out.gamma = random_gamma(opts.seed);
  const auto& scaling = opts.variable_scale;
  if (scaling && static_cast<std::size_t>(scaling->size()) != F.nvars) {
    throw DimensionError("variable_scale has wrong length");
  }
  const Homotopy h(scaling ? scale_variables(F, *scaling) : F, start.system, out.gamma,
                   random_patch(opts.seed, F.nvars + 1));

  const std::size_t count = start.points.size();
  out.paths.resize(count);
  if (opts.record_trace) out.traces.resize(count);

  // Endpoints are mapped back and judged against F itself.
  const CompiledSystem fc(F);
  auto work = [&](std::size_t i, const TrackerConfig& cfg) {
    std::vector<TraceRow>* trace = nullptr;
    if (opts.record_trace) {
      trace = &out.traces[i];
      trace->clear();
    }
    PathResult p = track_path(h, start.points[i], cfg, trace);
    if (scaling) {
      p.endpoint = p.endpoint.cwiseProduct(scaling->cast<Complex>());
      const double norm = detail::inf_norm(p.endpoint);
      if (!p.endpoint.allFinite() || norm > cfg.path_norm_cap) {
        p.status = PathStatus::diverged;
      } else if (p.status == PathStatus::converged &&
                 !detail::accept_endpoint(fc, p.endpoint, cfg.newton_tol, p.final_residual)) {
        p.status = PathStatus::stalled;
      }
    }
    out.paths[i] = std::move(p);
  };
  auto run = [&](const std::vector<std::size_t>& which, const TrackerConfig& cfg) {
    const unsigned workers =
        std::max(1U, std::min<unsigned>(opts.workers, static_cast<unsigned>(which.size())));
    if (workers <= 1) {
      for (std::size_t i : which) work(i, cfg);
      return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < which.size(); k = next++) work(which[k], cfg);
      });
    }
    for (auto& th : pool) th.join();
  };
  std::vector<std::size_t> all(count);
  for (std::size_t i = 0; i < count; ++i) all[i] = i;
  run(all, opts.tracker);

  // A regular solution is isolated, so two paths ending on it mean one of
  // them jumped; such paths are tracked again with shorter steps.
  std::vector<std::size_t> origin;
  std::vector<VectorXc> endpoints;
  auto classify = [&] {
    endpoints.clear();
    origin.clear();
    for (std::size_t i = 0; i < count; ++i) {
      if (out.paths[i].status != PathStatus::converged) continue;
      endpoints.push_back(out.paths[i].endpoint);
      origin.push_back(i);
    }
    out.solutions = classify_solutions(endpoints, F, opts.classify);
  };
  classify();
  TrackerConfig careful = opts.tracker;
  for (unsigned round = 0; round < opts.jump_retries; ++round) {
    std::vector<std::size_t> suspects;
    for (std::size_t k = 0; k < out.solutions.points.size(); ++k) {
      const Solution& s = out.solutions.points[k];
      if (s.is_regular && out.solutions.cluster_sizes[s.cluster_id] > 1) suspects.push_back(origin[k]);
    }
    if (suspects.empty()) break;
    careful.max_step /= 4.0;
    careful.initial_step = std::min(careful.initial_step, careful.max_step / 2.0);
    careful.min_step = std::min(careful.min_step, careful.initial_step / 10.0);
    careful.endgame_min_step = std::min(careful.endgame_min_step, careful.min_step);
    run(suspects, careful);
    classify();
  }

  // Real systems have conjugation-closed solution sets; a regular solution
  // whose conjugate no path reached is completed directly.
  if (opts.complete_conjugates && detail::has_real_coefficients(F)) {
    std::vector<VectorXc> extra;
    for (std::size_t c = 0; c < out.solutions.cluster_count(); ++c) {
      const Solution& s = out.solutions.representative(c);
      if (!s.is_regular || s.is_real) continue;
      const VectorXc conj = s.point.conjugate();
      const double tol = opts.classify.dedup_tol * (1.0 + detail::inf_norm(conj));
      const auto near = [&](const VectorXc& z) { return detail::inf_norm(z - conj) <= tol; };
      if (std::any_of(endpoints.begin(), endpoints.end(), near) || std::any_of(extra.begin(), extra.end(), near)) {
        continue;
      }
      double residual = 0.0;
      if (detail::accept_endpoint(fc, conj, opts.tracker.newton_tol, residual)) extra.push_back(conj);
    }
    if (!extra.empty()) {
      out.conjugates_added = extra.size();
      endpoints.insert(endpoints.end(), extra.begin(), extra.end());
      out.solutions = classify_solutions(endpoints, F, opts.classify);
    }
  }

  for (const auto& p : out.paths) {
    switch (p.status) {
      case PathStatus::converged: ++out.converged; break;
      case PathStatus::diverged: ++out.diverged; break;
      case PathStatus::stalled: ++out.stalled; break;
    }
  }
  return out;
}

}  // namespace detail

/// Solves a square system by total-degree homotopy. Paths are independent;
/// with several workers they are tracked concurrently and merged in
/// start-point order.
///
/// Solutions of very different sizes (say |λ| ≈ 100 next to |x| ≈ 1) are
/// reached only in the last ~1e−8 of t, where tracking is unreliable. When
/// the regular solutions found are far from unit size, the system is solved
/// again in variables scaled by their geometric-mean size, up to
/// `rescale_passes` times; the pass with the most regular solutions is
/// returned whole, so path accounting refers to one set of paths.
inline SolveResult solve(const PolySystem& F, const SolveOptions& opts = {}) {
  SolveResult best = detail::solve_pass(F, opts);
  if (opts.variable_scale) return best;
  std::size_t best_regular = detail::regular_count(best.solutions);
  std::vector<VectorXc> known;
  detail::merge_regular(best.solutions, opts.classify.dedup_tol, known);
  for (unsigned pass = 0; pass < opts.rescale_passes; ++pass) {
    auto scale = detail::solution_scale(known, F.nvars);
    if (!scale && known.empty() && pass == 0) {
      // Nothing regular yet: the sizes paths reached near t = 1 are the only hint.
      std::vector<VectorXc> ends;
      for (const auto& p : best.paths) {
        if (p.status != PathStatus::diverged && p.endpoint.allFinite()) ends.push_back(p.endpoint);
      }
      scale = detail::solution_scale(ends, F.nvars, true);
    }
    if (!scale) break;
    SolveOptions again = opts;
    again.variable_scale = std::move(scale);
    SolveResult r = detail::solve_pass(F, again);
    const std::size_t before = known.size();
    detail::merge_regular(r.solutions, opts.classify.dedup_tol, known);
    const std::size_t regular = detail::regular_count(r.solutions);
    if (regular >= best_regular) {
      best = std::move(r);
      best_regular = regular;
    }
    if (known.size() == before) break;
  }
  // Passes see different parts of the solution set; keep their union.
  std::vector<VectorXc> endpoints;
  for (const auto& sol : best.solutions.points) endpoints.push_back(sol.point);
  std::vector<VectorXc> mine;
  detail::merge_regular(best.solutions, opts.classify.dedup_tol, mine);
  for (const auto& k : known) {
    const double scale = 1.0 + detail::inf_norm(k);
    const bool seen = std::any_of(mine.begin(), mine.end(), [&](const VectorXc& m) {
      return detail::inf_norm(m - k) <= opts.classify.dedup_tol * scale;
    });
    if (!seen) endpoints.push_back(k);
  }
  if (endpoints.size() > best.solutions.points.size()) {
    best.recovered = endpoints.size() - best.solutions.points.size();
    best.solutions = classify_solutions(endpoints, F, opts.classify);
  }
  return best;
}

}  // namespace algver
