#pragma once

// ℓ2 robustness margins of polynomial networks.
//
// The margin at ξ with predicted class c is the smallest distance from ξ to
// any pairwise boundary {f_c = f_c'}, found as the nearest real critical point
// of the relaxed system for each c' ≠ c.

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "algver/critical_system.hpp"
#include "algver/error.hpp"
#include "algver/network.hpp"

namespace algver {

enum class Verdict { verified, falsified };

inline const char* to_string(Verdict v) { return v == Verdict::verified ? "verified" : "falsified"; }

struct PairMargin {
  std::size_t c_prime = 0;
  double margin = std::numeric_limits<double>::infinity();  // +∞ when no real critical point
  std::optional<Eigen::VectorXd> witness;
  std::size_t real_points = 0;
  std::size_t paths = 0;
  std::size_t converged = 0;
  std::size_t diverged = 0;
  std::size_t stalled = 0;
  std::size_t singular_discarded = 0;
};

struct VerificationResult {
  std::size_t predicted_class = 0;
  double margin = std::numeric_limits<double>::infinity();
  std::optional<Eigen::VectorXd> witness;
  std::size_t witness_class = 0;  // c' whose boundary the witness lies on
  std::vector<PairMargin> per_pair;
  std::optional<double> epsilon;
  std::optional<Verdict> verdict;

  std::size_t total_paths() const {
    std::size_t s = 0;
    for (const auto& p : per_pair) s += p.paths;
    return s;
  }
  std::size_t total_diverged() const {
    std::size_t s = 0;
    for (const auto& p : per_pair) s += p.diverged;
    return s;
  }
  std::size_t total_stalled() const {
    std::size_t s = 0;
    for (const auto& p : per_pair) s += p.stalled;
    return s;
  }
  std::size_t total_singular_discarded() const {
    std::size_t s = 0;
    for (const auto& p : per_pair) s += p.singular_discarded;
    return s;
  }
};

/// Index of the unique largest logit at ξ; throws when the top two tie.
inline std::size_t predicted_class(const NetworkParams& params, const Eigen::VectorXd& xi) {
  const Eigen::VectorXd f = forward(params, xi);
  Eigen::Index best = 0;
  f.maxCoeff(&best);
  const double scale = std::max(1.0, f.cwiseAbs().maxCoeff());
  for (Eigen::Index j = 0; j < f.size(); ++j) {
    if (j != best && f(best) - f(j) <= 1e-12 * scale) {
      throw NotCertifiableError("not certifiable at tie: classes " + std::to_string(best) + " and " +
                                std::to_string(j) + " share the top logit");
    }
  }
  return static_cast<std::size_t>(best);
}

namespace detail {

inline PairMargin pair_margin(const Polynomial& B, const Eigen::VectorXd& xi, std::size_t c_prime,
                              const CriticalOptions& opts) {
  PairMargin pm;
  pm.c_prime = c_prime;
  if (B.is_zero()) throw NotCertifiableError("classes tie identically");
  if (B.degree() == 0) return pm;  // constant nonzero gap: no boundary at all
  const CriticalSystem cs = build_relaxed(B, xi);
  const CriticalSolve cr = solve_critical(cs, opts);
  pm.paths = cr.solve.paths.size();
  pm.converged = cr.solve.converged;
  pm.diverged = cr.solve.diverged;
  pm.stalled = cr.solve.stalled;
  pm.singular_discarded = cr.singular_discarded;
  pm.real_points = cr.points.size();
  if (pm.converged == 0) {
    throw SolveError("no homotopy path converged for class pair (" + std::to_string(c_prime) +
                     "): " + std::to_string(pm.diverged) + " diverged, " +
                     std::to_string(pm.stalled) + " stalled of " + std::to_string(pm.paths));
  }
  if (!cr.points.empty()) {
    pm.margin = cr.points.front().distance;
    pm.witness = cr.points.front().x;
  }
  return pm;
}

}  // namespace detail

/// Margin at ξ: minimum over c' ≠ c of the nearest real critical distance.
inline VerificationResult compute_margin(const NetworkParams& params, const Eigen::VectorXd& xi,
                                         const CriticalOptions& opts = {}) {
  VerificationResult out;
  out.predicted_class = predicted_class(params, xi);
  const auto logits = logit_polynomials(params);
  const std::size_t c = out.predicted_class;
  for (std::size_t cp = 0; cp < logits.size(); ++cp) {
    if (cp == c) continue;
    PairMargin pm = detail::pair_margin(logits[c] - logits[cp], xi, cp, opts);
    if (pm.margin < out.margin) {
      out.margin = pm.margin;
      out.witness = pm.witness;
      out.witness_class = cp;
    }
    out.per_pair.push_back(std::move(pm));
  }
  return out;
}

/// Verified iff margin ≥ ε.
inline VerificationResult certify(const NetworkParams& params, const Eigen::VectorXd& xi, double epsilon,
                                  const CriticalOptions& opts = {}) {
  if (!(epsilon >= 0.0)) throw Error("epsilon must be nonnegative");
  VerificationResult r = compute_margin(params, xi, opts);
  r.epsilon = epsilon;
  r.verdict = r.margin >= epsilon ? Verdict::verified : Verdict::falsified;
  return r;
}

/// Margin from the full KKT systems (all classes, feasibility filtered).
inline double margin_full_kkt(const NetworkParams& params, const Eigen::VectorXd& xi,
                              const CriticalOptions& opts = {}) {
  const std::size_t c = predicted_class(params, xi);
  const auto logits = logit_polynomials(params);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t cp = 0; cp < logits.size(); ++cp) {
    if (cp == c) continue;
    const Polynomial B = logits[c] - logits[cp];
    if (B.is_zero()) throw NotCertifiableError("classes tie identically");
    if (B.degree() == 0) continue;
    const CriticalSolve cr = solve_critical(build_full(logits, xi, c, cp), opts);
    if (cr.solve.converged == 0) throw SolveError("no homotopy path converged for the full system");
    if (!cr.points.empty()) best = std::min(best, cr.points.front().distance);
  }
  return best;
}

namespace detail {

inline nlohmann::ordered_json margin_json(double m) {
  if (std::isinf(m)) return "inf";
  return m;
}

inline nlohmann::ordered_json vector_json(const Eigen::VectorXd& v) {
  nlohmann::ordered_json a = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

}  // namespace detail

/// { margin, verdict, witness, per_pair: {c': margin}, diagnostics: {...} }.
/// Infinite margins are written as the string "inf".
inline nlohmann::ordered_json to_json(const VerificationResult& r) {
  nlohmann::ordered_json j;
  j["predicted_class"] = r.predicted_class;
  j["margin"] = detail::margin_json(r.margin);
  if (r.epsilon) j["epsilon"] = *r.epsilon;
  j["verdict"] = r.verdict ? nlohmann::ordered_json(to_string(*r.verdict)) : nlohmann::ordered_json(nullptr);
  j["witness"] = r.witness ? detail::vector_json(*r.witness) : nlohmann::ordered_json(nullptr);
  nlohmann::ordered_json pairs = nlohmann::ordered_json::object();
  nlohmann::ordered_json no_real = nlohmann::ordered_json::array();
  for (const auto& p : r.per_pair) {
    pairs[std::to_string(p.c_prime)] = detail::margin_json(p.margin);
    if (p.real_points == 0) no_real.push_back(p.c_prime);
  }
  j["per_pair"] = std::move(pairs);
  j["diagnostics"] = {{"paths", r.total_paths()},
                      {"diverged", r.total_diverged()},
                      {"stalled", r.total_stalled()},
                      {"singular_discarded", r.total_singular_discarded()},
                      {"pairs_without_real_points", std::move(no_real)}};
  return j;
}

}  // namespace algver
