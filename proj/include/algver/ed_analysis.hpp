#pragma once

// Euclidean distance degrees of decision boundaries: numeric counts from the
// relaxed critical system at random data points, closed forms for several
// architectures, and real-critical-point profiles used to probe the ED
// discriminant.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "algver/critical_system.hpp"
#include "algver/error.hpp"
#include "algver/homotopy.hpp"
#include "algver/polynomial.hpp"
#include "algver/random.hpp"

namespace algver {

struct EDTrial {
  Eigen::VectorXd u;
  std::size_t numeric_count = 0;  // distinct finite critical points off the singular locus
  std::size_t real_count = 0;
  std::size_t paths = 0;
  std::size_t converged = 0;
  std::size_t diverged = 0;
  std::size_t stalled = 0;
};

struct EDReport {
  std::size_t numeric_count = 0;  // modal count over trials
  std::size_t real_count = 0;     // from the first trial attaining the modal count
  std::size_t bezout = 0;
  std::vector<EDTrial> trials;
  bool trials_agree = true;
  std::optional<std::uint64_t> formula_value;
  std::optional<bool> agreement;
};

namespace detail {

/// Clusters of a relaxed solve that are critical points: regular, or absorbing
/// several endpoints, and with ∇B not vanishing (relative to its term sizes).
inline std::vector<std::size_t> critical_clusters(const Polynomial& B, const SolutionSet& set,
                                                  double singular_tol = 1e-8) {
  const std::size_t n = B.nvars();
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < set.cluster_count(); ++c) {
    const Solution& s = set.representative(c);
    if (!s.is_regular && set.cluster_sizes[c] < 2) continue;
    const VectorXc x = s.point.head(static_cast<Eigen::Index>(n));
    const std::span<const Complex> xs(x.data(), n);
    double gnorm = 0.0;
    double gscale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const Polynomial d = B.derivative(i);
      gnorm = std::max(gnorm, std::abs(d.evaluate(xs)));
      double mag = 0.0;
      for (const auto& [m, coef] : d.terms()) {
        double term = std::abs(coef);
        for (std::size_t v = 0; v < n; ++v) {
          if (m[v] != 0) term *= std::pow(std::abs(xs[v]), static_cast<double>(m[v]));
        }
        mag += term;
      }
      gscale = std::max({gscale, d.max_coefficient(), mag});
    }
    if (gnorm <= singular_tol * std::max(gscale, 1e-300)) continue;
    out.push_back(c);
  }
  return out;
}

}  // namespace detail

/// Counts the critical points of one relaxed solve.
inline EDTrial count_critical_points(const Polynomial& B, const Eigen::VectorXd& u,
                                     const SolveOptions& opts, double singular_tol = 1e-8) {
  const CriticalSystem cs = build_relaxed(B, u);
  SolveOptions so = opts;
  so.classify.cluster_coords = B.nvars();
  const SolveResult r = solve(cs.system, so);
  EDTrial t;
  t.u = u;
  t.paths = r.paths.size();
  t.converged = r.converged;
  t.diverged = r.diverged;
  t.stalled = r.stalled;
  for (std::size_t c : detail::critical_clusters(B, r.solutions, singular_tol)) {
    ++t.numeric_count;
    if (r.solutions.representative(c).is_real) ++t.real_count;
  }
  return t;
}

/// Most frequent value; ties go to the larger value.
inline std::size_t modal_value(const std::vector<std::size_t>& values) {
  std::map<std::size_t, std::size_t> freq;
  for (auto v : values) ++freq[v];
  std::size_t best = 0;
  std::size_t best_freq = 0;
  for (const auto& [v, f] : freq) {
    if (f >= best_freq) {
      best = v;
      best_freq = f;
    }
  }
  return best;
}

/// Numeric ED degree of {B = 0}: modal critical-point count over `trials`
/// standard-Gaussian data points.
inline EDReport ed_degree_numeric(const Polynomial& B, std::size_t trials = 5, std::uint64_t seed = 0,
                                  const SolveOptions& base = {}) {
  if (B.is_zero()) throw DimensionError("boundary polynomial is zero");
  if (trials == 0) throw Error("need at least one trial");
  const std::size_t n = B.nvars();
  EDReport report;
  std::vector<std::size_t> counts;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng = make_rng(seed, "ed-data", t);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd u(static_cast<Eigen::Index>(n));
    for (auto& v : u) v = normal(rng);
    SolveOptions so = base;
    so.seed = substream_seed(seed, "ed-gamma", t);
    EDTrial trial = count_critical_points(B, u, so);
    report.bezout = trial.paths;
    counts.push_back(trial.numeric_count);
    report.trials.push_back(std::move(trial));
  }
  report.numeric_count = modal_value(counts);
  report.trials_agree = std::all_of(counts.begin(), counts.end(), [&](std::size_t c) { return c == counts[0]; });
  for (const auto& t : report.trials) {
    if (t.numeric_count == report.numeric_count) {
      report.real_count = t.real_count;
      break;
    }
  }
  return report;
}

namespace detail {

inline std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > UINT64_MAX / a) throw Error("ED degree formula overflows 64 bits");
  return a * b;
}

inline std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
  if (b > UINT64_MAX - a) throw Error("ED degree formula overflows 64 bits");
  return a + b;
}

inline std::uint64_t checked_pow(std::uint64_t base, std::uint64_t e) {
  std::uint64_t r = 1;
  for (std::uint64_t i = 0; i < e; ++i) r = checked_mul(r, base);
  return r;
}

/// D · Σ_{i<m} (D − 1)^i
inline std::uint64_t degree_sum(std::uint64_t D, std::uint64_t m) {
  std::uint64_t sum = 0;
  std::uint64_t p = 1;
  for (std::uint64_t i = 0; i < m; ++i) {
    sum = checked_add(sum, p);
    if (i + 1 < m) p = checked_mul(p, D - 1);
  }
  return checked_mul(D, sum);
}

inline void require_positive(std::uint64_t v, const char* what) {
  if (v == 0) throw DimensionError(std::string(what) + " must be positive");
}

}  // namespace detail

/// One hidden layer of width h, n inputs, activation degree d:
/// d · Σ_{i<m} (d − 1)^i with m = min(n, h).
inline std::uint64_t ed_degree_shallow(std::uint64_t n, std::uint64_t h, std::uint64_t d) {
  detail::require_positive(n, "input dimension");
  detail::require_positive(h, "hidden width");
  detail::require_positive(d, "activation degree");
  return detail::degree_sum(d, std::min(n, h));
}

/// First hidden layer of width ≥ n followed by s − 1 layers of width 1:
/// d^s · Σ_{i<n} (d − 1)^i.
inline std::uint64_t ed_degree_bottleneck(std::uint64_t n, std::uint64_t s, std::uint64_t d) {
  detail::require_positive(n, "input dimension");
  detail::require_positive(s, "hidden layer count");
  detail::require_positive(d, "activation degree");
  std::uint64_t sum = 0;
  std::uint64_t p = 1;
  for (std::uint64_t i = 0; i < n; ++i) {
    sum = detail::checked_add(sum, p);
    if (i + 1 < n) p = detail::checked_mul(p, d - 1);
  }
  return detail::checked_mul(detail::checked_pow(d, s), sum);
}

/// Generic boundary of degree D = d^s in n variables: D · Σ_{i<n} (D − 1)^i.
inline std::uint64_t ed_degree_deep_generic(std::uint64_t n, std::uint64_t s, std::uint64_t d) {
  detail::require_positive(n, "input dimension");
  detail::require_positive(s, "hidden layer count");
  detail::require_positive(d, "activation degree");
  return detail::degree_sum(detail::checked_pow(d, s), n);
}

struct CriticalProfile {
  std::size_t distinct_real = 0;
  std::size_t max_cluster = 0;
  std::vector<Eigen::VectorXd> real_points;  // one per real cluster
  std::vector<std::size_t> real_cluster_sizes;
};

/// Real critical points at a fixed u, clustered on x. Clusters count once
/// whatever their size; the largest cluster size is a multiplicity proxy.
///
/// The critical points of a generic complex data point are tracked to u, so
/// the endpoints are the limits of the generic critical points. Solving at u
/// directly breaks down on the ED discriminant: at the node of a line pair the
/// relaxed system has the whole line x = node, λ free, and the endpoint count
/// there says nothing about multiplicity.
inline CriticalProfile real_critical_profile(const Polynomial& B, const Eigen::VectorXd& u,
                                             const SolveOptions& opts = {}) {
  const std::size_t n = B.nvars();
  const CriticalSystem target = build_relaxed(B, u);

  Rng rng = make_rng(opts.seed, "profile-start");
  std::normal_distribution<double> nd;
  Eigen::VectorXd re(static_cast<Eigen::Index>(n)), im(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    re(static_cast<Eigen::Index>(i)) = u(static_cast<Eigen::Index>(i)) + nd(rng);
    im(static_cast<Eigen::Index>(i)) = nd(rng);
  }
  CriticalSystem start = build_relaxed(B, re);
  for (std::size_t i = 0; i < n; ++i) {
    start.system.equations[i + 1] -= Polynomial::constant(n + 1, Complex(0.0, im(static_cast<Eigen::Index>(i))));
  }

  SolveOptions so = opts;
  so.classify.cluster_coords = n;
  const SolveResult generic = solve(start.system, so);
  std::vector<VectorXc> starts;
  for (std::size_t c : detail::critical_clusters(B, generic.solutions)) {
    starts.push_back(generic.solutions.representative(c).point);
  }

  // Linear in u, so this is a parameter homotopy along a complex path.
  const Homotopy h(target.system, start.system, random_gamma(opts.seed ^ 0x9e3779b97f4a7c15ULL),
                   random_patch(opts.seed + 1, n + 2));
  std::vector<VectorXc> ends;
  for (const auto& z : starts) {
    const PathResult pr = track_path(h, z, so.tracker);
    if (pr.status == PathStatus::converged) ends.push_back(pr.endpoint);
  }
  const SolutionSet set = classify_solutions(ends, target.system, so.classify);

  CriticalProfile p;
  for (std::size_t c = 0; c < set.cluster_count(); ++c) {
    p.max_cluster = std::max(p.max_cluster, set.cluster_sizes[c]);
    // Average the cluster so a collided pair reports its common point; λ can
    // differ between the merged branches, so reality is judged on x alone.
    VectorXc mean = VectorXc::Zero(static_cast<Eigen::Index>(n));
    std::size_t members = 0;
    for (const auto& pt : set.points) {
      if (pt.cluster_id != c) continue;
      mean += pt.point.head(static_cast<Eigen::Index>(n));
      ++members;
    }
    mean /= static_cast<double>(members);
    if (mean.imag().cwiseAbs().maxCoeff() >= so.classify.real_tol * (1.0 + detail::inf_norm(mean))) continue;
    ++p.distinct_real;
    p.real_points.push_back(mean.real());
    p.real_cluster_sizes.push_back(set.cluster_sizes[c]);
  }
  return p;
}

/// The degree-6 ED discriminant of the boundary
/// −8x1² − 2x1x2 + 3x2² − 6x1 − 2x2 (the first 2-2-2 worked example).
inline double discriminant_fixture_eval(double u1, double u2) {
  const double a = u1;
  const double b = u2;
  const double a2 = a * a, a3 = a2 * a, a4 = a3 * a, a5 = a4 * a, a6 = a5 * a;
  const double b2 = b * b, b3 = b2 * b, b4 = b3 * b, b5 = b4 * b, b6 = b5 * b;
  return 27 * a6 + 54 * a5 * b - 180 * a4 * b2 - 280 * a3 * b3 + 480 * a2 * b4 + 384 * a * b5 -
         512 * b6 + 54 * a5 + 180 * a4 * b - 120 * a3 * b2 - 720 * a2 * b3 + 768 * b5 - 126 * a4 +
         582 * a3 * b - 2409 * a2 * b2 - 402 * a * b3 - 1371 * b4 - 334 * a3 + 1566 * a2 * b -
         1878 * a * b2 + 808 * b3 - 132 * a2 + 1152 * a * b - 1218 * b2 - 12 * a + 516 * b - 152;
}

/// The same sextic as a Polynomial in (u1, u2).
inline Polynomial discriminant_fixture() {
  Polynomial D(2);
  const std::initializer_list<std::tuple<double, unsigned, unsigned>> terms = {
      {27, 6, 0},    {54, 5, 1},    {-180, 4, 2}, {-280, 3, 3}, {480, 2, 4},   {384, 1, 5},
      {-512, 0, 6},  {54, 5, 0},    {180, 4, 1},  {-120, 3, 2}, {-720, 2, 3},  {768, 0, 5},
      {-126, 4, 0},  {582, 3, 1},   {-2409, 2, 2}, {-402, 1, 3}, {-1371, 0, 4}, {-334, 3, 0},
      {1566, 2, 1},  {-1878, 1, 2}, {808, 0, 3},  {-132, 2, 0}, {1152, 1, 1},  {-1218, 0, 2},
      {-12, 1, 0},   {516, 0, 1},   {-152, 0, 0}};
  for (const auto& [c, i, j] : terms) D.add_term(Monomial{i, j}, c);
  return D;
}

struct ProbeRow {
  double u1 = 0.0;
  double u2 = 0.0;
  int sign = 0;  // sign of the supplied discriminant, 0 when none
  std::size_t real_count = 0;
};

/// Real critical-point counts on a steps × steps grid over [lo, hi]² for a
/// boundary in two variables, with the sign of `disc` when given.
inline std::vector<ProbeRow> discriminant_probe(const Polynomial& B, double lo, double hi, std::size_t steps,
                                                const std::function<double(double, double)>& disc = {},
                                                const SolveOptions& opts = {}) {
  if (B.nvars() != 2) throw DimensionError("discriminant probe needs a boundary in two variables");
  if (steps < 1 || !(hi > lo)) throw Error("probe grid needs steps >= 1 and hi > lo");
  std::vector<ProbeRow> rows;
  for (std::size_t i = 0; i < steps; ++i) {
    for (std::size_t j = 0; j < steps; ++j) {
      const double denom = steps > 1 ? static_cast<double>(steps - 1) : 1.0;
      ProbeRow row;
      row.u1 = lo + (hi - lo) * static_cast<double>(i) / denom;
      row.u2 = lo + (hi - lo) * static_cast<double>(j) / denom;
      if (disc) {
        const double v = disc(row.u1, row.u2);
        row.sign = (v > 0) - (v < 0);
      }
      row.real_count = real_critical_profile(B, Eigen::Vector2d(row.u1, row.u2), opts).distinct_real;
      rows.push_back(row);
    }
  }
  return rows;
}

inline nlohmann::ordered_json to_json(const EDReport& r) {
  nlohmann::ordered_json j;
  j["numeric_count"] = r.numeric_count;
  j["real_count"] = r.real_count;
  j["bezout"] = r.bezout;
  j["trials_agree"] = r.trials_agree;
  j["formula_value"] = r.formula_value ? nlohmann::ordered_json(*r.formula_value) : nlohmann::ordered_json(nullptr);
  j["agreement"] = r.agreement ? nlohmann::ordered_json(*r.agreement) : nlohmann::ordered_json(nullptr);
  nlohmann::ordered_json trials = nlohmann::ordered_json::array();
  for (const auto& t : r.trials) {
    nlohmann::ordered_json tj;
    tj["u"] = std::vector<double>(t.u.data(), t.u.data() + t.u.size());
    tj["numeric_count"] = t.numeric_count;
    tj["real_count"] = t.real_count;
    tj["paths"] = t.paths;
    tj["converged"] = t.converged;
    tj["diverged"] = t.diverged;
    tj["stalled"] = t.stalled;
    trials.push_back(std::move(tj));
  }
  j["trials"] = std::move(trials);
  return j;
}

}  // namespace algver
