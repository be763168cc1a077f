#pragma once

// NNGP kernel of shallow polynomial networks, the univariate Kac-Rice
// closed forms derived from it, and a finite-width Monte-Carlo check.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <thread>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "polynomial.hpp"
#include "random.hpp"

namespace algver {

using Int128 = unsigned __int128;

namespace detail {

inline Int128 factorial128(unsigned k) {
  Int128 f = 1;
  for (unsigned i = 2; i <= k; ++i) f *= i;
  return f;
}

}  // namespace detail

/// (2k-1)!! with the convention (-1)!! = 1. Valid for k <= 16.
inline Int128 double_factorial_odd(int k) {
  if (k > 16) throw DimensionError("double factorial overflow guard: k <= 16");
  Int128 f = 1;
  for (int i = 1; i <= 2 * k - 1; i += 2) f *= static_cast<unsigned>(i);
  return f;
}

/// Exact c(s,d) = (d!)^2 / (4^s (s!)^2 (d-2s)!). Always an integer for
/// d <= 20, which is also the overflow guard.
inline Int128 kernel_coeff_exact(unsigned s, unsigned d) {
  if (d == 0 || d > 20) throw DimensionError("kernel_coeff needs 1 <= d <= 20");
  if (2 * s > d) throw DimensionError("kernel_coeff needs 2s <= d");
  const Int128 df = detail::factorial128(d);
  const Int128 sf = detail::factorial128(s);
  const Int128 den = (Int128{1} << (2 * s)) * sf * sf * detail::factorial128(d - 2 * s);
  const Int128 num = df * df;
  if (num % den != 0) throw Error("kernel_coeff: non-integral coefficient");
  return num / den;
}

inline double kernel_coeff(unsigned s, unsigned d) {
  return static_cast<double>(kernel_coeff_exact(s, d));
}

struct NNGPKernel {
  std::size_t n = 1;
  unsigned d = 1;

  NNGPKernel() = default;
  NNGPKernel(std::size_t n_, unsigned d_) : n(n_), d(d_) {
    if (n == 0) throw DimensionError("NNGPKernel needs n >= 1");
    if (d == 0 || d > 20) throw DimensionError("NNGPKernel needs 1 <= d <= 20");
  }
};

/// Covariance of f(x), f(x') for a single unit a (w.x + b)^d with
/// a, b ~ N(0,1) and w ~ N(0, I/n).
inline double kernel_eval(const NNGPKernel& k, std::span<const double> x,
                          std::span<const double> xp) {
  if (x.size() != k.n || xp.size() != k.n) throw DimensionError("kernel_eval: dimension mismatch");
  double xx = 0, pp = 0, xp_ = 0;
  for (std::size_t i = 0; i < k.n; ++i) {
    xx += x[i] * x[i];
    pp += xp[i] * xp[i];
    xp_ += x[i] * xp[i];
  }
  const double n = static_cast<double>(k.n);
  const double a = xx / n + 1, b = pp / n + 1, c = xp_ / n + 1;
  double sum = 0;
  for (unsigned s = 0; 2 * s <= k.d; ++s) {
    sum += kernel_coeff(s, k.d) * std::pow(a * b, s) * std::pow(c, k.d - 2 * s);
  }
  return sum;
}

struct KernelDerivatives {
  double d_x = 0;    // d/dx' K(x,x') at x' = x
  double d_xx = 0;   // d^2/dx dx' K(x,x') at x' = x
};

inline KernelDerivatives kernel_derivatives_n1(unsigned d, double x) {
  if (d == 0 || d > 16) throw DimensionError("kernel_derivatives_n1 needs 1 <= d <= 16");
  const double q = x * x + 1;
  const double dd = d;
  const double f1 = static_cast<double>(double_factorial_odd(static_cast<int>(d)));
  const double f3 = static_cast<double>(double_factorial_odd(static_cast<int>(d) - 1));
  KernelDerivatives out;
  out.d_x = dd * f1 * x * std::pow(q, d - 1);
  out.d_xx = dd * dd * f3 * std::pow(q, static_cast<double>(d) - 1);
  if (d >= 2) out.d_xx += 2 * dd * dd * (dd - 1) * f3 * x * x * std::pow(q, d - 2);
  return out;
}

/// Expected density of real zeros of the limiting Gaussian process (n = 1).
inline double kac_rice_density(unsigned d, double x) {
  if (d == 0) throw DimensionError("kac_rice_density needs d >= 1");
  return d / std::sqrt(2.0 * d - 1) / (std::numbers::pi * (x * x + 1));
}

inline double expected_real_ed(unsigned d) {
  if (d == 0) throw DimensionError("expected_real_ed needs d >= 1");
  return d / std::sqrt(2.0 * d - 1);
}

namespace detail {

using Coeffs = std::vector<long double>;  // ascending powers

inline void trim(Coeffs& p, long double tol) {
  while (!p.empty() && std::fabs(p.back()) <= tol) p.pop_back();
}

inline void normalize(Coeffs& p) {
  long double m = 0;
  for (auto c : p) m = std::max(m, std::fabs(c));
  if (m > 0) {
    for (auto& c : p) c /= m;
  }
}

inline Coeffs derivative(const Coeffs& p) {
  Coeffs q;
  for (std::size_t k = 1; k < p.size(); ++k) q.push_back(p[k] * static_cast<long double>(k));
  return q;
}

// Quotient and remainder of a / b, b with nonzero leading coefficient.
inline std::pair<Coeffs, Coeffs> divide(Coeffs a, const Coeffs& b) {
  if (a.size() < b.size()) return {Coeffs{}, a};
  Coeffs q(a.size() - b.size() + 1, 0);
  for (std::size_t k = a.size(); k-- >= b.size();) {
    const long double c = a[k] / b.back();
    q[k - (b.size() - 1)] = c;
    for (std::size_t j = 0; j < b.size(); ++j) a[k - (b.size() - 1) + j] -= c * b[j];
    if (k == b.size() - 1) break;
  }
  a.resize(b.size() - 1);
  return {q, a};
}

// Sturm chain p, p', -rem, ... with every member scaled to unit max-norm.
// Remainders below tol are treated as zero, so the last member is the gcd.
inline std::vector<Coeffs> sturm_chain(Coeffs p, long double tol) {
  std::vector<Coeffs> chain;
  normalize(p);
  chain.push_back(p);
  Coeffs dp = derivative(p);
  normalize(dp);
  trim(dp, tol);
  if (dp.empty()) return chain;
  chain.push_back(dp);
  while (chain.back().size() > 1) {
    auto [q, r] = divide(chain[chain.size() - 2], chain.back());
    (void)q;
    for (auto& c : r) c = -c;
    trim(r, tol);
    if (r.empty()) break;
    normalize(r);
    trim(r, tol);
    chain.push_back(r);
  }
  return chain;
}

inline int sign_changes_at_infinity(const std::vector<Coeffs>& chain, bool positive) {
  int changes = 0, last = 0;
  for (const auto& c : chain) {
    const int deg = static_cast<int>(c.size()) - 1;
    int s = c.back() > 0 ? 1 : -1;
    if (!positive && deg % 2 == 1) s = -s;
    if (last != 0 && s != last) ++changes;
    last = s;
  }
  return changes;
}

}  // namespace detail

/// Distinct real roots of a real univariate polynomial (ascending coefficients).
/// A gcd with the derivative is divided out before the Sturm count.
inline unsigned count_real_roots(std::span<const double> coeffs) {
  detail::Coeffs p(coeffs.begin(), coeffs.end());
  long double scale = 0;
  for (auto c : p) {
    if (!std::isfinite(static_cast<double>(c))) throw Error("count_real_roots: non-finite coefficient");
    scale = std::max(scale, std::fabs(c));
  }
  if (scale == 0) throw DimensionError("count_real_roots needs a nonzero polynomial");
  detail::trim(p, 0);
  if (std::fabs(p.back()) < 1e-13L * scale || !std::isnormal(static_cast<double>(p.back()))) {
    throw Error("count_real_roots: leading coefficient underflow");
  }
  if (p.size() == 1) return 0;
  const long double tol = 1e-10L;
  auto chain = detail::sturm_chain(p, tol);
  if (chain.back().size() > 1) {
    // repeated roots: reduce to the square-free part and rebuild
    detail::normalize(p);
    auto [q, r] = detail::divide(p, chain.back());
    (void)r;
    chain = detail::sturm_chain(q, tol);
  }
  const int v = detail::sign_changes_at_infinity(chain, false) -
                detail::sign_changes_at_infinity(chain, true);
  return static_cast<unsigned>(std::max(v, 0));
}

inline unsigned count_real_roots(const Polynomial& p) {
  if (p.nvars() != 1) throw DimensionError("count_real_roots needs a univariate polynomial");
  if (!p.is_real()) throw Error("count_real_roots needs real coefficients");
  std::vector<double> c;
  for (const auto& [m, v] : p.terms()) {
    const unsigned k = m.degree();
    if (c.size() <= k) c.resize(k + 1, 0.0);
    c[k] = v.real();
  }
  if (c.empty()) throw DimensionError("count_real_roots needs a nonzero polynomial");
  return count_real_roots(std::span<const double>(c));
}

struct KacRiceEstimate {
  unsigned d = 1;
  std::size_t width = 0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  std::vector<unsigned> counts;
  double empirical_mean = 0;
  double theoretical = 0;
};

/// Coefficients of m^{-1/2} sum_i a_i (w_i x + b_i)^d for one sample.
inline std::vector<double> sample_network_coeffs(unsigned d, std::size_t width, std::uint64_t seed,
                                                 std::uint64_t sample) {
  Rng rng = make_rng(seed, "kac-rice", sample);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> binom(d + 1, 1.0);
  for (unsigned k = 1; k <= d; ++k) binom[k] = binom[k - 1] * (d - k + 1) / k;
  std::vector<double> c(d + 1, 0.0), wp(d + 1), bp(d + 1);
  for (std::size_t i = 0; i < width; ++i) {
    const double a = normal(rng), w = normal(rng), b = normal(rng);
    wp[0] = bp[0] = 1;
    for (unsigned k = 1; k <= d; ++k) {
      wp[k] = wp[k - 1] * w;
      bp[k] = bp[k - 1] * b;
    }
    for (unsigned k = 0; k <= d; ++k) c[k] += a * binom[k] * wp[k] * bp[d - k];
  }
  const double s = 1.0 / std::sqrt(static_cast<double>(width));
  for (auto& v : c) v *= s;
  return c;
}

/// Samples are independent; each draws from its own stream of `seed`, so the
/// result does not depend on `workers`.
inline KacRiceEstimate mc_simulate(unsigned d, std::size_t width, std::size_t samples,
                                   std::uint64_t seed, unsigned workers = 0) {
  if (d == 0) throw DimensionError("mc_simulate needs d >= 1");
  if (width == 0 || samples == 0) throw DimensionError("mc_simulate needs width, samples >= 1");
  KacRiceEstimate est;
  est.d = d;
  est.width = width;
  est.samples = samples;
  est.seed = seed;
  est.theoretical = expected_real_ed(d);
  est.counts.assign(samples, 0);
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, samples));
  std::atomic<std::size_t> next{0};
  auto body = [&] {
    for (std::size_t i = next++; i < samples; i = next++) {
      const auto c = sample_network_coeffs(d, width, seed, i);
      est.counts[i] = count_real_roots(std::span<const double>(c));
    }
  };
  if (workers <= 1) {
    body();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body);
  }
  double sum = 0;
  for (auto c : est.counts) sum += c;
  est.empirical_mean = sum / static_cast<double>(samples);
  return est;
}

inline nlohmann::json to_json(const KacRiceEstimate& e) {
  return {{"d", e.d},
          {"width", e.width},
          {"samples", e.samples},
          {"seed", e.seed},
          {"empirical_mean", e.empirical_mean},
          {"theoretical", e.theoretical},
          {"counts", e.counts}};
}

}  // namespace algver
