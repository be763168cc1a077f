#pragma once

// Sparse multivariate polynomials with double-precision complex coefficients.
//
// Terms live in a map keyed by graded-lexicographic monomial order, so the
// term sequence (and hence every summation over it) is deterministic. Zero
// coefficients are never stored. Real polynomials are complex polynomials
// whose coefficients have zero imaginary part.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "algver/error.hpp"

namespace algver {

using Complex = std::complex<double>;

class Monomial {
 public:
  Monomial() = default;
  explicit Monomial(std::size_t nvars) : exps_(nvars, 0) {}
  explicit Monomial(std::vector<unsigned> exps) : exps_(std::move(exps)) {}
  Monomial(std::initializer_list<unsigned> exps) : exps_(exps) {}

  std::size_t nvars() const noexcept { return exps_.size(); }
  unsigned operator[](std::size_t i) const { return exps_[i]; }
  unsigned& operator[](std::size_t i) { return exps_[i]; }
  const std::vector<unsigned>& exponents() const noexcept { return exps_; }

  unsigned degree() const {
    return std::accumulate(exps_.begin(), exps_.end(), 0U);
  }

  Monomial operator*(const Monomial& other) const {
    Monomial out(*this);
    for (std::size_t i = 0; i < exps_.size(); ++i) out.exps_[i] += other.exps_[i];
    return out;
  }

  friend bool operator==(const Monomial&, const Monomial&) = default;

 private:
  std::vector<unsigned> exps_;
};

/// Graded lexicographic order: lower total degree first, ties broken
/// lexicographically with x1 the most significant variable.
struct GradedLexLess {
  bool operator()(const Monomial& a, const Monomial& b) const {
    const unsigned da = a.degree();
    const unsigned db = b.degree();
    if (da != db) return da < db;
    return a.exponents() < b.exponents();
  }
};

class Polynomial {
 public:
  using Terms = std::map<Monomial, Complex, GradedLexLess>;

  /// Refuse to build polynomials with more terms than this.
  static constexpr std::size_t kMaxTerms = 2'000'000;

  Polynomial() = default;
  explicit Polynomial(std::size_t nvars) : nvars_(nvars) {}

  static Polynomial constant(std::size_t nvars, Complex value) {
    Polynomial p(nvars);
    p.add_term(Monomial(nvars), value);
    return p;
  }

  static Polynomial variable(std::size_t nvars, std::size_t index) {
    if (index >= nvars) throw DimensionError("variable index out of range");
    Monomial m(nvars);
    m[index] = 1;
    Polynomial p(nvars);
    p.add_term(m, 1.0);
    return p;
  }

  static Polynomial from_terms(std::size_t nvars,
                               std::initializer_list<std::pair<Monomial, Complex>> terms) {
    Polynomial p(nvars);
    for (const auto& [m, c] : terms) p.add_term(m, c);
    return p;
  }

  /// Adds `coeff * m` into the polynomial, keeping the canonical form.
  void add_term(const Monomial& m, Complex coeff) {
    if (m.nvars() != nvars_) throw DimensionError("monomial length does not match nvars");
    if (coeff == Complex(0.0)) return;
    auto [it, inserted] = terms_.try_emplace(m, coeff);
    if (!inserted) {
      it->second += coeff;
      if (it->second == Complex(0.0)) terms_.erase(it);
    } else if (terms_.size() > kMaxTerms) {
      terms_.erase(it);
      throw BudgetError("polynomial term count guard", terms_.size() + 1, kMaxTerms);
    }
  }

  std::size_t nvars() const noexcept { return nvars_; }
  std::size_t size() const noexcept { return terms_.size(); }
  bool is_zero() const noexcept { return terms_.empty(); }
  const Terms& terms() const noexcept { return terms_; }

  /// Maximum total degree over the terms; the zero polynomial has degree 0.
  unsigned degree() const { return terms_.empty() ? 0U : terms_.rbegin()->first.degree(); }

  Complex coefficient(const Monomial& m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? Complex(0.0) : it->second;
  }

  /// Largest coefficient modulus (0 for the zero polynomial).
  double max_coefficient() const {
    double out = 0.0;
    for (const auto& [m, c] : terms_) out = std::max(out, std::abs(c));
    return out;
  }

  bool is_real(double tol = 0.0) const {
    return std::all_of(terms_.begin(), terms_.end(),
                       [tol](const auto& t) { return std::abs(t.second.imag()) <= tol; });
  }

  Complex evaluate(std::span<const Complex> point) const {
    if (point.size() != nvars_) throw DimensionError("evaluation point has wrong length");
    Complex sum = 0.0;
    for (const auto& [m, c] : terms_) {
      Complex term = c;
      for (std::size_t i = 0; i < nvars_; ++i) {
        if (m[i] != 0) term *= ipow(point[i], m[i]);
      }
      sum += term;
    }
    return sum;
  }

  /// Evaluates at a real point and returns the real part.
  double evaluate(std::span<const double> point) const {
    if (point.size() != nvars_) throw DimensionError("evaluation point has wrong length");
    double sum = 0.0;
    for (const auto& [m, c] : terms_) {
      double term = c.real();
      for (std::size_t i = 0; i < nvars_; ++i) {
        if (m[i] != 0) term *= ipow(point[i], m[i]);
      }
      sum += term;
    }
    return sum;
  }

  Polynomial derivative(std::size_t var) const {
    if (var >= nvars_) throw DimensionError("derivative variable out of range");
    Polynomial out(nvars_);
    for (const auto& [m, c] : terms_) {
      if (m[var] == 0) continue;
      Monomial dm(m);
      dm[var] -= 1;
      out.add_term(dm, c * static_cast<double>(m[var]));
    }
    return out;
  }

  /// Same polynomial viewed in `nvars` ≥ nvars() variables; the new variables
  /// are appended and do not occur.
  Polynomial with_nvars(std::size_t nvars) const {
    if (nvars < nvars_) throw DimensionError("cannot drop variables");
    Polynomial out(nvars);
    for (const auto& [m, c] : terms_) {
      std::vector<unsigned> e = m.exponents();
      e.resize(nvars, 0);
      out.terms_.emplace(Monomial(std::move(e)), c);
    }
    return out;
  }

  /// p^d by repeated squaring.
  Polynomial pow(unsigned d) const {
    Polynomial result = constant(nvars_, 1.0);
    Polynomial base = *this;
    while (d > 0) {
      if (d & 1U) result *= base;
      d >>= 1U;
      if (d > 0) base *= base;
    }
    return result;
  }

  Polynomial operator-() const {
    Polynomial out(*this);
    for (auto& [m, c] : out.terms_) c = -c;
    return out;
  }

  Polynomial& operator+=(const Polynomial& q) {
    check_same_nvars(q);
    for (const auto& [m, c] : q.terms_) add_term(m, c);
    return *this;
  }

  Polynomial& operator-=(const Polynomial& q) {
    check_same_nvars(q);
    for (const auto& [m, c] : q.terms_) add_term(m, -c);
    return *this;
  }

  Polynomial& operator*=(Complex s) {
    if (s == Complex(0.0)) {
      terms_.clear();
      return *this;
    }
    for (auto it = terms_.begin(); it != terms_.end();) {
      it->second *= s;
      it = (it->second == Complex(0.0)) ? terms_.erase(it) : std::next(it);
    }
    return *this;
  }

  Polynomial& operator*=(const Polynomial& q) {
    check_same_nvars(q);
    Polynomial out(nvars_);
    for (const auto& [ma, ca] : terms_) {
      for (const auto& [mb, cb] : q.terms_) out.add_term(ma * mb, ca * cb);
    }
    *this = std::move(out);
    return *this;
  }

  friend Polynomial operator+(Polynomial p, const Polynomial& q) { return p += q; }
  friend Polynomial operator-(Polynomial p, const Polynomial& q) { return p -= q; }
  friend Polynomial operator*(Polynomial p, const Polynomial& q) { return p *= q; }
  friend Polynomial operator*(Polynomial p, Complex s) { return p *= s; }
  friend Polynomial operator*(Complex s, Polynomial p) { return p *= s; }

  friend bool operator==(const Polynomial& a, const Polynomial& b) {
    return a.nvars_ == b.nvars_ && a.terms_ == b.terms_;
  }

 private:
  template <class T>
  static T ipow(T x, unsigned e) {
    T r = 1.0;
    while (e > 0) {
      if (e & 1U) r *= x;
      e >>= 1U;
      if (e > 0) x *= x;
    }
    return r;
  }

  void check_same_nvars(const Polynomial& q) const {
    if (q.nvars_ != nvars_) throw DimensionError("polynomials have different nvars");
  }

  std::size_t nvars_ = 0;
  Terms terms_;
};

/// Partial derivatives ∂p/∂x_i for every variable.
inline std::vector<Polynomial> gradient(const Polynomial& p) {
  std::vector<Polynomial> g;
  g.reserve(p.nvars());
  for (std::size_t i = 0; i < p.nvars(); ++i) g.push_back(p.derivative(i));
  return g;
}

/// Matrix of second partials. The upper triangle is computed and mirrored, so
/// the result is symmetric term for term.
inline std::vector<std::vector<Polynomial>> hessian(const Polynomial& p) {
  const auto g = gradient(p);
  const std::size_t n = p.nvars();
  std::vector<std::vector<Polynomial>> h(n, std::vector<Polynomial>(n, Polynomial(n)));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      h[i][j] = g[i].derivative(j);
      h[j][i] = h[i][j];
    }
  }
  return h;
}

struct Derivatives {
  std::vector<Polynomial> gradient;
  std::vector<std::vector<Polynomial>> hessian;
};

inline Derivatives differentiate(const Polynomial& p) { return {gradient(p), hessian(p)}; }

/// Multinomial expansion of (w·x + b)^d.
inline Polynomial expand_affine_power(std::span<const double> w, double b, unsigned d) {
  if (d == 0) throw DimensionError("expand_affine_power needs d >= 1");
  const std::size_t n = w.size();

  double count = 1.0;  // C(n + d, d) bounds the term count
  for (unsigned k = 1; k <= d; ++k) count = count * static_cast<double>(n + k) / k;
  if (count > static_cast<double>(Polynomial::kMaxTerms)) {
    throw BudgetError("affine power expansion", static_cast<std::size_t>(count),
                      Polynomial::kMaxTerms);
  }

  std::vector<double> factorial(d + 1, 1.0);
  for (unsigned k = 1; k <= d; ++k) factorial[k] = factorial[k - 1] * k;

  Polynomial out(n);
  Monomial m(n);
  // Walk every composition (k_0 for b, k_1..k_n for x) of d.
  auto recurse = [&](auto&& self, std::size_t var, unsigned left, double coeff) -> void {
    if (var == n) {
      const double c = coeff * std::pow(b, static_cast<double>(left)) / factorial[left];
      out.add_term(m, c * factorial[d]);
      return;
    }
    double wpow = 1.0;
    for (unsigned k = 0; k <= left; ++k) {
      if (k > 0) {
        wpow *= w[var];
        if (wpow == 0.0) break;
      }
      m[var] = k;
      self(self, var + 1, left - k, coeff * wpow / factorial[k]);
    }
    m[var] = 0;
  };
  recurse(recurse, 0, d, 1.0);
  return out;
}

/// Ordered list of polynomials sharing one variable count.
struct PolySystem {
  std::size_t nvars = 0;
  std::vector<Polynomial> equations;

  PolySystem() = default;
  PolySystem(std::size_t n, std::vector<Polynomial> eqs) : nvars(n), equations(std::move(eqs)) {
    for (const auto& e : equations) {
      if (e.nvars() != nvars) throw DimensionError("system equation has wrong nvars");
    }
  }

  std::size_t size() const noexcept { return equations.size(); }
  bool is_square() const noexcept { return equations.size() == nvars; }

  std::vector<unsigned> degrees() const {
    std::vector<unsigned> d;
    d.reserve(equations.size());
    for (const auto& e : equations) d.push_back(e.degree());
    return d;
  }

  std::vector<Complex> evaluate(std::span<const Complex> z) const {
    std::vector<Complex> out;
    out.reserve(equations.size());
    for (const auto& e : equations) out.push_back(e.evaluate(z));
    return out;
  }
};

/// Canonical text form: one term per line, "re im e1 ... en", highest
/// graded-lex monomial first, coefficients printed with round-trip precision.
inline std::string to_text(const Polynomial& p) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (auto it = p.terms().rbegin(); it != p.terms().rend(); ++it) {
    os << it->second.real() << ' ' << it->second.imag();
    for (unsigned e : it->first.exponents()) os << ' ' << e;
    os << '\n';
  }
  return os.str();
}

inline Polynomial parse_text(const std::string& text, std::size_t nvars) {
  Polynomial p(nvars);
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    double re = 0.0;
    double im = 0.0;
    if (!(ls >> re >> im)) {
      throw FormatError("polynomial text line " + std::to_string(lineno) + ": bad coefficient");
    }
    std::vector<unsigned> e;
    long long v = 0;
    while (ls >> v) {
      if (v < 0) throw FormatError("polynomial text line " + std::to_string(lineno) + ": negative exponent");
      e.push_back(static_cast<unsigned>(v));
    }
    if (!ls.eof()) {
      throw FormatError("polynomial text line " + std::to_string(lineno) + ": bad exponent");
    }
    if (e.size() != nvars) {
      throw FormatError("polynomial text line " + std::to_string(lineno) + ": expected " +
                        std::to_string(nvars) + " exponents, got " + std::to_string(e.size()));
    }
    p.add_term(Monomial(std::move(e)), Complex(re, im));
  }
  return p;
}

}  // namespace algver
