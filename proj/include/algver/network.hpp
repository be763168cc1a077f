#pragma once

// Polynomial neural networks: x -> W_1 x + b_1 -> σ -> ... -> W_L h + b_L with
// σ(z) = z^d applied element-wise after every layer except the last.
//
// Weight convention: weights[l] has shape dims[l+1] × dims[l]; row i of
// weights[l] (together with biases[l][i]) produces unit i of layer l+1.

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "algver/error.hpp"
#include "algver/polynomial.hpp"
#include "algver/random.hpp"

namespace algver {

struct Architecture {
  std::vector<std::size_t> dims;  // [n, h1, ..., hs, k]
  unsigned degree = 1;

  std::size_t input_dim() const { return dims.front(); }
  std::size_t output_dim() const { return dims.back(); }
  std::size_t hidden_layers() const { return dims.size() - 2; }
  std::size_t layers() const { return dims.size() - 1; }

  std::size_t parameter_count() const {
    std::size_t p = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) p += dims[l + 1] * (dims[l] + 1);
    return p;
  }

  void validate() const {
    if (dims.size() < 3) throw DimensionError("architecture needs at least one hidden layer");
    for (std::size_t w : dims) {
      if (w == 0) throw DimensionError("layer widths must be positive");
    }
    if (degree < 1) throw DimensionError("activation degree must be >= 1");
  }

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

struct NetworkParams {
  Architecture arch;
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  /// All-zero parameters of the given architecture.
  static NetworkParams zeros(const Architecture& arch) {
    arch.validate();
    NetworkParams p;
    p.arch = arch;
    for (std::size_t l = 0; l < arch.layers(); ++l) {
      p.weights.push_back(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(arch.dims[l + 1]),
                                                static_cast<Eigen::Index>(arch.dims[l])));
      p.biases.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(arch.dims[l + 1])));
    }
    return p;
  }

  /// Standard-normal entries everywhere; the generic parameters used by the
  /// ED-degree experiments.
  static NetworkParams gaussian(const Architecture& arch, Rng& rng) {
    NetworkParams p = zeros(arch);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
      for (Eigen::Index i = 0; i < p.weights[l].rows(); ++i) {
        for (Eigen::Index j = 0; j < p.weights[l].cols(); ++j) p.weights[l](i, j) = normal(rng);
        p.biases[l](i) = normal(rng);
      }
    }
    return p;
  }

  void validate() const {
    arch.validate();
    if (weights.size() != arch.layers() || biases.size() != arch.layers()) {
      throw DimensionError("parameter layer count does not match architecture");
    }
    for (std::size_t l = 0; l < arch.layers(); ++l) {
      const auto rows = static_cast<Eigen::Index>(arch.dims[l + 1]);
      const auto cols = static_cast<Eigen::Index>(arch.dims[l]);
      if (weights[l].rows() != rows || weights[l].cols() != cols) {
        throw DimensionError("weights[" + std::to_string(l) + "] has shape " +
                             std::to_string(weights[l].rows()) + "x" +
                             std::to_string(weights[l].cols()) + ", expected " +
                             std::to_string(rows) + "x" + std::to_string(cols));
      }
      if (biases[l].size() != rows) {
        throw DimensionError("biases[" + std::to_string(l) + "] has wrong length");
      }
      if (!weights[l].allFinite() || !biases[l].allFinite()) {
        throw DimensionError("layer " + std::to_string(l) + " has non-finite entries");
      }
    }
  }

  /// Flat view order: layer by layer, weights row-major then biases.
  std::vector<double> flatten() const {
    std::vector<double> out;
    out.reserve(arch.parameter_count());
    for (std::size_t l = 0; l < weights.size(); ++l) {
      for (Eigen::Index i = 0; i < weights[l].rows(); ++i) {
        for (Eigen::Index j = 0; j < weights[l].cols(); ++j) out.push_back(weights[l](i, j));
      }
      for (Eigen::Index i = 0; i < biases[l].size(); ++i) out.push_back(biases[l](i));
    }
    return out;
  }

  void unflatten(std::span<const double> flat) {
    if (flat.size() != arch.parameter_count()) throw DimensionError("flat parameter length");
    std::size_t k = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      for (Eigen::Index i = 0; i < weights[l].rows(); ++i) {
        for (Eigen::Index j = 0; j < weights[l].cols(); ++j) weights[l](i, j) = flat[k++];
      }
      for (Eigen::Index i = 0; i < biases[l].size(); ++i) biases[l](i) = flat[k++];
    }
  }

  friend bool operator==(const NetworkParams& a, const NetworkParams& b) {
    if (!(a.arch == b.arch) || a.weights.size() != b.weights.size()) return false;
    for (std::size_t l = 0; l < a.weights.size(); ++l) {
      if (a.weights[l] != b.weights[l] || a.biases[l] != b.biases[l]) return false;
    }
    return true;
  }
};

namespace detail {

inline Eigen::VectorXd activate(const Eigen::VectorXd& z, unsigned d) {
  return z.unaryExpr([d](double v) { return std::pow(v, static_cast<double>(d)); });
}

}  // namespace detail

/// Logits at x.
inline Eigen::VectorXd forward(const NetworkParams& params, const Eigen::VectorXd& x) {
  if (static_cast<std::size_t>(x.size()) != params.arch.input_dim()) {
    throw DimensionError("input has length " + std::to_string(x.size()) + ", network expects " +
                         std::to_string(params.arch.input_dim()));
  }
  Eigen::VectorXd h = x;
  const std::size_t L = params.weights.size();
  for (std::size_t l = 0; l < L; ++l) {
    Eigen::VectorXd z = params.weights[l] * h + params.biases[l];
    h = (l + 1 < L) ? detail::activate(z, params.arch.degree) : std::move(z);
  }
  return h;
}

/// Every logit as a fully expanded polynomial in the n inputs. The first layer
/// uses the multinomial expansion of (w·x + b)^d; deeper pre-activations are
/// assembled as polynomials and raised to the d-th power by repeated squaring.
inline std::vector<Polynomial> logit_polynomials(const NetworkParams& params) {
  params.validate();
  const std::size_t n = params.arch.input_dim();
  const unsigned d = params.arch.degree;
  const std::size_t L = params.weights.size();

  std::vector<Polynomial> hidden;
  {
    const auto& W = params.weights[0];
    const auto& b = params.biases[0];
    for (Eigen::Index i = 0; i < W.rows(); ++i) {
      std::vector<double> w(n);
      for (std::size_t j = 0; j < n; ++j) w[j] = W(i, static_cast<Eigen::Index>(j));
      hidden.push_back(expand_affine_power(w, b(i), d));
    }
  }
  for (std::size_t l = 1; l < L; ++l) {
    const auto& W = params.weights[l];
    const auto& b = params.biases[l];
    std::vector<Polynomial> next;
    next.reserve(static_cast<std::size_t>(W.rows()));
    for (Eigen::Index i = 0; i < W.rows(); ++i) {
      Polynomial z = Polynomial::constant(n, b(i));
      for (Eigen::Index j = 0; j < W.cols(); ++j) {
        if (W(i, j) != 0.0) z += hidden[static_cast<std::size_t>(j)] * Complex(W(i, j));
      }
      next.push_back(l + 1 < L ? z.pow(d) : std::move(z));
    }
    hidden = std::move(next);
  }
  return hidden;
}

/// B(x) = f_c(x) − f_c'(x), fully expanded.
inline Polynomial boundary_polynomial(const NetworkParams& params, std::size_t c,
                                      std::size_t c_prime) {
  const std::size_t k = params.arch.output_dim();
  if (c >= k || c_prime >= k) throw DimensionError("class index out of range");
  if (c == c_prime) throw DimensionError("boundary needs two distinct classes");
  auto logits = logit_polynomials(params);
  return logits[c] - logits[c_prime];
}

/// One input together with the cotangent (∂loss/∂logits) to pull back.
struct GradientSample {
  Eigen::VectorXd x;
  Eigen::VectorXd cotangent;
};

/// Reverse-mode gradient of Σ_samples ⟨cotangent, logits(x)⟩ with respect to
/// every weight and bias, returned in the shape of the parameters.
inline NetworkParams parameter_gradients(const NetworkParams& params,
                                         std::span<const GradientSample> batch) {
  NetworkParams grad = NetworkParams::zeros(params.arch);
  const std::size_t L = params.weights.size();
  const unsigned d = params.arch.degree;

  std::vector<Eigen::VectorXd> inputs(L);   // input to layer l
  std::vector<Eigen::VectorXd> preacts(L);  // pre-activation of layer l
  for (const auto& sample : batch) {
    if (static_cast<std::size_t>(sample.cotangent.size()) != params.arch.output_dim()) {
      throw DimensionError("cotangent length does not match output dimension");
    }
    Eigen::VectorXd h = sample.x;
    if (static_cast<std::size_t>(h.size()) != params.arch.input_dim()) {
      throw DimensionError("sample input has wrong length");
    }
    for (std::size_t l = 0; l < L; ++l) {
      inputs[l] = h;
      preacts[l] = params.weights[l] * h + params.biases[l];
      h = (l + 1 < L) ? detail::activate(preacts[l], d) : preacts[l];
    }

    Eigen::VectorXd delta = sample.cotangent;  // ∂/∂(pre-activation of layer l)
    for (std::size_t l = L; l-- > 0;) {
      grad.weights[l].noalias() += delta * inputs[l].transpose();
      grad.biases[l] += delta;
      if (l == 0) break;
      Eigen::VectorXd back = params.weights[l].transpose() * delta;
      const Eigen::VectorXd& z = preacts[l - 1];
      for (Eigen::Index i = 0; i < back.size(); ++i) {
        back(i) *= static_cast<double>(d) * std::pow(z(i), static_cast<double>(d) - 1.0);
      }
      delta = std::move(back);
    }
  }
  return grad;
}

}  // namespace algver
