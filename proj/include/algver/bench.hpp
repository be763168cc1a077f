#pragma once

// Soundness benchmark: binary polynomial classifiers trained so that planted
// points inside the ε-ball flip the label, then checked with the verifier.

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "algver/error.hpp"
#include "algver/network.hpp"
#include "algver/random.hpp"
#include "algver/verifier.hpp"

namespace algver {

struct BenchConfig {
  std::size_t input_dim = 8;
  std::size_t output_dim = 2;
  std::size_t hidden = 6;
  unsigned degree = 2;
  double epsilon = 0.2;
  std::size_t n_unverifiable = 10;
  std::size_t n_clean = 10;
  double shell_ratio = 0.98;
  double margin = 0.01;
  double lr = 0.001;
  std::size_t epochs = 5000;
  std::uint64_t seed = 0;
  unsigned max_attempts = 5;

  /// Reduced sizes for a quick run on a workstation. With 2000 epochs the
  /// base rate 0.001 leaves the planted pairs unseparated, so it is raised.
  static BenchConfig desk(std::size_t hidden = 6, unsigned degree = 2, double epsilon = 0.2) {
    BenchConfig c;
    c.hidden = hidden;
    c.degree = degree;
    c.epsilon = epsilon;
    c.n_unverifiable = 5;
    c.n_clean = 5;
    c.epochs = 2000;
    c.lr = 0.01;
    return c;
  }

  static BenchConfig full(std::size_t hidden = 6, unsigned degree = 2, double epsilon = 0.2) {
    BenchConfig c;
    c.hidden = hidden;
    c.degree = degree;
    c.epsilon = epsilon;
    return c;
  }

  Architecture arch() const { return {{input_dim, hidden, output_dim}, degree}; }

  void validate() const {
    if (output_dim != 2) throw DimensionError("benchmark is binary: output_dim must be 2");
    if (input_dim == 0 || hidden == 0 || degree == 0) throw DimensionError("benchmark sizes must be positive");
    if (!(epsilon > 0)) throw Error("benchmark epsilon must be positive");
    if (!(shell_ratio > 0 && shell_ratio < 1)) throw Error("shell ratio must lie in (0, 1)");
    if (n_unverifiable + n_clean == 0) throw DimensionError("benchmark needs at least one instance");
    if (epochs < 2 || !(lr > 0) || max_attempts == 0) throw Error("invalid training settings");
  }
};

struct PlantedCounterexample {
  Eigen::VectorXd delta;
  std::size_t target_label = 0;
};

struct BenchInstance {
  std::size_t id = 0;
  Eigen::VectorXd x0;
  std::size_t label = 0;
  std::optional<PlantedCounterexample> planted;

  Eigen::VectorXd counterexample() const { return x0 + planted->delta; }
};

struct BenchmarkSuite {
  BenchConfig config;
  std::vector<BenchInstance> instances;  // unverifiable first, then clean
};

/// Instances draw from their own sub-streams, so instance i does not depend on
/// how many others there are.
inline BenchmarkSuite generate(const BenchConfig& config) {
  config.validate();
  BenchmarkSuite suite;
  suite.config = config;
  const std::size_t total = config.n_unverifiable + config.n_clean;
  const auto n = static_cast<Eigen::Index>(config.input_dim);
  for (std::size_t i = 0; i < total; ++i) {
    Rng rng = make_rng(config.seed, "bench-instance", i);
    std::uniform_real_distribution<double> box(-1.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> shell(config.shell_ratio * config.epsilon, config.epsilon);
    BenchInstance inst;
    inst.id = i;
    inst.x0.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) inst.x0(j) = box(rng);
    inst.label = std::bernoulli_distribution(0.5)(rng) ? 1 : 0;
    if (i < config.n_unverifiable) {
      Eigen::VectorXd z(n);
      do {
        for (Eigen::Index j = 0; j < n; ++j) z(j) = normal(rng);
      } while (z.norm() == 0.0);
      inst.planted = PlantedCounterexample{shell(rng) * z / z.norm(), 1 - inst.label};
    }
    suite.instances.push_back(std::move(inst));
  }
  return suite;
}

/// Triangular schedule: 0 at t = 0, η at T/2, back towards 0 at T.
inline double cyclic_lr(std::size_t t, std::size_t T, double eta) {
  const double half = static_cast<double>(T) / 2;
  const double tt = static_cast<double>(t);
  return tt < half ? eta * tt / half : eta * (static_cast<double>(T) - tt) / half;
}

/// Uniform(−1/√fan_in, 1/√fan_in) for every weight and bias.
inline NetworkParams init_uniform(const Architecture& arch, Rng& rng) {
  NetworkParams p = NetworkParams::zeros(arch);
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(p.weights[l].cols()));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Eigen::Index i = 0; i < p.weights[l].rows(); ++i) {
      for (Eigen::Index j = 0; j < p.weights[l].cols(); ++j) p.weights[l](i, j) = u(rng);
    }
    for (Eigen::Index i = 0; i < p.biases[l].size(); ++i) p.biases[l](i) = u(rng);
  }
  return p;
}

struct BenchLoss {
  double cross_entropy = 0;
  double hinge = 0;
  double total() const { return cross_entropy + hinge; }
};

namespace detail {

/// Loss of the suite and the per-sample cotangents of its gradient.
inline BenchLoss bench_loss(const NetworkParams& params, const BenchmarkSuite& suite,
                            std::vector<GradientSample>* grad) {
  BenchLoss loss;
  const double n_all = static_cast<double>(suite.instances.size());
  const double n_cex = static_cast<double>(std::max<std::size_t>(suite.config.n_unverifiable, 1));
  if (grad) grad->clear();
  for (const auto& inst : suite.instances) {
    const Eigen::VectorXd f = forward(params, inst.x0);
    const double top = f.maxCoeff();
    const Eigen::VectorXd e = (f.array() - top).exp();
    const double z = e.sum();
    loss.cross_entropy += (std::log(z) + top - f(static_cast<Eigen::Index>(inst.label))) / n_all;
    if (grad) {
      Eigen::VectorXd cot = e / z;
      cot(static_cast<Eigen::Index>(inst.label)) -= 1.0;
      grad->push_back({inst.x0, cot / n_all});
    }
    if (!inst.planted) continue;
    const Eigen::VectorXd x = inst.counterexample();
    const Eigen::VectorXd g = forward(params, x);
    const auto y = static_cast<Eigen::Index>(inst.label);
    const auto t = static_cast<Eigen::Index>(inst.planted->target_label);
    const double h = g(y) - g(t) + suite.config.margin;
    if (h > 0) {
      loss.hinge += h / n_cex;
      if (grad) {
        Eigen::VectorXd cot = Eigen::VectorXd::Zero(g.size());
        cot(y) = 1.0 / n_cex;
        cot(t) = -1.0 / n_cex;
        grad->push_back({x, cot});
      }
    }
  }
  return loss;
}

inline std::size_t argmax(const Eigen::VectorXd& v) {
  Eigen::Index i = 0;
  v.maxCoeff(&i);
  return static_cast<std::size_t>(i);
}

}  // namespace detail

/// Every x0 carries its label and every planted point carries its target.
inline bool training_sane(const NetworkParams& params, const BenchmarkSuite& suite) {
  for (const auto& inst : suite.instances) {
    if (detail::argmax(forward(params, inst.x0)) != inst.label) return false;
    if (inst.planted && detail::argmax(forward(params, inst.counterexample())) != inst.planted->target_label) {
      return false;
    }
  }
  return true;
}

struct TrainResult {
  NetworkParams params;
  unsigned attempts = 0;
  BenchLoss final_loss;
  std::vector<double> loss_trace;  // total loss every 100 epochs of the accepted attempt
};

/// Full-batch Adam on cross-entropy over all x0 plus the hinge on planted
/// points. Retries from a fresh initialization when the sanity check fails.
inline TrainResult train(const BenchmarkSuite& suite) {
  const BenchConfig& cfg = suite.config;
  cfg.validate();
  constexpr double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  std::ostringstream failures;
  std::vector<GradientSample> batch;
  for (unsigned attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    Rng rng = make_rng(cfg.seed, "bench-init", attempt);
    TrainResult out;
    out.params = init_uniform(cfg.arch(), rng);
    out.attempts = attempt + 1;
    std::vector<double> theta = out.params.flatten();
    std::vector<double> m(theta.size(), 0.0), v(theta.size(), 0.0);
    double b1 = 1, b2 = 1;
    for (std::size_t t = 0; t < cfg.epochs; ++t) {
      const BenchLoss loss = detail::bench_loss(out.params, suite, &batch);
      if (t % 100 == 0) out.loss_trace.push_back(loss.total());
      const std::vector<double> g = parameter_gradients(out.params, batch).flatten();
      const double lr = cyclic_lr(t, cfg.epochs, cfg.lr);
      b1 *= beta1;
      b2 *= beta2;
      for (std::size_t k = 0; k < theta.size(); ++k) {
        m[k] = beta1 * m[k] + (1 - beta1) * g[k];
        v[k] = beta2 * v[k] + (1 - beta2) * g[k] * g[k];
        theta[k] -= lr * (m[k] / (1 - b1)) / (std::sqrt(v[k] / (1 - b2)) + adam_eps);
      }
      out.params.unflatten(theta);
    }
    out.final_loss = detail::bench_loss(out.params, suite, nullptr);
    out.loss_trace.push_back(out.final_loss.total());
    if (training_sane(out.params, suite)) return out;
    failures << " attempt " << attempt << ": ce=" << out.final_loss.cross_entropy
             << " hinge=" << out.final_loss.hinge << " trace=[";
    for (std::size_t k = 0; k < out.loss_trace.size(); k += 5) failures << (k ? "," : "") << out.loss_trace[k];
    failures << "];";
  }
  throw TrainingError("training missed the sanity checks after " + std::to_string(cfg.max_attempts) +
                      " attempts:" + failures.str());
}

struct InstanceOutcome {
  std::size_t id = 0;
  bool planted = false;
  Verdict verdict = Verdict::falsified;
  double margin = 0;
  std::optional<double> witness_distance;
  double seconds = 0;
};

struct BenchReport {
  BenchConfig config;
  std::vector<InstanceOutcome> outcomes;
  double falsified_unverifiable = 0;  // NaN when the suite has none
  double falsified_clean = 0;
  double mean_seconds = 0;
  double std_seconds = 0;

  /// Planted instances reported verified: each one is a soundness error.
  std::vector<std::size_t> soundness_violations() const {
    std::vector<std::size_t> ids;
    for (const auto& o : outcomes) {
      if (o.planted && o.verdict == Verdict::verified) ids.push_back(o.id);
    }
    return ids;
  }
};

inline BenchReport summarize(const BenchConfig& config, std::vector<InstanceOutcome> outcomes) {
  BenchReport r;
  r.config = config;
  r.outcomes = std::move(outcomes);
  std::size_t nu = 0, fu = 0, nc = 0, fc = 0;
  double sum = 0, sq = 0;
  for (const auto& o : r.outcomes) {
    const bool f = o.verdict == Verdict::falsified;
    if (o.planted) {
      ++nu;
      fu += f;
    } else {
      ++nc;
      fc += f;
    }
    sum += o.seconds;
    sq += o.seconds * o.seconds;
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  r.falsified_unverifiable = nu ? static_cast<double>(fu) / nu : nan;
  r.falsified_clean = nc ? static_cast<double>(fc) / nc : nan;
  const double n = static_cast<double>(r.outcomes.size());
  if (n > 0) {
    r.mean_seconds = sum / n;
    r.std_seconds = n > 1 ? std::sqrt(std::max(0.0, (sq - sum * sum / n) / (n - 1))) : 0.0;
  }
  return r;
}

/// Certifies every instance at (x0, ε). Instances run in parallel; outcomes
/// are stored by index so the report does not depend on scheduling.
inline BenchReport run(const BenchmarkSuite& suite, const NetworkParams& params, double epsilon,
                       unsigned workers = 1, const CriticalOptions& opts = {}) {
  params.validate();
  const std::size_t total = suite.instances.size();
  std::vector<InstanceOutcome> outcomes(total);
  std::vector<std::string> errors(total);
  std::atomic<std::size_t> next{0};
  auto body = [&] {
    for (std::size_t i = next++; i < total; i = next++) {
      const BenchInstance& inst = suite.instances[i];
      InstanceOutcome& o = outcomes[i];
      o.id = inst.id;
      o.planted = inst.planted.has_value();
      try {
        const auto t0 = std::chrono::steady_clock::now();
        const VerificationResult vr = certify(params, inst.x0, epsilon, opts);
        o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        o.verdict = *vr.verdict;
        o.margin = vr.margin;
        if (vr.witness) o.witness_distance = (*vr.witness - inst.x0).norm();
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  workers = static_cast<unsigned>(std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(total, 1)));
  if (workers == 1) {
    body();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body);
  }
  for (std::size_t i = 0; i < total; ++i) {
    if (!errors[i].empty()) throw Error("instance " + std::to_string(suite.instances[i].id) + ": " + errors[i]);
  }
  return summarize(suite.config, std::move(outcomes));
}

// JSON and CSV

inline nlohmann::ordered_json to_json(const BenchConfig& c) {
  return {{"input_dim", c.input_dim}, {"output_dim", c.output_dim}, {"hidden", c.hidden},
          {"degree", c.degree},       {"epsilon", c.epsilon},       {"n_unverifiable", c.n_unverifiable},
          {"n_clean", c.n_clean},     {"shell_ratio", c.shell_ratio}, {"margin", c.margin},
          {"lr", c.lr},               {"epochs", c.epochs},         {"seed", c.seed},
          {"max_attempts", c.max_attempts}};
}

inline BenchConfig bench_config_from_json(const nlohmann::json& j) {
  try {
    BenchConfig c;
    c.input_dim = j.at("input_dim").get<std::size_t>();
    c.output_dim = j.at("output_dim").get<std::size_t>();
    c.hidden = j.at("hidden").get<std::size_t>();
    c.degree = j.at("degree").get<unsigned>();
    c.epsilon = j.at("epsilon").get<double>();
    c.n_unverifiable = j.at("n_unverifiable").get<std::size_t>();
    c.n_clean = j.at("n_clean").get<std::size_t>();
    c.shell_ratio = j.at("shell_ratio").get<double>();
    c.margin = j.at("margin").get<double>();
    c.lr = j.at("lr").get<double>();
    c.epochs = j.at("epochs").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.max_attempts = j.value("max_attempts", 5U);
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bench config: ") + e.what());
  }
}

inline nlohmann::ordered_json to_json(const BenchmarkSuite& s) {
  nlohmann::ordered_json inst = nlohmann::ordered_json::array();
  for (const auto& i : s.instances) {
    nlohmann::ordered_json e = {{"id", i.id},
                                {"x0", std::vector<double>(i.x0.data(), i.x0.data() + i.x0.size())},
                                {"label", i.label}};
    if (i.planted) {
      const auto& d = i.planted->delta;
      e["planted"] = {{"delta", std::vector<double>(d.data(), d.data() + d.size())},
                      {"target_label", i.planted->target_label}};
    }
    inst.push_back(std::move(e));
  }
  return {{"config", to_json(s.config)}, {"seed", s.config.seed}, {"instances", std::move(inst)}};
}

inline BenchmarkSuite suite_from_json(const nlohmann::json& j) {
  BenchmarkSuite s;
  s.config = bench_config_from_json(j.at("config"));
  auto vec = [&](const nlohmann::json& a) {
    const auto v = a.get<std::vector<double>>();
    if (v.size() != s.config.input_dim) throw FormatError("bench instance has wrong input dimension");
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
  };
  try {
    for (const auto& e : j.at("instances")) {
      BenchInstance i;
      i.id = e.at("id").get<std::size_t>();
      i.x0 = vec(e.at("x0"));
      i.label = e.at("label").get<std::size_t>();
      if (i.label > 1) throw FormatError("bench label must be 0 or 1");
      if (e.contains("planted")) {
        i.planted = PlantedCounterexample{vec(e["planted"].at("delta")),
                                          e["planted"].at("target_label").get<std::size_t>()};
      }
      s.instances.push_back(std::move(i));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bench suite: ") + e.what());
  }
  return s;
}

inline nlohmann::ordered_json to_json(const BenchReport& r) {
  auto rate = [](double v) { return std::isnan(v) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(v); };
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& o : r.outcomes) {
    rows.push_back({{"id", o.id},
                    {"planted", o.planted},
                    {"verdict", to_string(o.verdict)},
                    {"margin", detail::margin_json(o.margin)},
                    {"witness_distance", o.witness_distance ? nlohmann::ordered_json(*o.witness_distance)
                                                            : nlohmann::ordered_json(nullptr)},
                    {"seconds", o.seconds}});
  }
  return {{"config", to_json(r.config)},
          {"seed", r.config.seed},
          {"falsified_unverifiable", rate(r.falsified_unverifiable)},
          {"falsified_clean", rate(r.falsified_clean)},
          {"mean_seconds", r.mean_seconds},
          {"std_seconds", r.std_seconds},
          {"soundness_violations", r.soundness_violations()},
          {"instances", std::move(rows)}};
}

inline std::string report_csv_header() {
  return "h,d,epsilon,falsified_unverifiable,falsified_clean,mean_seconds,std_seconds,seed\n";
}

inline std::string report_csv_row(const BenchReport& r) {
  std::ostringstream os;
  os.precision(6);
  os << r.config.hidden << ',' << r.config.degree << ',' << r.config.epsilon << ','
     << r.falsified_unverifiable << ',' << r.falsified_clean << ',' << r.mean_seconds << ','
     << r.std_seconds << ',' << r.config.seed << '\n';
  return os.str();
}

}  // namespace algver
