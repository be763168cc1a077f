#include <gtest/gtest.h>

#include <cmath>

#include "algver/bench.hpp"
#include "algver/network_io.hpp"

using namespace algver;

namespace {

// Small enough that certification takes milliseconds.
BenchConfig small_config(std::uint64_t seed) {
  BenchConfig c = BenchConfig::desk(4, 2, 0.3);
  c.input_dim = 3;
  c.n_unverifiable = 4;
  c.n_clean = 4;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(Generate, CountsShellAndTargets) {
  const auto suite = generate(BenchConfig::full());
  ASSERT_EQ(suite.instances.size(), 20U);
  std::size_t planted = 0;
  for (std::size_t i = 0; i < suite.instances.size(); ++i) {
    const auto& inst = suite.instances[i];
    EXPECT_EQ(inst.id, i);
    EXPECT_EQ(inst.x0.size(), 8);
    EXPECT_LE(inst.x0.cwiseAbs().maxCoeff(), 1.0);
    EXPECT_LE(inst.label, 1U);
    EXPECT_EQ(inst.planted.has_value(), i < 10);
    if (!inst.planted) continue;
    ++planted;
    const double r = inst.planted->delta.norm();
    EXPECT_GE(r, 0.196 - 1e-15);
    EXPECT_LE(r, 0.2);
    EXPECT_EQ(inst.planted->target_label, 1 - inst.label);
  }
  EXPECT_EQ(planted, 10U);
}

TEST(Generate, SeededAndPrefixStable) {
  auto cfg = BenchConfig::desk();
  cfg.seed = 9;
  const auto a = generate(cfg), b = generate(cfg);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());

  auto more = cfg;
  more.n_clean = 8;
  const auto c = generate(more);
  for (std::size_t i = 0; i < a.instances.size(); ++i) EXPECT_EQ(c.instances[i].x0, a.instances[i].x0);

  cfg.seed = 10;
  EXPECT_NE(generate(cfg).instances[0].x0, a.instances[0].x0);
}

TEST(Generate, RejectsBadConfig) {
  auto c = BenchConfig::desk();
  c.output_dim = 3;
  EXPECT_THROW(generate(c), DimensionError);
  c = BenchConfig::desk();
  c.shell_ratio = 1.0;
  EXPECT_THROW(generate(c), Error);
  c = BenchConfig::desk();
  c.epsilon = 0;
  EXPECT_THROW(generate(c), Error);
}

TEST(Schedule, TriangleEndpoints) {
  EXPECT_EQ(cyclic_lr(0, 5000, 0.001), 0.0);
  EXPECT_DOUBLE_EQ(cyclic_lr(2500, 5000, 0.001), 0.001);
  EXPECT_DOUBLE_EQ(cyclic_lr(1250, 5000, 0.001), 0.0005);
  EXPECT_DOUBLE_EQ(cyclic_lr(4999, 5000, 0.001), 0.001 / 2500);
  EXPECT_EQ(cyclic_lr(5000, 5000, 0.001), 0.0);
}

TEST(Init, UniformBoundsByFanIn) {
  Rng rng(1);
  const auto p = init_uniform({{8, 6, 2}, 2}, rng);
  EXPECT_LE(p.weights[0].cwiseAbs().maxCoeff(), 1 / std::sqrt(8.0));
  EXPECT_LE(p.biases[0].cwiseAbs().maxCoeff(), 1 / std::sqrt(8.0));
  EXPECT_LE(p.weights[1].cwiseAbs().maxCoeff(), 1 / std::sqrt(6.0));
  EXPECT_GT(p.weights[0].cwiseAbs().maxCoeff(), 0.5 / std::sqrt(8.0));
}

TEST(Loss, HingeVanishesPastMargin) {
  BenchmarkSuite s;
  s.config = BenchConfig::desk();
  s.config.input_dim = 1;
  s.config.n_unverifiable = 1;
  s.config.n_clean = 0;
  BenchInstance inst;
  inst.x0 = Eigen::VectorXd::Constant(1, 0.0);
  inst.label = 0;
  inst.planted = PlantedCounterexample{Eigen::VectorXd::Constant(1, 0.2), 1};
  s.instances.push_back(inst);

  // logits (x, -x) through an identity hidden unit: f0 - f1 = 2x at x_cex = 0.2
  NetworkParams p = NetworkParams::zeros({{1, 1, 2}, 1});
  p.weights[0] << 1;
  p.weights[1] << 1, -1;
  EXPECT_NEAR(detail::bench_loss(p, s, nullptr).hinge, 0.4 + 0.01, 1e-15);
  p.weights[1] << -1, 1;
  EXPECT_EQ(detail::bench_loss(p, s, nullptr).hinge, 0.0);
  EXPECT_NEAR(detail::bench_loss(p, s, nullptr).cross_entropy, std::log(2.0), 1e-15);
}

TEST(LossProperty, GradientMatchesFiniteDifferences) {
  const auto suite = generate(small_config(3));
  Rng rng(5);
  NetworkParams p = init_uniform(suite.config.arch(), rng);
  std::vector<GradientSample> batch;
  detail::bench_loss(p, suite, &batch);
  const auto g = parameter_gradients(p, batch).flatten();
  auto theta = p.flatten();
  const double h = 1e-6;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    auto up = theta, down = theta;
    up[k] += h;
    down[k] -= h;
    NetworkParams pu = p, pd = p;
    pu.unflatten(up);
    pd.unflatten(down);
    const double fd = (detail::bench_loss(pu, suite, nullptr).total() - detail::bench_loss(pd, suite, nullptr).total()) / (2 * h);
    EXPECT_NEAR(g[k], fd, 1e-5 * (1 + std::abs(fd))) << "parameter " << k;
  }
}

TEST(Train, DeskModelSeparatesPlantedPoints) {
  const auto suite = generate(BenchConfig::desk());
  const auto tr = train(suite);
  EXPECT_TRUE(training_sane(tr.params, suite));
  EXPECT_EQ(tr.final_loss.hinge, 0.0);
  EXPECT_LT(tr.loss_trace.back(), tr.loss_trace.front());
  EXPECT_GE(tr.attempts, 1U);
}

TEST(Train, DeterministicForASeed) {
  const auto suite = generate(small_config(4));
  const auto a = train(suite), b = train(suite);
  EXPECT_TRUE(a.params == b.params);
  EXPECT_EQ(network_to_json(a.params).dump(), network_to_json(b.params).dump());
}

TEST(Train, ReportsLossTracesWhenSanityFails) {
  auto cfg = small_config(4);
  cfg.epochs = 2;
  cfg.max_attempts = 2;
  try {
    train(generate(cfg));
    FAIL() << "expected TrainingError";
  } catch (const TrainingError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("attempt 1"), std::string::npos);
    EXPECT_NE(what.find("trace="), std::string::npos);
  }
}

TEST(BenchProperty, PlantedInstancesAreFalsifiedWithinEpsilon) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto suite = generate(small_config(seed));
    const auto tr = train(suite);
    const auto report = run(suite, tr.params, suite.config.epsilon, 2);
    EXPECT_EQ(report.falsified_unverifiable, 1.0);
    EXPECT_TRUE(report.soundness_violations().empty());
    for (std::size_t i = 0; i < report.outcomes.size(); ++i) {
      const auto& o = report.outcomes[i];
      EXPECT_EQ(o.id, i);
      EXPECT_GE(o.seconds, 0.0);
      if (!o.planted) continue;
      EXPECT_LE(o.margin, suite.config.epsilon);
      ASSERT_TRUE(o.witness_distance.has_value());
      EXPECT_NEAR(*o.witness_distance, o.margin, 1e-9);
      EXPECT_LE(*o.witness_distance, suite.config.epsilon);
    }
  }
}

TEST(Run, WorkerCountDoesNotChangeVerdicts) {
  const auto suite = generate(small_config(6));
  const auto tr = train(suite);
  const auto a = run(suite, tr.params, 0.3, 1), b = run(suite, tr.params, 0.3, 3);
  for (std::size_t i = 0; i < a.outcomes.size(); ++i) {
    EXPECT_EQ(a.outcomes[i].verdict, b.outcomes[i].verdict);
    EXPECT_EQ(a.outcomes[i].margin, b.outcomes[i].margin);
  }
}

TEST(Run, VerifierErrorsNameTheInstance) {
  const auto suite = generate(small_config(7));
  const auto zero = NetworkParams::zeros(suite.config.arch());
  try {
    run(suite, zero, 0.3);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(std::string(e.what()).rfind("instance 0:", 0), 0U) << e.what();
  }
}

TEST(Report, RatesAndCsv) {
  std::vector<InstanceOutcome> o(4);
  o[0] = {0, true, Verdict::falsified, 0.1, 0.1, 1.0};
  o[1] = {1, true, Verdict::falsified, 0.05, 0.05, 3.0};
  o[2] = {2, false, Verdict::verified, 0.9, 0.9, 1.0};
  o[3] = {3, false, Verdict::falsified, 0.1, 0.1, 3.0};
  const auto r = summarize(BenchConfig::desk(), o);
  EXPECT_EQ(r.falsified_unverifiable, 1.0);
  EXPECT_EQ(r.falsified_clean, 0.5);
  EXPECT_DOUBLE_EQ(r.mean_seconds, 2.0);
  EXPECT_NEAR(r.std_seconds, std::sqrt(4.0 / 3.0), 1e-12);
  EXPECT_EQ(report_csv_header(), "h,d,epsilon,falsified_unverifiable,falsified_clean,mean_seconds,std_seconds,seed\n");
  EXPECT_EQ(report_csv_row(r).substr(0, 14), "6,2,0.2,1,0.5,");

  const auto none = summarize(BenchConfig::desk(), {o[2]});
  EXPECT_TRUE(std::isnan(none.falsified_unverifiable));
  EXPECT_TRUE(to_json(none)["falsified_unverifiable"].is_null());

  o[0].verdict = Verdict::verified;
  EXPECT_EQ(summarize(BenchConfig::desk(), o).soundness_violations(), std::vector<std::size_t>{0});
}

TEST(SuiteJson, RoundTrip) {
  const auto suite = generate(small_config(8));
  const auto back = suite_from_json(nlohmann::json::parse(to_json(suite).dump()));
  EXPECT_EQ(to_json(back).dump(), to_json(suite).dump());
  EXPECT_EQ(to_json(suite)["seed"], 8);

  auto j = nlohmann::json::parse(to_json(suite).dump());
  j["instances"][0]["x0"].push_back(0.0);
  EXPECT_THROW(suite_from_json(j), FormatError);
  j = nlohmann::json::parse(to_json(suite).dump());
  j["config"].erase("epsilon");
  EXPECT_THROW(suite_from_json(j), FormatError);
}
