#pragma once

// Command-line front end. run_cli() is the whole program; main() only binds
// it to the process streams, so tests drive it in-process.

#include <CLI11.hpp>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "algver/bench.hpp"
#include "algver/ed_analysis.hpp"
#include "algver/error.hpp"
#include "algver/kac_rice.hpp"
#include "algver/network_io.hpp"
#include "algver/quadric.hpp"
#include "algver/verifier.hpp"

namespace algver::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_error = 1;
inline constexpr int exit_falsified = 2;
inline constexpr int exit_usage = 64;

namespace detail {

/// Accepts "a,b,c"; a leading U+2212 minus is read as '-'.
inline Eigen::VectorXd parse_point(std::string text) {
  for (std::size_t p; (p = text.find("\xE2\x88\x92")) != std::string::npos;) text.replace(p, 3, "-");
  std::vector<double> v;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw FormatError("point: cannot read '" + item + "' as a number");
    }
  }
  if (v.empty()) throw FormatError("point: empty");
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path + ": " + e.what());
  }
}

/// Writes to `path`, or to `out` when the path is empty or "-".
inline void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path);
  f << text;
}

inline std::string dump(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

inline std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

struct Common {
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::string out;
  std::string profile = "desk";
};

inline SolveOptions solve_options(const Common& c) {
  SolveOptions so;
  so.seed = c.seed;
  so.workers = c.workers;
  return so;
}

inline Polynomial boundary_of(const NetworkParams& net, const std::vector<std::size_t>& classes) {
  return boundary_polynomial(net, classes.at(0), classes.at(1));
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exact robustness certification and ED-degree analysis for polynomial networks", "algver"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  detail::Common common;
  app.add_option("--seed", common.seed, "root seed for every random draw")->capture_default_str();
  app.add_option("--workers", common.workers, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("-o,--out", common.out, "output file (default: stdout)");
  app.add_option("--profile", common.profile, "benchmark sizes: desk or paper")
      ->check(CLI::IsMember({"desk", "paper"}))
      ->capture_default_str();

  std::function<int()> action;

  // verify / margin
  std::string net_path, point_text;
  double eps = 0;
  bool full_kkt = false;
  auto* verify = app.add_subcommand("verify", "certify the eps-ball around a point; exit 2 when falsified");
  verify->add_option("--net", net_path, "network JSON")->required()->check(CLI::ExistingFile);
  verify->add_option("--point", point_text, "comma-separated input point")->required();
  verify->add_option("--eps", eps, "ball radius")->required()->check(CLI::NonNegativeNumber);
  verify->callback([&] {
    action = [&] {
      const auto net = load_network(net_path);
      CriticalOptions opts;
      opts.solve = detail::solve_options(common);
      const auto r = certify(net, detail::parse_point(point_text), eps, opts);
      auto j = to_json(r);
      j["seed"] = common.seed;
      detail::emit(detail::dump(j), common.out, out);
      return *r.verdict == Verdict::verified ? exit_ok : exit_falsified;
    };
  });

  auto* margin = app.add_subcommand("margin", "robustness margin at a point");
  margin->add_option("--net", net_path, "network JSON")->required()->check(CLI::ExistingFile);
  margin->add_option("--point", point_text, "comma-separated input point")->required();
  margin->add_flag("--full-kkt", full_kkt, "also solve the full KKT systems");
  margin->callback([&] {
    action = [&] {
      const auto net = load_network(net_path);
      const auto xi = detail::parse_point(point_text);
      CriticalOptions opts;
      opts.solve = detail::solve_options(common);
      auto j = to_json(compute_margin(net, xi, opts));
      if (full_kkt) j["margin_full_kkt"] = algver::detail::margin_json(margin_full_kkt(net, xi, opts));
      j["seed"] = common.seed;
      detail::emit(detail::dump(j), common.out, out);
      return exit_ok;
    };
  });

  // ed-degree / ed-formula
  std::vector<std::size_t> classes = {0, 1};
  std::size_t trials = 5;
  auto* ed = app.add_subcommand("ed-degree", "numeric ED degree of a decision boundary");
  ed->add_option("--net", net_path, "network JSON")->required()->check(CLI::ExistingFile);
  ed->add_option("--classes", classes, "the two classes of the boundary")->expected(2)->capture_default_str();
  ed->add_option("--trials", trials, "generic data points")->capture_default_str()->check(CLI::PositiveNumber);
  ed->callback([&] {
    action = [&] {
      const auto net = load_network(net_path);
      auto r = ed_degree_numeric(detail::boundary_of(net, classes), trials, common.seed,
                                 detail::solve_options(common));
      if (net.arch.hidden_layers() == 1) {
        r.formula_value = ed_degree_shallow(net.arch.input_dim(), net.arch.dims[1], net.arch.degree);
        r.agreement = *r.formula_value == r.numeric_count;
      }
      auto j = to_json(r);
      j["seed"] = common.seed;
      detail::emit(detail::dump(j), common.out, out);
      return exit_ok;
    };
  });

  std::vector<std::uint64_t> shallow, bottleneck, deep;
  auto* formula = app.add_subcommand("ed-formula", "closed-form ED degrees");
  auto* f_sh = formula->add_option("--shallow", shallow, "n h d")->expected(3);
  auto* f_bn = formula->add_option("--bottleneck", bottleneck, "n s d")->expected(3);
  auto* f_dp = formula->add_option("--deep", deep, "n s d")->expected(3);
  f_sh->excludes(f_bn)->excludes(f_dp);
  f_bn->excludes(f_dp);
  formula->require_option(1);
  formula->callback([&] {
    action = [&] {
      std::uint64_t v = 0;
      if (!shallow.empty()) v = ed_degree_shallow(shallow[0], shallow[1], shallow[2]);
      if (!bottleneck.empty()) v = ed_degree_bottleneck(bottleneck[0], bottleneck[1], bottleneck[2]);
      if (!deep.empty()) v = ed_degree_deep_generic(deep[0], deep[1], deep[2]);
      detail::emit(std::to_string(v) + "\n", common.out, out);
      return exit_ok;
    };
  });

  // discriminant probe
  double lo = -3, hi = 3;
  std::size_t steps = 20;
  bool with_fixture = false;
  auto* disc = app.add_subcommand("discriminant", "ED discriminant tools");
  disc->require_subcommand(1);
  auto* probe = disc->add_subcommand("probe", "real critical-point counts on a grid of data points (CSV)");
  probe->add_option("--net", net_path, "network JSON with two inputs")->required()->check(CLI::ExistingFile);
  probe->add_option("--classes", classes, "the two classes of the boundary")->expected(2);
  probe->add_option("--lo", lo)->capture_default_str();
  probe->add_option("--hi", hi)->capture_default_str();
  probe->add_option("--steps", steps)->capture_default_str()->check(CLI::PositiveNumber);
  probe->add_flag("--fixture-sign", with_fixture, "sign column from the embedded sextic of the first example");
  probe->callback([&] {
    action = [&] {
      const auto net = load_network(net_path);
      std::function<double(double, double)> sign;
      if (with_fixture) sign = discriminant_fixture_eval;
      const auto rows = discriminant_probe(detail::boundary_of(net, classes), lo, hi, steps, sign,
                                           detail::solve_options(common));
      std::ostringstream os;
      os << "# seed=" << common.seed << "\nu1,u2,sign,real_count\n";
      for (const auto& r : rows) os << detail::num(r.u1) << ',' << detail::num(r.u2) << ',' << r.sign << ',' << r.real_count << '\n';
      detail::emit(os.str(), common.out, out);
      return exit_ok;
    };
  });

  // quadric analyze / param-disc scan
  auto* quad = app.add_subcommand("quadric", "quadric boundary analysis");
  quad->require_subcommand(1);
  auto* analyze = quad->add_subcommand("analyze", "rank case, ED degree and discriminants of a quadric boundary");
  analyze->add_option("--net", net_path, "network JSON with a degree-2 boundary")->required()->check(CLI::ExistingFile);
  analyze->add_option("--classes", classes, "the two classes of the boundary")->expected(2);
  analyze->callback([&] {
    action = [&] {
      const auto net = load_network(net_path);
      auto j = to_json(quadric_ed_degree(extract_quadric(detail::boundary_of(net, classes))));
      j["seed"] = common.seed;
      detail::emit(detail::dump(j), common.out, out);
      return exit_ok;
    };
  });

  std::vector<std::size_t> param_idx = {0, 1};
  auto* pdisc = app.add_subcommand("param-disc", "parameter discriminant tools");
  pdisc->require_subcommand(1);
  auto* scan = pdisc->add_subcommand("scan", "discriminant components and ED degree over a 2D parameter slice (CSV)");
  scan->add_option("--net", net_path, "base network JSON with a degree-2 boundary")->required()->check(CLI::ExistingFile);
  scan->add_option("--params", param_idx, "two indices into the flattened parameters")->expected(2)->capture_default_str();
  scan->add_option("--lo", lo)->capture_default_str();
  scan->add_option("--hi", hi)->capture_default_str();
  scan->add_option("--steps", steps)->capture_default_str()->check(CLI::PositiveNumber);
  scan->callback([&] {
    action = [&] {
      auto net = load_network(net_path);
      auto theta = net.flatten();
      for (auto k : param_idx) {
        if (k >= theta.size()) throw DimensionError("parameter index " + std::to_string(k) + " out of range");
      }
      std::ostringstream os;
      os << "# seed=" << common.seed << "\np1,p2,det_A,det_M,eigen_disc,delta,sing,par,circ,case,ed_degree\n";
      const double denom = steps > 1 ? static_cast<double>(steps - 1) : 1.0;
      for (std::size_t i = 0; i < steps; ++i) {
        for (std::size_t k = 0; k < steps; ++k) {
          theta[param_idx[0]] = lo + (hi - lo) * static_cast<double>(i) / denom;
          theta[param_idx[1]] = lo + (hi - lo) * static_cast<double>(k) / denom;
          net.unflatten(theta);
          const auto B = detail::boundary_of(net, classes);
          os << detail::num(theta[param_idx[0]]) << ',' << detail::num(theta[param_idx[1]]) << ',';
          if (B.degree() != 2) {
            os << ",,,,,,,degree_" << B.degree() << ",\n";
            continue;
          }
          const auto q = extract_quadric(B);
          const auto d = parameter_discriminant(q);
          os << detail::num(d.det_A) << ',' << detail::num(d.det_M) << ',' << detail::num(d.eigen_disc) << ','
             << detail::num(d.delta) << ',';
          for (int c = 0; c < 3; ++c) os << (d.conic ? detail::num((*d.conic)[c]) : "") << ',';
          try {
            const auto r = quadric_ed_degree(q);
            os << to_string(r.rank_case) << ',' << r.ed_degree << '\n';
          } catch (const QuadricRankError&) {
            os << "none,\n";
          }
        }
      }
      detail::emit(os.str(), common.out, out);
      return exit_ok;
    };
  });

  // kac-rice
  unsigned d = 2;
  std::size_t width = 2000, samples = 500;
  auto* kr = app.add_subcommand("kac-rice", "expected real ED degree of random shallow networks");
  kr->require_subcommand(1);
  auto* expected = kr->add_subcommand("expected", "closed form d/sqrt(2d-1)");
  expected->add_option("--d", d, "activation degree")->required()->check(CLI::PositiveNumber);
  expected->callback([&] {
    action = [&] {
      detail::emit(detail::num(expected_real_ed(d)) + "\n", common.out, out);
      return exit_ok;
    };
  });
  auto* simulate = kr->add_subcommand("simulate", "Monte-Carlo real-root counts (CSV)");
  simulate->add_option("--d", d, "activation degree")->required()->check(CLI::Range(1U, 20U));
  simulate->add_option("--width", width, "hidden units m")->capture_default_str()->check(CLI::PositiveNumber);
  simulate->add_option("--samples", samples)->capture_default_str()->check(CLI::PositiveNumber);
  simulate->callback([&] {
    action = [&] {
      const auto e = mc_simulate(d, width, samples, common.seed, common.workers);
      std::ostringstream os;
      os << "d,m,sample_id,count\n";
      for (std::size_t i = 0; i < e.counts.size(); ++i) os << d << ',' << width << ',' << i << ',' << e.counts[i] << '\n';
      os << d << ',' << width << ",mean," << detail::num(e.empirical_mean) << '\n';
      os << d << ',' << width << ",theory," << detail::num(e.theoretical) << '\n';
      os << d << ',' << width << ",seed," << common.seed << '\n';
      detail::emit(os.str(), common.out, out);
      return exit_ok;
    };
  });

  // bench
  std::size_t hidden = 6;
  unsigned degree = 2;
  double epsilon = 0.2;
  std::string suite_path;
  std::vector<std::string> report_paths;
  auto* bench = app.add_subcommand("bench", "soundness benchmark with planted counterexamples");
  bench->require_subcommand(1);
  auto* gen = bench->add_subcommand("gen", "generate a suite (JSON)");
  gen->add_option("--hidden", hidden)->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--degree", degree)->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--epsilon", epsilon)->capture_default_str()->check(CLI::PositiveNumber);
  gen->callback([&] {
    action = [&] {
      BenchConfig cfg = common.profile == "paper" ? BenchConfig::full(hidden, degree, epsilon)
                                                  : BenchConfig::desk(hidden, degree, epsilon);
      cfg.seed = common.seed;
      detail::emit(detail::dump(to_json(generate(cfg))), common.out, out);
      return exit_ok;
    };
  });
  auto* tr = bench->add_subcommand("train", "train the suite's network (network JSON)");
  tr->add_option("--suite", suite_path)->required()->check(CLI::ExistingFile);
  tr->callback([&] {
    action = [&] {
      const auto suite = suite_from_json(detail::read_json(suite_path));
      detail::emit(network_to_json(train(suite).params).dump(2) + "\n", common.out, out);
      return exit_ok;
    };
  });
  auto* brun = bench->add_subcommand("run", "certify every instance (report JSON); exit 1 on a soundness error");
  brun->add_option("--suite", suite_path)->required()->check(CLI::ExistingFile);
  brun->add_option("--net", net_path)->required()->check(CLI::ExistingFile);
  brun->callback([&] {
    action = [&] {
      const auto suite = suite_from_json(detail::read_json(suite_path));
      CriticalOptions opts;
      opts.solve = detail::solve_options(common);
      opts.solve.workers = 1;
      const auto report = run(suite, load_network(net_path), suite.config.epsilon, common.workers, opts);
      detail::emit(detail::dump(to_json(report)), common.out, out);
      const auto bad = report.soundness_violations();
      if (!bad.empty()) {
        err << "soundness error: " << bad.size() << " planted instance(s) reported verified\n";
        return exit_error;
      }
      return exit_ok;
    };
  });
  auto* rep = bench->add_subcommand("report", "table of falsified rates and times from run reports (CSV)");
  rep->add_option("reports", report_paths, "report JSON files")->required()->check(CLI::ExistingFile);
  rep->callback([&] {
    action = [&] {
      std::string csv = report_csv_header();
      for (const auto& p : report_paths) {
        const auto j = detail::read_json(p);
        std::vector<InstanceOutcome> outcomes;
        for (const auto& o : j.at("instances")) {
          InstanceOutcome io;
          io.id = o.at("id").get<std::size_t>();
          io.planted = o.at("planted").get<bool>();
          io.verdict = o.at("verdict").get<std::string>() == "verified" ? Verdict::verified : Verdict::falsified;
          io.seconds = o.at("seconds").get<double>();
          outcomes.push_back(io);
        }
        csv += report_csv_row(summarize(bench_config_from_json(j.at("config")), std::move(outcomes)));
      }
      detail::emit(csv, common.out, out);
      return exit_ok;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return exit_usage;
  }
  try {
    return action();
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return exit_usage;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_error;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_error;
  }
}

}  // namespace algver::cli
