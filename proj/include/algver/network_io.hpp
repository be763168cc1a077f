#pragma once

// Network JSON:
//   { "dims": [n, h1, ..., k], "degree": d,
//     "weights": [ [[row], ...], ... ], "biases": [ [...], ... ] }
// Fields are written in that order; numbers use round-trip precision.

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "algver/error.hpp"
#include "algver/network.hpp"

namespace algver {

using Json = nlohmann::ordered_json;

inline Json network_to_json(const NetworkParams& params) {
  Json j;
  j["dims"] = params.arch.dims;
  j["degree"] = params.arch.degree;
  Json weights = Json::array();
  for (const auto& W : params.weights) {
    Json m = Json::array();
    for (Eigen::Index i = 0; i < W.rows(); ++i) {
      Json row = Json::array();
      for (Eigen::Index c = 0; c < W.cols(); ++c) row.push_back(W(i, c));
      m.push_back(std::move(row));
    }
    weights.push_back(std::move(m));
  }
  j["weights"] = std::move(weights);
  Json biases = Json::array();
  for (const auto& b : params.biases) {
    Json v = Json::array();
    for (Eigen::Index i = 0; i < b.size(); ++i) v.push_back(b(i));
    biases.push_back(std::move(v));
  }
  j["biases"] = std::move(biases);
  return j;
}

namespace detail {

[[noreturn]] inline void field_error(const std::string& field, const std::string& msg) {
  throw FormatError("network field '" + field + "': " + msg);
}

inline double json_number(const Json& v, const std::string& field) {
  if (!v.is_number()) field_error(field, "expected a number");
  return v.get<double>();
}

}  // namespace detail

inline NetworkParams network_from_json(const Json& j) {
  if (!j.is_object()) throw FormatError("network JSON must be an object");
  for (const char* key : {"dims", "degree", "weights", "biases"}) {
    if (!j.contains(key)) detail::field_error(key, "missing");
  }
  NetworkParams p;
  const Json& dims = j["dims"];
  if (!dims.is_array() || dims.size() < 3) detail::field_error("dims", "expected an array [n, h..., k] of length >= 3");
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (!dims[i].is_number_integer() || dims[i].get<long long>() < 1) {
      detail::field_error("dims[" + std::to_string(i) + "]", "expected a positive integer");
    }
    p.arch.dims.push_back(dims[i].get<std::size_t>());
  }
  if (!j["degree"].is_number_integer() || j["degree"].get<long long>() < 1) {
    detail::field_error("degree", "expected a positive integer");
  }
  p.arch.degree = j["degree"].get<unsigned>();

  const Json& weights = j["weights"];
  const Json& biases = j["biases"];
  const std::size_t L = p.arch.layers();
  if (!weights.is_array() || weights.size() != L) {
    detail::field_error("weights", "expected " + std::to_string(L) + " matrices");
  }
  if (!biases.is_array() || biases.size() != L) {
    detail::field_error("biases", "expected " + std::to_string(L) + " vectors");
  }
  for (std::size_t l = 0; l < L; ++l) {
    const auto rows = p.arch.dims[l + 1];
    const auto cols = p.arch.dims[l];
    const std::string wname = "weights[" + std::to_string(l) + "]";
    const Json& W = weights[l];
    if (!W.is_array() || W.size() != rows) {
      detail::field_error(wname, "expected " + std::to_string(rows) + " rows (dims says " +
                                     std::to_string(rows) + "x" + std::to_string(cols) + ")");
    }
    Eigen::MatrixXd M(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows; ++i) {
      const std::string rname = wname + "[" + std::to_string(i) + "]";
      if (!W[i].is_array() || W[i].size() != cols) {
        detail::field_error(rname, "expected " + std::to_string(cols) + " columns");
      }
      for (std::size_t c = 0; c < cols; ++c) {
        M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
            detail::json_number(W[i][c], rname + "[" + std::to_string(c) + "]");
      }
    }
    p.weights.push_back(std::move(M));

    const std::string bname = "biases[" + std::to_string(l) + "]";
    const Json& b = biases[l];
    if (!b.is_array() || b.size() != rows) {
      detail::field_error(bname, "expected " + std::to_string(rows) + " entries");
    }
    Eigen::VectorXd v(static_cast<Eigen::Index>(rows));
    for (std::size_t i = 0; i < rows; ++i) {
      v(static_cast<Eigen::Index>(i)) = detail::json_number(b[i], bname + "[" + std::to_string(i) + "]");
    }
    p.biases.push_back(std::move(v));
  }
  p.validate();
  return p;
}

/// Parses network JSON text; syntax errors carry the parser's line/column.
inline NetworkParams parse_network(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("network JSON syntax error: ") + e.what());
  }
  return network_from_json(j);
}

inline NetworkParams load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open network file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_network(ss.str());
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

inline void save_network(const NetworkParams& params, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write network file '" + path + "'");
  out << network_to_json(params).dump(2) << '\n';
}

}  // namespace algver
