/**
 * @file model_io.hpp
 * @brief JSON model files: parsing, validation, serialization and content hashing.
 */
#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "momentprop/distributions.hpp"
#include "momentprop/errors.hpp"
#include "momentprop/expression.hpp"
#include "momentprop/system_model.hpp"

namespace momentprop {

using Json = nlohmann::json;

namespace io_detail {

inline const Json& require(const Json& j, const char* key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) {
    throw ValidationError("missing field '" + path + "." + key + "'");
  }
  return j.at(key);
}

inline double number(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ValidationError("field '" + path + "' must be a number");
  return j.get<double>();
}

inline std::size_t index(const Json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<long long>() < 0) {
    throw ValidationError("field '" + path + "' must be a non-negative integer");
  }
  return j.get<std::size_t>();
}

inline Matrix matrix(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ValidationError("field '" + path + "' must be a non-empty array of rows");
  const std::size_t rows = j.size();
  if (!j[0].is_array()) throw ValidationError("field '" + path + "' must be an array of arrays");
  const std::size_t cols = j[0].size();
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string rp = path + "[" + std::to_string(r) + "]";
    if (!j[r].is_array() || j[r].size() != cols) {
      throw ValidationError("field '" + rp + "' has " + std::to_string(j[r].size()) + " columns, expected " +
                            std::to_string(cols));
    }
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = number(j[r][c], rp + "[" + std::to_string(c) + "]");
    }
  }
  return m;
}

inline Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace io_detail

inline ScalarDistribution distribution_from_json(const Json& j, const std::string& path = "distribution") {
  using namespace io_detail;
  const Json& kind_j = require(j, "kind", path);
  if (!kind_j.is_string()) throw ValidationError("field '" + path + ".kind' must be a string");
  const std::string kind = kind_j.get<std::string>();
  try {
    if (kind == "point") return ScalarDistribution::point(number(require(j, "value", path), path + ".value"));
    if (kind == "uniform") {
      return ScalarDistribution::uniform(number(require(j, "lo", path), path + ".lo"),
                                         number(require(j, "hi", path), path + ".hi"));
    }
    if (kind == "gaussian") {
      return ScalarDistribution::gaussian(number(require(j, "mean", path), path + ".mean"),
                                          number(require(j, "stddev", path), path + ".stddev"));
    }
    if (kind == "truncated_gaussian") {
      return ScalarDistribution::truncated_gaussian(
          number(require(j, "mean", path), path + ".mean"), number(require(j, "stddev", path), path + ".stddev"),
          number(require(j, "lo", path), path + ".lo"), number(require(j, "hi", path), path + ".hi"));
    }
    if (kind == "finite") {
      const Json& vs = require(j, "values", path);
      const Json& ps = require(j, "probabilities", path);
      if (!vs.is_array() || !ps.is_array()) throw ValidationError("field '" + path + "' values/probabilities must be arrays");
      std::vector<double> values;
      std::vector<double> probs;
      for (std::size_t i = 0; i < vs.size(); ++i) values.push_back(number(vs[i], path + ".values"));
      for (std::size_t i = 0; i < ps.size(); ++i) probs.push_back(number(ps[i], path + ".probabilities"));
      return ScalarDistribution::finite(std::move(values), std::move(probs));
    }
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
  throw ValidationError("field '" + path + ".kind': unknown distribution kind '" + kind + "'");
}

inline Json distribution_to_json(const ScalarDistribution& d) {
  return std::visit(
      [](const auto& v) -> Json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, PointMass>) return {{"kind", "point"}, {"value", v.value}};
        if constexpr (std::is_same_v<T, Uniform>) return {{"kind", "uniform"}, {"lo", v.lo}, {"hi", v.hi}};
        if constexpr (std::is_same_v<T, Gaussian>) return {{"kind", "gaussian"}, {"mean", v.mean}, {"stddev", v.stddev}};
        if constexpr (std::is_same_v<T, TruncatedGaussian>) {
          return {{"kind", "truncated_gaussian"}, {"mean", v.mean}, {"stddev", v.stddev}, {"lo", v.lo}, {"hi", v.hi}};
        }
        if constexpr (std::is_same_v<T, FiniteDiscrete>) {
          return {{"kind", "finite"}, {"values", v.values}, {"probabilities", v.probabilities}};
        }
      },
      d.value());
}

inline Expr expr_from_json(const Json& j, const std::string& path) {
  using namespace io_detail;
  const Json& kind_j = require(j, "kind", path);
  if (!kind_j.is_string()) throw ValidationError("field '" + path + ".kind' must be a string");
  const std::string kind = kind_j.get<std::string>();
  if (kind == "const") return Expr::constant(number(require(j, "value", path), path + ".value"));
  if (kind == "source") return Expr::source(index(require(j, "index", path), path + ".index"));
  if (kind == "add" || kind == "mul") {
    const Json& args = require(j, "args", path);
    if (!args.is_array() || args.empty()) throw ValidationError("field '" + path + ".args' must be a non-empty array");
    std::vector<Expr> parsed;
    for (std::size_t i = 0; i < args.size(); ++i) {
      parsed.push_back(expr_from_json(args[i], path + ".args[" + std::to_string(i) + "]"));
    }
    return kind == "add" ? Expr::add(std::move(parsed)) : Expr::mul(std::move(parsed));
  }
  if (kind == "pow") {
    return Expr::pow(expr_from_json(require(j, "base", path), path + ".base"),
                     static_cast<unsigned>(index(require(j, "exponent", path), path + ".exponent")));
  }
  if (kind == "sin" || kind == "cos") {
    const std::size_t src = index(require(j, "source", path), path + ".source");
    const double scale = j.contains("scale") ? number(j.at("scale"), path + ".scale") : 1.0;
    const double offset = j.contains("offset") ? number(j.at("offset"), path + ".offset") : 0.0;
    return kind == "sin" ? Expr::sin(src, scale, offset) : Expr::cos(src, scale, offset);
  }
  throw ValidationError("field '" + path + ".kind': unknown expression kind '" + kind + "'");
}

inline Json expr_to_json(const Expr& e) {
  switch (e.kind()) {
    case Expr::Kind::constant:
      return {{"kind", "const"}, {"value", e.value()}};
    case Expr::Kind::source:
      return {{"kind", "source"}, {"index", e.source_index()}};
    case Expr::Kind::add:
    case Expr::Kind::mul: {
      Json args = Json::array();
      for (const auto& a : e.args()) args.push_back(expr_to_json(a));
      return {{"kind", e.kind() == Expr::Kind::add ? "add" : "mul"}, {"args", args}};
    }
    case Expr::Kind::pow:
      return {{"kind", "pow"}, {"base", expr_to_json(e.args().front())}, {"exponent", e.exponent()}};
    case Expr::Kind::sin:
    case Expr::Kind::cos:
      return {{"kind", e.kind() == Expr::Kind::sin ? "sin" : "cos"},
              {"source", e.source_index()},
              {"scale", e.scale()},
              {"offset", e.offset()}};
  }
  return {};
}

inline PolynomialSystemSpec model_from_json(const Json& j) {
  using namespace io_detail;
  if (!j.is_object()) throw ValidationError("model file must contain a JSON object");
  PolynomialSystemSpec spec;
  const Json& name = require(j, "name", "$");
  if (!name.is_string()) throw ValidationError("field '$.name' must be a string");
  spec.name = name.get<std::string>();
  const std::size_t n = index(require(j, "n", "$"), "$.n");
  const std::size_t degree = index(require(j, "d_S", "$"), "$.d_S");

  std::vector<ScalarDistribution> params;
  const Json& pj = require(j, "parameters", "$");
  if (!pj.is_array()) throw ValidationError("field '$.parameters' must be an array");
  for (std::size_t p = 0; p < pj.size(); ++p) {
    params.push_back(distribution_from_json(pj[p], "$.parameters[" + std::to_string(p) + "]"));
  }

  CoefficientModel coeffs;
  coeffs.n = n;
  coeffs.degree = degree;
  coeffs.params = params;
  const Json& fj = require(j, "F", "$");
  if (!fj.is_array() || fj.size() != degree + 1) {
    throw ValidationError("field '$.F' must list exactly d_S + 1 = " + std::to_string(degree + 1) + " entries");
  }
  for (std::size_t i = 0; i <= degree; ++i) {
    const std::string path = "$.F[" + std::to_string(i) + "]";
    if (!fj[i].is_object()) throw ValidationError("field '" + path + "' must be an object with const/linear");
    const auto rows = static_cast<Eigen::Index>(n);
    const auto cols = static_cast<Eigen::Index>(saturating_pow(n, i));
    Matrix c = fj[i].contains("const") ? matrix(fj[i].at("const"), path + ".const") : Matrix::Zero(rows, cols);
    std::vector<Matrix> lin(params.size(), Matrix::Zero(rows, cols));
    if (fj[i].contains("linear")) {
      const Json& lj = fj[i].at("linear");
      if (!lj.is_object()) throw ValidationError("field '" + path + ".linear' must be an object keyed by parameter index");
      for (const auto& [key, value] : lj.items()) {
        std::size_t p = 0;
        try {
          std::size_t used = 0;
          p = std::stoul(key, &used);
          if (used != key.size()) throw std::invalid_argument(key);
        } catch (const std::exception&) {
          throw ValidationError("field '" + path + ".linear': key '" + key + "' is not a parameter index");
        }
        if (p >= params.size()) {
          throw ValidationError("field '" + path + ".linear': parameter index " + key + " out of range");
        }
        lin[p] = matrix(value, path + ".linear." + key);
      }
    }
    coeffs.constants.push_back(std::move(c));
    coeffs.linear.push_back(std::move(lin));
  }
  spec.coeffs = std::move(coeffs);

  const Json& ij = require(j, "initial_state", "$");
  const Json& sj = require(ij, "sources", "$.initial_state");
  const Json& cj = require(ij, "components", "$.initial_state");
  if (!sj.is_array() || !cj.is_array()) throw ValidationError("initial_state sources/components must be arrays");
  for (std::size_t s = 0; s < sj.size(); ++s) {
    spec.init.sources.push_back(distribution_from_json(sj[s], "$.initial_state.sources[" + std::to_string(s) + "]"));
  }
  for (std::size_t c = 0; c < cj.size(); ++c) {
    spec.init.components.push_back(expr_from_json(cj[c], "$.initial_state.components[" + std::to_string(c) + "]"));
  }
  spec.validate();
  return spec;
}

inline Json model_to_json(const PolynomialSystemSpec& spec) {
  using namespace io_detail;
  Json j;
  j["name"] = spec.name;
  j["n"] = spec.coeffs.n;
  j["d_S"] = spec.coeffs.degree;
  j["parameters"] = Json::array();
  for (const auto& p : spec.coeffs.params) j["parameters"].push_back(distribution_to_json(p));
  j["F"] = Json::array();
  for (std::size_t i = 0; i <= spec.coeffs.degree; ++i) {
    Json f;
    f["const"] = matrix_to_json(spec.coeffs.constants[i]);
    f["linear"] = Json::object();
    for (std::size_t p = 0; p < spec.coeffs.params.size(); ++p) {
      if (!spec.coeffs.linear[i][p].isZero(0.0)) f["linear"][std::to_string(p)] = matrix_to_json(spec.coeffs.linear[i][p]);
    }
    j["F"].push_back(std::move(f));
  }
  Json init;
  init["sources"] = Json::array();
  for (const auto& s : spec.init.sources) init["sources"].push_back(distribution_to_json(s));
  init["components"] = Json::array();
  for (const auto& c : spec.init.components) init["components"].push_back(expr_to_json(c));
  j["initial_state"] = std::move(init);
  return j;
}

inline PolynomialSystemSpec parse_model(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ValidationError(std::string("model parse error: ") + e.what());
  }
  return model_from_json(j);
}

inline PolynomialSystemSpec load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open model file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  if (text.find('\0') != std::string::npos) throw ValidationError("model file '" + path + "' is binary, expected JSON text");
  try {
    return parse_model(text);
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

inline void save_model(const PolynomialSystemSpec& spec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write model file '" + path + "'");
  out << model_to_json(spec).dump(2) << "\n";
}

/// FNV-1a over the canonical JSON serialization.
inline std::uint64_t model_hash(const PolynomialSystemSpec& spec) {
  const std::string canonical = model_to_json(spec).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace momentprop
