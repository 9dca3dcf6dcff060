/**
 * @file expression.hpp
 * @brief Expression trees defining initial-state components from random sources.
 *
 * Grammar: const | source | add | mul | pow | sin(aff) | cos(aff), where the
 * trigonometric argument is scale * source + offset.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "momentprop/errors.hpp"

namespace momentprop {

class Expr {
 public:
  enum class Kind { constant, source, add, mul, pow, sin, cos };

  static Expr constant(double v) {
    Expr e(Kind::constant);
    e.value_ = v;
    return e;
  }
  static Expr source(std::size_t index) {
    Expr e(Kind::source);
    e.source_ = index;
    return e;
  }
  static Expr add(std::vector<Expr> args) { return nary(Kind::add, std::move(args)); }
  static Expr mul(std::vector<Expr> args) { return nary(Kind::mul, std::move(args)); }
  static Expr pow(Expr base, unsigned exponent) {
    Expr e(Kind::pow);
    e.exponent_ = exponent;
    e.args_.push_back(std::move(base));
    return e;
  }
  static Expr sin(std::size_t source, double scale = 1.0, double offset = 0.0) {
    return trig(Kind::sin, source, scale, offset);
  }
  static Expr cos(std::size_t source, double scale = 1.0, double offset = 0.0) {
    return trig(Kind::cos, source, scale, offset);
  }

  Kind kind() const noexcept { return kind_; }
  double value() const noexcept { return value_; }
  std::size_t source_index() const noexcept { return source_; }
  double scale() const noexcept { return scale_; }
  double offset() const noexcept { return offset_; }
  unsigned exponent() const noexcept { return exponent_; }
  const std::vector<Expr>& args() const noexcept { return args_; }

  double evaluate(const std::vector<double>& sources) const {
    switch (kind_) {
      case Kind::constant:
        return value_;
      case Kind::source:
        return sources.at(source_);
      case Kind::add: {
        double s = 0.0;
        for (const auto& a : args_) s += a.evaluate(sources);
        return s;
      }
      case Kind::mul: {
        double p = 1.0;
        for (const auto& a : args_) p *= a.evaluate(sources);
        return p;
      }
      case Kind::pow:
        return std::pow(args_.front().evaluate(sources), exponent_);
      case Kind::sin:
        return std::sin(scale_ * sources.at(source_) + offset_);
      case Kind::cos:
        return std::cos(scale_ * sources.at(source_) + offset_);
    }
    return 0.0;
  }

  /// Largest source index referenced, or -1 when the expression is constant.
  long max_source() const {
    long m = (kind_ == Kind::source || kind_ == Kind::sin || kind_ == Kind::cos) ? static_cast<long>(source_) : -1;
    for (const auto& a : args_) m = std::max(m, a.max_source());
    return m;
  }

  friend bool operator==(const Expr& a, const Expr& b) {
    return a.kind_ == b.kind_ && a.value_ == b.value_ && a.source_ == b.source_ && a.scale_ == b.scale_ &&
           a.offset_ == b.offset_ && a.exponent_ == b.exponent_ && a.args_ == b.args_;
  }

 private:
  explicit Expr(Kind k) : kind_(k) {}

  static Expr nary(Kind k, std::vector<Expr> args) {
    if (args.empty()) {
      throw ValidationError("add/mul expression needs at least one argument");
    }
    Expr e(k);
    e.args_ = std::move(args);
    return e;
  }

  static Expr trig(Kind k, std::size_t source, double scale, double offset) {
    Expr e(k);
    e.source_ = source;
    e.scale_ = scale;
    e.offset_ = offset;
    return e;
  }

  Kind kind_;
  double value_ = 0.0;
  std::size_t source_ = 0;
  double scale_ = 1.0;
  double offset_ = 0.0;
  unsigned exponent_ = 1;
  std::vector<Expr> args_;
};

// Sum-of-products normal form: every term is a coefficient times, per source,
// a power of the source and a product of sin/cos factors of affine arguments.
struct TrigFactor {
  bool is_sin = false;
  double scale = 1.0;
  double offset = 0.0;

  friend auto operator<=>(const TrigFactor&, const TrigFactor&) = default;
};

struct SourceFactor {
  unsigned power = 0;
  std::vector<TrigFactor> trig;  // kept sorted

  friend auto operator<=>(const SourceFactor&, const SourceFactor&) = default;
};

struct ExpandedTerm {
  double coeff = 1.0;
  std::map<std::size_t, SourceFactor> factors;
};

using ExpandedExpr = std::vector<ExpandedTerm>;

inline constexpr std::size_t kMaxExpandedTerms = 1'000'000;

inline ExpandedExpr multiply(const ExpandedExpr& a, const ExpandedExpr& b) {
  if (a.size() * b.size() > kMaxExpandedTerms) {
    throw SizeLimitError("initial-state expression expansion", a.size() * b.size(), kMaxExpandedTerms);
  }
  ExpandedExpr out;
  out.reserve(a.size() * b.size());
  for (const auto& ta : a) {
    for (const auto& tb : b) {
      ExpandedTerm t = ta;
      t.coeff *= tb.coeff;
      for (const auto& [src, fb] : tb.factors) {
        auto& f = t.factors[src];
        f.power += fb.power;
        f.trig.insert(f.trig.end(), fb.trig.begin(), fb.trig.end());
        std::sort(f.trig.begin(), f.trig.end());
      }
      out.push_back(std::move(t));
    }
  }
  return out;
}

/// Merges terms with identical factors.
inline ExpandedExpr combine(const ExpandedExpr& e) {
  std::map<std::map<std::size_t, SourceFactor>, double> merged;
  for (const auto& t : e) merged[t.factors] += t.coeff;
  ExpandedExpr out;
  out.reserve(merged.size());
  for (auto& [factors, coeff] : merged) {
    if (coeff != 0.0) out.push_back(ExpandedTerm{coeff, factors});
  }
  return out;
}

inline ExpandedExpr expand(const Expr& e) {
  switch (e.kind()) {
    case Expr::Kind::constant:
      return {ExpandedTerm{e.value(), {}}};
    case Expr::Kind::source: {
      ExpandedTerm t;
      t.factors[e.source_index()].power = 1;
      return {t};
    }
    case Expr::Kind::sin:
    case Expr::Kind::cos: {
      ExpandedTerm t;
      t.factors[e.source_index()].trig.push_back({e.kind() == Expr::Kind::sin, e.scale(), e.offset()});
      return {t};
    }
    case Expr::Kind::add: {
      ExpandedExpr out;
      for (const auto& a : e.args()) {
        auto part = expand(a);
        out.insert(out.end(), part.begin(), part.end());
      }
      return combine(out);
    }
    case Expr::Kind::mul: {
      ExpandedExpr out = {ExpandedTerm{}};
      for (const auto& a : e.args()) out = combine(multiply(out, expand(a)));
      return out;
    }
    case Expr::Kind::pow: {
      const ExpandedExpr base = expand(e.args().front());
      ExpandedExpr out = {ExpandedTerm{}};
      for (unsigned i = 0; i < e.exponent(); ++i) out = combine(multiply(out, base));
      return out;
    }
  }
  return {};
}

}  // namespace momentprop
