/**
 * @file csv.hpp
 * @brief RFC-4180 CSV output with 17-significant-digit floats.
 */
#pragma once

#include <cmath>
#include <cstdio>
#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace momentprop {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  class Row {
   public:
    explicit Row(CsvWriter& w) : w_(w) {}
    Row(const Row&) = delete;
    Row& operator=(const Row&) = delete;
    ~Row() { w_.out_ << "\r\n"; }

    Row& operator<<(std::string_view field) {
      sep();
      w_.out_ << quote(field);
      return *this;
    }
    Row& operator<<(const std::string& field) { return *this << std::string_view(field); }
    Row& operator<<(const char* field) { return *this << std::string_view(field); }
    Row& operator<<(double v) {
      sep();
      w_.out_ << format_double(v);
      return *this;
    }
    template <typename Int>
      requires std::is_integral_v<Int>
    Row& operator<<(Int v) {
      sep();
      w_.out_ << v;
      return *this;
    }

   private:
    void sep() {
      if (!first_) w_.out_ << ',';
      first_ = false;
    }

    CsvWriter& w_;
    bool first_ = true;
  };

  Row row() { return Row(*this); }

  void header(std::initializer_list<std::string_view> names) {
    auto r = row();
    for (auto n : names) r << n;
  }

  void header(const std::vector<std::string>& names) {
    auto r = row();
    for (const auto& n : names) r << n;
  }

  void flush() { out_.flush(); }

 private:
  static std::string quote(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string q = "\"";
    for (char c : field) {
      if (c == '"') q += '"';
      q += c;
    }
    q += '"';
    return q;
  }

  std::ostream& out_;
};

}  // namespace momentprop
