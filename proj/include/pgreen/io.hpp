#pragma once

// Serialization helpers: shortest round-trip double formatting and a small
// CSV writer. All output is locale-independent (LF endings, '.' decimals).

#include <charconv>
#include <cstdint>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace pgreen {

// Shortest decimal form that parses back to the same IEEE double.
inline std::string format_double(double x) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  if (res.ec != std::errc{}) throw std::runtime_error("format_double: to_chars failed");
  return std::string(buf, res.ptr);
}

struct CsvWriter {
  explicit CsvWriter(std::ostream& os) : os_(os) {}

  void header(const std::vector<std::string>& names) {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (i) os_ << ',';
      os_ << names[i];
    }
    os_ << '\n';
  }

  void row(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) os_ << ',';
      os_ << format_double(values[i]);
    }
    os_ << '\n';
  }

  void mixed_row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) os_ << ',';
      os_ << cells[i];
    }
    os_ << '\n';
  }

 private:
  std::ostream& os_;
};

inline std::ofstream open_output(const std::string& path) {
  std::ofstream os(path, std::ios::binary);  // binary: keep LF endings everywhere
  if (!os) throw std::runtime_error("cannot open output file: " + path);
  return os;
}

}  // namespace pgreen
