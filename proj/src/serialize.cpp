#include "flowbench/serialize.hpp"

#include <fmt/format.h>

#include <cerrno>
#include <cstdlib>

namespace flowbench::io {

void write_double(std::ostream& out, double value) { out << fmt::format("{:a}", value); }

void write_vector(std::ostream& out, const Vector& v) {
  out << "vector " << v.size();
  for (Index i = 0; i < v.size(); ++i) {
    out << ' ';
    write_double(out, v(i));
  }
  out << '\n';
}

void write_matrix(std::ostream& out, const Matrix& m) {
  out << "matrix " << m.rows() << ' ' << m.cols();
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      out << ' ';
      write_double(out, m(r, c));
    }
  }
  out << '\n';
}

void write_string(std::ostream& out, const std::string& s) { out << s.size() << ':' << s; }

std::string TokenReader::next() {
  std::string token;
  if (!(in_ >> token)) throw Error("unexpected end of model file");
  return token;
}

void TokenReader::expect(const std::string& word) {
  const auto got = next();
  if (got != word) throw Error(fmt::format("model file: expected '{}', found '{}'", word, got));
}

long long TokenReader::next_int() {
  const auto token = next();
  char* end = nullptr;
  errno = 0;
  const long long v = std::strtoll(token.c_str(), &end, 10);
  if (errno != 0 || end != token.c_str() + token.size()) {
    throw Error(fmt::format("model file: '{}' is not an integer", token));
  }
  return v;
}

double TokenReader::next_double() {
  const auto token = next();
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end != token.c_str() + token.size()) throw Error(fmt::format("model file: '{}' is not a number", token));
  return v;
}

std::string TokenReader::next_string() {
  in_ >> std::ws;
  std::size_t len = 0;
  char colon = 0;
  if (!(in_ >> len) || !in_.get(colon) || colon != ':') throw Error("model file: malformed string");
  std::string s(len, '\0');
  if (len != 0 && !in_.read(s.data(), static_cast<std::streamsize>(len))) {
    throw Error("model file: truncated string");
  }
  return s;
}

Vector TokenReader::next_vector() {
  expect("vector");
  const auto n = next_int();
  if (n < 0) throw Error("model file: negative vector size");
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = next_double();
  return v;
}

Matrix TokenReader::next_matrix() {
  expect("matrix");
  const auto rows = next_int();
  const auto cols = next_int();
  if (rows < 0 || cols < 0) throw Error("model file: negative matrix shape");
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) m(r, c) = next_double();
  }
  return m;
}

}  // namespace flowbench::io
