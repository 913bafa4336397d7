#pragma once

#include "flowbench/common.hpp"

#include <istream>
#include <ostream>
#include <string>

namespace flowbench::io {

// Whitespace-separated text records. Doubles are written as hexadecimal
// floating-point literals so a save/load round trip is bit-exact.

void write_double(std::ostream& out, double value);
void write_vector(std::ostream& out, const Vector& v);
void write_matrix(std::ostream& out, const Matrix& m);
void write_string(std::ostream& out, const std::string& s);  // length-prefixed

class TokenReader {
public:
  explicit TokenReader(std::istream& in) : in_(in) {}

  std::string next();
  void expect(const std::string& word);
  long long next_int();
  double next_double();
  std::string next_string();
  Vector next_vector();
  Matrix next_matrix();

private:
  std::istream& in_;
};

}  // namespace flowbench::io
