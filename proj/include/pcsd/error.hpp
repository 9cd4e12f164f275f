#pragma once

#include <stdexcept>
#include <string>

namespace pcsd {

enum class Errc {
  invalid_argument = 1,
  parse = 2,
  io = 3,
  format = 4,
  out_of_range = 5,
  plan = 6,
  config = 7,
};

const char* errc_name(Errc code) noexcept;

/// Base exception for every failure raised by the library. The code maps
/// one-to-one onto the C API status values.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace pcsd
