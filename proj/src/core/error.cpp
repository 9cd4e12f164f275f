#include "pcsd/error.hpp"

namespace pcsd {

const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "invalid argument";
    case Errc::parse: return "parse error";
    case Errc::io: return "i/o error";
    case Errc::format: return "format error";
    case Errc::out_of_range: return "out of range";
    case Errc::plan: return "planning error";
    case Errc::config: return "configuration error";
  }
  return "error";
}

ParseError::ParseError(std::size_t line, const std::string& what)
    : Error(Errc::parse, "line " + std::to_string(line) + ": " + what), line_(line) {}

}  // namespace pcsd
