#include "pcsd/motor.hpp"

namespace pcsd {

char motor_letter(Motor m) {
  switch (m) {
    case Motor::X: return 'X';
    case Motor::Y: return 'Y';
    case Motor::Z: return 'Z';
    case Motor::E: return 'E';
  }
  return '?';
}

std::optional<Motor> motor_from_letter(std::string_view s) {
  if (s.size() != 1) return std::nullopt;
  switch (s[0]) {
    case 'X': case 'x': return Motor::X;
    case 'Y': case 'y': return Motor::Y;
    case 'Z': case 'z': return Motor::Z;
    case 'E': case 'e': return Motor::E;
    default: return std::nullopt;
  }
}

}  // namespace pcsd
