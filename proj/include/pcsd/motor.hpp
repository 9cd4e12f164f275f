#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace pcsd {

enum class Motor : std::uint8_t { X = 0, Y = 1, Z = 2, E = 3 };

inline constexpr std::size_t kMotorCount = 4;
inline constexpr std::array<Motor, kMotorCount> kMotors{Motor::X, Motor::Y, Motor::Z, Motor::E};

/// Fixed-size container indexed by motor.
template <class T>
struct PerMotor {
  std::array<T, kMotorCount> values{};

  T& operator[](Motor m) { return values[static_cast<std::size_t>(m)]; }
  const T& operator[](Motor m) const { return values[static_cast<std::size_t>(m)]; }
  auto begin() { return values.begin(); }
  auto end() { return values.end(); }
  auto begin() const { return values.begin(); }
  auto end() const { return values.end(); }
  bool operator==(const PerMotor&) const = default;
};

constexpr std::size_t index_of(Motor m) { return static_cast<std::size_t>(m); }
char motor_letter(Motor m);
std::optional<Motor> motor_from_letter(std::string_view s);

}  // namespace pcsd
