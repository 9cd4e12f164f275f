#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "pcsd/gcode.hpp"

namespace pcsd {

enum class AttackKind { Insert, Delete, Reorder, Void };

const char* attack_name(AttackKind kind);
std::optional<AttackKind> attack_from_name(const std::string& name);

/// Addresses a command by (layer, offset within the layer).
struct AttackSpec {
  AttackKind kind = AttackKind::Insert;
  std::size_t layer = 0;
  std::size_t position = 0;
  std::optional<Command> payload;          // Insert only
  std::optional<std::size_t> pair_offset;  // Reorder only

  void validate() const;
};

GCodeProgram inject_insert(const GCodeProgram& program, const AttackSpec& spec);
GCodeProgram inject_delete(const GCodeProgram& program, const AttackSpec& spec);
GCodeProgram inject_reorder(const GCodeProgram& program, const AttackSpec& spec);
GCodeProgram inject_void(const GCodeProgram& program, const AttackSpec& spec);

/// Dispatches on spec.kind.
GCodeProgram inject(const GCodeProgram& program, const AttackSpec& spec);
/// Applies specs in order; each is addressed against the previous result.
GCodeProgram inject_all(const GCodeProgram& program, const std::vector<AttackSpec>& specs);

/// Absolute command index for (layer, position). `allow_end` admits
/// position == layer size (insertion point after the last command).
std::size_t resolve_command(const GCodeProgram& program, std::size_t layer, std::size_t position,
                            bool allow_end = false);

}  // namespace pcsd
