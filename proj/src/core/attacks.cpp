#include "pcsd/attacks.hpp"

#include <utility>

#include "pcsd/error.hpp"

namespace pcsd {
namespace {

void require_kind(const AttackSpec& spec, AttackKind kind) {
  if (spec.kind != kind) {
    throw Error(Errc::invalid_argument, std::string("expected a ") + attack_name(kind) + " spec, got " +
                                            attack_name(spec.kind));
  }
  spec.validate();
}

}  // namespace

const char* attack_name(AttackKind kind) {
  switch (kind) {
    case AttackKind::Insert: return "insert";
    case AttackKind::Delete: return "delete";
    case AttackKind::Reorder: return "reorder";
    case AttackKind::Void: return "void";
  }
  return "?";
}

std::optional<AttackKind> attack_from_name(const std::string& name) {
  for (auto k : {AttackKind::Insert, AttackKind::Delete, AttackKind::Reorder, AttackKind::Void}) {
    if (name == attack_name(k)) return k;
  }
  return std::nullopt;
}

void AttackSpec::validate() const {
  if (kind == AttackKind::Insert && !payload) {
    throw Error(Errc::invalid_argument, "insert attack requires a payload command");
  }
  if (kind != AttackKind::Insert && payload) {
    throw Error(Errc::invalid_argument, std::string("payload is only valid for insert, not ") + attack_name(kind));
  }
  if (kind == AttackKind::Reorder) {
    if (!pair_offset) throw Error(Errc::invalid_argument, "reorder attack requires a pair offset");
    if (*pair_offset == position) {
      throw Error(Errc::invalid_argument, "reorder offsets must differ (both are " + std::to_string(position) + ")");
    }
  } else if (pair_offset) {
    throw Error(Errc::invalid_argument, std::string("pair offset is only valid for reorder, not ") + attack_name(kind));
  }
}

std::size_t resolve_command(const GCodeProgram& program, std::size_t layer, std::size_t position, bool allow_end) {
  const auto [first, last] = program.layer_range(layer);
  const std::size_t size = last - first;
  if (position > size || (position == size && !allow_end)) {
    throw Error(Errc::out_of_range, "position " + std::to_string(position) + " out of range for layer " +
                                        std::to_string(layer) + " (" + std::to_string(size) + " commands)");
  }
  return first + position;
}

GCodeProgram inject_insert(const GCodeProgram& program, const AttackSpec& spec) {
  require_kind(spec, AttackKind::Insert);
  const std::size_t at = resolve_command(program, spec.layer, spec.position, true);
  std::vector<Command> commands = program.commands();
  commands.insert(commands.begin() + static_cast<std::ptrdiff_t>(at), *spec.payload);
  // The payload belongs to the target layer; later layers move down by one.
  std::vector<LayerBoundary> layers = program.layers();
  for (std::size_t i = spec.layer + 1; i < layers.size(); ++i) ++layers[i].first_command;
  return GCodeProgram(std::move(commands), std::move(layers));
}

GCodeProgram inject_delete(const GCodeProgram& program, const AttackSpec& spec) {
  require_kind(spec, AttackKind::Delete);
  const std::size_t at = resolve_command(program, spec.layer, spec.position);
  std::vector<Command> commands = program.commands();
  commands.erase(commands.begin() + static_cast<std::ptrdiff_t>(at));
  return GCodeProgram(std::move(commands));
}

GCodeProgram inject_reorder(const GCodeProgram& program, const AttackSpec& spec) {
  require_kind(spec, AttackKind::Reorder);
  const std::size_t a = resolve_command(program, spec.layer, spec.position);
  const std::size_t b = resolve_command(program, spec.layer, *spec.pair_offset);
  std::vector<Command> commands = program.commands();
  std::swap(commands[a], commands[b]);
  return GCodeProgram(std::move(commands), program.layers());
}

GCodeProgram inject_void(const GCodeProgram& program, const AttackSpec& spec) {
  require_kind(spec, AttackKind::Void);
  const std::size_t at = resolve_command(program, spec.layer, spec.position);
  const Command& target = program.commands()[at];
  if (!target.extrudes()) {
    throw Error(Errc::invalid_argument, "void target (layer " + std::to_string(spec.layer) + ", position " +
                                            std::to_string(spec.position) + ") is not an extruding G1: '" +
                                            target.raw + "'");
  }
  Command replaced = target;
  replaced.kind = CommandKind::RapidMove;
  replaced.e.reset();
  replaced.raw = serialize_command(replaced);
  std::vector<Command> commands = program.commands();
  commands[at] = std::move(replaced);
  return GCodeProgram(std::move(commands), program.layers());
}

GCodeProgram inject(const GCodeProgram& program, const AttackSpec& spec) {
  switch (spec.kind) {
    case AttackKind::Insert: return inject_insert(program, spec);
    case AttackKind::Delete: return inject_delete(program, spec);
    case AttackKind::Reorder: return inject_reorder(program, spec);
    case AttackKind::Void: return inject_void(program, spec);
  }
  throw Error(Errc::invalid_argument, "unknown attack kind");
}

GCodeProgram inject_all(const GCodeProgram& program, const std::vector<AttackSpec>& specs) {
  GCodeProgram out = program;
  for (const auto& s : specs) out = inject(out, s);
  return out;
}

}  // namespace pcsd
