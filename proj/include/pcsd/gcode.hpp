#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pcsd {

enum class CommandKind { RapidMove, LinearMove, SetFanSpeed, Other };

/// One G-code line. Moves and fan commands are decoded; anything else is kept
/// verbatim in `raw` and re-emitted byte-identical.
struct Command {
  CommandKind kind = CommandKind::Other;
  std::optional<double> x, y, z;
  std::optional<double> e;          // filament position, mm (absolute)
  std::optional<double> feed_rate;  // mm/min
  double fan_speed = 0.0;           // SetFanSpeed only, 0..255
  std::string comment;              // trailing ';' comment on decoded lines, without ';'
  std::string raw;                  // original line without terminator

  bool is_move() const { return kind == CommandKind::RapidMove || kind == CommandKind::LinearMove; }
  bool extrudes() const { return kind == CommandKind::LinearMove && e.has_value(); }

  /// Semantic equality: decoded fields for supported kinds, raw text otherwise.
  bool same_as(const Command& other) const;

  static Command rapid(std::optional<double> x, std::optional<double> y,
                       std::optional<double> z = std::nullopt,
                       std::optional<double> feed = std::nullopt);
};

struct LayerBoundary {
  std::size_t layer_index;
  std::size_t first_command;
  bool operator==(const LayerBoundary&) const = default;
};

/// Parsed G-code program. Immutable after construction.
class GCodeProgram {
 public:
  GCodeProgram() = default;
  /// Layers derived with detect_layers.
  explicit GCodeProgram(std::vector<Command> commands);
  /// Explicit layer table; validated (strictly increasing, in range).
  GCodeProgram(std::vector<Command> commands, std::vector<LayerBoundary> layers);

  const std::vector<Command>& commands() const { return commands_; }
  const std::vector<LayerBoundary>& layers() const { return layers_; }
  std::size_t size() const { return commands_.size(); }
  bool empty() const { return commands_.empty(); }
  std::size_t layer_count() const { return layers_.size(); }

  /// [first, last) command range of a layer. Throws out_of_range.
  std::pair<std::size_t, std::size_t> layer_range(std::size_t layer) const;
  /// Layer containing a command index, or nullopt for the preamble.
  std::optional<std::size_t> layer_of(std::size_t command_index) const;

  bool same_as(const GCodeProgram& other) const;

 private:
  std::vector<Command> commands_;
  std::vector<LayerBoundary> layers_;
};

/// Parses one line (1-based `line_number` for error messages).
Command parse_line(std::string_view line, std::size_t line_number);
GCodeProgram parse_gcode(std::string_view text);
GCodeProgram load_gcode(const std::string& path);

std::vector<LayerBoundary> detect_layers(const std::vector<Command>& commands);
inline std::vector<LayerBoundary> detect_layers(const GCodeProgram& program) {
  return detect_layers(program.commands());
}

std::string serialize_command(const Command& command);
std::string serialize(const GCodeProgram& program);
void save_gcode(const GCodeProgram& program, const std::string& path);

}  // namespace pcsd
