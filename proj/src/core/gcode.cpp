#include "pcsd/gcode.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "pcsd/error.hpp"
#include "pcsd/kvconfig.hpp"

namespace pcsd {
namespace {

std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

struct Word {
  char letter;
  std::string_view value;
};

bool is_number_char(char c) {
  return std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '+';
}

// Splits "G1 X10Y5 E.4" into letter/value words. Values may be empty.
std::vector<Word> split_words(std::string_view body, std::size_t line_number) {
  std::vector<Word> words;
  std::size_t i = 0;
  while (i < body.size()) {
    const char c = body[i];
    if (c == ' ' || c == '\t') {
      ++i;
      continue;
    }
    if (!std::isalpha(static_cast<unsigned char>(c))) {
      throw ParseError(line_number, std::string("unexpected character '") + c + "'");
    }
    std::size_t j = i + 1;
    while (j < body.size() && body[j] != ' ' && body[j] != '\t' &&
           !std::isalpha(static_cast<unsigned char>(body[j]))) {
      ++j;
    }
    words.push_back({static_cast<char>(std::toupper(static_cast<unsigned char>(c))), body.substr(i + 1, j - i - 1)});
    i = j;
  }
  return words;
}

double parse_value(const Word& w, std::size_t line_number) {
  if (w.value.empty()) {
    throw ParseError(line_number, std::string("\"") + w.letter + "\" without value");
  }
  for (char c : w.value) {
    if (!is_number_char(c)) {
      throw ParseError(line_number, std::string("malformed value for \"") + w.letter + "\": '" +
                                        std::string(w.value) + "'");
    }
  }
  std::string_view v = w.value;
  if (v.front() == '+') v.remove_prefix(1);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw ParseError(line_number, std::string("malformed value for \"") + w.letter + "\": '" +
                                      std::string(w.value) + "'");
  }
  return out;
}

// Returns the command number for G/M words ("G01" -> 1), or -1 if it is not
// a plain non-negative integer.
int command_number(std::string_view v) {
  int n = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
  if (ec != std::errc{} || ptr != v.data() + v.size() || n < 0) return -1;
  return n;
}

Command passthrough(std::string_view line) {
  Command c;
  c.kind = CommandKind::Other;
  c.raw = std::string(line);
  return c;
}

bool same_opt(const std::optional<double>& a, const std::optional<double>& b) {
  return a.has_value() == b.has_value() && (!a || *a == *b);
}

bool is_layer_marker(const Command& c) {
  if (c.kind != CommandKind::Other) return false;
  const auto t = trim(c.raw);
  return t.rfind(";LAYER:", 0) == 0 || t.rfind(";LAYER_CHANGE", 0) == 0;
}

}  // namespace

bool Command::same_as(const Command& o) const {
  if (kind != o.kind) return false;
  switch (kind) {
    case CommandKind::Other:
      return raw == o.raw;
    case CommandKind::SetFanSpeed:
      return fan_speed == o.fan_speed;
    case CommandKind::RapidMove:
    case CommandKind::LinearMove:
      return same_opt(x, o.x) && same_opt(y, o.y) && same_opt(z, o.z) && same_opt(e, o.e) &&
             same_opt(feed_rate, o.feed_rate);
  }
  return false;
}

Command Command::rapid(std::optional<double> x, std::optional<double> y, std::optional<double> z,
                       std::optional<double> feed) {
  Command c;
  c.kind = CommandKind::RapidMove;
  c.x = x;
  c.y = y;
  c.z = z;
  c.feed_rate = feed;
  c.raw = serialize_command(c);
  return c;
}

Command parse_line(std::string_view line, std::size_t line_number) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

  std::string_view body = line;
  std::string comment;
  bool has_comment = false;
  if (const auto semi = body.find(';'); semi != std::string_view::npos) {
    comment = std::string(body.substr(semi + 1));
    has_comment = true;
    body = body.substr(0, semi);
  }
  if (const auto star = body.find('*'); star != std::string_view::npos) body = body.substr(0, star);
  body = trim(body);
  if (body.empty()) return passthrough(line);

  // Only G/M words decide whether the line is decoded. Anything we cannot
  // tokenize on an unsupported command stays passthrough.
  std::vector<Word> words;
  try {
    words = split_words(body, line_number);
  } catch (const ParseError&) {
    return passthrough(line);
  }
  std::size_t first = 0;
  if (!words.empty() && words[0].letter == 'N') first = 1;
  if (first >= words.size()) return passthrough(line);

  const Word& head = words[first];
  const int number = command_number(head.value);
  Command c;
  if (head.letter == 'G' && (number == 0 || number == 1)) {
    c.kind = number == 0 ? CommandKind::RapidMove : CommandKind::LinearMove;
    for (std::size_t i = first + 1; i < words.size(); ++i) {
      const Word& w = words[i];
      std::optional<double>* slot = nullptr;
      switch (w.letter) {
        case 'X': slot = &c.x; break;
        case 'Y': slot = &c.y; break;
        case 'Z': slot = &c.z; break;
        case 'E': slot = &c.e; break;
        case 'F': slot = &c.feed_rate; break;
        default:
          throw ParseError(line_number, std::string("unsupported parameter \"") + w.letter + "\" on G" +
                                            std::to_string(number));
      }
      if (slot->has_value()) {
        throw ParseError(line_number, std::string("duplicate parameter \"") + w.letter + "\"");
      }
      *slot = parse_value(w, line_number);
    }
    if (c.feed_rate && *c.feed_rate <= 0.0) {
      throw ParseError(line_number, "feed rate must be positive");
    }
    if (c.kind == CommandKind::RapidMove && c.e) {
      throw ParseError(line_number, "G0 cannot carry extrusion");
    }
  } else if (head.letter == 'M' && (number == 106 || number == 107)) {
    c.kind = CommandKind::SetFanSpeed;
    c.fan_speed = number == 107 ? 0.0 : 255.0;
    for (std::size_t i = first + 1; i < words.size(); ++i) {
      const Word& w = words[i];
      if (number == 106 && w.letter == 'S') {
        c.fan_speed = parse_value(w, line_number);
      } else if (w.letter == 'P') {
        parse_value(w, line_number);  // fan index, single-fan printers only
        return passthrough(line);
      } else {
        throw ParseError(line_number, std::string("unsupported parameter \"") + w.letter + "\" on M" +
                                          std::to_string(number));
      }
    }
    if (c.fan_speed < 0.0) throw ParseError(line_number, "fan speed must be non-negative");
  } else {
    return passthrough(line);
  }
  if (has_comment) c.comment = std::move(comment);
  c.raw = std::string(line);
  return c;
}

GCodeProgram::GCodeProgram(std::vector<Command> commands)
    : commands_(std::move(commands)), layers_(detect_layers(commands_)) {}

GCodeProgram::GCodeProgram(std::vector<Command> commands, std::vector<LayerBoundary> layers)
    : commands_(std::move(commands)), layers_(std::move(layers)) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].first_command >= commands_.size()) {
      throw Error(Errc::invalid_argument, "layer boundary beyond end of program");
    }
    if (i > 0 && (layers_[i].first_command <= layers_[i - 1].first_command ||
                  layers_[i].layer_index <= layers_[i - 1].layer_index)) {
      throw Error(Errc::invalid_argument, "layer boundaries must be strictly increasing");
    }
  }
}

std::pair<std::size_t, std::size_t> GCodeProgram::layer_range(std::size_t layer) const {
  if (layer >= layers_.size()) {
    throw Error(Errc::out_of_range, "layer " + std::to_string(layer) + " out of range (program has " +
                                        std::to_string(layers_.size()) + " layers)");
  }
  const std::size_t first = layers_[layer].first_command;
  const std::size_t last = layer + 1 < layers_.size() ? layers_[layer + 1].first_command : commands_.size();
  return {first, last};
}

std::optional<std::size_t> GCodeProgram::layer_of(std::size_t command_index) const {
  std::optional<std::size_t> found;
  for (std::size_t i = 0; i < layers_.size() && layers_[i].first_command <= command_index; ++i) found = i;
  return found;
}

bool GCodeProgram::same_as(const GCodeProgram& other) const {
  if (commands_.size() != other.commands_.size() || layers_ != other.layers_) return false;
  for (std::size_t i = 0; i < commands_.size(); ++i) {
    if (!commands_[i].same_as(other.commands_[i])) return false;
  }
  return true;
}

GCodeProgram parse_gcode(std::string_view text) {
  std::vector<Command> commands;
  std::size_t line_number = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    commands.push_back(parse_line(line, ++line_number));
  }
  return GCodeProgram(std::move(commands));
}

GCodeProgram load_gcode(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open G-code file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_gcode(ss.str());
}

std::vector<LayerBoundary> detect_layers(const std::vector<Command>& commands) {
  std::vector<LayerBoundary> layers;
  bool markers = false;
  for (const auto& c : commands) markers = markers || is_layer_marker(c);
  if (markers) {
    for (std::size_t i = 0; i < commands.size(); ++i) {
      if (is_layer_marker(commands[i])) layers.push_back({layers.size(), i});
    }
    return layers;
  }

  double highest = -std::numeric_limits<double>::infinity();
  bool any_z = false;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    const auto& c = commands[i];
    if (!c.is_move() || !c.z) continue;
    any_z = true;
    if (*c.z > highest) {
      highest = *c.z;
      layers.push_back({layers.size(), i});
    }
  }
  if (!any_z && !commands.empty()) layers.push_back({0, 0});
  return layers;
}

std::string serialize_command(const Command& c) {
  std::string out;
  switch (c.kind) {
    case CommandKind::Other:
      return c.raw;
    case CommandKind::SetFanSpeed:
      out = c.fan_speed == 0.0 ? "M107" : "M106 S" + format_number(c.fan_speed);
      break;
    case CommandKind::RapidMove:
    case CommandKind::LinearMove: {
      out = c.kind == CommandKind::RapidMove ? "G0" : "G1";
      const auto put = [&out](char letter, const std::optional<double>& v) {
        if (!v) return;
        out += ' ';
        out += letter;
        out += format_number(*v);
      };
      put('X', c.x);
      put('Y', c.y);
      put('Z', c.z);
      put('E', c.e);
      put('F', c.feed_rate);
      break;
    }
  }
  if (!c.comment.empty()) out += " ;" + c.comment;
  return out;
}

std::string serialize(const GCodeProgram& program) {
  std::string out;
  for (const auto& c : program.commands()) {
    out += serialize_command(c);
    out += '\n';
  }
  return out;
}

void save_gcode(const GCodeProgram& program, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot write G-code file '" + path + "'");
  out << serialize(program);
  if (!out) throw Error(Errc::io, "write failed for '" + path + "'");
}

}  // namespace pcsd
