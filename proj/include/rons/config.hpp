#pragma once

// Experiment configuration files: a strict TOML-subset reader (one level of
// [section] headers, `key = value` lines, `#` comments), dotted-path
// overrides for command-line `--set` flags, and a canonical echo whose
// re-parse yields an identical configuration. Unknown keys and sections are
// hard errors so a typo can never silently fall back to a default.

#include <climits>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rons/experiments.hpp"

namespace rons {

/// What the front end should do with a parsed experiment configuration.
enum class RunTask { evolve, frobenius_study };

struct RunConfig {
  ExperimentConfig experiment;
  RunTask task = RunTask::evolve;
};

/// Shortest decimal form that parses back to exactly the same double.
inline std::string full_precision(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace config_detail {

inline std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

/// Strings may be quoted (file syntax) or bare (command-line overrides).
inline std::string unquote(const std::string& raw, const std::string& key) {
  if (!raw.empty() && raw.front() == '"') {
    if (raw.size() < 2 || raw.back() != '"')
      throw std::invalid_argument("config: key '" + key + "' has an unterminated string");
    return raw.substr(1, raw.size() - 2);
  }
  return raw;
}

inline bool parse_bool(const std::string& raw, const std::string& key) {
  if (raw == "true") return true;
  if (raw == "false") return false;
  throw std::invalid_argument("config: key '" + key + "' expects true or false, got '" + raw +
                              "'");
}

inline double parse_double(const std::string& raw, const std::string& key) {
  char* end = nullptr;
  const double v = std::strtod(raw.c_str(), &end);
  if (end == raw.c_str() || *end != '\0')
    throw std::invalid_argument("config: key '" + key + "' expects a number, got '" + raw + "'");
  return v;
}

inline long long parse_integer(const std::string& raw, const std::string& key) {
  char* end = nullptr;
  const long long v = std::strtoll(raw.c_str(), &end, 10);
  if (end == raw.c_str() || *end != '\0')
    throw std::invalid_argument("config: key '" + key + "' expects an integer, got '" + raw +
                                "'");
  return v;
}

template <typename Enum>
struct EnumName {
  Enum value;
  const char* name;
};

template <typename Enum, std::size_t N>
Enum parse_enum(const std::string& raw, const std::string& key, const EnumName<Enum> (&table)[N]) {
  for (const auto& entry : table)
    if (raw == entry.name) return entry.value;
  std::string allowed;
  for (const auto& entry : table) {
    if (!allowed.empty()) allowed += ", ";
    allowed += entry.name;
  }
  throw std::invalid_argument("config: key '" + key + "' must be one of {" + allowed +
                              "}, got '" + raw + "'");
}

template <typename Enum, std::size_t N>
const char* enum_name(Enum value, const EnumName<Enum> (&table)[N]) {
  for (const auto& entry : table)
    if (value == entry.value) return entry.name;
  throw std::logic_error("config: enum value without a name");
}

template <typename Enum, std::size_t N>
std::string render_enum(Enum value, const EnumName<Enum> (&table)[N]) {
  return std::string("\"") + enum_name(value, table) + "\"";
}

inline constexpr EnumName<Problem> kProblemNames[] = {
    {Problem::fokker_planck, "fokker_planck"},
    {Problem::kuramoto_sivashinsky, "kuramoto_sivashinsky"},
};
inline constexpr EnumName<Method> kMethodNames[] = {
    {Method::srons, "srons"},
    {Method::crons, "crons"},
    {Method::monte_carlo, "monte_carlo"},
};
inline constexpr EnumName<RunTask> kTaskNames[] = {
    {RunTask::evolve, "evolve"},
    {RunTask::frobenius_study, "frobenius_study"},
};
inline constexpr EnumName<IntegratorConfig::Method> kIntegratorNames[] = {
    {IntegratorConfig::Method::dopri54, "dopri54"},
    {IntegratorConfig::Method::adams, "adams"},
};

struct KeyHandler {
  std::string name;  // canonical dotted name, e.g. "integrator.rtol"
  std::function<void(RunConfig&, const std::string& raw)> set;
  std::function<std::string(const RunConfig&)> render;
};

/// One handler per recognized key; parse, override, and echo all walk this
/// table so the three stay consistent by construction.
inline const std::vector<KeyHandler>& schema() {
  static const std::vector<KeyHandler> table = [] {
    std::vector<KeyHandler> t;
    auto add = [&t](std::string name, std::function<void(RunConfig&, const std::string&)> set,
                    std::function<std::string(const RunConfig&)> render) {
      t.push_back({std::move(name), std::move(set), std::move(render)});
    };
    auto add_double = [&add](const std::string& name, double ExperimentConfig::* field) {
      add(
          name,
          [name, field](RunConfig& c, const std::string& raw) {
            c.experiment.*field = parse_double(raw, name);
          },
          [field](const RunConfig& c) { return full_precision(c.experiment.*field); });
    };
    auto add_int = [&add](const std::string& name, int ExperimentConfig::* field) {
      add(
          name,
          [name, field](RunConfig& c, const std::string& raw) {
            const long long v = parse_integer(raw, name);
            if (v < INT_MIN || v > INT_MAX)
              throw std::invalid_argument("config: key '" + name + "' is out of range");
            c.experiment.*field = static_cast<int>(v);
          },
          [field](const RunConfig& c) { return std::to_string(c.experiment.*field); });
    };
    auto add_bool = [&add](const std::string& name, bool ExperimentConfig::* field) {
      add(
          name,
          [name, field](RunConfig& c, const std::string& raw) {
            c.experiment.*field = parse_bool(raw, name);
          },
          [field](const RunConfig& c) { return c.experiment.*field ? "true" : "false"; });
    };

    add(
        "problem",
        [](RunConfig& c, const std::string& raw) {
          c.experiment.problem = parse_enum(unquote(raw, "problem"), "problem", kProblemNames);
        },
        [](const RunConfig& c) { return render_enum(c.experiment.problem, kProblemNames); });
    add(
        "method",
        [](RunConfig& c, const std::string& raw) {
          c.experiment.method = parse_enum(unquote(raw, "method"), "method", kMethodNames);
        },
        [](const RunConfig& c) { return render_enum(c.experiment.method, kMethodNames); });
    add(
        "task",
        [](RunConfig& c, const std::string& raw) {
          c.task = parse_enum(unquote(raw, "task"), "task", kTaskNames);
        },
        [](const RunConfig& c) { return render_enum(c.task, kTaskNames); });
    add_int("modes", &ExperimentConfig::modes);
    add_bool("enforce_conservation", &ExperimentConfig::enforce_conservation);
    add_double("alpha", &ExperimentConfig::alpha);
    add_int("point_count", &ExperimentConfig::point_count);
    add_double("horizon", &ExperimentConfig::horizon);
    add_double("sample_interval", &ExperimentConfig::sample_interval);
    add_bool("resample_each_step", &ExperimentConfig::resample_each_step);
    add_double("divergence_stop", &ExperimentConfig::divergence_stop);
    add(
        "seed",
        [](RunConfig& c, const std::string& raw) {
          const long long v = parse_integer(raw, "seed");
          if (v < 0) throw std::invalid_argument("config: key 'seed' must be >= 0");
          c.experiment.seed = static_cast<std::uint64_t>(v);
        },
        [](const RunConfig& c) { return std::to_string(c.experiment.seed); });
    add(
        "integrator.method",
        [](RunConfig& c, const std::string& raw) {
          c.experiment.integrator.method =
              parse_enum(unquote(raw, "integrator.method"), "integrator.method", kIntegratorNames);
        },
        [](const RunConfig& c) {
          return render_enum(c.experiment.integrator.method, kIntegratorNames);
        });
    add(
        "integrator.rtol",
        [](RunConfig& c, const std::string& raw) {
          c.experiment.integrator.rtol = parse_double(raw, "integrator.rtol");
        },
        [](const RunConfig& c) { return full_precision(c.experiment.integrator.rtol); });
    add(
        "integrator.atol",
        [](RunConfig& c, const std::string& raw) {
          c.experiment.integrator.atol = parse_double(raw, "integrator.atol");
        },
        [](const RunConfig& c) { return full_precision(c.experiment.integrator.atol); });
    add(
        "integrator.max_steps",
        [](RunConfig& c, const std::string& raw) {
          const long long v = parse_integer(raw, "integrator.max_steps");
          if (v < 1) throw std::invalid_argument("config: key 'integrator.max_steps' must be >= 1");
          c.experiment.integrator.max_steps = static_cast<long>(v);
        },
        [](const RunConfig& c) { return std::to_string(c.experiment.integrator.max_steps); });
    return t;
  }();
  return table;
}

inline const KeyHandler& handler_for(const std::string& dotted) {
  for (const auto& h : schema())
    if (h.name == dotted) return h;
  throw std::invalid_argument("config: unknown key '" + dotted + "'");
}

/// Strip a trailing comment, respecting quoted strings.
inline std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

}  // namespace config_detail

/// Parse configuration text. Every key must be known, typed correctly, and
/// appear at most once; violations throw std::invalid_argument naming the key.
inline RunConfig parse_config_text(const std::string& text) {
  using namespace config_detail;
  RunConfig config;
  std::set<std::string> seen;
  std::string section;
  std::istringstream stream(text);
  std::string line;
  int line_number = 0;
  while (std::getline(stream, line)) {
    ++line_number;
    const std::string body = trim(strip_comment(line));
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']')
        throw std::invalid_argument("config: malformed section header on line " +
                                    std::to_string(line_number));
      section = trim(body.substr(1, body.size() - 2));
      if (section != "integrator")
        throw std::invalid_argument("config: unknown section '" + section + "'");
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: expected 'key = value' on line " +
                                  std::to_string(line_number));
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key.empty() || value.empty())
      throw std::invalid_argument("config: expected 'key = value' on line " +
                                  std::to_string(line_number));
    const std::string dotted = section.empty() ? key : section + "." + key;
    if (!seen.insert(dotted).second)
      throw std::invalid_argument("config: duplicate key '" + dotted + "'");
    handler_for(dotted).set(config, value);
  }
  return config;
}

inline RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str());
}

/// Apply one `key=value` override (dotted path for sectioned keys).
inline void apply_override(RunConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw std::invalid_argument("config: override '" + assignment + "' is not key=value");
  const std::string key = config_detail::trim(assignment.substr(0, eq));
  const std::string value = config_detail::trim(assignment.substr(eq + 1));
  if (value.empty())
    throw std::invalid_argument("config: override '" + assignment + "' is not key=value");
  config_detail::handler_for(key).set(config, value);
}

/// Canonical echo: every known key in schema order, full-precision values.
/// parse_config_text(render_config(c)) reproduces c exactly.
inline std::string render_config(const RunConfig& config) {
  std::string out;
  bool in_integrator = false;
  for (const auto& h : config_detail::schema()) {
    const bool sectioned = h.name.rfind("integrator.", 0) == 0;
    if (sectioned && !in_integrator) {
      out += "\n[integrator]\n";
      in_integrator = true;
    }
    const std::string key = sectioned ? h.name.substr(std::string("integrator.").size()) : h.name;
    out += key + " = " + h.render(config) + "\n";
  }
  return out;
}

/// Field-by-field equality through the canonical echo.
inline bool config_equal(const RunConfig& a, const RunConfig& b) {
  return render_config(a) == render_config(b);
}

}  // namespace rons
