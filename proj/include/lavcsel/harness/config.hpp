// Copyright 2026 The lavcsel Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Experiment configuration: a flat key = value file split into sections.
//
//   # comment
//   [reservoir]
//   power_ratio = 1.0
//   [sweep]
//   mode = grid
//   delta_lambda_nm = -0.5, 0, 0.5
//
// Every key not present keeps its default. Unknown sections or keys are
// rejected with their line number.

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "lavcsel/encoder.hpp"
#include "lavcsel/error.hpp"
#include "lavcsel/optics.hpp"
#include "lavcsel/training.hpp"

namespace lavcsel::harness {

enum class Experiment { train, consistency, dimensionality, probe };

inline std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::train: return "train";
    case Experiment::consistency: return "consistency";
    case Experiment::dimensionality: return "dimensionality";
    case Experiment::probe: return "probe";
  }
  return "train";
}

inline bool parse_experiment(std::string_view s, Experiment& out) {
  if (s == "train") out = Experiment::train;
  else if (s == "consistency") out = Experiment::consistency;
  else if (s == "dimensionality") out = Experiment::dimensionality;
  else if (s == "probe") out = Experiment::probe;
  else return false;
  return true;
}

enum class SweepMode {
  grid,    // cartesian product of all axes, first axis outermost
  oneway,  // each axis on its own, the others at their configured values
};

struct SweepAxis {
  std::string name;
  std::vector<double> values;

  bool operator==(const SweepAxis&) const = default;
};

struct EncoderSettings {
  Grid grid;
  int n_bits = 3;
  double ring_fraction = 0.5;

  bool operator==(const EncoderSettings&) const = default;
};

struct TrainingSettings {
  int epochs = 3000;
  int initial_flips = 35;
  double flip_decay = 0.995;
  int min_flips = 1;
  bool frozen_matrix = true;
  int train_length = 1000;
  int test_length = 1000;

  bool operator==(const TrainingSettings&) const = default;

  TrainingOptions options() const {
    TrainingOptions o;
    o.schedule = {initial_flips, flip_decay, min_flips};
    o.epochs = epochs;
    o.frozen_matrix = frozen_matrix;
    return o;
  }
};

struct MetricSettings {
  int sequence_length = 1000;
  int consistency_repetitions = 5;
  bool center_covariance = true;

  bool operator==(const MetricSettings&) const = default;
};

struct SweepSettings {
  SweepMode mode = SweepMode::grid;
  std::vector<SweepAxis> axes;

  bool operator==(const SweepSettings&) const = default;
};

struct RunSettings {
  Experiment experiment = Experiment::train;
  std::string recipe = "custom";
  std::uint64_t master_seed = 0;
  std::string output_dir = "results";
  int workers = 1;
  int repetitions = 1;
  bool record_timing = false;

  bool operator==(const RunSettings&) const = default;
};

struct ExperimentConfig {
  ReservoirParams reservoir;
  EncoderSettings encoder;
  TrainingSettings training;
  MetricSettings metrics;
  SweepSettings sweep;
  RunSettings run;

  bool operator==(const ExperimentConfig& o) const {
    const auto& a = reservoir;
    const auto& b = o.reservoir;
    const bool same_reservoir =
        a.bias_ratio == b.bias_ratio && a.power_ratio == b.power_ratio && a.delta_lambda_nm == b.delta_lambda_nm &&
        a.lock_width_nm == b.lock_width_nm && a.sat_scale == b.sat_scale && a.noise_scale == b.noise_scale &&
        a.gain == b.gain && a.mix_weight == b.mix_weight && a.diffusion_length_sites == b.diffusion_length_sites &&
        a.sites == b.sites && a.nodes == b.nodes && a.response == b.response;
    return same_reservoir && encoder == o.encoder && training == o.training && metrics == o.metrics &&
           sweep == o.sweep && run == o.run;
  }
};

// ---------------------------------------------------------------------------
// Value formatting / parsing

inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, end);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(std::string_view key, std::string_view s, std::size_t line) {
  s = trim(s);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ConfigError(std::string(key) + ": expected a number, got '" + std::string(s) + "'", line);
  }
  return v;
}

inline std::int64_t parse_int(std::string_view key, std::string_view s, std::size_t line) {
  s = trim(s);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError(std::string(key) + ": expected an integer, got '" + std::string(s) + "'", line);
  }
  return v;
}

inline std::uint64_t parse_u64(std::string_view key, std::string_view s, std::size_t line) {
  s = trim(s);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError(std::string(key) + ": expected an unsigned 64-bit integer, got '" + std::string(s) + "'", line);
  }
  return v;
}

inline bool parse_bool(std::string_view key, std::string_view s, std::size_t line) {
  s = trim(s);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError(std::string(key) + ": expected true or false, got '" + std::string(s) + "'", line);
}

inline void check(bool ok, std::string_view key, const std::string& rule, std::size_t line) {
  if (!ok) throw ConfigError(std::string(key) + " " + rule, line);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Field registry

/// One configurable scalar. `set_number` is present for fields that can be a
/// sweep axis.
struct ConfigField {
  std::string section;
  std::string key;
  std::string unit;
  std::function<void(ExperimentConfig&, std::string_view, std::size_t)> set;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, double)> set_number;
};

namespace detail {

template <typename Member>
ConfigField real_field(std::string section, std::string key, std::string unit, Member member,
                       std::function<bool(double)> ok, std::string rule) {
  ConfigField f;
  f.section = std::move(section);
  f.key = key;
  f.unit = std::move(unit);
  f.set = [key, member, ok, rule](ExperimentConfig& c, std::string_view v, std::size_t line) {
    const double x = parse_double(key, v, line);
    check(ok(x), key, rule, line);
    member(c) = x;
  };
  f.get = [member](const ExperimentConfig& c) { return format_double(member(c)); };
  f.set_number = [key, member, ok, rule](ExperimentConfig& c, double x) {
    check(ok(x), key, rule, 0);
    member(c) = x;
  };
  return f;
}

template <typename Member>
ConfigField int_field(std::string section, std::string key, Member member, std::function<bool(std::int64_t)> ok,
                      std::string rule) {
  ConfigField f;
  f.section = std::move(section);
  f.key = key;
  f.set = [key, member, ok, rule](ExperimentConfig& c, std::string_view v, std::size_t line) {
    const std::int64_t x = parse_int(key, v, line);
    check(ok(x), key, rule, line);
    member(c) = static_cast<int>(x);
  };
  f.get = [member](const ExperimentConfig& c) { return std::to_string(member(c)); };
  f.set_number = [key, member, ok, rule](ExperimentConfig& c, double x) {
    check(std::floor(x) == x && std::abs(x) < 1e9, key, "must be an integer", 0);
    check(ok(static_cast<std::int64_t>(x)), key, rule, 0);
    member(c) = static_cast<int>(x);
  };
  return f;
}

template <typename Member>
ConfigField bool_field(std::string section, std::string key, Member member) {
  ConfigField f;
  f.section = std::move(section);
  f.key = key;
  f.set = [key, member](ExperimentConfig& c, std::string_view v, std::size_t line) {
    member(c) = parse_bool(key, v, line);
  };
  f.get = [member](const ExperimentConfig& c) {
    return std::string(member(c) ? "true" : "false");
  };
  return f;
}

}  // namespace detail

inline const std::vector<ConfigField>& config_fields() {
  using detail::bool_field;
  using detail::int_field;
  using detail::real_field;
  auto any = [](double) { return true; };
  auto nonneg = [](double x) { return x >= 0.0; };
  auto positive = [](double x) { return x > 0.0; };
  static const std::vector<ConfigField> fields = [&] {
    std::vector<ConfigField> f;
    // [reservoir]
    f.push_back(real_field("reservoir", "bias_ratio", "I_bias/I_th", [](auto& c) -> auto& { return c.reservoir.bias_ratio; },
                           [](double x) { return x > 1.0; }, "must be > 1"));
    f.push_back(real_field("reservoir", "power_ratio", "P_inj/P_VCSEL", [](auto& c) -> auto& { return c.reservoir.power_ratio; },
                           nonneg, "must be >= 0"));
    f.push_back(real_field("reservoir", "delta_lambda_nm", "nm", [](auto& c) -> auto& { return c.reservoir.delta_lambda_nm; },
                           any, ""));
    f.push_back(real_field("reservoir", "lock_width_nm", "nm", [](auto& c) -> auto& { return c.reservoir.lock_width_nm; },
                           positive, "must be > 0"));
    f.push_back(real_field("reservoir", "sat_scale", "site intensity", [](auto& c) -> auto& { return c.reservoir.sat_scale; },
                           positive, "must be > 0"));
    f.push_back(real_field("reservoir", "noise_scale", "site intensity", [](auto& c) -> auto& { return c.reservoir.noise_scale; },
                           nonneg, "must be >= 0"));
    f.push_back(real_field("reservoir", "gain", "", [](auto& c) -> auto& { return c.reservoir.gain; },
                           positive, "must be > 0"));
    f.push_back(real_field("reservoir", "mix_weight", "", [](auto& c) -> auto& { return c.reservoir.mix_weight; },
                           [](double x) { return x >= 0.0 && x <= 1.0; }, "must be in [0, 1]"));
    f.push_back(real_field("reservoir", "diffusion_length_sites", "sites",
                           [](auto& c) -> auto& { return c.reservoir.diffusion_length_sites; }, any, ""));
    f.push_back(int_field("reservoir", "sites", [](auto& c) -> auto& { return c.reservoir.sites; },
                          [](std::int64_t x) { return x >= 1 && x <= 16384; }, "must be in [1, 16384]"));
    f.push_back(int_field("reservoir", "nodes", [](auto& c) -> auto& { return c.reservoir.nodes; },
                          [](std::int64_t x) { return x >= 1; }, "must be >= 1"));
    {
      ConfigField r;
      r.section = "reservoir";
      r.key = "response";
      r.set = [](ExperimentConfig& c, std::string_view v, std::size_t line) {
        v = detail::trim(v);
        if (v == "vcsel") c.reservoir.response = ResponseModel::vcsel;
        else if (v == "passive") c.reservoir.response = ResponseModel::passive;
        else throw ConfigError("response: expected vcsel or passive, got '" + std::string(v) + "'", line);
      };
      r.get = [](const ExperimentConfig& c) {
        return std::string(c.reservoir.response == ResponseModel::vcsel ? "vcsel" : "passive");
      };
      f.push_back(std::move(r));
    }
    // [encoder]
    f.push_back(int_field("encoder", "n_bits", [](auto& c) -> auto& { return c.encoder.n_bits; },
                          [](std::int64_t x) { return x >= 1 && x <= 16; }, "must be in [1, 16]"));
    f.push_back(real_field("encoder", "ring_fraction", "area fraction", [](auto& c) -> auto& { return c.encoder.ring_fraction; },
                           [](double x) { return x >= 0.0 && x <= 1.0; }, "must be in [0, 1]"));
    f.push_back(int_field("encoder", "grid_side_px", [](auto& c) -> auto& { return c.encoder.grid.side_px; },
                          [](std::int64_t x) { return x >= 1 && x <= 4096; }, "must be in [1, 4096]"));
    f.push_back(real_field("encoder", "disk_radius_px", "px", [](auto& c) -> auto& { return c.encoder.grid.disk_radius_px; },
                           positive, "must be > 0"));
    // [training]
    f.push_back(int_field("training", "epochs", [](auto& c) -> auto& { return c.training.epochs; },
                          [](std::int64_t x) { return x >= 1; }, "must be >= 1"));
    f.push_back(int_field("training", "initial_flips", [](auto& c) -> auto& { return c.training.initial_flips; },
                          [](std::int64_t x) { return x >= 1; }, "must be >= 1"));
    f.push_back(real_field("training", "flip_decay", "", [](auto& c) -> auto& { return c.training.flip_decay; },
                           [](double x) { return x > 0.0 && x <= 1.0; }, "must be in (0, 1]"));
    f.push_back(int_field("training", "min_flips", [](auto& c) -> auto& { return c.training.min_flips; },
                          [](std::int64_t x) { return x >= 1; }, "must be >= 1"));
    f.push_back(bool_field("training", "frozen_matrix", [](auto& c) -> auto& { return c.training.frozen_matrix; }));
    f.push_back(int_field("training", "train_length", [](auto& c) -> auto& { return c.training.train_length; },
                          [](std::int64_t x) { return x >= 1; }, "must be >= 1"));
    f.push_back(int_field("training", "test_length", [](auto& c) -> auto& { return c.training.test_length; },
                          [](std::int64_t x) { return x >= 1; }, "must be >= 1"));
    // [metrics]
    f.push_back(int_field("metrics", "sequence_length", [](auto& c) -> auto& { return c.metrics.sequence_length; },
                          [](std::int64_t x) { return x >= 2; }, "must be >= 2"));
    f.push_back(int_field("metrics", "consistency_repetitions",
                          [](auto& c) -> auto& { return c.metrics.consistency_repetitions; },
                          [](std::int64_t x) { return x >= 2; }, "must be >= 2"));
    f.push_back(bool_field("metrics", "center_covariance", [](auto& c) -> auto& { return c.metrics.center_covariance; }));
    // [run]
    {
      ConfigField e;
      e.section = "run";
      e.key = "experiment";
      e.set = [](ExperimentConfig& c, std::string_view v, std::size_t line) {
        if (!parse_experiment(detail::trim(v), c.run.experiment)) {
          throw ConfigError("experiment: expected train, consistency, dimensionality or probe, got '" +
                                std::string(detail::trim(v)) + "'",
                            line);
        }
      };
      e.get = [](const ExperimentConfig& c) { return to_string(c.run.experiment); };
      f.push_back(std::move(e));
    }
    {
      ConfigField r;
      r.section = "run";
      r.key = "recipe";
      r.set = [](ExperimentConfig& c, std::string_view v, std::size_t line) {
        const auto s = detail::trim(v);
        detail::check(!s.empty() && s.find_first_of(",\"") == std::string_view::npos, "recipe",
                      "must be a non-empty name without commas or quotes", line);
        c.run.recipe = std::string(s);
      };
      r.get = [](const ExperimentConfig& c) { return c.run.recipe; };
      f.push_back(std::move(r));
    }
    {
      ConfigField s;
      s.section = "run";
      s.key = "master_seed";
      s.set = [](ExperimentConfig& c, std::string_view v, std::size_t line) {
        c.run.master_seed = detail::parse_u64("master_seed", v, line);
      };
      s.get = [](const ExperimentConfig& c) { return std::to_string(c.run.master_seed); };
      f.push_back(std::move(s));
    }
    {
      ConfigField o;
      o.section = "run";
      o.key = "output_dir";
      o.set = [](ExperimentConfig& c, std::string_view v, std::size_t line) {
        const auto s = detail::trim(v);
        detail::check(!s.empty(), "output_dir", "must not be empty", line);
        c.run.output_dir = std::string(s);
      };
      o.get = [](const ExperimentConfig& c) { return c.run.output_dir; };
      f.push_back(std::move(o));
    }
    f.push_back(int_field("run", "workers", [](auto& c) -> auto& { return c.run.workers; },
                          [](std::int64_t x) { return x >= 1 && x <= 256; }, "must be in [1, 256]"));
    f.push_back(int_field("run", "repetitions", [](auto& c) -> auto& { return c.run.repetitions; },
                          [](std::int64_t x) { return x >= 1; }, "must be >= 1"));
    f.push_back(bool_field("run", "record_timing", [](auto& c) -> auto& { return c.run.record_timing; }));
    return f;
  }();
  return fields;
}

inline const ConfigField* find_field(std::string_view key) {
  for (const auto& f : config_fields()) {
    if (f.key == key) return &f;
  }
  return nullptr;
}

inline const ConfigField* find_field(std::string_view section, std::string_view key) {
  for (const auto& f : config_fields()) {
    if (f.section == section && f.key == key) return &f;
  }
  return nullptr;
}

/// Cross-field checks that a single key cannot express.
inline void validate(const ExperimentConfig& c) {
  try {
    c.reservoir.validate();
    c.encoder.grid.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  if (c.encoder.grid.disk_pixel_count() == 0) throw ConfigError("disk_radius_px leaves no pixel inside the disk");
  std::vector<std::string> seen;
  for (const auto& axis : c.sweep.axes) {
    const ConfigField* f = find_field(axis.name);
    if (!f || !f->set_number) throw ConfigError("sweep axis '" + axis.name + "' is not a numeric config field");
    if (axis.values.empty()) throw ConfigError("sweep axis '" + axis.name + "' has no values");
    if (std::find(seen.begin(), seen.end(), axis.name) != seen.end()) {
      throw ConfigError("sweep axis '" + axis.name + "' given twice");
    }
    seen.push_back(axis.name);
    for (double v : axis.values) {
      ExperimentConfig probe = c;
      f->set_number(probe, v);
    }
  }
}

inline ExperimentConfig parse_config_string(std::string_view text) {
  ExperimentConfig cfg;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find_first_of("#;"); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("malformed section header", line_no);
      section = std::string(detail::trim(line.substr(1, line.size() - 2)));
      static const char* kSections[] = {"reservoir", "encoder", "training", "metrics", "sweep", "run"};
      if (std::find(std::begin(kSections), std::end(kSections), section) == std::end(kSections)) {
        throw ConfigError("unknown section [" + section + "]", line_no);
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("expected key = value", line_no);
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string_view value = detail::trim(line.substr(eq + 1));
    if (section.empty()) throw ConfigError("key '" + key + "' outside of any section", line_no);

    if (section == "sweep") {
      if (key == "mode") {
        if (value == "grid") cfg.sweep.mode = SweepMode::grid;
        else if (value == "oneway") cfg.sweep.mode = SweepMode::oneway;
        else throw ConfigError("mode: expected grid or oneway, got '" + std::string(value) + "'", line_no);
        continue;
      }
      const ConfigField* f = find_field(key);
      if (!f || !f->set_number) throw ConfigError("unknown sweep axis '" + key + "'", line_no);
      SweepAxis axis{key, {}};
      std::string_view rest = value;
      while (!rest.empty()) {
        const auto comma = rest.find(',');
        const auto item = detail::trim(rest.substr(0, comma));
        const double v = detail::parse_double(key, item, line_no);
        ExperimentConfig probe = cfg;
        try {
          f->set_number(probe, v);
        } catch (const ConfigError& e) {
          throw ConfigError(e.what(), line_no);
        }
        axis.values.push_back(v);
        if (comma == std::string_view::npos) break;
        rest = rest.substr(comma + 1);
      }
      if (axis.values.empty()) throw ConfigError("sweep axis '" + key + "' has no values", line_no);
      for (const auto& a : cfg.sweep.axes) {
        if (a.name == key) throw ConfigError("sweep axis '" + key + "' given twice", line_no);
      }
      cfg.sweep.axes.push_back(std::move(axis));
      continue;
    }

    const ConfigField* f = find_field(section, key);
    if (!f) throw ConfigError("unknown key '" + key + "' in [" + section + "]", line_no);
    f->set(cfg, value, line_no);
  }
  validate(cfg);
  return cfg;
}

inline ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_string(ss.str());
}

/// Writes every field, so the output documents the full effective config and
/// parses back to an equal ExperimentConfig.
inline std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  std::string section;
  for (const auto& f : config_fields()) {
    if (f.section != section) {
      if (!section.empty()) out << '\n';
      section = f.section;
      out << '[' << section << "]\n";
    }
    out << f.key << " = " << f.get(cfg) << '\n';
  }
  out << "\n[sweep]\nmode = " << (cfg.sweep.mode == SweepMode::grid ? "grid" : "oneway") << '\n';
  for (const auto& axis : cfg.sweep.axes) {
    out << axis.name << " = ";
    for (std::size_t i = 0; i < axis.values.size(); ++i) out << (i ? ", " : "") << format_double(axis.values[i]);
    out << '\n';
  }
  return out.str();
}

}  // namespace lavcsel::harness
