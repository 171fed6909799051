#pragma once

// Run configuration: flat INI sections [env], [train] and [run] with
// `key = value` lines. Resolution order is built-in defaults, then the file,
// then command-line overrides. The snapshot writer emits every key, so a
// snapshot parses back to the same manifest.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include "hcirl/baselines.hpp"
#include "hcirl/env.hpp"
#include "hcirl/errors.hpp"
#include "hcirl/report.hpp"
#include "hcirl/sweeps.hpp"
#include "hcirl/trainer.hpp"

namespace hcirl {

inline constexpr std::string_view kToolVersion = "hcirl 0.1.0";

struct RunManifest {
  std::string experiment = "default";
  EnvConfig env;
  TrainConfig train;
  AgentKind agent = AgentKind::ours;
  std::string out = "runs";
  std::size_t seeds = kDefaultSeedCount;
  SweepParameter param = SweepParameter::gamma;
  std::vector<double> grid;  // empty: default grid of `param`
  std::vector<AgentKind> agents{AgentKind::random, AgentKind::qlearn, AgentKind::raw_q,
                                AgentKind::ours};
  std::string version{kToolVersion};

  std::filesystem::path output_dir() const { return std::filesystem::path(out) / experiment; }
  std::vector<double> resolved_grid() const { return grid.empty() ? default_grid(param) : grid; }

  void validate() const {
    if (experiment.empty() || experiment.find_first_of("/\\") != std::string::npos ||
        experiment == "." || experiment == "..") {
      throw ValidationError("experiment must be a plain, non-empty name");
    }
    if (out.empty()) throw ValidationError("out must not be empty");
    if (seeds < 1) throw ValidationError("seeds must be at least 1");
    if (agents.empty()) throw ValidationError("agents must list at least one agent");
    env.validate();
    train.validate();
  }
};

inline std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

namespace detail {

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    out.push_back(trim(s.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

[[noreturn]] inline void type_error(std::string_view key, std::string_view expected,
                                    std::string_view got) {
  throw ValidationError("key '" + std::string(key) + "' expects " + std::string(expected) +
                        ", got '" + std::string(got) + "'");
}

inline double to_real(std::string_view key, std::string_view v) {
  double x = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || res.ec != std::errc{} || res.ptr != v.data() + v.size() || !std::isfinite(x)) {
    type_error(key, "a real number", v);
  }
  return x;
}

inline std::uint64_t to_u64(std::string_view key, std::string_view v) {
  std::uint64_t x = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
    type_error(key, "a non-negative integer", v);
  }
  return x;
}

inline int to_int(std::string_view key, std::string_view v) {
  int x = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
    type_error(key, "an integer", v);
  }
  return x;
}

inline std::string join_reals(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + format_double(xs[i]);
  return s;
}

inline std::string join_agents(const std::vector<AgentKind>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + to_string(xs[i]);
  return s;
}

}  // namespace detail

struct ConfigKey {
  std::string section;
  std::string name;
  std::function<std::string(const RunManifest&)> get;
  std::function<void(RunManifest&, std::string_view)> set;
};

/// Every accepted key, in snapshot order.
inline const std::vector<ConfigKey>& config_keys() {
  using namespace detail;
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    const auto real = [&k](std::string section, std::string name, auto member) {
      k.push_back({section, name,
                   [member](const RunManifest& m) { return format_double(member(m)); },
                   [member, name](RunManifest& m, std::string_view v) { member(m) = to_real(name, v); }});
    };
    const auto integer = [&k](std::string section, std::string name, auto member) {
      k.push_back({section, name,
                   [member](const RunManifest& m) { return std::to_string(member(m)); },
                   [member, name](RunManifest& m, std::string_view v) {
                     using T = std::remove_cvref_t<decltype(member(m))>;
                     if constexpr (std::is_same_v<T, int>) {
                       member(m) = to_int(name, v);
                     } else {
                       member(m) = static_cast<T>(to_u64(name, v));
                     }
                   }});
    };

    integer("env", "num_intents", [](auto& m) -> auto& { return m.env.num_intents; });
    integer("env", "num_actions", [](auto& m) -> auto& { return m.env.num_actions; });
    integer("env", "horizon", [](auto& m) -> auto& { return m.env.horizon; });
    real("env", "noise_prob", [](auto& m) -> auto& { return m.env.noise_prob; });
    real("env", "reward_noise_sigma", [](auto& m) -> auto& { return m.env.reward_noise_sigma; });
    real("env", "imbalance_skew", [](auto& m) -> auto& { return m.env.imbalance_skew; });
    real("env", "reward_correct", [](auto& m) -> auto& { return m.env.reward_correct; });
    real("env", "reward_incorrect", [](auto& m) -> auto& { return m.env.reward_incorrect; });
    real("env", "success_bonus", [](auto& m) -> auto& { return m.env.success_bonus; });
    integer("env", "success_threshold", [](auto& m) -> auto& { return m.env.success_threshold; });
    integer("env", "env_seed", [](auto& m) -> auto& { return m.env.env_seed; });

    real("train", "gamma", [](auto& m) -> auto& { return m.train.gamma; });
    real("train", "learning_rate", [](auto& m) -> auto& { return m.train.learning_rate; });
    integer("train", "batch_size", [](auto& m) -> auto& { return m.train.batch_size; });
    real("train", "eps0", [](auto& m) -> auto& { return m.train.schedule.eps0; });
    real("train", "eps_decay", [](auto& m) -> auto& { return m.train.schedule.decay; });
    real("train", "eps_min", [](auto& m) -> auto& { return m.train.schedule.eps_min; });
    integer("train", "max_iterations", [](auto& m) -> auto& { return m.train.max_iterations; });
    integer("train", "convergence_window", [](auto& m) -> auto& { return m.train.convergence_window; });
    real("train", "convergence_tol", [](auto& m) -> auto& { return m.train.convergence_tol; });
    k.push_back({"train", "advantage_mode",
                 [](const RunManifest& m) { return to_string(m.train.advantage_mode); },
                 [](RunManifest& m, std::string_view v) {
                   if (v == "advantage") m.train.advantage_mode = AdvantageMode::advantage;
                   else if (v == "raw_q") m.train.advantage_mode = AdvantageMode::raw_q;
                   else type_error("advantage_mode", "one of advantage, raw_q", v);
                 }});
    integer("train", "seed", [](auto& m) -> auto& { return m.train.seed; });
    real("train", "ridge", [](auto& m) -> auto& { return m.train.ridge; });
    integer("train", "n_eval", [](auto& m) -> auto& { return m.train.n_eval; });
    real("train", "q_learning_rate", [](auto& m) -> auto& { return m.train.q_learning_rate; });

    k.push_back({"run", "experiment", [](const RunManifest& m) { return m.experiment; },
                 [](RunManifest& m, std::string_view v) { m.experiment = std::string(v); }});
    k.push_back({"run", "agent", [](const RunManifest& m) { return to_string(m.agent); },
                 [](RunManifest& m, std::string_view v) { m.agent = parse_agent_kind(v); }});
    k.push_back({"run", "out", [](const RunManifest& m) { return m.out; },
                 [](RunManifest& m, std::string_view v) { m.out = std::string(v); }});
    integer("run", "seeds", [](auto& m) -> auto& { return m.seeds; });
    k.push_back({"run", "param", [](const RunManifest& m) { return to_string(m.param); },
                 [](RunManifest& m, std::string_view v) { m.param = parse_sweep_parameter(v); }});
    k.push_back({"run", "grid", [](const RunManifest& m) { return join_reals(m.grid); },
                 [](RunManifest& m, std::string_view v) {
                   m.grid.clear();
                   for (const auto& item : split_list(v)) m.grid.push_back(to_real("grid", item));
                 }});
    k.push_back({"run", "agents", [](const RunManifest& m) { return join_agents(m.agents); },
                 [](RunManifest& m, std::string_view v) {
                   m.agents.clear();
                   for (const auto& item : split_list(v)) m.agents.push_back(parse_agent_kind(item));
                 }});
    return k;
  }();
  return keys;
}

inline const ConfigKey* find_key(std::string_view name) {
  for (const auto& k : config_keys()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

/// Nearest known key by edit distance (first one in table order on ties).
inline std::string nearest_key(std::string_view name) {
  const ConfigKey* best = nullptr;
  std::size_t best_d = std::numeric_limits<std::size_t>::max();
  for (const auto& k : config_keys()) {
    const std::size_t d = edit_distance(name, k.name);
    if (d < best_d) {
      best_d = d;
      best = &k;
    }
  }
  return best->name;
}

[[noreturn]] inline void unknown_key(std::string_view name) {
  throw ValidationError("unknown key '" + std::string(name) + "'; did you mean '" +
                        nearest_key(name) + "'?");
}

/// Applies `key = value` with the key's declared section checked.
inline void set_key(RunManifest& m, std::string_view section, std::string_view name,
                    std::string_view value) {
  const ConfigKey* key = find_key(name);
  if (key == nullptr) unknown_key(name);
  if (!section.empty() && key->section != section) {
    throw ValidationError("key '" + std::string(name) + "' belongs in [" + key->section +
                          "], not [" + std::string(section) + "]");
  }
  key->set(m, value);
}

/// Parses INI text onto `m`. `origin` names the source in error messages.
inline void apply_config_text(RunManifest& m, std::string_view text, const std::string& origin) {
  std::string section;
  std::map<std::string, int> seen;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = detail::trim(raw);
    const auto where = [&] { return origin + ":" + std::to_string(line_no) + ": "; };
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ValidationError(where() + "malformed section header");
      section = detail::trim(std::string_view(line).substr(1, line.size() - 2));
      if (section != "env" && section != "train" && section != "run") {
        throw ValidationError(where() + "unknown section [" + section +
                              "] (expected env, train or run)");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ValidationError(where() + "expected key = value");
    if (section.empty()) throw ValidationError(where() + "key outside of a section");
    const std::string key = detail::trim(std::string_view(line).substr(0, eq));
    const std::string value = detail::trim(std::string_view(line).substr(eq + 1));
    if (++seen[key] > 1) throw ValidationError(where() + "duplicate key '" + key + "'");
    try {
      set_key(m, section, key, value);
    } catch (const ValidationError& e) {
      throw ValidationError(where() + e.what());
    }
  }
}

/// Flag overrides as (key, value) pairs, applied in order after the file.
using Overrides = std::vector<std::pair<std::string, std::string>>;

/// Resolves defaults < file < overrides and validates the result. An empty
/// path means no file.
inline RunManifest parse_config(const std::filesystem::path& file, const Overrides& overrides = {}) {
  RunManifest m;
  if (!file.empty()) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(file, ec)) {
      throw IoError("config file not found: " + file.string());
    }
    apply_config_text(m, read_file(file), file.string());
  }
  for (const auto& [key, value] : overrides) set_key(m, "", key, value);
  m.validate();
  return m;
}

/// Every resolved key, re-readable by parse_config.
inline std::string snapshot(const RunManifest& m) {
  std::string out = "# " + m.version + " resolved configuration\n";
  std::string section;
  for (const auto& k : config_keys()) {
    if (k.section != section) {
      section = k.section;
      out += "\n[" + section + "]\n";
    }
    const std::string value = k.get(m);
    out += k.name + (value.empty() ? " =" : " = " + value) + "\n";
  }
  return out;
}

}  // namespace hcirl
