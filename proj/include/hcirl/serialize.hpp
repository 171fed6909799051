#pragma once

// JSON forms of trajectories (one object per line) and policy checkpoints.

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>

#include "hcirl/errors.hpp"
#include "hcirl/mdp.hpp"
#include "hcirl/policy.hpp"
#include "hcirl/report.hpp"

namespace hcirl {

using Json = nlohmann::ordered_json;

inline Json to_json(const Trajectory& traj) {
  Json transitions = Json::array();
  for (const auto& t : traj.transitions) {
    transitions.push_back({{"state", {{"features", t.state.features}, {"turn", t.state.turn}}},
                           {"action", t.action.index},
                           {"reward", t.reward},
                           {"done", t.done}});
  }
  return {{"transitions", std::move(transitions)}, {"success", traj.success}};
}

inline Trajectory trajectory_from_json(const Json& j) {
  try {
    Trajectory traj;
    for (const auto& t : j.at("transitions")) {
      Transition tr;
      tr.state.features = t.at("state").at("features").get<std::vector<double>>();
      tr.state.turn = t.at("state").at("turn").get<int>();
      tr.action = ActionId{t.at("action").get<int>()};
      tr.reward = t.at("reward").get<double>();
      tr.done = t.at("done").get<bool>();
      traj.transitions.push_back(std::move(tr));
    }
    traj.success = j.at("success").get<bool>();
    return traj;
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("malformed trajectory JSON: ") + e.what());
  }
}

/// Single-line JSON, newline-terminated.
inline std::string trajectory_line(const Trajectory& traj) { return to_json(traj).dump() + "\n"; }

inline Json to_json(const PolicyParams& policy) {
  return {{"d", policy.dim}, {"num_actions", policy.num_actions}, {"theta", policy.theta}};
}

inline PolicyParams policy_from_json(const Json& j) {
  PolicyParams p;
  try {
    p.dim = j.at("d").get<std::size_t>();
    p.num_actions = j.at("num_actions").get<int>();
    p.theta = j.at("theta").get<std::vector<double>>();
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("malformed policy JSON: ") + e.what());
  }
  p.validate();
  return p;
}

inline void save_policy(const PolicyParams& policy, const std::filesystem::path& path) {
  write_file(path, to_json(policy).dump() + "\n");
}

inline PolicyParams load_policy(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw ValidationError("cannot parse " + path.string() + ": " + e.what());
  }
  return policy_from_json(j);
}

}  // namespace hcirl
