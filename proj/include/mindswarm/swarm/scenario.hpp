#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "mindswarm/swarm/simulator.hpp"

// Scripted swarm runs: JSON scenario in, per-tick metrics CSV out.
namespace mindswarm::swarm {

struct ScriptedCommand {
  double t = 0.0;  // seconds from start
  Command command;
};

struct Scenario {
  SwarmParams params;
  std::uint64_t seed = 0;
  std::optional<std::vector<Vec3>> positions;  // replaces the random start when set
  std::optional<Vec3> base_point;
  std::optional<Vec3> operator_point;
  double duration_s = 30.0;
  std::vector<ScriptedCommand> commands;
};

struct SimEvent {
  std::int64_t tick = 0;
  Command command;
  bool applied = false;
  std::string reason;
};

struct MetricsRow {
  std::int64_t tick = 0;
  double time = 0.0;
  SwarmMetrics metrics;
  MissionMode mode = MissionMode::IDLE;
};

/// Stateful wrapper used by the scripted runner and the gateway tick loop.
class Simulator {
 public:
  Simulator(SwarmParams params, SwarmState state) : params_(params), state_(std::move(state)) { params_.validate(); }
  explicit Simulator(const SwarmParams& params, std::uint64_t seed = 0)
      : Simulator(params, initial_state(params, seed)) {}

  /// Applies a command. Illegal commands are recorded and leave the state unchanged.
  bool apply(const Command& cmd) {
    SimEvent ev{state_.tick, cmd, false, {}};
    try {
      apply_command(state_, cmd, params_);
      ev.applied = true;
    } catch (const Error& e) {
      ev.reason = std::string(to_string(e.code()));
    }
    events_.push_back(ev);
    return ev.applied;
  }

  void step() { swarm::step(state_, params_); }

  MetricsRow row() const {
    return {state_.tick, static_cast<double>(state_.tick) * params_.dt, metrics(state_, params_), state_.mode};
  }

  const SwarmState& state() const { return state_; }
  SwarmState& state() { return state_; }
  const SwarmParams& params() const { return params_; }
  const std::vector<SimEvent>& events() const { return events_; }

 private:
  SwarmParams params_;
  SwarmState state_;
  std::vector<SimEvent> events_;
};

inline Simulator make_simulator(const Scenario& sc) {
  SwarmState s = initial_state(sc.params, sc.seed);
  if (sc.positions) {
    require(sc.positions->size() == sc.params.n_agents, Errc::invalid_spec,
            "scenario lists " + std::to_string(sc.positions->size()) + " positions for " +
                std::to_string(sc.params.n_agents) + " agents");
    for (std::size_t i = 0; i < s.agents.size(); ++i) s.agents[i].position = (*sc.positions)[i];
  }
  if (sc.base_point) s.base_point = *sc.base_point;
  if (sc.operator_point) s.operator_point = *sc.operator_point;
  return Simulator(sc.params, std::move(s));
}

/// Runs the script. Commands due at or before a tick's start time are applied
/// before that tick is stepped. Rows cover ticks 0..N inclusive.
inline std::vector<MetricsRow> run_scenario(const Scenario& sc, Simulator* out = nullptr) {
  require(sc.duration_s > 0.0 && std::isfinite(sc.duration_s), Errc::invalid_spec, "duration must be positive");
  auto sim = make_simulator(sc);
  auto script = sc.commands;
  std::stable_sort(script.begin(), script.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
  const auto n_ticks = static_cast<std::int64_t>(std::llround(sc.duration_s / sc.params.dt));
  std::vector<MetricsRow> rows;
  rows.reserve(static_cast<std::size_t>(n_ticks) + 1);
  std::size_t next = 0;
  const double eps = 1e-9 * sc.params.dt;
  for (std::int64_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * sc.params.dt;
    while (next < script.size() && script[next].t <= t + eps) sim.apply(script[next++].command);
    rows.push_back(sim.row());
    if (k == n_ticks) break;
    sim.step();
  }
  if (out) *out = std::move(sim);
  return rows;
}

inline void write_csv(std::ostream& os, const std::vector<MetricsRow>& rows) {
  os << "tick,time,mean_pairwise,min_pairwise,clusters,mode,mean_speed\n";
  os << std::setprecision(10);
  for (const auto& r : rows)
    os << r.tick << ',' << r.time << ',' << r.metrics.mean_pairwise << ',' << r.metrics.min_pairwise << ','
       << r.metrics.clusters << ',' << to_string(r.mode) << ',' << r.metrics.mean_speed << '\n';
}

inline std::string csv_string(const std::vector<MetricsRow>& rows) {
  std::ostringstream os;
  write_csv(os, rows);
  return os.str();
}

// JSON

namespace detail {

inline Vec3 vec3_from_json(const nlohmann::json& j, const char* what) {
  require(j.is_array() && j.size() == 3, Errc::invalid_spec, std::string(what) + " must be [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace detail

inline void to_json(nlohmann::json& j, const SwarmParams& p) {
  j = {{"n_agents", p.n_agents}, {"w_coh", p.w_coh},   {"w_sep", p.w_sep}, {"w_align", p.w_align},
       {"w_goal", p.w_goal},     {"w_cmd", p.w_cmd},   {"r_sep", p.r_sep}, {"d_star", p.d_star},
       {"v_max", p.v_max},       {"v_cmd", p.v_cmd},   {"dt", p.dt},       {"rho", p.rho},
       {"init_box", p.init_box}};
}

inline void from_json(const nlohmann::json& j, SwarmParams& p) {
  require(j.is_object(), Errc::invalid_spec, "swarm params must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key == "n_agents") p.n_agents = value.get<std::size_t>();
    else if (key == "w_coh") p.w_coh = value.get<double>();
    else if (key == "w_sep") p.w_sep = value.get<double>();
    else if (key == "w_align") p.w_align = value.get<double>();
    else if (key == "w_goal") p.w_goal = value.get<double>();
    else if (key == "w_cmd") p.w_cmd = value.get<double>();
    else if (key == "r_sep") p.r_sep = value.get<double>();
    else if (key == "d_star") p.d_star = value.get<double>();
    else if (key == "v_max") p.v_max = value.get<double>();
    else if (key == "v_cmd") p.v_cmd = value.get<double>();
    else if (key == "dt") p.dt = value.get<double>();
    else if (key == "rho") p.rho = value.get<double>();
    else if (key == "init_box") p.init_box = value.get<double>();
    else fail(Errc::invalid_spec, "unknown swarm parameter '" + key + "'");
  }
}

/// {"seed", "params", "positions", "base", "operator", "duration_s",
///  "commands": [{"t", "paradigm", "label"}]}
inline Scenario scenario_from_json(const nlohmann::json& j) {
  require(j.is_object(), Errc::invalid_spec, "scenario must be a JSON object");
  Scenario sc;
  try {
    if (j.contains("params")) sc.params = j["params"].get<SwarmParams>();
    sc.seed = j.value("seed", std::uint64_t{0});
    sc.duration_s = j.value("duration_s", sc.duration_s);
    if (j.contains("positions")) {
      std::vector<Vec3> pos;
      for (const auto& pj : j["positions"]) pos.push_back(detail::vec3_from_json(pj, "position"));
      if (!j.contains("params") || !j["params"].contains("n_agents")) sc.params.n_agents = pos.size();
      sc.positions = std::move(pos);
    }
    if (j.contains("base")) sc.base_point = detail::vec3_from_json(j["base"], "base");
    if (j.contains("operator")) sc.operator_point = detail::vec3_from_json(j["operator"], "operator");
    for (const auto& cj : j.value("commands", nlohmann::json::array())) {
      ScriptedCommand c;
      c.t = cj.at("t").get<double>();
      require(c.t >= 0.0 && std::isfinite(c.t), Errc::invalid_spec, "command time must be non-negative");
      c.command.label = cj.at("label").get<std::string>();
      if (cj.contains("paradigm")) {
        c.command.paradigm = paradigm_from_string(cj["paradigm"].get<std::string>());
      } else {
        const auto p = paradigm_of_label(c.command.label);
        require(p.has_value(), Errc::invalid_spec, "unknown command label '" + c.command.label + "'");
        c.command.paradigm = *p;
      }
      sc.commands.push_back(std::move(c));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::invalid_spec, std::string("scenario: ") + e.what());
  }
  sc.params.validate();
  return sc;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream is(path);
  require(is.is_open(), Errc::io, "cannot open scenario '" + path + "'");
  const auto j = nlohmann::json::parse(is, nullptr, false);
  require(!j.is_discarded(), Errc::invalid_spec, "scenario '" + path + "' is not valid JSON");
  return scenario_from_json(j);
}

}  // namespace mindswarm::swarm
