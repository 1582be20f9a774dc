#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "mindswarm/error.hpp"
#include "mindswarm/paradigm.hpp"

// Point-mass flocking swarm driven by decoded commands. Fixed step, no
// randomness after initialisation.
namespace mindswarm::swarm {

using Vec3 = Eigen::Vector3d;

enum class Group : std::uint8_t { A, B };

enum class MissionMode { IDLE, EXECUTING, PAUSED, FOLLOW, RETURN, AT_BASE };

inline const char* to_string(MissionMode m) {
  switch (m) {
    case MissionMode::IDLE: return "IDLE";
    case MissionMode::EXECUTING: return "EXECUTING";
    case MissionMode::PAUSED: return "PAUSED";
    case MissionMode::FOLLOW: return "FOLLOW";
    case MissionMode::RETURN: return "RETURN";
    case MissionMode::AT_BASE: return "AT_BASE";
  }
  return "?";
}

struct Agent {
  int id = 0;
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Group group = Group::A;

  bool operator==(const Agent&) const = default;
};

struct SwarmParams {
  std::size_t n_agents = 8;
  double w_coh = 1.0;
  double w_sep = 2.5;
  double w_align = 0.8;
  double w_goal = 1.2;
  double w_cmd = 1.0;
  double r_sep = 2.0;
  double d_star = 6.0;
  double v_max = 5.0;
  double v_cmd = 2.0;
  double dt = 0.05;
  double rho = 1.0;
  double init_box = 20.0;  // edge of the random start cube

  void validate() const {
    require(n_agents >= 1, Errc::invalid_argument, "need at least one agent");
    for (double v : {w_coh, w_sep, w_align, w_goal, w_cmd, r_sep, d_star, v_max, v_cmd, dt, rho, init_box})
      require(v > 0.0 && std::isfinite(v), Errc::invalid_argument, "swarm parameters must be positive");
    require(dt <= 0.1, Errc::invalid_argument, "dt must not exceed 0.1 s");
  }
};

struct SwarmState {
  std::vector<Agent> agents;
  MissionMode mode = MissionMode::IDLE;
  Vec3 velocity_setpoint = Vec3::Zero();
  double d_star_current = 6.0;
  bool split_active = false;
  Vec3 split_axis = Vec3::UnitY();
  Vec3 base_point{0.0, 0.0, 10.0};
  Vec3 operator_point{25.0, 15.0, 10.0};
  std::int64_t tick = 0;
  std::uint64_t rng_seed = 0;

  bool operator==(const SwarmState&) const = default;
};

/// Agents uniformly placed in a cube of edge init_box resting 1 m above ground.
inline SwarmState initial_state(const SwarmParams& p, std::uint64_t seed) {
  p.validate();
  SwarmState s;
  s.rng_seed = seed;
  s.d_star_current = p.d_star;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.5 * p.init_box, 0.5 * p.init_box);
  for (std::size_t i = 0; i < p.n_agents; ++i) {
    Agent a;
    a.id = static_cast<int>(i);
    a.position = Vec3(u(rng), u(rng), 1.0 + 0.5 * p.init_box + u(rng));
    s.agents.push_back(a);
  }
  return s;
}

namespace detail {

inline Vec3 unit(const Vec3& v) {
  const double n = v.norm();
  return n > 0.0 ? Vec3(v / n) : Vec3::Zero();
}

inline Vec3 horizontal(Vec3 v) {
  v.z() = 0.0;
  return v;
}

struct GroupStats {
  Vec3 centroid = Vec3::Zero();
  Vec3 mean_velocity = Vec3::Zero();
  std::size_t count = 0;
};

inline GroupStats group_stats(const SwarmState& s, Group g, bool whole) {
  GroupStats st;
  for (const auto& a : s.agents)
    if (whole || a.group == g) {
      st.centroid += a.position;
      st.mean_velocity += a.velocity;
      ++st.count;
    }
  if (st.count > 0) {
    st.centroid /= static_cast<double>(st.count);
    st.mean_velocity /= static_cast<double>(st.count);
  }
  return st;
}

inline Vec3 swarm_centroid(const SwarmState& s) {
  Vec3 c = Vec3::Zero();
  for (const auto& a : s.agents) c += a.position;
  return s.agents.empty() ? c : Vec3(c / static_cast<double>(s.agents.size()));
}

inline void check_finite(const SwarmState& s) {
  for (const auto& a : s.agents)
    require(a.position.allFinite() && a.velocity.allFinite(), Errc::diverged,
            "agent " + std::to_string(a.id) + " state is not finite at tick " + std::to_string(s.tick));
}

}  // namespace detail

/// Per-agent accelerations for the current state.
inline std::vector<Vec3> accelerations(const SwarmState& s, const SwarmParams& p) {
  const std::size_t n = s.agents.size();
  std::vector<Vec3> acc(n, Vec3::Zero());
  if (s.mode == MissionMode::PAUSED || s.mode == MissionMode::AT_BASE) return acc;

  const bool whole = !s.split_active;
  const detail::GroupStats stats[2] = {detail::group_stats(s, Group::A, whole), detail::group_stats(s, Group::B, whole)};
  const double d_target = s.split_active ? 0.5 * s.d_star_current : s.d_star_current;

  // Centroid spring holding split groups 2 d_star_current apart along the split axis.
  Vec3 group_pull[2] = {Vec3::Zero(), Vec3::Zero()};
  if (s.split_active) {
    const Vec3 mid = 0.5 * (stats[0].centroid + stats[1].centroid);
    group_pull[0] = (mid - s.d_star_current * s.split_axis) - stats[0].centroid;
    group_pull[1] = (mid + s.d_star_current * s.split_axis) - stats[1].centroid;
  }

  Vec3 v_des = Vec3::Zero();
  const bool goal_mode = s.mode == MissionMode::FOLLOW || s.mode == MissionMode::RETURN;
  if (goal_mode) {
    const Vec3 goal = s.mode == MissionMode::FOLLOW ? s.operator_point : s.base_point;
    const Vec3 to_goal = goal - detail::swarm_centroid(s);
    v_des = detail::unit(to_goal) * std::min(p.v_cmd, 0.5 * to_goal.norm());
  }
  const Vec3 v_set = s.mode == MissionMode::EXECUTING ? s.velocity_setpoint : Vec3::Zero();

  for (std::size_t i = 0; i < n; ++i) {
    const auto& ai = s.agents[i];
    const int gi = whole ? 0 : static_cast<int>(ai.group);
    Vec3 sep = Vec3::Zero();
    double dist_sum = 0.0;
    std::size_t mates = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const auto& aj = s.agents[j];
      const Vec3 diff = ai.position - aj.position;
      const double d = diff.norm();
      if (d < p.r_sep && d > 0.0) sep += (diff / d) * (p.r_sep / d - 1.0);
      if (whole || aj.group == ai.group) {
        dist_sum += d;
        ++mates;
      }
    }
    Vec3 coh = Vec3::Zero();
    if (mates > 0) {
      const double spread = dist_sum / static_cast<double>(mates);
      coh = detail::unit(stats[gi].centroid - ai.position) * (spread - d_target) + group_pull[gi];
    }
    const Vec3 align = stats[gi].mean_velocity - ai.velocity;
    Vec3 a = p.w_coh * coh + p.w_sep * sep + p.w_align * align;
    if (goal_mode) a += p.w_goal * (v_des - ai.velocity);
    else a += p.w_cmd * (v_set - ai.velocity);
    acc[i] = a;
  }
  return acc;
}

/// One semi-implicit Euler tick. Throws a diverged error on non-finite state.
inline void step(SwarmState& s, const SwarmParams& p) {
  const auto acc = accelerations(s, p);
  const bool damped = s.mode == MissionMode::PAUSED || s.mode == MissionMode::AT_BASE;
  for (std::size_t i = 0; i < s.agents.size(); ++i) {
    auto& a = s.agents[i];
    if (damped) a.velocity *= 0.5;
    else a.velocity += p.dt * acc[i];
    const double speed = a.velocity.norm();
    if (speed > p.v_max) a.velocity *= p.v_max / speed;
    a.position += p.dt * a.velocity;
    if (a.position.z() < 0.0) {
      a.position.z() = 0.0;
      a.velocity.z() = std::max(0.0, a.velocity.z());
    }
  }
  ++s.tick;
  detail::check_finite(s);
  if (s.mode == MissionMode::RETURN && (detail::swarm_centroid(s) - s.base_point).norm() < p.rho)
    s.mode = MissionMode::AT_BASE;
}

struct Partition {
  std::vector<Group> groups;  // indexed like state.agents
  Vec3 axis = Vec3::UnitY();
};

/// Halves along the horizontal axis orthogonal to the mean heading (+x when
/// the swarm is at rest). Lower half, rounded up, is group A.
inline Partition split_partition(const SwarmState& s) {
  const std::size_t n = s.agents.size();
  require(n >= 2, Errc::invalid_argument, "split needs at least two agents");
  Vec3 heading = Vec3::Zero();
  for (const auto& a : s.agents) heading += detail::horizontal(a.velocity);
  heading /= static_cast<double>(n);
  if (heading.norm() < 1e-9) heading = Vec3::UnitX();
  heading.normalize();
  Partition part;
  part.axis = Vec3(-heading.y(), heading.x(), 0.0);
  const Vec3 c = detail::swarm_centroid(s);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> proj(n);
  for (std::size_t i = 0; i < n; ++i) proj[i] = (s.agents[i].position - c).dot(part.axis);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (proj[a] != proj[b]) return proj[a] < proj[b];
    return s.agents[a].id < s.agents[b].id;
  });
  part.groups.assign(n, Group::B);
  for (std::size_t r = 0; r < (n + 1) / 2; ++r) part.groups[order[r]] = Group::A;
  return part;
}

/// Applies a decoded command. An illegal (paradigm, label) pair throws before
/// any field is touched.
inline void apply_command(SwarmState& s, const Command& cmd, const SwarmParams& p) {
  require(is_legal_label(cmd.paradigm, cmd.label), Errc::illegal_command,
          "label '" + cmd.label + "' is not a " + std::string(to_string(cmd.paradigm)) + " command");
  const std::string& l = cmd.label;
  const double lo = 0.25 * p.d_star, hi = 4.0 * p.d_star;
  if (l == "left") s.velocity_setpoint = -p.v_cmd * Vec3::UnitX();
  else if (l == "right") s.velocity_setpoint = p.v_cmd * Vec3::UnitX();
  else if (l == "up") s.velocity_setpoint = p.v_cmd * Vec3::UnitZ();
  else if (l == "down") s.velocity_setpoint = -p.v_cmd * Vec3::UnitZ();
  else if (l == "fall_in") {
    s.d_star_current = std::clamp(s.d_star_current * 0.5, lo, hi);
    s.split_active = false;
    for (auto& a : s.agents) a.group = Group::A;
  } else if (l == "spread_out") {
    s.d_star_current = std::clamp(s.d_star_current * 2.0, lo, hi);
  } else if (l == "split") {
    if (s.agents.size() >= 2) {
      const auto part = split_partition(s);
      for (std::size_t i = 0; i < s.agents.size(); ++i) s.agents[i].group = part.groups[i];
      s.split_axis = part.axis;
      s.split_active = true;
    }
  } else if (l == "go") {
    s.mode = MissionMode::EXECUTING;
  } else if (l == "stop") {
    s.mode = MissionMode::PAUSED;
    s.velocity_setpoint = Vec3::Zero();
  } else if (l == "follow_me") {
    s.mode = MissionMode::FOLLOW;
  } else if (l == "return") {
    s.mode = MissionMode::RETURN;
  }
}

struct SwarmMetrics {
  double mean_pairwise = 0.0;
  double min_pairwise = 0.0;
  Vec3 centroid = Vec3::Zero();
  Vec3 centroid_a = Vec3::Zero();
  Vec3 centroid_b = Vec3::Zero();
  std::size_t clusters = 0;
  double mean_speed = 0.0;
};

inline SwarmMetrics metrics(const SwarmState& s, const SwarmParams& p) {
  const std::size_t n = s.agents.size();
  require(n >= 1, Errc::invalid_argument, "metrics need at least one agent");
  SwarmMetrics m;
  m.centroid = detail::swarm_centroid(s);
  m.centroid_a = detail::group_stats(s, Group::A, false).centroid;
  m.centroid_b = detail::group_stats(s, Group::B, false).centroid;
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  const auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  const double link = 2.0 * p.r_sep;
  double sum = 0.0, mn = n > 1 ? INFINITY : 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < n; ++i) {
    m.mean_speed += s.agents[i].velocity.norm();
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = (s.agents[i].position - s.agents[j].position).norm();
      sum += d;
      ++pairs;
      mn = std::min(mn, d);
      if (d <= link) parent[find(i)] = find(j);
    }
  }
  m.mean_speed /= static_cast<double>(n);
  m.mean_pairwise = pairs > 0 ? sum / static_cast<double>(pairs) : 0.0;
  m.min_pairwise = mn;
  for (std::size_t i = 0; i < n; ++i) m.clusters += find(i) == i;
  return m;
}

}  // namespace mindswarm::swarm
