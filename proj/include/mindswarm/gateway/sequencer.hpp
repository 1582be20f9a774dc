#pragma once

#include <nlohmann/json.hpp>

#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mindswarm/gateway/protocol.hpp"
#include "mindswarm/gateway/validation.hpp"
#include "mindswarm/swarm/scenario.hpp"

// Single writer of the swarm state. Transport code feeds it lines and ticks;
// it answers with wire replies and appends JSON lines to the session log.
namespace mindswarm::gateway {

inline nlohmann::json vec_json(const swarm::Vec3& v) { return {v.x(), v.y(), v.z()}; }

inline nlohmann::json metrics_json(const swarm::SwarmMetrics& m) {
  return {{"mean_pairwise", m.mean_pairwise}, {"min_pairwise", m.min_pairwise}, {"clusters", m.clusters},
          {"mean_speed", m.mean_speed},       {"centroid", vec_json(m.centroid)}};
}

/// Snapshot fields carried flat in a "state" message.
inline nlohmann::json snapshot_body(const swarm::SwarmState& s, const swarm::SwarmParams& p, Paradigm active) {
  auto agents = nlohmann::json::array();
  for (const auto& a : s.agents)
    agents.push_back({{"id", a.id},
                      {"x", a.position.x()},
                      {"y", a.position.y()},
                      {"z", a.position.z()},
                      {"vx", a.velocity.x()},
                      {"vy", a.velocity.y()},
                      {"vz", a.velocity.z()},
                      {"group", a.group == swarm::Group::A ? "A" : "B"}});
  return {{"tick", s.tick},
          {"mode", swarm::to_string(s.mode)},
          {"active_paradigm", to_string(active)},
          {"d_star_current", s.d_star_current},
          {"split_active", s.split_active},
          {"base", vec_json(s.base_point)},
          {"operator", vec_json(s.operator_point)},
          {"metrics", metrics_json(swarm::metrics(s, p))},
          {"agents", std::move(agents)}};
}

class Sequencer {
 public:
  Sequencer(SessionConfig cfg, swarm::Simulator sim, std::ostream* log = nullptr)
      : cfg_(std::move(cfg)), sim_(std::move(sim)), log_(log), active_(cfg_.active_paradigm) {
    cfg_.validate();
    auto positions = nlohmann::json::array();
    for (const auto& a : sim_.state().agents) positions.push_back(vec_json(a.position));
    write({{"event", "session_start"},
           {"ts", 0},
           {"tick", sim_.state().tick},
           {"seed", sim_.state().rng_seed},
           {"active_paradigm", to_string(active_)},
           {"confidence_threshold", cfg_.confidence_threshold},
           {"tick_hz", cfg_.tick_hz},
           {"params", sim_.params()},
           {"base", vec_json(sim_.state().base_point)},
           {"operator", vec_json(sim_.state().operator_point)},
           {"positions", std::move(positions)}});
  }

  int open(ConnectionKind kind) {
    const int id = next_conn_++;
    conns_[id] = {kind, std::nullopt};
    return id;
  }

  void close(int conn) { conns_.erase(conn); }

  /// Replies for one inbound line.
  std::vector<WireMessage> handle_line(int conn, std::string_view line, std::uint64_t now_ms) {
    auto it = conns_.find(conn);
    if (it == conns_.end()) return {};
    auto decoded = decode(line);
    if (auto* e = std::get_if<DecodeError>(&decoded)) return {protocol_error(conn, *e, now_ms)};
    auto& m = std::get<WireMessage>(decoded);
    auto& state = it->second;
    if (state.last_seq && m.seq <= *state.last_seq)
      return {protocol_error(conn,
                             {reason::seq_not_increasing,
                              "seq " + std::to_string(m.seq) + " after " + std::to_string(*state.last_seq), m.seq},
                             now_ms)};
    state.last_seq = m.seq;
    switch (m.type) {
      case MsgType::command: return {on_command(conn, state.kind, m, now_ms)};
      case MsgType::mode_set: return {on_mode_set(conn, state.kind, m, now_ms)};
      default:
        return {protocol_error(conn, {reason::unexpected_type, std::string(to_string(m.type)) + " is gateway-only", m.seq},
                               now_ms)};
    }
  }

  WireMessage line_too_long(int conn, std::uint64_t now_ms) {
    return protocol_error(conn, {reason::line_too_long, "line exceeds 4096 bytes", std::nullopt}, now_ms);
  }

  /// Advances the swarm one step. Returns false once the simulation has faulted.
  bool tick(std::uint64_t now_ms) {
    if (fault_) return false;
    try {
      sim_.step();
    } catch (const Error& e) {
      fault_ = e.what();
      write({{"event", "fault"}, {"ts", now_ms}, {"tick", sim_.state().tick}, {"detail", *fault_}});
      return false;
    }
    return true;
  }

  WireMessage snapshot(std::uint64_t now_ms) {
    WireMessage m;
    m.type = MsgType::state;
    m.seq = ++snapshot_seq_;
    m.ts = now_ms;
    m.body = snapshot_body(sim_.state(), sim_.params(), active_);
    return m;
  }

  void finish(std::uint64_t now_ms) {
    if (finished_) return;
    finished_ = true;
    write({{"event", "session_end"},
           {"ts", now_ms},
           {"tick", sim_.state().tick},
           {"mode", swarm::to_string(sim_.state().mode)},
           {"metrics", metrics_json(sim_.row().metrics)}});
  }

  const swarm::Simulator& simulator() const { return sim_; }
  Paradigm active_paradigm() const { return active_; }
  const std::optional<std::string>& fault() const { return fault_; }
  const SessionConfig& config() const { return cfg_; }

 private:
  struct Conn {
    ConnectionKind kind;
    std::optional<std::uint64_t> last_seq;
  };

  void write(const nlohmann::json& j) {
    if (!log_) return;
    *log_ << j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
    log_->flush();
  }

  nlohmann::json base_entry(const char* event, int conn, ConnectionKind kind, const WireMessage& m,
                            std::uint64_t now_ms) const {
    nlohmann::json j = {{"event", event},
                        {"ts", now_ms},
                        {"tick", sim_.state().tick},
                        {"conn", conn},
                        {"kind", to_string(kind)},
                        {"seq", m.seq},
                        {"msg_ts", m.ts},
                        {"paradigm", to_string(m.paradigm)}};
    if (m.origin) j["origin"] = *m.origin;
    return j;
  }

  WireMessage ack(const WireMessage& m, std::uint64_t now_ms) const {
    WireMessage a;
    a.type = MsgType::ack;
    a.seq = m.seq;
    a.ts = now_ms;
    a.paradigm = m.paradigm;
    a.label = m.label;
    return a;
  }

  WireMessage on_command(int conn, ConnectionKind kind, const WireMessage& m, std::uint64_t now_ms) {
    auto entry = base_entry("command", conn, kind, m, now_ms);
    entry["label"] = m.label;
    entry["confidence"] = m.confidence;
    auto why = validate_command(m.command(), active_, cfg_.confidence_threshold);
    if (!why && fault_) why = "sim_fault";
    if (!why && !sim_.apply(m.command())) why = sim_.events().back().reason;
    entry["status"] = why ? "rejected" : "applied";
    if (why) entry["reason"] = *why;
    write(entry);
    if (why) return error_message(m.seq, now_ms, *why, m.label);
    return ack(m, now_ms);
  }

  WireMessage on_mode_set(int conn, ConnectionKind kind, const WireMessage& m, std::uint64_t now_ms) {
    auto entry = base_entry("mode_set", conn, kind, m, now_ms);
    const bool allowed = kind == ConnectionKind::operator_;
    entry["status"] = allowed ? "applied" : "rejected";
    if (!allowed) entry["reason"] = reason::mode_set_forbidden;
    entry["previous"] = to_string(active_);
    if (allowed) active_ = m.paradigm;
    write(entry);
    if (!allowed) return error_message(m.seq, now_ms, reason::mode_set_forbidden, "decoder connections cannot switch modes");
    return ack(m, now_ms);
  }

  WireMessage protocol_error(int conn, const DecodeError& e, std::uint64_t now_ms) {
    nlohmann::json entry = {
        {"event", "protocol_error"}, {"ts", now_ms}, {"tick", sim_.state().tick}, {"conn", conn}, {"reason", e.reason}};
    if (e.seq) entry["seq"] = *e.seq;
    write(entry);
    return error_message(e.seq.value_or(0), now_ms, e.reason, e.detail);
  }

  SessionConfig cfg_;
  swarm::Simulator sim_;
  std::ostream* log_;
  Paradigm active_;
  std::map<int, Conn> conns_;
  int next_conn_ = 1;
  std::uint64_t snapshot_seq_ = 0;
  std::optional<std::string> fault_;
  bool finished_ = false;
};

}  // namespace mindswarm::gateway
