#pragma once

#include <charconv>
#include <cstdlib>
#include <optional>
#include <string>

#include "mindswarm/error.hpp"
#include "mindswarm/gateway/protocol.hpp"

namespace mindswarm::gateway {

struct Endpoint {
  std::string host = "127.0.0.1";
  unsigned short port = 0;

  std::string str() const { return host + ":" + std::to_string(port); }
  bool operator==(const Endpoint&) const = default;
};

/// "host:port" or bare "port".
inline Endpoint parse_endpoint(const std::string& text) {
  Endpoint e;
  std::string port = text;
  if (const auto colon = text.rfind(':'); colon != std::string::npos) {
    e.host = text.substr(0, colon);
    port = text.substr(colon + 1);
  }
  unsigned value = 0;
  const auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
  require(ec == std::errc{} && ptr == port.data() + port.size() && value <= 65535 && !e.host.empty(),
          Errc::invalid_argument, "bad endpoint '" + text + "' (expected host:port)");
  e.port = static_cast<unsigned short>(value);
  return e;
}

inline const Endpoint kDefaultTcp{"127.0.0.1", 7070};
inline const Endpoint kDefaultWs{"127.0.0.1", 7071};

/// Value of MINDSWARM_TCP / MINDSWARM_WS when set.
inline std::optional<Endpoint> endpoint_from_env(const char* var) {
  const char* v = std::getenv(var);
  if (!v || !*v) return std::nullopt;
  return parse_endpoint(v);
}

enum class ConnectionKind { decoder, operator_ };

inline const char* to_string(ConnectionKind k) { return k == ConnectionKind::decoder ? "decoder" : "operator"; }

struct SessionConfig {
  Paradigm active_paradigm = Paradigm::SI;
  double confidence_threshold = 0.5;
  double tick_hz = 20.0;
  double snapshot_hz = 10.0;
  Endpoint tcp = kDefaultTcp;
  Endpoint ws = kDefaultWs;
  std::string log_path;  // empty: no file log

  void validate() const {
    require(tick_hz > 0.0 && snapshot_hz > 0.0, Errc::invalid_argument, "tick and snapshot rates must be positive");
    require(confidence_threshold >= 0.0 && confidence_threshold <= 1.0, Errc::invalid_argument,
            "confidence threshold must lie in [0, 1]");
  }
};

/// Empty when accepted, otherwise the rejection reason.
inline std::optional<std::string> validate_command(const Command& cmd, Paradigm active, double threshold) {
  if (cmd.paradigm != active) return std::string(reason::wrong_mode);
  if (cmd.confidence < threshold) return std::string(reason::low_confidence);
  return std::nullopt;
}

inline std::optional<std::string> validate_command(const Command& cmd, const SessionConfig& cfg) {
  return validate_command(cmd, cfg.active_paradigm, cfg.confidence_threshold);
}

}  // namespace mindswarm::gateway
