#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mindswarm/paradigm.hpp"

// Newline-delimited JSON wire protocol, version 1. Fields are flat:
//   {"v":1,"type":"command","paradigm":"MI","label":"left","confidence":0.82,"ts":1500,"seq":7}
namespace mindswarm::gateway {

inline constexpr int kProtocolVersion = 1;
inline constexpr std::size_t kMaxLineBytes = 4096;

enum class MsgType { command, mode_set, state, ack, error };

inline const char* to_string(MsgType t) {
  switch (t) {
    case MsgType::command: return "command";
    case MsgType::mode_set: return "mode_set";
    case MsgType::state: return "state";
    case MsgType::ack: return "ack";
    case MsgType::error: return "error";
  }
  return "?";
}

inline std::optional<MsgType> parse_msg_type(std::string_view s) {
  for (auto t : {MsgType::command, MsgType::mode_set, MsgType::state, MsgType::ack, MsgType::error})
    if (s == to_string(t)) return t;
  return std::nullopt;
}

// Reason codes carried by error messages.
namespace reason {
inline constexpr const char* line_too_long = "line_too_long";
inline constexpr const char* invalid_json = "invalid_json";
inline constexpr const char* not_object = "not_object";
inline constexpr const char* bad_version = "bad_version";
inline constexpr const char* unknown_type = "unknown_type";
inline constexpr const char* missing_field = "missing_field";
inline constexpr const char* bad_field = "bad_field";
inline constexpr const char* bad_enum = "bad_enum";
inline constexpr const char* illegal_label = "illegal_label";
inline constexpr const char* confidence_out_of_range = "confidence_out_of_range";
inline constexpr const char* seq_not_increasing = "seq_not_increasing";
inline constexpr const char* unexpected_type = "unexpected_type";
inline constexpr const char* mode_set_forbidden = "mode_set_forbidden";
inline constexpr const char* wrong_mode = "wrong_mode";
inline constexpr const char* low_confidence = "low_confidence";
}  // namespace reason

struct WireMessage {
  MsgType type = MsgType::command;
  std::uint64_t seq = 0;
  std::uint64_t ts = 0;
  // command, mode_set, ack
  Paradigm paradigm = Paradigm::SI;
  std::string label;
  double confidence = 1.0;
  std::optional<std::string> origin;
  // error
  std::string reason;
  std::string detail;
  // state: snapshot fields, merged flat into the object
  nlohmann::json body = nlohmann::json::object();

  bool operator==(const WireMessage&) const = default;

  Command command() const { return {paradigm, label, confidence, ts, seq}; }
};

inline WireMessage command_message(const Command& c, std::optional<std::string> origin = std::nullopt) {
  WireMessage m;
  m.type = MsgType::command;
  m.paradigm = c.paradigm;
  m.label = c.label;
  m.confidence = c.confidence;
  m.ts = c.ts;
  m.seq = c.seq;
  m.origin = std::move(origin);
  return m;
}

inline WireMessage mode_set_message(Paradigm p, std::uint64_t seq, std::uint64_t ts = 0) {
  WireMessage m;
  m.type = MsgType::mode_set;
  m.paradigm = p;
  m.seq = seq;
  m.ts = ts;
  return m;
}

inline WireMessage error_message(std::uint64_t seq, std::uint64_t ts, std::string why, std::string detail = {}) {
  WireMessage m;
  m.type = MsgType::error;
  m.seq = seq;
  m.ts = ts;
  m.reason = std::move(why);
  m.detail = std::move(detail);
  return m;
}

inline nlohmann::json to_json_object(const WireMessage& m) {
  nlohmann::json j;
  if (m.type == MsgType::state) j = m.body;
  j["v"] = kProtocolVersion;
  j["type"] = to_string(m.type);
  j["seq"] = m.seq;
  j["ts"] = m.ts;
  switch (m.type) {
    case MsgType::command:
      j["paradigm"] = to_string(m.paradigm);
      j["label"] = m.label;
      j["confidence"] = m.confidence;
      break;
    case MsgType::mode_set: j["paradigm"] = to_string(m.paradigm); break;
    case MsgType::ack:
      j["paradigm"] = to_string(m.paradigm);
      if (!m.label.empty()) j["label"] = m.label;
      break;
    case MsgType::error:
      j["reason"] = m.reason;
      if (!m.detail.empty()) j["detail"] = m.detail;
      break;
    case MsgType::state: break;
  }
  if (m.origin) j["origin"] = *m.origin;
  return j;
}

/// One line, newline included.
inline std::string encode(const WireMessage& m) {
  return to_json_object(m).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
}

struct DecodeError {
  std::string reason;
  std::string detail;
  std::optional<std::uint64_t> seq;  // echoed when the line carried a usable seq

  bool operator==(const DecodeError&) const = default;
};

using DecodeResult = std::variant<WireMessage, DecodeError>;

namespace detail {

inline bool uint_field(const nlohmann::json& j, const char* key, std::uint64_t& out) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_number_unsigned()) return false;
  out = it->get<std::uint64_t>();
  return true;
}

}  // namespace detail

/// Classifies one line (trailing newline optional). Never throws.
inline DecodeResult decode(std::string_view line) {
  if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  if (line.size() > kMaxLineBytes)
    return DecodeError{reason::line_too_long, std::to_string(line.size()) + " bytes", std::nullopt};

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    return DecodeError{reason::invalid_json, e.what(), std::nullopt};
  }
  if (!j.is_object()) return DecodeError{reason::not_object, "top level must be an object", std::nullopt};

  std::optional<std::uint64_t> seq_echo;
  std::uint64_t seq = 0, ts = 0;
  if (detail::uint_field(j, "seq", seq)) seq_echo = seq;
  const auto err = [&](const char* why, std::string what) { return DecodeError{why, std::move(what), seq_echo}; };

  const auto v = j.find("v");
  if (v == j.end()) return err(reason::missing_field, "v");
  if (!v->is_number_integer() || v->get<std::int64_t>() != kProtocolVersion)
    return err(reason::bad_version, "expected v=1");
  const auto t = j.find("type");
  if (t == j.end()) return err(reason::missing_field, "type");
  if (!t->is_string()) return err(reason::bad_field, "type must be a string");
  const auto type = parse_msg_type(t->get_ref<const std::string&>());
  if (!type) return err(reason::unknown_type, t->get<std::string>());
  if (!j.contains("seq")) return err(reason::missing_field, "seq");
  if (!seq_echo) return err(reason::bad_field, "seq must be a non-negative integer");
  if (!j.contains("ts")) return err(reason::missing_field, "ts");
  if (!detail::uint_field(j, "ts", ts)) return err(reason::bad_field, "ts must be a non-negative integer");

  WireMessage m;
  m.type = *type;
  m.seq = seq;
  m.ts = ts;
  if (const auto o = j.find("origin"); o != j.end()) {
    if (!o->is_string()) return err(reason::bad_field, "origin must be a string");
    m.origin = o->get<std::string>();
  }

  const auto paradigm_field = [&]() -> std::optional<DecodeError> {
    const auto p = j.find("paradigm");
    if (p == j.end()) return err(reason::missing_field, "paradigm");
    if (!p->is_string()) return err(reason::bad_field, "paradigm must be a string");
    const auto parsed = parse_paradigm(p->get_ref<const std::string&>());
    if (!parsed) return err(reason::bad_enum, "paradigm '" + p->get<std::string>() + "'");
    m.paradigm = *parsed;
    return std::nullopt;
  };

  switch (m.type) {
    case MsgType::command: {
      if (auto e = paradigm_field()) return *e;
      const auto l = j.find("label");
      if (l == j.end()) return err(reason::missing_field, "label");
      if (!l->is_string()) return err(reason::bad_field, "label must be a string");
      m.label = l->get<std::string>();
      if (!is_legal_label(m.paradigm, m.label))
        return err(reason::illegal_label, "'" + m.label + "' is not a " + std::string(to_string(m.paradigm)) + " label");
      const auto c = j.find("confidence");
      if (c == j.end()) return err(reason::missing_field, "confidence");
      if (!c->is_number()) return err(reason::bad_field, "confidence must be a number");
      m.confidence = c->get<double>();
      if (!(m.confidence >= 0.0 && m.confidence <= 1.0))
        return err(reason::confidence_out_of_range, std::to_string(m.confidence));
      break;
    }
    case MsgType::mode_set:
      if (auto e = paradigm_field()) return *e;
      break;
    case MsgType::ack: {
      if (auto e = paradigm_field()) return *e;
      if (const auto l = j.find("label"); l != j.end()) {
        if (!l->is_string()) return err(reason::bad_field, "label must be a string");
        m.label = l->get<std::string>();
      }
      break;
    }
    case MsgType::error: {
      const auto r = j.find("reason");
      if (r == j.end()) return err(reason::missing_field, "reason");
      if (!r->is_string()) return err(reason::bad_field, "reason must be a string");
      m.reason = r->get<std::string>();
      if (const auto d = j.find("detail"); d != j.end()) {
        if (!d->is_string()) return err(reason::bad_field, "detail must be a string");
        m.detail = d->get<std::string>();
      }
      break;
    }
    case MsgType::state:
      for (const auto& [key, value] : j.items())
        if (key != "v" && key != "type" && key != "seq" && key != "ts" && key != "origin") m.body[key] = value;
      break;
  }
  return m;
}

/// Splits a byte stream into lines, discarding the remainder of any line longer
/// than kMaxLineBytes and reporting it once.
class LineFramer {
 public:
  struct Frame {
    std::string line;
    bool too_long = false;
  };

  std::vector<Frame> feed(std::string_view bytes) {
    std::vector<Frame> out;
    for (char ch : bytes) {
      if (ch == '\n') {
        if (overflow_) out.push_back({{}, true});
        else out.push_back({std::move(buf_), false});
        buf_.clear();
        overflow_ = false;
        continue;
      }
      if (overflow_) continue;
      buf_.push_back(ch);
      // Room for a trailing '\r'.
      if (buf_.size() > kMaxLineBytes + 1) {
        overflow_ = true;
        buf_.clear();
      }
    }
    return out;
  }

  std::size_t pending() const { return buf_.size(); }

 private:
  std::string buf_;
  bool overflow_ = false;
};

}  // namespace mindswarm::gateway
