#pragma once

#include <nlohmann/json.hpp>

#include <chrono>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "mindswarm/decoder/pipeline.hpp"
#include "mindswarm/gateway/client.hpp"
#include "mindswarm/gateway/sequencer.hpp"

namespace mindswarm::gateway {

struct DecodedTrial {
  std::int64_t onset = 0;  // marker sample index in the original recording
  double emit_s = 0.0;     // recording time at which the decision is available
  std::string truth;
  decoder::Prediction prediction;
};

/// Runs the pipeline's stored chain over a recording and predicts every
/// marker, in marker order. The recording's own marker paradigm is epoched.
inline std::vector<DecodedTrial> decode_trials(const eeg::Recording& rec, const decoder::OvrPipeline& p) {
  require(!rec.events.empty(), Errc::insufficient_data, "recording has no markers");
  const Paradigm markers = rec.events.front().paradigm;
  auto picked = eeg::pick_channels(rec, p.channels);
  const auto prep = decoder::prepare(std::move(picked), p.config.chain, p.ica ? &*p.ica : nullptr);
  const auto set = eeg::epoch(prep.rec, p.window, markers);
  require(set.size() > 0, Errc::insufficient_data, "no marker fits the epoch window");
  std::vector<DecodedTrial> out;
  out.reserve(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    DecodedTrial t;
    // Onsets after downsampling map back through the rate ratio.
    t.onset = std::llround(static_cast<double>(set.onsets[i]) * rec.sample_rate / prep.rec.sample_rate);
    t.emit_s = static_cast<double>(set.onsets[i]) / prep.rec.sample_rate + p.window.end_s;
    t.truth = set.labels[i];
    t.prediction = decoder::predict(p, set.trials[i]);
    out.push_back(std::move(t));
  }
  return out;
}

struct ReplayOptions {
  Endpoint endpoint = kDefaultTcp;
  double speed = 1.0;  // real-time multiplier
  std::chrono::milliseconds reply_timeout{5000};
  std::string origin = "decoder";
};

struct ReplayResult {
  std::size_t sent = 0;
  std::size_t accepted = 0;
  std::map<std::string, std::size_t> rejected;  // by reason
  std::size_t unanswered = 0;
  std::size_t correct = 0;  // predictions matching the marker label
  double elapsed_s = 0.0;

  std::size_t rejected_total() const {
    std::size_t n = 0;
    for (const auto& [r, c] : rejected) n += c;
    return n;
  }
};

/// One command per trial, paced by the marker timing divided by `speed`.
inline ReplayResult replay_commands(const std::vector<DecodedTrial>& trials, const ReplayOptions& opt) {
  require(opt.speed > 0.0 && std::isfinite(opt.speed), Errc::invalid_argument, "speed multiplier must be > 0");
  TcpClient client(opt.endpoint);
  ReplayResult res;
  const auto start = std::chrono::steady_clock::now();
  const double t0 = trials.empty() ? 0.0 : trials.front().emit_s;
  std::set<std::uint64_t> outstanding;

  const auto absorb = [&](const DecodeResult& r) {
    const auto* m = std::get_if<WireMessage>(&r);
    if (!m || !outstanding.count(m->seq)) return;
    outstanding.erase(m->seq);
    if (m->type == MsgType::ack) ++res.accepted;
    else if (m->type == MsgType::error) ++res.rejected[m->reason];
  };

  for (std::size_t i = 0; i < trials.size(); ++i) {
    const auto& t = trials[i];
    const auto due = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                 std::chrono::duration<double>((t.emit_s - t0) / opt.speed));
    // Collect replies while waiting for the next slot.
    for (;;) {
      const auto now = std::chrono::steady_clock::now();
      if (now >= due) break;
      auto r = client.replies().pop(std::chrono::duration_cast<std::chrono::milliseconds>(due - now) +
                                    std::chrono::milliseconds(1));
      if (r) absorb(*r);
    }
    Command c;
    c.paradigm = paradigm_of_label(t.prediction.label).value_or(Paradigm::SI);
    c.label = t.prediction.label;
    c.confidence = t.prediction.confidence;
    c.ts = static_cast<std::uint64_t>(std::llround(t.emit_s * 1000.0));
    c.seq = i + 1;
    outstanding.insert(c.seq);
    client.send(command_message(c, opt.origin));
    ++res.sent;
    res.correct += t.prediction.label == t.truth;
  }
  const auto deadline = std::chrono::steady_clock::now() + opt.reply_timeout;
  while (!outstanding.empty()) {
    const auto now = std::chrono::steady_clock::now();
    if (now >= deadline) break;
    auto r = client.replies().pop(std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now));
    if (!r) break;
    absorb(*r);
  }
  res.unanswered = outstanding.size();
  res.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

// Session log reading

inline std::vector<nlohmann::json> read_session_log(std::istream& is) {
  std::vector<nlohmann::json> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    require(!j.is_discarded() && j.is_object(), Errc::malformed, "session log line is not a JSON object");
    out.push_back(std::move(j));
  }
  return out;
}

inline std::vector<nlohmann::json> read_session_log(const std::string& path) {
  std::ifstream is(path);
  require(is.is_open(), Errc::io, "cannot open session log '" + path + "'");
  return read_session_log(is);
}

struct OfflineResult {
  swarm::SwarmMetrics metrics;
  swarm::MissionMode mode = swarm::MissionMode::IDLE;
  std::int64_t tick = 0;
};

/// Re-runs the applied commands of a session log against a fresh simulator
/// built from the logged start geometry and params, up to the logged end tick.
inline OfflineResult replay_session_log(const std::vector<nlohmann::json>& log) {
  const nlohmann::json* start = nullptr;
  const nlohmann::json* end = nullptr;
  std::multimap<std::int64_t, Command> applied;
  for (const auto& e : log) {
    const auto ev = e.value("event", "");
    if (ev == "session_start") start = &e;
    else if (ev == "session_end") end = &e;
    else if (ev == "command" && e.value("status", "") == "applied")
      applied.emplace(e.at("tick").get<std::int64_t>(),
                      Command{paradigm_from_string(e.at("paradigm").get<std::string>()), e.at("label").get<std::string>(),
                              e.at("confidence").get<double>(), e.at("msg_ts").get<std::uint64_t>(),
                              e.at("seq").get<std::uint64_t>()});
  }
  require(start && end, Errc::malformed, "session log lacks session_start or session_end");
  const auto params = start->at("params").get<swarm::SwarmParams>();
  swarm::Scenario sc;
  sc.params = params;
  sc.seed = start->at("seed").get<std::uint64_t>();
  const auto vec = [](const nlohmann::json& j) { return swarm::detail::vec3_from_json(j, "logged point"); };
  if (start->contains("positions")) {
    std::vector<swarm::Vec3> pos;
    for (const auto& pj : start->at("positions")) pos.push_back(vec(pj));
    sc.positions = std::move(pos);
  }
  if (start->contains("base")) sc.base_point = vec(start->at("base"));
  if (start->contains("operator")) sc.operator_point = vec(start->at("operator"));
  auto sim = swarm::make_simulator(sc);
  const auto last = end->at("tick").get<std::int64_t>();
  for (std::int64_t k = sim.state().tick;; ++k) {
    const auto [lo, hi] = applied.equal_range(k);
    for (auto it = lo; it != hi; ++it) sim.apply(it->second);
    if (k >= last) break;
    sim.step();
  }
  return {sim.row().metrics, sim.state().mode, sim.state().tick};
}

}  // namespace mindswarm::gateway
