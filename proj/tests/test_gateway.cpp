#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>

#include "fuzz_lines.hpp"
#include "mindswarm/gateway/replay.hpp"
#include "mindswarm/gateway/server.hpp"

using namespace mindswarm;
using namespace mindswarm::gateway;
using namespace std::chrono_literals;

namespace {

SessionConfig local_config(Paradigm active, const std::string& log = {}) {
  SessionConfig cfg;
  cfg.active_paradigm = active;
  cfg.tcp = {"127.0.0.1", 0};
  cfg.ws = {"127.0.0.1", 0};
  cfg.log_path = log;
  return cfg;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("mindswarm_" + name + "_" + std::to_string(::getpid()))).string();
}

WireMessage command(Paradigm p, const char* label, double conf, std::uint64_t seq) {
  return command_message({p, label, conf, seq, seq});
}

bool is_reply_to(const WireMessage& m, std::uint64_t seq) {
  return (m.type == MsgType::ack || m.type == MsgType::error) && m.seq == seq;
}

}  // namespace

TEST(Gateway, TickCounterFollowsRate) {
  Server srv(local_config(Paradigm::SI), swarm::Simulator(swarm::SwarmParams{}, 1));
  srv.start();
  std::this_thread::sleep_for(2s);
  const auto ticks = srv.ticks();
  const auto elapsed = srv.now_ms();
  srv.stop();
  EXPECT_NEAR(static_cast<double>(ticks), static_cast<double>(elapsed) * 20.0 / 1000.0, 1.0);
  EXPECT_GE(ticks, 39);
}

TEST(Gateway, TcpCommandsAreAckedOrRejected) {
  Server srv(local_config(Paradigm::MI), swarm::Simulator(swarm::SwarmParams{}, 2));
  srv.start();
  TcpClient c({"127.0.0.1", srv.tcp_port()});
  c.send(command(Paradigm::MI, "left", 0.82, 7));
  auto r = c.replies().wait_for([](const WireMessage& m) { return is_reply_to(m, 7); }, 2s);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->type, MsgType::ack);
  EXPECT_EQ(r->label, "left");

  c.send(command(Paradigm::VI, "split", 0.9, 8));
  r = c.replies().wait_for([](const WireMessage& m) { return is_reply_to(m, 8); }, 2s);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->reason, "wrong_mode");

  c.send(command(Paradigm::MI, "up", 0.2, 9));
  r = c.replies().wait_for([](const WireMessage& m) { return is_reply_to(m, 9); }, 2s);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->reason, "low_confidence");

  c.send(mode_set_message(Paradigm::SI, 10));
  r = c.replies().wait_for([](const WireMessage& m) { return is_reply_to(m, 10); }, 2s);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->reason, "mode_set_forbidden");

  // Oversized and garbage lines get an error and the connection stays usable.
  c.send_line(std::string(5000, 'x') + "\n");
  r = c.replies().wait_for([](const WireMessage& m) { return m.type == MsgType::error; }, 2s);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->reason, "line_too_long");
  c.send_line("\xff\xfe garbage\n");
  r = c.replies().wait_for([](const WireMessage& m) { return m.type == MsgType::error; }, 2s);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->reason, "invalid_json");
  c.send(command(Paradigm::MI, "right", 0.9, 11));
  r = c.replies().wait_for([](const WireMessage& m) { return is_reply_to(m, 11); }, 2s);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->type, MsgType::ack);
  srv.stop();
}

TEST(Gateway, WebSocketOperatorGetsSnapshotsAndSwitchesModes) {
  Server srv(local_config(Paradigm::SI), swarm::Simulator(swarm::SwarmParams{}, 3));
  srv.start();
  const auto t0 = std::chrono::steady_clock::now();
  WsClient ws({"127.0.0.1", srv.ws_port()});
  auto snap = ws.replies().wait_for([](const WireMessage& m) { return m.type == MsgType::state; }, 2s);
  ASSERT_TRUE(snap);
  EXPECT_LT(std::chrono::steady_clock::now() - t0, 500ms);
  EXPECT_EQ(snap->body["agents"].size(), 8u);
  EXPECT_EQ(snap->body["active_paradigm"], "SI");

  ws.send(mode_set_message(Paradigm::VI, 1));
  auto r = ws.replies().wait_for([](const WireMessage& m) { return is_reply_to(m, 1); }, 2s);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->type, MsgType::ack);

  ws.send(command_message({Paradigm::VI, "spread_out", 1.0, 0, 2}, "operator"));
  r = ws.replies().wait_for([](const WireMessage& m) { return is_reply_to(m, 2); }, 2s);
  ASSERT_TRUE(r);
  ASSERT_EQ(r->type, MsgType::ack);
  const auto acked_at = r->ts;
  // The first snapshot after the ack already carries the new formation scale.
  snap = ws.replies().wait_for([&](const WireMessage& m) { return m.type == MsgType::state && m.ts >= acked_at; }, 2s);
  ASSERT_TRUE(snap);
  EXPECT_EQ(snap->body["d_star_current"], 12.0);
  EXPECT_EQ(snap->body["active_paradigm"], "VI");

  // Snapshot rate is about 10 Hz.
  int n = 0;
  const auto start = std::chrono::steady_clock::now();
  while (std::chrono::steady_clock::now() - start < 1s)
    n += ws.replies().wait_for([](const WireMessage& m) { return m.type == MsgType::state; }, 1s).has_value();
  EXPECT_GE(n, 8);
  EXPECT_LE(n, 12);
  ws.close();
  srv.stop();
}

TEST(Gateway, UnknownWebSocketPathIsRefused) {
  Server srv(local_config(Paradigm::SI), swarm::Simulator(swarm::SwarmParams{}, 4));
  srv.start();
  try {
    WsClient ws({"127.0.0.1", srv.ws_port()}, "/other");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::connect_failed);
  }
  srv.stop();
}

TEST(Gateway, BindFailureAndUnreachable) {
  Server a(local_config(Paradigm::SI), swarm::Simulator(swarm::SwarmParams{}, 5));
  auto cfg = local_config(Paradigm::SI);
  cfg.tcp.port = a.tcp_port();
  try {
    Server b(cfg, swarm::Simulator(swarm::SwarmParams{}, 5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::bind_failed);
  }
  const auto port = a.tcp_port();
  a.stop();
  try {
    TcpClient c({"127.0.0.1", port}, 200ms);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::connect_failed);
  }
}

TEST(Gateway, SubscriberDisconnectDoesNotStallLoop) {
  Server srv(local_config(Paradigm::SI), swarm::Simulator(swarm::SwarmParams{}, 6));
  srv.start();
  {
    WsClient ws({"127.0.0.1", srv.ws_port()});
    ASSERT_TRUE(ws.replies().wait_for([](const WireMessage& m) { return m.type == MsgType::state; }, 2s));
  }
  const auto before = srv.ticks();
  std::this_thread::sleep_for(500ms);
  EXPECT_GE(srv.ticks() - before, 8);
  WsClient again({"127.0.0.1", srv.ws_port()});
  EXPECT_TRUE(again.replies().wait_for([](const WireMessage& m) { return m.type == MsgType::state; }, 2s));
  again.close();
  srv.stop();
}

TEST(Gateway, SessionLogKeepsArrivalOrderAndReplaysOffline) {
  const auto log = temp_path("order.jsonl");
  {
    swarm::SwarmParams params;
    Server srv(local_config(Paradigm::SI, log), swarm::Simulator(params, 7));
    srv.start();
    TcpClient c({"127.0.0.1", srv.tcp_port()});
    WsClient ws({"127.0.0.1", srv.ws_port()});
    c.send(command(Paradigm::SI, "go", 0.9, 1));
    std::this_thread::sleep_for(200ms);
    ws.send(mode_set_message(Paradigm::VI, 1));
    ASSERT_TRUE(ws.replies().wait_for([](const WireMessage& m) { return is_reply_to(m, 1); }, 2s));
    for (std::uint64_t s = 2; s <= 30; ++s) {
      static const char* labels[] = {"fall_in", "spread_out", "split"};
      c.send(command(Paradigm::VI, labels[s % 3], 0.3 + 0.02 * static_cast<double>(s), s));
      std::this_thread::sleep_for(20ms);
    }
    ASSERT_TRUE(c.replies().wait_for([](const WireMessage& m) { return is_reply_to(m, 30); }, 3s));
    std::this_thread::sleep_for(300ms);
    ws.close();
    c.close();
    srv.stop();
  }
  const auto entries = read_session_log(log);
  std::vector<std::uint64_t> seqs;
  std::size_t applied = 0;
  for (const auto& e : entries)
    if (e["event"] == "command" && e["kind"] == "decoder") {
      seqs.push_back(e["seq"].get<std::uint64_t>());
      applied += e["status"] == "applied";
    }
  ASSERT_EQ(seqs.size(), 30u);
  for (std::size_t i = 0; i < seqs.size(); ++i) EXPECT_EQ(seqs[i], i + 1);
  EXPECT_GT(applied, 5u);
  EXPECT_LT(applied, 30u);

  const auto offline = replay_session_log(entries);
  EXPECT_EQ(metrics_json(offline.metrics).dump(), entries.back()["metrics"].dump());
  std::remove(log.c_str());
}

TEST(Gateway, FuzzedLinesOverTcpAreAllAnswered) {
  Server srv(local_config(Paradigm::MI), swarm::Simulator(swarm::SwarmParams{}, 8));
  srv.start();
  TcpClient c({"127.0.0.1", srv.tcp_port()});
  const auto lines = fuzz::corpus(2000, 99);
  std::string blob;
  for (const auto& l : lines) blob += l + "\n";
  c.send_line(blob);
  std::size_t answered = 0;
  while (answered < lines.size()) {
    if (!c.replies().pop(3s)) break;
    ++answered;
  }
  EXPECT_EQ(answered, lines.size());
  c.send(command(Paradigm::MI, "down", 0.9, 1ull << 40));
  EXPECT_TRUE(c.replies().wait_for([](const WireMessage& m) { return m.type == MsgType::ack; }, 2s));
  srv.stop();
}
