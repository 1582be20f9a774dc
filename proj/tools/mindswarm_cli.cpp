#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mindswarm/decoder/bundle.hpp"
#include "mindswarm/decoder/evaluate.hpp"
#include "mindswarm/eeg/container.hpp"
#include "mindswarm/gateway/replay.hpp"
#include "mindswarm/gateway/server.hpp"
#include "mindswarm/swarm/scenario.hpp"
#include "mindswarm/synth/synthgen.hpp"

using namespace mindswarm;

namespace {

constexpr std::uint64_t kDefaultSeed = 7;

enum Exit { ok = 0, bad_input = 2, insufficient = 3, connectivity = 4, sim_fault = 5 };

int exit_code(Errc c) {
  switch (c) {
    case Errc::insufficient_data:
    case Errc::rank_deficient:
    case Errc::degenerate_trial:
    case Errc::singular: return insufficient;
    case Errc::bind_failed:
    case Errc::connect_failed: return connectivity;
    case Errc::diverged: return sim_fault;
    default: return bad_input;
  }
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream is(path);
  require(is.is_open(), Errc::io, "cannot open '" + path + "'");
  auto j = nlohmann::json::parse(is, nullptr, false);
  require(!j.is_discarded(), Errc::invalid_spec, "'" + path + "' is not valid JSON");
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream os(path, std::ios::binary);
  require(os.is_open(), Errc::io, "cannot open '" + path + "' for writing");
  os << text;
}

std::optional<Paradigm> paradigm_opt(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return paradigm_from_string(s);
}

// Decoder overrides shared by train and eval.
struct DecoderFlags {
  std::size_t n_pairs = 3;
  double shrinkage = 0.05;
  bool auto_shrinkage = false;
  double band_low = 8.0, band_high = 30.0;
  double target_fs = 100.0;
  double notch = 60.0;
  std::vector<double> window;
  bool no_ica = false;
  std::size_t ica_components = 20;

  void add(CLI::App* cmd) {
    cmd->add_option("--n-pairs", n_pairs, "CSP filter pairs per class")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--shrinkage", shrinkage, "LDA shrinkage gamma")->capture_default_str()->check(CLI::Range(0.0, 1.0));
    cmd->add_flag("--auto-shrinkage", auto_shrinkage, "Ledoit-Wolf shrinkage instead of --shrinkage");
    cmd->add_option("--band-low", band_low, "bandpass low edge, Hz")->capture_default_str();
    cmd->add_option("--band-high", band_high, "bandpass high edge, Hz")->capture_default_str();
    cmd->add_option("--target-fs", target_fs, "rate after downsampling, Hz")->capture_default_str();
    cmd->add_option("--notch", notch, "line-noise notch, Hz (0 disables)")->capture_default_str();
    cmd->add_option("--window", window, "epoch window start end, seconds from imagery onset")->expected(2);
    cmd->add_flag("--no-ica", no_ica, "skip ICA artifact removal");
    cmd->add_option("--ica-components", ica_components, "ICA components")->capture_default_str();
  }

  decoder::PipelineConfig config(std::uint64_t seed) const {
    decoder::PipelineConfig cfg;
    cfg.n_pairs = n_pairs;
    cfg.lda.shrinkage = shrinkage;
    cfg.lda.auto_shrinkage = auto_shrinkage;
    cfg.chain.band_low_hz = band_low;
    cfg.chain.band_high_hz = band_high;
    cfg.chain.target_fs = target_fs;
    cfg.chain.notch_hz = notch > 0.0 ? std::optional<double>(notch) : std::nullopt;
    if (!window.empty()) cfg.chain.window = eeg::EpochWindow{window.at(0), window.at(1)};
    cfg.chain.ica = !no_ica;
    cfg.chain.ica_components = ica_components;
    cfg.chain.ica_seed = seed;
    return cfg;
  }
};

// Swarm gain overrides shared by sim and serve.
struct GainFlags {
  std::optional<double> w_coh, w_sep, w_align, w_goal, w_cmd, d_star, v_max;
  std::optional<std::size_t> n_agents;

  void add(CLI::App* cmd) {
    cmd->add_option("--w-coh", w_coh, "cohesion gain");
    cmd->add_option("--w-sep", w_sep, "separation gain");
    cmd->add_option("--w-align", w_align, "alignment gain");
    cmd->add_option("--w-goal", w_goal, "goal gain");
    cmd->add_option("--w-cmd", w_cmd, "velocity command gain");
    cmd->add_option("--d-star", d_star, "formation distance, m");
    cmd->add_option("--v-max", v_max, "speed limit, m/s");
    cmd->add_option("--agents", n_agents, "swarm size (scenarios without explicit positions)");
  }

  void apply(swarm::SwarmParams& p) const {
    if (w_coh) p.w_coh = *w_coh;
    if (w_sep) p.w_sep = *w_sep;
    if (w_align) p.w_align = *w_align;
    if (w_goal) p.w_goal = *w_goal;
    if (w_cmd) p.w_cmd = *w_cmd;
    if (d_star) p.d_star = *d_star;
    if (v_max) p.v_max = *v_max;
    if (n_agents) p.n_agents = *n_agents;
    p.validate();
  }
};

bool on_command_line(const CLI::Option* opt, const std::vector<std::string>& args) {
  for (const auto& name : opt->get_lnames())
    for (const auto& a : args)
      if (a == "--" + name || a.rfind("--" + name + "=", 0) == 0) return true;
  return false;
}

void apply_env(CLI::Option* opt, const char* var, const std::vector<std::string>& args) {
  const char* value = std::getenv(var);
  if (!value || on_command_line(opt, args)) return;
  opt->clear();
  opt->add_result(std::string(value));
  opt->run_callback();
}

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) { g_interrupted = true; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EEG imagery decoding and drone-swarm command gateway"};
  app.set_config("--config", "", "TOML config file (sections per subcommand)");
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "print resolved settings to stderr");
  std::uint64_t seed = kDefaultSeed;
  auto* seed_opt = app.add_option("--seed", seed, "random seed (env MINDSWARM_SEED)")->capture_default_str();

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic recording");
  std::string spec_path, synth_out, synth_paradigm = "MI";
  double synth_fs = 0.0;
  synth->add_option("--spec", spec_path, "SynthSpec JSON (default: built-in spec for --paradigm)")->check(CLI::ExistingFile);
  synth->add_option("--paradigm", synth_paradigm, "paradigm when no spec is given")->capture_default_str();
  synth->add_option("--fs", synth_fs, "override sampling rate, Hz");
  synth->add_option("-o,--out", synth_out, "output recording")->required();

  // train
  auto* train = app.add_subcommand("train", "fit a pipeline bundle on a recording");
  std::string train_rec, train_out, train_paradigm, trained_at = "unspecified";
  DecoderFlags train_flags;
  train->add_option("-r,--recording", train_rec, "input recording")->required()->check(CLI::ExistingFile);
  train->add_option("-o,--out", train_out, "output pipeline bundle")->required();
  train->add_option("--paradigm", train_paradigm, "marker paradigm (default: from markers)");
  auto* trained_at_opt = train->add_option("--trained-at", trained_at, "timestamp stored in the bundle (env MINDSWARM_TRAINED_AT)")
                             ->capture_default_str();
  train_flags.add(train);

  // eval
  auto* eval = app.add_subcommand("eval", "cross-validate the pipeline on one or more recordings");
  std::vector<std::string> eval_recs;
  std::string eval_out, eval_paradigm;
  std::size_t k = 5, repeats = 5;
  bool shuffle = false;
  DecoderFlags eval_flags;
  eval->add_option("-r,--recording", eval_recs, "input recordings")->required()->check(CLI::ExistingFile);
  eval->add_option("-o,--out", eval_out, "report JSON path (stdout when omitted)");
  eval->add_option("--paradigm", eval_paradigm, "marker paradigm (default: from markers)");
  eval->add_option("-k,--folds", k, "folds")->capture_default_str()->check(CLI::Range(2, 1000));
  eval->add_option("--repeats", repeats, "repeats")->capture_default_str()->check(CLI::PositiveNumber);
  eval->add_flag("--shuffle-labels", shuffle, "permute labels before CV (chance control)");
  eval_flags.add(eval);

  // decode-replay
  auto* replay = app.add_subcommand("decode-replay", "decode a recording and stream commands to a gateway");
  std::string replay_rec, replay_pipe, endpoint = gateway::kDefaultTcp.str();
  double speed = 1.0;
  replay->add_option("-r,--recording", replay_rec, "input recording")->required()->check(CLI::ExistingFile);
  replay->add_option("-p,--pipeline", replay_pipe, "pipeline bundle")->required()->check(CLI::ExistingFile);
  auto* endpoint_opt = replay->add_option("--endpoint", endpoint, "gateway TCP endpoint (env MINDSWARM_TCP)")->capture_default_str();
  replay->add_option("--speed", speed, "real-time multiplier")->capture_default_str();

  // sim
  auto* sim = app.add_subcommand("sim", "headless scripted swarm run");
  std::string scenario_path, sim_out;
  sim->add_option("-s,--scenario", scenario_path, "scenario JSON")->required()->check(CLI::ExistingFile);
  sim->add_option("-o,--out", sim_out, "metrics CSV (stdout when omitted)");
  GainFlags sim_gains;
  sim_gains.add(sim);

  // serve
  auto* serve = app.add_subcommand("serve", "run the live gateway");
  std::string tcp_ep = gateway::kDefaultTcp.str(), ws_ep = gateway::kDefaultWs.str(), serve_paradigm = "SI", log_path;
  std::string serve_scenario;
  double threshold = 0.5, tick_hz = 20.0, snapshot_hz = 10.0, duration = 0.0;
  auto* tcp_opt = serve->add_option("--tcp", tcp_ep, "decoder endpoint (env MINDSWARM_TCP)")->capture_default_str();
  auto* ws_opt = serve->add_option("--ws", ws_ep, "operator WebSocket endpoint, path /ws (env MINDSWARM_WS)")->capture_default_str();
  serve->add_option("--paradigm", serve_paradigm, "initial active paradigm")->capture_default_str();
  serve->add_option("--threshold", threshold, "confidence threshold")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  serve->add_option("--tick-hz", tick_hz, "simulation rate")->capture_default_str()->check(CLI::PositiveNumber);
  serve->add_option("--snapshot-hz", snapshot_hz, "snapshot rate")->capture_default_str()->check(CLI::PositiveNumber);
  serve->add_option("--log", log_path, "session log (JSON lines)");
  serve->add_option("--scenario", serve_scenario, "scenario JSON for swarm params and start positions")
      ->check(CLI::ExistingFile);
  serve->add_option("--duration", duration, "stop after this many seconds (0: until interrupted)")->capture_default_str();
  GainFlags serve_gains;
  serve_gains.add(serve);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? ok : bad_input;
  }

  // CLI11 lets a config file shadow env vars; env has to win over config.
  const std::vector<std::string> args(argv + 1, argv + argc);
  try {
    for (auto [opt, var] : {std::pair{seed_opt, "MINDSWARM_SEED"}, {trained_at_opt, "MINDSWARM_TRAINED_AT"},
                            {endpoint_opt, "MINDSWARM_TCP"}, {tcp_opt, "MINDSWARM_TCP"}, {ws_opt, "MINDSWARM_WS"}})
      apply_env(opt, var, args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? ok : bad_input;
  }

  if (verbose) {
    std::cerr << "# resolved settings (flag > env > config > default)\n" << app.config_to_str(true, false);
  }

  try {
    if (*synth) {
      synth::SynthSpec spec;
      if (!spec_path.empty()) spec = read_json_file(spec_path).get<synth::SynthSpec>();
      else spec = synth::default_spec(paradigm_from_string(synth_paradigm));
      if (spec_path.empty() || seed_opt->count() > 0) spec.seed = seed;
      if (synth_fs > 0.0) spec.fs = synth_fs;
      const auto out = synth::generate_with_truth(spec);
      eeg::write_recording(out.rec, synth_out);
      std::map<std::string, std::size_t> per;
      for (const auto& e : out.rec.events) ++per[e.label];
      std::cout << out.rec.events.size() << " trials";
      for (auto l : labels_of(spec.paradigm)) std::cout << ' ' << l << '=' << per[std::string(l)];
      std::cout << " (" << out.rec.n_channels() << " channels, " << out.rec.n_samples() << " samples at "
                << out.rec.sample_rate << " Hz)\n";
      return ok;
    }

    if (*train) {
      const auto rec = eeg::read_recording(train_rec);
      const auto cfg = train_flags.config(seed);
      const auto pipe = decoder::train_recording(rec, cfg, seed, trained_at, paradigm_opt(train_paradigm));
      decoder::save_pipeline(pipe, train_out);
      std::cout << "trained " << to_string(pipe.paradigm) << " pipeline: " << pipe.classes.size() << " classes, "
                << pipe.channels.size() << " channels, " << pipe.n_times << " samples per trial";
      if (pipe.ica) std::cout << ", " << pipe.ica->flagged.size() << " ICA components removed";
      std::cout << "\n";
      return ok;
    }

    if (*eval) {
      const auto cfg = eval_flags.config(seed);
      decoder::CvOptions opt{k, repeats, seed};
      std::vector<decoder::NamedReport> reports;
      for (const auto& path : eval_recs) {
        const auto rec = eeg::read_recording(path);
        reports.push_back({path, decoder::evaluate_recording(rec, cfg, opt, shuffle, paradigm_opt(eval_paradigm))});
      }
      const auto doc = decoder::report_document(reports);
      write_text(eval_out, doc.dump(2) + "\n");
      if (!eval_out.empty())
        for (const auto& r : reports)
          std::cerr << r.name << ": mean " << r.report.mean << " std " << r.report.stdev << " chance "
                    << r.report.chance_level << "\n";
      return ok;
    }

    if (*replay) {
      require(speed > 0.0, Errc::invalid_argument, "--speed must be > 0");
      const auto rec = eeg::read_recording(replay_rec);
      const auto pipe = decoder::load_pipeline(replay_pipe);
      const auto trials = gateway::decode_trials(rec, pipe);
      gateway::ReplayOptions opt;
      opt.endpoint = gateway::parse_endpoint(endpoint);
      opt.speed = speed;
      const auto res = gateway::replay_commands(trials, opt);
      std::cout << "sent " << res.sent << " accepted " << res.accepted << " rejected " << res.rejected_total();
      for (const auto& [why, n] : res.rejected) std::cout << ' ' << why << '=' << n;
      std::cout << " unanswered " << res.unanswered << " correct " << res.correct << '/' << res.sent << "\n";
      if (res.rejected_total() > 0)
        std::cerr << "warning: " << res.rejected_total() << " of " << res.sent << " commands rejected\n";
      if (res.unanswered > 0) {
        std::cerr << "error: " << res.unanswered << " commands got no reply\n";
        return connectivity;
      }
      return ok;
    }

    if (*sim) {
      auto sc = swarm::load_scenario(scenario_path);
      sim_gains.apply(sc.params);
      const auto rows = swarm::run_scenario(sc);
      write_text(sim_out, swarm::csv_string(rows));
      return ok;
    }

    if (*serve) {
      gateway::SessionConfig cfg;
      cfg.active_paradigm = paradigm_from_string(serve_paradigm);
      cfg.confidence_threshold = threshold;
      cfg.tick_hz = tick_hz;
      cfg.snapshot_hz = snapshot_hz;
      cfg.tcp = gateway::parse_endpoint(tcp_ep);
      cfg.ws = gateway::parse_endpoint(ws_ep);
      cfg.log_path = log_path;
      swarm::Scenario sc;
      if (!serve_scenario.empty()) sc = swarm::load_scenario(serve_scenario);
      if (seed_opt->count() > 0 || serve_scenario.empty()) sc.seed = seed;
      serve_gains.apply(sc.params);
      gateway::Server srv(cfg, swarm::make_simulator(sc));
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      srv.start();
      std::cout << "gateway listening tcp " << cfg.tcp.host << ':' << srv.tcp_port() << " ws " << cfg.ws.host << ':'
                << srv.ws_port() << "/ws active " << to_string(cfg.active_paradigm) << std::endl;
      const auto start = std::chrono::steady_clock::now();
      while (!g_interrupted) {
        if (duration > 0.0 && std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() >= duration)
          break;
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
      }
      srv.stop();
      const auto& s = srv.sequencer().simulator();
      std::cout << "session ended at tick " << s.state().tick << " mode " << swarm::to_string(s.state().mode) << "\n";
      if (srv.sequencer().fault()) {
        std::cerr << "error: " << *srv.sequencer().fault() << "\n";
        return sim_fault;
      }
      return ok;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return bad_input;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return bad_input;
  }
  return ok;
}
