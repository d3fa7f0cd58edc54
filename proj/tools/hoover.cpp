// Command-line front end: synth, attack, eval, detect, biometrics, replay.
//
// Exit codes: 0 success, 2 usage or configuration error, 3 data error.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hoover/hoover.hpp"
#include "hoover/pipeline.hpp"

namespace fs = std::filesystem;
using namespace hoover;
using pipeline::DataError;
using pipeline::UsageError;

namespace {

constexpr const char* kToolVersion = "1.0.0";
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;

std::string fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string read_input(const std::string& path) {
  try {
    return read_file(path);
  } catch (const std::runtime_error& e) {
    throw DataError(e.what());
  }
}

struct Run {
  std::string command;
  std::vector<std::string> args;  // as given, without the program name
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::vector<std::pair<std::string, std::string>> outputs;  // path, bytes

  void emit(const std::string& path, std::string bytes) { outputs.emplace_back(path, std::move(bytes)); }

  void write(const std::string& manifest_path) const {
    nlohmann::ordered_json outs = nlohmann::ordered_json::array();
    for (const auto& [path, bytes] : outputs) {
      const fs::path parent = fs::path(path).parent_path();
      std::error_code ec;
      if (!parent.empty()) fs::create_directories(parent, ec);
      try {
        write_file(path, bytes);
      } catch (const std::runtime_error& e) {
        throw UsageError(e.what());
      }
      outs.push_back({{"path", path}, {"bytes", bytes.size()}, {"fnv1a64", fnv1a64(bytes)}});
    }
    nlohmann::ordered_json m = {{"tool", "hoover"},   {"version", kToolVersion}, {"command", command},
                                {"args", args},       {"seed", seed},            {"inputs", inputs},
                                {"outputs", outs}};
    try {
      write_file(manifest_path, m.dump(2) + "\n");
    } catch (const std::runtime_error& e) {
      throw UsageError(e.what());
    }
  }
};

ConfigMap load_config(const std::string& path) {
  if (path.empty()) return {};
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::runtime_error&) {
    throw UsageError("cannot read config '" + path + "'");
  }
  try {
    return parse_config(text);
  } catch (const ConfigError& e) {
    throw UsageError(path + ": " + e.what());
  }
}

std::vector<Session> load_sessions(const std::vector<std::string>& paths) {
  std::vector<Session> out;
  for (const auto& p : paths) out.push_back(pipeline::parse_session_bytes(p, read_input(p)));
  return out;
}

std::vector<CapturedClick> load_captures(const std::vector<std::string>& paths) {
  std::vector<CapturedClick> out;
  for (const auto& p : paths) {
    auto more = pipeline::parse_captures_bytes(p, read_input(p));
    out.insert(out.end(), more.begin(), more.end());
  }
  return out;
}

std::string join_path(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

int run_command(std::vector<std::string> args);

int replay(const std::string& manifest_path, bool verify) {
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(read_input(manifest_path));
    if (m.at("tool") != "hoover") throw DataError("not a hoover manifest");
  } catch (const nlohmann::json::exception& e) {
    throw DataError(manifest_path + ": " + e.what());
  }
  const auto args = m.at("args").get<std::vector<std::string>>();
  if (!args.empty() && args.front() == "replay") throw DataError("a manifest cannot replay a replay");
  const int rc = run_command(args);
  if (rc != 0 || !verify) return rc;
  for (const auto& o : m.at("outputs")) {
    const std::string path = o.at("path");
    if (fnv1a64(read_input(path)) != o.at("fnv1a64").get<std::string>()) {
      std::cerr << "replay: " << path << " differs from the recorded run\n";
      return kExitData;
    }
  }
  std::cerr << "replay: " << m.at("outputs").size() << " outputs identical\n";
  return 0;
}

int run_command(std::vector<std::string> args) {
  CLI::App app{"Hover-event input inference simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  std::uint64_t seed = 0;
  std::string config_path, out;
  std::vector<std::string> policies;
  std::string anchor;
  int k_hovers = 4;

  auto* synth = app.add_subcommand("synth", "generate synthetic user sessions");
  synth->add_option("--seed", seed, "master seed");
  synth->add_option("--config", config_path, "session generator config (key = value)");
  synth->add_option("--out", out, "output directory")->required();

  std::vector<std::string> session_paths;
  auto* attack = app.add_subcommand("attack", "run the hover-capture attack on sessions");
  attack->add_option("sessions", session_paths, "session files")->required();
  attack->add_option("--seed", seed, "master seed (the attack itself is deterministic)");
  attack->add_option("--config", config_path, "attacker config (key = value)");
  attack->add_option("--policy", policies, "dispatch policy names, comma separated");
  attack->add_option("--anchor", anchor, "activation window anchor")->check(CLI::IsMember({"down", "up"}));
  attack->add_option("--k-hovers", k_hovers, "hovers captured per click (at most 4)");
  attack->add_option("--out", out, "output directory")->required();

  std::vector<std::string> capture_paths, truth_paths, models;
  std::string cv = "loocv", task = "regression", corpus, models_dir;
  bool no_dt = false;
  auto* eval = app.add_subcommand("eval", "cross-validate inference models on captures");
  eval->add_option("--captures", capture_paths, "capture files")->required();
  eval->add_option("--truth", truth_paths, "session files holding the truth clicks")->required();
  eval->add_option("--task", task, "regression or classification")
      ->check(CLI::IsMember({"regression", "classification"}));
  eval->add_option("--model", models, "model spec, e.g. forest:n=100,depth=12 (repeatable)");
  eval->add_option("--cv", cv, "loocv or kfold:K");
  eval->add_option("--k-hovers", k_hovers, "hovers per feature vector (at most 4)");
  eval->add_flag("--no-dt", no_dt, "leave hover timestamps out of the features");
  eval->add_option("--corpus", corpus, "corpus label written to the CSV");
  eval->add_option("--models-dir", models_dir, "also write every model fitted on all rows here");
  eval->add_option("--seed", seed, "seed for folds and forests");
  eval->add_option("--out", out, "metrics CSV path")->required();

  auto* detect = app.add_subcommand("detect", "score keyboard-session detection heuristics");
  detect->add_option("--captures", capture_paths, "capture files")->required();
  detect->add_option("--truth", truth_paths, "session files holding the truth clicks")->required();
  detect->add_option("--seed", seed, "unused; recorded in the manifest");
  detect->add_option("--out", out, "detection CSV path")->required();

  auto* bio = app.add_subcommand("biometrics", "extract click timing features");
  bio->add_option("--captures", capture_paths, "capture files")->required();
  bio->add_option("--seed", seed, "unused; recorded in the manifest");
  bio->add_option("--out", out, "biometrics CSV path")->required();

  std::string manifest_path;
  bool verify = false;
  auto* rep = app.add_subcommand("replay", "re-run the command recorded in a manifest");
  rep->add_option("manifest", manifest_path, "manifest.json")->required();
  rep->add_flag("--verify", verify, "fail unless every output matches the recorded hash");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  Run run;
  run.args = args;
  run.seed = seed;

  if (synth->parsed()) {
    run.command = "synth";
    if (!config_path.empty()) run.inputs.push_back(config_path);
    const auto cfg = pipeline::synth_config(load_config(config_path));
    for (auto& f : pipeline::run_synth(cfg, seed)) run.emit(join_path(out, f.name), std::move(f.bytes));
    run.write(join_path(out, "manifest.json"));
  } else if (attack->parsed()) {
    run.command = "attack";
    if (!config_path.empty()) run.inputs.push_back(config_path);
    AttackerConfig cfg = pipeline::attacker_config(load_config(config_path));
    if (attack->count("--k-hovers")) {
      if (k_hovers < 1 || k_hovers > 4) throw UsageError("--k-hovers must be between 1 and 4");
      cfg.max_hovers = k_hovers;
    }
    if (anchor == "down") cfg.window_anchor = WindowAnchor::TouchDown;
    if (anchor == "up") cfg.window_anchor = WindowAnchor::TouchUp;
    DispatchPolicy policy;
    for (const auto& p : policies) pipeline::apply_policy(policy, p);
    run.inputs = session_paths;
    const auto sessions = load_sessions(session_paths);
    for (auto& f : pipeline::run_attacks(sessions, cfg, policy)) run.emit(join_path(out, f.name), std::move(f.bytes));
    run.write(join_path(out, "manifest.json"));
  } else if (eval->parsed()) {
    run.command = "eval";
    if (k_hovers < 1 || k_hovers > 4) throw UsageError("--k-hovers must be between 1 and 4");
    pipeline::EvalOptions opt;
    opt.task = task == "classification" ? learn::Task::Classification : learn::Task::Regression;
    opt.models = models;
    opt.cv = pipeline::parse_cv(cv);
    opt.features = {k_hovers, !no_dt};
    opt.seed = seed;
    opt.save_models = !models_dir.empty();
    run.inputs = capture_paths;
    run.inputs.insert(run.inputs.end(), truth_paths.begin(), truth_paths.end());
    const auto captures = load_captures(capture_paths);
    const auto sessions = load_sessions(truth_paths);
    opt.corpus = corpus.empty() ? std::string(to_string(sessions.front().method)) : corpus;
    auto result = pipeline::run_eval(captures, sessions, opt);
    if (result.dropped_empty || result.dropped_unlabeled)
      std::cerr << "eval: dropped " << result.dropped_empty << " clicks without hovers and "
                << result.dropped_unlabeled << " without a key label\n";
    for (auto& f : result.files)
      run.emit(f.name == "metrics.csv" ? out : join_path(models_dir, f.name), std::move(f.bytes));
    run.write(out + ".manifest.json");
  } else if (detect->parsed()) {
    run.command = "detect";
    run.inputs = capture_paths;
    run.inputs.insert(run.inputs.end(), truth_paths.begin(), truth_paths.end());
    const auto captures = load_captures(capture_paths);
    const auto sessions = load_sessions(truth_paths);
    std::vector<pipeline::CaptureStream> streams;
    for (const Session& s : sessions) {
      pipeline::CaptureStream cs;
      cs.truth = &s;
      for (const CapturedClick& c : captures)
        if (c.user_id == s.user_id) cs.captures.push_back(c);
      streams.push_back(std::move(cs));
    }
    for (const CapturedClick& c : captures)
      if (std::none_of(sessions.begin(), sessions.end(), [&](const Session& s) { return s.user_id == c.user_id; }))
        throw DataError("no truth session for user " + std::to_string(c.user_id));
    const auto [simple, refined] = pipeline::detect_all(streams);
    run.emit(out, pipeline::detection_csv(simple, refined));
    run.write(out + ".manifest.json");
  } else if (bio->parsed()) {
    run.command = "biometrics";
    run.inputs = capture_paths;
    const auto captures = load_captures(capture_paths);
    std::map<int, std::vector<CapturedClick>> by_user;
    for (const CapturedClick& c : captures) by_user[c.user_id].push_back(c);
    if (by_user.empty()) throw DataError("no captured clicks");
    std::vector<BiometricRecord> records;
    for (const auto& [user, list] : by_user) {
      try {
        auto more = biometrics(list);
        records.insert(records.end(), more.begin(), more.end());
      } catch (const std::invalid_argument& e) {
        throw DataError("user " + std::to_string(user) + ": " + e.what());
      }
    }
    run.emit(out, biometrics_csv(records));
    run.write(out + ".manifest.json");
  } else if (rep->parsed()) {
    return replay(manifest_path, verify);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    return run_command(args);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}
