// tools/commands.hpp

// Copyright 2026  The ddsd Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef DDSD_TOOLS_COMMANDS_HPP_
#define DDSD_TOOLS_COMMANDS_HPP_

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ddsd/ddsd.hpp"

namespace ddsd::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kValidation = 2,
  kBackend = 3,
  kUnattainable = 4,
};

namespace detail {

inline std::string UtcNow() {
  std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline bool OnOff(const std::string &v, const std::string &flag) {
  if (v == "on") return true;
  if (v == "off") return false;
  throw ValidationError(flag + " must be 'on' or 'off'");
}

inline std::vector<double> ParseDoubleList(const std::string &s, const std::string &flag) {
  std::vector<double> out;
  for (std::string_view f : Split(s, ',')) {
    auto v = ParseDouble(Trim(f));
    if (!v) throw ValidationError(flag + ": bad number '" + std::string(f) + "'");
    out.push_back(*v);
  }
  return out;
}

inline std::vector<std::string> ParseList(const std::string &s) {
  std::vector<std::string> out;
  for (std::string_view f : Split(s, ','))
    if (!Trim(f).empty()) out.emplace_back(Trim(f));
  return out;
}

}  // namespace detail

/// Provenance record written next to a command's outputs.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::uint64_t seed = 0;
  std::optional<std::string> dataset_path;
  std::optional<std::string> dataset_hash;
  std::optional<std::string> backend;
  std::string started_at;
  std::string finished_at;
  std::vector<std::string> outputs;
  int exit_code = 0;

  std::string Dump() const {
    nlohmann::ordered_json j;
    j["tool"] = "ddsd";
    j["command"] = command;
    j["argv"] = argv;
    j["config"] = config;
    j["seed"] = seed;
    j["dataset"] = nullptr;
    if (dataset_path) j["dataset"] = {{"path", *dataset_path}, {"fnv1a64", *dataset_hash}};
    j["backend"] = backend ? nlohmann::ordered_json(*backend) : nlohmann::ordered_json();
    j["started_at"] = started_at;
    j["finished_at"] = finished_at;
    j["outputs"] = outputs;
    j["exit_code"] = exit_code;
    return j.dump(2) + "\n";
  }
};

/// Shared state for one invocation; each command fills in what it knows.
struct Run {
  std::ostream &out;
  std::ostream &err;
  RunManifest manifest;
  std::string out_dir = "out";
  std::uint64_t seed = 0;

  std::string Path(const std::string &name) const {
    return (std::filesystem::path(out_dir) / name).string();
  }
  void Emit(const std::string &name, std::string_view content) {
    std::string p = Path(name);
    WriteFile(p, content);
    manifest.outputs.push_back(p);
  }
  std::string LoadDataset(const std::string &path) {
    std::string doc = ReadFile(path);
    manifest.dataset_path = path;
    manifest.dataset_hash = HexDigest(Fnv1a64(doc));
    return doc;
  }
};

// ---------------------------------------------------------------------------
// Flag groups

struct PromptFlags {
  std::string grid;
  std::size_t followup_hyps = 8;
  std::string context = "on";
  std::string task_prompt = "auto";
  int cost_decimals = 1;

  void Add(CLI::App *app) {
    app->add_option("--grid", grid, "comma-separated grid rows, e.g. 1,8,1-1,1-8");
    app->add_option("--followup-hyps", followup_hyps, "follow-up hypotheses (1 = plain 1-best)");
    app->add_option("--context", context, "include the initial query: on|off");
    app->add_option("--task-prompt", task_prompt, "prepend the task prompt: on|off|auto");
    app->add_option("--cost-decimals", cost_decimals, "decimals of rendered costs");
  }

  /// `task_default` applies when --task-prompt is auto.
  std::vector<PromptConfig> Configs(bool task_default) const {
    bool task = task_prompt == "auto" ? task_default : detail::OnOff(task_prompt, "--task-prompt");
    if (cost_decimals < 0) throw ValidationError("--cost-decimals must be >= 0");
    std::vector<PromptConfig> out;
    if (!grid.empty()) {
      for (const auto &row : detail::ParseList(grid)) out.push_back(GridRowConfig(row, task));
      if (out.empty()) throw ValidationError("--grid lists no rows");
    } else {
      if (followup_hyps == 0) throw ValidationError("--followup-hyps must be >= 1");
      std::string row = std::to_string(followup_hyps);
      if (detail::OnOff(context, "--context")) row = "1-" + row;
      out.push_back(GridRowConfig(row, task));
    }
    for (auto &c : out) c.cost_decimals = cost_decimals;
    return out;
  }
};

struct BackendFlags {
  std::string backend = "auto";
  std::string endpoint;
  std::string model;
  int embedding_dim = 4096;
  int max_in_flight = 4;
  int timeout_ms = 30000;
  int max_new_tokens = 32;
  std::string pooling = "last_token";
  int fallback_label = 1;
  bool mock_verbose = false;
  double mock_descriptive = 0.0;
  double mock_noise = 0.25;

  void Add(CLI::App *app) {
    app->add_option("--backend", backend, "mock|remote|auto (remote when --endpoint is set)");
    app->add_option("--endpoint", endpoint, "remote service base URL");
    app->add_option("--model", model, "remote model name");
    app->add_option("--embedding-dim", embedding_dim, "embedding width");
    app->add_option("--max-in-flight", max_in_flight, "concurrent remote requests");
    app->add_option("--timeout-ms", timeout_ms, "remote request timeout");
    app->add_option("--max-new-tokens", max_new_tokens, "generation length cap");
    app->add_option("--pooling", pooling, "last_token|mean");
    app->add_option("--fallback-label", fallback_label, "label for unparseable answers");
    app->add_flag("--mock-verbose", mock_verbose, "mock answers explain before the label");
    app->add_option("--mock-descriptive", mock_descriptive,
                    "share of mock answers with no label line");
    app->add_option("--mock-noise", mock_noise, "mock embedding noise amplitude");
  }

  BackendConfig Config(std::uint64_t seed) const {
    BackendConfig c;
    if (backend == "mock") {
      c.kind = BackendKind::kMock;
    } else if (backend == "remote") {
      c.kind = BackendKind::kRemote;
    } else if (backend == "auto") {
      c.kind = endpoint.empty() ? BackendKind::kMock : BackendKind::kRemote;
    } else {
      throw ValidationError("--backend must be mock, remote or auto");
    }
    c.endpoint_url = endpoint;
    c.model_name = model;
    if (c.kind == BackendKind::kRemote) ApplyEnvironment(c);
    c.embedding_dim = embedding_dim;
    c.max_in_flight = max_in_flight;
    if (timeout_ms <= 0) throw ValidationError("--timeout-ms must be > 0");
    c.request_timeout = std::chrono::milliseconds(timeout_ms);
    c.max_new_tokens = max_new_tokens;
    if (pooling == "last_token") {
      c.pooling = Pooling::kLastToken;
    } else if (pooling == "mean") {
      c.pooling = Pooling::kMean;
    } else {
      throw ValidationError("--pooling must be last_token or mean");
    }
    c.fallback_label = fallback_label;
    c.seed = seed;
    c.mock_verbose = mock_verbose;
    if (!(mock_descriptive >= 0 && mock_descriptive <= 1))
      throw ValidationError("--mock-descriptive must be in [0, 1]");
    c.mock_descriptive_fraction = mock_descriptive;
    if (!(mock_noise >= 0)) throw ValidationError("--mock-noise must be >= 0");
    c.mock_noise_scale = mock_noise;
    return c;
  }
};

inline std::optional<DataSplit> SplitFilter(const std::string &s) {
  if (s == "all") return std::nullopt;
  auto v = ParseSplit(s);
  if (!v) throw ValidationError("--split must be train, val, test or all");
  return v;
}

// ---------------------------------------------------------------------------
// Commands

struct SynthFlags {
  std::size_t num_pairs = 1000;
  std::size_t num_speakers = 0;
  double directed_ratio = 0.2;
  double ambiguity_fraction = 0.3;
  std::size_t confusions = 3;
  std::string split_ratios = "0.7,0.1,0.2";
  bool no_splits = false;
  std::string output = "dataset.jsonl";
};

inline int CmdSynth(Run &run, const SynthFlags &f) {
  SynthConfig c;
  c.num_pairs = f.num_pairs;
  c.num_speakers = f.num_speakers;
  c.directed_ratio = f.directed_ratio;
  c.ambiguity_fraction = f.ambiguity_fraction;
  c.n_confusions = f.confusions;
  c.seed = run.seed;
  if (c.num_pairs == 0) throw ValidationError("--num-pairs must be > 0");
  auto records = GenerateCorpus(c);
  if (!f.no_splits) {
    auto r = detail::ParseDoubleList(f.split_ratios, "--split-ratios");
    if (r.size() != 3) throw ValidationError("--split-ratios needs three values");
    AssignSplits(records, {r[0], r[1], r[2]}, run.seed);
  }
  std::string doc = SaveRecords(records);
  run.Emit(f.output, doc);
  run.manifest.dataset_path = run.Path(f.output);
  run.manifest.dataset_hash = HexDigest(Fnv1a64(doc));
  run.out << "wrote " << records.size() << " pairs to " << run.Path(f.output) << "\n";
  return kOk;
}

struct NBestFlags {
  std::string lattice;
  std::size_t n = 8;
};

inline int CmdNBest(Run &run, const NBestFlags &f) {
  std::string doc = ReadFile(f.lattice);
  run.manifest.dataset_path = f.lattice;
  run.manifest.dataset_hash = HexDigest(Fnv1a64(doc));
  std::string listing;
  for (const auto &h : NBest(ParseLattice(doc), f.n))
    listing += h.text + "\t" + FormatDouble(h.total_cost) + "\n";
  run.out << listing;
  run.Emit("nbest.tsv", listing);
  return kOk;
}

struct PromptDumpFlags {
  std::string dataset;
  std::string split = "all";
  std::size_t limit = 0;
  PromptFlags prompt;
};

/// Prompts separated by a line of five '=' characters.
inline std::string PromptDump(const std::vector<UtterancePair> &pairs, const PromptConfig &config,
                              std::size_t limit) {
  std::string dump;
  std::size_t n = limit ? std::min(limit, pairs.size()) : pairs.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (i) dump += "=====\n";
    dump += RenderPrompt(pairs[i], config).text + "\n";
  }
  return dump;
}

inline int CmdPrompt(Run &run, const PromptDumpFlags &f) {
  auto records = LoadRecords(run.LoadDataset(f.dataset));
  auto split = SplitFilter(f.split);
  auto configs = f.prompt.Configs(true);
  for (const auto &c : configs) {
    std::string dump = PromptDump(PairsFor(records, split, c), c, f.limit);
    if (configs.size() == 1) {
      run.out << dump;
      run.Emit("prompts.txt", dump);
    } else {
      run.Emit("prompts_" + GridRowName(c) + ".txt", dump);
    }
  }
  return kOk;
}

struct InferFlags {
  std::string dataset;
  std::string mode = "prompting";
  std::string split = "test";
  std::string checkpoint;
  std::string checkpoint_dir;
  PromptFlags prompt;
  BackendFlags backend;
};

inline std::string CheckpointName(const PromptConfig &c) {
  return "checkpoint_" + GridRowName(c) + ".txt";
}

inline int CmdInfer(Run &run, const InferFlags &f) {
  bool classifier = f.mode == "classifier";
  if (!classifier && f.mode != "prompting")
    throw ValidationError("--mode must be prompting or classifier");
  auto records = LoadRecords(run.LoadDataset(f.dataset));
  auto split = SplitFilter(f.split);
  auto configs = f.prompt.Configs(!classifier);
  if (classifier && f.checkpoint.empty() == f.checkpoint_dir.empty())
    throw ValidationError("classifier mode needs exactly one of --checkpoint, --checkpoint-dir");
  if (classifier && !f.checkpoint.empty() && configs.size() != 1)
    throw ValidationError("--checkpoint serves one configuration; use --checkpoint-dir for a grid");
  BackendConfig bc = f.backend.Config(run.seed);
  auto backend = MakeBackend(bc);
  run.manifest.backend = backend->Identity();

  for (const auto &c : configs) {
    const std::string row = GridRowName(c);
    auto pairs = PairsFor(records, split, c);
    if (pairs.empty()) throw ValidationError("no pairs in split '" + f.split + "'");
    std::vector<ScoredExample> scores;
    std::string report = "mode = " + f.mode + "\nconfig = " + row +
                         "\npairs = " + std::to_string(pairs.size()) + "\n";
    if (classifier) {
      std::string path = f.checkpoint.empty()
                             ? (std::filesystem::path(f.checkpoint_dir) / CheckpointName(c)).string()
                             : f.checkpoint;
      LoadedCheckpoint ck = LoadCheckpoint(ReadFile(path));
      auto it = ck.meta.find("config");
      if (it != ck.meta.end() && it->second != row)
        throw ValidationError("checkpoint " + path + " was trained for config " + it->second +
                              ", not " + row);
      scores = ScoreEmbeddings(ck.model, pairs, EmbedPairs(*backend, pairs, c));
      report += "fallbacks = absent\nfallback_rate = absent\n";
    } else {
      PromptingRun pr = RunPrompting(*backend, pairs, c, bc.fallback_label);
      scores = std::move(pr.scores);
      report += "fallbacks = " + std::to_string(pr.fallbacks) +
                "\nfallback_rate = " + FormatDouble(pr.fallback_rate) + "\n";
    }
    run.Emit("scores_" + row + ".csv", WriteScoresCsv(scores));
    run.Emit("infer_" + row + ".txt", report);
    run.out << "config " << row << ": scored " << scores.size() << " pairs\n";
  }
  return kOk;
}

struct TrainFlags {
  std::string dataset;
  std::string split = "train";
  PromptFlags prompt;
  BackendFlags backend;
  double lr = 2e-5;
  int epochs = 3;
  double warmup = 0.03;
  std::size_t batch_size = 16;
  std::string optimizer = "sgd";
  double momentum = 0.9;
  bool l2_normalize = false;
  std::size_t lora_rank = 0;
  std::size_t lora_width = 64;
  double lora_alpha = 16.0;
};

inline int CmdTrain(Run &run, const TrainFlags &f) {
  auto records = LoadRecords(run.LoadDataset(f.dataset));
  auto split = SplitFilter(f.split);
  auto configs = f.prompt.Configs(false);
  TrainConfig tc;
  tc.learning_rate = f.lr;
  tc.epochs = f.epochs;
  tc.warmup_fraction = f.warmup;
  tc.batch_size = f.batch_size;
  tc.seed = run.seed;
  if (f.optimizer == "sgd") {
    tc.optimizer = Optimizer::kSgd;
  } else if (f.optimizer == "momentum") {
    tc.optimizer = Optimizer::kMomentumSgd;
  } else {
    throw ValidationError("--optimizer must be sgd or momentum");
  }
  tc.momentum = f.momentum;
  tc.l2_normalize = f.l2_normalize;
  Validate(tc);
  std::optional<LoraSpec> lora;
  if (f.lora_rank > 0) lora = LoraSpec{f.lora_rank, f.lora_width, f.lora_alpha, 0.01};
  BackendConfig bc = f.backend.Config(run.seed);
  auto backend = MakeBackend(bc);
  run.manifest.backend = backend->Identity();

  for (const auto &c : configs) {
    const std::string row = GridRowName(c);
    auto pairs = PairsFor(records, split, c);
    if (pairs.empty()) throw ValidationError("no pairs in split '" + f.split + "'");
    TrainResult tr = Train(EmbedPairs(*backend, pairs, c), tc, lora);
    std::map<std::string, std::string> meta{{"config", row},
                                            {"backend", backend->Identity()},
                                            {"seed", std::to_string(run.seed)},
                                            {"pairs", std::to_string(pairs.size())}};
    run.Emit(CheckpointName(c), SaveCheckpoint(tr.model, meta));
    std::string trace = "epoch,loss\n";
    for (std::size_t e = 0; e < tr.loss_trace.size(); ++e)
      trace += std::to_string(e + 1) + "," + FormatDouble(tr.loss_trace[e]) + "\n";
    run.Emit("loss_" + row + ".csv", trace);
    run.out << "config " << row << ": final loss " << FormatDouble(tr.loss_trace.back()) << "\n";
  }
  return kOk;
}

struct EvalFlags {
  std::string scores;
  double threshold = 0.5;
  std::string op_frr = "0.05,0.10";
  std::string op_selection = "conservative";
  std::string det_axis = "normal";
  std::string infer_report;
};

inline int CmdEval(Run &run, const EvalFlags &f) {
  auto scores = ReadScoresCsv(run.LoadDataset(f.scores));
  EvalOptions opts;
  opts.threshold = f.threshold;
  opts.op_targets = detail::ParseDoubleList(f.op_frr, "--op-frr");
  if (f.op_selection == "conservative") {
    opts.selection = OpSelection::kConservative;
  } else if (f.op_selection == "interpolated") {
    opts.selection = OpSelection::kInterpolated;
  } else {
    throw ValidationError("--op-selection must be conservative or interpolated");
  }
  DetAxis axis;
  if (f.det_axis == "normal") {
    axis = DetAxis::kNormalDeviate;
  } else if (f.det_axis == "linear") {
    axis = DetAxis::kLinear;
  } else {
    throw ValidationError("--det-axis must be normal or linear");
  }
  for (double t : opts.op_targets)
    if (!(t > 0 && t < 1)) throw ValidationError("--op-frr targets must be in (0, 1)");
  MetricsReport report = Evaluate(scores, opts);
  if (!f.infer_report.empty()) {
    auto kv = ParseKeyValue(ReadFile(f.infer_report));
    auto it = kv.find("fallback_rate");
    if (it != kv.end() && it->second != "absent") {
      auto v = ParseDouble(it->second);
      if (!v) throw ValidationError("bad fallback_rate in " + f.infer_report);
      report.fallback_rate = *v;
    }
  }
  std::string stem = std::filesystem::path(f.scores).stem().string();
  std::string text = FormatReport(report);
  run.out << text;
  run.Emit(stem + ".metrics.txt", text);
  if (!report.hard_labels) {
    DetCurve curve = Sweep(scores);
    run.Emit(stem + ".det.csv", DetCsv(curve));
    run.Emit(stem + ".det.svg", DetSvg(curve, axis, "DET " + stem));
  }
  for (const auto &op : report.far_at_op) {
    if (op.attainable) continue;
    run.err << "operating point FRR <= " << FormatDouble(op.target_frr)
            << " is unattainable with " << report.counts.tp + report.counts.fn
            << " positives\n";
    return kUnattainable;
  }
  return kOk;
}

struct SignificanceFlags {
  std::string scores_a;
  std::string scores_b;
  double threshold = 0.5;
  std::optional<double> threshold_a;
  std::optional<double> threshold_b;
  std::string errors = "all";
  double confidence = 0.95;
};

inline int CmdSignificance(Run &run, const SignificanceFlags &f) {
  auto a = ReadScoresCsv(ReadFile(f.scores_a));
  auto b = ReadScoresCsv(ReadFile(f.scores_b));
  run.manifest.dataset_path = f.scores_a + "," + f.scores_b;
  run.manifest.dataset_hash =
      HexDigest(Fnv1a64(ReadFile(f.scores_b), Fnv1a64(ReadFile(f.scores_a))));
  ErrorKind kind;
  if (f.errors == "all") {
    kind = ErrorKind::kAll;
  } else if (f.errors == "fa") {
    kind = ErrorKind::kFalseAccept;
  } else if (f.errors == "fr") {
    kind = ErrorKind::kFalseReject;
  } else {
    throw ValidationError("--errors must be all, fa or fr");
  }
  auto [ea, eb] = AlignedErrors(a, f.threshold_a.value_or(f.threshold), b,
                                f.threshold_b.value_or(f.threshold), kind);
  TTestResult r = PairedTTest(ea, eb, f.confidence);
  std::string text = "errors = " + f.errors + "\npairs = " + std::to_string(ea.size()) + "\n" +
                     FormatTTest(r, f.confidence);
  run.out << text;
  run.Emit("significance.txt", text);
  return kOk;
}

// ---------------------------------------------------------------------------
// Entry point

namespace detail {

inline nlohmann::ordered_json OptionSnapshot(const CLI::App *app) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const CLI::Option *opt : app->get_options()) {
    std::string name = opt->get_single_name();
    if (name.empty() || name == "help") continue;
    std::vector<std::string> given = opt->results();
    if (opt->get_expected_min() == 0) {
      j[name] = opt->count() > 0;
    } else if (!given.empty()) {
      j[name] = given.size() == 1 ? nlohmann::ordered_json(given[0]) : nlohmann::ordered_json(given);
    } else {
      j[name] = opt->get_default_str();
    }
  }
  return j;
}

}  // namespace detail

int RunCli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

/// Replays the argument vector recorded in a manifest.
inline int CmdRerun(const std::string &manifest_path, std::ostream &out, std::ostream &err) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ReadFile(manifest_path));
  } catch (const nlohmann::json::exception &e) {
    throw ValidationError("manifest " + manifest_path + ": " + e.what());
  }
  if (!j.contains("argv") || !j["argv"].is_array())
    throw ValidationError("manifest " + manifest_path + " has no argv");
  std::vector<std::string> args;
  for (const auto &a : j["argv"]) {
    if (!a.is_string()) throw ValidationError("manifest argv entries must be strings");
    args.push_back(a.get<std::string>());
  }
  if (!args.empty() && args.front() == "rerun")
    throw ValidationError("manifest records a rerun; refusing to recurse");
  return RunCli(args, out, err);
}

/// Parses `args` (without the program name), runs one command and writes its
/// manifest. Returns the process exit code.
inline int RunCli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Device-directed speech detection toolkit", "ddsd"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  auto common = [&](CLI::App *sub) {
    sub->add_option("--out-dir", out_dir, "directory for outputs and the manifest");
    sub->add_option("--seed", seed, "seed for every random choice");
  };

  SynthFlags synth;
  auto *s = app.add_subcommand("synth", "generate a synthetic dataset");
  common(s);
  s->add_option("--num-pairs", synth.num_pairs, "number of query pairs");
  s->add_option("--num-speakers", synth.num_speakers, "speakers (0: one per 10 pairs)");
  s->add_option("--directed-ratio", synth.directed_ratio, "share of device-directed pairs");
  s->add_option("--ambiguity-fraction", synth.ambiguity_fraction,
                "share of follow-ups only the context disambiguates");
  s->add_option("--confusions", synth.confusions, "confusable positions per follow-up");
  s->add_option("--split-ratios", synth.split_ratios, "train,val,test ratios");
  s->add_flag("--no-splits", synth.no_splits, "leave records unassigned");
  s->add_option("--output", synth.output, "dataset file name inside --out-dir");

  NBestFlags nbest;
  auto *nb = app.add_subcommand("nbest", "list the n best hypotheses of a lattice");
  common(nb);
  nb->add_option("--lattice", nbest.lattice, "lattice file")->required();
  nb->add_option("-n", nbest.n, "list size");

  PromptDumpFlags prompt;
  auto *pr = app.add_subcommand("prompt", "render prompts for a dataset");
  common(pr);
  pr->add_option("--dataset", prompt.dataset, "dataset file")->required();
  pr->add_option("--split", prompt.split, "train|val|test|all");
  pr->add_option("--limit", prompt.limit, "render at most this many pairs (0: all)");
  prompt.prompt.Add(pr);

  InferFlags infer;
  auto *in = app.add_subcommand("infer", "score a dataset by prompting or with a classifier");
  common(in);
  in->add_option("--dataset", infer.dataset, "dataset file")->required();
  in->add_option("--mode", infer.mode, "prompting|classifier");
  in->add_option("--split", infer.split, "train|val|test|all");
  in->add_option("--checkpoint", infer.checkpoint, "classifier checkpoint");
  in->add_option("--checkpoint-dir", infer.checkpoint_dir,
                 "directory holding checkpoint_<row>.txt per grid row");
  infer.prompt.Add(in);
  infer.backend.Add(in);

  TrainFlags train;
  auto *tr = app.add_subcommand("train", "train a classification head on embeddings");
  common(tr);
  tr->add_option("--dataset", train.dataset, "dataset file")->required();
  tr->add_option("--split", train.split, "train|val|test|all");
  tr->add_option("--lr", train.lr, "learning rate");
  tr->add_option("--epochs", train.epochs, "passes over the data");
  tr->add_option("--warmup", train.warmup, "warmup share of all steps");
  tr->add_option("--batch-size", train.batch_size, "mini-batch size");
  tr->add_option("--optimizer", train.optimizer, "sgd|momentum");
  tr->add_option("--momentum", train.momentum, "momentum coefficient");
  tr->add_flag("--l2-normalize", train.l2_normalize, "unit-normalize embeddings");
  tr->add_option("--lora-rank", train.lora_rank, "adapter rank (0: head only)");
  tr->add_option("--lora-width", train.lora_width, "adapted projection width");
  tr->add_option("--lora-alpha", train.lora_alpha, "adapter scale numerator");
  train.prompt.Add(tr);
  train.backend.Add(tr);

  EvalFlags eval;
  auto *ev = app.add_subcommand("eval", "metrics and DET exports for a scores file");
  common(ev);
  ev->add_option("--scores", eval.scores, "scores CSV")->required();
  ev->add_option("--threshold", eval.threshold, "decision threshold");
  ev->add_option("--op-frr", eval.op_frr, "target FRRs for FAR reporting");
  ev->add_option("--op-selection", eval.op_selection, "conservative|interpolated");
  ev->add_option("--det-axis", eval.det_axis, "normal|linear");
  ev->add_option("--infer-report", eval.infer_report, "infer report with the fallback rate");

  SignificanceFlags sig;
  auto *sg = app.add_subcommand("significance", "paired t-test on per-pair errors");
  common(sg);
  sg->add_option("--scores-a", sig.scores_a, "scores CSV of system A")->required();
  sg->add_option("--scores-b", sig.scores_b, "scores CSV of system B")->required();
  sg->add_option("--threshold", sig.threshold, "threshold for both systems");
  sg->add_option("--threshold-a", sig.threshold_a, "threshold for system A");
  sg->add_option("--threshold-b", sig.threshold_b, "threshold for system B");
  sg->add_option("--errors", sig.errors, "all|fa|fr");
  sg->add_option("--confidence", sig.confidence, "confidence level");

  std::string manifest_path;
  auto *rr = app.add_subcommand("rerun", "replay the command recorded in a manifest");
  rr->add_option("--manifest", manifest_path, "manifest file")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError &e) {
    return app.exit(e, out, err) == 0 ? kOk : kValidation;
  }

  CLI::App *sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  Run run{out, err, {}, out_dir, seed};
  run.manifest.command = name;
  run.manifest.argv = args;
  run.manifest.seed = seed;
  run.manifest.config = detail::OptionSnapshot(sub);
  run.manifest.started_at = detail::UtcNow();

  int code = kOk;
  try {
    if (name == "rerun") return CmdRerun(manifest_path, out, err);
    std::filesystem::create_directories(out_dir);
    if (name == "synth") code = CmdSynth(run, synth);
    if (name == "nbest") code = CmdNBest(run, nbest);
    if (name == "prompt") code = CmdPrompt(run, prompt);
    if (name == "infer") code = CmdInfer(run, infer);
    if (name == "train") code = CmdTrain(run, train);
    if (name == "eval") code = CmdEval(run, eval);
    if (name == "significance") code = CmdSignificance(run, sig);
  } catch (const UnattainableOperatingPoint &e) {
    err << "error: " << e.what() << "\n";
    code = kUnattainable;
  } catch (const ValidationError &e) {
    err << "error: " << e.what() << "\n";
    code = kValidation;
  } catch (const BackendError &e) {
    err << "backend error: " << e.what() << "\n";
    code = kBackend;
  } catch (const std::filesystem::filesystem_error &e) {
    err << "error: " << e.what() << "\n";
    code = kValidation;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    code = kFailure;
  }
  run.manifest.finished_at = detail::UtcNow();
  run.manifest.exit_code = code;
  try {
    std::filesystem::create_directories(out_dir);
    WriteFile(run.Path(name + ".manifest.json"), run.manifest.Dump());
  } catch (const std::exception &e) {
    err << "error: cannot write manifest: " << e.what() << "\n";
    if (code == kOk) code = kFailure;
  }
  return code;
}

}  // namespace ddsd::cli

#endif  // DDSD_TOOLS_COMMANDS_HPP_
