// include/ddsd/promptgen.hpp

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

#ifndef DDSD_PROMPTGEN_HPP_
#define DDSD_PROMPTGEN_HPP_

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ddsd/error.hpp"
#include "ddsd/text_util.hpp"

namespace ddsd {

enum class DataSplit { kTrain, kVal, kTest };

inline std::string_view SplitName(DataSplit s) {
  switch (s) {
    case DataSplit::kTrain: return "train";
    case DataSplit::kVal: return "val";
    case DataSplit::kTest: return "test";
  }
  return "";
}

inline std::optional<DataSplit> ParseSplit(std::string_view s) {
  if (s == "train") return DataSplit::kTrain;
  if (s == "val") return DataSplit::kVal;
  if (s == "test") return DataSplit::kTest;
  return std::nullopt;
}

struct ScoredText {
  std::string text;
  double cost = 0.0;
};

/// An initial query (always device-directed) and the follow-up to classify.
struct UtterancePair {
  std::string pair_id;
  std::string speaker_id;
  std::string initial_onebest;
  std::vector<ScoredText> followup_hypotheses;  // ascending cost
  std::optional<int> label;                     // 1 = device-directed
  std::optional<DataSplit> split;
};

inline void ValidatePair(const UtterancePair &p) {
  if (p.initial_onebest.empty())
    throw ValidationError("pair " + p.pair_id + ": empty initial query");
  if (p.followup_hypotheses.empty())
    throw ValidationError("pair " + p.pair_id + ": no follow-up hypotheses");
  auto bad_text = [](const std::string &t) {
    return t.find_first_of("\r\n") != std::string::npos;
  };
  if (bad_text(p.initial_onebest))
    throw ValidationError("pair " + p.pair_id + ": newline in initial query");
  for (std::size_t i = 0; i < p.followup_hypotheses.size(); ++i) {
    if (bad_text(p.followup_hypotheses[i].text))
      throw ValidationError("pair " + p.pair_id + ": newline in hypothesis");
    if (i && p.followup_hypotheses[i].cost < p.followup_hypotheses[i - 1].cost)
      throw ValidationError("pair " + p.pair_id + ": hypotheses not sorted by cost");
  }
  if (p.label && *p.label != 0 && *p.label != 1)
    throw ValidationError("pair " + p.pair_id + ": label must be 0 or 1");
}

enum class FollowupMode { kOneBest, kNBest };
enum class ContextMode { kFollowupOnly, kWithContext };

struct PromptConfig {
  FollowupMode followup_mode = FollowupMode::kNBest;
  std::size_t nbest = 8;
  ContextMode context_mode = ContextMode::kWithContext;
  bool include_task_prompt = true;
  int cost_decimals = 1;
};

/// Grid row names "1", "8", "1-1", "1-8": an optional "1-" prefix adds the
/// initial query as context; the last number is the follow-up list size, with
/// 1 meaning the plain 1-best (no costs).
inline PromptConfig GridRowConfig(std::string_view row, bool include_task_prompt = true) {
  PromptConfig c;
  c.include_task_prompt = include_task_prompt;
  std::string_view hyps = row;
  if (row.size() > 2 && row.substr(0, 2) == "1-") {
    c.context_mode = ContextMode::kWithContext;
    hyps = row.substr(2);
  } else {
    c.context_mode = ContextMode::kFollowupOnly;
  }
  auto n = ParseInt<std::size_t>(hyps);
  if (!n || *n == 0) throw ValidationError("bad grid row '" + std::string(row) + "'");
  if (*n == 1) {
    c.followup_mode = FollowupMode::kOneBest;
    c.nbest = 1;
  } else {
    c.followup_mode = FollowupMode::kNBest;
    c.nbest = *n;
  }
  return c;
}

inline std::string GridRowName(const PromptConfig &c) {
  std::string hyps = c.followup_mode == FollowupMode::kOneBest
                         ? "1"
                         : std::to_string(c.nbest);
  return c.context_mode == ContextMode::kWithContext ? "1-" + hyps : hyps;
}

namespace prompt_text {

inline constexpr std::string_view kPairIntro =
    "In this task, we provide a pair of queries made by human in the following "
    "format: 'Query 1: <text> | Query 2: <text>'. Query 1 is directed toward the "
    "voice assistant. Query 2 is the follow-up query made by human. ";

// Context-free variant: same wording with the Query 1 sentences removed.
inline constexpr std::string_view kSingleIntro =
    "In this task, we provide a query made by human in the following format: "
    "'Query 2: <text>'. Query 2 is the follow-up query made by human. ";

inline constexpr std::string_view kNBestBlock =
    "For Query 2, we provided an n-best list of ASR hypotheses for the spoken "
    "utterance. Each of the hypothesis is separated by a newline character. The "
    "cost of each hypothesis is at the end in the format '[cost]' where a low "
    "cost indicates that we are more confident about that ASR hypothesis. ";

inline constexpr std::string_view kInstructions =
    "Determine whether Query 2 is directed towards a voice assistant or a human "
    "being. Typical spoken utterances directed towards the voice assistant are "
    "commands to fulfill a task or queries to get some information. Answer only "
    "from the following categories ['1', '0'] where '1' indicates that the "
    "utterance is directed towards the voice assistant and '0' indicates that "
    "the utterance is directed towards a human being. In your answer the last "
    "line should contain nothing else but the number '0' or '1'.";

}  // namespace prompt_text

inline std::string RenderTaskPrompt(const PromptConfig &config) {
  if (!config.include_task_prompt) return "";
  std::string out(config.context_mode == ContextMode::kWithContext
                      ? prompt_text::kPairIntro
                      : prompt_text::kSingleIntro);
  if (config.followup_mode == FollowupMode::kNBest) out += prompt_text::kNBestBlock;
  out += prompt_text::kInstructions;
  return out;
}

inline std::string RenderUtterancePrompt(const UtterancePair &pair,
                                         const PromptConfig &config) {
  ValidatePair(pair);
  if (config.followup_mode == FollowupMode::kNBest && config.nbest == 0)
    throw ValidationError("prompt config: nbest must be >= 1");
  if (config.cost_decimals < 0)
    throw ValidationError("prompt config: cost_decimals must be >= 0");
  std::string followup;
  if (config.followup_mode == FollowupMode::kOneBest) {
    followup = pair.followup_hypotheses.front().text;
  } else {
    std::size_t k = std::min(config.nbest, pair.followup_hypotheses.size());
    for (std::size_t i = 0; i < k; ++i) {
      if (i) followup += '\n';
      const ScoredText &h = pair.followup_hypotheses[i];
      followup += h.text + " [" + FormatFixed(h.cost, config.cost_decimals) + "]";
    }
  }
  if (config.context_mode == ContextMode::kWithContext)
    return "Query 1: " + pair.initial_onebest + " | Query 2: " + followup;
  return "Query 2: " + followup;
}

/// Task prompt, a blank line, then the utterance prompt.
inline std::string Assemble(std::string_view task, std::string_view utterance) {
  if (utterance.empty()) throw ValidationError("assemble: empty utterance prompt");
  if (task.empty()) return std::string(utterance);
  std::string out(task);
  out += "\n\n";
  out += utterance;
  return out;
}

struct RenderedPrompt {
  std::string text;
  PromptConfig config;
  std::string pair_id;
};

inline RenderedPrompt RenderPrompt(const UtterancePair &pair, const PromptConfig &config) {
  return {Assemble(RenderTaskPrompt(config), RenderUtterancePrompt(pair, config)),
          config, pair.pair_id};
}

}  // namespace ddsd

#endif  // DDSD_PROMPTGEN_HPP_
