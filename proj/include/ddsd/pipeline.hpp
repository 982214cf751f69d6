// include/ddsd/pipeline.hpp

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

#ifndef DDSD_PIPELINE_HPP_
#define DDSD_PIPELINE_HPP_

#include <optional>
#include <string>
#include <vector>

#include "ddsd/backend.hpp"
#include "ddsd/classifier.hpp"
#include "ddsd/corpus.hpp"
#include "ddsd/eval.hpp"
#include "ddsd/promptgen.hpp"

namespace ddsd {

/// Records of one split (all when `split` is empty) as prompt-ready pairs.
inline std::vector<UtterancePair> PairsFor(const std::vector<DatasetRecord> &records,
                                           std::optional<DataSplit> split,
                                           const PromptConfig &config) {
  std::size_t hyps = config.followup_mode == FollowupMode::kOneBest ? 1 : config.nbest;
  std::vector<UtterancePair> out;
  for (const auto &r : records) {
    if (split && r.split != split) continue;
    out.push_back(ToUtterancePair(r, hyps));
  }
  return out;
}

inline std::vector<std::string> RenderAll(const std::vector<UtterancePair> &pairs,
                                          const PromptConfig &config) {
  std::vector<std::string> out;
  out.reserve(pairs.size());
  for (const auto &p : pairs) out.push_back(RenderPrompt(p, config).text);
  return out;
}

struct PromptingRun {
  std::vector<ScoredExample> scores;  // hard 0/1 labels
  std::size_t fallbacks = 0;
  double fallback_rate = 0.0;
};

/// Generation-based detection: one answer per pair, parsed to a 0/1 label.
inline PromptingRun RunPrompting(Backend &backend, const std::vector<UtterancePair> &pairs,
                                 const PromptConfig &config, int fallback_label = 1) {
  if (pairs.empty()) throw ValidationError("prompting: no pairs to score");
  auto answers = backend.GenerateBatch(RenderAll(pairs, config));
  PromptingRun run;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    ParsedAnswer a = ParseAnswer(answers[i], fallback_label);
    run.fallbacks += a.was_fallback;
    run.scores.push_back({pairs[i].pair_id, pairs[i].label.value_or(0),
                          static_cast<double>(a.label)});
  }
  run.fallback_rate = static_cast<double>(run.fallbacks) / static_cast<double>(pairs.size());
  return run;
}

/// Embeddings for classifier training or scoring; pairs must be labeled.
inline std::vector<LabeledEmbedding> EmbedPairs(Backend &backend,
                                                const std::vector<UtterancePair> &pairs,
                                                const PromptConfig &config) {
  auto vectors = backend.EmbedBatch(RenderAll(pairs, config));
  std::vector<LabeledEmbedding> out;
  out.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (!pairs[i].label) throw ValidationError("pair " + pairs[i].pair_id + " has no label");
    out.push_back({std::move(vectors[i]), *pairs[i].label});
  }
  return out;
}

inline std::vector<ScoredExample> ScoreEmbeddings(const ClassifierModel &model,
                                                  const std::vector<UtterancePair> &pairs,
                                                  const std::vector<LabeledEmbedding> &emb) {
  std::vector<ScoredExample> out;
  out.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i)
    out.push_back({pairs[i].pair_id, emb[i].label, model.Score(emb[i].x)});
  return out;
}

}  // namespace ddsd

#endif  // DDSD_PIPELINE_HPP_
