// include/ddsd/synth.hpp

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

#ifndef DDSD_SYNTH_HPP_
#define DDSD_SYNTH_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "ddsd/corpus.hpp"
#include "ddsd/error.hpp"
#include "ddsd/lattice.hpp"
#include "ddsd/random.hpp"

namespace ddsd {

/// Surface forms for one conversation topic.
struct TopicTemplates {
  std::string name;
  std::vector<std::string> initial;    // wakeword queries
  std::vector<std::string> commands;   // clearly device-directed follow-ups
  std::vector<std::string> ambiguous;  // directed only as a continuation of this topic
};

struct TemplateBank {
  std::vector<TopicTemplates> topics;
  std::vector<std::string> chitchat;  // clearly human-directed follow-ups
};

inline TemplateBank DefaultTemplates() {
  TemplateBank b;
  b.topics = {
      {"music",
       {"Hey VA, play music", "Hey VA, play some jazz", "Hey VA, play my workout songs"},
       {"turn it up a bit", "skip this song", "play the next track", "pause the music",
        "turn the volume down"},
       {"that song is too loud", "another song like this one", "the jazz one from before",
        "a bit louder please"}},
      {"weather",
       {"Hey VA, what's the weather today", "Hey VA, what's the forecast for tonight"},
       {"tell me the forecast for tomorrow", "what's the temperature outside",
        "show the weekly forecast"},
       {"will it rain tomorrow", "is it going to be cold", "do we need an umbrella",
        "sunny all weekend"}},
      {"timer",
       {"Hey VA, set a timer for ten minutes", "Hey VA, set an alarm for seven"},
       {"set another timer for five minutes", "stop the timer", "cancel the alarm",
        "add two minutes to the timer"},
       {"how much time is left", "five more minutes", "the alarm at eight",
        "ten minutes is enough time"}},
      {"puzzle",
       {"Hey VA, what's the first clue", "Hey VA, start the crossword"},
       {"what's the next clue", "read seven across", "show the answer for four down",
        "tell me the next clue"},
       {"is it four letters", "a word for happy", "the answer might be seven letters",
        "another word for quick"}},
      {"shopping",
       {"Hey VA, add milk to my list", "Hey VA, open my shopping list"},
       {"add eggs to the list", "remove the bread", "add coffee too", "read the list"},
       {"more coffee and butter", "the bread from the bakery", "eggs and milk",
        "groceries for the weekend"}},
  };
  b.chitchat = {"how was your weekend",        "did you phone your sister",
                "i think we should leave soon", "that movie was so funny",
                "where did you park the car",  "i am so tired today",
                "we should invite them over",  "was that your phone",
                "my back hurts a little",      "did you feed the dog"};
  return b;
}

struct SynthConfig {
  std::size_t num_pairs = 1000;
  std::size_t num_speakers = 0;  // 0: one speaker per 10 pairs, at least 3
  double directed_ratio = 0.2;
  double ambiguity_fraction = 0.3;
  std::size_t n_confusions = 3;  // confusable word positions per follow-up
  std::uint64_t seed = 0;
  // Extra cost of a confusion arc over the true arc, drawn uniformly. Speech
  // aimed at the device decodes more confidently, so its confusions sit
  // further from the best path on average; the two ranges overlap.
  double directed_margin_lo = 0.6, directed_margin_hi = 4.0;
  double undirected_margin_lo = 0.3, undirected_margin_hi = 2.6;
  TemplateBank templates = DefaultTemplates();
};

inline void Validate(const SynthConfig &c) {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!unit(c.directed_ratio) || !unit(c.ambiguity_fraction))
    throw ValidationError("synth: ratios must be in [0, 1]");
  if (c.templates.topics.size() < 2) throw ValidationError("synth: need at least 2 topics");
  for (const auto &t : c.templates.topics)
    if (t.initial.empty() || t.commands.empty() || t.ambiguous.empty())
      throw ValidationError("synth: topic " + t.name + " has an empty template list");
  if (c.templates.chitchat.empty()) throw ValidationError("synth: no chitchat templates");
  if (!(c.directed_margin_lo > 0 && c.directed_margin_lo <= c.directed_margin_hi &&
        c.undirected_margin_lo > 0 && c.undirected_margin_lo <= c.undirected_margin_hi))
    throw ValidationError("synth: confusion margins must be positive ranges");
}

namespace detail {

/// Sound-alike substitutes for common words.
inline const std::map<std::string, std::vector<std::string>> &SoundAlikes() {
  static const std::map<std::string, std::vector<std::string>> m = {
      {"turn", {"term", "tern"}},  {"bit", {"bet", "pit"}},     {"up", {"cup", "op"}},
      {"it", {"at", "eat"}},       {"a", {"the", "uh"}},        {"the", {"a", "that"}},
      {"song", {"son", "long"}},   {"play", {"pray", "played"}}, {"next", {"text", "necks"}},
      {"set", {"sat", "said"}},    {"stop", {"stock", "top"}},  {"add", {"ad", "and"}},
      {"read", {"red", "reed"}},   {"four", {"for", "fore"}},   {"two", {"to", "too"}},
      {"you", {"ewe", "your"}},    {"your", {"you're", "you"}}, {"rain", {"reign", "train"}},
      {"time", {"thyme", "dime"}}, {"clue", {"glue", "clew"}},  {"list", {"lest", "last"}},
      {"bread", {"bred", "red"}},  {"eggs", {"legs", "ex"}},    {"cold", {"gold", "called"}},
      {"milk", {"silk", "melk"}},  {"word", {"world", "ward"}}, {"seven", {"heaven", "severn"}},
  };
  return m;
}

/// k-th confusion of `word`: table entry when known, else a vowel shift.
inline std::string Confuse(const std::string &word, std::size_t k) {
  const auto &table = SoundAlikes();
  auto it = table.find(word);
  if (it != table.end()) return it->second[k % it->second.size()];
  static const std::string vowels = "aeiou";
  std::string w = word;
  std::size_t pos = w.find_first_of(vowels);
  if (pos == std::string::npos) return w + (k % 2 ? "h" : "s");
  std::size_t v = vowels.find(w[pos]);
  w[pos] = vowels[(v + 1 + k) % vowels.size()];
  if (w == word) w += "h";
  return w;
}

inline double Round2(double v) { return std::round(v * 100.0) / 100.0; }

}  // namespace detail

/**
   Chain lattice for `text` whose best path is exactly `text`. Up to
   `n_confusions` word positions get one or two sound-alike alternatives,
   each strictly more expensive than the true arc at that position.
 */
inline Lattice SynthLattice(const std::string &text, std::size_t n_confusions,
                            double margin_lo, double margin_hi, rnd::Engine &rng) {
  std::vector<std::string> words;
  for (auto w : SplitFields(text)) words.emplace_back(w);
  if (words.empty()) throw ValidationError("synth: empty follow-up text");
  std::vector<LatticeArc> arcs;
  std::vector<std::size_t> positions(words.size());
  for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i;
  rnd::Shuffle(positions, rng);
  positions.resize(std::min(n_confusions, positions.size()));
  std::sort(positions.begin(), positions.end());
  for (std::size_t i = 0; i < words.size(); ++i) {
    LatticeArc a;
    a.source = static_cast<int>(i);
    a.target = static_cast<int>(i + 1);
    a.word = words[i];
    a.acoustic_cost = -detail::Round2(rnd::Uniform(rng, 8.0, 16.0));
    a.lm_cost = -detail::Round2(rnd::Uniform(rng, 1.0, 5.0));
    arcs.push_back(a);
    if (!std::binary_search(positions.begin(), positions.end(), i)) continue;
    std::size_t alternatives = 1 + rnd::Index(rng, 2);
    std::vector<std::string> used{words[i]};
    for (std::size_t k = 0; k < alternatives; ++k) {
      LatticeArc alt = a;
      alt.word = detail::Confuse(words[i], k);
      if (std::find(used.begin(), used.end(), alt.word) != used.end()) continue;
      used.push_back(alt.word);
      double margin = std::max(0.1, detail::Round2(rnd::Uniform(rng, margin_lo, margin_hi)));
      alt.acoustic_cost = detail::Round2(a.acoustic_cost + margin);
      arcs.push_back(alt);
    }
  }
  int nodes = static_cast<int>(words.size()) + 1;
  return Lattice::Build(nodes, 0, {nodes - 1}, std::move(arcs));
}

/// Ground truth of a generated pair, beyond what the record stores.
struct SynthTruth {
  std::string followup_text;
  std::size_t context_topic = 0;
  bool ambiguous = false;
};

struct SynthCorpus {
  std::vector<DatasetRecord> records;
  std::vector<SynthTruth> truth;  // parallel to records
};

/**
   Seeded stand-in corpus. Directed follow-ups are commands on the initial
   query's topic; undirected ones are small talk. A share of follow-ups
   (ambiguity_fraction) instead use topic phrases shared by both classes:
   such a phrase is directed when it continues the initial query's topic and
   undirected when it is about another topic, so only the context tells the
   two apart.
 */
inline SynthCorpus GenerateCorpusWithTruth(const SynthConfig &config) {
  Validate(config);
  const TemplateBank &bank = config.templates;
  const std::size_t topics = bank.topics.size();
  std::size_t speakers = config.num_speakers
                             ? config.num_speakers
                             : std::max<std::size_t>(3, config.num_pairs / 10);
  rnd::Engine rng(config.seed);
  auto pick = [&rng](const std::vector<std::string> &v) -> const std::string & {
    return v[rnd::Index(rng, v.size())];
  };
  char buf[32];
  SynthCorpus out;
  out.records.reserve(config.num_pairs);
  for (std::size_t i = 0; i < config.num_pairs; ++i) {
    DatasetRecord r;
    std::snprintf(buf, sizeof(buf), "pair%06zu", i);
    r.pair_id = buf;
    std::snprintf(buf, sizeof(buf), "spk%05zu", rnd::Index(rng, speakers));
    r.speaker_id = buf;
    r.label = rnd::Bernoulli(rng, config.directed_ratio) ? 1 : 0;
    bool ambiguous = rnd::Bernoulli(rng, config.ambiguity_fraction);
    std::size_t ctx = rnd::Index(rng, topics);
    r.initial_onebest = pick(bank.topics[ctx].initial);
    std::string followup;
    if (ambiguous) {
      std::size_t about = ctx;
      if (r.label == 0) about = (ctx + 1 + rnd::Index(rng, topics - 1)) % topics;
      followup = pick(bank.topics[about].ambiguous);
    } else {
      followup = r.label == 1 ? pick(bank.topics[ctx].commands) : pick(bank.chitchat);
    }
    double lo = r.label ? config.directed_margin_lo : config.undirected_margin_lo;
    double hi = r.label ? config.directed_margin_hi : config.undirected_margin_hi;
    r.followup_lattice = SynthLattice(followup, config.n_confusions, lo, hi, rng);
    out.records.push_back(std::move(r));
    out.truth.push_back({followup, ctx, ambiguous});
  }
  return out;
}

inline std::vector<DatasetRecord> GenerateCorpus(const SynthConfig &config) {
  return GenerateCorpusWithTruth(config).records;
}

}  // namespace ddsd

#endif  // DDSD_SYNTH_HPP_
