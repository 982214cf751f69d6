// include/ddsd/backend.hpp

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

#ifndef DDSD_BACKEND_HPP_
#define DDSD_BACKEND_HPP_

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "ddsd/error.hpp"
#include "ddsd/text_util.hpp"

namespace ddsd {

enum class BackendKind { kRemote, kMock };

/// Which hidden state summarizes a prompt for embedding requests.
enum class Pooling { kLastToken, kMean };

inline std::string_view PoolingName(Pooling p) {
  return p == Pooling::kLastToken ? "last_token" : "mean";
}

struct BackendConfig {
  BackendKind kind = BackendKind::kMock;
  std::string endpoint_url;
  std::string model_name;
  double temperature = 0.0;
  int max_new_tokens = 32;
  int embedding_dim = 4096;
  std::chrono::milliseconds request_timeout{30000};
  int max_in_flight = 4;
  Pooling pooling = Pooling::kLastToken;
  // Label assigned when an answer has no parseable 0/1 last line.
  int fallback_label = 1;

  // Mock-only knobs.
  std::uint64_t seed = 0;
  bool mock_verbose = false;
  double mock_descriptive_fraction = 0.0;
  double mock_noise_scale = 0.25;
};

inline void Validate(const BackendConfig &c) {
  if (c.embedding_dim <= 0) throw ValidationError("backend: embedding_dim must be > 0");
  if (c.max_new_tokens <= 0) throw ValidationError("backend: max_new_tokens must be > 0");
  if (c.max_in_flight <= 0) throw ValidationError("backend: max_in_flight must be > 0");
  if (c.temperature < 0) throw ValidationError("backend: temperature must be >= 0");
  if (c.fallback_label != 0 && c.fallback_label != 1)
    throw ValidationError("backend: fallback_label must be 0 or 1");
  if (c.kind == BackendKind::kRemote && c.endpoint_url.empty())
    throw ValidationError("backend: remote backend needs an endpoint");
}

/// Fills endpoint and model from DDSD_ENDPOINT / DDSD_MODEL where unset.
inline void ApplyEnvironment(BackendConfig &c) {
  if (c.endpoint_url.empty())
    if (const char *e = std::getenv("DDSD_ENDPOINT")) c.endpoint_url = e;
  if (c.model_name.empty())
    if (const char *m = std::getenv("DDSD_MODEL")) c.model_name = m;
}

struct ParsedAnswer {
  int label = 1;
  bool was_fallback = false;
  std::string raw_text;
};

/**
   Reads the decision from a generated answer. The last non-empty line, with
   surrounding whitespace and one pair of matching quotes removed, must be
   exactly "0" or "1". Anything else (descriptive answers) falls back to
   `fallback_label`, which is 1: the follow-up is treated as device-directed.
 */
inline ParsedAnswer ParseAnswer(std::string_view raw, int fallback_label = 1) {
  ParsedAnswer out;
  out.raw_text = std::string(raw);
  std::string_view last;
  for (std::string_view line : Split(raw, '\n')) {
    std::string_view t = Trim(line);
    if (!t.empty()) last = t;
  }
  if (last.size() >= 2) {
    char q = last.front();
    if ((q == '\'' || q == '"' || q == '`') && last.back() == q)
      last = Trim(last.substr(1, last.size() - 2));
  }
  if (last == "0" || last == "1") {
    out.label = last == "1" ? 1 : 0;
    out.was_fallback = false;
  } else {
    out.label = fallback_label;
    out.was_fallback = true;
  }
  return out;
}

/// A text-generation and embedding service.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string Generate(const std::string &prompt) = 0;
  virtual std::vector<double> Embed(const std::string &prompt) = 0;
  virtual std::string Identity() const = 0;
  virtual int max_in_flight() const { return 1; }

  /// Results come back in input order regardless of completion order.
  std::vector<std::string> GenerateBatch(const std::vector<std::string> &prompts) {
    return RunBatch<std::string>(prompts, [this](const std::string &p) { return Generate(p); });
  }
  std::vector<std::vector<double>> EmbedBatch(const std::vector<std::string> &prompts) {
    return RunBatch<std::vector<double>>(prompts,
                                         [this](const std::string &p) { return Embed(p); });
  }

 private:
  template <typename R>
  std::vector<R> RunBatch(const std::vector<std::string> &prompts,
                          const std::function<R(const std::string &)> &fn) {
    std::vector<R> results(prompts.size());
    std::size_t workers =
        std::min<std::size_t>(std::max(1, max_in_flight()), prompts.size());
    if (workers <= 1) {
      for (std::size_t i = 0; i < prompts.size(); ++i) results[i] = fn(prompts[i]);
      return results;
    }
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::size_t failed_at = prompts.size();
    std::exception_ptr failure;
    auto work = [&] {
      for (std::size_t i = next++; i < prompts.size(); i = next++) {
        try {
          results[i] = fn(prompts[i]);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (i < failed_at) failed_at = i, failure = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto &t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return results;
  }
};

// ---------------------------------------------------------------------------
// Mock backend

namespace mock {

inline const std::vector<std::string> &CommandKeywords() {
  static const std::vector<std::string> k = {
      "turn", "play", "set", "stop", "pause", "skip", "call", "open", "show",
      "tell", "what's", "remind", "add", "remove", "cancel", "start", "read"};
  return k;
}

struct Topic {
  std::string name;
  std::vector<std::string> words;
};

inline const std::vector<Topic> &Topics() {
  static const std::vector<Topic> t = {
      {"music", {"music", "song", "songs", "track", "jazz", "album", "loud", "louder"}},
      {"weather", {"weather", "rain", "cold", "forecast", "temperature", "sunny", "umbrella"}},
      {"timer", {"timer", "minutes", "alarm", "time", "clock"}},
      {"puzzle", {"clue", "clues", "letters", "crossword", "word", "across", "answer"}},
      {"shopping", {"list", "milk", "eggs", "coffee", "butter", "bread", "groceries"}},
  };
  return t;
}

/// Cue words for small talk between people.
inline const std::vector<std::string> &SocialCues() {
  static const std::vector<std::string> s = {"you", "your", "we", "i", "my",
                                             "me", "our", "think", "did", "was"};
  return s;
}

/// Lower-cased word tokens; punctuation other than apostrophes is dropped.
inline std::vector<std::string> Tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    unsigned char u = static_cast<unsigned char>(c);
    if (std::isalnum(u) || c == '\'') {
      cur += static_cast<char>(std::tolower(u));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

inline bool Contains(const std::vector<std::string> &tokens, std::string_view w) {
  return std::find(tokens.begin(), tokens.end(), w) != tokens.end();
}

inline bool HasCommandKeyword(std::string_view text) {
  auto toks = Tokenize(text);
  for (const auto &k : CommandKeywords())
    if (Contains(toks, k)) return true;
  return false;
}

/// -1 when no topic word occurs; otherwise the first matching topic.
inline int TopicOf(const std::vector<std::string> &tokens) {
  const auto &topics = Topics();
  for (std::size_t t = 0; t < topics.size(); ++t)
    for (const auto &w : topics[t].words)
      if (Contains(tokens, w)) return static_cast<int>(t);
  return -1;
}

struct FollowupLine {
  std::string text;
  std::optional<double> cost;
};

/// What the mock understands of a prompt: the follow-up lines and, when a
/// "Query 1: ... | Query 2: ..." line is present, the context query.
struct PromptView {
  std::optional<std::string> context;
  std::string followup_block;
  std::vector<FollowupLine> followup;
};

inline PromptView ViewPrompt(std::string_view prompt) {
  static constexpr std::string_view kQ1 = "Query 1: ";
  static constexpr std::string_view kQ2 = "Query 2: ";
  static constexpr std::string_view kBar = " | ";
  PromptView v;
  std::size_t q2 = prompt.rfind(kQ2);
  std::string_view block = prompt;
  if (q2 != std::string_view::npos) {
    std::size_t line_start = prompt.rfind('\n', q2);
    line_start = line_start == std::string_view::npos ? 0 : line_start + 1;
    std::string_view head = prompt.substr(line_start, q2 - line_start);
    if (head.substr(0, kQ1.size()) == kQ1 && head.size() >= kQ1.size() + kBar.size() &&
        head.substr(head.size() - kBar.size()) == kBar) {
      v.context = std::string(head.substr(kQ1.size(), head.size() - kQ1.size() - kBar.size()));
    }
    block = prompt.substr(q2 + kQ2.size());
  }
  v.followup_block = std::string(block);
  for (std::string_view line : Split(block, '\n')) {
    line = Trim(line);
    if (line.empty()) continue;
    FollowupLine fl;
    fl.text = std::string(line);
    std::size_t open = line.rfind(" [");
    if (open != std::string_view::npos && line.back() == ']') {
      if (auto c = ParseDouble(line.substr(open + 2, line.size() - open - 3))) {
        fl.cost = *c;
        fl.text = std::string(line.substr(0, open));
      }
    }
    v.followup.push_back(std::move(fl));
  }
  return v;
}

/// Dimension layout of mock embeddings.
struct Layout {
  std::size_t lexicon_begin = 0, lexicon_size = 0;
  std::size_t uncertainty_begin = 0;
  static constexpr std::size_t kUncertaintySize = 4;
  std::size_t context_begin = 0, context_size = 0;
  std::size_t noise_begin = 0;
};

/// Keyword, topic and social-cue words, in feature order.
inline const std::vector<std::string> &Lexicon() {
  static const std::vector<std::string> lex = [] {
    std::vector<std::string> l = CommandKeywords();
    for (const auto &t : Topics()) l.insert(l.end(), t.words.begin(), t.words.end());
    l.insert(l.end(), SocialCues().begin(), SocialCues().end());
    return l;
  }();
  return lex;
}

inline Layout LayoutFor() {
  Layout l;
  l.lexicon_size = Lexicon().size();
  l.uncertainty_begin = l.lexicon_begin + l.lexicon_size;
  l.context_begin = l.uncertainty_begin + Layout::kUncertaintySize;
  // presence flag, context topic one-hot, topic-continuation indicators
  l.context_size = 1 + 2 * Topics().size();
  l.noise_begin = l.context_begin + l.context_size;
  return l;
}

inline std::size_t MinEmbeddingDim() { return LayoutFor().noise_begin; }

}  // namespace mock

/**
   Deterministic stand-in for an LLM.

   Generate() answers "1" when the top follow-up hypothesis contains a command
   keyword and "0" otherwise. Embed() returns a feature-structured vector:

     lexicon block      word presence in the top follow-up hypothesis
     uncertainty block  n-best statistics, non-zero only when costs are shown
     context block      context presence, context topic, and whether the
                        follow-up continues the context topic
     noise block        uniform noise keyed on the follow-up text and seed

   Only the context block depends on the Query 1 clause.
 */
class MockBackend : public Backend {
 public:
  explicit MockBackend(BackendConfig config) : config_(std::move(config)) {
    Validate(config_);
    if (static_cast<std::size_t>(config_.embedding_dim) < mock::MinEmbeddingDim())
      throw ValidationError("mock backend: embedding_dim must be >= " +
                            std::to_string(mock::MinEmbeddingDim()));
  }

  std::string Generate(const std::string &prompt) override {
    if (prompt.empty()) throw ValidationError("generate: empty prompt");
    mock::PromptView v = mock::ViewPrompt(prompt);
    if (config_.mock_descriptive_fraction > 0.0) {
      std::uint64_t h = Fnv1a64(prompt, SeedBasis(0x9e3779b97f4a7c15ULL));
      double u = UnitFromBits(SplitMix(h));
      if (u < config_.mock_descriptive_fraction)
        return "It is hard to say who the speaker is talking to here.";
    }
    bool directed = !v.followup.empty() && mock::HasCommandKeyword(v.followup.front().text);
    std::string label = directed ? "1" : "0";
    if (!config_.mock_verbose) return label;
    return (directed ? "I think this is directed to the assistant.\n"
                     : "I think this is directed to another person.\n") + label;
  }

  std::vector<double> Embed(const std::string &prompt) override {
    if (prompt.empty()) throw ValidationError("embed: empty prompt");
    const mock::Layout layout = mock::LayoutFor();
    const auto &lexicon = mock::Lexicon();
    std::vector<double> x(static_cast<std::size_t>(config_.embedding_dim), 0.0);
    mock::PromptView v = mock::ViewPrompt(prompt);

    std::vector<std::string> top;
    if (!v.followup.empty()) top = mock::Tokenize(v.followup.front().text);
    for (std::size_t i = 0; i < lexicon.size(); ++i)
      if (mock::Contains(top, lexicon[i])) x[layout.lexicon_begin + i] = 1.0;

    bool has_costs = !v.followup.empty() && v.followup.front().cost.has_value();
    if (has_costs) {
      std::size_t u = layout.uncertainty_begin;
      const std::size_t count = v.followup.size();
      x[u] = 1.0;
      x[u + 1] = static_cast<double>(count) / 8.0;
      if (count >= 2 && v.followup[1].cost) {
        double margin = *v.followup[1].cost - *v.followup[0].cost;
        x[u + 2] = std::clamp(margin / 4.0, 0.0, 2.0);
        std::size_t with_keyword = 0;
        for (std::size_t i = 1; i < count; ++i)
          if (mock::HasCommandKeyword(v.followup[i].text)) ++with_keyword;
        x[u + 3] = static_cast<double>(with_keyword) / static_cast<double>(count - 1);
      }
    }

    if (v.context) {
      std::size_t c = layout.context_begin;
      const std::size_t topics = mock::Topics().size();
      x[c] = 1.0;
      int ctx_topic = mock::TopicOf(mock::Tokenize(*v.context));
      if (ctx_topic >= 0) {
        x[c + 1 + ctx_topic] = 1.0;
        const auto &words = mock::Topics()[ctx_topic].words;
        bool continues = false;
        for (const auto &w : words) continues = continues || mock::Contains(top, w);
        if (continues) x[c + 1 + topics + ctx_topic] = 1.0;
      }
    }

    std::uint64_t state = Fnv1a64(v.followup_block, SeedBasis(0));
    for (std::size_t i = layout.noise_begin; i < x.size(); ++i)
      x[i] = config_.mock_noise_scale * (2.0 * UnitFromBits(SplitMix(state)) - 1.0);
    return x;
  }

  std::string Identity() const override {
    return "mock(seed=" + std::to_string(config_.seed) +
           ",dim=" + std::to_string(config_.embedding_dim) + ")";
  }
  int max_in_flight() const override { return 1; }
  const BackendConfig &config() const { return config_; }

 private:
  std::uint64_t SeedBasis(std::uint64_t salt) const {
    std::uint64_t s = 0xcbf29ce484222325ULL ^ (config_.seed * 0x100000001b3ULL) ^ salt;
    return s;
  }
  static std::uint64_t SplitMix(std::uint64_t &state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  BackendConfig config_;
};

}  // namespace ddsd

#endif  // DDSD_BACKEND_HPP_
