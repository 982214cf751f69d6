// include/ddsd/corpus.hpp

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

#ifndef DDSD_CORPUS_HPP_
#define DDSD_CORPUS_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "ddsd/error.hpp"
#include "ddsd/lattice.hpp"
#include "ddsd/promptgen.hpp"
#include "ddsd/random.hpp"

namespace ddsd {

/// One labelled utterance pair. The follow-up comes either as a lattice or as
/// an explicit hypothesis list (ascending cost), never both.
struct DatasetRecord {
  std::string pair_id;
  std::string speaker_id;
  std::string initial_onebest;
  std::optional<Lattice> initial_lattice;
  std::optional<Lattice> followup_lattice;
  std::vector<ScoredText> followup_hypotheses;
  int label = 0;
  std::optional<DataSplit> split;
};

inline bool SameRecord(const DatasetRecord &a, const DatasetRecord &b) {
  auto lat = [](const std::optional<Lattice> &l) {
    return l ? std::optional<std::string>(WriteLattice(*l)) : std::nullopt;
  };
  if (a.followup_hypotheses.size() != b.followup_hypotheses.size()) return false;
  for (std::size_t i = 0; i < a.followup_hypotheses.size(); ++i)
    if (a.followup_hypotheses[i].text != b.followup_hypotheses[i].text ||
        a.followup_hypotheses[i].cost != b.followup_hypotheses[i].cost)
      return false;
  return a.pair_id == b.pair_id && a.speaker_id == b.speaker_id &&
         a.initial_onebest == b.initial_onebest && lat(a.initial_lattice) == lat(b.initial_lattice) &&
         lat(a.followup_lattice) == lat(b.followup_lattice) && a.label == b.label &&
         a.split == b.split;
}

namespace detail {

inline void ValidateRecord(const DatasetRecord &r) {
  if (r.pair_id.empty()) throw ValidationError("record: empty pair_id");
  if (r.speaker_id.empty()) throw ValidationError("record " + r.pair_id + ": empty speaker_id");
  if (r.initial_onebest.empty())
    throw ValidationError("record " + r.pair_id + ": empty initial query");
  if (r.label != 0 && r.label != 1)
    throw ValidationError("record " + r.pair_id + ": label must be 0 or 1");
  if (r.followup_lattice.has_value() == !r.followup_hypotheses.empty())
    throw ValidationError("record " + r.pair_id +
                          ": follow-up needs exactly one of lattice or hypotheses");
  for (std::size_t i = 0; i < r.followup_hypotheses.size(); ++i) {
    const auto &h = r.followup_hypotheses[i];
    if (h.text.empty() || h.text.find_first_of("\r\n") != std::string::npos)
      throw ValidationError("record " + r.pair_id + ": bad hypothesis text");
    if (!std::isfinite(h.cost)) throw ValidationError("record " + r.pair_id + ": bad cost");
    if (i && h.cost < r.followup_hypotheses[i - 1].cost)
      throw ValidationError("record " + r.pair_id + ": hypotheses not in ascending cost");
  }
}

inline std::string RecordToJson(const DatasetRecord &r) {
  nlohmann::ordered_json j;
  j["pair_id"] = r.pair_id;
  j["speaker_id"] = r.speaker_id;
  nlohmann::ordered_json init;
  init["onebest"] = r.initial_onebest;
  if (r.initial_lattice) init["lattice"] = WriteLattice(*r.initial_lattice);
  j["initial"] = init;
  nlohmann::ordered_json fu;
  if (r.followup_lattice) {
    fu["lattice"] = WriteLattice(*r.followup_lattice);
  } else {
    nlohmann::ordered_json hyps = nlohmann::ordered_json::array();
    for (const auto &h : r.followup_hypotheses)
      hyps.push_back(nlohmann::ordered_json{{"text", h.text}, {"cost", h.cost}});
    fu["hypotheses"] = hyps;
  }
  j["followup"] = fu;
  j["label"] = r.label;
  if (r.split) j["split"] = std::string(SplitName(*r.split));
  return j.dump();
}

inline DatasetRecord RecordFromJson(std::string_view line, std::size_t ln) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(ln, std::string("invalid JSON: ") + e.what());
  }
  auto fail = [ln](const std::string &m) { return ParseError(ln, m); };
  if (!j.is_object()) throw fail("record must be a JSON object");
  auto str = [&](const nlohmann::json &o, const char *key) {
    if (!o.contains(key) || !o[key].is_string())
      throw fail(std::string("missing string field '") + key + "'");
    return o[key].get<std::string>();
  };
  DatasetRecord r;
  r.pair_id = str(j, "pair_id");
  r.speaker_id = str(j, "speaker_id");
  if (!j.contains("initial") || !j["initial"].is_object()) throw fail("missing 'initial'");
  const auto &init = j["initial"];
  r.initial_onebest = str(init, "onebest");
  auto lattice = [&](const std::string &text) {
    try {
      return ParseLattice(text);
    } catch (const ValidationError &e) {
      throw fail(std::string("embedded lattice: ") + e.what());
    }
  };
  if (init.contains("lattice")) r.initial_lattice = lattice(str(init, "lattice"));
  if (!j.contains("followup") || !j["followup"].is_object()) throw fail("missing 'followup'");
  const auto &fu = j["followup"];
  if (fu.contains("lattice")) r.followup_lattice = lattice(str(fu, "lattice"));
  if (fu.contains("hypotheses")) {
    if (!fu["hypotheses"].is_array()) throw fail("'hypotheses' must be an array");
    for (const auto &h : fu["hypotheses"]) {
      if (!h.is_object() || !h.contains("cost") || !h["cost"].is_number())
        throw fail("hypothesis needs 'text' and numeric 'cost'");
      r.followup_hypotheses.push_back({str(h, "text"), h["cost"].get<double>()});
    }
  }
  if (!j.contains("label") || !j["label"].is_number_integer()) throw fail("label must be 0 or 1");
  auto label = j["label"].get<long long>();
  if (label != 0 && label != 1) throw fail("label must be 0 or 1");
  r.label = static_cast<int>(label);
  if (j.contains("split")) {
    auto s = ParseSplit(str(j, "split"));
    if (!s) throw fail("split must be train, val or test");
    r.split = *s;
  }
  try {
    ValidateRecord(r);
  } catch (const ValidationError &e) {
    throw fail(e.what());
  }
  return r;
}

}  // namespace detail

/// JSON-lines; one record per line.
inline std::string SaveRecords(const std::vector<DatasetRecord> &records) {
  std::string out;
  std::set<std::string> ids;
  for (const auto &r : records) {
    detail::ValidateRecord(r);
    if (!ids.insert(r.pair_id).second)
      throw ValidationError("duplicate pair_id " + r.pair_id);
    out += detail::RecordToJson(r);
    out += '\n';
  }
  return out;
}

/// Blank lines are skipped; errors carry the 1-based line number.
inline std::vector<DatasetRecord> LoadRecords(std::string_view doc) {
  std::vector<DatasetRecord> out;
  std::map<std::string, std::size_t> seen;
  std::size_t ln = 0;
  for (std::string_view line : Split(doc, '\n')) {
    ++ln;
    if (Trim(line).empty()) continue;
    DatasetRecord r = detail::RecordFromJson(line, ln);
    auto [it, fresh] = seen.emplace(r.pair_id, ln);
    if (!fresh)
      throw ParseError(ln, "duplicate pair_id " + r.pair_id + " (first on line " +
                               std::to_string(it->second) + ")");
    out.push_back(std::move(r));
  }
  return out;
}

inline std::string ReadFile(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void WriteFile(const std::string &path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw ValidationError("write failed for " + path);
}

inline std::vector<DatasetRecord> LoadRecordsFile(const std::string &path) {
  return LoadRecords(ReadFile(path));
}

inline void SaveRecordsFile(const std::vector<DatasetRecord> &records, const std::string &path) {
  WriteFile(path, SaveRecords(records));
}

/// Builds the prompt-level view; lattices are expanded to at most
/// `max_hypotheses` n-best entries.
inline UtterancePair ToUtterancePair(const DatasetRecord &r, std::size_t max_hypotheses) {
  UtterancePair p;
  p.pair_id = r.pair_id;
  p.speaker_id = r.speaker_id;
  p.initial_onebest = r.initial_onebest;
  p.label = r.label;
  p.split = r.split;
  if (r.followup_lattice) {
    for (Hypothesis &h : NBest(*r.followup_lattice, max_hypotheses)) {
      if (h.text.empty())
        throw ValidationError("record " + r.pair_id + ": lattice path with no words");
      p.followup_hypotheses.push_back({std::move(h.text), h.total_cost});
    }
  } else {
    std::size_t k = std::min(max_hypotheses, r.followup_hypotheses.size());
    p.followup_hypotheses.assign(r.followup_hypotheses.begin(),
                                 r.followup_hypotheses.begin() + static_cast<long>(k));
  }
  ValidatePair(p);
  return p;
}

struct SplitRatios {
  double train = 0.7;
  double val = 0.1;
  double test = 0.2;
};

/**
   Assigns train/val/test by speaker so no speaker spans two splits.
   Speakers are shuffled with `seed`, laid end to end by record count, and
   each is placed by where the middle of its records falls against the
   cumulative ratio boundaries. Every split gets at least one speaker.
 */
inline void AssignSplits(std::vector<DatasetRecord> &records, const SplitRatios &ratios,
                         std::uint64_t seed) {
  if (!(ratios.train > 0 && ratios.val > 0 && ratios.test > 0) ||
      std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9)
    throw ValidationError("split: ratios must be positive and sum to 1");
  std::map<std::string, std::size_t> per_speaker;
  for (const auto &r : records) ++per_speaker[r.speaker_id];
  if (per_speaker.size() < 3)
    throw ValidationError("split: need at least 3 speakers, have " +
                          std::to_string(per_speaker.size()));
  std::vector<std::string> speakers;
  for (const auto &[s, n] : per_speaker) speakers.push_back(s);
  rnd::Engine rng(seed);
  rnd::Shuffle(speakers, rng);

  const double total = static_cast<double>(records.size());
  const double b1 = ratios.train, b2 = ratios.train + ratios.val;
  const std::size_t ns = speakers.size();
  // Speakers [0, first_val) go to train, [first_val, first_test) to val.
  std::size_t first_val = ns, first_test = ns;
  double cum = 0.0;
  for (std::size_t i = 0; i < ns; ++i) {
    double n = static_cast<double>(per_speaker[speakers[i]]);
    double mid = (cum + n / 2.0) / total;
    if (mid >= b1 && first_val == ns) first_val = i;
    if (mid >= b2 && first_test == ns) first_test = i;
    cum += n;
  }
  first_val = std::clamp<std::size_t>(first_val, 1, ns - 2);
  first_test = std::clamp<std::size_t>(first_test, first_val + 1, ns - 1);

  std::map<std::string, DataSplit> assignment;
  for (std::size_t i = 0; i < ns; ++i)
    assignment[speakers[i]] =
        i < first_val ? DataSplit::kTrain : (i < first_test ? DataSplit::kVal : DataSplit::kTest);
  for (auto &r : records) r.split = assignment.at(r.speaker_id);
}

}  // namespace ddsd

#endif  // DDSD_CORPUS_HPP_
