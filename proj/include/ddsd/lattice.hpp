// include/ddsd/lattice.hpp

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

#ifndef DDSD_LATTICE_HPP_
#define DDSD_LATTICE_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ddsd/error.hpp"
#include "ddsd/text_util.hpp"

namespace ddsd {

/// Reserved token for arcs that consume no word.
inline constexpr std::string_view kEpsilon = "<eps>";

struct LatticeArc {
  int source = 0;
  int target = 0;
  std::string word;
  double acoustic_cost = 0.0;
  double lm_cost = 0.0;

  double cost() const { return acoustic_cost + lm_cost; }
};

/// One decoded word sequence. `arcs` indexes into Lattice::arcs() and spells
/// out the concrete path whose cost is `total_cost`.
struct Hypothesis {
  std::vector<std::string> words;
  std::string text;
  double total_cost = 0.0;
  std::vector<std::size_t> arcs;
};

/**
   Weighted acyclic word graph. Lower cost means a more confident path;
   costs may be negative.

   Construction validates the graph (node ids in range, no cycles, at least
   one start-to-final path) and prunes dead arcs, i.e. arcs that are not on
   any start-to-final path. Node ids are kept as given; dead nodes simply have
   no arcs and are reported by is_live().
 */
class Lattice {
 public:
  Lattice() = default;

  static Lattice Build(int node_count, int start_node, std::vector<int> finals,
                       std::vector<LatticeArc> arcs) {
    if (node_count <= 0)
      throw ValidationError("lattice: node_count must be positive");
    auto in_range = [&](int v) { return v >= 0 && v < node_count; };
    if (!in_range(start_node))
      throw ValidationError("lattice: start node out of range");
    if (finals.empty()) throw ValidationError("lattice: no final nodes");
    for (int f : finals)
      if (!in_range(f)) throw ValidationError("lattice: final node out of range");
    for (const LatticeArc &a : arcs) {
      if (!in_range(a.source) || !in_range(a.target))
        throw ValidationError("lattice: arc node id out of range");
      if (a.word.empty()) throw ValidationError("lattice: empty arc word");
      if (!std::isfinite(a.acoustic_cost) || !std::isfinite(a.lm_cost))
        throw ValidationError("lattice: non-finite arc cost");
    }
    const std::size_t n = static_cast<std::size_t>(node_count);

    // Cycle check over the full graph, before pruning.
    {
      std::vector<int> indegree(n, 0);
      std::vector<std::vector<std::size_t>> out(n);
      for (std::size_t i = 0; i < arcs.size(); ++i) {
        out[arcs[i].source].push_back(i);
        ++indegree[arcs[i].target];
      }
      std::vector<int> stack;
      for (std::size_t v = 0; v < n; ++v)
        if (indegree[v] == 0) stack.push_back(static_cast<int>(v));
      std::size_t visited = 0;
      while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        ++visited;
        for (std::size_t i : out[v])
          if (--indegree[arcs[i].target] == 0) stack.push_back(arcs[i].target);
      }
      if (visited != n) throw ValidationError("lattice: graph contains a cycle");
    }

    std::vector<char> is_final(n, 0);
    for (int f : finals) is_final[f] = 1;

    std::vector<char> reach(n, 0), coreach(n, 0);
    {
      std::vector<std::vector<int>> fwd(n), bwd(n);
      for (const LatticeArc &a : arcs) {
        fwd[a.source].push_back(a.target);
        bwd[a.target].push_back(a.source);
      }
      std::vector<int> stack{start_node};
      reach[start_node] = 1;
      while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (int w : fwd[v])
          if (!reach[w]) reach[w] = 1, stack.push_back(w);
      }
      for (std::size_t v = 0; v < n; ++v)
        if (is_final[v]) coreach[v] = 1, stack.push_back(static_cast<int>(v));
      while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (int w : bwd[v])
          if (!coreach[w]) coreach[w] = 1, stack.push_back(w);
      }
    }
    if (!reach[start_node] || !coreach[start_node])
      throw ValidationError("lattice: no path from start node to a final node");

    Lattice lat;
    lat.node_count_ = node_count;
    lat.start_ = start_node;
    lat.live_.assign(n, 0);
    for (std::size_t v = 0; v < n; ++v) lat.live_[v] = reach[v] && coreach[v];
    std::sort(finals.begin(), finals.end());
    finals.erase(std::unique(finals.begin(), finals.end()), finals.end());
    for (int f : finals)
      if (lat.live_[f]) lat.finals_.push_back(f);
    lat.is_final_.assign(n, 0);
    for (int f : lat.finals_) lat.is_final_[f] = 1;
    for (LatticeArc &a : arcs)
      if (lat.live_[a.source] && lat.live_[a.target])
        lat.arcs_.push_back(std::move(a));
    lat.out_.assign(n, {});
    for (std::size_t i = 0; i < lat.arcs_.size(); ++i)
      lat.out_[lat.arcs_[i].source].push_back(i);
    lat.ComputeTopologicalOrder();
    return lat;
  }

  int node_count() const { return node_count_; }
  int start_node() const { return start_; }
  const std::vector<int> &final_nodes() const { return finals_; }
  const std::vector<LatticeArc> &arcs() const { return arcs_; }
  const std::vector<std::size_t> &out_arcs(int node) const { return out_[node]; }
  bool is_final(int node) const { return is_final_[node] != 0; }
  bool is_live(int node) const { return live_[node] != 0; }
  /// Live nodes only, sources before targets.
  const std::vector<int> &topological_order() const { return topo_; }

 private:
  void ComputeTopologicalOrder() {
    std::vector<int> indegree(node_count_, 0);
    for (const LatticeArc &a : arcs_) ++indegree[a.target];
    std::vector<int> stack;
    for (int v = node_count_ - 1; v >= 0; --v)
      if (live_[v] && indegree[v] == 0) stack.push_back(v);
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      topo_.push_back(v);
      for (std::size_t i : out_[v])
        if (--indegree[arcs_[i].target] == 0) stack.push_back(arcs_[i].target);
    }
  }

  int node_count_ = 0;
  int start_ = 0;
  std::vector<int> finals_;
  std::vector<char> is_final_;
  std::vector<char> live_;
  std::vector<LatticeArc> arcs_;
  std::vector<std::vector<std::size_t>> out_;
  std::vector<int> topo_;
};

/**
   Reads the line-oriented text lattice format:

     LATTICE <node_count> <start_node>
     <src> <dst> <word> <acoustic_cost> <lm_cost>
     FINAL <node>

   '#' starts a comment that runs to the end of the line; blank lines are
   ignored. The header must precede all arc and FINAL lines.
 */
inline Lattice ParseLattice(std::string_view doc) {
  int node_count = -1, start = -1;
  std::vector<int> finals;
  std::vector<LatticeArc> arcs;
  std::size_t line_no = 0;
  auto node_id = [&](std::string_view tok, std::size_t ln) {
    auto v = ParseInt<int>(tok);
    if (!v) throw ParseError(ln, "bad node id '" + std::string(tok) + "'");
    if (*v < 0 || *v >= node_count)
      throw ParseError(ln, "node id " + std::string(tok) + " out of range");
    return *v;
  };
  for (std::string_view raw : Split(doc, '\n')) {
    ++line_no;
    std::size_t hash = raw.find('#');
    if (hash != std::string_view::npos) raw = raw.substr(0, hash);
    std::vector<std::string_view> f = SplitFields(Trim(raw));
    if (f.empty()) continue;
    if (f[0] == "LATTICE") {
      if (node_count >= 0) throw ParseError(line_no, "duplicate LATTICE header");
      if (f.size() != 3) throw ParseError(line_no, "expected LATTICE <nodes> <start>");
      auto nc = ParseInt<int>(f[1]);
      if (!nc || *nc <= 0) throw ParseError(line_no, "bad node count");
      node_count = *nc;
      start = node_id(f[2], line_no);
      continue;
    }
    if (node_count < 0) throw ParseError(line_no, "missing LATTICE header");
    if (f[0] == "FINAL") {
      if (f.size() != 2) throw ParseError(line_no, "expected FINAL <node>");
      finals.push_back(node_id(f[1], line_no));
      continue;
    }
    if (f.size() != 5)
      throw ParseError(line_no, "expected <src> <dst> <word> <ac_cost> <lm_cost>");
    LatticeArc a;
    a.source = node_id(f[0], line_no);
    a.target = node_id(f[1], line_no);
    a.word = std::string(f[2]);
    auto ac = ParseDouble(f[3]);
    auto lm = ParseDouble(f[4]);
    if (!ac || !lm || !std::isfinite(*ac) || !std::isfinite(*lm))
      throw ParseError(line_no, "bad arc cost");
    a.acoustic_cost = *ac;
    a.lm_cost = *lm;
    arcs.push_back(std::move(a));
  }
  if (node_count < 0) throw ParseError(0, "empty lattice document");
  return Lattice::Build(node_count, start, std::move(finals), std::move(arcs));
}

/// Writes `lat` in the text format. Costs use the shortest round-trip form,
/// so ParseLattice(WriteLattice(l)) reproduces every cost bit-exactly.
inline std::string WriteLattice(const Lattice &lat) {
  std::string out = "LATTICE " + std::to_string(lat.node_count()) + " " +
                    std::to_string(lat.start_node()) + "\n";
  for (const LatticeArc &a : lat.arcs()) {
    out += std::to_string(a.source) + " " + std::to_string(a.target) + " " +
           a.word + " " + FormatDouble(a.acoustic_cost) + " " +
           FormatDouble(a.lm_cost) + "\n";
  }
  for (int f : lat.final_nodes()) out += "FINAL " + std::to_string(f) + "\n";
  return out;
}

/// Arc-cost sum in path order, starting from 0.
inline double PathCost(const Lattice &lat, const std::vector<std::size_t> &path) {
  double total = 0.0;
  for (std::size_t i : path) total += lat.arcs()[i].cost();
  return total;
}

inline Hypothesis MakeHypothesis(const Lattice &lat, std::vector<std::size_t> path) {
  Hypothesis h;
  for (std::size_t i : path) {
    const std::string &w = lat.arcs()[i].word;
    if (w != kEpsilon) h.words.push_back(w);
  }
  h.text = Join(h.words, " ");
  h.total_cost = PathCost(lat, path);
  h.arcs = std::move(path);
  return h;
}

/**
   The n lowest-cost distinct word sequences, ascending by cost with ties
   broken by text. Paths spelling the same text collapse to their cheapest
   one.

   Exact backward (Viterbi) completion costs drive a best-first forward
   expansion, so complete paths surface in cost order. Because the forward
   costs are summed in path order and the completion costs in reverse, the
   two can disagree in the last bits; the search therefore keeps expanding
   until the frontier is clear of the n-th candidate by a small slack, and
   the final ranking is done on the path-order sums alone.
 */
inline std::vector<Hypothesis> NBest(const Lattice &lat, std::size_t n) {
  if (n == 0) throw ValidationError("nbest: n must be positive");
  const auto &arcs = lat.arcs();
  const double inf = std::numeric_limits<double>::infinity();

  std::vector<double> completion(lat.node_count(), inf);
  const auto &topo = lat.topological_order();
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    int v = *it;
    double best = lat.is_final(v) ? 0.0 : inf;
    for (std::size_t i : lat.out_arcs(v))
      best = std::min(best, arcs[i].cost() + completion[arcs[i].target]);
    completion[v] = best;
  }
  double magnitude = 1.0;
  for (const LatticeArc &a : arcs)
    magnitude += std::abs(a.acoustic_cost) + std::abs(a.lm_cost);
  const double slack = 1e-9 * magnitude;

  struct Trail {
    long parent;
    std::size_t arc;
  };
  struct Entry {
    double priority;
    double cost;
    int node;
    long trail;  // -1 is the empty path
    bool ended;
    std::size_t seq;
  };
  auto later = [](const Entry &a, const Entry &b) {
    if (a.priority != b.priority) return a.priority > b.priority;
    return a.seq > b.seq;
  };
  std::vector<Trail> trails;
  std::priority_queue<Entry, std::vector<Entry>, decltype(later)> frontier(later);
  std::size_t seq = 0;
  frontier.push({completion[lat.start_node()], 0.0, lat.start_node(), -1, false, seq++});

  auto path_of = [&](long t) {
    std::vector<std::size_t> path;
    for (; t >= 0; t = trails[t].parent) path.push_back(trails[t].arc);
    std::reverse(path.begin(), path.end());
    return path;
  };

  struct Found {
    double cost;
    std::vector<std::size_t> path;
  };
  std::map<std::string, Found> by_text;
  std::set<std::pair<double, std::string>> ranked;

  auto nth_cost = [&]() -> double {
    if (ranked.size() < n) return inf;
    auto it = ranked.begin();
    std::advance(it, n - 1);
    return it->first;
  };

  while (!frontier.empty()) {
    if (frontier.top().priority - slack > nth_cost()) break;
    Entry e = frontier.top();
    frontier.pop();
    if (e.ended) {
      std::vector<std::size_t> path = path_of(e.trail);
      Hypothesis h = MakeHypothesis(lat, path);
      auto it = by_text.find(h.text);
      if (it == by_text.end()) {
        ranked.emplace(h.total_cost, h.text);
        by_text.emplace(h.text, Found{h.total_cost, std::move(h.arcs)});
      } else if (h.total_cost < it->second.cost ||
                 (h.total_cost == it->second.cost && h.arcs < it->second.path)) {
        ranked.erase({it->second.cost, h.text});
        ranked.emplace(h.total_cost, h.text);
        it->second = Found{h.total_cost, std::move(h.arcs)};
      }
      continue;
    }
    if (lat.is_final(e.node))
      frontier.push({e.cost, e.cost, e.node, e.trail, true, seq++});
    for (std::size_t i : lat.out_arcs(e.node)) {
      trails.push_back({e.trail, i});
      double g = e.cost + arcs[i].cost();
      frontier.push({g + completion[arcs[i].target], g, arcs[i].target,
                     static_cast<long>(trails.size() - 1), false, seq++});
    }
  }

  std::vector<Hypothesis> out;
  for (const auto &[cost, text] : ranked) {
    if (out.size() == n) break;
    out.push_back(MakeHypothesis(lat, by_text.at(text).path));
  }
  return out;
}

/// The single least-cost path (ties broken by text).
inline Hypothesis BestPath(const Lattice &lat) { return NBest(lat, 1).front(); }

}  // namespace ddsd

#endif  // DDSD_LATTICE_HPP_
