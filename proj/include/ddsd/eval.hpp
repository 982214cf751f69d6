// include/ddsd/eval.hpp

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

#ifndef DDSD_EVAL_HPP_
#define DDSD_EVAL_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ddsd/error.hpp"
#include "ddsd/stats.hpp"
#include "ddsd/text_util.hpp"

namespace ddsd {

/// truth: 1 = device-directed. score: probability, or a hard 0/1 decision.
struct ScoredExample {
  std::string pair_id;
  int truth = 0;
  double score = 0.0;
};

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::size_t total() const { return tp + fp + tn + fn; }
  bool operator==(const ConfusionCounts &) const = default;
};

struct OperatingPoint {
  double threshold = 0.0;
  double frr = 0.0;
  double far = 0.0;
  bool operator==(const OperatingPoint &) const = default;
};

struct OpResult {
  double target_frr = 0.0;
  OperatingPoint point;
  bool attainable = true;
};

struct MetricsReport {
  std::optional<double> far;  // absent without negatives
  std::optional<double> frr;  // absent without positives
  std::optional<double> eer;  // absent for hard-label systems
  std::optional<double> threshold;
  std::vector<OpResult> far_at_op;
  ConfusionCounts counts;
  std::optional<double> fallback_rate;
  bool hard_labels = false;
};

/// A target FRR below 1/positives cannot be met except by accepting everything.
class UnattainableOperatingPoint : public Error {
 public:
  UnattainableOperatingPoint(double target, OperatingPoint nearest)
      : Error("operating point FRR <= " + FormatDouble(target) +
              " is finer than the positive-count resolution"),
        target_(target),
        nearest_(nearest) {}
  double target() const { return target_; }
  const OperatingPoint &nearest() const { return nearest_; }

 private:
  double target_;
  OperatingPoint nearest_;
};

/// FA = predicted 1 on truth 0; FR = predicted 0 on truth 1.
inline MetricsReport FarFrr(const std::vector<std::pair<int, int>> &truth_pred) {
  if (truth_pred.empty()) throw ValidationError("far_frr: empty input");
  MetricsReport r;
  for (auto [t, p] : truth_pred) {
    if ((t != 0 && t != 1) || (p != 0 && p != 1))
      throw ValidationError("far_frr: labels must be 0 or 1");
    if (t == 1 && p == 1) ++r.counts.tp;
    if (t == 0 && p == 1) ++r.counts.fp;
    if (t == 0 && p == 0) ++r.counts.tn;
    if (t == 1 && p == 0) ++r.counts.fn;
  }
  const auto &c = r.counts;
  if (c.fp + c.tn > 0) r.far = static_cast<double>(c.fp) / static_cast<double>(c.fp + c.tn);
  if (c.fn + c.tp > 0) r.frr = static_cast<double>(c.fn) / static_cast<double>(c.fn + c.tp);
  return r;
}

/// Binarizes each score at `threshold` (score >= threshold accepts) and counts.
inline MetricsReport FarFrrAt(const std::vector<ScoredExample> &scores, double threshold) {
  std::vector<std::pair<int, int>> tp;
  tp.reserve(scores.size());
  for (const auto &s : scores) tp.emplace_back(s.truth, s.score >= threshold ? 1 : 0);
  MetricsReport r = FarFrr(tp);
  r.threshold = threshold;
  return r;
}

/// Operating points ordered by ascending threshold.
struct DetCurve {
  std::vector<OperatingPoint> points;
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

/// Threshold one past every legal score: rejects everything.
inline double RejectAllThreshold() { return std::nextafter(1.0, 2.0); }

inline void ValidateScores(const std::vector<ScoredExample> &scores) {
  if (scores.empty()) throw ValidationError("scores: empty input");
  for (const auto &s : scores) {
    if (s.truth != 0 && s.truth != 1)
      throw ValidationError("scores: truth must be 0 or 1 (pair " + s.pair_id + ")");
    if (!(s.score >= 0.0 && s.score <= 1.0))
      throw ValidationError("scores: score outside [0, 1] (pair " + s.pair_id + ")");
  }
}

/**
   Full threshold sweep: 0, every distinct score, and RejectAllThreshold().
   Consecutive thresholds giving the same (frr, far) are merged, keeping the
   smallest threshold. FRR rises and FAR falls along the curve.
 */
inline DetCurve Sweep(const std::vector<ScoredExample> &scores) {
  ValidateScores(scores);
  std::vector<double> pos, neg;
  for (const auto &s : scores) (s.truth == 1 ? pos : neg).push_back(s.score);
  if (pos.empty() || neg.empty()) throw ValidationError("sweep: need both classes");
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());

  std::vector<double> thresholds{0.0};
  for (const auto &s : scores) thresholds.push_back(s.score);
  thresholds.push_back(RejectAllThreshold());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  DetCurve curve;
  curve.positives = pos.size();
  curve.negatives = neg.size();
  const double np = static_cast<double>(pos.size()), nn = static_cast<double>(neg.size());
  for (double t : thresholds) {
    auto rejected_pos = std::lower_bound(pos.begin(), pos.end(), t) - pos.begin();
    auto accepted_neg = neg.end() - std::lower_bound(neg.begin(), neg.end(), t);
    OperatingPoint p{t, static_cast<double>(rejected_pos) / np,
                     static_cast<double>(accepted_neg) / nn};
    if (!curve.points.empty() && curve.points.back().frr == p.frr &&
        curve.points.back().far == p.far)
      continue;
    curve.points.push_back(p);
  }
  return curve;
}

/// Where FAR meets FRR; linear interpolation between the two points that
/// bracket the sign change of (far - frr) when no point hits it exactly.
inline double Eer(const DetCurve &curve) {
  if (curve.points.empty()) throw ValidationError("eer: empty curve");
  const auto &pts = curve.points;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double diff = pts[i].far - pts[i].frr;
    if (diff == 0.0) return pts[i].far;
    if (diff < 0.0) {
      if (i == 0) throw ValidationError("eer: curve does not start at accept-all");
      double d0 = pts[i - 1].far - pts[i - 1].frr;
      double s = d0 / (d0 - diff);
      return pts[i - 1].frr + s * (pts[i].frr - pts[i - 1].frr);
    }
  }
  throw ValidationError("eer: curve never crosses (missing a class?)");
}

enum class OpSelection { kConservative, kInterpolated };

/**
   FAR at the operating point for a target FRR. Conservative selection takes
   the largest threshold whose FRR does not exceed the target (the lowest FAR
   meeting the FRR budget). Interpolated selection draws a straight line to
   the next point and reads FAR at exactly the target FRR.

   Throws UnattainableOperatingPoint, carrying the conservative point, when
   the target is below 1/positives.
 */
inline OperatingPoint FarAtFrr(const DetCurve &curve, double target_frr,
                               OpSelection mode = OpSelection::kConservative) {
  if (!(target_frr > 0 && target_frr < 1))
    throw ValidationError("far_at_frr: target must be in (0, 1)");
  if (curve.points.empty()) throw ValidationError("far_at_frr: empty curve");
  std::size_t best = curve.points.size();
  for (std::size_t i = 0; i < curve.points.size(); ++i)
    if (curve.points[i].frr <= target_frr) best = i;
  if (best == curve.points.size())
    throw ValidationError("far_at_frr: curve has no point meeting the target");
  OperatingPoint p = curve.points[best];
  if (curve.positives > 0 && target_frr * static_cast<double>(curve.positives) < 1.0)
    throw UnattainableOperatingPoint(target_frr, p);
  if (mode == OpSelection::kInterpolated && p.frr < target_frr &&
      best + 1 < curve.points.size()) {
    const OperatingPoint &q = curve.points[best + 1];
    double s = (target_frr - p.frr) / (q.frr - p.frr);
    p = {p.threshold + s * (q.threshold - p.threshold), target_frr,
         p.far + s * (q.far - p.far)};
  }
  return p;
}

// ---------------------------------------------------------------------------
// Significance

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p_value = 1.0;
  bool significant = false;
  bool degenerate = false;  // zero spread in the differences
  double mean_diff = 0.0;
  double sd_diff = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

/**
   Two-sided paired t-test on d = a - b. With zero spread in d the statistic
   is undefined; that case reports t = 0, p = 1, not significant, degenerate.
 */
inline TTestResult PairedTTest(const std::vector<double> &a, const std::vector<double> &b,
                               double confidence = 0.95) {
  if (a.size() != b.size()) throw ValidationError("paired t-test: length mismatch");
  if (a.size() < 2) throw ValidationError("paired t-test: need at least 2 pairs");
  if (!(confidence > 0 && confidence < 1))
    throw ValidationError("paired t-test: confidence must be in (0, 1)");
  const std::size_t n = a.size();
  std::vector<double> d(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = a[i] - b[i];
    sum += d[i];
  }
  TTestResult r;
  r.df = static_cast<double>(n - 1);
  r.mean_diff = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double v : d) ss += (v - r.mean_diff) * (v - r.mean_diff);
  r.sd_diff = std::sqrt(ss / r.df);
  if (r.sd_diff == 0.0) {
    r.degenerate = true;
    r.ci_low = r.ci_high = r.mean_diff;
    return r;
  }
  double se = r.sd_diff / std::sqrt(static_cast<double>(n));
  r.t = r.mean_diff / se;
  r.p_value = stats::StudentTTwoSidedP(r.t, r.df);
  r.significant = r.p_value < 1.0 - confidence;
  double crit = stats::StudentTQuantile(0.5 + 0.5 * confidence, r.df);
  r.ci_low = r.mean_diff - crit * se;
  r.ci_high = r.mean_diff + crit * se;
  return r;
}

enum class ErrorKind { kAll, kFalseAccept, kFalseReject };

/// Per-example 0/1 error indicators for two systems, aligned by pair_id.
inline std::pair<std::vector<double>, std::vector<double>> AlignedErrors(
    const std::vector<ScoredExample> &a, double threshold_a,
    const std::vector<ScoredExample> &b, double threshold_b, ErrorKind kind = ErrorKind::kAll) {
  std::unordered_map<std::string, const ScoredExample *> index;
  for (const auto &s : b)
    if (!index.emplace(s.pair_id, &s).second)
      throw ValidationError("align: duplicate pair_id " + s.pair_id);
  if (a.size() != b.size()) throw ValidationError("align: systems scored different pair sets");
  auto error = [kind](const ScoredExample &s, double thr) {
    int pred = s.score >= thr ? 1 : 0;
    bool fa = s.truth == 0 && pred == 1, fr = s.truth == 1 && pred == 0;
    switch (kind) {
      case ErrorKind::kAll: return (fa || fr) ? 1.0 : 0.0;
      case ErrorKind::kFalseAccept: return fa ? 1.0 : 0.0;
      case ErrorKind::kFalseReject: return fr ? 1.0 : 0.0;
    }
    return 0.0;
  };
  std::pair<std::vector<double>, std::vector<double>> out;
  std::unordered_map<std::string, int> seen;
  for (const auto &s : a) {
    if (seen[s.pair_id]++) throw ValidationError("align: duplicate pair_id " + s.pair_id);
    auto it = index.find(s.pair_id);
    if (it == index.end()) throw ValidationError("align: pair " + s.pair_id + " missing in B");
    if (it->second->truth != s.truth)
      throw ValidationError("align: truth disagrees for pair " + s.pair_id);
    out.first.push_back(error(s, threshold_a));
    out.second.push_back(error(*it->second, threshold_b));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Whole-run evaluation

struct EvalOptions {
  double threshold = 0.5;
  std::vector<double> op_targets{0.05, 0.10};
  OpSelection selection = OpSelection::kConservative;
  // nullopt: treat the run as hard-label when every score is exactly 0 or 1.
  std::optional<bool> hard_labels;
};

inline bool AllHardLabels(const std::vector<ScoredExample> &scores) {
  return std::all_of(scores.begin(), scores.end(),
                     [](const ScoredExample &s) { return s.score == 0.0 || s.score == 1.0; });
}

/// Counts at the threshold; for scored systems also EER and FAR at each
/// target FRR. Unattainable targets are kept with attainable = false.
inline MetricsReport Evaluate(const std::vector<ScoredExample> &scores,
                              const EvalOptions &opts = {}) {
  ValidateScores(scores);
  MetricsReport r = FarFrrAt(scores, opts.threshold);
  r.hard_labels = opts.hard_labels.value_or(AllHardLabels(scores));
  if (r.hard_labels || !r.far || !r.frr) return r;
  DetCurve curve = Sweep(scores);
  r.eer = Eer(curve);
  for (double target : opts.op_targets) {
    OpResult op;
    op.target_frr = target;
    try {
      op.point = FarAtFrr(curve, target, opts.selection);
    } catch (const UnattainableOperatingPoint &e) {
      op.point = e.nearest();
      op.attainable = false;
    }
    r.far_at_op.push_back(op);
  }
  return r;
}

/// "key = value" lines; absent values are written as "absent".
inline std::string FormatReport(const MetricsReport &r) {
  auto opt = [](const std::optional<double> &v) { return v ? FormatDouble(*v) : "absent"; };
  std::string out;
  auto line = [&out](std::string_view k, const std::string &v) {
    out += k;
    out += " = ";
    out += v;
    out += '\n';
  };
  line("system", r.hard_labels ? "hard_labels" : "scores");
  line("threshold", opt(r.threshold));
  line("count.tp", std::to_string(r.counts.tp));
  line("count.fp", std::to_string(r.counts.fp));
  line("count.tn", std::to_string(r.counts.tn));
  line("count.fn", std::to_string(r.counts.fn));
  line("far", opt(r.far));
  line("frr", opt(r.frr));
  line("eer", opt(r.eer));
  for (const auto &op : r.far_at_op) {
    std::string key = "far_at_frr." + FormatDouble(op.target_frr);
    line(key, FormatDouble(op.point.far));
    line(key + ".achieved_frr", FormatDouble(op.point.frr));
    line(key + ".threshold", FormatDouble(op.point.threshold));
    line(key + ".attainable", op.attainable ? "true" : "false");
  }
  line("fallback_rate", opt(r.fallback_rate));
  return out;
}

inline std::map<std::string, std::string> ParseKeyValue(std::string_view doc) {
  std::map<std::string, std::string> kv;
  std::size_t ln = 0;
  for (std::string_view line : Split(doc, '\n')) {
    ++ln;
    line = Trim(line);
    if (line.empty() || line.front() == '#') continue;
    std::size_t eq = line.find(" = ");
    if (eq == std::string_view::npos) throw ParseError(ln, "expected 'key = value'");
    kv[std::string(Trim(line.substr(0, eq)))] = std::string(Trim(line.substr(eq + 3)));
  }
  return kv;
}

inline std::string FormatTTest(const TTestResult &r, double confidence) {
  std::string out;
  out += "t = " + FormatDouble(r.t) + "\n";
  out += "df = " + FormatDouble(r.df) + "\n";
  out += "p_value = " + FormatDouble(r.p_value) + "\n";
  out += "confidence = " + FormatDouble(confidence) + "\n";
  out += std::string("significant = ") + (r.significant ? "true" : "false") + "\n";
  out += std::string("degenerate = ") + (r.degenerate ? "true" : "false") + "\n";
  out += "mean_diff = " + FormatDouble(r.mean_diff) + "\n";
  out += "sd_diff = " + FormatDouble(r.sd_diff) + "\n";
  out += "ci_low = " + FormatDouble(r.ci_low) + "\n";
  out += "ci_high = " + FormatDouble(r.ci_high) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Scores CSV: header "pair_id,truth,score".

inline std::string WriteScoresCsv(const std::vector<ScoredExample> &scores) {
  std::string out = "pair_id,truth,score\n";
  for (const auto &s : scores) {
    if (s.pair_id.find_first_of(",\n") != std::string::npos)
      throw ValidationError("scores csv: pair_id contains ',' or newline");
    out += s.pair_id + "," + std::to_string(s.truth) + "," + FormatDouble(s.score) + "\n";
  }
  return out;
}

inline std::vector<ScoredExample> ReadScoresCsv(std::string_view doc) {
  std::vector<ScoredExample> out;
  std::size_t ln = 0;
  bool header = false;
  for (std::string_view line : Split(doc, '\n')) {
    ++ln;
    line = Trim(line);
    if (line.empty()) continue;
    if (!header) {
      if (line != "pair_id,truth,score") throw ParseError(ln, "expected scores CSV header");
      header = true;
      continue;
    }
    auto f = Split(line, ',');
    if (f.size() != 3) throw ParseError(ln, "expected 3 fields");
    auto truth = ParseInt<int>(Trim(f[1]));
    auto score = ParseDouble(Trim(f[2]));
    if (!truth || (*truth != 0 && *truth != 1)) throw ParseError(ln, "truth must be 0 or 1");
    if (!score || !(*score >= 0.0 && *score <= 1.0))
      throw ParseError(ln, "score must be a real in [0, 1]");
    out.push_back({std::string(Trim(f[0])), *truth, *score});
  }
  return out;
}

}  // namespace ddsd

#endif  // DDSD_EVAL_HPP_
