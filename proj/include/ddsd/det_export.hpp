// include/ddsd/det_export.hpp

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

#ifndef DDSD_DET_EXPORT_HPP_
#define DDSD_DET_EXPORT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "ddsd/eval.hpp"
#include "ddsd/stats.hpp"
#include "ddsd/text_util.hpp"

namespace ddsd {

inline std::string DetCsv(const DetCurve &curve) {
  std::string out = "threshold,frr,far\n";
  for (const auto &p : curve.points)
    out += FormatDouble(p.threshold) + "," + FormatDouble(p.frr) + "," + FormatDouble(p.far) + "\n";
  return out;
}

/// Inverse of DetCsv. Class counts are not stored and come back as zero.
inline DetCurve ParseDetCsv(std::string_view doc) {
  DetCurve curve;
  std::size_t ln = 0;
  bool header = false;
  for (std::string_view line : Split(doc, '\n')) {
    ++ln;
    line = Trim(line);
    if (line.empty()) continue;
    if (!header) {
      if (line != "threshold,frr,far") throw ParseError(ln, "expected DET CSV header");
      header = true;
      continue;
    }
    auto f = Split(line, ',');
    if (f.size() != 3) throw ParseError(ln, "expected 3 fields");
    auto t = ParseDouble(f[0]), frr = ParseDouble(f[1]), far = ParseDouble(f[2]);
    if (!t || !frr || !far) throw ParseError(ln, "bad number");
    curve.points.push_back({*t, *frr, *far});
  }
  return curve;
}

enum class DetAxis { kLinear, kNormalDeviate };

/// DET plot, FAR on x and FRR on y. Normal-deviate axes clip rates to
/// [0.001, 0.999] since 0 and 1 map to infinity.
inline std::string DetSvg(const DetCurve &curve, DetAxis axis = DetAxis::kNormalDeviate,
                          std::string_view title = "DET curve") {
  const double w = 480, h = 480, margin = 60;
  const double lo_rate = 0.001, hi_rate = 0.999;
  auto map_rate = [&](double r) {
    if (axis == DetAxis::kLinear) return r;
    double c = std::clamp(r, lo_rate, hi_rate);
    double zlo = stats::NormalQuantile(lo_rate), zhi = stats::NormalQuantile(hi_rate);
    return (stats::NormalQuantile(c) - zlo) / (zhi - zlo);
  };
  auto x_of = [&](double far) { return margin + map_rate(far) * (w - 2 * margin); };
  auto y_of = [&](double frr) { return h - margin - map_rate(frr) * (h - 2 * margin); };
  auto num = [](double v) { return FormatFixed(v, 2); };
  std::string escaped;
  for (char c : title) {
    switch (c) {
      case '<': escaped += "&lt;"; break;
      case '>': escaped += "&gt;"; break;
      case '&': escaped += "&amp;"; break;
      case '"': escaped += "&quot;"; break;
      default: escaped += c;
    }
  }

  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w) + "\" height=\"" + num(h) +
       "\" viewBox=\"0 0 " + num(w) + " " + num(h) + "\">\n";
  s += "<title>" + escaped + "</title>\n";
  s += "<rect x=\"0\" y=\"0\" width=\"" + num(w) + "\" height=\"" + num(h) +
       "\" fill=\"white\"/>\n";
  s += "<g stroke=\"#bbbbbb\" stroke-width=\"1\">\n";
  const std::vector<double> ticks =
      axis == DetAxis::kLinear
          ? std::vector<double>{0.2, 0.4, 0.6, 0.8}
          : std::vector<double>{0.001, 0.01, 0.05, 0.1, 0.2, 0.4, 0.6, 0.8, 0.9, 0.95, 0.99, 0.999};
  for (double t : ticks) {
    s += "<line x1=\"" + num(x_of(t)) + "\" y1=\"" + num(y_of(0)) + "\" x2=\"" + num(x_of(t)) +
         "\" y2=\"" + num(y_of(1)) + "\"/>\n";
    s += "<line x1=\"" + num(x_of(0)) + "\" y1=\"" + num(y_of(t)) + "\" x2=\"" + num(x_of(1)) +
         "\" y2=\"" + num(y_of(t)) + "\"/>\n";
  }
  s += "</g>\n";
  s += "<g font-family=\"sans-serif\" font-size=\"10\" fill=\"black\">\n";
  for (double t : ticks) {
    char label_buf[32];
    std::snprintf(label_buf, sizeof(label_buf), "%g%%", t * 100);
    std::string label = label_buf;
    s += "<text x=\"" + num(x_of(t)) + "\" y=\"" + num(h - margin + 14) +
         "\" text-anchor=\"middle\">" + label + "</text>\n";
    s += "<text x=\"" + num(margin - 6) + "\" y=\"" + num(y_of(t) + 3) +
         "\" text-anchor=\"end\">" + label + "</text>\n";
  }
  s += "<text x=\"" + num(w / 2) + "\" y=\"" + num(h - 16) +
       "\" text-anchor=\"middle\">False Accept Rate</text>\n";
  s += "<text x=\"16\" y=\"" + num(h / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
       num(h / 2) + ")\">False Reject Rate</text>\n";
  s += "</g>\n";
  s += "<polyline fill=\"none\" stroke=\"#cc0000\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    if (i) s += ' ';
    s += num(x_of(curve.points[i].far)) + "," + num(y_of(curve.points[i].frr));
  }
  s += "\"/>\n";
  s += "</svg>\n";
  return s;
}

}  // namespace ddsd

#endif  // DDSD_DET_EXPORT_HPP_
