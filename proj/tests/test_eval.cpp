// tests/test_eval.cpp

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

#include <gtest/gtest.h>

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <fstream>
#include <random>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "ddsd/det_export.hpp"
#include "ddsd/eval.hpp"
#include "ddsd/stats.hpp"
#include "oracles.hpp"

namespace {

using ddsd::ScoredExample;

std::vector<ScoredExample> Make(const std::vector<int> &truth, const std::vector<double> &score) {
  std::vector<ScoredExample> out;
  for (std::size_t i = 0; i < truth.size(); ++i)
    out.push_back({"u" + std::to_string(i), truth[i], score[i]});
  return out;
}

std::string ReadFile(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(Counts, HandCountedFixture) {
  auto scores = ddsd::ReadScoresCsv(ReadFile(std::string(DDSD_TEST_DATA) + "/fixtures/hand_counted.csv"));
  ASSERT_EQ(scores.size(), 4u);
  auto r = ddsd::FarFrrAt(scores, 0.5);
  EXPECT_EQ(r.counts.tp, 1u);
  EXPECT_EQ(r.counts.fn, 1u);
  EXPECT_EQ(r.counts.tn, 1u);
  EXPECT_EQ(r.counts.fp, 1u);
  EXPECT_EQ(*r.far, 0.5);
  EXPECT_EQ(*r.frr, 0.5);
}

TEST(Counts, PerfectAndAcceptAll) {
  auto perfect = ddsd::FarFrr({{1, 1}, {0, 0}, {1, 1}, {0, 0}});
  EXPECT_EQ(*perfect.far, 0.0);
  EXPECT_EQ(*perfect.frr, 0.0);
  auto accept = ddsd::FarFrr({{1, 1}, {0, 1}, {0, 1}});
  EXPECT_EQ(*accept.far, 1.0);
  EXPECT_EQ(*accept.frr, 0.0);
  auto only_pos = ddsd::FarFrr({{1, 1}, {1, 0}});
  EXPECT_FALSE(only_pos.far.has_value());
  EXPECT_EQ(*only_pos.frr, 0.5);
  EXPECT_THROW(ddsd::FarFrr({}), ddsd::ValidationError);
  EXPECT_THROW(ddsd::FarFrr({{2, 1}}), ddsd::ValidationError);
}

TEST(Counts, BoundaryScoreIsAccepted) {
  auto r = ddsd::FarFrrAt(Make({1, 0}, {0.5, 0.5}), 0.5);
  EXPECT_EQ(*r.frr, 0.0);
  EXPECT_EQ(*r.far, 1.0);
}

TEST(Eer, SeparatedIsZero) {
  std::vector<int> t = {1, 1, 1, 0, 0, 0};
  std::vector<double> s = {0.9, 0.8, 0.7, 0.3, 0.2, 0.1};
  EXPECT_EQ(oracle::ExactEer(t, s), 0.0);
  EXPECT_EQ(ddsd::Eer(ddsd::Sweep(Make(t, s))), 0.0);
}

TEST(Eer, QuarterOnFourByFour) {
  std::vector<int> t = {1, 1, 1, 1, 0, 0, 0, 0};
  std::vector<double> s = {0.9, 0.8, 0.5, 0.3, 0.6, 0.2, 0.1, 0.05};
  ASSERT_EQ(oracle::ExactEer(t, s), 0.25);
  auto curve = ddsd::Sweep(Make(t, s));
  EXPECT_EQ(ddsd::Eer(curve), 0.25);
  ASSERT_EQ(oracle::FarAtFrr(t, s, 1, 4), 0.25);
  auto op = ddsd::FarAtFrr(curve, 0.25);
  EXPECT_EQ(op.far, 0.25);
  EXPECT_EQ(op.frr, 0.25);
  EXPECT_EQ(op.threshold, 0.5);
}

TEST(Sweep, RecountsMatchOracle) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> t(20);
    std::vector<double> s(20);
    for (int i = 0; i < 20; ++i) {
      t[i] = i < 7 ? 1 : static_cast<int>(rng() % 2);
      // Round to one decimal so ties happen.
      s[i] = std::round(u(rng) * 10.0) / 10.0;
    }
    auto curve = ddsd::Sweep(Make(t, s));
    for (const auto &p : curve.points) {
      auto c = oracle::CountAt(t, s, p.threshold);
      EXPECT_EQ(p.frr, static_cast<double>(c.fr) / c.pos);
      EXPECT_EQ(p.far, static_cast<double>(c.fa) / c.neg);
    }
    // Every distinct oracle operating point appears on the curve.
    for (const auto &[thr, c] : oracle::Enumerate(t, s)) {
      if (thr > 1.0) continue;
      double frr = static_cast<double>(c.fr) / c.pos, far = static_cast<double>(c.fa) / c.neg;
      bool found = false;
      for (const auto &p : curve.points) found |= p.frr == frr && p.far == far;
      EXPECT_TRUE(found) << "threshold " << thr;
    }
    EXPECT_EQ(curve.points.front().frr, 0.0);
    EXPECT_EQ(curve.points.front().far, 1.0);
    EXPECT_EQ(curve.points.back().frr, 1.0);
    EXPECT_EQ(curve.points.back().far, 0.0);
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
      EXPECT_GT(curve.points[i].threshold, curve.points[i - 1].threshold);
      EXPECT_GE(curve.points[i].frr, curve.points[i - 1].frr);
      EXPECT_LE(curve.points[i].far, curve.points[i - 1].far);
    }
    double oracle_far = oracle::FarAtFrr(t, s, 1, 5);
    long pos = std::count(t.begin(), t.end(), 1);
    if (pos >= 5) {
      EXPECT_EQ(ddsd::FarAtFrr(curve, 0.2).far, oracle_far);
    }
    double exact = oracle::ExactEer(t, s);
    if (exact >= 0) {
      EXPECT_NEAR(ddsd::Eer(curve), exact, 1e-12);
    }
  }
}

TEST(Eer, InvariantUnderMonotoneTransform) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<int> t(300);
  std::vector<double> s(300), s2(300);
  for (int i = 0; i < 300; ++i) {
    t[i] = static_cast<int>(rng() % 2);
    s[i] = std::clamp(0.5 + (t[i] ? 0.15 : -0.15) + 0.25 * (u(rng) - 0.5) * 2, 0.0, 1.0);
    s2[i] = std::pow(s[i], 3.0);
  }
  double a = ddsd::Eer(ddsd::Sweep(Make(t, s)));
  double b = ddsd::Eer(ddsd::Sweep(Make(t, s2)));
  EXPECT_NEAR(a, b, 1e-12);
}

TEST(Eer, RandomScoresNearHalf) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<int> t(4000);
  std::vector<double> s(4000);
  for (int i = 0; i < 4000; ++i) {
    t[i] = static_cast<int>(rng() % 2);
    s[i] = u(rng);
  }
  EXPECT_NEAR(ddsd::Eer(ddsd::Sweep(Make(t, s))), 0.5, 0.1);
}

TEST(Sweep, AllEqualScoresGiveTwoPoints) {
  auto curve = ddsd::Sweep(Make({1, 0, 1, 0}, {0.4, 0.4, 0.4, 0.4}));
  ASSERT_EQ(curve.points.size(), 2u);
  EXPECT_EQ(curve.points[0].far, 1.0);
  EXPECT_EQ(curve.points[1].frr, 1.0);
  EXPECT_EQ(ddsd::Eer(curve), 0.5);
}

TEST(Sweep, NeedsBothClasses) {
  EXPECT_THROW(ddsd::Sweep(Make({1, 1}, {0.2, 0.3})), ddsd::ValidationError);
  EXPECT_THROW(ddsd::Sweep(Make({1, 0}, {0.2, 1.3})), ddsd::ValidationError);
}

TEST(OperatingPoint, UnattainableTarget) {
  // 10 positives: the finest FRR step is 1/10 > 0.05.
  std::vector<int> t = {1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0};
  std::vector<double> s = {0.9, 0.8, 0.7, 0.6, 0.55, 0.5, 0.45, 0.4, 0.38, 0.35,
                           0.3, 0.65, 0.2, 0.1};
  auto curve = ddsd::Sweep(Make(t, s));
  try {
    ddsd::FarAtFrr(curve, 0.05);
    FAIL();
  } catch (const ddsd::UnattainableOperatingPoint &e) {
    EXPECT_EQ(e.target(), 0.05);
    EXPECT_EQ(e.nearest().frr, 0.0);
  }
  EXPECT_NO_THROW(ddsd::FarAtFrr(curve, 0.1));
  auto r = ddsd::Evaluate(Make(t, s));
  ASSERT_EQ(r.far_at_op.size(), 2u);
  EXPECT_FALSE(r.far_at_op[0].attainable);
  EXPECT_TRUE(r.far_at_op[1].attainable);
  EXPECT_THROW(ddsd::FarAtFrr(curve, 0.0), ddsd::ValidationError);
}

TEST(OperatingPoint, InterpolatedSelection) {
  std::vector<int> t = {1, 1, 1, 1, 0, 0, 0, 0};
  std::vector<double> s = {0.9, 0.8, 0.5, 0.3, 0.6, 0.2, 0.1, 0.05};
  auto curve = ddsd::Sweep(Make(t, s));
  auto cons = ddsd::FarAtFrr(curve, 0.375);
  auto interp = ddsd::FarAtFrr(curve, 0.375, ddsd::OpSelection::kInterpolated);
  EXPECT_EQ(cons.frr, 0.25);
  EXPECT_EQ(interp.frr, 0.375);
  EXPECT_LE(interp.far, cons.far);
}

TEST(Evaluate, HardLabelsHaveNoEer) {
  auto r = ddsd::Evaluate(Make({1, 0, 1, 0}, {1.0, 0.0, 0.0, 1.0}));
  EXPECT_TRUE(r.hard_labels);
  EXPECT_FALSE(r.eer.has_value());
  EXPECT_TRUE(r.far_at_op.empty());
  auto kv = ddsd::ParseKeyValue(ddsd::FormatReport(r));
  EXPECT_EQ(kv.at("system"), "hard_labels");
  EXPECT_EQ(kv.at("eer"), "absent");
  EXPECT_EQ(kv.at("far"), "0.5");
}

TEST(Evaluate, ReportRoundTrip) {
  std::vector<int> t = {1, 1, 1, 1, 0, 0, 0, 0};
  std::vector<double> s = {0.9, 0.8, 0.5, 0.3, 0.6, 0.2, 0.1, 0.05};
  ddsd::EvalOptions o;
  o.op_targets = {0.25};
  auto r = ddsd::Evaluate(Make(t, s), o);
  auto kv = ddsd::ParseKeyValue(ddsd::FormatReport(r));
  EXPECT_EQ(kv.at("eer"), "0.25");
  EXPECT_EQ(kv.at("far_at_frr.0.25"), "0.25");
  EXPECT_EQ(kv.at("far_at_frr.0.25.attainable"), "true");
  EXPECT_EQ(kv.at("count.tp"), "3");
  EXPECT_EQ(kv.at("fallback_rate"), "absent");
}

TEST(TTest, IdenticalSystemsAreDegenerate) {
  std::vector<double> a = {1, 0, 1, 1, 0};
  auto r = ddsd::PairedTTest(a, a);
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.t, 0.0);
  EXPECT_EQ(r.p_value, 1.0);
  EXPECT_FALSE(r.significant);
  auto c = ddsd::PairedTTest({1, 1, 1}, {0, 0, 0});
  EXPECT_TRUE(c.degenerate);
  EXPECT_EQ(c.mean_diff, 1.0);
}

TEST(TTest, HandComputedStatistic) {
  // d = (1,1,1,1,0): mean 0.8, sd sqrt(0.2), se 0.2, t = 4.
  auto r = ddsd::PairedTTest({1, 1, 1, 1, 0}, {0, 0, 0, 0, 0});
  EXPECT_NEAR(r.t, 4.0, 1e-12);
  EXPECT_EQ(r.df, 4.0);
  EXPECT_NEAR(r.t, oracle::PairedT({1, 1, 1, 1, 0}, {0, 0, 0, 0, 0}), 1e-12);
  boost::math::students_t dist(4.0);
  EXPECT_NEAR(r.p_value, 2.0 * boost::math::cdf(boost::math::complement(dist, 4.0)), 1e-10);
  EXPECT_TRUE(r.significant);
  double crit = boost::math::quantile(dist, 0.975);
  EXPECT_NEAR(r.ci_low, 0.8 - crit * 0.2, 1e-8);
  EXPECT_NEAR(r.ci_high, 0.8 + crit * 0.2, 1e-8);
  EXPECT_THROW(ddsd::PairedTTest({1}, {0}), ddsd::ValidationError);
  EXPECT_THROW(ddsd::PairedTTest({1, 2}, {0}), ddsd::ValidationError);
}

TEST(TTest, PValuesMatchBoost) {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> tu(-8.0, 8.0);
  for (int i = 0; i < 20; ++i) {
    double t = tu(rng);
    double df = 1 + static_cast<double>(rng() % 200);
    boost::math::students_t dist(df);
    double want = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
    EXPECT_NEAR(ddsd::stats::StudentTTwoSidedP(t, df), want, 1e-6) << "t=" << t << " df=" << df;
    double q = boost::math::quantile(dist, 0.975);
    EXPECT_NEAR(ddsd::stats::StudentTQuantile(0.975, df), q, 1e-6);
  }
}

TEST(TTest, RandomPairsMatchOracle) {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a(30), b(30);
    for (int i = 0; i < 30; ++i) {
      a[i] = static_cast<double>(rng() % 2);
      b[i] = static_cast<double>(rng() % 3 == 0);
    }
    auto r = ddsd::PairedTTest(a, b);
    if (r.degenerate) continue;
    EXPECT_NEAR(r.t, oracle::PairedT(a, b), 1e-10);
  }
}

TEST(Align, ErrorIndicators) {
  auto a = Make({1, 0, 1, 0}, {0.9, 0.8, 0.2, 0.1});
  auto b = Make({1, 0, 1, 0}, {0.4, 0.1, 0.7, 0.6});
  std::reverse(b.begin(), b.end());
  auto [ea, eb] = ddsd::AlignedErrors(a, 0.5, b, 0.5);
  EXPECT_EQ(ea, (std::vector<double>{0, 1, 1, 0}));
  EXPECT_EQ(eb, (std::vector<double>{1, 0, 0, 1}));
  auto [fa, fb] = ddsd::AlignedErrors(a, 0.5, b, 0.5, ddsd::ErrorKind::kFalseAccept);
  EXPECT_EQ(fa, (std::vector<double>{0, 1, 0, 0}));
  EXPECT_EQ(fb, (std::vector<double>{0, 0, 0, 1}));
  b.pop_back();
  EXPECT_THROW(ddsd::AlignedErrors(a, 0.5, b, 0.5), ddsd::ValidationError);
}

TEST(Csv, ScoresRoundTrip) {
  std::mt19937_64 rng(16);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<ScoredExample> s;
  for (int i = 0; i < 50; ++i) s.push_back({"pair" + std::to_string(i), i % 2, u(rng)});
  auto back = ddsd::ReadScoresCsv(ddsd::WriteScoresCsv(s));
  ASSERT_EQ(back.size(), s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_EQ(back[i].pair_id, s[i].pair_id);
    EXPECT_EQ(back[i].truth, s[i].truth);
    EXPECT_EQ(back[i].score, s[i].score);
  }
  EXPECT_THROW(ddsd::ReadScoresCsv("pair_id,truth,score\na,2,0.5\n"), ddsd::ParseError);
  EXPECT_THROW(ddsd::ReadScoresCsv("pair_id,truth,score\na,1,1.5\n"), ddsd::ParseError);
  EXPECT_THROW(ddsd::ReadScoresCsv("id,score\n"), ddsd::ParseError);
}

TEST(Csv, DetRoundTrip) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<int> t(40);
  std::vector<double> s(40);
  for (int i = 0; i < 40; ++i) {
    t[i] = i % 3 == 0;
    s[i] = u(rng);
  }
  auto curve = ddsd::Sweep(Make(t, s));
  auto back = ddsd::ParseDetCsv(ddsd::DetCsv(curve));
  ASSERT_EQ(back.points.size(), curve.points.size());
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    EXPECT_EQ(back.points[i].threshold, curve.points[i].threshold);
    EXPECT_EQ(back.points[i].frr, curve.points[i].frr);
    EXPECT_EQ(back.points[i].far, curve.points[i].far);
  }
}

// Tag balance, attribute quoting, and no stray '<' or '&' in text.
bool WellFormedXml(const std::string &doc, std::string *why) {
  std::vector<std::string> stack;
  std::size_t i = 0;
  static const std::regex open_re(R"(^<([A-Za-z][\w:-]*)((\s+[\w:-]+="[^"<]*")*)\s*(/?)>)");
  static const std::regex close_re(R"(^</([A-Za-z][\w:-]*)\s*>)");
  static const std::regex entity_re(R"(^&(lt|gt|amp|quot|apos|#\d+);)");
  bool root_seen = false;
  while (i < doc.size()) {
    std::smatch m;
    std::string rest = doc.substr(i, std::min<std::size_t>(4096, doc.size() - i));
    if (doc.compare(i, 5, "<?xml") == 0) {
      std::size_t e = doc.find("?>", i);
      if (e == std::string::npos || i != 0) return *why = "bad declaration", false;
      i = e + 2;
    } else if (std::regex_search(rest, m, close_re)) {
      if (stack.empty() || stack.back() != m[1]) return *why = "mismatched </" + m[1].str() + ">", false;
      stack.pop_back();
      i += m[0].length();
    } else if (std::regex_search(rest, m, open_re)) {
      if (stack.empty() && root_seen) return *why = "second root", false;
      root_seen = true;
      if (m[4].length() == 0) stack.push_back(m[1]);
      i += m[0].length();
    } else if (doc[i] == '<') {
      return *why = "stray '<' at " + std::to_string(i), false;
    } else if (doc[i] == '&') {
      if (!std::regex_search(rest, m, entity_re)) return *why = "bad entity", false;
      i += m[0].length();
    } else {
      if (stack.empty() && !std::isspace(static_cast<unsigned char>(doc[i])))
        return *why = "text outside root", false;
      ++i;
    }
  }
  if (!stack.empty()) return *why = "unclosed <" + stack.back() + ">", false;
  return root_seen;
}

TEST(Svg, WellFormedOnBothAxes) {
  auto curve = ddsd::Sweep(Make({1, 1, 0, 0, 1, 0}, {0.9, 0.4, 0.35, 0.1, 0.7, 0.8}));
  for (auto axis : {ddsd::DetAxis::kLinear, ddsd::DetAxis::kNormalDeviate}) {
    std::string svg = ddsd::DetSvg(curve, axis, "A & B <test>");
    std::string why;
    EXPECT_TRUE(WellFormedXml(svg, &why)) << why;
    EXPECT_NE(svg.find("<polyline"), std::string::npos);
    EXPECT_NE(svg.find("A &amp; B &lt;test&gt;"), std::string::npos);
  }
  std::string why;
  EXPECT_FALSE(WellFormedXml("<svg><g></svg>", &why));
  EXPECT_FALSE(WellFormedXml("<svg>a < b</svg>", &why));
}

}  // namespace
