#include <gtest/gtest.h>

#include <random>

#include "sidb/error.hpp"
#include "sidb/sbfl.hpp"
#include "test_support.hpp"

using namespace sidb;
using namespace sidb::testing;

namespace {

TestResult result(const std::string& id, TestStatus st, std::set<int> lines) {
  TestResult r;
  r.test_id = id;
  r.status = st;
  if (st != TestStatus::kPassed) r.failure_kind = FailureKind::kException;
  r.covered_lines["solution.py"] = std::move(lines);
  return r;
}

// Three passing tests and one errored test over the average-grades function.
TestRunReport listing_report() {
  TestRunReport r;
  r.results = {result("t1", TestStatus::kPassed, {5, 6, 7, 8, 9}), result("t2", TestStatus::kPassed, {5, 6, 7, 8, 9}),
               result("t3", TestStatus::kPassed, {5, 6, 7, 8, 9}), result("t4", TestStatus::kErrored, {5, 6, 7})};
  std::vector<TraceEvent> trace;
  long seq = 0;
  for (int line : {5, 6, 7, 6, 7, 6, 7, 6, 7}) trace.push_back({"solution.py", line, seq++, {}});
  r.results[3].trace = trace;
  return r;
}

}  // namespace

TEST(Spectrum, CountsPerLine) {
  auto s = build_spectrum(listing_report());
  EXPECT_EQ(s.failing, 1);
  EXPECT_EQ(s.passing, 3);
  EXPECT_EQ((s.lines.at({"solution.py", 7})), (LineCounts{1, 3}));
  EXPECT_EQ((s.lines.at({"solution.py", 9})), (LineCounts{0, 3}));
}

TEST(Spectrum, AllPassingIsAnError) {
  TestRunReport r;
  r.results = {result("t1", TestStatus::kPassed, {1})};
  try {
    build_spectrum(r);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoFailures);
  }
}

TEST(Spectrum, TimeoutCountsAsFailing) {
  TestRunReport r;
  r.results = {result("t1", TestStatus::kTimeout, {1, 2}), result("t2", TestStatus::kPassed, {1})};
  auto s = build_spectrum(r);
  EXPECT_EQ(s.failing, 1);
  EXPECT_EQ((s.lines.at({"solution.py", 2})), (LineCounts{1, 0}));
}

TEST(Formulas, HandComputedValues) {
  // ef=1, ep=3, F=1, P=3
  EXPECT_DOUBLE_EQ(score_line(Formula::kOchiai, 1, 3, 1, 3), 0.5);
  EXPECT_DOUBLE_EQ(score_line(Formula::kTarantula, 1, 3, 1, 3), 0.5);
  EXPECT_DOUBLE_EQ(score_line(Formula::kDStar2, 1, 3, 1, 3), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(score_line(Formula::kOp2, 1, 3, 1, 3), 1.0 - 3.0 / 4.0);
  // ef=2, ep=0, F=2, P=4
  EXPECT_DOUBLE_EQ(score_line(Formula::kOchiai, 2, 0, 2, 4), 1.0);
  EXPECT_DOUBLE_EQ(score_line(Formula::kTarantula, 2, 0, 2, 4), 1.0);
  EXPECT_EQ(score_line(Formula::kDStar2, 2, 0, 2, 4), kMaxScore);
  EXPECT_DOUBLE_EQ(score_line(Formula::kOp2, 2, 0, 2, 4), 2.0);
}

TEST(Formulas, ZeroWhenNoFailingTestCoversTheLine) {
  for (auto f : {Formula::kOchiai, Formula::kTarantula, Formula::kDStar2, Formula::kOp2}) {
    EXPECT_EQ(score_line(f, 0, 3, 1, 3), 0.0) << to_string(f);
    EXPECT_EQ(score_line(f, 0, 0, 2, 0), 0.0) << to_string(f);
  }
}

TEST(Formulas, ParseNames) {
  EXPECT_EQ(parse_formula("ochiai"), Formula::kOchiai);
  EXPECT_EQ(parse_formula("dstar2"), Formula::kDStar2);
  EXPECT_THROW(parse_formula("jaccard"), Error);
}

TEST(Formulas, MatchNaiveOracleOnRandomSpectra) {
  std::mt19937_64 rng(7);
  for (int iter = 0; iter < 100; ++iter) {
    auto spec = build_spectrum(random_report(rng));
    for (const auto& [where, c] : spec.lines) {
      NaiveCounts n{double(c.ef), double(c.ep), double(spec.failing - c.ef), double(spec.passing - c.ep)};
      EXPECT_NEAR(score_line(Formula::kOchiai, c.ef, c.ep, spec.failing, spec.passing), naive_ochiai(n), 1e-12);
      EXPECT_NEAR(score_line(Formula::kTarantula, c.ef, c.ep, spec.failing, spec.passing), naive_tarantula(n), 1e-12);
      EXPECT_NEAR(score_line(Formula::kOp2, c.ef, c.ep, spec.failing, spec.passing), naive_op2(n), 1e-12);
      double d = score_line(Formula::kDStar2, c.ef, c.ep, spec.failing, spec.passing);
      if (d == kMaxScore) {
        EXPECT_EQ(naive_dstar2(n), kMaxScore);
      } else {
        EXPECT_NEAR(d, naive_dstar2(n), 1e-12);
      }
    }
  }
}

TEST(Formulas, ScoresAreNonNegative) {
  for (int F = 1; F <= 4; ++F) {
    for (int P = 0; P <= 4; ++P) {
      for (int ef = 0; ef <= F; ++ef) {
        for (int ep = 0; ep <= P; ++ep) {
          for (auto f : {Formula::kOchiai, Formula::kTarantula, Formula::kDStar2, Formula::kOp2}) {
            EXPECT_GE(score_line(f, ef, ep, F, P), 0.0);
          }
        }
      }
    }
  }
}

TEST(Ranking, ListingLineSevenFirstThenSixThenFive) {
  auto report = listing_report();
  auto scores = suspiciousness(build_spectrum(report), Formula::kOchiai);
  auto ranked = rank(scores, report.results[3].trace, 10);
  ASSERT_EQ(ranked.lines.size(), 5u);
  EXPECT_EQ(ranked.lines[0].where.line, 7);
  EXPECT_EQ(ranked.lines[1].where.line, 6);
  EXPECT_EQ(ranked.lines[2].where.line, 5);
  // Competition ranking: tied scores share a rank, the next rank skips.
  EXPECT_EQ(ranked.lines[0].rank, 1);
  EXPECT_EQ(ranked.lines[2].rank, 1);
  EXPECT_EQ(ranked.lines[3].rank, 4);
  EXPECT_EQ(ranked.lines[3].where.line, 9);  // untraced tie: larger line first
}

TEST(Ranking, TopKTruncates) {
  auto report = listing_report();
  auto ranked = rank(suspiciousness(build_spectrum(report), Formula::kOchiai), report.results[3].trace, 2);
  ASSERT_EQ(ranked.lines.size(), 2u);
  EXPECT_EQ(ranked.lines[1].where.line, 6);
}

TEST(Ranking, WithoutTraceFallsBackToLineNumber) {
  auto report = listing_report();
  auto ranked = rank(suspiciousness(build_spectrum(report), Formula::kOchiai), std::nullopt, 3);
  EXPECT_EQ(ranked.lines[0].where.line, 7);
  EXPECT_EQ(ranked.lines[1].where.line, 6);
}

TEST(Ranking, SortedByScoreOnRandomSpectra) {
  std::mt19937_64 rng(11);
  for (int iter = 0; iter < 200; ++iter) {
    auto spec = build_spectrum(random_report(rng));
    auto ranked = rank(suspiciousness(spec, Formula::kTarantula), std::nullopt, 1000);
    ASSERT_EQ(ranked.lines.size(), spec.lines.size());
    for (std::size_t i = 1; i < ranked.lines.size(); ++i) {
      EXPECT_GE(ranked.lines[i - 1].score, ranked.lines[i].score);
      EXPECT_LE(ranked.lines[i - 1].rank, ranked.lines[i].rank);
      if (ranked.lines[i - 1].score == ranked.lines[i].score) {
        EXPECT_EQ(ranked.lines[i - 1].rank, ranked.lines[i].rank);
      } else {
        EXPECT_EQ(ranked.lines[i].rank, static_cast<int>(i) + 1);
      }
    }
  }
}

TEST(Ranking, JsonRoundTrip) {
  auto report = listing_report();
  auto ranked = rank(suspiciousness(build_spectrum(report), Formula::kDStar2), report.results[3].trace, 10);
  auto j = to_json(ranked);
  EXPECT_EQ(j.at("schema"), "sidb.scores.v1");
  EXPECT_EQ(ranked_lines_from_json(json::parse(j.dump())), ranked);
}

TEST(Ranking, TableMentionsFormulaAndLines) {
  auto report = listing_report();
  auto table = format_table(rank(suspiciousness(build_spectrum(report), Formula::kOchiai), report.results[3].trace, 3));
  EXPECT_NE(table.find("ochiai"), std::string::npos);
  EXPECT_NE(table.find("solution.py:7"), std::string::npos);
}
