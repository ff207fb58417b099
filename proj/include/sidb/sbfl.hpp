#pragma once

#include <compare>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sidb/runner.hpp"

namespace sidb {

struct LineRef {
  std::string file;
  int line = 0;

  auto operator<=>(const LineRef&) const = default;
};

struct LineCounts {
  int ef = 0;  // failing tests covering the line
  int ep = 0;  // passing tests covering the line

  bool operator==(const LineCounts&) const = default;
};

/// Per-line coverage counts. nf = F - ef and np = P - ep are derived.
struct CoverageSpectrum {
  std::map<LineRef, LineCounts> lines;
  int failing = 0;  // F
  int passing = 0;  // P

  bool operator==(const CoverageSpectrum&) const = default;
};

enum class Formula { kOchiai, kTarantula, kDStar2, kOp2 };

std::string_view to_string(Formula f);
Formula parse_formula(std::string_view text);

/// Stands in for DStar2's division by zero; orders above every finite score.
inline constexpr double kMaxScore = std::numeric_limits<double>::max();

struct ScoreMap {
  std::map<LineRef, double> scores;
  Formula formula = Formula::kOchiai;
};

struct RankedLine {
  LineRef where;
  double score = 0;
  int rank = 0;

  bool operator==(const RankedLine&) const = default;
};

struct RankedLines {
  std::vector<RankedLine> lines;
  Formula formula = Formula::kOchiai;

  bool operator==(const RankedLines&) const = default;
};

/// Throws E_NO_FAILURES when every test passed.
CoverageSpectrum build_spectrum(const TestRunReport& report);

/// The four suspiciousness formulas over one line's counts. Zero conventions:
/// any formula is 0 when ef = 0; Ochiai/Tarantula are 0 on a zero
/// denominator; DStar2 saturates at kMaxScore.
double score_line(Formula f, int ef, int ep, int failing, int passing);

ScoreMap suspiciousness(const CoverageSpectrum& spectrum, Formula formula);

/// Top-k by score. Ties: the line whose last execution in `failing_trace` is
/// closest to the trace's end comes first, then the larger line number.
RankedLines rank(const ScoreMap& scores, const std::optional<std::vector<TraceEvent>>& failing_trace,
                 std::size_t k);

json to_json(const ScoreMap& s);
json to_json(const RankedLines& r);
RankedLines ranked_lines_from_json(const json& j);
/// Human-readable table for `--format table`.
std::string format_table(const RankedLines& r);

}  // namespace sidb
