#include "sidb/sbfl.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "sidb/error.hpp"

namespace sidb {

std::string_view to_string(Formula f) {
  switch (f) {
    case Formula::kOchiai: return "ochiai";
    case Formula::kTarantula: return "tarantula";
    case Formula::kDStar2: return "dstar2";
    case Formula::kOp2: return "op2";
  }
  return "ochiai";
}

Formula parse_formula(std::string_view text) {
  if (text == "ochiai") return Formula::kOchiai;
  if (text == "tarantula") return Formula::kTarantula;
  if (text == "dstar2" || text == "dstar") return Formula::kDStar2;
  if (text == "op2") return Formula::kOp2;
  throw Error(ErrorCode::kInvalidArgument, "unknown formula '" + std::string(text) + "'", "formula");
}

CoverageSpectrum build_spectrum(const TestRunReport& report) {
  CoverageSpectrum s;
  for (const auto& r : report.results) {
    bool failing = is_failing(r.status);
    (failing ? s.failing : s.passing) += 1;
    for (const auto& [file, lines] : r.covered_lines) {
      for (int ln : lines) {
        auto& c = s.lines[LineRef{file, ln}];
        (failing ? c.ef : c.ep) += 1;
      }
    }
  }
  if (s.failing == 0) throw Error(ErrorCode::kNoFailures, "every test passed; nothing to localize");
  return s;
}

double score_line(Formula f, int ef, int ep, int failing, int passing) {
  if (ef == 0) return 0.0;
  const double ef_d = ef, ep_d = ep;
  const double nf = failing - ef;
  switch (f) {
    case Formula::kOchiai: {
      double denom = std::sqrt(static_cast<double>(failing) * (ef_d + ep_d));
      return denom == 0.0 ? 0.0 : ef_d / denom;
    }
    case Formula::kTarantula: {
      double fail_ratio = failing == 0 ? 0.0 : ef_d / failing;
      double pass_ratio = passing == 0 ? 0.0 : ep_d / passing;
      double denom = fail_ratio + pass_ratio;
      return denom == 0.0 ? 0.0 : fail_ratio / denom;
    }
    case Formula::kDStar2: {
      double denom = ep_d + nf;
      return denom == 0.0 ? kMaxScore : (ef_d * ef_d) / denom;
    }
    case Formula::kOp2:
      return ef_d - ep_d / (passing + 1.0);
  }
  return 0.0;
}

ScoreMap suspiciousness(const CoverageSpectrum& spectrum, Formula formula) {
  if (spectrum.failing < 1) throw Error(ErrorCode::kNoFailures, "spectrum has no failing test");
  ScoreMap out;
  out.formula = formula;
  for (const auto& [where, c] : spectrum.lines) {
    out.scores[where] = score_line(formula, c.ef, c.ep, spectrum.failing, spectrum.passing);
  }
  return out;
}

RankedLines rank(const ScoreMap& scores, const std::optional<std::vector<TraceEvent>>& failing_trace,
                 std::size_t k) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1", "k");
  // Distance from the end of the failing trace to each line's last execution.
  std::map<LineRef, std::size_t> distance;
  if (failing_trace && !failing_trace->empty()) {
    const auto& t = *failing_trace;
    for (std::size_t i = 0; i < t.size(); ++i) distance[LineRef{t[i].file, t[i].line}] = t.size() - 1 - i;
  }
  auto dist = [&](const LineRef& l) {
    auto it = distance.find(l);
    return it == distance.end() ? std::numeric_limits<std::size_t>::max() : it->second;
  };

  std::vector<RankedLine> all;
  all.reserve(scores.scores.size());
  for (const auto& [where, s] : scores.scores) all.push_back({where, s, 0});
  std::sort(all.begin(), all.end(), [&](const RankedLine& a, const RankedLine& b) {
    if (a.score != b.score) return a.score > b.score;
    auto da = dist(a.where), db = dist(b.where);
    if (da != db) return da < db;
    if (a.where.line != b.where.line) return a.where.line > b.where.line;
    return a.where.file < b.where.file;
  });
  for (std::size_t i = 0; i < all.size(); ++i) {
    all[i].rank = (i > 0 && all[i].score == all[i - 1].score) ? all[i - 1].rank : static_cast<int>(i) + 1;
  }
  if (all.size() > k) all.resize(k);
  return RankedLines{std::move(all), scores.formula};
}

json to_json(const ScoreMap& s) {
  json arr = json::array();
  for (const auto& [where, score] : s.scores) {
    arr.push_back({{"file", where.file}, {"line", where.line}, {"score", score}});
  }
  return json{{"schema", "sidb.scores.v1"}, {"formula", to_string(s.formula)}, {"scores", arr}};
}

json to_json(const RankedLines& r) {
  json arr = json::array();
  for (const auto& l : r.lines) {
    arr.push_back({{"file", l.where.file}, {"line", l.where.line}, {"score", l.score}, {"rank", l.rank}});
  }
  return json{{"schema", "sidb.scores.v1"}, {"formula", to_string(r.formula)}, {"ranked", arr}};
}

RankedLines ranked_lines_from_json(const json& j) {
  RankedLines r;
  r.formula = parse_formula(j.at("formula").get<std::string>());
  for (const auto& l : j.at("ranked")) {
    r.lines.push_back({LineRef{l.at("file").get<std::string>(), l.at("line").get<int>()},
                       l.at("score").get<double>(), l.at("rank").get<int>()});
  }
  return r;
}

std::string format_table(const RankedLines& r) {
  std::ostringstream out;
  out << "rank  file:line            score (" << to_string(r.formula) << ")\n";
  for (const auto& l : r.lines) {
    std::ostringstream loc;
    loc << l.where.file << ":" << l.where.line;
    out << std::left << std::setw(6) << l.rank << std::setw(21) << loc.str();
    if (l.score == kMaxScore) {
      out << "max";
    } else {
      out << std::fixed << std::setprecision(4) << l.score;
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace sidb
