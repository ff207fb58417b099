#include "sidb/mutation.hpp"

#include <algorithm>
#include <cctype>
#include <future>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include "sidb/error.hpp"
#include "sidb/lexer.hpp"

namespace sidb {

std::string_view to_string(MutationOperator op) {
  switch (op) {
    case MutationOperator::kAOR: return "AOR";
    case MutationOperator::kROR: return "ROR";
    case MutationOperator::kLOR: return "LOR";
    case MutationOperator::kCRP: return "CRP";
    case MutationOperator::kBNF: return "BNF";
  }
  return "AOR";
}

std::string_view describe(MutationOperator op) {
  switch (op) {
    case MutationOperator::kAOR: return "arithmetic operator replacement";
    case MutationOperator::kROR: return "relational operator replacement";
    case MutationOperator::kLOR: return "logical connective swap";
    case MutationOperator::kCRP: return "integer constant replacement (c -> c+1)";
    case MutationOperator::kBNF: return "boolean literal flip";
  }
  return "";
}

MutationOperator parse_mutation_operator(std::string_view tag) {
  for (auto op : {MutationOperator::kAOR, MutationOperator::kROR, MutationOperator::kLOR, MutationOperator::kCRP,
                  MutationOperator::kBNF}) {
    auto name = to_string(op);
    if (name.size() == tag.size() &&
        std::equal(name.begin(), name.end(), tag.begin(), [](char a, char b) { return a == std::toupper(static_cast<unsigned char>(b)); })) {
      return op;
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown mutation operator '" + std::string(tag) + "'", "operators");
}

std::vector<MutationOperator> parse_mutation_operators(std::string_view list) {
  std::vector<MutationOperator> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    auto comma = list.find(',', start);
    auto part = trim(list.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!part.empty()) out.push_back(parse_mutation_operator(part));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

namespace {

std::optional<std::string> aor(const std::string& t) {
  static const std::map<std::string, std::string> swap = {
      {"+", "-"}, {"-", "+"}, {"*", "/"}, {"/", "*"}, {"+=", "-="}, {"-=", "+="}, {"*=", "/="}, {"/=", "*="}};
  auto it = swap.find(t);
  if (it == swap.end()) return std::nullopt;
  return it->second;
}

std::optional<std::string> ror(const std::string& t) {
  static const std::map<std::string, std::string> swap = {{"<", "<="}, {"<=", "<"}, {">", ">="},
                                                          {">=", ">"}, {"==", "!="}, {"!=", "=="}};
  auto it = swap.find(t);
  if (it == swap.end()) return std::nullopt;
  return it->second;
}

std::string increment_decimal(const std::string& lexeme) {
  std::string digits;
  for (char c : lexeme) {
    if (c != '_') digits.push_back(c);
  }
  int i = static_cast<int>(digits.size()) - 1;
  while (i >= 0 && digits[i] == '9') digits[i--] = '0';
  if (i < 0) {
    digits.insert(digits.begin(), '1');
  } else {
    ++digits[i];
  }
  return digits;
}

// Star after an opening bracket or comma is unpacking, not multiplication.
bool is_unpacking_star(const std::vector<Token>& toks, std::size_t i) {
  if (i == 0) return true;
  const auto& prev = toks[i - 1];
  if (prev.line != toks[i].line) return true;
  return prev.kind == TokenKind::kOperator &&
         (prev.text == "(" || prev.text == "[" || prev.text == "{" || prev.text == ",");
}

std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

}  // namespace

std::vector<Mutant> generate_mutants(const SourceFile& source, std::span<const MutationOperator> operators,
                                     std::optional<std::size_t> limit, std::uint64_t seed) {
  auto toks = scan_tokens(source.content, true);
  std::set<MutationOperator> ops(operators.begin(), operators.end());
  std::vector<Mutant> out;
  if (ops.empty()) return out;

  for (std::size_t i = 0; i < toks.size(); ++i) {
    const auto& t = toks[i];
    std::optional<std::string> repl;
    MutationOperator op{};
    if (t.kind == TokenKind::kOperator) {
      if (ops.count(MutationOperator::kAOR) && (repl = aor(t.text))) {
        if (t.text == "*" && is_unpacking_star(toks, i)) repl.reset();
        op = MutationOperator::kAOR;
      }
      if (!repl && ops.count(MutationOperator::kROR) && (repl = ror(t.text))) op = MutationOperator::kROR;
    } else if (t.kind == TokenKind::kName) {
      if (ops.count(MutationOperator::kLOR) && (t.text == "and" || t.text == "or")) {
        repl = t.text == "and" ? "or" : "and";
        op = MutationOperator::kLOR;
      } else if (ops.count(MutationOperator::kBNF) && (t.text == "True" || t.text == "False")) {
        repl = t.text == "True" ? "False" : "True";
        op = MutationOperator::kBNF;
      }
    } else if (t.kind == TokenKind::kNumber && t.decimal_int && ops.count(MutationOperator::kCRP)) {
      repl = increment_decimal(t.text);
      op = MutationOperator::kCRP;
    }
    if (!repl) continue;

    Mutant m;
    m.op = op;
    m.file = source.path;
    m.line = t.line;
    m.column = t.column;
    m.offset = t.offset;
    m.original_lexeme = t.text;
    m.mutated_lexeme = *repl;
    m.mutated_source.path = source.path;
    m.mutated_source.content = source.content;
    m.mutated_source.content.replace(t.offset, t.text.size(), *repl);
    out.push_back(std::move(m));
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::ostringstream id;
    id << 'm' << std::setw(3) << std::setfill('0') << (i + 1);
    out[i].id = id.str();
  }

  if (limit && *limit < out.size()) {
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> idx(out.size());
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < *limit; ++i) {
      auto j = i + bounded(rng, idx.size() - i);
      std::swap(idx[i], idx[j]);
    }
    idx.resize(*limit);
    std::sort(idx.begin(), idx.end());
    std::vector<Mutant> sample;
    sample.reserve(idx.size());
    for (auto k : idx) sample.push_back(std::move(out[k]));
    out = std::move(sample);
  }
  return out;
}

std::string revert_mutant(const Mutant& m) {
  const auto& text = m.mutated_source.content;
  std::size_t pos = 0;
  for (int line = 1; line < m.line; ++line) {
    pos = text.find('\n', pos);
    if (pos == std::string::npos) throw Error(ErrorCode::kInvalidArgument, "mutant line out of range", m.id);
    ++pos;
  }
  pos += static_cast<std::size_t>(m.column - 1);
  if (text.compare(pos, m.mutated_lexeme.size(), m.mutated_lexeme) != 0) {
    throw Error(ErrorCode::kInvalidArgument, "mutated lexeme not found at recorded position", m.id);
  }
  std::string out = text;
  out.replace(pos, m.mutated_lexeme.size(), m.original_lexeme);
  return out;
}

SuiteAssessment assess_suite(const AssignmentBundle& bundle, std::span<const Mutant> mutants, const Runner& runner,
                             const AssessOptions& options) {
  if (mutants.empty()) throw Error(ErrorCode::kNoMutants, "no mutants to assess against");
  auto baseline = runner.run_tests(bundle.reference_source, bundle.tests, TargetLabel::reference());

  auto evaluate = [&](const Mutant& m) {
    auto rep = runner.run_tests(m.mutated_source, bundle.tests, TargetLabel::mutant(m.id));
    std::set<std::string> killers;
    for (const auto& change : diff_outcomes(baseline, rep)) {
      if (change.a == TestStatus::kPassed && is_failing(change.b)) killers.insert(change.test_id);
    }
    return killers;
  };

  std::vector<std::set<std::string>> kills(mutants.size());
  if (options.parallelism <= 1) {
    for (std::size_t i = 0; i < mutants.size(); ++i) kills[i] = evaluate(mutants[i]);
  } else {
    std::size_t i = 0;
    while (i < mutants.size()) {
      std::vector<std::pair<std::size_t, std::future<std::set<std::string>>>> wave;
      for (int w = 0; w < options.parallelism && i < mutants.size(); ++w, ++i) {
        wave.emplace_back(i, std::async(std::launch::async, evaluate, std::cref(mutants[i])));
      }
      for (auto& [k, f] : wave) kills[k] = f.get();
    }
  }

  SuiteAssessment a;
  a.mutants_total = mutants.size();
  a.threshold = options.threshold;
  for (const auto& t : bundle.tests) {
    a.test_ids.push_back(t.id);
    a.kills_per_test[t.id] = 0;
  }
  for (std::size_t i = 0; i < mutants.size(); ++i) {
    a.kill_matrix[mutants[i].id] = kills[i];
    if (!kills[i].empty()) ++a.killed_count;
    for (const auto& t : kills[i]) ++a.kills_per_test[t];
  }
  a.mutation_score = static_cast<double>(a.killed_count) / static_cast<double>(a.mutants_total);
  a.strong = a.mutation_score >= a.threshold;
  return a;
}

std::vector<std::string> verify_kills(const SuiteAssessment& assessment, std::span<const Mutant> mutants,
                                      const AssignmentBundle& bundle, const Runner& runner) {
  std::vector<std::string> problems;
  for (const auto& m : mutants) {
    auto it = assessment.kill_matrix.find(m.id);
    if (it == assessment.kill_matrix.end()) continue;
    for (const auto& test_id : it->second) {
      const auto* t = bundle.find_test(test_id);
      if (t == nullptr) {
        problems.push_back(m.id + ": unknown killing test " + test_id);
        continue;
      }
      auto r = runner.run_one(m.mutated_source, *t);
      if (!is_failing(r.status)) problems.push_back(m.id + ": test " + test_id + " passes on re-run");
    }
  }
  return problems;
}

json to_json(const Mutant& m) {
  return json{{"id", m.id},           {"operator", to_string(m.op)}, {"file", m.file},
              {"line", m.line},       {"column", m.column},          {"original", m.original_lexeme},
              {"mutated", m.mutated_lexeme}};
}

json to_json(const SuiteAssessment& a, std::span<const Mutant> mutants) {
  json ms = json::array();
  for (const auto& m : mutants) {
    auto j = to_json(m);
    auto it = a.kill_matrix.find(m.id);
    std::vector<std::string> killers;
    if (it != a.kill_matrix.end()) killers.assign(it->second.begin(), it->second.end());
    j["killed_by"] = killers;
    j["killed"] = !killers.empty();
    ms.push_back(std::move(j));
  }
  json matrix = json::object();
  for (const auto& [id, tests] : a.kill_matrix) matrix[id] = std::vector<std::string>(tests.begin(), tests.end());
  return json{{"schema", "sidb.assess.v1"},
              {"mutants_total", a.mutants_total},
              {"killed", a.killed_count},
              {"mutation_score", a.mutation_score},
              {"threshold", a.threshold},
              {"verdict", a.strong ? "strong" : "weak"},
              {"tests", a.test_ids},
              {"kills_per_test", a.kills_per_test},
              {"kill_matrix", matrix},
              {"mutants", ms},
              {"note", "equivalent mutants are not detected; the score counts every generated mutant"}};
}

std::string format_table(const SuiteAssessment& a, std::span<const Mutant> mutants) {
  std::ostringstream out;
  out << "mutant  op   line:col  change        killed by\n";
  for (const auto& m : mutants) {
    std::ostringstream pos, change;
    pos << m.line << ":" << m.column;
    change << m.original_lexeme << " -> " << m.mutated_lexeme;
    out << std::left << std::setw(8) << m.id << std::setw(5) << to_string(m.op) << std::setw(10) << pos.str()
        << std::setw(14) << change.str();
    auto it = a.kill_matrix.find(m.id);
    if (it == a.kill_matrix.end() || it->second.empty()) {
      out << "(survived)";
    } else {
      bool first = true;
      for (const auto& t : it->second) {
        out << (first ? "" : ",") << t;
        first = false;
      }
    }
    out << "\n";
  }
  out << "score " << std::fixed << std::setprecision(3) << a.mutation_score << " (" << a.killed_count << "/"
      << a.mutants_total << "), verdict " << (a.strong ? "strong" : "weak") << " at threshold " << a.threshold
      << "\n";
  return out.str();
}

}  // namespace sidb
