#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "sidb/bundle.hpp"
#include "sidb/runner.hpp"

namespace sidb {

/// AOR arithmetic (+ - * / and their compound forms), ROR relational,
/// LOR and/or, CRP integer literal c -> c+1, BNF True/False.
enum class MutationOperator { kAOR, kROR, kLOR, kCRP, kBNF };

std::string_view to_string(MutationOperator op);
std::string_view describe(MutationOperator op);
MutationOperator parse_mutation_operator(std::string_view tag);
/// Comma-separated tags, e.g. "AOR,ROR". Empty text gives an empty list.
std::vector<MutationOperator> parse_mutation_operators(std::string_view list);

struct Mutant {
  std::string id;  // "m001", numbered in source order over the full enumeration
  MutationOperator op = MutationOperator::kAOR;
  std::string file;
  int line = 0;
  int column = 0;
  std::size_t offset = 0;
  std::string original_lexeme;
  std::string mutated_lexeme;
  SourceFile mutated_source;
};

/// One mutant per (token occurrence, canonical replacement), in source order.
/// With `limit`, a seed-deterministic uniform sample of that size (still in
/// source order). Throws E_UNLEXABLE_SOURCE.
std::vector<Mutant> generate_mutants(const SourceFile& source, std::span<const MutationOperator> operators,
                                     std::optional<std::size_t> limit = std::nullopt, std::uint64_t seed = 0);

/// Swaps the mutated lexeme back at (line, column); yields the original bytes.
std::string revert_mutant(const Mutant& m);

inline constexpr double kDefaultStrengthThreshold = 0.8;

struct SuiteAssessment {
  std::size_t mutants_total = 0;
  std::vector<std::string> test_ids;
  std::map<std::string, std::set<std::string>> kill_matrix;  // mutant id -> killing tests
  std::size_t killed_count = 0;
  double mutation_score = 0;
  double threshold = kDefaultStrengthThreshold;
  bool strong = false;
  std::map<std::string, std::size_t> kills_per_test;
};

struct AssessOptions {
  double threshold = kDefaultStrengthThreshold;
  int parallelism = 1;  // concurrent mutant evaluations
};

/// Runs the bundle's suite on the reference and on every mutant. A mutant is
/// killed when some test degrades from passed to any failing status.
/// Throws E_NO_MUTANTS.
SuiteAssessment assess_suite(const AssignmentBundle& bundle, std::span<const Mutant> mutants,
                             const Runner& runner, const AssessOptions& options = {});

/// Re-runs each recorded killing test on its mutant; returns one line per kill
/// that did not reproduce (empty when every kill is witnessed).
std::vector<std::string> verify_kills(const SuiteAssessment& assessment, std::span<const Mutant> mutants,
                                      const AssignmentBundle& bundle, const Runner& runner);

json to_json(const Mutant& m);
json to_json(const SuiteAssessment& a, std::span<const Mutant> mutants);
std::string format_table(const SuiteAssessment& a, std::span<const Mutant> mutants);

}  // namespace sidb
