#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "sidb/source.hpp"

namespace sidb {

inline constexpr std::string_view kRedactionText = "[redacted: try this step yourself]";

enum class RedactionKind { kVerbatimPatchLine, kHighSimilarityBlock };

std::string_view to_string(RedactionKind k);

struct Redaction {
  RedactionKind kind;
  int first_line = 0;  // 1-based span in the unfiltered output
  int last_line = 0;
  std::string replacement;
};

struct GuardrailReport {
  std::vector<Redaction> redactions;
  bool passed = true;
};

struct GuardrailResult {
  std::string text;
  GuardrailReport report;
};

/// Normalized token sequences of reference lines that the submission lacks:
/// the region a direct solution would have to reveal.
std::vector<std::vector<std::string>> reference_diff_region(const SourceFile& reference,
                                                            const SourceFile& submission);

struct Similarity {
  std::size_t matched = 0;
  std::size_t total = 0;

  double value() const { return total == 0 ? 0.0 : static_cast<double>(matched) / static_cast<double>(total); }
  /// matched/total >= 0.8, evaluated exactly.
  bool at_least_threshold() const { return total > 0 && matched * 5 >= total * 4; }
};

/// For each diff-region line, the best multiset token overlap with any block
/// line, summed and divided by the region's token count.
Similarity block_similarity(const std::vector<std::string>& block_lines,
                            const std::vector<std::vector<std::string>>& diff_region);

/// Redacts fenced code blocks that reproduce the reference diff region
/// (similarity >= 0.8) and individual lines that restate a reference-only
/// line.
GuardrailResult guardrail_filter(std::string_view llm_output, const SourceFile& reference,
                                 const SourceFile& submission);

}  // namespace sidb
