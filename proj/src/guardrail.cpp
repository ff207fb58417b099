#include "sidb/guardrail.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "sidb/lexer.hpp"

namespace sidb {

namespace {

// Reference-only lines this long are also caught when embedded in prose.
constexpr std::size_t kEmbeddedMatchTokens = 4;

bool is_fence(std::string_view line) { return trim(line).rfind("```", 0) == 0; }

std::size_t overlap(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::map<std::string_view, int> counts;
  for (const auto& t : a) ++counts[t];
  std::size_t n = 0;
  for (const auto& t : b) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++n;
    }
  }
  return n;
}

bool contains_run(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > hay.size()) return false;
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

}  // namespace

std::string_view to_string(RedactionKind k) {
  return k == RedactionKind::kVerbatimPatchLine ? "verbatim_patch_line" : "high_similarity_block";
}

std::vector<std::vector<std::string>> reference_diff_region(const SourceFile& reference,
                                                            const SourceFile& submission) {
  std::set<std::string> have;
  for (const auto& l : submission.lines()) have.insert(normalize_line(l));
  std::vector<std::vector<std::string>> region;
  std::set<std::string> seen;
  for (const auto& l : reference.lines()) {
    auto norm = normalize_line(l);
    if (norm.empty() || have.count(norm) || !seen.insert(norm).second) continue;
    region.push_back(line_tokens(l));
  }
  return region;
}

Similarity block_similarity(const std::vector<std::string>& block_lines,
                            const std::vector<std::vector<std::string>>& diff_region) {
  std::vector<std::vector<std::string>> block;
  for (const auto& l : block_lines) {
    auto toks = line_tokens(l);
    if (!toks.empty()) block.push_back(std::move(toks));
  }
  Similarity s;
  for (const auto& ref : diff_region) {
    s.total += ref.size();
    std::size_t best = 0;
    for (const auto& b : block) best = std::max(best, overlap(ref, b));
    s.matched += best;
  }
  return s;
}

GuardrailResult guardrail_filter(std::string_view llm_output, const SourceFile& reference,
                                 const SourceFile& submission) {
  auto region = reference_diff_region(reference, submission);
  std::set<std::vector<std::string>> region_set(region.begin(), region.end());

  auto restates_reference = [&](std::string_view line) {
    auto toks = line_tokens(line);
    if (toks.empty()) return false;
    if (region_set.count(toks)) return true;
    return std::any_of(region.begin(), region.end(), [&](const std::vector<std::string>& r) {
      return r.size() >= kEmbeddedMatchTokens && contains_run(toks, r);
    });
  };

  auto lines = split_lines(llm_output);
  GuardrailResult out;
  std::vector<std::string> kept;
  auto redact_line = [&](std::size_t i) {
    kept.emplace_back(kRedactionText);
    out.report.redactions.push_back({RedactionKind::kVerbatimPatchLine, static_cast<int>(i + 1),
                                     static_cast<int>(i + 1), std::string(kRedactionText)});
  };

  std::size_t i = 0;
  while (i < lines.size()) {
    if (!is_fence(lines[i])) {
      if (restates_reference(lines[i])) {
        redact_line(i);
      } else {
        kept.push_back(lines[i]);
      }
      ++i;
      continue;
    }
    std::size_t end = i + 1;
    while (end < lines.size() && !is_fence(lines[end])) ++end;
    std::size_t close = std::min(end, lines.size() - 1);
    std::vector<std::string> body(lines.begin() + static_cast<long>(i + 1), lines.begin() + static_cast<long>(end));
    if (block_similarity(body, region).at_least_threshold()) {
      kept.emplace_back(kRedactionText);
      out.report.redactions.push_back({RedactionKind::kHighSimilarityBlock, static_cast<int>(i + 1),
                                       static_cast<int>(close + 1), std::string(kRedactionText)});
    } else {
      kept.push_back(lines[i]);
      for (std::size_t k = i + 1; k < end; ++k) {
        if (restates_reference(lines[k])) {
          redact_line(k);
        } else {
          kept.push_back(lines[k]);
        }
      }
      if (end < lines.size()) kept.push_back(lines[end]);
    }
    i = end + 1;
  }

  for (std::size_t k = 0; k < kept.size(); ++k) {
    if (k > 0) out.text += '\n';
    out.text += kept[k];
  }
  if (!llm_output.empty() && llm_output.back() == '\n') out.text += '\n';
  out.report.passed = out.report.redactions.empty();
  return out;
}

}  // namespace sidb
