#pragma once

#include <compare>
#include <string>
#include <vector>

namespace slu {

// Fraction of exact intent matches.
double intent_accuracy(const std::vector<std::string>& pred, const std::vector<std::string>& gold);

struct TagSpan {
  size_t utt;
  size_t start;  // inclusive
  size_t end;    // inclusive
  std::string label;

  auto operator<=>(const TagSpan&) const = default;
};

// Span decoding: B-/I- prefixed tags follow the usual BIO reading (an I- tag
// that does not continue a span opens one); bare labels form maximal
// equal-label runs. "O" is outside.
std::vector<TagSpan> decode_spans(const std::vector<std::string>& tags, size_t utt_index = 0);

// Micro-averaged span F1 over exactly matching (utterance, start, end,
// label) spans; 0/0 counts as 0.
double slot_f1(const std::vector<std::vector<std::string>>& pred,
               const std::vector<std::vector<std::string>>& gold);

}  // namespace slu
