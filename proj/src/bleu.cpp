#include "slu/bleu.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "slu/error.hpp"

namespace slu {

namespace {

std::map<std::string, int> ngram_counts(const std::vector<std::string>& tokens, size_t n) {
  std::map<std::string, int> counts;
  if (tokens.size() < n) return counts;
  for (size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key;
    for (size_t j = 0; j < n; ++j) {
      key += tokens[i + j];
      key += '\x1f';
    }
    ++counts[key];
  }
  return counts;
}

}  // namespace

double bleu(const std::vector<std::string>& candidate, const std::vector<std::string>& reference) {
  require(!reference.empty(), "bleu: empty reference");
  if (candidate.empty()) return 0.0;

  size_t max_n = std::min<size_t>(4, candidate.size());
  double log_precision = 0.0;
  for (size_t n = 1; n <= max_n; ++n) {
    auto cand = ngram_counts(candidate, n);
    auto ref = ngram_counts(reference, n);
    int total = 0;
    int clipped = 0;
    for (const auto& [gram, count] : cand) {
      total += count;
      auto it = ref.find(gram);
      if (it != ref.end()) clipped += std::min(count, it->second);
    }
    if (clipped == 0) return 0.0;
    log_precision += std::log(static_cast<double>(clipped) / static_cast<double>(total));
  }

  double bp = 1.0;
  if (candidate.size() < reference.size()) {
    bp = std::exp(1.0 - static_cast<double>(reference.size()) / static_cast<double>(candidate.size()));
  }
  return bp * std::exp(log_precision / static_cast<double>(max_n));
}

}  // namespace slu
