#pragma once

#include <string>
#include <vector>

#include "slu/lm.hpp"
#include "slu/parser.hpp"

namespace slu {

// Paraphrase template: slot words (predicted tag != "O") and high-confidence
// context words are kept; the remaining context words become blanks for the
// constrained search to fill.
struct ParaphraseTemplate {
  struct Cell {
    bool keep;
    std::string token;  // empty for blanks
  };
  std::vector<std::string> original;
  std::vector<Cell> cells;

  size_t blank_count() const {
    size_t n = 0;
    for (const auto& c : cells) n += c.keep ? 0 : 1;
    return n;
  }
  std::string render() const;  // blanks printed as the reserved blank token
};

// Context words are blanked when their chosen-tag probability is not
// strictly above the mean chosen-tag probability over all context words.
ParaphraseTemplate build_template(const std::vector<std::string>& tokens, const Parse& parse);

struct Hypothesis {
  std::vector<std::string> tokens;
  double log_prob;  // sum of per-token log probabilities under the searched LM
};

// Beam search over the template cells in the LM's native direction: kept
// cells force-emit their token (scored as UNK when out of vocabulary), blank
// cells expand with the top-width non-reserved tokens, and at most `width`
// hypotheses survive each step. Results are sorted by descending score.
// Backward models search the reversed template; hypotheses come back
// un-reversed.
std::vector<Hypothesis> constrained_beam_search(const LanguageModel& lm,
                                                const ParaphraseTemplate& tpl, size_t width);

// Mean of the two per-token-normalized log-likelihoods.
double bidirectional_score(const LanguageModel& lf, const LanguageModel& lb,
                           const std::vector<std::string>& tokens);

// Union of forward and backward constrained searches, rescored
// bidirectionally; top-k by score, ties broken lexicographically.
std::vector<std::vector<std::string>> generate_rnn_paraphrases(const LanguageModel& lf,
                                                               const LanguageModel& lb,
                                                               const std::vector<std::string>& tokens,
                                                               const Parse& parse, size_t width,
                                                               size_t k);

}  // namespace slu
