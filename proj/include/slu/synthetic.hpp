#pragma once

#include <cstdint>
#include <utility>

#include "slu/corpus.hpp"

namespace slu {

// Built-in travel-domain grammar: 3 intents, 7 slot labels, 14 sentence
// templates per intent. The last `holdout_templates` templates of each
// intent are used only for test generation, so the test set contains
// sentence frames never seen in training while every (intent, slot-label
// multiset) group key still occurs in training. Deterministic per seed.
std::pair<Corpus, Corpus> gen_synthetic(uint64_t grammar_seed, size_t n_train, size_t n_test,
                                        int holdout_templates);

}  // namespace slu
