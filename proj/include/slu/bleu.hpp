#pragma once

#include <string>
#include <vector>

namespace slu {

// Sentence BLEU with clipped n-gram precisions up to min(4, |candidate|),
// geometric mean, brevity penalty, no smoothing: any zero precision gives 0.
// Empty candidates score 0; the reference must be non-empty.
double bleu(const std::vector<std::string>& candidate, const std::vector<std::string>& reference);

}  // namespace slu
