#include "slu/metrics.hpp"

#include <algorithm>

#include "slu/error.hpp"
#include "slu/paradata.hpp"

namespace slu {

double intent_accuracy(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
  require(pred.size() == gold.size(), "intent_accuracy: length mismatch (" + std::to_string(pred.size()) +
                                          " vs " + std::to_string(gold.size()) + ")");
  require(!pred.empty(), "intent_accuracy: empty input");
  size_t correct = 0;
  for (size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] == gold[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(pred.size());
}

std::vector<TagSpan> decode_spans(const std::vector<std::string>& tags, size_t utt_index) {
  enum class Kind { None, Bio, Bare };
  std::vector<TagSpan> spans;
  Kind open = Kind::None;
  size_t start = 0;
  std::string label;

  auto close = [&](size_t end_pos) {
    if (open != Kind::None) spans.push_back({utt_index, start, end_pos, label});
    open = Kind::None;
  };

  for (size_t i = 0; i < tags.size(); ++i) {
    const std::string& t = tags[i];
    if (is_context_tag(t)) {
      close(i - 1);
      continue;
    }
    bool bio = t.size() > 2 && (t[0] == 'B' || t[0] == 'I') && t[1] == '-';
    std::string bare = strip_bio(t);
    if (bio && t[0] == 'B') {
      close(i - 1);
      open = Kind::Bio;
      start = i;
      label = bare;
    } else if (bio) {  // I- tag
      if (open == Kind::Bio && label == bare) continue;
      close(i - 1);
      open = Kind::Bio;
      start = i;
      label = bare;
    } else {  // bare label
      if (open == Kind::Bare && label == bare) continue;
      close(i - 1);
      open = Kind::Bare;
      start = i;
      label = bare;
    }
  }
  close(tags.empty() ? 0 : tags.size() - 1);
  return spans;
}

double slot_f1(const std::vector<std::vector<std::string>>& pred,
               const std::vector<std::vector<std::string>>& gold) {
  require(pred.size() == gold.size(), "slot_f1: utterance count mismatch");
  std::vector<TagSpan> p, g;
  for (size_t i = 0; i < pred.size(); ++i) {
    require(pred[i].size() == gold[i].size(),
            "slot_f1: tag length mismatch in utterance " + std::to_string(i));
    auto ps = decode_spans(pred[i], i);
    auto gs = decode_spans(gold[i], i);
    p.insert(p.end(), ps.begin(), ps.end());
    g.insert(g.end(), gs.begin(), gs.end());
  }
  std::sort(p.begin(), p.end());
  std::sort(g.begin(), g.end());
  std::vector<TagSpan> tp;
  std::set_intersection(p.begin(), p.end(), g.begin(), g.end(), std::back_inserter(tp));
  double precision = p.empty() ? 0.0 : static_cast<double>(tp.size()) / static_cast<double>(p.size());
  double recall = g.empty() ? 0.0 : static_cast<double>(tp.size()) / static_cast<double>(g.size());
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace slu
