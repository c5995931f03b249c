#include "slu/rnnpara.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace slu {

std::string ParaphraseTemplate::render() const {
  std::string out;
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ' ';
    out += cells[i].keep ? cells[i].token : Vocabulary::reserved_tokens()[Vocabulary::kBlank];
  }
  return out;
}

ParaphraseTemplate build_template(const std::vector<std::string>& tokens, const Parse& parse) {
  require(tokens.size() == parse.tags.size() && tokens.size() == parse.tag_probs.size(),
          "build_template: parse not aligned with tokens");
  ParaphraseTemplate tpl;
  tpl.original = tokens;

  double context_sum = 0.0;
  size_t context_count = 0;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (parse.tags[i] == "O") {
      context_sum += parse.tag_probs[i];
      ++context_count;
    }
  }
  // no context words: keep everything
  double mean = context_count == 0 ? 0.0 : context_sum / static_cast<double>(context_count);

  for (size_t i = 0; i < tokens.size(); ++i) {
    bool slot_word = parse.tags[i] != "O";
    bool keep = slot_word || (context_count > 0 && parse.tag_probs[i] > mean) || context_count == 0;
    tpl.cells.push_back({keep, keep ? tokens[i] : std::string()});
  }
  return tpl;
}

namespace {

struct Beam {
  std::vector<int> token_ids;        // vocabulary view (OOV keeps map to UNK)
  std::vector<std::string> surface;  // kept tokens stay verbatim
  double log_prob = 0.0;
  LanguageModel::State state;
};

bool beam_order(const Beam& a, const Beam& b) {
  if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
  return a.surface < b.surface;
}

}  // namespace

std::vector<Hypothesis> constrained_beam_search(const LanguageModel& lm, const ParaphraseTemplate& tpl,
                                                size_t width) {
  require(width >= 1, "constrained_beam_search: width must be >= 1");
  require(!tpl.cells.empty(), "constrained_beam_search: empty template");

  std::vector<ParaphraseTemplate::Cell> cells = tpl.cells;
  if (lm.direction() == LmDirection::Backward) std::reverse(cells.begin(), cells.end());

  const Vocabulary& vocab = lm.vocab();
  std::vector<Beam> beams;
  beams.push_back({{}, {}, 0.0, lm.start()});

  for (const auto& cell : cells) {
    std::vector<Beam> next;
    for (const auto& beam : beams) {
      Tensor dist = lm.next_log_probs(beam.state);
      if (cell.keep) {
        int id = vocab.id(cell.token);
        Beam nb = beam;
        nb.token_ids.push_back(id);
        nb.surface.push_back(cell.token);
        nb.log_prob += dist.at(id);
        next.push_back(std::move(nb));
      } else {
        // top-width non-reserved fills, ties by token id
        std::vector<int> ids;
        for (int id = Vocabulary::kNumReserved; id < vocab.size(); ++id) ids.push_back(id);
        size_t take = std::min(width, ids.size());
        std::partial_sort(ids.begin(), ids.begin() + take, ids.end(), [&](int a, int b) {
          if (dist.at(a) != dist.at(b)) return dist.at(a) > dist.at(b);
          return a < b;
        });
        ids.resize(take);
        for (int id : ids) {
          Beam nb = beam;
          nb.token_ids.push_back(id);
          nb.surface.push_back(vocab.token(id));
          nb.log_prob += dist.at(id);
          next.push_back(std::move(nb));
        }
      }
    }
    std::sort(next.begin(), next.end(), beam_order);
    if (next.size() > width) next.resize(width);
    for (auto& beam : next) beam.state = lm.advance(beam.state, beam.token_ids.back());
    beams = std::move(next);
  }

  std::vector<Hypothesis> out;
  out.reserve(beams.size());
  for (auto& beam : beams) {
    Hypothesis h{std::move(beam.surface), beam.log_prob};
    if (lm.direction() == LmDirection::Backward) std::reverse(h.tokens.begin(), h.tokens.end());
    out.push_back(std::move(h));
  }
  std::sort(out.begin(), out.end(), [](const Hypothesis& a, const Hypothesis& b) {
    if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
    return a.tokens < b.tokens;
  });
  return out;
}

double bidirectional_score(const LanguageModel& lf, const LanguageModel& lb,
                           const std::vector<std::string>& tokens) {
  double n = static_cast<double>(tokens.size());
  return 0.5 * (lf.log_likelihood(tokens) / n + lb.log_likelihood(tokens) / n);
}

std::vector<std::vector<std::string>> generate_rnn_paraphrases(const LanguageModel& lf,
                                                               const LanguageModel& lb,
                                                               const std::vector<std::string>& tokens,
                                                               const Parse& parse, size_t width,
                                                               size_t k) {
  require(lf.direction() == LmDirection::Forward && lb.direction() == LmDirection::Backward,
          "generate_rnn_paraphrases: need one forward and one backward model");
  require(k >= 1 && k <= 2 * width, "generate_rnn_paraphrases: k must be in [1, 2*width]");

  ParaphraseTemplate tpl = build_template(tokens, parse);
  auto fwd = constrained_beam_search(lf, tpl, width);
  auto bwd = constrained_beam_search(lb, tpl, width);

  std::vector<std::vector<std::string>> candidates;
  for (const auto& h : fwd) {
    if (std::find(candidates.begin(), candidates.end(), h.tokens) == candidates.end()) {
      candidates.push_back(h.tokens);
    }
  }
  for (const auto& h : bwd) {
    if (std::find(candidates.begin(), candidates.end(), h.tokens) == candidates.end()) {
      candidates.push_back(h.tokens);
    }
  }
  require(!candidates.empty(), "generate_rnn_paraphrases: no candidates produced");

  std::vector<std::pair<double, std::vector<std::string>>> scored;
  scored.reserve(candidates.size());
  for (auto& c : candidates) {
    scored.emplace_back(bidirectional_score(lf, lb, c), std::move(c));
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  if (scored.size() > k) scored.resize(k);
  std::vector<std::vector<std::string>> out;
  out.reserve(scored.size());
  for (auto& [score, c] : scored) out.push_back(std::move(c));
  return out;
}

}  // namespace slu
