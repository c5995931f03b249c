#include "slu/pipeline.hpp"

#include <algorithm>
#include <map>

#include "slu/rnnpara.hpp"

namespace slu {

std::vector<Candidate> RnnParaphraser::generate(const std::vector<std::string>& tokens,
                                                const Parse& base) const {
  auto seqs = generate_rnn_paraphrases(*lf_, *lb_, tokens, base, width_, std::min<size_t>(2, 2 * width_));
  std::vector<Candidate> out;
  for (auto& s : seqs) out.push_back({std::move(s), name()});
  return out;
}

std::vector<Candidate> S2sParaphraser::generate(const std::vector<std::string>& tokens,
                                                const Parse& base) const {
  (void)base;
  DecodedPair d = model_->decode_paraphrases(tokens, model_->hyper().max_decode_len);
  return {{std::move(d.paraphrase), "seq2seq-d1"}, {std::move(d.reconstruction), "seq2seq-d2"}};
}

std::vector<int> lcs_align(const std::vector<std::string>& original,
                           const std::vector<std::string>& candidate) {
  size_t n = original.size();
  size_t m = candidate.size();
  std::vector<std::vector<int>> dp(n + 1, std::vector<int>(m + 1, 0));
  for (size_t i = 1; i <= n; ++i) {
    for (size_t j = 1; j <= m; ++j) {
      if (original[i - 1] == candidate[j - 1]) {
        dp[i][j] = dp[i - 1][j - 1] + 1;
      } else {
        dp[i][j] = std::max(dp[i - 1][j], dp[i][j - 1]);
      }
    }
  }
  std::vector<int> align(n, -1);
  size_t i = n, j = m;
  while (i > 0 && j > 0) {
    if (original[i - 1] == candidate[j - 1] && dp[i][j] == dp[i - 1][j - 1] + 1) {
      align[i - 1] = static_cast<int>(j - 1);
      --i;
      --j;
    } else if (dp[i - 1][j] >= dp[i][j - 1]) {
      --i;
    } else {
      --j;
    }
  }
  return align;
}

Parse vote(const Parse& base, const std::vector<AlignedCandidate>& candidates,
           const std::vector<std::string>& original_tokens) {
  if (candidates.empty()) return base;
  require(base.tags.size() == original_tokens.size(), "vote: base parse not aligned with tokens");

  // ---- intent plurality
  struct IntentVote {
    int count = 0;
    float best_prob = 0.0f;
    bool has_base = false;
  };
  std::map<std::string, IntentVote> intents;
  auto add_intent = [&](const std::string& intent, float prob, bool is_base) {
    auto& v = intents[intent];
    ++v.count;
    v.best_prob = std::max(v.best_prob, prob);
    v.has_base = v.has_base || is_base;
  };
  add_intent(base.intent, base.s_intent, true);
  for (const auto& c : candidates) add_intent(c.parse.intent, c.parse.s_intent, false);

  std::string win_intent;
  float win_intent_prob = 0.0f;
  {
    const IntentVote* best = nullptr;
    for (const auto& [intent, v] : intents) {
      bool better = false;
      if (best == nullptr) {
        better = true;
      } else if (v.count != best->count) {
        better = v.count > best->count;
      } else if (v.best_prob != best->best_prob) {
        better = v.best_prob > best->best_prob;
      } else if (v.has_base != best->has_base) {
        better = v.has_base;
      }  // else keep the earlier (lexicographically smaller) intent
      if (better) {
        best = &v;
        win_intent = intent;
      }
    }
    // report the strongest probability among the parses that voted for it
    win_intent_prob = best->best_prob;
  }

  // ---- per-position tag plurality
  Parse out;
  out.intent = win_intent;
  out.intent_prob = win_intent_prob;
  for (size_t i = 0; i < original_tokens.size(); ++i) {
    struct TagVote {
      int count = 0;
      float best_prob = 0.0f;
      bool has_base = false;
    };
    std::map<std::string, TagVote> tags;
    auto add_tag = [&](const std::string& tag, float prob, bool is_base) {
      auto& v = tags[tag];
      ++v.count;
      v.best_prob = std::max(v.best_prob, prob);
      v.has_base = v.has_base || is_base;
    };
    add_tag(base.tags[i], base.tag_probs[i], true);
    for (const auto& c : candidates) {
      if (i < c.align.size() && c.align[i] >= 0 &&
          c.align[i] < static_cast<int>(c.parse.tags.size())) {
        add_tag(c.parse.tags[c.align[i]], c.parse.tag_probs[c.align[i]], false);
      }
    }
    const std::string* win_tag = nullptr;
    const TagVote* best = nullptr;
    for (const auto& [tag, v] : tags) {
      bool better = false;
      if (best == nullptr) {
        better = true;
      } else if (v.count != best->count) {
        better = v.count > best->count;
      } else if (v.has_base != best->has_base) {
        better = v.has_base;  // ties keep the base tag
      } else if (v.best_prob != best->best_prob) {
        better = v.best_prob > best->best_prob;
      }
      if (better) {
        best = &v;
        win_tag = &tag;
      }
    }
    out.tags.push_back(*win_tag);
    out.tag_probs.push_back(best->best_prob);
  }

  ConfidenceScores s = confidence(out.intent_prob, out.tag_probs);
  out.s_intent = s.s_intent;
  out.s_slot = s.s_slot;
  out.s_total = s.s_total;
  return out;
}

VotedParse HybridParser::hybrid_parse(const std::vector<std::string>& tokens) const {
  require(!tokens.empty(), "hybrid_parse: empty token sequence");
  VotedParse out;
  Parse base = parse_(tokens);
  out.base = base;

  if (base.s_total >= tau_) {
    out.final = std::move(base);
    out.provenance = Provenance::GatePassed;
    return out;
  }
  out.provenance = Provenance::Voted;

  for (const auto& gen : generators_) {
    std::vector<Candidate> cands;
    try {
      cands = gen->generate(tokens, base);
    } catch (const std::exception& e) {
      out.warnings.push_back("generator " + gen->name() + " failed: " + e.what());
      continue;
    }
    for (auto& cand : cands) {
      if (cand.tokens.empty()) {
        out.warnings.push_back("generator " + cand.generator + " produced an empty paraphrase");
        continue;
      }
      AlignedCandidate ac;
      ac.candidate = cand;
      try {
        ac.parse = parse_(cand.tokens);
      } catch (const std::exception& e) {
        out.warnings.push_back("re-parse of " + cand.generator + " candidate failed: " + e.what());
        continue;
      }
      if (cand.tokens.size() == tokens.size()) {
        ac.align.resize(tokens.size());
        for (size_t i = 0; i < tokens.size(); ++i) ac.align[i] = static_cast<int>(i);
      } else {
        ac.align = lcs_align(tokens, cand.tokens);
      }
      out.candidates.push_back(std::move(ac));
    }
  }

  out.final = vote(base, out.candidates, tokens);
  return out;
}

}  // namespace slu
