#include "slu/paradata.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "slu/rng.hpp"

namespace slu {

bool is_context_tag(const std::string& tag) { return tag == "O"; }

std::string strip_bio(const std::string& tag) {
  if (tag.size() > 2 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-') return tag.substr(2);
  return tag;
}

TaggedUtterance tag_utterance(const LabeledUtterance& u, size_t parent_index) {
  require(u.tokens.size() == u.tags.size(), "tag_utterance: token/tag length mismatch");
  TaggedUtterance out;
  out.intent = u.intent;
  out.parent = parent_index;
  size_t i = 0;
  while (i < u.tokens.size()) {
    if (is_context_tag(u.tags[i])) {
      out.tokens.push_back(u.tokens[i]);
      ++i;
      continue;
    }
    std::string label = strip_bio(u.tags[i]);
    SlotFiller filler{label, {}};
    while (i < u.tokens.size() && !is_context_tag(u.tags[i]) && strip_bio(u.tags[i]) == label) {
      filler.span.push_back(u.tokens[i]);
      ++i;
    }
    out.slot_positions.push_back(out.tokens.size());
    out.tokens.push_back(label);
    out.fillers.push_back(std::move(filler));
  }
  return out;
}

namespace {

std::string join(const std::vector<std::string>& toks) {
  std::string out;
  for (size_t i = 0; i < toks.size(); ++i) {
    if (i) out += ' ';
    out += toks[i];
  }
  return out;
}

}  // namespace

DetagResult detag(const TaggedUtterance& frame_utt, const std::vector<SlotFiller>& fillers) {
  const auto& slot_pos = frame_utt.slot_positions;
  require(slot_pos.size() == frame_utt.fillers.size(), "detag: frame/filler bookkeeping mismatch");
  std::vector<bool> used(fillers.size(), false);
  DetagResult out;
  size_t slot_idx = 0;
  for (size_t i = 0; i < frame_utt.tokens.size(); ++i) {
    if (slot_idx < slot_pos.size() && slot_pos[slot_idx] == i) {
      const std::string& label = frame_utt.fillers[slot_idx].label;
      // first unused filler with this label, in order of appearance
      size_t pick = fillers.size();
      for (size_t f = 0; f < fillers.size(); ++f) {
        if (!used[f] && fillers[f].label == label) {
          pick = f;
          break;
        }
      }
      require(pick < fillers.size(), "detag: no filler available for slot label '" + label + "'");
      used[pick] = true;
      size_t start = out.tokens.size();
      for (const auto& w : fillers[pick].span) out.tokens.push_back(w);
      out.spans.push_back({label, start, out.tokens.size() - 1});
      ++slot_idx;
    } else {
      out.tokens.push_back(frame_utt.tokens[i]);
    }
  }
  return out;
}

std::vector<ParaphrasePair> build_paraphrase_dataset(const Corpus& corpus,
                                                     std::vector<std::string>* warnings) {
  require(corpus.size() > 0, "build_paraphrase_dataset: empty corpus");
  std::vector<TaggedUtterance> tagged;
  tagged.reserve(corpus.size());
  for (size_t i = 0; i < corpus.size(); ++i) tagged.push_back(tag_utterance(corpus.utterances[i], i));

  // group key: intent + sorted slot-label multiset
  std::map<std::string, std::vector<size_t>> groups;
  std::vector<std::string> group_order;
  for (size_t i = 0; i < tagged.size(); ++i) {
    std::vector<std::string> labels;
    for (const auto& f : tagged[i].fillers) labels.push_back(f.label);
    std::sort(labels.begin(), labels.end());
    std::string key = tagged[i].intent + "\x1f" + join(labels);
    auto it = groups.find(key);
    if (it == groups.end()) group_order.push_back(key);
    groups[key].push_back(i);
  }

  std::vector<ParaphrasePair> out;
  for (const auto& key : group_order) {
    const auto& members = groups[key];
    for (size_t a : members) {
      for (size_t b : members) {
        if (a == b || tagged[a].tokens == tagged[b].tokens) continue;
        ParaphrasePair pair;
        pair.kind = ParaphrasePair::Kind::Cross;
        pair.intent = tagged[a].intent;
        try {
          DetagResult src = detag(tagged[a], tagged[a].fillers);
          DetagResult tgt = detag(tagged[b], tagged[a].fillers);
          pair.source = src.tokens;
          pair.source_spans = src.spans;
          pair.target = tgt.tokens;
          pair.target_spans = tgt.spans;
        } catch (const Error& e) {
          if (warnings) {
            warnings->push_back("skipping pair (" + std::to_string(a) + "," + std::to_string(b) +
                                "): " + e.what());
          }
          continue;
        }
        out.push_back(std::move(pair));
      }
    }
  }
  for (size_t i = 0; i < corpus.size(); ++i) {
    ParaphrasePair pair;
    pair.kind = ParaphrasePair::Kind::Identity;
    pair.intent = corpus.utterances[i].intent;
    pair.source = corpus.utterances[i].tokens;
    pair.target = corpus.utterances[i].tokens;
    out.push_back(std::move(pair));
  }
  return out;
}

std::vector<LabeledUtterance> recombine(const Corpus& corpus, size_t n, uint64_t seed) {
  require(corpus.size() >= 2, "recombine: need at least 2 utterances");

  // pool of distinct spans per label, first-seen order
  std::map<std::string, std::vector<std::vector<std::string>>> pools;
  for (const auto& u : corpus.utterances) {
    TaggedUtterance t = tag_utterance(u);
    for (const auto& f : t.fillers) {
      auto& pool = pools[f.label];
      if (std::find(pool.begin(), pool.end(), f.span) == pool.end()) pool.push_back(f.span);
    }
  }

  Rng rng(seed);
  std::vector<LabeledUtterance> out;
  out.reserve(n);
  for (size_t k = 0; k < n; ++k) {
    const LabeledUtterance& base = corpus.utterances[rng.index(corpus.size())];
    LabeledUtterance synth;
    synth.intent = base.intent;
    size_t i = 0;
    while (i < base.tokens.size()) {
      if (is_context_tag(base.tags[i])) {
        synth.tokens.push_back(base.tokens[i]);
        synth.tags.push_back(base.tags[i]);
        ++i;
        continue;
      }
      std::string label = strip_bio(base.tags[i]);
      std::string first_tag = base.tags[i];
      std::vector<std::string> span;
      while (i < base.tokens.size() && !is_context_tag(base.tags[i]) && strip_bio(base.tags[i]) == label) {
        span.push_back(base.tokens[i]);
        ++i;
      }
      // swap for a different observed span under this label, if any exists
      const auto& pool = pools[label];
      std::vector<const std::vector<std::string>*> candidates;
      for (const auto& p : pool) {
        if (p != span) candidates.push_back(&p);
      }
      const std::vector<std::string>& replacement =
          candidates.empty() ? span : *candidates[rng.index(candidates.size())];
      bool bio = first_tag.size() > 2 && (first_tag[0] == 'B' || first_tag[0] == 'I') && first_tag[1] == '-';
      for (size_t j = 0; j < replacement.size(); ++j) {
        synth.tokens.push_back(replacement[j]);
        if (bio) {
          synth.tags.push_back(j == 0 ? first_tag : "I-" + label);
        } else {
          synth.tags.push_back(first_tag);
        }
      }
    }
    out.push_back(std::move(synth));
  }
  return out;
}

void save_pairs_tsv(const std::vector<ParaphrasePair>& pairs, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  require(f.good(), "cannot open " + path + " for writing");
  for (const auto& p : pairs) {
    f << join(p.source) << '\t' << join(p.target) << '\n';
  }
  require(f.good(), "write failed for " + path);
}

std::vector<ParaphrasePair> load_pairs_tsv(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), "cannot open " + path);
  std::vector<ParaphrasePair> pairs;
  std::string line;
  size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    size_t tab = line.find('\t');
    require(tab != std::string::npos, path + ":" + std::to_string(lineno) + ": expected 2 tab-separated fields");
    ParaphrasePair p;
    p.source = split_ws(line.substr(0, tab));
    p.target = split_ws(line.substr(tab + 1));
    require(!p.source.empty() && !p.target.empty(),
            path + ":" + std::to_string(lineno) + ": empty source or target");
    p.kind = p.source == p.target ? ParaphrasePair::Kind::Identity : ParaphrasePair::Kind::Cross;
    pairs.push_back(std::move(p));
  }
  require(!pairs.empty(), path + ": no records");
  return pairs;
}

}  // namespace slu
