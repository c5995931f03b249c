#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slu/corpus.hpp"

namespace slu {

// Slot tags strip a leading "B-"/"I-" prefix to their bare label; "O" marks
// context words.
bool is_context_tag(const std::string& tag);
std::string strip_bio(const std::string& tag);

struct SlotFiller {
  std::string label;
  std::vector<std::string> span;

  bool operator==(const SlotFiller&) const = default;
};

// An utterance with each maximal same-label slot run collapsed to a single
// token carrying the bare label; the removed words are kept as fillers in
// left-to-right order. slot_positions[k] is the index in `tokens` of the
// label token for fillers[k] (a context word may coincide textually with a
// label, so positions are tracked explicitly).
struct TaggedUtterance {
  std::vector<std::string> tokens;
  std::string intent;
  std::vector<SlotFiller> fillers;
  std::vector<size_t> slot_positions;
  size_t parent = 0;  // index of the source utterance
};

TaggedUtterance tag_utterance(const LabeledUtterance& u, size_t parent_index = 0);

struct DetagResult {
  std::vector<std::string> tokens;
  // where each filler landed: (label, start, end) inclusive token positions
  struct Span {
    std::string label;
    size_t start;
    size_t end;
  };
  std::vector<Span> spans;
};

// Substitutes `fillers` into the frame of `frame_utt`, matching labels in
// order of appearance. Throws when the filler multiset cannot cover the
// frame's slots.
DetagResult detag(const TaggedUtterance& frame_utt, const std::vector<SlotFiller>& fillers);

struct ParaphrasePair {
  enum class Kind { Cross, Identity };
  std::vector<std::string> source;
  std::vector<std::string> target;
  Kind kind = Kind::Identity;
  // bookkeeping carried for invariant checks; not serialized
  std::string intent;
  std::vector<DetagResult::Span> source_spans;
  std::vector<DetagResult::Span> target_spans;
};

// Tagged utterances with equal (intent, slot-label multiset) are treated as
// paraphrases: for every ordered pair of group members with distinct tagged
// forms, the partner's frame is filled with this member's slot words. One
// identity pair per utterance is appended. Output order is deterministic.
std::vector<ParaphrasePair> build_paraphrase_dataset(const Corpus& corpus,
                                                     std::vector<std::string>* warnings = nullptr);

// n synthetic utterances built by swapping every slot span of a sampled
// utterance for a span observed under the same label in another utterance.
std::vector<LabeledUtterance> recombine(const Corpus& corpus, size_t n, uint64_t seed);

void save_pairs_tsv(const std::vector<ParaphrasePair>& pairs, const std::string& path);
std::vector<ParaphrasePair> load_pairs_tsv(const std::string& path);

}  // namespace slu
