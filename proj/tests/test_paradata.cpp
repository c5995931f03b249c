#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "slu/paradata.hpp"
#include "slu/rng.hpp"

using namespace slu;

namespace {

LabeledUtterance utt(std::vector<std::string> tokens, std::vector<std::string> tags, std::string intent) {
  return {std::move(tokens), std::move(tags), std::move(intent)};
}

// The running example: "i need a flight from chicago to san francisco on a
// thursday" with bare Fig.-1-style labels.
LabeledUtterance flight_utterance() {
  return utt({"i", "need", "a", "flight", "from", "chicago", "to", "san", "francisco", "on", "a", "thursday"},
             {"O", "O", "O", "O", "O", "@from.city", "O", "@to.city", "@to.city", "O", "O", "@day.name"},
             "flight");
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) s += ' ';
    s += v[i];
  }
  return s;
}

// Brute-force O(N^2) pairing oracle: for every ordered utterance pair with
// equal intent and slot-label multiset but distinct tagged forms, substitute
// the first member's fillers into the second's frame.
std::vector<std::pair<std::string, std::string>> oracle_cross_pairs(const Corpus& corpus) {
  std::vector<std::pair<std::string, std::string>> out;
  std::vector<TaggedUtterance> tagged;
  for (size_t i = 0; i < corpus.size(); ++i) tagged.push_back(tag_utterance(corpus.utterances[i], i));
  for (size_t a = 0; a < tagged.size(); ++a) {
    for (size_t b = 0; b < tagged.size(); ++b) {
      if (a == b) continue;
      if (tagged[a].intent != tagged[b].intent) continue;
      std::multiset<std::string> la, lb;
      for (const auto& f : tagged[a].fillers) la.insert(f.label);
      for (const auto& f : tagged[b].fillers) lb.insert(f.label);
      if (la != lb) continue;
      if (tagged[a].tokens == tagged[b].tokens) continue;
      out.emplace_back(join(corpus.utterances[a].tokens), join(detag(tagged[b], tagged[a].fillers).tokens));
    }
  }
  return out;
}

}  // namespace

TEST_CASE("tag_utterance collapses slot runs and records fillers") {
  TaggedUtterance t = tag_utterance(flight_utterance());
  CHECK(join(t.tokens) == "i need a flight from @from.city to @to.city on a @day.name");
  REQUIRE(t.fillers.size() == 3);
  CHECK(t.fillers[0].label == "@from.city");
  CHECK(t.fillers[0].span == std::vector<std::string>{"chicago"});
  CHECK(t.fillers[1].span == std::vector<std::string>{"san", "francisco"});
  CHECK(t.fillers[2].span == std::vector<std::string>{"thursday"});
}

TEST_CASE("tag_utterance: all-O utterance passes through") {
  TaggedUtterance t = tag_utterance(utt({"hello", "there"}, {"O", "O"}, "greet"));
  CHECK(t.tokens == std::vector<std::string>{"hello", "there"});
  CHECK(t.fillers.empty());
}

TEST_CASE("tag_utterance handles BIO prefixes and two-token spans") {
  TaggedUtterance t =
      tag_utterance(utt({"to", "san", "francisco"}, {"O", "B-to.city", "I-to.city"}, "flight"));
  CHECK(t.tokens == std::vector<std::string>{"to", "to.city"});
  REQUIRE(t.fillers.size() == 1);
  CHECK(t.fillers[0].span == std::vector<std::string>{"san", "francisco"});
}

TEST_CASE("detag round-trips every corpus utterance") {
  std::vector<LabeledUtterance> utts = {
      flight_utterance(),
      utt({"fares", "to", "boston"}, {"O", "O", "B-city"}, "fare"),
      utt({"hello"}, {"O"}, "greet"),
      utt({"from", "new", "york", "to", "new", "york"}, {"O", "B-from", "I-from", "O", "B-to", "I-to"},
          "flight"),
  };
  for (const auto& u : utts) {
    TaggedUtterance t = tag_utterance(u);
    CHECK(detag(t, t.fillers).tokens == u.tokens);
  }
}

TEST_CASE("detag is not fooled by context words equal to a label") {
  // the literal word "city" is a context word; the slot label is also "city"
  LabeledUtterance u = utt({"which", "city", "is", "boston"}, {"O", "O", "O", "city"}, "ask");
  TaggedUtterance t = tag_utterance(u);
  CHECK(t.tokens == std::vector<std::string>{"which", "city", "is", "city"});
  CHECK(detag(t, t.fillers).tokens == u.tokens);
}

TEST_CASE("build_paraphrase_dataset: all-unique keys give only identity pairs") {
  Corpus c = Corpus::from_utterances({
      utt({"a"}, {"O"}, "i1"),
      utt({"b", "boston"}, {"O", "city"}, "i2"),
      utt({"c"}, {"O"}, "i3"),
  });
  auto pairs = build_paraphrase_dataset(c);
  REQUIRE(pairs.size() == 3);
  for (const auto& p : pairs) {
    CHECK(p.kind == ParaphrasePair::Kind::Identity);
    CHECK(p.source == p.target);
  }
}

TEST_CASE("build_paraphrase_dataset: a 3-member group emits 6 cross pairs") {
  Corpus c = Corpus::from_utterances({
      utt({"show", "flights", "to", "boston"}, {"O", "O", "O", "city"}, "flight"),
      utt({"flights", "for", "denver", "please"}, {"O", "O", "city", "O"}, "flight"),
      utt({"get", "me", "to", "chicago"}, {"O", "O", "O", "city"}, "flight"),
  });
  auto pairs = build_paraphrase_dataset(c);
  int cross = 0, identity = 0;
  for (const auto& p : pairs) {
    if (p.kind == ParaphrasePair::Kind::Cross) ++cross;
    else ++identity;
  }
  CHECK(cross == 6);
  CHECK(identity == 3);
}

TEST_CASE("cross-pair substitution carries the source fillers into the new frame") {
  Corpus c = Corpus::from_utterances({
      flight_utterance(),
      utt({"book", "travel", "leaving", "denver", "for", "miami", "on", "monday"},
          {"O", "O", "O", "@from.city", "O", "@to.city", "O", "@day.name"}, "flight"),
  });
  auto pairs = build_paraphrase_dataset(c);
  REQUIRE(pairs.size() == 2 + 2);  // two cross + two identity
  const auto& p = pairs[0];
  CHECK(p.kind == ParaphrasePair::Kind::Cross);
  CHECK(join(p.source) == join(flight_utterance().tokens));
  CHECK(join(p.target) == "book travel leaving chicago for san francisco on thursday");
}

TEST_CASE("cross pairs match the brute-force oracle and re-tag consistently") {
  // randomized corpora over a tiny grammar with shared group keys
  Rng rng(13);
  std::vector<std::string> cities = {"boston", "denver", "chicago"};
  std::vector<std::string> days = {"monday", "friday"};
  std::vector<LabeledUtterance> utts;
  for (int i = 0; i < 50; ++i) {
    std::string c1 = cities[rng.index(cities.size())];
    std::string d1 = days[rng.index(days.size())];
    switch (rng.index(4)) {
      case 0:
        utts.push_back(utt({"fly", "to", c1, "on", d1}, {"O", "O", "city", "O", "day"}, "flight"));
        break;
      case 1:
        utts.push_back(utt({"on", d1, "get", "me", "to", c1}, {"O", "day", "O", "O", "O", "city"}, "flight"));
        break;
      case 2:
        utts.push_back(utt({"fares", "for", c1}, {"O", "O", "city"}, "fare"));
        break;
      default:
        utts.push_back(utt({"price", "to", c1}, {"O", "O", "city"}, "fare"));
        break;
    }
  }
  Corpus corpus = Corpus::from_utterances(utts);
  auto pairs = build_paraphrase_dataset(corpus);

  std::multiset<std::pair<std::string, std::string>> got;
  for (const auto& p : pairs) {
    if (p.kind != ParaphrasePair::Kind::Cross) continue;
    got.insert({join(p.source), join(p.target)});

    // re-tagging both sides from the substitution bookkeeping preserves the
    // (intent, slot-label multiset) group key
    std::multiset<std::string> ls, lt;
    for (const auto& s : p.source_spans) ls.insert(s.label);
    for (const auto& s : p.target_spans) lt.insert(s.label);
    CHECK(ls == lt);
  }
  auto expected = oracle_cross_pairs(corpus);
  std::multiset<std::pair<std::string, std::string>> want(expected.begin(), expected.end());
  CHECK(got == want);

  size_t identity = 0;
  for (const auto& p : pairs) {
    if (p.kind == ParaphrasePair::Kind::Identity) {
      ++identity;
      CHECK(p.source == p.target);
    }
  }
  CHECK(identity == corpus.size());
}

TEST_CASE("recombine: degenerate single-filler corpus copies inputs") {
  Corpus c = Corpus::from_utterances({
      utt({"fly", "to", "boston"}, {"O", "O", "city"}, "flight"),
      utt({"get", "to", "boston"}, {"O", "O", "city"}, "flight"),
  });
  auto synth = recombine(c, 10, 3);
  REQUIRE(synth.size() == 10);
  for (const auto& s : synth) {
    bool is_copy = false;
    for (const auto& u : c.utterances) is_copy = is_copy || s == u;
    CHECK(is_copy);
  }
}

TEST_CASE("recombine swaps fillers between utterances and keeps tags aligned") {
  Corpus c = Corpus::from_utterances({
      utt({"from", "chicago", "now"}, {"O", "B-from.city", "O"}, "flight"),
      utt({"leaving", "baltimore"}, {"O", "B-from.city"}, "flight"),
  });
  auto synth = recombine(c, 40, 1);
  bool saw_swap = false;
  for (const auto& s : synth) {
    CHECK(s.tokens.size() == s.tags.size());
    // with two distinct fillers every output must carry the other city
    if (s.tokens[0] == "from") {
      CHECK(s.tokens[1] == "baltimore");
      saw_swap = true;
    } else {
      CHECK(s.tokens[1] == "chicago");
    }
  }
  CHECK(saw_swap);

  auto again = recombine(c, 40, 1);
  CHECK(again == synth);  // deterministic per seed
}

TEST_CASE("recombine handles multi-token replacement spans") {
  Corpus c = Corpus::from_utterances({
      utt({"to", "boston"}, {"O", "B-city"}, "flight"),
      utt({"to", "new", "york"}, {"O", "B-city", "I-city"}, "flight"),
  });
  auto synth = recombine(c, 20, 5);
  for (const auto& s : synth) {
    CHECK(s.tokens.size() == s.tags.size());
    if (s.tokens.size() == 3) {
      CHECK(s.tags == std::vector<std::string>{"O", "B-city", "I-city"});
    } else {
      CHECK(s.tags == std::vector<std::string>{"O", "B-city"});
    }
  }
}
