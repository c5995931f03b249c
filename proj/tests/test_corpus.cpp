#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "slu/corpus.hpp"
#include "slu/rng.hpp"

using namespace slu;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("slu_test_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name, const std::string& content) const {
    auto p = (path / name).string();
    std::ofstream f(p);
    f << content;
    return p;
  }
};

Corpus toy(std::vector<LabeledUtterance> utts) { return Corpus::from_utterances(std::move(utts)); }

}  // namespace

TEST_CASE("load_corpus: well-formed two-line TSV") {
  TempDir d;
  auto p = d.file("train.tsv",
                  "Show me Flights\tO O O\tflight\n"
                  "fares to boston\tO O B-city\tfare\n");
  Corpus c = load_corpus(p);
  REQUIRE(c.size() == 2);
  CHECK(c.utterances[0].tokens == std::vector<std::string>{"show", "me", "flights"});
  CHECK(c.utterances[0].intent == "flight");
  CHECK(c.intent_set == std::vector<std::string>{"fare", "flight"});
  CHECK(c.slot_set == std::vector<std::string>{"B-city", "O"});
  CHECK(c.word_set.size() == 6);
}

TEST_CASE("load_corpus: token/tag mismatch names the line") {
  TempDir d;
  auto p = d.file("bad.tsv",
                  "a b\tO O\tx\n"
                  "a b c d e\tO O O O\ty\n");
  try {
    load_corpus(p);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
    CHECK(std::string(e.what()).find("5 tokens") != std::string::npos);
  }
}

TEST_CASE("load_corpus: empty file is an error") {
  TempDir d;
  auto p = d.file("empty.tsv", "");
  CHECK_THROWS_AS(load_corpus(p), Error);
}

TEST_CASE("load_corpus: parallel-file layout") {
  TempDir d;
  d.file("seq.in", "show flights\nbook IT\n");
  d.file("seq.out", "O B-obj\nO O\n");
  d.file("label", "flight\nbook\n");
  Corpus c = load_corpus(d.path.string(), CorpusFormat::ParallelFiles);
  REQUIRE(c.size() == 2);
  CHECK(c.utterances[1].tokens == std::vector<std::string>{"book", "it"});

  d.file("label", "flight\n");  // now line counts differ
  CHECK_THROWS_AS(load_corpus(d.path.string(), CorpusFormat::ParallelFiles), Error);
}

TEST_CASE("build_vocab: reserved tokens plus frequency filtering") {
  Corpus c = toy({{{"a", "a", "b"}, {"O", "O", "O"}, "x"}});
  Vocabulary v1 = Vocabulary::build(c, 1);
  CHECK(v1.size() == 7);  // 5 reserved + a + b
  CHECK(v1.id("a") == 5);  // higher frequency comes first
  CHECK(v1.id("b") == 6);
  Vocabulary v2 = Vocabulary::build(c, 2);
  CHECK(v2.size() == 6);
  CHECK(v2.id("b") == Vocabulary::kUnk);

  Vocabulary v3 = Vocabulary::build(c, 1);
  CHECK(v1.tokens() == v3.tokens());  // determinism
  CHECK(v1.hash() == v3.hash());
}

TEST_CASE("encode maps unknown tokens to UNK and round-trips known ones") {
  Corpus c = toy({{{"a", "b"}, {"O", "O"}, "x"}});
  Vocabulary v = Vocabulary::build(c, 1);
  auto ids = v.encode({"a", "b"});
  CHECK(ids == std::vector<int>{v.id("a"), v.id("b")});
  CHECK(v.encode({"zzz"}) == std::vector<int>{Vocabulary::kUnk});
  CHECK(v.decode(ids) == std::vector<std::string>{"a", "b"});
  for (int id : ids) CHECK(id < v.size());
}

TEST_CASE("subsample: determinism, subset size, full-size identity") {
  std::vector<LabeledUtterance> utts;
  for (int i = 0; i < 100; ++i) {
    utts.push_back({{"tok" + std::to_string(i)}, {"O"}, "intent" + std::to_string(i % 3)});
  }
  Corpus c = toy(utts);

  Corpus full = subsample(c, 100, 9);
  CHECK(full.utterances == c.utterances);  // original order preserved

  Corpus s1 = subsample(c, 50, 1);
  Corpus s1b = subsample(c, 50, 1);
  Corpus s2 = subsample(c, 50, 2);
  CHECK(s1.size() == 50);
  CHECK(s1.utterances == s1b.utterances);
  CHECK(s1.utterances != s2.utterances);  // frozen fixture: seeds 1 vs 2 differ

  // subset property
  for (const auto& u : s1.utterances) {
    CHECK(std::find(c.utterances.begin(), c.utterances.end(), u) != c.utterances.end());
  }

  CHECK_THROWS_AS(subsample(c, 101, 1), Error);
}

TEST_CASE("normalize_token rejects junk and lowercases") {
  CHECK(normalize_token("AbC") == "abc");
  CHECK(normalize_token(normalize_token("AbC")) == "abc");  // idempotent
  CHECK_THROWS_AS(normalize_token(""), Error);
}
