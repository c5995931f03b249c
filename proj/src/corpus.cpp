#include "slu/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include "slu/rng.hpp"

namespace slu {

std::string normalize_token(const std::string& raw) {
  std::string out;
  out.reserve(raw.size());
  for (unsigned char c : raw) {
    require(!std::isspace(c), "token contains whitespace: '" + raw + "'");
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  require(!out.empty(), "empty token");
  return out;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

namespace {

std::vector<std::string> sorted_distinct(std::set<std::string> s) {
  return std::vector<std::string>(s.begin(), s.end());
}

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), "cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

LabeledUtterance make_utterance(const std::vector<std::string>& raw_tokens,
                                const std::vector<std::string>& tags, const std::string& intent,
                                const std::string& where) {
  require(!raw_tokens.empty(), where + ": no tokens");
  require(raw_tokens.size() == tags.size(),
          where + ": " + std::to_string(raw_tokens.size()) + " tokens but " + std::to_string(tags.size()) +
              " tags");
  require(!intent.empty(), where + ": empty intent");
  LabeledUtterance u;
  for (const auto& t : raw_tokens) u.tokens.push_back(normalize_token(t));
  u.tags = tags;
  u.intent = intent;
  return u;
}

}  // namespace

Corpus Corpus::from_utterances(std::vector<LabeledUtterance> utts) {
  std::set<std::string> intents, slots, words;
  for (const auto& u : utts) {
    require(!u.tokens.empty() && u.tokens.size() == u.tags.size() && !u.intent.empty(),
            "corpus: malformed utterance");
    intents.insert(u.intent);
    for (const auto& t : u.tags) slots.insert(t);
    for (const auto& w : u.tokens) words.insert(w);
  }
  Corpus c;
  c.utterances = std::move(utts);
  c.intent_set = sorted_distinct(std::move(intents));
  c.slot_set = sorted_distinct(std::move(slots));
  c.word_set = sorted_distinct(std::move(words));
  return c;
}

Corpus load_corpus(const std::string& path, CorpusFormat format) {
  std::vector<LabeledUtterance> utts;
  if (format == CorpusFormat::Tsv) {
    auto lines = read_lines(path);
    for (size_t i = 0; i < lines.size(); ++i) {
      if (trim(lines[i]).empty()) continue;
      std::string where = path + ":" + std::to_string(i + 1);
      std::vector<std::string> fields;
      size_t start = 0;
      for (size_t pos = 0; pos <= lines[i].size(); ++pos) {
        if (pos == lines[i].size() || lines[i][pos] == '\t') {
          fields.push_back(lines[i].substr(start, pos - start));
          start = pos + 1;
        }
      }
      require(fields.size() == 3, where + ": expected 3 tab-separated fields, found " +
                                      std::to_string(fields.size()));
      utts.push_back(make_utterance(split_ws(fields[0]), split_ws(fields[1]), trim(fields[2]), where));
    }
    require(!utts.empty(), path + ": no records");
  } else {
    auto tok_lines = read_lines(path + "/seq.in");
    auto tag_lines = read_lines(path + "/seq.out");
    auto intent_lines = read_lines(path + "/label");
    // tolerate one trailing blank line from a final newline
    auto strip_trailing_blank = [](std::vector<std::string>& v) {
      while (!v.empty() && trim(v.back()).empty()) v.pop_back();
    };
    strip_trailing_blank(tok_lines);
    strip_trailing_blank(tag_lines);
    strip_trailing_blank(intent_lines);
    require(tok_lines.size() == tag_lines.size() && tok_lines.size() == intent_lines.size(),
            path + ": seq.in/seq.out/label line counts differ (" + std::to_string(tok_lines.size()) + "/" +
                std::to_string(tag_lines.size()) + "/" + std::to_string(intent_lines.size()) + ")");
    require(!tok_lines.empty(), path + ": no records");
    for (size_t i = 0; i < tok_lines.size(); ++i) {
      std::string where = path + "/seq.in:" + std::to_string(i + 1);
      utts.push_back(
          make_utterance(split_ws(tok_lines[i]), split_ws(tag_lines[i]), trim(intent_lines[i]), where));
    }
  }
  return Corpus::from_utterances(std::move(utts));
}

void save_corpus_tsv(const Corpus& corpus, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  require(f.good(), "cannot open " + path + " for writing");
  for (const auto& u : corpus.utterances) {
    for (size_t i = 0; i < u.tokens.size(); ++i) f << (i ? " " : "") << u.tokens[i];
    f << '\t';
    for (size_t i = 0; i < u.tags.size(); ++i) f << (i ? " " : "") << u.tags[i];
    f << '\t' << u.intent << '\n';
  }
  require(f.good(), "write failed for " + path);
}

Corpus subsample(const Corpus& corpus, size_t n, uint64_t seed) {
  require(n >= 1, "subsample: n must be >= 1");
  require(n <= corpus.size(),
          "subsample: n=" + std::to_string(n) + " exceeds corpus size " + std::to_string(corpus.size()));
  std::vector<size_t> idx(corpus.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(idx);
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  std::vector<LabeledUtterance> utts;
  utts.reserve(n);
  for (size_t i : idx) utts.push_back(corpus.utterances[i]);
  return Corpus::from_utterances(std::move(utts));
}

const std::vector<std::string>& Vocabulary::reserved_tokens() {
  static const std::vector<std::string> kReserved = {"<pad>", "<s>", "</s>", "<unk>", "<?>"};
  return kReserved;
}

Vocabulary Vocabulary::build(const Corpus& corpus, int min_freq) {
  std::vector<std::vector<std::string>> seqs;
  seqs.reserve(corpus.size());
  for (const auto& u : corpus.utterances) seqs.push_back(u.tokens);
  return build_from_sequences(seqs, min_freq);
}

Vocabulary Vocabulary::build_from_sequences(const std::vector<std::vector<std::string>>& seqs,
                                            int min_freq) {
  require(min_freq >= 1, "vocabulary: min_freq must be >= 1");
  require(!seqs.empty(), "vocabulary: empty input");
  std::unordered_map<std::string, int> freq;
  for (const auto& s : seqs) {
    for (const auto& t : s) ++freq[t];
  }
  std::vector<std::pair<std::string, int>> items(freq.begin(), freq.end());
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> order = reserved_tokens();
  for (const auto& [tok, count] : items) {
    if (count >= min_freq) order.push_back(tok);
  }
  return from_tokens(std::move(order));
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> id_order) {
  require(id_order.size() >= static_cast<size_t>(kNumReserved), "vocabulary: missing reserved tokens");
  for (int i = 0; i < kNumReserved; ++i) {
    require(id_order[i] == reserved_tokens()[i], "vocabulary: reserved token order violated");
  }
  Vocabulary v;
  v.by_id_ = std::move(id_order);
  for (size_t i = 0; i < v.by_id_.size(); ++i) {
    auto [it, inserted] = v.to_id_.emplace(v.by_id_[i], static_cast<int>(i));
    require(inserted, "vocabulary: duplicate token '" + v.by_id_[i] + "'");
  }
  return v;
}

int Vocabulary::id(const std::string& token) const {
  auto it = to_id_.find(token);
  return it == to_id_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(const std::string& token) const { return to_id_.count(token) > 0; }

const std::string& Vocabulary::token(int id) const {
  require(id >= 0 && id < size(), "vocabulary: id out of range");
  return by_id_[id];
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

std::vector<std::string> Vocabulary::decode(const std::vector<int>& ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int i : ids) out.push_back(token(i));
  return out;
}

uint64_t Vocabulary::hash() const {
  uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 0x100000001b3ULL;
  };
  for (const auto& t : by_id_) {
    for (unsigned char c : t) mix(c);
    mix('\n');
  }
  return h;
}

}  // namespace slu
