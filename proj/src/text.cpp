#include "toprec/text.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace toprec {

std::unordered_set<std::string> load_stopwords(std::istream& in) {
  std::unordered_set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n'))
      line.pop_back();
    if (!line.empty()) out.insert(line);
  }
  return out;
}

namespace {

const std::unordered_set<std::string>& bundled_stopword_set() {
  static const std::unordered_set<std::string> kSet(english_stopwords().begin(),
                                                    english_stopwords().end());
  return kSet;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text,
                                  const std::unordered_set<std::string>& stopwords) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty() && !stopwords.count(cur)) out.push_back(cur);
    cur.clear();
  };
  for (unsigned char c : text) {
    if (c < 0x80 && std::isalnum(c))
      cur.push_back(static_cast<char>(std::tolower(c)));
    else
      flush();
  }
  flush();
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  return tokenize(text, bundled_stopword_set());
}

Vocabulary::Vocabulary() {
  id_to_token_.push_back("<oov>");
  frequencies_.push_back(0);
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& tokenized_reviews,
                             int cap) {
  if (cap < 1) throw std::invalid_argument("vocabulary cap must be >= 1");
  // Ordered map gives the lexicographic tie-break for free.
  std::map<std::string, int64_t> counts;
  for (const auto& review : tokenized_reviews)
    for (const auto& tok : review) ++counts[tok];

  std::vector<std::pair<std::string, int64_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  Vocabulary v;
  v.cap_ = cap;
  for (const auto& [tok, freq] : ranked) {
    if (v.size() >= cap) break;
    v.token_to_id_.emplace(tok, v.size());
    v.id_to_token_.push_back(tok);
    v.frequencies_.push_back(freq);
  }
  return v;
}

int Vocabulary::id_of(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kOovId : it->second;
}

void Vocabulary::write(std::ostream& out, const std::string& split_hash,
                       const std::string& config_hash) const {
  out << "# vocab v1\n";
  out << "# split\t" << split_hash << "\n";
  if (!config_hash.empty()) out << "# config\t" << config_hash << "\n";
  out << "# cap\t" << cap_ << "\n";
  out << "# size\t" << size() << "\n";
  for (int id = 0; id < size(); ++id)
    out << id << "\t" << id_to_token_[id] << "\t" << frequencies_[id] << "\n";
}

Vocabulary Vocabulary::read(std::istream& in, std::string* split_hash) {
  Vocabulary v;
  v.id_to_token_.clear();
  v.frequencies_.clear();
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ls(line.substr(1));
      std::string key;
      ls >> key;
      if (key == "split" && split_hash) ls >> *split_hash;
      if (key == "cap") ls >> v.cap_;
      continue;
    }
    size_t t1 = line.find('\t');
    size_t t2 = line.find('\t', t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos)
      throw std::runtime_error("vocab: bad line: " + line);
    int id = std::stoi(line.substr(0, t1));
    std::string tok = line.substr(t1 + 1, t2 - t1 - 1);
    int64_t freq = std::stoll(line.substr(t2 + 1));
    if (id != v.size()) throw std::runtime_error("vocab: ids out of order");
    v.id_to_token_.push_back(tok);
    v.frequencies_.push_back(freq);
    if (id != kOovId) v.token_to_id_.emplace(tok, id);
  }
  if (v.size() == 0) throw std::runtime_error("vocab: empty file");
  return v;
}

size_t DocumentSet::empty_count() const {
  size_t n = 0;
  for (const auto& d : docs)
    if (d.tokens.empty()) ++n;
  return n;
}

namespace {

struct ReviewRef {
  int64_t timestamp;  // missing sorts oldest
  size_t seq;
  const std::string* text;
};

std::vector<int> assemble_tokens(std::vector<ReviewRef>& reviews,
                                 const Vocabulary& vocab,
                                 const std::unordered_set<std::string>& stopwords,
                                 int cap) {
  std::stable_sort(reviews.begin(), reviews.end(),
                   [](const ReviewRef& a, const ReviewRef& b) {
                     if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
                     return a.seq < b.seq;
                   });
  std::vector<int> tokens;
  for (const auto& r : reviews) {
    if (static_cast<int>(tokens.size()) >= cap) break;
    for (const auto& tok : tokenize(*r.text, stopwords)) {
      if (static_cast<int>(tokens.size()) >= cap) break;
      tokens.push_back(vocab.id_of(tok));
    }
  }
  return tokens;
}

}  // namespace

DocumentSet build_documents(const Split& split, const Vocabulary& vocab,
                            Owner owner_kind, const DocumentBuildOptions& opts) {
  const auto& stopwords =
      opts.stopwords ? *opts.stopwords : bundled_stopword_set();
  const Dataset& train = split.train;
  int n = owner_kind == Owner::kUser ? train.n_users() : train.n_items();

  std::vector<std::vector<ReviewRef>> grouped(n);
  for (size_t idx = 0; idx < train.interactions.size(); ++idx) {
    const Interaction& x = train.interactions[idx];
    int owner = owner_kind == Owner::kUser ? train.user_of(x.user)
                                           : train.item_of(x.item);
    grouped[owner].push_back(
        {x.timestamp.value_or(INT64_MIN), idx, &x.review});
  }

  DocumentSet set;
  set.owner_kind = owner_kind;
  set.cap = opts.cap;
  set.docs.resize(n);
  for (int o = 0; o < n; ++o) {
    set.docs[o].owner =
        owner_kind == Owner::kUser ? train.users[o] : train.items[o];
    set.docs[o].tokens = assemble_tokens(grouped[o], vocab, stopwords, opts.cap);
  }
  return set;
}

Document build_document(const std::string& owner, Owner owner_kind,
                        const Split& split, const Vocabulary& vocab,
                        const DocumentBuildOptions& opts) {
  const auto& stopwords =
      opts.stopwords ? *opts.stopwords : bundled_stopword_set();
  std::vector<ReviewRef> reviews;
  for (size_t idx = 0; idx < split.train.interactions.size(); ++idx) {
    const Interaction& x = split.train.interactions[idx];
    const std::string& key = owner_kind == Owner::kUser ? x.user : x.item;
    if (key == owner)
      reviews.push_back({x.timestamp.value_or(INT64_MIN), idx, &x.review});
  }
  Document d;
  d.owner = owner;
  d.tokens = assemble_tokens(reviews, vocab, stopwords, opts.cap);
  return d;
}

void write_documents(std::ostream& out, const DocumentSet& set,
                     const std::string& split_hash,
                     const std::string& config_hash) {
  out << "# docs v1\n";
  out << "# split\t" << split_hash << "\n";
  if (!config_hash.empty()) out << "# config\t" << config_hash << "\n";
  out << "# owner\t" << (set.owner_kind == Owner::kUser ? "user" : "item") << "\n";
  out << "# cap\t" << set.cap << "\n";
  for (const auto& d : set.docs) {
    out << d.owner << "\t";
    for (size_t j = 0; j < d.tokens.size(); ++j) {
      if (j) out << ' ';
      out << d.tokens[j];
    }
    out << "\n";
  }
}

DocumentSet read_documents(std::istream& in, const Dataset& train, Owner owner_kind,
                           std::string* split_hash) {
  DocumentSet set;
  set.owner_kind = owner_kind;
  int n = owner_kind == Owner::kUser ? train.n_users() : train.n_items();
  set.docs.resize(n);
  std::vector<char> seen(n, 0);

  std::string line;
  std::string file_owner_kind;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ls(line.substr(1));
      std::string key;
      ls >> key;
      if (key == "split" && split_hash) ls >> *split_hash;
      if (key == "owner") ls >> file_owner_kind;
      if (key == "cap") ls >> set.cap;
      continue;
    }
    size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error("docs: bad line: " + line);
    std::string owner = line.substr(0, tab);
    int idx = owner_kind == Owner::kUser ? train.user_of(owner) : train.item_of(owner);
    if (idx < 0)
      throw std::runtime_error("docs: owner " + owner + " not in the train split");
    seen[idx] = 1;
    Document& d = set.docs[idx];
    d.owner = owner;
    std::istringstream ts(line.substr(tab + 1));
    int tok;
    while (ts >> tok) d.tokens.push_back(tok);
  }
  std::string expected = owner_kind == Owner::kUser ? "user" : "item";
  if (!file_owner_kind.empty() && file_owner_kind != expected)
    throw std::runtime_error("docs: owner kind mismatch, expected " + expected);
  for (int o = 0; o < n; ++o)
    if (!seen[o])
      throw std::runtime_error("docs: missing document for train owner index " +
                               std::to_string(o));
  return set;
}

EmbeddingTable random_embeddings(const Vocabulary& vocab, int dim, uint64_t seed) {
  EmbeddingTable t;
  t.dim = dim;
  t.values = ParamBlock("word_embeddings", vocab.size(), dim);
  Rng rng = Rng::derive(seed, "word_embeddings");
  t.values.init_uniform(rng, -0.1, 0.1);
  return t;
}

EmbeddingTable load_embeddings(std::istream& in, const Vocabulary& vocab,
                               uint64_t seed) {
  int dim = -1;
  std::vector<std::pair<int, std::vector<double>>> rows;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string token;
    ls >> token;
    std::vector<double> vals;
    double x;
    while (ls >> x) vals.push_back(x);
    if (dim < 0) {
      dim = static_cast<int>(vals.size());
      if (dim == 0) throw std::runtime_error("embeddings: first line has no values");
    } else if (static_cast<int>(vals.size()) != dim) {
      throw std::runtime_error("embeddings: dimension mismatch at line " +
                               std::to_string(line_no));
    }
    int id = vocab.id_of(token);
    if (id != Vocabulary::kOovId) rows.emplace_back(id, std::move(vals));
  }
  if (dim < 0) throw std::runtime_error("embeddings: empty file");

  EmbeddingTable t = random_embeddings(vocab, dim, seed);
  for (auto& [id, vals] : rows)
    std::copy(vals.begin(), vals.end(), t.values.row(id).begin());
  return t;
}

}  // namespace toprec
