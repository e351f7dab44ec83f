#include <map>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "toprec/text.hpp"

using namespace toprec;
using namespace toprec::testing;

TEST_SUITE("text") {

TEST_CASE("tokenize lowercases and strips punctuation") {
  CHECK(tokenize("Great product!") == std::vector<std::string>{"great", "product"});
}

TEST_CASE("tokenize drops stopwords") {
  CHECK(tokenize("the of and").empty());
}

TEST_CASE("tokenize splits on non-alphanumeric runs") {
  CHECK(tokenize("USB-C cable") == std::vector<std::string>{"usb", "c", "cable"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("  ...  ").empty());
}

TEST_CASE("vocabulary keeps the top cap-1 tokens by frequency") {
  std::vector<std::vector<std::string>> reviews = {
      {"a", "a", "b", "c"}, {"a", "a", "a", "b", "b"}};
  SUBCASE("large cap keeps everything") {
    Vocabulary v = Vocabulary::build(reviews, Vocabulary::kDefaultCap);
    CHECK(v.size() == 4);  // oov + a, b, c
    CHECK(v.cap() == 50000);
  }
  SUBCASE("cap 3 keeps the two most frequent") {
    Vocabulary v = Vocabulary::build(reviews, 3);
    CHECK(v.size() == 3);
    CHECK(v.id_of("a") == 1);
    CHECK(v.id_of("b") == 2);
    CHECK(v.id_of("c") == Vocabulary::kOovId);
  }
  SUBCASE("frequency ties break lexicographically") {
    std::vector<std::vector<std::string>> tied = {{"zeta", "alpha"}};
    Vocabulary v = Vocabulary::build(tied, 2);
    CHECK(v.id_of("alpha") == 1);
    CHECK(v.id_of("zeta") == Vocabulary::kOovId);
  }
}

TEST_CASE("vocabulary round-trips through its file form") {
  std::vector<std::vector<std::string>> reviews = {{"good", "cable", "good"}};
  Vocabulary v = Vocabulary::build(reviews, 100);
  std::ostringstream out;
  v.write(out, "deadbeef");
  std::istringstream in(out.str());
  std::string split_hash;
  Vocabulary w = Vocabulary::read(in, &split_hash);
  CHECK(split_hash == "deadbeef");
  CHECK(w.size() == v.size());
  CHECK(w.id_of("good") == v.id_of("good"));
  CHECK(w.frequency_of(w.id_of("good")) == 2);
}

namespace {

Split make_text_split() {
  // u0 reviews i0 twice (ts 10 and 20) and i1; u1's only review lands in test.
  std::vector<Interaction> inter = {
      make_interaction("u0", "i0", 5.0, "alpha beta", 20),
      make_interaction("u0", "i1", 5.0, "gamma", 10),
      make_interaction("u0", "i2", 5.0, "delta", 30),
  };
  Dataset ds = Dataset::from_interactions(std::move(inter));
  Split split;
  split.train = ds;
  split.seed = 1;
  split.train_fraction = 0.7;
  return split;
}

}  // namespace

TEST_CASE("documents concatenate train reviews in timestamp order") {
  Split split = make_text_split();
  std::vector<std::vector<std::string>> tokenized;
  for (const auto& x : split.train.interactions) tokenized.push_back(tokenize(x.review));
  Vocabulary vocab = Vocabulary::build(tokenized, 100);

  DocumentBuildOptions opts;
  opts.cap = 1000;
  Document d = build_document("u0", Owner::kUser, split, vocab, opts);
  REQUIRE(d.tokens.size() == 4);
  CHECK(vocab.token_of(d.tokens[0]) == "gamma");  // ts 10 first
  CHECK(vocab.token_of(d.tokens[1]) == "alpha");
  CHECK(vocab.token_of(d.tokens[2]) == "beta");
  CHECK(vocab.token_of(d.tokens[3]) == "delta");
}

TEST_CASE("documents truncate to the cap across review boundaries") {
  std::string long1, long2;
  for (int j = 0; j < 600; ++j) long1 += "aa" + std::to_string(j) + " ";
  for (int j = 0; j < 600; ++j) long2 += "bb" + std::to_string(j) + " ";
  std::vector<Interaction> inter = {
      make_interaction("u0", "i0", 5.0, long1, 1),
      make_interaction("u0", "i1", 5.0, long2, 2),
  };
  Split split;
  split.train = Dataset::from_interactions(std::move(inter));

  std::vector<std::vector<std::string>> tokenized;
  for (const auto& x : split.train.interactions) tokenized.push_back(tokenize(x.review));
  Vocabulary vocab = Vocabulary::build(tokenized, 5000);

  DocumentBuildOptions opts;
  opts.cap = 1000;
  Document d = build_document("u0", Owner::kUser, split, vocab, opts);
  REQUIRE(d.tokens.size() == 1000);
  CHECK(vocab.token_of(d.tokens[0]) == "aa0");
  CHECK(vocab.token_of(d.tokens[599]) == "aa599");
  CHECK(vocab.token_of(d.tokens[600]) == "bb0");
  CHECK(vocab.token_of(d.tokens[999]) == "bb399");
}

TEST_CASE("owners whose reviews all fall in the test split get empty documents") {
  // The Split type carries test pairs without review text, so the only
  // reachable reviews are train-side by construction.
  std::vector<Interaction> inter = {make_interaction("u0", "i0", 5.0, "visible", 1)};
  Split split;
  split.train = Dataset::from_interactions(std::move(inter));
  split.test.emplace_back("u1", "i0");

  Vocabulary vocab = Vocabulary::build({{"visible"}}, 10);
  Document d = build_document("u1", Owner::kUser, split, vocab);
  CHECK(d.tokens.empty());
}

TEST_CASE("document token multiset is a subset of train review tokens") {
  Rng rng(21);
  Dataset ds = random_dataset(8, 6, 1, 5, rng);
  for (auto& x : ds.interactions) x.review = "tok" + x.item + " shared word" + x.user;
  Split split = split_user_level(ds, 0.7, 5);

  std::vector<std::vector<std::string>> tokenized;
  std::map<std::string, int> train_counts;
  for (const auto& x : split.train.interactions) {
    tokenized.push_back(tokenize(x.review));
    for (const auto& t : tokenized.back()) ++train_counts[t];
  }
  Vocabulary vocab = Vocabulary::build(tokenized, 1000);
  DocumentSet docs = build_documents(split, vocab, Owner::kUser);

  std::map<std::string, int> doc_counts;
  for (const auto& d : docs.docs)
    for (int id : d.tokens) ++doc_counts[vocab.token_of(id)];
  for (const auto& [tok, n] : doc_counts) {
    CHECK(train_counts.count(tok));
    CHECK(n <= train_counts[tok]);
  }

  SUBCASE("document files round-trip") {
    std::ostringstream out;
    write_documents(out, docs, "h1");
    std::istringstream in(out.str());
    DocumentSet again = read_documents(in, split.train, Owner::kUser);
    REQUIRE(again.docs.size() == docs.docs.size());
    for (size_t j = 0; j < docs.docs.size(); ++j)
      CHECK(again.docs[j].tokens == docs.docs[j].tokens);
  }
}

TEST_CASE("unknown tokens map to the OOV id") {
  Vocabulary v = Vocabulary::build({{"known"}}, 10);
  CHECK(v.id_of("unknown") == Vocabulary::kOovId);
  CHECK(v.id_of("known") == 1);
}

TEST_CASE("embedding loader infers the dimension and seeds missing rows") {
  Vocabulary v = Vocabulary::build({{"alpha", "beta", "gamma"}}, 10);
  std::istringstream in(
      "alpha 0.5 -0.25 0.125\n"
      "beta 1 2 3\n"
      "stranger 9 9 9\n");
  EmbeddingTable t = load_embeddings(in, v, 7);
  CHECK(t.dim == 3);
  CHECK(t.values.rows == v.size());
  CHECK(t.row(v.id_of("alpha"))[0] == 0.5);
  CHECK(t.row(v.id_of("beta"))[2] == 3.0);
  // gamma missing from the file: seeded uniform(-0.1, 0.1)
  auto g = t.row(v.id_of("gamma"));
  for (double x : g) {
    CHECK(x >= -0.1);
    CHECK(x <= 0.1);
  }
  CHECK((g[0] != 0.0 || g[1] != 0.0 || g[2] != 0.0));

  SUBCASE("ragged rows are rejected") {
    std::istringstream bad("alpha 1 2 3\nbeta 1 2\n");
    CHECK_THROWS(load_embeddings(bad, v, 7));
  }
}

}  // TEST_SUITE
