#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "toprec/ingest.hpp"
#include "toprec/param.hpp"

namespace toprec {

// Fixed, versioned English stopword list shipped with the project.
const std::vector<std::string>& english_stopwords();

// One token per line; supports the CLI override of the bundled list.
std::unordered_set<std::string> load_stopwords(std::istream& in);

// Lowercase, split on non-alphanumeric runs, drop stopwords and empties.
// The token alphabet is ASCII [a-z0-9]; anything else separates tokens.
std::vector<std::string> tokenize(std::string_view text);
std::vector<std::string> tokenize(std::string_view text,
                                  const std::unordered_set<std::string>& stopwords);

// Token ids are contiguous, id 0 is reserved for out-of-vocabulary. Built
// from train-split reviews only.
class Vocabulary {
 public:
  static constexpr int kOovId = 0;
  static constexpr int kDefaultCap = 50000;

  Vocabulary();

  // Ranks tokens by descending frequency (ties lexicographic) and keeps the
  // top cap-1, leaving slot 0 for OOV.
  static Vocabulary build(const std::vector<std::vector<std::string>>& tokenized_reviews,
                          int cap = kDefaultCap);

  int id_of(const std::string& token) const;  // kOovId when absent
  const std::string& token_of(int id) const { return id_to_token_[id]; }
  int64_t frequency_of(int id) const { return frequencies_[id]; }
  int size() const { return static_cast<int>(id_to_token_.size()); }
  int cap() const { return cap_; }

  void write(std::ostream& out, const std::string& split_hash,
             const std::string& config_hash = "") const;
  static Vocabulary read(std::istream& in, std::string* split_hash = nullptr);

 private:
  std::vector<std::string> id_to_token_;
  std::vector<int64_t> frequencies_;
  std::unordered_map<std::string, int> token_to_id_;
  int cap_ = kDefaultCap;
};

// Token-id sequence for one owner (a user or an item), assembled from the
// owner's train-split reviews only and truncated to the first `cap` tokens
// in ascending interaction-timestamp then input order.
struct Document {
  std::string owner;
  std::vector<int> tokens;
};

enum class Owner { kUser, kItem };

struct DocumentBuildOptions {
  int cap = 1000;
  const std::unordered_set<std::string>* stopwords = nullptr;  // null = bundled list
};

// Documents aligned with the index maps of a Dataset: docs[k] belongs to the
// user (or item) with index k in split.train.
struct DocumentSet {
  Owner owner_kind = Owner::kUser;
  int cap = 0;
  std::vector<Document> docs;

  size_t empty_count() const;
};

DocumentSet build_documents(const Split& split, const Vocabulary& vocab,
                            Owner owner_kind, const DocumentBuildOptions& opts = {});

// Single-owner variant of the same assembly rule.
Document build_document(const std::string& owner, Owner owner_kind,
                        const Split& split, const Vocabulary& vocab,
                        const DocumentBuildOptions& opts = {});

void write_documents(std::ostream& out, const DocumentSet& set,
                     const std::string& split_hash,
                     const std::string& config_hash = "");
DocumentSet read_documents(std::istream& in, const Dataset& train, Owner owner_kind,
                           std::string* split_hash = nullptr);

// vocabulary-size x dim table of word vectors.
struct EmbeddingTable {
  int dim = 0;
  ParamBlock values;  // vocab_size x dim

  std::span<const double> row(int id) const { return values.row(id); }
};

// Whitespace format "token v1 ... vd", dimension inferred from the first
// line and enforced. Vocabulary tokens absent from the file are initialized
// from a seeded uniform(-0.1, 0.1).
EmbeddingTable load_embeddings(std::istream& in, const Vocabulary& vocab,
                               uint64_t seed);

// Seeded random table for runs without a pretrained file.
EmbeddingTable random_embeddings(const Vocabulary& vocab, int dim, uint64_t seed);

}  // namespace toprec
