#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace toprec {

// One (user, item, rating, review, timestamp) tuple, the atom of the
// interaction set. At most one survives per (user, item) pair after dedup.
struct Interaction {
  std::string user;
  std::string item;
  double rating = 0.0;
  std::string review;
  std::optional<int64_t> timestamp;
};

// Interaction corpus with contiguous id maps. users[k] / items[k] is the id
// of index k; the maps are bijections onto 0..n-1.
struct Dataset {
  std::vector<std::string> users;
  std::vector<std::string> items;
  std::unordered_map<std::string, int> user_index;
  std::unordered_map<std::string, int> item_index;
  std::vector<Interaction> interactions;

  static Dataset from_interactions(std::vector<Interaction> inter);

  int n_users() const { return static_cast<int>(users.size()); }
  int n_items() const { return static_cast<int>(items.size()); }
  int user_of(const std::string& id) const;
  int item_of(const std::string& id) const;
};

struct DatasetStats {
  size_t n_users = 0;
  size_t n_items = 0;
  size_t n_interactions = 0;
  double density = 0.0;
};

// User-level train/test partition. Test pairs carry no review text, so
// nothing built from a Split can leak held-out reviews by construction.
struct Split {
  Dataset train;
  std::vector<std::pair<std::string, std::string>> test;
  uint64_t seed = 0;
  double train_fraction = 0.0;
};

struct ParseStats {
  size_t lines = 0;
  size_t parsed = 0;
  size_t skipped_malformed = 0;
  size_t skipped_missing_field = 0;
  size_t skipped_bad_rating = 0;
  size_t deduplicated = 0;

  size_t skipped() const {
    return skipped_malformed + skipped_missing_field + skipped_bad_rating;
  }
};

struct ParseOptions {
  // In strict mode any skippable line aborts with its line number instead.
  bool strict = false;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, size_t line)
      : std::runtime_error(what), line_number(line) {}
  size_t line_number;
};

// Parses line-delimited review records (keys reviewerID, asin, overall,
// reviewText, unixReviewTime; extra keys ignored). Duplicate (user, item)
// pairs collapse to the one with the latest timestamp, ties resolved by
// last occurrence; records without a timestamp sort oldest.
std::vector<Interaction> parse_reviews(std::istream& in, ParseStats& stats,
                                       const ParseOptions& opts = {});

// Iterative pruning to fixed point: repeatedly drop users and items with
// fewer than k interactions. k = 0 is the identity.
Dataset k_core_filter(const Dataset& ds, int k);

// Seeded per-user shuffle; the first ceil(train_fraction * n) interactions
// of each user go to train, the remainder to test. Deterministic given the
// seed and independent of user iteration order.
Split split_user_level(const Dataset& ds, double train_fraction, uint64_t seed);

DatasetStats dataset_stats(const Dataset& ds);

// --- split manifest -------------------------------------------------------
//
// Text audit artifact: header with seed/fraction/counts and a content hash,
// then one user<TAB>item<TAB>partition line per pair. Re-loading a manifest
// against the parsed interactions reproduces the Split exactly.

struct SplitManifest {
  uint64_t seed = 0;
  double train_fraction = 0.0;
  int k_core = 0;
  std::string config_hash;
  uint64_t content_hash = 0;
  // (user, item, is_train) in file order.
  std::vector<std::tuple<std::string, std::string, bool>> pairs;
};

void write_split_manifest(std::ostream& out, const Split& split, int k_core,
                          const std::string& config_hash);
SplitManifest read_split_manifest(std::istream& in);

// Rebuilds the Split from a manifest plus the deduplicated interactions of
// the raw corpus. Throws if a manifest pair is missing from the corpus.
Split reassemble_split(const SplitManifest& manifest,
                       const std::vector<Interaction>& interactions);

uint64_t manifest_content_hash(const SplitManifest& manifest);

}  // namespace toprec
