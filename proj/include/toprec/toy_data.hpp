#pragma once

#include <cstdint>
#include <iosfwd>

namespace toprec {

// Block-structured synthetic corpus: users and items are assigned to
// clusters round-robin, interactions stay within the user's cluster (up to
// the noise probability) and review text deterministically encodes the item
// cluster through a per-cluster token pool. Emitted in the same line-
// delimited record format the parser ingests, since the real datasets
// cannot be redistributed.
struct ToyConfig {
  int n_users = 200;
  int n_items = 100;
  int n_clusters = 10;
  int interactions_per_user = 9;
  double noise_prob = 0.0;
  int review_tokens = 6;        // cluster tokens per review
  int cluster_vocab = 12;       // token pool size per cluster
  uint64_t seed = 1;
};

void write_toy_dataset(std::ostream& out, const ToyConfig& cfg);

}  // namespace toprec
