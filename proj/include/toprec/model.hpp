#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "toprec/param.hpp"
#include "toprec/rng.hpp"

namespace toprec {

// One BPR training example: a user, an observed item and a sampled
// unobserved item.
struct Triple {
  int user;
  int pos_item;
  int neg_item;
};

using PairBatch = std::vector<Triple>;

// Per-batch gradient storage mirroring a model's parameter blocks. Rows are
// touch-tracked so sparse batches clear and update in O(touched).
class GradBuffer {
 public:
  void attach(const std::vector<ParamBlock*>& blocks);
  void clear();

  // Marks the row touched and returns its gradient row.
  std::span<double> grad_row(int block, int row);
  void add(int block, int row, int col, double g) { grad_row(block, row)[col] += g; }

  const std::vector<ParamBlock*>& blocks() const { return blocks_; }
  size_t n_blocks() const { return blocks_.size(); }
  const std::vector<int>& touched_rows(int block) const {
    return slots_[block].touched_list;
  }
  std::span<const double> grad_row_const(int block, int row) const {
    const auto& s = slots_[block];
    return {s.g.data() + static_cast<size_t>(row) * blocks_[block]->cols,
            static_cast<size_t>(blocks_[block]->cols)};
  }

 private:
  struct Slot {
    std::vector<double> g;
    std::vector<uint8_t> touched;
    std::vector<int> touched_list;
  };
  std::vector<ParamBlock*> blocks_;
  std::vector<Slot> slots_;
};

// Common contract of every trainable ranker: a pure score for inference and
// a batched loss/gradient evaluation for the pairwise training engine. The
// returned loss covers the BPR data term plus any model-specific auxiliary
// (text) term; L2 is applied centrally by the engine.
class RankModel {
 public:
  virtual ~RankModel() = default;

  virtual std::string kind() const = 0;
  virtual int num_users() const = 0;
  virtual int num_items() const = 0;
  virtual int latent_dim() const = 0;

  // Inference-mode score, dropout off. Pure; safe for concurrent readers.
  virtual double score(int user, int item) const = 0;

  virtual std::vector<ParamBlock*> param_blocks() = 0;

  // Mean BPR loss over the batch plus the model's auxiliary term, gradients
  // accumulated into gb. aux_rng drives text negative sampling and dropout
  // masks; with use_dropout = false the evaluation is deterministic given
  // the rng state (required by the finite-difference checker).
  virtual double batch_loss_and_grad(const PairBatch& batch, GradBuffer& gb,
                                     Rng& aux_rng, bool use_dropout) = 0;

  // Hook run by the training engine after every epoch (topic-model phase).
  virtual void end_epoch(Rng& /*rng*/) {}

  // Bumped on every parameter mutation; representation caches check it.
  uint64_t version() const { return version_; }
  void bump_version() { ++version_; }

 private:
  uint64_t version_ = 0;
};

// d(-log sigmoid(y_pos - y_neg)). Returns the clamped loss term and writes
// the exact d/d(y_pos) coefficient (the y_neg coefficient is its negation).
double bpr_pair_loss(double y_pos, double y_neg, double* dpos);

// sigma(y_pos - y_neg), the probability that the user prefers the observed
// item over the sampled one.
double pairwise_probability(double y_pos, double y_neg);

}  // namespace toprec
