#pragma once

#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "toprec/ingest.hpp"
#include "toprec/model.hpp"

namespace toprec {

enum class Optimizer { kSgd, kAdam };

struct TrainConfig {
  double learning_rate = 0.01;
  double l2 = 0.001;
  int negatives_per_positive = 5;
  int epochs = 20;
  int batch_size = 512;
  Optimizer optimizer = Optimizer::kAdam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  uint64_t seed = 42;
  // 1 = deterministic single-threaded (the only mode with bit-exactness
  // guarantees); >1 shards epochs across workers with unsynchronized
  // parameter updates.
  int threads = 1;
};

// Index-space view of split.train used by sampling and evaluation: per-user
// positives with O(log) membership tests.
struct InteractionIndex {
  int n_users = 0;
  int n_items = 0;
  std::vector<std::vector<int>> positives;        // per user, sorted
  std::vector<std::pair<int, int>> positive_pairs;  // flattened (u, i)

  static InteractionIndex build(const Dataset& train);
  bool is_positive(int user, int item) const;
};

// Uniform draws from the complement of the user's train positives, rejection
// resampled; duplicates across the count draws are allowed. Throws for the
// degenerate user who interacted with every item.
std::vector<int> sample_negatives(int user, const InteractionIndex& idx, int count,
                                  Rng& rng);

class TrainDivergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EpochLog {
  int epoch;
  double loss;
  long long elapsed_ms;
};

// Per-entry Adam state kept lazily so sparse rows are bias-corrected with
// their own step counts.
struct AdamState {
  std::vector<double> m, v;
  std::vector<int32_t> t;
};

// Standard bias-corrected Adam update of a single entry.
void adam_update(double& param, double grad, double& m, double& v, int32_t& t,
                 const TrainConfig& cfg);

// BPR pairwise training engine. Owns optimizer state; parameters are owned
// by the model and mutated only through step().
class Trainer {
 public:
  Trainer(RankModel& model, const InteractionIndex& data, TrainConfig cfg);

  // One optimizer step on a batch. Returns the batch objective (mean BPR
  // data term + model auxiliary term + L2 over touched parameters).
  double step(const PairBatch& batch);

  // Full training run; writes "epoch<TAB>loss<TAB>elapsed_ms" lines when a
  // log stream is given. Epoch loss is the mean of batch objectives.
  std::vector<EpochLog> fit(std::ostream* log = nullptr);

  const TrainConfig& config() const { return cfg_; }

 private:
  void apply_updates(GradBuffer& gb);
  std::vector<Triple> make_epoch_triples(Rng& pair_rng);
  double run_epoch_shard(const std::vector<Triple>& triples, size_t begin,
                         size_t end, GradBuffer& gb, Rng& aux_rng, size_t* batches);

  RankModel& model_;
  const InteractionIndex& data_;
  TrainConfig cfg_;
  std::vector<ParamBlock*> blocks_;
  std::vector<AdamState> adam_;
  GradBuffer gb_;
  Rng pair_rng_;
  Rng aux_rng_;
  Rng hook_rng_;
};

// Adds the L2 term over rows touched in gb to the loss and its gradient to
// gb. Blocks flagged regularize = false are skipped.
double apply_l2_on_touched(const std::vector<ParamBlock*>& blocks, GradBuffer& gb,
                           double l2);

// Central-difference check of the full batch objective (data + aux + L2)
// against the analytic gradients, over every touched parameter entry.
// aux_rng is reset to the given state for every evaluation so the objective
// is a deterministic function of the parameters. Returns the worst relative
// error, with a small-denominator floor of 1e-5.
double gradient_check(RankModel& model, const PairBatch& probe, double l2,
                      double eps, const Rng& aux_rng);

}  // namespace toprec
