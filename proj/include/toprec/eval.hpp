#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "toprec/core_models.hpp"
#include "toprec/train.hpp"

namespace toprec {

// Retrieval output for one user, unioned with the ground-truth test items.
struct CandidatePool {
  int user = 0;
  std::vector<int> candidates;
};

// Index-space view of a Split for evaluation: the train positives plus each
// user's test items mapped into the train item universe. Test pairs whose
// item never occurs in train cannot be scored and are counted, not ranked.
struct SplitIndex {
  InteractionIndex train;
  std::vector<std::vector<int>> test_items;  // per user
  size_t unscoreable_test_pairs = 0;

  static SplitIndex build(const Split& split);
};

// Top M items by retrieval score, train positives excluded, ties broken by
// ascending item index; returns everything when fewer than M items exist.
std::vector<int> retrieve_top_m(const LatentFactorModel& retrieval, int user, int M,
                                const InteractionIndex& train);

// Per-user recall@K: |top-K hits| / |test items|.
double hit_rate_at_k(const std::vector<int>& ranked, const std::vector<int>& test_items,
                     int K);
// Strict binary variant: 1 if any test item is in the top K.
double hit_any_at_k(const std::vector<int>& ranked, const std::vector<int>& test_items,
                    int K);
double ndcg_at_k(const std::vector<int>& ranked, const std::vector<int>& test_items,
                 int K);

// Sorts the pool by model score (descending, ties by ascending item index).
std::vector<int> rank_pool(const RankModel& model, int user,
                           std::vector<int> pool);

struct EvalOptions {
  bool hr_any = false;      // strict any-hit variant behind a flag
  bool measure_time = false;  // fills seconds_per_entry (non-deterministic)
  int batch_size = 512;
  int time_reps = 5;
  // Users shard across this many workers with a read-only scorer; the
  // reduction is deterministic (fixed user order) so results are identical
  // to the single-threaded path.
  int threads = 1;
};

struct EvalReport {
  std::string model_id;
  int K = 10;
  int M = 1000;
  std::string split_hash;
  std::string config_hash;
  std::vector<int> users;  // evaluated user indices
  std::vector<std::string> user_ids;
  std::vector<double> hr;
  std::vector<double> ndcg;
  double mean_hr = 0.0;
  double mean_ndcg = 0.0;
  size_t unscoreable_test_pairs = 0;
  std::optional<double> seconds_per_entry;
};

// Two-stage protocol: pool = retrieval top-M union ground truth, reranked by
// the evaluated model; HR@K and nDCG@K averaged over users with at least one
// scoreable test item.
EvalReport evaluate(const RankModel& model, const SplitIndex& split,
                    const LatentFactorModel& retrieval, int K, int M,
                    const EvalOptions& opts = {});

// Builds the per-user pools once so several models can be timed on identical
// input (required for the latency comparison).
std::vector<CandidatePool> build_pools(const SplitIndex& split,
                                       const LatentFactorModel& retrieval, int M);

// Median over `reps` repetitions of scoring every pool entry in batches of
// batch_size, divided by the number of entries. A warm-up pass runs first.
double speed_benchmark(const std::function<double(int, int)>& scorer,
                       const std::vector<CandidatePool>& pools, int batch_size = 512,
                       int reps = 5);

void write_eval_report(std::ostream& out, const EvalReport& report);
EvalReport read_eval_report(std::istream& in);
void write_per_user_dump(std::ostream& out, const EvalReport& report);

struct SignificanceLine {
  std::string pair;
  std::string metric;
  double t;
  double p;
  bool significant;  // at the 0.01 level
};

// Comparison table over >= 2 reports from the same split, with a paired
// t-test block for every model pair on both metrics.
void write_comparison(std::ostream& out, const std::vector<EvalReport>& reports,
                      const std::vector<std::pair<std::string, double>>& latencies,
                      double alpha = 0.01);
std::vector<SignificanceLine> significance_block(const std::vector<EvalReport>& reports,
                                                 double alpha = 0.01);

}  // namespace toprec
