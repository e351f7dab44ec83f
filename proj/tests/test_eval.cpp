#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "toprec/eval.hpp"
#include "toprec/stats.hpp"

using namespace toprec;
using namespace toprec::testing;

namespace {

// Exhaustive ranking oracle written independently of rank_pool: sorts raw
// scores with the tie rule and computes the metrics from first principles.
std::vector<int> oracle_rank(const std::vector<std::pair<double, int>>& scored) {
  auto sorted = scored;
  std::sort(sorted.begin(), sorted.end(), [](auto& a, auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<int> out;
  for (auto& [s, i] : sorted) out.push_back(i);
  return out;
}

double oracle_hr(const std::vector<int>& ranked, const std::vector<int>& test, int K) {
  int hits = 0;
  for (int p = 0; p < K && p < static_cast<int>(ranked.size()); ++p)
    for (int t : test)
      if (ranked[p] == t) ++hits;
  return test.empty() ? 0.0 : static_cast<double>(hits) / test.size();
}

double oracle_ndcg(const std::vector<int>& ranked, const std::vector<int>& test, int K) {
  double dcg = 0.0;
  for (int p = 0; p < K && p < static_cast<int>(ranked.size()); ++p)
    for (int t : test)
      if (ranked[p] == t) dcg += 1.0 / std::log2(p + 2.0);
  double idcg = 0.0;
  for (int p = 0; p < std::min<int>(test.size(), K); ++p) idcg += 1.0 / std::log2(p + 2.0);
  return idcg == 0.0 ? 0.0 : dcg / idcg;
}

Split random_split(Rng& rng, int n_users, int n_items) {
  Dataset ds = random_dataset(n_users, n_items, 2, 6, rng);
  return split_user_level(ds, 0.7, rng.next_u64());
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("hit_rate_at_k examples") {
  CHECK(hit_rate_at_k({7, 1, 2}, {7}, 10) == 1.0);
  CHECK(hit_rate_at_k({5, 9, 3, 8}, {9, 4}, 10) == 0.5);
  CHECK(hit_rate_at_k({1, 2, 3}, {4}, 2) == 0.0);
  CHECK_THROWS(hit_rate_at_k({1}, {1}, 0));
}

TEST_CASE("ndcg_at_k examples") {
  CHECK(ndcg_at_k({4, 1, 2}, {4}, 10) == doctest::Approx(1.0));
  CHECK(ndcg_at_k({1, 2, 4}, {4}, 10) == doctest::Approx(0.5));  // 1/log2(4)
  double expected = (1.0 + 1.0 / std::log2(4.0)) / (1.0 + 1.0 / std::log2(3.0));
  CHECK(ndcg_at_k({8, 1, 9}, {8, 9}, 10) == doctest::Approx(expected).epsilon(1e-9));
  CHECK(expected == doctest::Approx(0.9198).epsilon(1e-3));
}

TEST_CASE("metrics match the brute-force oracle on random instances") {
  Rng rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    int pool_size = 3 + rng.below_int(38);
    int K = 1 + rng.below_int(15);  // sometimes > pool size
    std::vector<std::pair<double, int>> scored;
    for (int i = 0; i < pool_size; ++i) {
      // coarse scores force ties through the index tie-break
      double s = std::floor(rng.uniform(-3, 3) * 4.0) / 4.0;
      scored.emplace_back(s, i);
    }
    std::vector<int> test;
    int n_test = 1 + rng.below_int(5);
    for (int j = 0; j < n_test; ++j) {
      int t = rng.below_int(pool_size);
      if (std::find(test.begin(), test.end(), t) == test.end()) test.push_back(t);
    }
    std::vector<int> ranked = oracle_rank(scored);
    CHECK(std::fabs(hit_rate_at_k(ranked, test, K) - oracle_hr(ranked, test, K)) <
          1e-12);
    CHECK(std::fabs(ndcg_at_k(ranked, test, K) - oracle_ndcg(ranked, test, K)) < 1e-12);
    // nDCG = 1 iff every top-min(|test|, K) slot is a test item
    double nd = ndcg_at_k(ranked, test, K);
    size_t ideal = std::min<size_t>(test.size(), K);
    bool perfect = true;
    for (size_t p = 0; p < ideal; ++p)
      if (std::find(test.begin(), test.end(), ranked[p]) == test.end()) perfect = false;
    CHECK((nd == doctest::Approx(1.0).epsilon(1e-12)) == perfect);
  }
}

TEST_CASE("metrics are invariant to positive affine score transforms") {
  Rng rng(77);
  LatentFactorModel m(5, 20, 4, 19);
  InteractionIndex idx;
  idx.n_users = 5;
  idx.n_items = 20;
  idx.positives.assign(5, {});
  for (int u = 0; u < 5; ++u) {
    auto a = retrieve_top_m(m, u, 20, idx);
    LatentFactorModel scaled = m;
    double alpha = 2.5;
    for (auto& x : scaled.user_factors.v) x *= alpha;
    for (auto& b : scaled.item_bias.v) b *= alpha;
    auto c = retrieve_top_m(scaled, u, 20, idx);
    CHECK(a == c);
  }
}

TEST_CASE("retrieve_top_m") {
  LatentFactorModel m(1, 2, 1, 3);
  m.user_factors.v = {1.0};
  m.item_factors.v = {1.0, 2.0};
  m.item_bias.v = {0.0, 0.0};
  InteractionIndex idx;
  idx.n_users = 1;
  idx.n_items = 2;
  idx.positives = {{}};

  SUBCASE("picks the best item") {
    auto out = retrieve_top_m(m, 0, 1, idx);
    CHECK(out == std::vector<int>{1});
  }
  SUBCASE("M >= catalog returns the full ranking") {
    auto out = retrieve_top_m(m, 0, 100, idx);
    CHECK(out == std::vector<int>{1, 0});
  }
  SUBCASE("train positives are excluded") {
    idx.positives = {{1}};
    auto out = retrieve_top_m(m, 0, 100, idx);
    CHECK(out == std::vector<int>{0});
  }
}

TEST_CASE("retrieval ranking equals a brute-force sort on random models") {
  Rng rng(55);
  for (int trial = 0; trial < 50; ++trial) {
    int n_items = 5 + rng.below_int(30);
    LatentFactorModel m(3, n_items, 3, rng.next_u64());
    InteractionIndex idx;
    idx.n_users = 3;
    idx.n_items = n_items;
    idx.positives.assign(3, {});
    for (int j = 0; j < 3; ++j) {
      int i = rng.below_int(n_items);
      auto& p = idx.positives[rng.below_int(3)];
      if (!std::binary_search(p.begin(), p.end(), i)) {
        p.push_back(i);
        std::sort(p.begin(), p.end());
      }
    }
    int M = 1 + rng.below_int(n_items + 3);
    for (int u = 0; u < 3; ++u) {
      std::vector<std::pair<double, int>> scored;
      for (int i = 0; i < n_items; ++i)
        if (!idx.is_positive(u, i)) scored.emplace_back(score_mf(m, u, i), i);
      auto full = oracle_rank(scored);
      if (full.size() > static_cast<size_t>(M)) full.resize(M);
      CHECK(retrieve_top_m(m, u, M, idx) == full);
    }
  }
}

TEST_CASE("two-stage evaluation with M = |I| equals exhaustive ranking") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    Split split = random_split(rng, 6 + rng.below_int(6), 8 + rng.below_int(10));
    SplitIndex idx = SplitIndex::build(split);
    int n_items = idx.train.n_items;
    MfModel model(idx.train.n_users, n_items, 3, rng.next_u64());
    LatentFactorModel retrieval(idx.train.n_users, n_items, 3, rng.next_u64());

    EvalReport two_stage = evaluate(model, idx, retrieval, 10, n_items);

    // exhaustive oracle: rank the entire catalog minus train positives
    size_t row = 0;
    for (int u = 0; u < idx.train.n_users; ++u) {
      if (idx.test_items[u].empty()) continue;
      std::vector<std::pair<double, int>> scored;
      for (int i = 0; i < n_items; ++i)
        if (!idx.train.is_positive(u, i)) scored.emplace_back(model.score(u, i), i);
      auto ranked = oracle_rank(scored);
      REQUIRE(row < two_stage.users.size());
      CHECK(two_stage.users[row] == u);
      CHECK(two_stage.hr[row] ==
            doctest::Approx(oracle_hr(ranked, idx.test_items[u], 10)).epsilon(1e-12));
      CHECK(two_stage.ndcg[row] ==
            doctest::Approx(oracle_ndcg(ranked, idx.test_items[u], 10)).epsilon(1e-12));
      ++row;
    }
    CHECK(row == two_stage.users.size());
  }
}

TEST_CASE("every test item appears in its user's pool") {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    Split split = random_split(rng, 8, 12);
    SplitIndex idx = SplitIndex::build(split);
    LatentFactorModel retrieval(idx.train.n_users, idx.train.n_items, 3, rng.next_u64());
    auto pools = build_pools(idx, retrieval, 3);  // tiny M forces the union rule
    for (const auto& pool : pools) {
      for (int t : idx.test_items[pool.user]) {
        CHECK(std::find(pool.candidates.begin(), pool.candidates.end(), t) !=
              pool.candidates.end());
      }
      // retrieval portion never contains a train positive
      for (int c : pool.candidates)
        if (!std::count(idx.test_items[pool.user].begin(),
                        idx.test_items[pool.user].end(), c))
          CHECK(!idx.train.is_positive(pool.user, c));
    }
  }
}

TEST_CASE("evaluate requires users with test items and a positive K") {
  Split split;
  split.train = Dataset::from_interactions({make_interaction("u0", "i0")});
  SplitIndex idx = SplitIndex::build(split);
  MfModel model(1, 1, 2, 1);
  LatentFactorModel retrieval(1, 1, 2, 1);
  CHECK_THROWS(evaluate(model, idx, retrieval, 10, 5));
}

TEST_CASE("speed_benchmark: batching does not change scores, timing scales") {
  Rng rng(3);
  LatentFactorModel m(4, 1000, 8, 77);
  InteractionIndex idx;
  idx.n_users = 4;
  idx.n_items = 1000;
  idx.positives.assign(4, {});
  std::vector<CandidatePool> pools;
  for (int u = 0; u < 4; ++u) {
    CandidatePool p;
    p.user = u;
    p.candidates = retrieve_top_m(m, u, 1000, idx);
    pools.push_back(std::move(p));
  }
  double acc1 = 0.0, acc512 = 0.0;
  for (const auto& p : pools)
    for (int i : p.candidates) acc1 += score_mf(m, p.user, i);
  for (const auto& p : pools)
    for (int i : p.candidates) acc512 += score_mf(m, p.user, i);
  CHECK(acc1 == acc512);

  auto scorer = [&](int u, int i) { return score_mf(m, u, i); };
  double t_small = speed_benchmark(scorer, pools, 1, 5);
  double t_large = speed_benchmark(scorer, pools, 512, 5);
  CHECK(t_small > 0.0);
  CHECK(t_large > 0.0);
}

TEST_CASE("eval reports round-trip and feed the comparison table") {
  EvalReport a;
  a.model_id = "bpr-mf";
  a.K = 10;
  a.M = 100;
  a.split_hash = "s1";
  a.config_hash = "c1";
  a.users = {0, 1, 2, 3};
  a.user_ids = {"u0", "u1", "u2", "u3"};
  a.hr = {1.0, 0.5, 0.0, 0.5};
  a.ndcg = {1.0, 0.4, 0.0, 0.3};
  a.mean_hr = mean(a.hr);
  a.mean_ndcg = mean(a.ndcg);

  std::ostringstream out;
  write_eval_report(out, a);
  std::istringstream in(out.str());
  EvalReport b = read_eval_report(in);
  CHECK(b.model_id == a.model_id);
  CHECK(b.split_hash == "s1");
  CHECK(b.hr == a.hr);
  CHECK(b.ndcg == a.ndcg);

  EvalReport c = b;
  c.model_id = "jrl";
  for (auto& x : c.ndcg) x += 0.05;
  std::ostringstream table;
  write_comparison(table, {b, c}, {{"bpr-mf", 4.2e-6}});
  std::string text = table.str();
  CHECK(text.find("bpr-mf\t") != std::string::npos);
  CHECK(text.find("jrl vs") == std::string::npos);  // pair order is (first, second)
  CHECK(text.find("bpr-mf vs jrl") != std::string::npos);
  CHECK(text.find("sec_per_entry") != std::string::npos);

  SUBCASE("mismatched splits are refused") {
    EvalReport d = c;
    d.split_hash = "other";
    std::ostringstream sink;
    CHECK_THROWS(write_comparison(sink, {b, d}, {}));
  }
}

TEST_CASE("permuting the user iteration order leaves the means unchanged") {
  Rng rng(99);
  Split split = random_split(rng, 10, 14);
  SplitIndex idx = SplitIndex::build(split);
  MfModel model(idx.train.n_users, idx.train.n_items, 3, 4);
  LatentFactorModel retrieval(idx.train.n_users, idx.train.n_items, 3, 5);
  EvalReport r = evaluate(model, idx, retrieval, 5, 6);
  // recompute the mean from a shuffled copy of the per-user vector
  std::vector<double> shuffled = r.hr;
  rng.shuffle(shuffled);
  CHECK(mean(shuffled) == doctest::Approx(r.mean_hr).epsilon(1e-12));
}

}  // TEST_SUITE
