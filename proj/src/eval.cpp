#include "toprec/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "toprec/stats.hpp"

namespace toprec {

SplitIndex SplitIndex::build(const Split& split) {
  SplitIndex idx;
  idx.train = InteractionIndex::build(split.train);
  idx.test_items.resize(idx.train.n_users);
  for (const auto& [user, item] : split.test) {
    int u = split.train.user_of(user);
    int i = split.train.item_of(item);
    if (u < 0) continue;  // split invariant: every test user appears in train
    if (i < 0) {
      ++idx.unscoreable_test_pairs;
      continue;
    }
    idx.test_items[u].push_back(i);
  }
  for (auto& t : idx.test_items) std::sort(t.begin(), t.end());
  return idx;
}

std::vector<int> retrieve_top_m(const LatentFactorModel& retrieval, int user, int M,
                                const InteractionIndex& train) {
  std::vector<std::pair<double, int>> scored;
  scored.reserve(train.n_items);
  for (int i = 0; i < train.n_items; ++i)
    if (!train.is_positive(user, i)) scored.emplace_back(score_mf(retrieval, user, i), i);

  auto better = [](const std::pair<double, int>& a, const std::pair<double, int>& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  };
  size_t top = std::min<size_t>(M, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + top, scored.end(), better);

  std::vector<int> out;
  out.reserve(top);
  for (size_t r = 0; r < top; ++r) out.push_back(scored[r].second);
  return out;
}

double hit_rate_at_k(const std::vector<int>& ranked, const std::vector<int>& test_items,
                     int K) {
  if (K <= 0) throw std::invalid_argument("K must be positive");
  if (test_items.empty()) return 0.0;
  std::unordered_set<int> test(test_items.begin(), test_items.end());
  size_t hits = 0;
  size_t upto = std::min<size_t>(K, ranked.size());
  for (size_t p = 0; p < upto; ++p)
    if (test.count(ranked[p])) ++hits;
  return static_cast<double>(hits) / static_cast<double>(test.size());
}

double hit_any_at_k(const std::vector<int>& ranked, const std::vector<int>& test_items,
                    int K) {
  if (K <= 0) throw std::invalid_argument("K must be positive");
  std::unordered_set<int> test(test_items.begin(), test_items.end());
  size_t upto = std::min<size_t>(K, ranked.size());
  for (size_t p = 0; p < upto; ++p)
    if (test.count(ranked[p])) return 1.0;
  return 0.0;
}

double ndcg_at_k(const std::vector<int>& ranked, const std::vector<int>& test_items,
                 int K) {
  if (K <= 0) throw std::invalid_argument("K must be positive");
  if (test_items.empty()) return 0.0;
  std::unordered_set<int> test(test_items.begin(), test_items.end());
  double dcg = 0.0;
  size_t upto = std::min<size_t>(K, ranked.size());
  for (size_t p = 0; p < upto; ++p)
    if (test.count(ranked[p])) dcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
  double idcg = 0.0;
  size_t ideal = std::min<size_t>(test.size(), K);
  for (size_t p = 0; p < ideal; ++p) idcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
  return idcg == 0.0 ? 0.0 : dcg / idcg;
}

std::vector<int> rank_pool(const RankModel& model, int user, std::vector<int> pool) {
  std::vector<std::pair<double, int>> scored;
  scored.reserve(pool.size());
  for (int i : pool) scored.emplace_back(model.score(user, i), i);
  std::sort(scored.begin(), scored.end(),
            [](const std::pair<double, int>& a, const std::pair<double, int>& b) {
              if (a.first != b.first) return a.first > b.first;
              return a.second < b.second;
            });
  std::vector<int> out;
  out.reserve(scored.size());
  for (auto& [s, i] : scored) out.push_back(i);
  return out;
}

std::vector<CandidatePool> build_pools(const SplitIndex& split,
                                       const LatentFactorModel& retrieval, int M) {
  std::vector<CandidatePool> pools;
  for (int u = 0; u < split.train.n_users; ++u) {
    if (split.test_items[u].empty()) continue;
    CandidatePool pool;
    pool.user = u;
    pool.candidates = retrieve_top_m(retrieval, u, M, split.train);
    std::unordered_set<int> present(pool.candidates.begin(), pool.candidates.end());
    for (int t : split.test_items[u])
      if (!present.count(t)) pool.candidates.push_back(t);
    pools.push_back(std::move(pool));
  }
  return pools;
}

EvalReport evaluate(const RankModel& model, const SplitIndex& split,
                    const LatentFactorModel& retrieval, int K, int M,
                    const EvalOptions& opts) {
  if (K <= 0) throw std::invalid_argument("evaluate: K must be positive");
  std::vector<CandidatePool> pools = build_pools(split, retrieval, M);
  if (pools.empty()) throw std::runtime_error("evaluate: no users with test items");

  EvalReport report;
  report.model_id = model.kind();
  report.K = K;
  report.M = M;
  report.unscoreable_test_pairs = split.unscoreable_test_pairs;
  report.users.resize(pools.size());
  report.hr.resize(pools.size());
  report.ndcg.resize(pools.size());

  auto eval_range = [&](size_t begin, size_t end) {
    for (size_t j = begin; j < end; ++j) {
      const auto& pool = pools[j];
      std::vector<int> ranked = rank_pool(model, pool.user, pool.candidates);
      const auto& test = split.test_items[pool.user];
      report.users[j] = pool.user;
      report.hr[j] = opts.hr_any ? hit_any_at_k(ranked, test, K)
                                 : hit_rate_at_k(ranked, test, K);
      report.ndcg[j] = ndcg_at_k(ranked, test, K);
    }
  };
  if (opts.threads <= 1) {
    eval_range(0, pools.size());
  } else {
    // read-only scorer, disjoint output slots; reduction order is fixed
    std::vector<std::thread> workers;
    size_t shard = (pools.size() + opts.threads - 1) / opts.threads;
    for (int w = 0; w < opts.threads; ++w)
      workers.emplace_back(eval_range, std::min(pools.size(), w * shard),
                           std::min(pools.size(), (w + 1) * shard));
    for (auto& t : workers) t.join();
  }
  report.mean_hr = mean(report.hr);
  report.mean_ndcg = mean(report.ndcg);
  if (opts.measure_time) {
    auto scorer = [&](int u, int i) { return model.score(u, i); };
    report.seconds_per_entry =
        speed_benchmark(scorer, pools, opts.batch_size, opts.time_reps);
  }
  return report;
}

double speed_benchmark(const std::function<double(int, int)>& scorer,
                       const std::vector<CandidatePool>& pools, int batch_size,
                       int reps) {
  if (batch_size <= 0) throw std::invalid_argument("batch_size must be positive");
  size_t entries = 0;
  for (const auto& p : pools) entries += p.candidates.size();
  if (entries == 0) return 0.0;

  volatile double sink = 0.0;  // keep the scoring loop alive under -O2
  auto pass = [&] {
    double acc = 0.0;
    for (const auto& pool : pools) {
      size_t n = pool.candidates.size();
      for (size_t start = 0; start < n; start += batch_size) {
        size_t stop = std::min(n, start + batch_size);
        for (size_t j = start; j < stop; ++j) acc += scorer(pool.user, pool.candidates[j]);
      }
    }
    sink = acc;
  };

  pass();  // warm-up
  std::vector<double> samples;
  for (int r = 0; r < std::max(5, reps); ++r) {
    auto t0 = std::chrono::steady_clock::now();
    pass();
    auto t1 = std::chrono::steady_clock::now();
    samples.push_back(std::chrono::duration<double>(t1 - t0).count() /
                      static_cast<double>(entries));
  }
  std::sort(samples.begin(), samples.end());
  return samples[samples.size() / 2];
}

// --- report files ------------------------------------------------------------

namespace {

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", x);
  return buf;
}

std::string fmt_p(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

}  // namespace

void write_eval_report(std::ostream& out, const EvalReport& r) {
  out << "# eval-report v1\n";
  out << "# model\t" << r.model_id << "\n";
  out << "# split\t" << r.split_hash << "\n";
  out << "# config\t" << r.config_hash << "\n";
  out << "# K\t" << r.K << "\n";
  out << "# M\t" << r.M << "\n";
  out << "# users\t" << r.users.size() << "\n";
  out << "# unscoreable_test_pairs\t" << r.unscoreable_test_pairs << "\n";
  out << "# mean_hr\t" << fmt(r.mean_hr) << "\n";
  out << "# mean_ndcg\t" << fmt(r.mean_ndcg) << "\n";
  if (r.seconds_per_entry)
    out << "# sec_per_entry\t" << fmt_p(*r.seconds_per_entry) << "\n";
  for (size_t j = 0; j < r.users.size(); ++j) {
    const std::string& id =
        r.user_ids.empty() ? std::to_string(r.users[j]) : r.user_ids[j];
    out << id << "\t" << fmt(r.hr[j]) << "\t" << fmt(r.ndcg[j]) << "\n";
  }
}

EvalReport read_eval_report(std::istream& in) {
  EvalReport r;
  std::string line;
  int next_index = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ls(line.substr(1));
      std::string key;
      ls >> key;
      if (key == "model") ls >> r.model_id;
      else if (key == "split") ls >> r.split_hash;
      else if (key == "config") ls >> r.config_hash;
      else if (key == "K") ls >> r.K;
      else if (key == "M") ls >> r.M;
      else if (key == "unscoreable_test_pairs") ls >> r.unscoreable_test_pairs;
      else if (key == "sec_per_entry") {
        double s;
        ls >> s;
        r.seconds_per_entry = s;
      }
      continue;
    }
    std::istringstream ls(line);
    std::string id;
    double hr, ndcg;
    if (!(ls >> id >> hr >> ndcg))
      throw std::runtime_error("eval report: bad per-user line: " + line);
    r.user_ids.push_back(id);
    r.users.push_back(next_index++);
    r.hr.push_back(hr);
    r.ndcg.push_back(ndcg);
  }
  if (r.users.empty()) throw std::runtime_error("eval report: no per-user rows");
  r.mean_hr = mean(r.hr);
  r.mean_ndcg = mean(r.ndcg);
  return r;
}

void write_per_user_dump(std::ostream& out, const EvalReport& r) {
  out << "user\tHR@" << r.K << "\tnDCG@" << r.K << "\n";
  for (size_t j = 0; j < r.users.size(); ++j) {
    const std::string& id =
        r.user_ids.empty() ? std::to_string(r.users[j]) : r.user_ids[j];
    out << id << "\t" << fmt(r.hr[j]) << "\t" << fmt(r.ndcg[j]) << "\n";
  }
}

std::vector<SignificanceLine> significance_block(const std::vector<EvalReport>& reports,
                                                 double alpha) {
  std::vector<SignificanceLine> lines;
  for (size_t a = 0; a < reports.size(); ++a) {
    for (size_t b = a + 1; b < reports.size(); ++b) {
      if (reports[a].user_ids != reports[b].user_ids &&
          reports[a].users != reports[b].users)
        throw std::runtime_error("significance: reports cover different user sets");
      auto tt_hr = paired_t_test(reports[a].hr, reports[b].hr);
      auto tt_nd = paired_t_test(reports[a].ndcg, reports[b].ndcg);
      std::string pair = reports[a].model_id + " vs " + reports[b].model_id;
      lines.push_back({pair, "HR", tt_hr.t, tt_hr.p, tt_hr.p < alpha});
      lines.push_back({pair, "nDCG", tt_nd.t, tt_nd.p, tt_nd.p < alpha});
    }
  }
  return lines;
}

void write_comparison(std::ostream& out, const std::vector<EvalReport>& reports,
                      const std::vector<std::pair<std::string, double>>& latencies,
                      double alpha) {
  if (reports.size() < 2)
    throw std::runtime_error("comparison needs at least two eval reports");
  for (size_t j = 1; j < reports.size(); ++j) {
    if (reports[j].split_hash != reports[0].split_hash)
      throw std::runtime_error("comparison: reports come from different splits");
    if (reports[j].K != reports[0].K)
      throw std::runtime_error("comparison: reports use different K");
  }

  auto latency_of = [&](const std::string& model) -> std::string {
    for (const auto& [id, sec] : latencies)
      if (id == model) return fmt_p(sec);
    return "-";
  };

  int K = reports[0].K;
  out << "# comparison v1\n";
  out << "# split\t" << reports[0].split_hash << "\n";
  out << "model\tHR@" << K << "\tnDCG@" << K << "\tsec_per_entry\n";
  for (const auto& r : reports)
    out << r.model_id << "\t" << fmt(r.mean_hr) << "\t" << fmt(r.mean_ndcg) << "\t"
        << latency_of(r.model_id) << "\n";

  out << "# significance (paired t-test)\n";
  out << "pair\tmetric\tt\tp\tsignificant@" << fmt_p(alpha) << "\n";
  for (const auto& line : significance_block(reports, alpha)) {
    char metric[32];
    std::snprintf(metric, sizeof(metric), "%s@%d", line.metric.c_str(), K);
    out << line.pair << "\t" << metric << "\t" << fmt_p(line.t) << "\t"
        << fmt_p(line.p) << "\t" << (line.significant ? "yes" : "no") << "\n";
  }
}

}  // namespace toprec
