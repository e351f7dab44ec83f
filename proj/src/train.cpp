#include "toprec/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <thread>

#include "toprec/vecmath.hpp"

namespace toprec {

InteractionIndex InteractionIndex::build(const Dataset& train) {
  InteractionIndex idx;
  idx.n_users = train.n_users();
  idx.n_items = train.n_items();
  idx.positives.resize(idx.n_users);
  for (const auto& x : train.interactions)
    idx.positives[train.user_of(x.user)].push_back(train.item_of(x.item));
  for (int u = 0; u < idx.n_users; ++u) {
    auto& p = idx.positives[u];
    std::sort(p.begin(), p.end());
    for (int i : p) idx.positive_pairs.emplace_back(u, i);
  }
  return idx;
}

bool InteractionIndex::is_positive(int user, int item) const {
  const auto& p = positives[user];
  return std::binary_search(p.begin(), p.end(), item);
}

std::vector<int> sample_negatives(int user, const InteractionIndex& idx, int count,
                                  Rng& rng) {
  if (static_cast<int>(idx.positives[user].size()) >= idx.n_items)
    throw std::runtime_error("sample_negatives: user " + std::to_string(user) +
                             " interacted with every item (degenerate)");
  std::vector<int> out;
  out.reserve(count);
  while (static_cast<int>(out.size()) < count) {
    int candidate = rng.below_int(idx.n_items);
    if (!idx.is_positive(user, candidate)) out.push_back(candidate);
  }
  return out;
}

void adam_update(double& param, double grad, double& m, double& v, int32_t& t,
                 const TrainConfig& cfg) {
  ++t;
  m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * grad;
  v = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * grad * grad;
  double mhat = m / (1.0 - std::pow(cfg.adam_beta1, t));
  double vhat = v / (1.0 - std::pow(cfg.adam_beta2, t));
  param -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps);
}

double apply_l2_on_touched(const std::vector<ParamBlock*>& blocks, GradBuffer& gb,
                           double l2) {
  if (l2 == 0.0) return 0.0;
  double term = 0.0;
  for (size_t b = 0; b < blocks.size(); ++b) {
    if (!blocks[b]->regularize) continue;
    // copy: adding gradient rows may extend the touched list
    std::vector<int> rows = gb.touched_rows(static_cast<int>(b));
    for (int r : rows) {
      auto p = blocks[b]->row(r);
      auto g = gb.grad_row(static_cast<int>(b), r);
      for (size_t c = 0; c < p.size(); ++c) {
        term += l2 * p[c] * p[c];
        g[c] += 2.0 * l2 * p[c];
      }
    }
  }
  return term;
}

Trainer::Trainer(RankModel& model, const InteractionIndex& data, TrainConfig cfg)
    : model_(model),
      data_(data),
      cfg_(cfg),
      blocks_(model.param_blocks()),
      pair_rng_(Rng::derive(cfg.seed, "bpr_pairs")),
      aux_rng_(Rng::derive(cfg.seed, "aux_text")),
      hook_rng_(Rng::derive(cfg.seed, "epoch_hook")) {
  gb_.attach(blocks_);
  adam_.resize(blocks_.size());
  for (size_t b = 0; b < blocks_.size(); ++b) {
    adam_[b].m.assign(blocks_[b]->size(), 0.0);
    adam_[b].v.assign(blocks_[b]->size(), 0.0);
    adam_[b].t.assign(blocks_[b]->size(), 0);
  }
}

void Trainer::apply_updates(GradBuffer& gb) {
  for (size_t b = 0; b < blocks_.size(); ++b) {
    ParamBlock* block = blocks_[b];
    int cols = block->cols;
    for (int r : gb.touched_rows(static_cast<int>(b))) {
      auto g = gb.grad_row_const(static_cast<int>(b), r);
      size_t base = static_cast<size_t>(r) * cols;
      if (cfg_.optimizer == Optimizer::kSgd) {
        for (int c = 0; c < cols; ++c) block->v[base + c] -= cfg_.learning_rate * g[c];
      } else {
        auto& st = adam_[b];
        for (int c = 0; c < cols; ++c)
          adam_update(block->v[base + c], g[c], st.m[base + c], st.v[base + c],
                      st.t[base + c], cfg_);
      }
    }
  }
  model_.bump_version();
}

double Trainer::step(const PairBatch& batch) {
  gb_.clear();
  double loss = model_.batch_loss_and_grad(batch, gb_, aux_rng_, /*use_dropout=*/true);
  loss += apply_l2_on_touched(blocks_, gb_, cfg_.l2);
  if (!std::isfinite(loss))
    throw TrainDivergence(
        "non-finite training loss; lower the learning rate (searched range "
        "1e-4..1e-1) or the text weight");
  apply_updates(gb_);
  return loss;
}

std::vector<Triple> Trainer::make_epoch_triples(Rng& pair_rng) {
  std::vector<std::pair<int, int>> order = data_.positive_pairs;
  pair_rng.shuffle(order);
  std::vector<Triple> triples;
  triples.reserve(order.size() * cfg_.negatives_per_positive);
  for (const auto& [u, i] : order)
    for (int neg : sample_negatives(u, data_, cfg_.negatives_per_positive, pair_rng))
      triples.push_back({u, i, neg});
  return triples;
}

double Trainer::run_epoch_shard(const std::vector<Triple>& triples, size_t begin,
                                size_t end, GradBuffer& gb, Rng& aux_rng,
                                size_t* batches) {
  double sum = 0.0;
  for (size_t start = begin; start < end; start += cfg_.batch_size) {
    size_t stop = std::min(end, start + cfg_.batch_size);
    PairBatch batch(triples.begin() + start, triples.begin() + stop);
    gb.clear();
    double loss = model_.batch_loss_and_grad(batch, gb, aux_rng, true);
    loss += apply_l2_on_touched(blocks_, gb, cfg_.l2);
    if (!std::isfinite(loss))
      throw TrainDivergence("non-finite training loss; lower the learning rate");
    apply_updates(gb);
    sum += loss;
    ++*batches;
  }
  return sum;
}

std::vector<EpochLog> Trainer::fit(std::ostream* log) {
  std::vector<EpochLog> history;
  for (int epoch = 1; epoch <= cfg_.epochs; ++epoch) {
    auto start = std::chrono::steady_clock::now();
    std::vector<Triple> triples = make_epoch_triples(pair_rng_);
    double loss_sum = 0.0;
    size_t n_batches = 0;

    if (cfg_.threads <= 1) {
      loss_sum = run_epoch_shard(triples, 0, triples.size(), gb_, aux_rng_, &n_batches);
    } else {
      // Data-parallel epochs: disjoint shards, unsynchronized updates.
      // Deliberately racy; excluded from the bit-exactness guarantees.
      std::vector<std::thread> workers;
      std::vector<double> sums(cfg_.threads, 0.0);
      std::vector<size_t> counts(cfg_.threads, 0);
      std::vector<std::exception_ptr> errors(cfg_.threads);
      size_t shard = (triples.size() + cfg_.threads - 1) / cfg_.threads;
      for (int w = 0; w < cfg_.threads; ++w) {
        workers.emplace_back([&, w] {
          try {
            GradBuffer gb;
            gb.attach(blocks_);
            Rng aux = Rng::derive(cfg_.seed, "aux_text_shard" + std::to_string(w));
            size_t begin = std::min(triples.size(), w * shard);
            size_t end = std::min(triples.size(), (w + 1) * shard);
            sums[w] = run_epoch_shard(triples, begin, end, gb, aux, &counts[w]);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
      for (auto& t : workers) t.join();
      for (auto& e : errors)
        if (e) std::rethrow_exception(e);
      for (int w = 0; w < cfg_.threads; ++w) {
        loss_sum += sums[w];
        n_batches += counts[w];
      }
    }

    model_.end_epoch(hook_rng_);
    auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - start)
                       .count();
    EpochLog entry{epoch, n_batches ? loss_sum / n_batches : 0.0, elapsed};
    history.push_back(entry);
    if (log)
      (*log) << entry.epoch << "\t" << entry.loss << "\t" << entry.elapsed_ms << "\n";
  }
  return history;
}

double gradient_check(RankModel& model, const PairBatch& probe, double l2,
                      double eps, const Rng& aux_rng) {
  std::vector<ParamBlock*> blocks = model.param_blocks();
  GradBuffer gb;
  gb.attach(blocks);

  auto objective = [&](GradBuffer& buf) {
    buf.clear();
    Rng rng = aux_rng;  // identical stream on every evaluation
    double loss = model.batch_loss_and_grad(probe, buf, rng, /*use_dropout=*/false);
    loss += apply_l2_on_touched(blocks, buf, l2);
    return loss;
  };

  objective(gb);  // analytic gradients + touched structure

  GradBuffer scratch;
  scratch.attach(blocks);
  double worst = 0.0;
  for (size_t b = 0; b < blocks.size(); ++b) {
    ParamBlock* block = blocks[b];
    for (int r : gb.touched_rows(static_cast<int>(b))) {
      auto analytic = gb.grad_row_const(static_cast<int>(b), r);
      for (int c = 0; c < block->cols; ++c) {
        double& p = block->at(r, c);
        double saved = p;
        p = saved + eps;
        double up = objective(scratch);
        p = saved - eps;
        double down = objective(scratch);
        p = saved;
        double fd = (up - down) / (2.0 * eps);
        double denom = std::max({std::fabs(analytic[c]), std::fabs(fd), 1e-5});
        worst = std::max(worst, std::fabs(analytic[c] - fd) / denom);
      }
    }
  }
  return worst;
}

}  // namespace toprec
