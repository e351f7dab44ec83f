#include "toprec/text_reg.hpp"

#include <algorithm>
#include <cmath>

#include "toprec/vecmath.hpp"

namespace toprec {

TopicState::TopicState(int K, int V, uint64_t seed)
    : K(K),
      V(V),
      phi_logits("phi_logits", K, V, /*reg=*/false),
      kappa("kappa", 1, 1, /*reg=*/false) {
  Rng rng = Rng::derive(seed, "phi_logits");
  phi_logits.init_uniform(rng, -0.1, 0.1);
  kappa.v[0] = 1.0;
}

std::vector<double> TopicState::compute_phi() const {
  std::vector<double> phi = phi_logits.v;
  for (int k = 0; k < K; ++k)
    softmax_inplace({phi.data() + static_cast<size_t>(k) * V, static_cast<size_t>(V)});
  return phi;
}

std::vector<double> item_topic_distribution(std::span<const double> item_factor,
                                            double kappa) {
  std::vector<double> theta(item_factor.size());
  for (size_t k = 0; k < theta.size(); ++k) theta[k] = kappa * item_factor[k];
  softmax_inplace(theta);
  return theta;
}

CorpusNll corpus_negative_log_likelihood(const DocumentSet& docs,
                                         const std::vector<std::vector<double>>& thetas,
                                         const std::vector<double>& phi, int K, int V) {
  CorpusNll out;
  for (size_t d = 0; d < docs.docs.size(); ++d) {
    const auto& theta = thetas[d];
    for (int w : docs.docs[d].tokens) {
      double s = 0.0;
      for (int k = 0; k < K; ++k) s += theta[k] * phi[static_cast<size_t>(k) * V + w];
      if (s < 1e-12) {
        s = 1e-12;
        ++out.floored_tokens;
      }
      out.nll -= std::log(s);
    }
  }
  return out;
}

void gibbs_resample_assignments(TopicState& state, const DocumentSet& docs,
                                const std::vector<std::vector<double>>& thetas,
                                Rng& rng, bool hard) {
  std::vector<double> phi = state.compute_phi();
  int K = state.K, V = state.V;
  state.assignments.resize(docs.docs.size());
  std::vector<double> p(K);
  for (size_t d = 0; d < docs.docs.size(); ++d) {
    const auto& theta = thetas[d];
    auto& z = state.assignments[d];
    z.resize(docs.docs[d].tokens.size());
    for (size_t n = 0; n < z.size(); ++n) {
      int w = docs.docs[d].tokens[n];
      double total = 0.0;
      for (int k = 0; k < K; ++k) {
        p[k] = theta[k] * phi[static_cast<size_t>(k) * V + w];
        total += p[k];
      }
      if (hard || total <= 0.0) {
        z[n] = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
      } else {
        double r = rng.real01() * total;
        int pick = K - 1;
        double acc = 0.0;
        for (int k = 0; k < K; ++k) {
          acc += p[k];
          if (r < acc) {
            pick = k;
            break;
          }
        }
        z[n] = pick;
      }
    }
  }
}

void reestimate_phi(TopicState& state, const DocumentSet& docs, double smoothing) {
  int K = state.K, V = state.V;
  std::vector<double> counts(static_cast<size_t>(K) * V, smoothing);
  for (size_t d = 0; d < docs.docs.size(); ++d) {
    const auto& z = state.assignments[d];
    for (size_t n = 0; n < z.size(); ++n)
      counts[static_cast<size_t>(z[n]) * V + docs.docs[d].tokens[n]] += 1.0;
  }
  for (int k = 0; k < K; ++k) {
    double row_sum = 0.0;
    for (int v = 0; v < V; ++v) row_sum += counts[static_cast<size_t>(k) * V + v];
    for (int v = 0; v < V; ++v) {
      double p = counts[static_cast<size_t>(k) * V + v] / row_sum;
      state.phi_logits.at(k, v) = std::log(p);
    }
  }
}

double joint_objective(double bpr_loss, double text_term, double lambda_text,
                       double l2_term) {
  return bpr_loss + lambda_text * text_term + l2_term;
}

// Shared BPR data term over a LatentFactorModel laid out in gb blocks
// 0 = user factors, 1 = item factors, 2 = item bias.
static double bpr_mf_batch(const LatentFactorModel& lfm, const PairBatch& batch,
                           GradBuffer& gb) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (const Triple& t : batch) {
    double dpos;
    loss += bpr_pair_loss(score_mf(lfm, t.user, t.pos_item),
                          score_mf(lfm, t.user, t.neg_item), &dpos);
    double c = dpos * inv_n;
    auto u = lfm.user_factors.row(t.user);
    auto gi = lfm.item_factors.row(t.pos_item);
    auto gj = lfm.item_factors.row(t.neg_item);
    auto du = gb.grad_row(0, t.user);
    auto dgi = gb.grad_row(1, t.pos_item);
    auto dgj = gb.grad_row(1, t.neg_item);
    for (int k = 0; k < lfm.d; ++k) {
      du[k] += c * (gi[k] - gj[k]);
      dgi[k] += c * u[k];
      dgj[k] -= c * u[k];
    }
    gb.grad_row(2, t.pos_item)[0] += c;
    gb.grad_row(2, t.neg_item)[0] -= c;
  }
  return loss * inv_n;
}

// --- HftModel ----------------------------------------------------------------

HftModel::HftModel(int n_users, int n_items, int d, uint64_t seed,
                   std::shared_ptr<const DocumentSet> item_docs, int vocab_size,
                   double lambda_text, double smoothing, int resample_every)
    : lfm_(n_users, n_items, d, seed),
      state_(d, vocab_size, seed),
      item_docs_(std::move(item_docs)),
      lambda_(lambda_text),
      smoothing_(smoothing),
      resample_every_(resample_every) {
  if (static_cast<int>(item_docs_->docs.size()) != n_items)
    throw std::invalid_argument("HftModel: item documents misaligned with items");
}

std::vector<ParamBlock*> HftModel::param_blocks() {
  return {&lfm_.user_factors, &lfm_.item_factors, &lfm_.item_bias, &state_.kappa,
          &state_.phi_logits};
}

void HftModel::item_thetas(std::vector<std::vector<double>>& out) const {
  out.resize(lfm_.n_items());
  for (int i = 0; i < lfm_.n_items(); ++i)
    out[i] = item_topic_distribution(lfm_.item_factors.row(i), state_.kappa.v[0]);
}

// Mixture NLL of one item document plus its gradients. Per token w with
// s = sum_k theta_k phi_kw, the logit gradient is phi_kv * R_k minus the
// token-level responsibilities, the factor gradient kappa theta_m (S - A_m)
// and the kappa gradient gbar * S - sum_k R_k gamma_k.
static double hft_doc_nll_grad(std::span<const double> item_factor, double kappa,
                               const std::vector<double>& phi, int K, int V,
                               const std::vector<int>& tokens, double scale,
                               std::span<double> d_factor, double* d_kappa,
                               GradBuffer* gb, int phi_block) {
  std::vector<double> theta = item_topic_distribution(item_factor, kappa);
  std::vector<double> A(K, 0.0), R(K, 0.0);
  double nll = 0.0;
  for (int w : tokens) {
    double s = 0.0;
    for (int k = 0; k < K; ++k) s += theta[k] * phi[static_cast<size_t>(k) * V + w];
    s = std::max(s, 1e-300);
    nll -= std::log(std::max(s, 1e-12));
    for (int k = 0; k < K; ++k) {
      double pw = phi[static_cast<size_t>(k) * V + w];
      A[k] += pw / s;
      double r = theta[k] * pw / s;
      R[k] += r;
      if (gb) gb->grad_row(phi_block, k)[w] -= scale * r;
    }
  }
  if (gb) {
    for (int k = 0; k < K; ++k) {
      auto g = gb->grad_row(phi_block, k);
      const double* phi_k = phi.data() + static_cast<size_t>(k) * V;
      for (int v = 0; v < V; ++v) g[v] += scale * phi_k[v] * R[k];
    }
  }
  double S = 0.0, gbar = 0.0, rg = 0.0;
  for (int k = 0; k < K; ++k) {
    S += A[k] * theta[k];
    gbar += theta[k] * item_factor[k];
    rg += R[k] * item_factor[k];
  }
  for (int k = 0; k < K; ++k)
    d_factor[k] += scale * kappa * (theta[k] * S - R[k]);
  if (d_kappa) *d_kappa += scale * (gbar * S - rg);
  return nll;
}

double HftModel::batch_loss_and_grad(const PairBatch& batch, GradBuffer& gb,
                                     Rng&, bool) {
  double loss = bpr_mf_batch(lfm_, batch, gb);
  if (lambda_ == 0.0) return loss;

  const std::vector<double> phi = state_.compute_phi();
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  const int K = state_.K, V = state_.V;
  double text_term = 0.0;
  for (const Triple& t : batch) {
    const auto& tokens = item_docs_->docs[t.pos_item].tokens;
    if (tokens.empty()) continue;
    double scale = lambda_ * inv_n / static_cast<double>(tokens.size());
    double dk = 0.0;
    double nll = hft_doc_nll_grad(lfm_.item_factors.row(t.pos_item),
                                  state_.kappa.v[0], phi, K, V, tokens, scale,
                                  gb.grad_row(1, t.pos_item), &dk, &gb, 4);
    gb.grad_row(3, 0)[0] += dk;
    text_term += nll / static_cast<double>(tokens.size());
  }
  return loss + lambda_ * text_term * inv_n;
}

void HftModel::end_epoch(Rng& rng) {
  if (lambda_ == 0.0) return;
  if (++epochs_seen_ % resample_every_ != 0) return;
  std::vector<std::vector<double>> thetas;
  item_thetas(thetas);
  gibbs_resample_assignments(state_, *item_docs_, thetas, rng, /*hard=*/false);
  reestimate_phi(state_, *item_docs_, smoothing_);
  bump_version();
}

double HftModel::corpus_nll() const {
  std::vector<std::vector<double>> thetas;
  item_thetas(thetas);
  return corpus_negative_log_likelihood(*item_docs_, thetas, state_.compute_phi(),
                                        state_.K, state_.V)
      .nll;
}

double HftModel::hard_alternating_round(double lr) {
  const int K = state_.K, V = state_.V;
  const std::vector<double> phi = state_.compute_phi();

  // Gradient of the corpus NLL with respect to the item factors, with a
  // backtracking step so this half of the round never increases the NLL.
  std::vector<double> grad(lfm_.item_factors.size(), 0.0);
  for (int i = 0; i < lfm_.n_items(); ++i) {
    const auto& tokens = item_docs_->docs[i].tokens;
    if (tokens.empty()) continue;
    hft_doc_nll_grad(lfm_.item_factors.row(i), state_.kappa.v[0], phi, K, V, tokens,
                     1.0, {grad.data() + static_cast<size_t>(i) * K, static_cast<size_t>(K)},
                     nullptr, nullptr, 0);
  }
  double before = corpus_nll();
  std::vector<double> saved = lfm_.item_factors.v;
  double step = lr;
  for (int attempt = 0; attempt < 30; ++attempt) {
    for (size_t j = 0; j < grad.size(); ++j)
      lfm_.item_factors.v[j] = saved[j] - step * grad[j];
    if (corpus_nll() <= before) break;
    lfm_.item_factors.v = saved;
    step *= 0.5;
  }

  std::vector<std::vector<double>> thetas;
  item_thetas(thetas);
  Rng unused(0);
  gibbs_resample_assignments(state_, *item_docs_, thetas, unused, /*hard=*/true);
  reestimate_phi(state_, *item_docs_, smoothing_);
  bump_version();
  return corpus_nll();
}

// --- UnigramSampler ------------------------------------------------------------

UnigramSampler::UnigramSampler(const std::vector<int64_t>& counts) {
  double acc = 0.0;
  for (size_t id = 1; id < counts.size(); ++id) {
    if (counts[id] <= 0) continue;
    acc += static_cast<double>(counts[id]);
    cum_.push_back(acc);
    ids_.push_back(static_cast<int>(id));
  }
}

UnigramSampler UnigramSampler::from_vocab(const Vocabulary& vocab) {
  std::vector<int64_t> counts(vocab.size());
  for (int id = 0; id < vocab.size(); ++id) counts[id] = vocab.frequency_of(id);
  return UnigramSampler(counts);
}

int UnigramSampler::sample(Rng& rng) const {
  if (cum_.empty()) throw std::runtime_error("UnigramSampler: no in-vocabulary mass");
  double r = rng.real01() * cum_.back();
  size_t lo = std::lower_bound(cum_.begin(), cum_.end(), r) - cum_.begin();
  if (lo >= ids_.size()) lo = ids_.size() - 1;
  return ids_[lo];
}

// --- pv loss -------------------------------------------------------------------

// Core accumulation shared by the op-shaped wrapper and the JRL batch path.
template <typename WordGrad>
static double pv_loss_core(std::span<const double> owner, const ParamBlock& emb,
                           const std::vector<int>& tokens,
                           const std::vector<int>& negatives, int negs_per_token,
                           double scale, std::span<double> d_owner,
                           WordGrad&& d_word) {
  double loss = 0.0;
  const int d = emb.cols;
  for (size_t n = 0; n < tokens.size(); ++n) {
    int w = tokens[n];
    auto ew = emb.row(w);
    double p = sigmoid(dot(owner, ew));
    loss -= std::log(std::clamp(p, 1e-12, 1.0 - 1e-12));
    double c = (p - 1.0) * scale;
    auto gw = d_word(w);
    for (int k = 0; k < d; ++k) {
      d_owner[k] += c * ew[k];
      gw[k] += c * owner[k];
    }
    for (int j = 0; j < negs_per_token; ++j) {
      int wn = negatives[n * negs_per_token + j];
      auto en = emb.row(wn);
      double pn = sigmoid(-dot(owner, en));
      loss -= std::log(std::clamp(pn, 1e-12, 1.0 - 1e-12));
      double cn = (1.0 - pn) * scale;
      auto gn = d_word(wn);
      for (int k = 0; k < d; ++k) {
        d_owner[k] += cn * en[k];
        gn[k] += cn * owner[k];
      }
    }
  }
  return loss;
}

PvLoss pv_text_loss(std::span<const double> owner_factor, const Document& doc,
                    const EmbeddingTable& embeddings, int negatives_per_token,
                    const UnigramSampler& unigram, Rng& rng) {
  PvLoss out;
  out.d_owner.assign(owner_factor.size(), 0.0);
  if (doc.tokens.empty()) return out;

  int negs = unigram.empty() ? 0 : negatives_per_token;
  std::vector<int> negatives;
  negatives.reserve(doc.tokens.size() * negs);
  for (size_t n = 0; n < doc.tokens.size() * static_cast<size_t>(negs); ++n)
    negatives.push_back(unigram.sample(rng));

  std::vector<std::vector<double>> word_grads;
  std::vector<int> word_ids;
  std::unordered_map<int, size_t> word_slot;
  auto d_word = [&](int w) -> std::span<double> {
    auto [it, fresh] = word_slot.try_emplace(w, word_grads.size());
    if (fresh) {
      word_grads.emplace_back(embeddings.dim, 0.0);
      word_ids.push_back(w);
    }
    return {word_grads[it->second].data(), word_grads[it->second].size()};
  };
  out.loss = pv_loss_core(owner_factor, embeddings.values, doc.tokens, negatives,
                          negs, 1.0, out.d_owner, d_word);
  for (size_t s = 0; s < word_ids.size(); ++s)
    out.d_words.emplace_back(word_ids[s], std::move(word_grads[s]));
  return out;
}

// --- JrlModel --------------------------------------------------------------------

JrlModel::JrlModel(int n_users, int n_items, int d, uint64_t seed,
                   std::shared_ptr<const DocumentSet> user_docs,
                   std::shared_ptr<const DocumentSet> item_docs,
                   const std::vector<int64_t>& unigram_counts, double lambda_text,
                   int negatives_per_token)
    : lfm_(n_users, n_items, d, seed),
      user_docs_(std::move(user_docs)),
      item_docs_(std::move(item_docs)),
      unigram_(unigram_counts),
      lambda_(lambda_text),
      negatives_per_token_(negatives_per_token) {
  if (static_cast<int>(user_docs_->docs.size()) != n_users ||
      static_cast<int>(item_docs_->docs.size()) != n_items)
    throw std::invalid_argument("JrlModel: documents misaligned with id maps");
  emb_.dim = d;
  emb_.values = ParamBlock("word_embeddings", static_cast<int>(unigram_counts.size()), d);
  Rng rng = Rng::derive(seed, "word_embeddings");
  emb_.values.init_uniform(rng, -0.1, 0.1);
}

void JrlModel::init_embeddings_from(const EmbeddingTable& pretrained, uint64_t seed) {
  if (pretrained.values.rows != emb_.values.rows)
    throw std::invalid_argument("pretrained table does not match the vocabulary");
  if (pretrained.dim == emb_.dim) {
    emb_.values.v = pretrained.values.v;
    return;
  }
  // Seeded linear projection into the shared d-dimensional space.
  Rng rng = Rng::derive(seed, "embedding_projection");
  double span = 1.0 / std::sqrt(static_cast<double>(pretrained.dim));
  std::vector<double> proj(static_cast<size_t>(emb_.dim) * pretrained.dim);
  for (auto& x : proj) x = rng.uniform(-span, span);
  for (int w = 0; w < emb_.values.rows; ++w) {
    auto src = pretrained.values.row(w);
    auto dst = emb_.values.row(w);
    for (int k = 0; k < emb_.dim; ++k)
      dst[k] = dot({proj.data() + static_cast<size_t>(k) * pretrained.dim,
                    static_cast<size_t>(pretrained.dim)},
                   src);
  }
}

std::vector<ParamBlock*> JrlModel::param_blocks() {
  return {&lfm_.user_factors, &lfm_.item_factors, &lfm_.item_bias, &emb_.values};
}

double JrlModel::batch_loss_and_grad(const PairBatch& batch, GradBuffer& gb,
                                     Rng& aux_rng, bool) {
  double loss = bpr_mf_batch(lfm_, batch, gb);
  if (lambda_ == 0.0) return loss;

  const double inv_n = 1.0 / static_cast<double>(batch.size());
  const int negs = unigram_.empty() ? 0 : negatives_per_token_;
  double text_term = 0.0;
  std::vector<int> negatives;
  auto add_side = [&](std::span<const double> owner, int owner_block, int owner_row,
                      const std::vector<int>& tokens) {
    if (tokens.empty()) return;
    double per_token = inv_n * lambda_ / static_cast<double>(tokens.size());
    negatives.clear();
    for (size_t n = 0; n < tokens.size() * static_cast<size_t>(negs); ++n)
      negatives.push_back(unigram_.sample(aux_rng));
    auto d_word = [&](int w) { return gb.grad_row(3, w); };
    double l = pv_loss_core(owner, emb_.values, tokens, negatives, negs, per_token,
                            gb.grad_row(owner_block, owner_row), d_word);
    text_term += l / static_cast<double>(tokens.size());
  };
  for (const Triple& t : batch) {
    add_side(lfm_.user_factors.row(t.user), 0, t.user, user_docs_->docs[t.user].tokens);
    add_side(lfm_.item_factors.row(t.pos_item), 1, t.pos_item,
             item_docs_->docs[t.pos_item].tokens);
  }
  return loss + lambda_ * text_term * inv_n;
}

}  // namespace toprec
