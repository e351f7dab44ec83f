#pragma once

#include <memory>
#include <vector>

#include "toprec/core_models.hpp"
#include "toprec/text.hpp"

namespace toprec {

// Topic-word distributions parameterized by unnormalized logits, peakiness
// kappa and per-token topic assignments. K equals the latent dimension (one
// topic per factor dimension). Logits and kappa are simplex/scale
// parameters and are excluded from L2.
struct TopicState {
  int K = 0;
  int V = 0;
  ParamBlock phi_logits;  // K x V
  ParamBlock kappa;       // 1 x 1
  std::vector<std::vector<int>> assignments;  // aligned with the item docs

  TopicState() = default;
  TopicState(int K, int V, uint64_t seed);

  // Row-softmax of the logits: K x V, rows on the simplex.
  std::vector<double> compute_phi() const;
};

// softmax(kappa * factor): the item's topic mixture.
std::vector<double> item_topic_distribution(std::span<const double> item_factor,
                                            double kappa);

struct CorpusNll {
  double nll = 0.0;
  size_t floored_tokens = 0;  // tokens whose mixture probability hit the floor
};

// -sum over tokens of log(sum_k theta_k * phi_k,w); empty corpus -> 0.
// Token probabilities below 1e-12 are floored and counted.
CorpusNll corpus_negative_log_likelihood(const DocumentSet& docs,
                                         const std::vector<std::vector<double>>& thetas,
                                         const std::vector<double>& phi, int K, int V);

// Resamples every token's topic with probability proportional to
// theta_k * phi_k,w; hard mode takes the argmax instead.
void gibbs_resample_assignments(TopicState& state, const DocumentSet& docs,
                                const std::vector<std::vector<double>>& thetas,
                                Rng& rng, bool hard = false);

// Normalized topic-word counts from the assignments with additive
// smoothing; logits are reset to log(phi) so the softmax reproduces the
// re-estimated rows exactly.
void reestimate_phi(TopicState& state, const DocumentSet& docs, double smoothing);

// total = bpr + lambda_text * text + l2.
double joint_objective(double bpr_loss, double text_term, double lambda_text,
                       double l2_term);

// BPR-HFT: matrix factorization whose item factors double as topic mixtures
// of an LDA-style model over the item documents. Inference is plain MF.
class HftModel : public RankModel {
 public:
  HftModel(int n_users, int n_items, int d, uint64_t seed,
           std::shared_ptr<const DocumentSet> item_docs, int vocab_size,
           double lambda_text, double smoothing = 0.01, int resample_every = 1);

  std::string kind() const override { return "bpr-hft"; }
  int num_users() const override { return lfm_.n_users(); }
  int num_items() const override { return lfm_.n_items(); }
  int latent_dim() const override { return lfm_.d; }
  double score(int user, int item) const override { return score_mf(lfm_, user, item); }
  std::vector<ParamBlock*> param_blocks() override;
  double batch_loss_and_grad(const PairBatch& batch, GradBuffer& gb, Rng& aux_rng,
                             bool use_dropout) override;
  void end_epoch(Rng& rng) override;

  LatentFactorModel& factors() { return lfm_; }
  TopicState& topics() { return state_; }
  double lambda_text() const { return lambda_; }

  double corpus_nll() const;
  // Test-mode alternating round on the corpus NLL alone: a backtracking
  // gradient step on the item factors, then hard reassignment and phi
  // re-estimation. Returns the NLL after the round.
  double hard_alternating_round(double lr);

 private:
  void item_thetas(std::vector<std::vector<double>>& out) const;

  LatentFactorModel lfm_;
  TopicState state_;
  std::shared_ptr<const DocumentSet> item_docs_;
  double lambda_ = 0.0;
  double smoothing_ = 0.01;
  int resample_every_ = 1;
  int epochs_seen_ = 0;
};

// Frequency-proportional sampler over in-vocabulary token ids (OOV
// excluded), used for negative words.
class UnigramSampler {
 public:
  UnigramSampler() = default;
  explicit UnigramSampler(const std::vector<int64_t>& counts);
  static UnigramSampler from_vocab(const Vocabulary& vocab);

  bool empty() const { return cum_.empty(); }
  int sample(Rng& rng) const;

 private:
  std::vector<double> cum_;
  std::vector<int> ids_;
};

struct PvLoss {
  double loss = 0.0;
  std::vector<double> d_owner;
  std::vector<std::pair<int, std::vector<double>>> d_words;
};

// Skip-gram style generative loss of a document given its owner's factor:
// -sum_w [log sigma(v.e_w) + sum_neg log sigma(-v.e_w')], negatives drawn
// from the unigram sampler. Empty documents cost 0 with zero gradients.
PvLoss pv_text_loss(std::span<const double> owner_factor, const Document& doc,
                    const EmbeddingTable& embeddings, int negatives_per_token,
                    const UnigramSampler& unigram, Rng& rng);

// JRL-style model: BPR-MF plus the paragraph-vector loss tying the shared
// user/item factors to trainable d-dimensional word embeddings. Inference
// is plain MF.
class JrlModel : public RankModel {
 public:
  JrlModel(int n_users, int n_items, int d, uint64_t seed,
           std::shared_ptr<const DocumentSet> user_docs,
           std::shared_ptr<const DocumentSet> item_docs,
           const std::vector<int64_t>& unigram_counts, double lambda_text,
           int negatives_per_token = 5);

  std::string kind() const override { return "jrl"; }
  int num_users() const override { return lfm_.n_users(); }
  int num_items() const override { return lfm_.n_items(); }
  int latent_dim() const override { return lfm_.d; }
  double score(int user, int item) const override { return score_mf(lfm_, user, item); }
  std::vector<ParamBlock*> param_blocks() override;
  double batch_loss_and_grad(const PairBatch& batch, GradBuffer& gb, Rng& aux_rng,
                             bool use_dropout) override;

  // Projects pretrained vectors into the d-dimensional shared space with a
  // seeded linear map; embeddings train freely afterwards.
  void init_embeddings_from(const EmbeddingTable& pretrained, uint64_t seed);

  LatentFactorModel& factors() { return lfm_; }
  EmbeddingTable& embeddings() { return emb_; }
  double lambda_text() const { return lambda_; }

 private:
  LatentFactorModel lfm_;
  EmbeddingTable emb_;
  std::shared_ptr<const DocumentSet> user_docs_;
  std::shared_ptr<const DocumentSet> item_docs_;
  UnigramSampler unigram_;
  double lambda_ = 0.0;
  int negatives_per_token_ = 5;
};

}  // namespace toprec
