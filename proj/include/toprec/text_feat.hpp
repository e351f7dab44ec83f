#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "toprec/model.hpp"
#include "toprec/text.hpp"

namespace toprec {

// TextCNN-style document encoder: embed, valid convolution of width
// `window`, relu, max-pool over positions, dropout (train only), linear
// projection to out_dim. Documents shorter than the window are padded with
// OOV tokens.
struct ConvEncoder {
  int vocab_size = 0;
  int word_dim = 0;
  int window = 3;
  int n_filters = 100;
  int out_dim = 0;
  double dropout = 0.5;

  ParamBlock emb;          // vocab_size x word_dim (trainable copy)
  ParamBlock filters;      // n_filters x (window * word_dim)
  ParamBlock filter_bias;  // n_filters x 1
  ParamBlock proj;         // out_dim x n_filters
  ParamBlock proj_bias;    // out_dim x 1

  ConvEncoder() = default;
  ConvEncoder(const std::string& name, int vocab_size, int word_dim, int window,
              int n_filters, int out_dim, double dropout, uint64_t seed);

  // Seeds the embedding rows from a pretrained table: first out columns if
  // the pretrained dimension is wider, seeded random fill otherwise.
  void init_embeddings_from(const EmbeddingTable& pretrained, uint64_t seed);

  std::vector<ParamBlock*> blocks();
};

// Forward state for the backward pass.
struct EncodeTape {
  std::vector<int> padded;            // tokens after OOV padding
  std::vector<double> conv;           // n_filters x positions, pre-relu
  std::vector<int> argmax;            // winning position per filter
  std::vector<double> pooled;         // after relu+pool, before dropout
  std::vector<double> pooled_dropped; // after dropout (== pooled when off)
  std::vector<double> mask;           // empty when dropout off
};

std::vector<double> encode(const ConvEncoder& enc, const Document& doc,
                           bool train_mode = false, Rng* rng = nullptr,
                           EncodeTape* tape = nullptr);

// Accumulates parameter gradients through the tape into the five blocks of
// the encoder, addressed by grad_of(block index within ConvEncoder::blocks(),
// row).
using EncGradSink = std::function<std::span<double>(int block, int row)>;
void encode_backward(const ConvEncoder& enc, const EncodeTape& tape,
                     std::span<const double> upstream, const EncGradSink& grad_of);

// Full text-as-feature scorer: separate user and item encoders (asymmetric)
// plus an item bias; score = bias_i + <encode_u(doc_u), encode_i(doc_i)>.
class TextCnnModel : public RankModel {
 public:
  TextCnnModel(int n_users, int n_items, int d, uint64_t seed,
               std::shared_ptr<const DocumentSet> user_docs,
               std::shared_ptr<const DocumentSet> item_docs, int vocab_size,
               int word_dim, int window, int n_filters, double dropout);

  std::string kind() const override { return "text-cnn"; }
  int num_users() const override { return n_users_; }
  int num_items() const override { return n_items_; }
  int latent_dim() const override { return d_; }
  double score(int user, int item) const override;
  std::vector<ParamBlock*> param_blocks() override;
  double batch_loss_and_grad(const PairBatch& batch, GradBuffer& gb, Rng& aux_rng,
                             bool use_dropout) override;

  ConvEncoder& user_encoder() { return user_enc_; }
  ConvEncoder& item_encoder() { return item_enc_; }
  const ConvEncoder& user_encoder() const { return user_enc_; }
  const ConvEncoder& item_encoder() const { return item_enc_; }
  ParamBlock& item_bias() { return item_bias_; }
  const ParamBlock& item_bias() const { return item_bias_; }
  const DocumentSet& user_docs() const { return *user_docs_; }
  const DocumentSet& item_docs() const { return *item_docs_; }

 private:
  int n_users_, n_items_, d_;
  ConvEncoder user_enc_, item_enc_;
  ParamBlock item_bias_;
  std::shared_ptr<const DocumentSet> user_docs_;
  std::shared_ptr<const DocumentSet> item_docs_;
};

// Frozen-model representation cache; scoring through it is bias + dot and
// must agree with the direct path to 1e-12. The cache records the model
// version it was built against and reports staleness after any mutation.
class RepresentationCache {
 public:
  explicit RepresentationCache(const TextCnnModel& model);

  bool stale() const;
  double score(int user, int item) const;  // throws if stale

 private:
  const TextCnnModel& model_;
  uint64_t built_version_;
  std::vector<std::vector<double>> user_reps_, item_reps_;
};

}  // namespace toprec
