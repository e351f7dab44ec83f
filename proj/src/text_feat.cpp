#include "toprec/text_feat.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "toprec/vecmath.hpp"

namespace toprec {

ConvEncoder::ConvEncoder(const std::string& name, int vocab_size, int word_dim,
                         int window, int n_filters, int out_dim, double dropout,
                         uint64_t seed)
    : vocab_size(vocab_size),
      word_dim(word_dim),
      window(window),
      n_filters(n_filters),
      out_dim(out_dim),
      dropout(dropout),
      emb(name + ".emb", vocab_size, word_dim),
      filters(name + ".filters", n_filters, window * word_dim),
      filter_bias(name + ".filter_bias", n_filters, 1),
      proj(name + ".proj", out_dim, n_filters),
      proj_bias(name + ".proj_bias", out_dim, 1) {
  if (window < 1) throw std::invalid_argument("conv window must be >= 1");
  Rng re = Rng::derive(seed, emb.name);
  Rng rf = Rng::derive(seed, filters.name);
  Rng rp = Rng::derive(seed, proj.name);
  emb.init_uniform(re, -0.1, 0.1);
  filters.init_uniform(rf, -0.1, 0.1);
  proj.init_uniform(rp, -0.1, 0.1);
}

void ConvEncoder::init_embeddings_from(const EmbeddingTable& pretrained, uint64_t) {
  if (pretrained.values.rows != emb.rows)
    throw std::invalid_argument("pretrained table does not match the vocabulary");
  int copy = std::min(word_dim, pretrained.dim);
  for (int w = 0; w < emb.rows; ++w) {
    auto src = pretrained.values.row(w);
    auto dst = emb.row(w);
    for (int k = 0; k < copy; ++k) dst[k] = src[k];
    // columns beyond the pretrained width keep their seeded random values
  }
}

std::vector<ParamBlock*> ConvEncoder::blocks() {
  return {&emb, &filters, &filter_bias, &proj, &proj_bias};
}

std::vector<double> encode(const ConvEncoder& enc, const Document& doc,
                           bool train_mode, Rng* rng, EncodeTape* tape) {
  EncodeTape local;
  EncodeTape& t = tape ? *tape : local;

  t.padded = doc.tokens;
  while (static_cast<int>(t.padded.size()) < enc.window)
    t.padded.push_back(Vocabulary::kOovId);
  const int positions = static_cast<int>(t.padded.size()) - enc.window + 1;

  t.conv.assign(static_cast<size_t>(enc.n_filters) * positions, 0.0);
  t.argmax.assign(enc.n_filters, 0);
  t.pooled.assign(enc.n_filters, 0.0);
  for (int f = 0; f < enc.n_filters; ++f) {
    auto w = enc.filters.row(f);
    double best = -1e300;
    int best_p = 0;
    for (int p = 0; p < positions; ++p) {
      double z = enc.filter_bias.v[f];
      for (int c = 0; c < enc.window; ++c) {
        auto e = enc.emb.row(t.padded[p + c]);
        const double* wc = w.data() + static_cast<size_t>(c) * enc.word_dim;
        for (int k = 0; k < enc.word_dim; ++k) z += wc[k] * e[k];
      }
      t.conv[static_cast<size_t>(f) * positions + p] = z;
      if (z > best) {
        best = z;
        best_p = p;
      }
    }
    t.argmax[f] = best_p;
    t.pooled[f] = best > 0.0 ? best : 0.0;  // relu then max == max then relu
  }

  t.pooled_dropped = t.pooled;
  t.mask.clear();
  if (train_mode && enc.dropout > 0.0) {
    t.mask.resize(enc.n_filters);
    for (int f = 0; f < enc.n_filters; ++f) {
      bool keep = rng->real01() >= enc.dropout;
      t.mask[f] = keep ? 1.0 / (1.0 - enc.dropout) : 0.0;
      t.pooled_dropped[f] *= t.mask[f];
    }
  }

  std::vector<double> out(enc.out_dim);
  for (int k = 0; k < enc.out_dim; ++k)
    out[k] = enc.proj_bias.v[k] +
             dot(enc.proj.row(k), std::span<const double>(t.pooled_dropped));
  return out;
}

void encode_backward(const ConvEncoder& enc, const EncodeTape& tape,
                     std::span<const double> upstream, const EncGradSink& grad_of) {
  const int positions = static_cast<int>(tape.padded.size()) - enc.window + 1;

  // projection
  std::vector<double> d_pooled(enc.n_filters, 0.0);
  for (int k = 0; k < enc.out_dim; ++k) {
    if (upstream[k] != 0.0) {
      axpy(upstream[k], std::span<const double>(tape.pooled_dropped), grad_of(3, k));
      axpy(upstream[k], enc.proj.row(k), std::span<double>(d_pooled));
    }
    grad_of(4, k)[0] += upstream[k];
  }
  if (!tape.mask.empty())
    for (int f = 0; f < enc.n_filters; ++f) d_pooled[f] *= tape.mask[f];

  // through max-pool and relu into the winning window
  for (int f = 0; f < enc.n_filters; ++f) {
    double g = d_pooled[f];
    if (g == 0.0) continue;
    int p = tape.argmax[f];
    if (tape.conv[static_cast<size_t>(f) * positions + p] <= 0.0) continue;
    grad_of(2, f)[0] += g;
    auto w = enc.filters.row(f);
    auto dw = grad_of(1, f);
    for (int c = 0; c < enc.window; ++c) {
      int tok = tape.padded[p + c];
      auto e = enc.emb.row(tok);
      auto de = grad_of(0, tok);
      const double* wc = w.data() + static_cast<size_t>(c) * enc.word_dim;
      double* dwc = dw.data() + static_cast<size_t>(c) * enc.word_dim;
      for (int k = 0; k < enc.word_dim; ++k) {
        dwc[k] += g * e[k];
        de[k] += g * wc[k];
      }
    }
  }
}

// --- TextCnnModel --------------------------------------------------------------

TextCnnModel::TextCnnModel(int n_users, int n_items, int d, uint64_t seed,
                           std::shared_ptr<const DocumentSet> user_docs,
                           std::shared_ptr<const DocumentSet> item_docs,
                           int vocab_size, int word_dim, int window, int n_filters,
                           double dropout)
    : n_users_(n_users),
      n_items_(n_items),
      d_(d),
      user_enc_("user_enc", vocab_size, word_dim, window, n_filters, d, dropout, seed),
      item_enc_("item_enc", vocab_size, word_dim, window, n_filters, d, dropout,
                seed ^ 0x9e3779b97f4a7c15ull),
      item_bias_("item_bias", n_items, 1),
      user_docs_(std::move(user_docs)),
      item_docs_(std::move(item_docs)) {
  if (static_cast<int>(user_docs_->docs.size()) != n_users ||
      static_cast<int>(item_docs_->docs.size()) != n_items)
    throw std::invalid_argument("TextCnnModel: documents misaligned with id maps");
}

double TextCnnModel::score(int user, int item) const {
  if (user < 0 || user >= n_users_ || item < 0 || item >= n_items_)
    throw std::out_of_range("score_text: index out of range (corrupted id mapping)");
  std::vector<double> ru = encode(user_enc_, user_docs_->docs[user]);
  std::vector<double> ri = encode(item_enc_, item_docs_->docs[item]);
  return item_bias_.v[item] + dot(std::span<const double>(ru), std::span<const double>(ri));
}

std::vector<ParamBlock*> TextCnnModel::param_blocks() {
  std::vector<ParamBlock*> out = {&item_bias_};
  for (auto* b : user_enc_.blocks()) out.push_back(b);
  for (auto* b : item_enc_.blocks()) out.push_back(b);
  return out;
}

double TextCnnModel::batch_loss_and_grad(const PairBatch& batch, GradBuffer& gb,
                                         Rng& aux_rng, bool use_dropout) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  // block layout: 0 item_bias, 1..5 user encoder, 6..10 item encoder
  auto user_sink = [&](int block, int row) { return gb.grad_row(1 + block, row); };
  auto item_sink = [&](int block, int row) { return gb.grad_row(6 + block, row); };

  double loss = 0.0;
  EncodeTape tape_u, tape_i, tape_j;
  for (const Triple& t : batch) {
    bool drop = use_dropout && user_enc_.dropout > 0.0;
    std::vector<double> ru =
        encode(user_enc_, user_docs_->docs[t.user], drop, &aux_rng, &tape_u);
    std::vector<double> ri =
        encode(item_enc_, item_docs_->docs[t.pos_item], drop, &aux_rng, &tape_i);
    std::vector<double> rj =
        encode(item_enc_, item_docs_->docs[t.neg_item], drop, &aux_rng, &tape_j);
    double y_pos = item_bias_.v[t.pos_item] +
                   dot(std::span<const double>(ru), std::span<const double>(ri));
    double y_neg = item_bias_.v[t.neg_item] +
                   dot(std::span<const double>(ru), std::span<const double>(rj));
    double dpos;
    loss += bpr_pair_loss(y_pos, y_neg, &dpos);
    double c = dpos * inv_n;

    // d score / d ru = ri - rj, d/d ri = ru, d/d rj = -ru
    std::vector<double> up_u(d_), up_i(d_), up_j(d_);
    for (int k = 0; k < d_; ++k) {
      up_u[k] = c * (ri[k] - rj[k]);
      up_i[k] = c * ru[k];
      up_j[k] = -c * ru[k];
    }
    encode_backward(user_enc_, tape_u, up_u, user_sink);
    encode_backward(item_enc_, tape_i, up_i, item_sink);
    encode_backward(item_enc_, tape_j, up_j, item_sink);
    gb.grad_row(0, t.pos_item)[0] += c;
    gb.grad_row(0, t.neg_item)[0] -= c;
  }
  return loss * inv_n;
}

// --- RepresentationCache ---------------------------------------------------------

RepresentationCache::RepresentationCache(const TextCnnModel& model)
    : model_(model), built_version_(model.version()) {
  user_reps_.reserve(model.num_users());
  item_reps_.reserve(model.num_items());
  for (int u = 0; u < model.num_users(); ++u)
    user_reps_.push_back(encode(model.user_encoder(), model.user_docs().docs[u]));
  for (int i = 0; i < model.num_items(); ++i)
    item_reps_.push_back(encode(model.item_encoder(), model.item_docs().docs[i]));
}

bool RepresentationCache::stale() const { return model_.version() != built_version_; }

double RepresentationCache::score(int user, int item) const {
  if (stale())
    throw std::runtime_error("representation cache is stale: parameters changed");
  return model_.item_bias().v[item] +
         dot(std::span<const double>(user_reps_[user]),
             std::span<const double>(item_reps_[item]));
}

}  // namespace toprec
