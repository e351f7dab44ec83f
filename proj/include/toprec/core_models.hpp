#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "toprec/model.hpp"

namespace toprec {

// User/item factor tables plus item biases: score(u, i) = bias_i + u . i.
struct LatentFactorModel {
  int d = 0;
  ParamBlock user_factors;  // |U| x d
  ParamBlock item_factors;  // |I| x d
  ParamBlock item_bias;     // |I| x 1

  LatentFactorModel() = default;
  LatentFactorModel(int n_users, int n_items, int d, uint64_t seed);

  int n_users() const { return user_factors.rows; }
  int n_items() const { return item_factors.rows; }
};

double score_mf(const LatentFactorModel& m, int user, int item);

enum class Activation { kRelu, kIdentity };

struct DenseLayer {
  ParamBlock weight;  // out x in
  ParamBlock bias;    // out x 1
  Activation act = Activation::kRelu;
};

// Small fully-connected network; GMF uses input width d and final width 1.
struct DenseNetwork {
  std::vector<DenseLayer> layers;
  double dropout = 0.0;  // applied to hidden activations at train time

  int input_width() const { return layers.empty() ? 0 : layers.front().weight.cols; }
  int output_width() const { return layers.empty() ? 0 : layers.back().weight.rows; }
};

// hidden relu layers of width `width`, then a linear layer to out_width.
DenseNetwork make_dense_network(int in_width, int width, int n_hidden,
                                int out_width, uint64_t seed, double dropout = 0.0);

// Forward state kept for the backward pass: per-layer inputs,
// pre-activations and dropout masks.
struct DenseTape {
  std::vector<std::vector<double>> inputs;
  std::vector<std::vector<double>> preacts;
  std::vector<std::vector<double>> masks;  // empty when dropout off
  std::vector<double> output;
};

void dense_forward(const DenseNetwork& net, std::span<const double> input,
                   DenseTape& tape, bool use_dropout = false, Rng* rng = nullptr);

// Chain-rule pass; relu subgradient at 0 is 0. Parameter gradients are
// accumulated through `grad_of` (layer index, weight-or-bias, row) and the
// gradient with respect to the input is written to input_grad.
using DenseGradSink = std::function<std::span<double>(int layer, bool is_weight, int row)>;
void dense_backward(const DenseNetwork& net, const DenseTape& tape,
                    std::span<const double> upstream, const DenseGradSink& grad_of,
                    std::span<double> input_grad);

// Convenience wrapper used by tests: runs forward then backward and returns
// dense copies of every gradient.
struct DenseGradients {
  std::vector<std::vector<double>> weight;  // per layer, row-major
  std::vector<std::vector<double>> bias;
  std::vector<double> input;
};
DenseGradients dense_forward_backward(const DenseNetwork& net,
                                      std::span<const double> input,
                                      std::span<const double> upstream,
                                      std::vector<double>* output = nullptr);

double score_gmf(const LatentFactorModel& m, const DenseNetwork& net, int user,
                 int item);

// --- trainable models -------------------------------------------------------

class MfModel : public RankModel {
 public:
  MfModel(int n_users, int n_items, int d, uint64_t seed);

  std::string kind() const override { return "bpr-mf"; }
  int num_users() const override { return lfm_.n_users(); }
  int num_items() const override { return lfm_.n_items(); }
  int latent_dim() const override { return lfm_.d; }
  double score(int user, int item) const override { return score_mf(lfm_, user, item); }
  std::vector<ParamBlock*> param_blocks() override;
  double batch_loss_and_grad(const PairBatch& batch, GradBuffer& gb, Rng& aux_rng,
                             bool use_dropout) override;

  LatentFactorModel& factors() { return lfm_; }
  const LatentFactorModel& factors() const { return lfm_; }

 protected:
  LatentFactorModel lfm_;
};

class GmfModel : public RankModel {
 public:
  GmfModel(int n_users, int n_items, int d, int n_hidden, uint64_t seed,
           double dropout = 0.0);

  std::string kind() const override { return "bpr-gmf"; }
  int num_users() const override { return lfm_.n_users(); }
  int num_items() const override { return lfm_.n_items(); }
  int latent_dim() const override { return lfm_.d; }
  double score(int user, int item) const override;
  std::vector<ParamBlock*> param_blocks() override;
  double batch_loss_and_grad(const PairBatch& batch, GradBuffer& gb, Rng& aux_rng,
                             bool use_dropout) override;

  LatentFactorModel& factors() { return lfm_; }
  DenseNetwork& network() { return net_; }
  const DenseNetwork& network() const { return net_; }

  // Smallest |pre-activation| seen in the last batch evaluation; the
  // gradient checker re-draws probes that sit on a relu kink.
  double min_abs_preactivation() const { return min_abs_preact_; }

 private:
  LatentFactorModel lfm_;
  DenseNetwork net_;
  double min_abs_preact_ = 1e300;
};

}  // namespace toprec
