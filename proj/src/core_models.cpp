#include "toprec/core_models.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "toprec/vecmath.hpp"

namespace toprec {

LatentFactorModel::LatentFactorModel(int n_users, int n_items, int d, uint64_t seed)
    : d(d),
      user_factors("user_factors", n_users, d),
      item_factors("item_factors", n_items, d),
      item_bias("item_bias", n_items, 1) {
  if (d < 1) throw std::invalid_argument("latent dimension must be >= 1");
  Rng ur = Rng::derive(seed, "user_factors");
  Rng ir = Rng::derive(seed, "item_factors");
  user_factors.init_uniform(ur, -0.1, 0.1);
  item_factors.init_uniform(ir, -0.1, 0.1);
  // biases start at zero
}

double score_mf(const LatentFactorModel& m, int user, int item) {
  if (user < 0 || user >= m.n_users() || item < 0 || item >= m.n_items())
    throw std::out_of_range("score_mf: index out of range (corrupted id mapping)");
  return m.item_bias.v[item] + dot(m.user_factors.row(user), m.item_factors.row(item));
}

DenseNetwork make_dense_network(int in_width, int width, int n_hidden,
                                int out_width, uint64_t seed, double dropout) {
  DenseNetwork net;
  net.dropout = dropout;
  int in = in_width;
  for (int l = 0; l < n_hidden; ++l) {
    DenseLayer layer;
    layer.weight = ParamBlock("net." + std::to_string(l) + ".weight", width, in);
    layer.bias = ParamBlock("net." + std::to_string(l) + ".bias", width, 1);
    layer.act = Activation::kRelu;
    Rng r = Rng::derive(seed, layer.weight.name);
    layer.weight.init_uniform(r, -0.1, 0.1);
    net.layers.push_back(std::move(layer));
    in = width;
  }
  DenseLayer out;
  out.weight = ParamBlock("net." + std::to_string(n_hidden) + ".weight", out_width, in);
  out.bias = ParamBlock("net." + std::to_string(n_hidden) + ".bias", out_width, 1);
  out.act = Activation::kIdentity;
  Rng r = Rng::derive(seed, out.weight.name);
  out.weight.init_uniform(r, -0.1, 0.1);
  net.layers.push_back(std::move(out));
  return net;
}

void dense_forward(const DenseNetwork& net, std::span<const double> input,
                   DenseTape& tape, bool use_dropout, Rng* rng) {
  size_t n_layers = net.layers.size();
  tape.inputs.assign(n_layers, {});
  tape.preacts.assign(n_layers, {});
  tape.masks.assign(n_layers, {});

  std::vector<double> cur(input.begin(), input.end());
  for (size_t l = 0; l < n_layers; ++l) {
    const DenseLayer& layer = net.layers[l];
    if (static_cast<int>(cur.size()) != layer.weight.cols)
      throw std::invalid_argument("dense_forward: layer width mismatch");
    tape.inputs[l] = cur;
    std::vector<double> z(layer.weight.rows);
    for (int r = 0; r < layer.weight.rows; ++r)
      z[r] = layer.bias.v[r] + dot(layer.weight.row(r), std::span<const double>(cur));
    tape.preacts[l] = z;
    if (layer.act == Activation::kRelu)
      for (double& x : z) x = x > 0.0 ? x : 0.0;
    // inverted dropout on hidden activations
    bool hidden = l + 1 < n_layers;
    if (use_dropout && hidden && net.dropout > 0.0) {
      tape.masks[l].resize(z.size());
      for (size_t r = 0; r < z.size(); ++r) {
        bool keep = rng->real01() >= net.dropout;
        tape.masks[l][r] = keep ? 1.0 / (1.0 - net.dropout) : 0.0;
        z[r] *= tape.masks[l][r];
      }
    }
    cur = std::move(z);
  }
  tape.output = std::move(cur);
}

void dense_backward(const DenseNetwork& net, const DenseTape& tape,
                    std::span<const double> upstream, const DenseGradSink& grad_of,
                    std::span<double> input_grad) {
  std::vector<double> delta(upstream.begin(), upstream.end());
  for (int l = static_cast<int>(net.layers.size()) - 1; l >= 0; --l) {
    const DenseLayer& layer = net.layers[l];
    if (!tape.masks[l].empty())
      for (size_t r = 0; r < delta.size(); ++r) delta[r] *= tape.masks[l][r];
    if (layer.act == Activation::kRelu)
      for (size_t r = 0; r < delta.size(); ++r)
        if (tape.preacts[l][r] <= 0.0) delta[r] = 0.0;

    const auto& in = tape.inputs[l];
    std::vector<double> down(in.size(), 0.0);
    for (int r = 0; r < layer.weight.rows; ++r) {
      if (delta[r] != 0.0) {
        axpy(delta[r], std::span<const double>(in), grad_of(l, true, r));
        axpy(delta[r], layer.weight.row(r), std::span<double>(down));
      }
      grad_of(l, false, r)[0] += delta[r];
    }
    delta = std::move(down);
  }
  for (size_t i = 0; i < input_grad.size(); ++i) input_grad[i] += delta[i];
}

DenseGradients dense_forward_backward(const DenseNetwork& net,
                                      std::span<const double> input,
                                      std::span<const double> upstream,
                                      std::vector<double>* output) {
  DenseTape tape;
  dense_forward(net, input, tape);
  if (output) *output = tape.output;

  DenseGradients g;
  g.weight.resize(net.layers.size());
  g.bias.resize(net.layers.size());
  for (size_t l = 0; l < net.layers.size(); ++l) {
    g.weight[l].assign(net.layers[l].weight.size(), 0.0);
    g.bias[l].assign(net.layers[l].bias.size(), 0.0);
  }
  g.input.assign(input.size(), 0.0);

  auto sink = [&](int l, bool is_weight, int row) -> std::span<double> {
    if (is_weight) {
      int cols = net.layers[l].weight.cols;
      return {g.weight[l].data() + static_cast<size_t>(row) * cols,
              static_cast<size_t>(cols)};
    }
    return {g.bias[l].data() + row, 1};
  };
  dense_backward(net, tape, upstream, sink, g.input);
  return g;
}

double score_gmf(const LatentFactorModel& m, const DenseNetwork& net, int user,
                 int item) {
  if (net.input_width() != m.d || net.output_width() != 1)
    throw std::invalid_argument("score_gmf: network width does not match d");
  if (user < 0 || user >= m.n_users() || item < 0 || item >= m.n_items())
    throw std::out_of_range("score_gmf: index out of range (corrupted id mapping)");
  auto u = m.user_factors.row(user);
  auto i = m.item_factors.row(item);
  std::vector<double> prod(m.d);
  for (int k = 0; k < m.d; ++k) prod[k] = u[k] * i[k];
  DenseTape tape;
  dense_forward(net, prod, tape);
  return m.item_bias.v[item] + tape.output[0];
}

// --- MfModel -----------------------------------------------------------------

MfModel::MfModel(int n_users, int n_items, int d, uint64_t seed)
    : lfm_(n_users, n_items, d, seed) {}

std::vector<ParamBlock*> MfModel::param_blocks() {
  return {&lfm_.user_factors, &lfm_.item_factors, &lfm_.item_bias};
}

double MfModel::batch_loss_and_grad(const PairBatch& batch, GradBuffer& gb,
                                    Rng&, bool) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (const Triple& t : batch) {
    double dpos;
    loss += bpr_pair_loss(score(t.user, t.pos_item), score(t.user, t.neg_item), &dpos);
    double c = dpos * inv_n;

    auto u = lfm_.user_factors.row(t.user);
    auto gi = lfm_.item_factors.row(t.pos_item);
    auto gj = lfm_.item_factors.row(t.neg_item);
    auto du = gb.grad_row(0, t.user);
    auto dgi = gb.grad_row(1, t.pos_item);
    auto dgj = gb.grad_row(1, t.neg_item);
    for (int k = 0; k < lfm_.d; ++k) {
      du[k] += c * (gi[k] - gj[k]);
      dgi[k] += c * u[k];
      dgj[k] -= c * u[k];
    }
    gb.grad_row(2, t.pos_item)[0] += c;
    gb.grad_row(2, t.neg_item)[0] -= c;
  }
  return loss * inv_n;
}

// --- GmfModel ----------------------------------------------------------------

GmfModel::GmfModel(int n_users, int n_items, int d, int n_hidden, uint64_t seed,
                   double dropout)
    : lfm_(n_users, n_items, d, seed),
      net_(make_dense_network(d, d, n_hidden, 1, seed, dropout)) {}

double GmfModel::score(int user, int item) const {
  return score_gmf(lfm_, net_, user, item);
}

std::vector<ParamBlock*> GmfModel::param_blocks() {
  std::vector<ParamBlock*> blocks = {&lfm_.user_factors, &lfm_.item_factors,
                                     &lfm_.item_bias};
  for (auto& layer : net_.layers) {
    blocks.push_back(&layer.weight);
    blocks.push_back(&layer.bias);
  }
  return blocks;
}

double GmfModel::batch_loss_and_grad(const PairBatch& batch, GradBuffer& gb,
                                     Rng& aux_rng, bool use_dropout) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  const int d = lfm_.d;
  min_abs_preact_ = 1e300;

  // block layout in param_blocks(): 0..2 factors, then (weight, bias) pairs
  auto net_sink = [&](int l, bool is_weight, int row) -> std::span<double> {
    int block = 3 + 2 * l + (is_weight ? 0 : 1);
    return gb.grad_row(block, row);
  };

  double loss = 0.0;
  std::vector<double> prod(d), in_grad(d);
  DenseTape tape_pos, tape_neg;
  for (const Triple& t : batch) {
    auto u = lfm_.user_factors.row(t.user);
    auto forward = [&](int item, DenseTape& tape) {
      auto it = lfm_.item_factors.row(item);
      for (int k = 0; k < d; ++k) prod[k] = u[k] * it[k];
      dense_forward(net_, prod, tape, use_dropout && net_.dropout > 0.0, &aux_rng);
      for (size_t l = 0; l < net_.layers.size(); ++l) {
        if (net_.layers[l].act != Activation::kRelu) continue;  // no kink
        for (double x : tape.preacts[l])
          min_abs_preact_ = std::min(min_abs_preact_, std::fabs(x));
      }
      return lfm_.item_bias.v[item] + tape.output[0];
    };
    double y_pos = forward(t.pos_item, tape_pos);
    double y_neg = forward(t.neg_item, tape_neg);
    double dpos;
    loss += bpr_pair_loss(y_pos, y_neg, &dpos);
    double c = dpos * inv_n;

    auto backward = [&](int item, const DenseTape& tape, double coeff) {
      std::array<double, 1> upstream = {coeff};
      std::fill(in_grad.begin(), in_grad.end(), 0.0);
      dense_backward(net_, tape, upstream, net_sink, in_grad);
      auto it = lfm_.item_factors.row(item);
      auto du = gb.grad_row(0, t.user);
      auto di = gb.grad_row(1, item);
      for (int k = 0; k < d; ++k) {
        du[k] += in_grad[k] * it[k];
        di[k] += in_grad[k] * u[k];
      }
      gb.grad_row(2, item)[0] += coeff;
    };
    backward(t.pos_item, tape_pos, c);
    backward(t.neg_item, tape_neg, -c);
  }
  return loss * inv_n;
}

}  // namespace toprec
