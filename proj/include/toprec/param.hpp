#pragma once

#include <span>
#include <string>
#include <vector>

#include "toprec/rng.hpp"

namespace toprec {

// A named matrix of trainable values, row-major; vectors and scalars use
// cols == 1. Models expose their state as a list of these so the training
// engine, checkpointing and the finite-difference checker can walk every
// parameter without knowing the model.
struct ParamBlock {
  std::string name;
  int rows = 0;
  int cols = 0;
  // false for simplex/scale parameters (topic-word logits, kappa) which are
  // excluded from L2 regularization.
  bool regularize = true;
  std::vector<double> v;

  ParamBlock() = default;
  ParamBlock(std::string n, int r, int c, bool reg = true)
      : name(std::move(n)),
        rows(r),
        cols(c),
        regularize(reg),
        v(static_cast<size_t>(r) * c, 0.0) {}

  std::span<double> row(int r) {
    return {v.data() + static_cast<size_t>(r) * cols, static_cast<size_t>(cols)};
  }
  std::span<const double> row(int r) const {
    return {v.data() + static_cast<size_t>(r) * cols, static_cast<size_t>(cols)};
  }
  double& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }
  size_t size() const { return v.size(); }

  void init_uniform(Rng& rng, double lo, double hi) {
    for (auto& x : v) x = rng.uniform(lo, hi);
  }
};

}  // namespace toprec
