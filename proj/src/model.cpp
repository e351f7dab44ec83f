#include "toprec/model.hpp"

#include <algorithm>
#include <cmath>

#include "toprec/vecmath.hpp"

namespace toprec {

void GradBuffer::attach(const std::vector<ParamBlock*>& blocks) {
  blocks_ = blocks;
  slots_.assign(blocks.size(), {});
  for (size_t b = 0; b < blocks.size(); ++b) {
    slots_[b].g.assign(blocks[b]->size(), 0.0);
    slots_[b].touched.assign(blocks[b]->rows, 0);
  }
}

void GradBuffer::clear() {
  for (size_t b = 0; b < slots_.size(); ++b) {
    auto& s = slots_[b];
    int cols = blocks_[b]->cols;
    for (int r : s.touched_list) {
      std::fill_n(s.g.data() + static_cast<size_t>(r) * cols, cols, 0.0);
      s.touched[r] = 0;
    }
    s.touched_list.clear();
  }
}

std::span<double> GradBuffer::grad_row(int block, int row) {
  auto& s = slots_[block];
  if (!s.touched[row]) {
    s.touched[row] = 1;
    s.touched_list.push_back(row);
  }
  int cols = blocks_[block]->cols;
  return {s.g.data() + static_cast<size_t>(row) * cols, static_cast<size_t>(cols)};
}

double pairwise_probability(double y_pos, double y_neg) {
  return sigmoid(y_pos - y_neg);
}

double bpr_pair_loss(double y_pos, double y_neg, double* dpos) {
  double p = sigmoid(y_pos - y_neg);
  if (dpos) *dpos = p - 1.0;
  double clamped = std::clamp(p, 1e-12, 1.0 - 1e-12);
  return -std::log(clamped);
}

}  // namespace toprec
