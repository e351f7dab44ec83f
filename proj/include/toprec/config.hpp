#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "toprec/train.hpp"

namespace toprec {

// Resolved experiment configuration. Defaults follow the experimental
// protocol: latent size 64, K = 10, M = 1000, train fraction 0.7. Values
// outside the documented search ranges are accepted with a warning.
struct ExperimentConfig {
  std::string data_path;
  std::string out_dir = "out";
  std::string model = "bpr-mf";

  int k_core = 0;
  double fraction = 0.7;
  uint64_t seed = 42;

  int d = 64;
  double learning_rate = 0.01;
  double l2 = 0.001;
  int negatives = 5;
  int epochs = 20;
  int batch_size = 512;
  std::string optimizer = "adam";
  // < 0 means the model default (0.0 for bpr-gmf, 0.5 for text-cnn).
  double dropout = -1.0;

  double lambda_text = 1.0;
  int text_negatives = 5;
  double hft_smoothing = 0.01;
  int resample_every = 1;

  int vocab_cap = 50000;
  int doc_cap = 1000;
  int word_dim = 64;
  int window = 3;
  int n_filters = 100;
  int n_hidden = 2;

  int K = 10;
  int M = 1000;
  bool hr_any = false;

  std::string embedding_file;
  std::string stopword_file;
  int threads = 1;

  // Applies one key = value assignment; throws on unknown keys or bad types.
  void set(const std::string& key, const std::string& value);

  // Sorted key=value canonical form and its hash, embedded in artifacts.
  std::string canonical() const;
  std::string hash() const;

  // Out-of-search-range values worth flagging, one message each.
  std::vector<std::string> warnings() const;

  TrainConfig train_config() const;

  static const std::vector<std::string>& model_kinds();
};

// Flat "key = value" file, '#' comments; assignments apply on top of base.
ExperimentConfig parse_config_file(std::istream& in, ExperimentConfig base = {});

}  // namespace toprec
