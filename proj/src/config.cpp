#include "toprec/config.hpp"

#include <algorithm>
#include <istream>
#include <sstream>
#include <stdexcept>

#include "toprec/rng.hpp"

namespace toprec {

const std::vector<std::string>& ExperimentConfig::model_kinds() {
  static const std::vector<std::string> kKinds = {"bpr-mf", "bpr-gmf", "bpr-hft",
                                                  "jrl", "text-cnn"};
  return kKinds;
}

namespace {

double to_double(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    double x = std::stod(v, &used);
    if (used == v.size()) return x;
  } catch (const std::exception&) {
  }
  throw std::runtime_error("config: bad number '" + v + "' for " + key);
}

int to_int(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    int x = std::stoi(v, &used);
    if (used == v.size()) return x;
  } catch (const std::exception&) {
  }
  throw std::runtime_error("config: bad integer '" + v + "' for " + key);
}

uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    uint64_t x = std::stoull(v, &used);
    if (used == v.size()) return x;
  } catch (const std::exception&) {
  }
  throw std::runtime_error("config: bad integer '" + v + "' for " + key);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::runtime_error("config: bad boolean for " + key);
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  size_t e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

}  // namespace

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  if (key == "data") data_path = value;
  else if (key == "out_dir") out_dir = value;
  else if (key == "model") model = value;
  else if (key == "k_core") k_core = to_int(key, value);
  else if (key == "fraction") fraction = to_double(key, value);
  else if (key == "seed") seed = to_u64(key, value);
  else if (key == "d") d = to_int(key, value);
  else if (key == "lr") learning_rate = to_double(key, value);
  else if (key == "l2") l2 = to_double(key, value);
  else if (key == "negatives") negatives = to_int(key, value);
  else if (key == "epochs") epochs = to_int(key, value);
  else if (key == "batch_size") batch_size = to_int(key, value);
  else if (key == "optimizer") optimizer = value;
  else if (key == "dropout") dropout = to_double(key, value);
  else if (key == "lambda_text") lambda_text = to_double(key, value);
  else if (key == "text_negatives") text_negatives = to_int(key, value);
  else if (key == "hft_smoothing") hft_smoothing = to_double(key, value);
  else if (key == "resample_every") resample_every = to_int(key, value);
  else if (key == "vocab_cap") vocab_cap = to_int(key, value);
  else if (key == "doc_cap") doc_cap = to_int(key, value);
  else if (key == "word_dim") word_dim = to_int(key, value);
  else if (key == "window") window = to_int(key, value);
  else if (key == "n_filters") n_filters = to_int(key, value);
  else if (key == "n_hidden") n_hidden = to_int(key, value);
  else if (key == "K") K = to_int(key, value);
  else if (key == "M") M = to_int(key, value);
  else if (key == "hr_any") hr_any = to_bool(key, value);
  else if (key == "embedding_file") embedding_file = value;
  else if (key == "stopword_file") stopword_file = value;
  else if (key == "threads") threads = to_int(key, value);
  else throw std::runtime_error("config: unknown key '" + key + "'");
}

std::string ExperimentConfig::canonical() const {
  std::ostringstream out;
  char buf[64];
  auto num = [&](double x) {
    std::snprintf(buf, sizeof(buf), "%.10g", x);
    return std::string(buf);
  };
  std::vector<std::pair<std::string, std::string>> kv = {
      {"K", std::to_string(K)},
      {"M", std::to_string(M)},
      {"batch_size", std::to_string(batch_size)},
      {"d", std::to_string(d)},
      {"data", data_path},
      {"doc_cap", std::to_string(doc_cap)},
      {"dropout", num(dropout)},
      {"embedding_file", embedding_file},
      {"epochs", std::to_string(epochs)},
      {"fraction", num(fraction)},
      {"hft_smoothing", num(hft_smoothing)},
      {"hr_any", hr_any ? "true" : "false"},
      {"k_core", std::to_string(k_core)},
      {"l2", num(l2)},
      {"lambda_text", num(lambda_text)},
      {"lr", num(learning_rate)},
      {"model", model},
      {"n_filters", std::to_string(n_filters)},
      {"n_hidden", std::to_string(n_hidden)},
      {"negatives", std::to_string(negatives)},
      {"optimizer", optimizer},
      {"resample_every", std::to_string(resample_every)},
      {"seed", std::to_string(seed)},
      {"stopword_file", stopword_file},
      {"text_negatives", std::to_string(text_negatives)},
      {"threads", std::to_string(threads)},
      {"vocab_cap", std::to_string(vocab_cap)},
      {"window", std::to_string(window)},
      {"word_dim", std::to_string(word_dim)},
  };
  for (const auto& [k, v] : kv) out << k << "=" << v << "\n";
  return out.str();
}

std::string ExperimentConfig::hash() const {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical())));
  return buf;
}

std::vector<std::string> ExperimentConfig::warnings() const {
  std::vector<std::string> out;
  auto range_warn = [&](const std::string& name, double v, double lo, double hi) {
    if (v < lo || v > hi) {
      std::ostringstream msg;
      msg << "warning: " << name << " = " << v << " is outside the searched range ["
          << lo << ", " << hi << "]";
      out.push_back(msg.str());
    }
  };
  range_warn("lr", learning_rate, 1e-4, 1e-1);
  range_warn("l2", l2, 1e-4, 1e-1);
  range_warn("negatives", negatives, 2, 10);
  range_warn("d", d, 16, 128);
  if (model == "text-cnn") range_warn("window", window, 3, 10);
  if (dropout >= 0.0 && (model == "text-cnn" || model == "bpr-gmf"))
    range_warn("dropout", dropout, 0.1, 0.8);
  return out;
}

TrainConfig ExperimentConfig::train_config() const {
  TrainConfig t;
  t.learning_rate = learning_rate;
  t.l2 = l2;
  t.negatives_per_positive = negatives;
  t.epochs = epochs;
  t.batch_size = batch_size;
  if (optimizer == "adam") t.optimizer = Optimizer::kAdam;
  else if (optimizer == "sgd") t.optimizer = Optimizer::kSgd;
  else throw std::runtime_error("config: optimizer must be adam or sgd");
  t.seed = seed;
  t.threads = threads;
  return t;
}

ExperimentConfig parse_config_file(std::istream& in, ExperimentConfig base) {
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(line_no) +
                               ": expected key = value");
    base.set(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
  }
  return base;
}

}  // namespace toprec
