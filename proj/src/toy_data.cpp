#include "toprec/toy_data.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "json.hpp"
#include "toprec/rng.hpp"

namespace toprec {

void write_toy_dataset(std::ostream& out, const ToyConfig& cfg) {
  if (cfg.n_clusters < 1 || cfg.n_users < 1 || cfg.n_items < cfg.n_clusters)
    throw std::invalid_argument("toy dataset: need >= 1 cluster and >= 1 item each");

  Rng rng = Rng::derive(cfg.seed, "toy_dataset");
  std::vector<std::vector<int>> cluster_items(cfg.n_clusters);
  for (int i = 0; i < cfg.n_items; ++i) cluster_items[i % cfg.n_clusters].push_back(i);

  int64_t timestamp = 1000000000;
  for (int u = 0; u < cfg.n_users; ++u) {
    int cu = u % cfg.n_clusters;
    std::vector<int> own = cluster_items[cu];
    rng.shuffle(own);
    int n = std::min<int>(cfg.interactions_per_user, static_cast<int>(own.size()));
    for (int j = 0; j < n; ++j) {
      int item = own[j];
      if (cfg.noise_prob > 0.0 && rng.real01() < cfg.noise_prob)
        item = rng.below_int(cfg.n_items);
      int ci = item % cfg.n_clusters;

      std::string text;
      for (int t = 0; t < cfg.review_tokens; ++t) {
        if (t) text += ' ';
        text += "c" + std::to_string(ci) + "w" +
                std::to_string(rng.below_int(cfg.cluster_vocab));
      }
      text += " item" + std::to_string(item);

      nlohmann::json rec;
      rec["reviewerID"] = "u" + std::to_string(u);
      rec["asin"] = "i" + std::to_string(item);
      rec["overall"] = 1.0 + static_cast<double>(rng.below_int(5));
      rec["reviewText"] = text;
      rec["unixReviewTime"] = timestamp++;
      out << rec.dump() << "\n";
    }
  }
}

}  // namespace toprec
