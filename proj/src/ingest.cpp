#include "toprec/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "toprec/rng.hpp"

namespace toprec {

using json = nlohmann::json;

Dataset Dataset::from_interactions(std::vector<Interaction> inter) {
  Dataset ds;
  ds.interactions = std::move(inter);
  for (const auto& x : ds.interactions) {
    if (ds.user_index.emplace(x.user, static_cast<int>(ds.users.size())).second)
      ds.users.push_back(x.user);
    if (ds.item_index.emplace(x.item, static_cast<int>(ds.items.size())).second)
      ds.items.push_back(x.item);
  }
  return ds;
}

int Dataset::user_of(const std::string& id) const {
  auto it = user_index.find(id);
  return it == user_index.end() ? -1 : it->second;
}

int Dataset::item_of(const std::string& id) const {
  auto it = item_index.find(id);
  return it == item_index.end() ? -1 : it->second;
}

namespace {

// Dedup key: later timestamp wins, missing timestamps sort oldest, exact
// ties go to the later occurrence in the stream.
bool dedup_wins(const Interaction& candidate, size_t cand_seq,
                const Interaction& incumbent, size_t inc_seq) {
  int64_t a = candidate.timestamp.value_or(INT64_MIN);
  int64_t b = incumbent.timestamp.value_or(INT64_MIN);
  if (a != b) return a > b;
  return cand_seq > inc_seq;
}

}  // namespace

std::vector<Interaction> parse_reviews(std::istream& in, ParseStats& stats,
                                       const ParseOptions& opts) {
  std::vector<Interaction> out;
  std::unordered_map<std::string, size_t> winner;  // "user\titem" -> out index
  std::vector<size_t> winner_seq;                  // parallel to out

  auto skip = [&](size_t& counter, const char* why) {
    if (opts.strict)
      throw ParseError(std::string(why) + " at line " + std::to_string(stats.lines),
                       stats.lines);
    ++counter;
  };

  std::string line;
  size_t seq = 0;
  while (std::getline(in, line)) {
    ++stats.lines;
    if (line.empty()) continue;
    json rec = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (rec.is_discarded() || !rec.is_object()) {
      skip(stats.skipped_malformed, "malformed record");
      continue;
    }
    if (!rec.contains("reviewerID") || !rec["reviewerID"].is_string() ||
        !rec.contains("asin") || !rec["asin"].is_string() ||
        !rec.contains("overall") || !rec["overall"].is_number()) {
      skip(stats.skipped_missing_field, "missing reviewerID/asin/overall");
      continue;
    }
    Interaction x;
    x.user = rec["reviewerID"].get<std::string>();
    x.item = rec["asin"].get<std::string>();
    x.rating = rec["overall"].get<double>();
    if (x.user.empty() || x.item.empty()) {
      skip(stats.skipped_missing_field, "empty reviewerID/asin");
      continue;
    }
    if (!(x.rating >= 1.0 && x.rating <= 5.0)) {
      skip(stats.skipped_bad_rating, "rating outside [1,5]");
      continue;
    }
    if (rec.contains("reviewText") && rec["reviewText"].is_string())
      x.review = rec["reviewText"].get<std::string>();
    if (rec.contains("unixReviewTime") && rec["unixReviewTime"].is_number_integer())
      x.timestamp = rec["unixReviewTime"].get<int64_t>();
    ++stats.parsed;

    std::string key = x.user + "\t" + x.item;
    auto it = winner.find(key);
    if (it == winner.end()) {
      winner.emplace(std::move(key), out.size());
      winner_seq.push_back(seq);
      out.push_back(std::move(x));
    } else {
      ++stats.deduplicated;
      size_t idx = it->second;
      if (dedup_wins(x, seq, out[idx], winner_seq[idx])) {
        out[idx] = std::move(x);
        winner_seq[idx] = seq;
      }
    }
    ++seq;
  }
  return out;
}

Dataset k_core_filter(const Dataset& ds, int k) {
  if (k < 0) throw std::invalid_argument("k_core_filter: k must be >= 0");
  if (k == 0) return ds;

  std::vector<int> user_deg(ds.n_users(), 0), item_deg(ds.n_items(), 0);
  std::vector<std::pair<int, int>> edges;
  edges.reserve(ds.interactions.size());
  for (const auto& x : ds.interactions) {
    int u = ds.user_of(x.user), i = ds.item_of(x.item);
    edges.emplace_back(u, i);
    ++user_deg[u];
    ++item_deg[i];
  }

  std::vector<std::vector<int>> by_user(ds.n_users()), by_item(ds.n_items());
  for (size_t e = 0; e < edges.size(); ++e) {
    by_user[edges[e].first].push_back(static_cast<int>(e));
    by_item[edges[e].second].push_back(static_cast<int>(e));
  }

  std::vector<char> edge_dead(edges.size(), 0);
  std::vector<char> user_dead(ds.n_users(), 0), item_dead(ds.n_items(), 0);
  std::deque<std::pair<bool, int>> queue;  // (is_user, index)
  for (int u = 0; u < ds.n_users(); ++u)
    if (user_deg[u] < k) queue.emplace_back(true, u);
  for (int i = 0; i < ds.n_items(); ++i)
    if (item_deg[i] < k) queue.emplace_back(false, i);

  while (!queue.empty()) {
    auto [is_user, idx] = queue.front();
    queue.pop_front();
    auto& dead = is_user ? user_dead : item_dead;
    if (dead[idx]) continue;
    dead[idx] = 1;
    const auto& incident = is_user ? by_user[idx] : by_item[idx];
    for (int e : incident) {
      if (edge_dead[e]) continue;
      edge_dead[e] = 1;
      auto [u, i] = edges[e];
      if (--user_deg[u] < k && !user_dead[u]) queue.emplace_back(true, u);
      if (--item_deg[i] < k && !item_dead[i]) queue.emplace_back(false, i);
    }
  }

  std::vector<Interaction> kept;
  for (size_t e = 0; e < edges.size(); ++e)
    if (!edge_dead[e]) kept.push_back(ds.interactions[e]);
  return Dataset::from_interactions(std::move(kept));
}

Split split_user_level(const Dataset& ds, double train_fraction, uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("split_user_level: fraction must be in (0,1)");

  std::vector<std::vector<size_t>> per_user(ds.n_users());
  for (size_t idx = 0; idx < ds.interactions.size(); ++idx)
    per_user[ds.user_of(ds.interactions[idx].user)].push_back(idx);

  std::vector<char> is_train(ds.interactions.size(), 0);
  for (int u = 0; u < ds.n_users(); ++u) {
    auto& list = per_user[u];
    // Per-user derived stream: the split of a user depends only on the seed,
    // the user id and that user's interaction order.
    Rng rng = Rng::derive(seed, "split:" + ds.users[u]);
    rng.shuffle(list);
    size_t n_train =
        static_cast<size_t>(std::ceil(train_fraction * static_cast<double>(list.size())));
    for (size_t j = 0; j < list.size(); ++j)
      if (j < n_train) is_train[list[j]] = 1;
  }

  Split split;
  split.seed = seed;
  split.train_fraction = train_fraction;
  std::vector<Interaction> train_inter;
  for (size_t idx = 0; idx < ds.interactions.size(); ++idx) {
    if (is_train[idx])
      train_inter.push_back(ds.interactions[idx]);
    else
      split.test.emplace_back(ds.interactions[idx].user, ds.interactions[idx].item);
  }
  split.train = Dataset::from_interactions(std::move(train_inter));
  return split;
}

DatasetStats dataset_stats(const Dataset& ds) {
  DatasetStats s;
  s.n_users = ds.users.size();
  s.n_items = ds.items.size();
  s.n_interactions = ds.interactions.size();
  if (s.n_users > 0 && s.n_items > 0)
    s.density = static_cast<double>(s.n_interactions) /
                (static_cast<double>(s.n_users) * static_cast<double>(s.n_items));
  return s;
}

// --- manifest ---------------------------------------------------------------

namespace {

std::string format_fraction(double f) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", f);
  return buf;
}

}  // namespace

uint64_t manifest_content_hash(const SplitManifest& m) {
  uint64_t h = fnv1a64("split-manifest v1");
  h = fnv1a64(std::to_string(m.seed), h);
  h = fnv1a64(format_fraction(m.train_fraction), h);
  h = fnv1a64(std::to_string(m.k_core), h);
  for (const auto& [user, item, train] : m.pairs) {
    h = fnv1a64(user, h);
    h = fnv1a64("\t", h);
    h = fnv1a64(item, h);
    h = fnv1a64(train ? "\ttrain\n" : "\ttest\n", h);
  }
  return h;
}

void write_split_manifest(std::ostream& out, const Split& split, int k_core,
                          const std::string& config_hash) {
  SplitManifest m;
  m.seed = split.seed;
  m.train_fraction = split.train_fraction;
  m.k_core = k_core;
  for (const auto& x : split.train.interactions)
    m.pairs.emplace_back(x.user, x.item, true);
  for (const auto& [u, i] : split.test) m.pairs.emplace_back(u, i, false);

  size_t n_train = split.train.interactions.size();
  out << "# split-manifest v1\n";
  out << "# seed\t" << m.seed << "\n";
  out << "# fraction\t" << format_fraction(m.train_fraction) << "\n";
  out << "# k_core\t" << k_core << "\n";
  out << "# users\t" << split.train.n_users() << "\n";
  out << "# items\t" << split.train.n_items() << "\n";
  out << "# train_pairs\t" << n_train << "\n";
  out << "# test_pairs\t" << split.test.size() << "\n";
  out << "# config\t" << config_hash << "\n";
  out << "# hash\t" << manifest_content_hash(m) << "\n";
  for (const auto& [user, item, train] : m.pairs)
    out << user << "\t" << item << "\t" << (train ? "train" : "test") << "\n";
}

SplitManifest read_split_manifest(std::istream& in) {
  SplitManifest m;
  uint64_t declared_hash = 0;
  bool have_hash = false;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ls(line.substr(1));
      std::string key;
      ls >> key;
      if (key == "seed") ls >> m.seed;
      else if (key == "fraction") ls >> m.train_fraction;
      else if (key == "k_core") ls >> m.k_core;
      else if (key == "config") ls >> m.config_hash;
      else if (key == "hash") {
        ls >> declared_hash;
        have_hash = true;
      }
      continue;
    }
    size_t t1 = line.find('\t');
    size_t t2 = line.find('\t', t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos)
      throw std::runtime_error("manifest: bad pair line: " + line);
    std::string part = line.substr(t2 + 1);
    if (part != "train" && part != "test")
      throw std::runtime_error("manifest: bad partition tag: " + part);
    m.pairs.emplace_back(line.substr(0, t1), line.substr(t1 + 1, t2 - t1 - 1),
                         part == "train");
  }
  m.content_hash = manifest_content_hash(m);
  if (have_hash && declared_hash != m.content_hash)
    throw std::runtime_error("manifest: content hash mismatch (file corrupted or edited)");
  return m;
}

Split reassemble_split(const SplitManifest& manifest,
                       const std::vector<Interaction>& interactions) {
  std::unordered_map<std::string, size_t> by_pair;
  for (size_t i = 0; i < interactions.size(); ++i)
    by_pair.emplace(interactions[i].user + "\t" + interactions[i].item, i);

  Split split;
  split.seed = manifest.seed;
  split.train_fraction = manifest.train_fraction;
  std::vector<Interaction> train_inter;
  for (const auto& [user, item, train] : manifest.pairs) {
    if (train) {
      auto it = by_pair.find(user + "\t" + item);
      if (it == by_pair.end())
        throw std::runtime_error("manifest pair (" + user + ", " + item +
                                 ") not found in the parsed corpus");
      train_inter.push_back(interactions[it->second]);
    } else {
      split.test.emplace_back(user, item);
    }
  }
  split.train = Dataset::from_interactions(std::move(train_inter));
  return split;
}

}  // namespace toprec
