// Command-line surface for the review-aware top-N recommendation benchmark:
// prepare data, train models, evaluate with the two-stage protocol, benchmark
// inference speed and merge comparison reports.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "toprec/checkpoint.hpp"
#include "toprec/config.hpp"
#include "toprec/core_models.hpp"
#include "toprec/eval.hpp"
#include "toprec/ingest.hpp"
#include "toprec/stats.hpp"
#include "toprec/text.hpp"
#include "toprec/text_feat.hpp"
#include "toprec/text_reg.hpp"
#include "toprec/toy_data.hpp"
#include "toprec/train.hpp"

namespace fs = std::filesystem;
using namespace toprec;

namespace {

struct ConfigBinding {
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;

  // Registers --config plus one string flag per config key; flags given on
  // the command line override file values. CLI11 keeps pointers into
  // `overrides`, so its capacity is fixed before any binding.
  void bind(CLI::App* cmd, const std::vector<std::string>& keys) {
    cmd->add_option("--config", config_path, "key = value config file");
    overrides.reserve(keys.size());
    for (const auto& key : keys) {
      overrides.emplace_back(key, "");
      auto* slot = &overrides.back().second;
      cmd->add_option("--" + key, *slot, "config key " + key);
    }
  }

  ExperimentConfig resolve() const {
    ExperimentConfig cfg;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw std::runtime_error("cannot open config file: " + config_path);
      cfg = parse_config_file(in, cfg);
    }
    for (const auto& [key, value] : overrides)
      if (!value.empty()) cfg.set(key, value);
    for (const auto& warning : cfg.warnings()) std::cerr << warning << "\n";
    return cfg;
  }
};

const std::vector<std::string> kTrainKeys = {
    "model", "seed", "d", "lr", "l2", "negatives", "epochs", "batch_size",
    "optimizer", "dropout", "lambda_text", "text_negatives", "hft_smoothing",
    "resample_every", "word_dim", "window", "n_filters", "n_hidden",
    "embedding_file", "threads"};

const std::vector<std::string> kPrepareKeys = {
    "k_core", "fraction", "seed", "vocab_cap", "doc_cap", "stopword_file"};

std::vector<Interaction> parse_file(const std::string& path, bool strict,
                                    ParseStats* stats_out = nullptr) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset: " + path);
  ParseStats stats;
  ParseOptions opts;
  opts.strict = strict;
  auto interactions = parse_reviews(in, stats, opts);
  if (stats_out) *stats_out = stats;
  return interactions;
}

std::string hash_string(uint64_t h) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct PreparedData {
  Split split;
  std::string split_hash;
  Vocabulary vocab;
  std::shared_ptr<DocumentSet> user_docs;
  std::shared_ptr<DocumentSet> item_docs;
};

PreparedData load_prepared(const std::string& data_path, const std::string& prep_dir,
                           bool need_text) {
  PreparedData out;
  auto interactions = parse_file(data_path, /*strict=*/false);

  std::ifstream min(prep_dir + "/manifest.tsv");
  if (!min)
    throw std::runtime_error("cannot open " + prep_dir + "/manifest.tsv (run prepare)");
  SplitManifest manifest = read_split_manifest(min);
  out.split = reassemble_split(manifest, interactions);
  out.split_hash = hash_string(manifest.content_hash);

  if (need_text) {
    std::ifstream vin(prep_dir + "/vocab.tsv");
    if (!vin) throw std::runtime_error("cannot open " + prep_dir + "/vocab.tsv");
    std::string vocab_split;
    out.vocab = Vocabulary::read(vin, &vocab_split);
    if (vocab_split != out.split_hash)
      throw std::runtime_error("vocab.tsv belongs to a different split");

    auto load_docs = [&](const std::string& file, Owner kind) {
      std::ifstream din(prep_dir + "/" + file);
      if (!din) throw std::runtime_error("cannot open " + prep_dir + "/" + file);
      std::string doc_split;
      auto docs = std::make_shared<DocumentSet>(
          read_documents(din, out.split.train, kind, &doc_split));
      if (doc_split != out.split_hash)
        throw std::runtime_error(file + " belongs to a different split");
      return docs;
    };
    out.user_docs = load_docs("user_docs.tsv", Owner::kUser);
    out.item_docs = load_docs("item_docs.tsv", Owner::kItem);
  }
  return out;
}

bool model_needs_text(const std::string& kind) {
  return kind == "bpr-hft" || kind == "jrl" || kind == "text-cnn";
}

void require_known_model(const std::string& kind) {
  const auto& kinds = ExperimentConfig::model_kinds();
  if (std::find(kinds.begin(), kinds.end(), kind) != kinds.end()) return;
  std::string list;
  for (const auto& k : kinds) list += " " + k;
  throw std::runtime_error("unknown model '" + kind + "'; valid kinds:" + list);
}

std::unique_ptr<RankModel> build_model(const ExperimentConfig& cfg, int n_users,
                                       int n_items, const PreparedData& data) {
  const std::string& kind = cfg.model;
  if (kind == "bpr-mf")
    return std::make_unique<MfModel>(n_users, n_items, cfg.d, cfg.seed);
  if (kind == "bpr-gmf") {
    double dropout = cfg.dropout < 0.0 ? 0.0 : cfg.dropout;
    return std::make_unique<GmfModel>(n_users, n_items, cfg.d, cfg.n_hidden, cfg.seed,
                                      dropout);
  }
  if (kind == "bpr-hft")
    return std::make_unique<HftModel>(n_users, n_items, cfg.d, cfg.seed,
                                      data.item_docs, data.vocab.size(),
                                      cfg.lambda_text, cfg.hft_smoothing,
                                      cfg.resample_every);
  if (kind == "jrl") {
    std::vector<int64_t> counts(data.vocab.size());
    for (int id = 0; id < data.vocab.size(); ++id)
      counts[id] = data.vocab.frequency_of(id);
    auto model = std::make_unique<JrlModel>(n_users, n_items, cfg.d, cfg.seed,
                                            data.user_docs, data.item_docs, counts,
                                            cfg.lambda_text, cfg.text_negatives);
    if (!cfg.embedding_file.empty()) {
      std::ifstream ein(cfg.embedding_file);
      if (!ein)
        throw std::runtime_error("cannot open embeddings: " + cfg.embedding_file);
      model->init_embeddings_from(load_embeddings(ein, data.vocab, cfg.seed), cfg.seed);
    }
    return model;
  }
  if (kind == "text-cnn") {
    double dropout = cfg.dropout < 0.0 ? 0.5 : cfg.dropout;
    auto model = std::make_unique<TextCnnModel>(
        n_users, n_items, cfg.d, cfg.seed, data.user_docs, data.item_docs,
        data.vocab.size(), cfg.word_dim, cfg.window, cfg.n_filters, dropout);
    if (!cfg.embedding_file.empty()) {
      std::ifstream ein(cfg.embedding_file);
      if (!ein)
        throw std::runtime_error("cannot open embeddings: " + cfg.embedding_file);
      EmbeddingTable table = load_embeddings(ein, data.vocab, cfg.seed);
      model->user_encoder().init_embeddings_from(table, cfg.seed);
      model->item_encoder().init_embeddings_from(table, cfg.seed ^ 1);
    }
    return model;
  }
  std::string kinds;
  for (const auto& k : ExperimentConfig::model_kinds()) kinds += " " + k;
  throw std::runtime_error("unknown model '" + kind + "'; valid kinds:" + kinds);
}

// Rebuilds a model of the checkpoint's kind, restoring the hyperparameters
// recorded at train time, then loads the parameters.
std::unique_ptr<RankModel> model_from_checkpoint(const Checkpoint& ckpt,
                                                 const PreparedData& data) {
  ExperimentConfig cfg;
  cfg.model = ckpt.require("kind");
  for (const auto& key : kTrainKeys) {
    auto it = ckpt.meta.find(key);
    if (it != ckpt.meta.end() && key != "model" && !it->second.empty())
      cfg.set(key, it->second);
  }
  cfg.set("d", ckpt.require("d"));
  int n_users = std::stoi(ckpt.require("n_users"));
  int n_items = std::stoi(ckpt.require("n_items"));
  if (n_users != data.split.train.n_users() || n_items != data.split.train.n_items())
    throw std::runtime_error("checkpoint id maps do not match the split");
  cfg.embedding_file.clear();  // parameters come from the checkpoint
  auto model = build_model(cfg, n_users, n_items, data);
  load_params_into(*model, ckpt);
  return model;
}

void require_same_split(const Checkpoint& ckpt, const std::string& split_hash,
                        const std::string& what) {
  if (ckpt.require("split") != split_hash)
    throw std::runtime_error(what + " was trained on split " + ckpt.require("split") +
                             " but the manifest hash is " + split_hash);
}

LatentFactorModel retrieval_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.require("kind") != "bpr-mf")
    throw std::runtime_error("the retrieval checkpoint must be a bpr-mf model");
  int d = std::stoi(ckpt.require("d"));
  LatentFactorModel lfm(std::stoi(ckpt.require("n_users")),
                        std::stoi(ckpt.require("n_items")), d, 0);
  const ParamBlock* uf = ckpt.find_block("user_factors");
  const ParamBlock* itf = ckpt.find_block("item_factors");
  const ParamBlock* ib = ckpt.find_block("item_bias");
  if (!uf || !itf || !ib) throw std::runtime_error("retrieval checkpoint is incomplete");
  lfm.user_factors.v = uf->v;
  lfm.item_factors.v = itf->v;
  lfm.item_bias.v = ib->v;
  return lfm;
}

std::map<std::string, std::string> train_meta(const ExperimentConfig& cfg,
                                              const PreparedData& data) {
  std::map<std::string, std::string> meta;
  meta["split"] = data.split_hash;
  meta["config"] = cfg.hash();
  char buf[64];
  auto num = [&](double x) {
    std::snprintf(buf, sizeof(buf), "%.10g", x);
    return std::string(buf);
  };
  meta["seed"] = std::to_string(cfg.seed);
  meta["lambda_text"] = num(cfg.lambda_text);
  meta["text_negatives"] = std::to_string(cfg.text_negatives);
  meta["hft_smoothing"] = num(cfg.hft_smoothing);
  meta["resample_every"] = std::to_string(cfg.resample_every);
  meta["word_dim"] = std::to_string(cfg.word_dim);
  meta["window"] = std::to_string(cfg.window);
  meta["n_filters"] = std::to_string(cfg.n_filters);
  meta["n_hidden"] = std::to_string(cfg.n_hidden);
  meta["dropout"] = num(cfg.dropout);
  return meta;
}

// --- subcommands ------------------------------------------------------------

int cmd_gen_data(const std::string& out_path, const ToyConfig& toy) {
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  write_toy_dataset(out, toy);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_prepare(const ConfigBinding& binding, const std::string& data_path,
                const std::string& out_dir, bool strict) {
  ExperimentConfig cfg = binding.resolve();
  cfg.data_path = data_path;

  ParseStats stats;
  auto interactions = parse_file(data_path, strict, &stats);
  Dataset ds = Dataset::from_interactions(std::move(interactions));
  Dataset filtered = k_core_filter(ds, cfg.k_core);
  Split split = split_user_level(filtered, cfg.fraction, cfg.seed);

  fs::create_directories(out_dir);
  {
    std::ofstream out(out_dir + "/manifest.tsv");
    write_split_manifest(out, split, cfg.k_core, cfg.hash());
  }
  std::ifstream back(out_dir + "/manifest.tsv");
  std::string split_hash = hash_string(read_split_manifest(back).content_hash);

  std::unordered_set<std::string> stopwords;
  const std::unordered_set<std::string>* stopword_ptr = nullptr;
  if (!cfg.stopword_file.empty()) {
    std::ifstream sin(cfg.stopword_file);
    if (!sin) throw std::runtime_error("cannot open stopwords: " + cfg.stopword_file);
    stopwords = load_stopwords(sin);
    stopword_ptr = &stopwords;
  }

  std::vector<std::vector<std::string>> tokenized;
  for (const auto& x : split.train.interactions)
    tokenized.push_back(stopword_ptr ? tokenize(x.review, *stopword_ptr)
                                     : tokenize(x.review));
  Vocabulary vocab = Vocabulary::build(tokenized, cfg.vocab_cap);
  {
    std::ofstream out(out_dir + "/vocab.tsv");
    vocab.write(out, split_hash, cfg.hash());
  }

  DocumentBuildOptions doc_opts;
  doc_opts.cap = cfg.doc_cap;
  doc_opts.stopwords = stopword_ptr;
  DocumentSet udocs = build_documents(split, vocab, Owner::kUser, doc_opts);
  DocumentSet idocs = build_documents(split, vocab, Owner::kItem, doc_opts);
  {
    std::ofstream out(out_dir + "/user_docs.tsv");
    write_documents(out, udocs, split_hash, cfg.hash());
  }
  {
    std::ofstream out(out_dir + "/item_docs.tsv");
    write_documents(out, idocs, split_hash, cfg.hash());
  }

  auto s = dataset_stats(filtered);
  std::cout << "parsed\t" << stats.parsed << "\tskipped\t" << stats.skipped()
            << "\tdeduplicated\t" << stats.deduplicated << "\n";
  std::cout << "users\t" << s.n_users << "\titems\t" << s.n_items << "\tinteractions\t"
            << s.n_interactions << "\tdensity\t" << s.density << "\n";
  std::cout << "train_pairs\t" << split.train.interactions.size() << "\ttest_pairs\t"
            << split.test.size() << "\n";
  std::cout << "vocab\t" << vocab.size() << "\tempty_user_docs\t" << udocs.empty_count()
            << "\tempty_item_docs\t" << idocs.empty_count() << "\n";
  std::cout << "split\t" << split_hash << "\n";
  return 0;
}

int cmd_train(const ConfigBinding& binding, const std::string& data_path,
              const std::string& prep_dir, const std::string& out_path,
              const std::string& log_path, bool deterministic) {
  ExperimentConfig cfg = binding.resolve();
  cfg.data_path = data_path;
  if (deterministic) cfg.threads = 1;
  require_known_model(cfg.model);

  PreparedData data = load_prepared(data_path, prep_dir, model_needs_text(cfg.model));
  InteractionIndex index = InteractionIndex::build(data.split.train);
  auto model = build_model(cfg, index.n_users, index.n_items, data);

  std::ofstream log;
  if (!log_path.empty()) {
    log.open(log_path);
    if (!log) throw std::runtime_error("cannot write " + log_path);
  }
  Trainer trainer(*model, index, cfg.train_config());
  auto history = trainer.fit(log_path.empty() ? nullptr : &log);
  if (!history.empty())
    std::cout << "final epoch loss\t" << history.back().loss << "\n";

  Checkpoint ckpt = snapshot_model(*model, train_meta(cfg, data),
                                   data.split.train.users, data.split.train.items);
  save_checkpoint_file(out_path, ckpt);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_eval(const std::string& data_path, const std::string& prep_dir,
             const std::string& model_path, const std::string& retrieval_path,
             const std::string& out_path, const std::string& per_user_path, int K,
             int M, bool hr_any, bool timed, int threads) {
  Checkpoint model_ckpt = load_checkpoint_file(model_path);
  Checkpoint retr_ckpt = load_checkpoint_file(retrieval_path);

  PreparedData data =
      load_prepared(data_path, prep_dir, model_needs_text(model_ckpt.require("kind")));
  require_same_split(model_ckpt, data.split_hash, "model checkpoint");
  require_same_split(retr_ckpt, data.split_hash, "retrieval checkpoint");

  auto model = model_from_checkpoint(model_ckpt, data);
  LatentFactorModel retrieval = retrieval_from_checkpoint(retr_ckpt);
  SplitIndex split_index = SplitIndex::build(data.split);

  EvalOptions opts;
  opts.hr_any = hr_any;
  opts.measure_time = timed;
  opts.threads = threads;
  EvalReport report = evaluate(*model, split_index, retrieval, K, M, opts);
  report.split_hash = data.split_hash;
  report.config_hash = model_ckpt.require("config");
  for (int u : report.users) report.user_ids.push_back(data.split.train.users[u]);

  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  write_eval_report(out, report);
  if (!per_user_path.empty()) {
    std::ofstream dump(per_user_path);
    write_per_user_dump(dump, report);
  }
  std::cout << report.model_id << "\tHR@" << K << "\t" << report.mean_hr << "\tnDCG@"
            << K << "\t" << report.mean_ndcg << "\tusers\t" << report.users.size()
            << "\n";
  return 0;
}

int cmd_bench(const std::string& data_path, const std::string& prep_dir,
              const std::string& model_path, const std::string& retrieval_path,
              const std::string& out_path, int M, int batch_size, int reps) {
  Checkpoint model_ckpt = load_checkpoint_file(model_path);
  Checkpoint retr_ckpt = load_checkpoint_file(retrieval_path);
  PreparedData data =
      load_prepared(data_path, prep_dir, model_needs_text(model_ckpt.require("kind")));
  require_same_split(model_ckpt, data.split_hash, "model checkpoint");
  require_same_split(retr_ckpt, data.split_hash, "retrieval checkpoint");

  auto model = model_from_checkpoint(model_ckpt, data);
  LatentFactorModel retrieval = retrieval_from_checkpoint(retr_ckpt);
  SplitIndex split_index = SplitIndex::build(data.split);
  auto pools = build_pools(split_index, retrieval, M);
  size_t entries = 0;
  for (const auto& p : pools) entries += p.candidates.size();

  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  out << "# bench v1\n";
  out << "# split\t" << data.split_hash << "\n";
  out << "# batch_size\t" << batch_size << "\n";
  out << "# entries\t" << entries << "\n";
  out << "model\tsec_per_entry\n";

  auto time_model = [&](const std::string& label,
                        const std::function<double(int, int)>& scorer) {
    double sec = speed_benchmark(scorer, pools, batch_size, reps);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", sec);
    out << label << "\t" << buf << "\n";
    std::cout << label << "\t" << buf << "\ts/entry\n";
  };
  time_model(model->kind(),
             [&](int u, int i) { return model->score(u, i); });
  if (auto* text = dynamic_cast<TextCnnModel*>(model.get())) {
    RepresentationCache cache(*text);
    time_model(model->kind() + "(cached)",
               [&](int u, int i) { return cache.score(u, i); });
  }
  return 0;
}

int cmd_report(const std::vector<std::string>& eval_paths,
               const std::vector<std::string>& bench_paths,
               const std::string& out_path) {
  std::vector<EvalReport> reports;
  for (const auto& path : eval_paths) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open eval report: " + path);
    reports.push_back(read_eval_report(in));
  }
  std::vector<std::pair<std::string, double>> latencies;
  for (const auto& path : bench_paths) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open bench file: " + path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#' || line.rfind("model\t", 0) == 0) continue;
      std::istringstream ls(line);
      std::string model;
      double sec;
      if (ls >> model >> sec) latencies.emplace_back(model, sec);
    }
  }
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  write_comparison(out, reports, latencies);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"review-aware top-N recommendation benchmark"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "write a synthetic block-structured dataset");
  std::string gen_out = "toy.jsonl";
  ToyConfig toy;
  gen->add_option("--out", gen_out, "output file")->required();
  gen->add_option("--users", toy.n_users);
  gen->add_option("--items", toy.n_items);
  gen->add_option("--clusters", toy.n_clusters);
  gen->add_option("--per-user", toy.interactions_per_user, "interactions per user");
  gen->add_option("--noise", toy.noise_prob, "out-of-cluster interaction probability");
  gen->add_option("--review-tokens", toy.review_tokens);
  gen->add_option("--cluster-vocab", toy.cluster_vocab);
  gen->add_option("--seed", toy.seed);

  // prepare
  auto* prepare = app.add_subcommand("prepare", "parse, filter, split and build text artifacts");
  std::string prep_data, prep_out = "out";
  bool prep_strict = false;
  ConfigBinding prep_binding;
  prepare->add_option("--data", prep_data, "line-delimited review records")->required();
  prepare->add_option("--out-dir", prep_out, "artifact directory");
  prepare->add_flag("--strict", prep_strict, "abort on the first malformed line");
  prep_binding.bind(prepare, kPrepareKeys);

  // train
  auto* train = app.add_subcommand("train", "train a model on a prepared split");
  std::string train_data, train_prep = "out", train_out = "model.ckpt", train_log;
  bool train_det = false;
  ConfigBinding train_binding;
  train->add_option("--data", train_data)->required();
  train->add_option("--prep-dir", train_prep);
  train->add_option("--out", train_out, "checkpoint path");
  train->add_option("--log", train_log, "epoch log path");
  train->add_flag("--deterministic", train_det, "force single-threaded training");
  train_binding.bind(train, kTrainKeys);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "two-stage retrieval/rerank evaluation");
  std::string eval_data, eval_prep = "out", eval_model, eval_retr, eval_out =
      "eval.tsv", eval_dump;
  int eval_K = 10, eval_M = 1000, eval_threads = 1;
  bool eval_hr_any = false, eval_timed = false;
  eval_cmd->add_option("--data", eval_data)->required();
  eval_cmd->add_option("--prep-dir", eval_prep);
  eval_cmd->add_option("--model", eval_model, "trained checkpoint")->required();
  eval_cmd->add_option("--retrieval", eval_retr, "bpr-mf retrieval checkpoint")->required();
  eval_cmd->add_option("--out", eval_out);
  eval_cmd->add_option("--per-user", eval_dump, "optional per-user metric dump");
  eval_cmd->add_option("--K", eval_K);
  eval_cmd->add_option("--M", eval_M);
  eval_cmd->add_option("--threads", eval_threads, "user shards for scoring");
  eval_cmd->add_flag("--hr-any", eval_hr_any, "strict binary hit rate");
  eval_cmd->add_flag("--timed", eval_timed,
                     "measure seconds per entry (non-deterministic output)");

  // bench
  auto* bench = app.add_subcommand("bench", "inference speed on reranking pools");
  std::string bench_data, bench_prep = "out", bench_model, bench_retr,
      bench_out = "bench.tsv";
  int bench_M = 1000, bench_batch = 512, bench_reps = 5;
  bench->add_option("--data", bench_data)->required();
  bench->add_option("--prep-dir", bench_prep);
  bench->add_option("--model", bench_model)->required();
  bench->add_option("--retrieval", bench_retr)->required();
  bench->add_option("--out", bench_out);
  bench->add_option("--M", bench_M);
  bench->add_option("--batch-size", bench_batch);
  bench->add_option("--reps", bench_reps);

  // report
  auto* report = app.add_subcommand("report", "merge eval reports with significance tests");
  std::vector<std::string> report_evals, report_benches;
  std::string report_out = "comparison.tsv";
  report->add_option("--eval", report_evals, "eval report (repeatable)")
      ->required()
      ->expected(-2);
  report->add_option("--bench", report_benches, "bench file (repeatable)");
  report->add_option("--out", report_out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_data(gen_out, toy);
    if (prepare->parsed()) return cmd_prepare(prep_binding, prep_data, prep_out, prep_strict);
    if (train->parsed())
      return cmd_train(train_binding, train_data, train_prep, train_out, train_log,
                       train_det);
    if (eval_cmd->parsed())
      return cmd_eval(eval_data, eval_prep, eval_model, eval_retr, eval_out, eval_dump,
                      eval_K, eval_M, eval_hr_any, eval_timed, eval_threads);
    if (bench->parsed())
      return cmd_bench(bench_data, bench_prep, bench_model, bench_retr, bench_out,
                       bench_M, bench_batch, bench_reps);
    if (report->parsed()) return cmd_report(report_evals, report_benches, report_out);
  } catch (const std::exception& e) {
    std::cerr << "toprec: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
