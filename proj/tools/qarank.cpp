// qarank: train, evaluate and inspect answer-selection models from the
// command line. See README.md for the config format.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "qarank/checkpoint.hpp"
#include "qarank/engine.hpp"
#include "qarank/training.hpp"

namespace fs = std::filesystem;
using namespace qarank;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailure = 1;
constexpr int kExitConfigError = 2;

struct CommonArgs {
  std::string config_path;
  std::string checkpoint_path;
  std::string data_path;
  std::string answers_path;
  bool buckets = false;
  std::optional<std::uint64_t> seed;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// A canonical split is a (questions, answers) file pair. --data may point at
// a directory holding questions.tsv/answers.tsv, or at the question file with
// --answers naming its companion.
Dataset load_split(const RunConfig& cfg, const std::string& data_path,
                   const std::string& answers_path, const std::string& split,
                   const Vocabulary& vocab) {
  if (cfg.data_format == "trecqa") {
    std::string path = data_path;
    if (path.empty()) {
      path = split == "train" ? cfg.train_data
             : split == "dev" ? cfg.dev_data
                              : cfg.test_data;
    }
    if (path.empty()) throw Error("no " + split + " data path configured");
    return parse_trecqa(path, vocab);
  }
  std::string qpath, apath;
  if (!data_path.empty()) {
    if (fs::is_directory(data_path)) {
      qpath = (fs::path(data_path) / "questions.tsv").string();
      apath = (fs::path(data_path) / "answers.tsv").string();
    } else {
      qpath = data_path;
      apath = answers_path;
      if (apath.empty()) throw Error("--data names a question file; pass --answers too");
    }
  } else if (split == "train") {
    qpath = cfg.train_questions;
    apath = cfg.train_answers;
  } else if (split == "dev") {
    qpath = cfg.dev_questions;
    apath = cfg.dev_answers;
  } else {
    qpath = cfg.test_questions;
    apath = cfg.test_answers;
  }
  if (qpath.empty() || apath.empty()) {
    throw Error("no " + split + " data paths configured");
  }
  return parse_canonical(qpath, apath, vocab);
}

void print_metrics(const EvalOutput& eval, bool buckets) {
  std::cout << "top1\t" << fmt(top1_accuracy(eval.pools)) << '\n';
  std::cout << "map\t" << fmt(mean_average_precision(eval.pools)) << '\n';
  std::cout << "mrr\t" << fmt(mean_reciprocal_rank(eval.pools)) << '\n';
  if (buckets) {
    for (const BucketRow& row : bucket_accuracy(eval.pools, eval.bucket_labels)) {
      std::cout << row.label << '\t' << row.count << '\t' << fmt(row.accuracy) << '\n';
    }
  }
}

RunConfig load_config(const CommonArgs& args) {
  if (args.config_path.empty()) throw Error("--config is required");
  RunConfig cfg = parse_config(args.config_path);
  if (args.seed) cfg.train.seed = *args.seed;
  return cfg;
}

int cmd_train(const CommonArgs& args) {
  RunConfig cfg = load_config(args);
  Rng rng(cfg.train.seed);
  BuiltModel model = build_model(cfg, rng);

  Dataset train = load_split(cfg, "", "", "train", model.vocab);
  std::optional<Dataset> dev;
  const bool has_dev = cfg.data_format == "trecqa"
                           ? !cfg.dev_data.empty()
                           : !cfg.dev_questions.empty();
  if (has_dev) dev = load_split(cfg, "", "", "dev", model.vocab);

  fs::create_directories(cfg.checkpoint_dir);
  const std::string best_path = (fs::path(cfg.checkpoint_dir) / "best.ckpt").string();
  const std::string last_path = (fs::path(cfg.checkpoint_dir) / "last.ckpt").string();
  std::ofstream log((fs::path(cfg.checkpoint_dir) / "train.log").string());

  const std::string echo = config_echo(cfg);
  auto eval_dev = [&]() -> std::string {
    if (!dev) return "-";
    EvalOutput out = rank_dataset(*dev, model.params, cfg.train.max_length);
    return fmt(metric_value(out.pools, cfg.selection_metric));
  };

  double best_metric = -1.0;
  auto maybe_save_best = [&](const std::string& metric_str) {
    if (!dev) return;
    const double m = std::stod(metric_str);
    if (m > best_metric) {
      best_metric = m;
      save_checkpoint(model.params, model.vocab, echo, best_path);
    }
  };

  // Epoch 0 state: evaluate once and persist so epochs=0 still yields files.
  {
    const std::string metric = eval_dev();
    save_checkpoint(model.params, model.vocab, echo, last_path);
    if (dev) {
      maybe_save_best(metric);
    } else {
      save_checkpoint(model.params, model.vocab, echo, best_path);
    }
  }

  for (std::size_t epoch = 0; epoch < cfg.train.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    EpochStats stats =
        train_epoch(train.examples, train.store, train.store.ids, model.params,
                    cfg.train, rng);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const std::string metric = eval_dev();
    std::ostringstream line;
    line << epoch << '\t' << fmt(stats.mean_loss) << '\t' << fmt(secs) << '\t'
         << metric;
    std::cerr << line.str() << '\n';
    if (log) log << line.str() << '\n';
    save_checkpoint(model.params, model.vocab, echo, last_path);
    if (dev) {
      maybe_save_best(metric);
    } else {
      save_checkpoint(model.params, model.vocab, echo, best_path);
    }
  }
  return kExitOk;
}

// Dimension cross-checks when a config accompanies a checkpoint.
void check_config_against(const RunConfig& cfg, const ModelParams& params) {
  if (cfg.hidden_size != params.hidden()) {
    throw Error("config hidden_size " + std::to_string(cfg.hidden_size) +
                " does not match checkpoint H=" + std::to_string(params.hidden()));
  }
  if (variant_from_name(cfg.variant) != params.variant) {
    throw Error("config variant " + cfg.variant + " does not match checkpoint variant " +
                variant_name(params.variant));
  }
}

int cmd_evaluate(const CommonArgs& args) {
  RunConfig cfg = load_config(args);
  if (args.checkpoint_path.empty()) throw Error("--checkpoint is required");
  LoadedCheckpoint ck = load_checkpoint(args.checkpoint_path);
  check_config_against(cfg, ck.params);
  Dataset data = load_split(cfg, args.data_path, args.answers_path, "test", ck.vocab);
  EvalOutput eval = rank_dataset(data, ck.params, cfg.train.max_length);
  print_metrics(eval, args.buckets);
  return kExitOk;
}

int cmd_rank(const CommonArgs& args, const std::string& question) {
  RunConfig cfg = load_config(args);
  if (args.checkpoint_path.empty()) throw Error("--checkpoint is required");
  if (question.empty()) throw Error("--question is required");
  if (args.data_path.empty()) throw Error("--data (candidate answer file) is required");
  LoadedCheckpoint ck = load_checkpoint(args.checkpoint_path);
  check_config_against(cfg, ck.params);

  std::vector<int> q_tokens;
  {
    std::istringstream in(question);
    std::string token;
    while (in >> token) q_tokens.push_back(ck.vocab.id_or_unk(token));
  }
  if (q_tokens.empty()) throw Error("question has no tokens");
  q_tokens = truncate_tokens(q_tokens, cfg.train.max_length);

  // Candidate file uses the canonical answer format: "<id>\t<tokens>".
  Dataset answers_only;
  {
    std::ifstream in(args.data_path);
    if (!in) throw Error("cannot open candidate file: " + args.data_path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const std::size_t tab = line.find('\t');
      if (tab == std::string::npos) {
        throw Error(args.data_path + ":" + std::to_string(line_no) +
                    ": expected \"<id>\\t<tokens>\"");
      }
      const std::string id = line.substr(0, tab);
      std::vector<int> tokens;
      std::istringstream ts(line.substr(tab + 1));
      std::string token;
      while (ts >> token) tokens.push_back(ck.vocab.id_or_unk(token));
      if (tokens.empty()) {
        throw Error(args.data_path + ":" + std::to_string(line_no) + ": empty answer");
      }
      if (!answers_only.store.answers.emplace(id, std::move(tokens)).second) {
        throw Error(args.data_path + ":" + std::to_string(line_no) +
                    ": duplicate answer id \"" + id + "\"");
      }
      answers_only.store.ids.push_back(id);
    }
  }
  if (answers_only.store.ids.empty()) throw Error("candidate file is empty");

  const EncodedSequence q_enc = encode_tokens(q_tokens, ck.params);
  std::vector<std::pair<std::string, double>> scores;
  for (const std::string& aid : answers_only.store.ids) {
    const std::vector<int> a =
        truncate_tokens(answers_only.store.tokens(aid), cfg.train.max_length);
    scores.emplace_back(aid, score_pair(q_enc, a, ck.params));
  }
  std::sort(scores.begin(), scores.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  for (std::size_t i = 0; i < scores.size(); ++i) {
    std::cout << (i + 1) << '\t' << scores[i].first << '\t' << fmt(scores[i].second)
              << '\n';
  }
  return kExitOk;
}

int cmd_gradcheck(const CommonArgs& args, const std::string& variant_arg,
                  const std::string& corrupt) {
  std::vector<ModelVariant> variants;
  std::string variant_name_str = variant_arg;
  if (variant_name_str.empty() && !args.config_path.empty()) {
    variant_name_str = load_config(args).variant;
  }
  if (variant_name_str.empty() || variant_name_str == "all") {
    variants = {ModelVariant::LstmHeadTail, ModelVariant::LstmAvg,
                ModelVariant::LstmMax,      ModelVariant::LstmCnn,
                ModelVariant::AttAvg,       ModelVariant::AttMax,
                ModelVariant::AttCnn};
  } else {
    variants = {variant_from_name(variant_name_str)};
  }
  const std::uint64_t seed = args.seed.value_or(7);

  bool all_ok = true;
  for (ModelVariant v : variants) {
    GradCheckReport report = grad_check(v, seed, {}, corrupt);
    for (const GradCheckEntry& e : report.entries) {
      const bool ok = e.max_rel_error <= 1e-4;
      std::cout << variant_name(v) << '\t' << e.tensor << '\t'
                << e.max_rel_error << '\t' << (ok ? "ok" : "FAIL") << '\n';
      if (!ok) all_ok = false;
    }
  }
  return all_ok ? kExitOk : kExitCheckFailure;
}

int cmd_baseline(const CommonArgs& args) {
  RunConfig cfg = load_config(args);
  Rng rng(cfg.train.seed);
  auto [vocab, table] = load_word2vec_text(cfg.embeddings_path, rng);

  Dataset data = load_split(cfg, args.data_path, args.answers_path, "test", vocab);

  // idf corpus: training questions when configured, plus all unique answers.
  std::vector<std::vector<int>> corpus;
  const bool has_train = cfg.data_format == "trecqa" ? !cfg.train_data.empty()
                                                     : !cfg.train_questions.empty();
  if (has_train) {
    Dataset train = load_split(cfg, "", "", "train", vocab);
    for (const QAExample& ex : train.examples) corpus.push_back(ex.question);
    for (const std::string& id : train.store.ids) corpus.push_back(train.store.answers.at(id));
  } else {
    for (const QAExample& ex : data.examples) corpus.push_back(ex.question);
  }
  for (const std::string& id : data.store.ids) corpus.push_back(data.store.answers.at(id));

  IdfTable idf = compute_idf(corpus, vocab.size());
  EvalOutput eval = rank_dataset_bow(data, table, idf);
  print_metrics(eval, args.buckets);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"QA-LSTM answer selection engine"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string question;
  std::string gradcheck_variant;
  std::string corrupt_tensor;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", args.config_path, "run configuration file");
    sub->add_option("--checkpoint", args.checkpoint_path, "checkpoint file");
    sub->add_option("--data", args.data_path, "data path (see README)");
    sub->add_option("--answers", args.answers_path, "answer file companion for --data");
    sub->add_flag("--buckets", args.buckets, "print per-bucket accuracy");
    sub->add_option("--seed", args.seed, "override the configured seed");
  };

  CLI::App* train = app.add_subcommand("train", "train a model");
  add_common(train);
  CLI::App* evaluate = app.add_subcommand("evaluate", "evaluate a checkpoint");
  add_common(evaluate);
  CLI::App* rank = app.add_subcommand("rank", "rank candidate answers for one question");
  add_common(rank);
  rank->add_option("--question", question, "space-separated question tokens");
  CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient check");
  add_common(gradcheck);
  gradcheck->add_option("--variant", gradcheck_variant, "model variant or 'all'");
  gradcheck->add_option("--corrupt", corrupt_tensor, "fault-injection hook (tests)");
  CLI::App* baseline = app.add_subcommand("baseline", "idf bag-of-words baseline");
  add_common(baseline);

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(args);
    if (evaluate->parsed()) return cmd_evaluate(args);
    if (rank->parsed()) return cmd_rank(args, question);
    if (gradcheck->parsed()) return cmd_gradcheck(args, gradcheck_variant, corrupt_tensor);
    if (baseline->parsed()) return cmd_baseline(args);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfigError;
  }
  return kExitOk;
}
