#include "qarank/config.hpp"

#include <fstream>
#include <sstream>

#include "qarank/composition.hpp"
#include "qarank/scoring.hpp"

namespace qarank {
namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw Error("config: bad numeric value for " + key + ": \"" + v + "\"");
  }
}

std::size_t parse_size(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    const long long x = std::stoll(v, &used);
    if (used != v.size() || x < 0) throw std::invalid_argument(v);
    return static_cast<std::size_t>(x);
  } catch (const std::exception&) {
    throw Error("config: bad integer value for " + key + ": \"" + v + "\"");
  }
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error("config: bad boolean value for " + key + ": \"" + v + "\"");
}

}  // namespace

void RunConfig::validate() const {
  variant_from_name(variant);
  similarity_from_name(similarity);
  if (hidden_size < 1) throw Error("config: hidden_size must be >= 1");
  if (filter_width < 1) throw Error("config: filter_width must be >= 1");
  if (kmax < 1) throw Error("config: kmax must be >= 1");
  if (att_query_pool != "auto" && att_query_pool != "avg" && att_query_pool != "max") {
    throw Error("config: att_query_pool must be auto, avg or max");
  }
  if (data_format != "canonical" && data_format != "trecqa") {
    throw Error("config: data_format must be canonical or trecqa");
  }
  if (selection_metric != "top1" && selection_metric != "map" &&
      selection_metric != "mrr") {
    throw Error("config: selection_metric must be top1, map or mrr");
  }
  train.validate();
}

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(origin + ":" + std::to_string(line_no) +
                  ": expected \"key = value\"");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw Error(origin + ":" + std::to_string(line_no) + ": empty key");
    }

    if (key == "variant") cfg.variant = value;
    else if (key == "similarity") cfg.similarity = value;
    else if (key == "gesd_gamma") cfg.gesd_gamma = parse_double(value, key);
    else if (key == "gesd_c") cfg.gesd_c = parse_double(value, key);
    else if (key == "hidden_size") cfg.hidden_size = parse_size(value, key);
    else if (key == "attention_dim") cfg.attention_dim = parse_size(value, key);
    else if (key == "filter_count") cfg.filter_count = parse_size(value, key);
    else if (key == "filter_width") cfg.filter_width = parse_size(value, key);
    else if (key == "kmax") cfg.kmax = parse_size(value, key);
    else if (key == "trainable_embeddings") cfg.trainable_embeddings = parse_bool(value, key);
    else if (key == "att_query_pool") cfg.att_query_pool = value;
    else if (key == "batch_size") cfg.train.batch_size = parse_size(value, key);
    else if (key == "max_length") cfg.train.max_length = parse_size(value, key);
    else if (key == "margin") cfg.train.margin = parse_double(value, key);
    else if (key == "learning_rate") cfg.train.learning_rate = parse_double(value, key);
    else if (key == "dropout") cfg.train.dropout = parse_double(value, key);
    else if (key == "negative_samples") cfg.train.negatives = parse_size(value, key);
    else if (key == "epochs") cfg.train.epochs = parse_size(value, key);
    else if (key == "seed") cfg.train.seed = parse_size(value, key);
    else if (key == "embeddings") cfg.embeddings_path = value;
    else if (key == "data_format") cfg.data_format = value;
    else if (key == "train_questions") cfg.train_questions = value;
    else if (key == "train_answers") cfg.train_answers = value;
    else if (key == "dev_questions") cfg.dev_questions = value;
    else if (key == "dev_answers") cfg.dev_answers = value;
    else if (key == "test_questions") cfg.test_questions = value;
    else if (key == "test_answers") cfg.test_answers = value;
    else if (key == "train_data") cfg.train_data = value;
    else if (key == "dev_data") cfg.dev_data = value;
    else if (key == "test_data") cfg.test_data = value;
    else if (key == "checkpoint_dir") cfg.checkpoint_dir = value;
    else if (key == "selection_metric") cfg.selection_metric = value;
    else {
      throw Error(origin + ":" + std::to_string(line_no) + ": unknown key \"" + key +
                  "\"");
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

std::string config_echo(const RunConfig& cfg) {
  std::ostringstream out;
  out.precision(17);
  out << "variant = " << cfg.variant << '\n'
      << "similarity = " << cfg.similarity << '\n'
      << "gesd_gamma = " << cfg.gesd_gamma << '\n'
      << "gesd_c = " << cfg.gesd_c << '\n'
      << "hidden_size = " << cfg.hidden_size << '\n'
      << "attention_dim = " << cfg.attention_dim << '\n'
      << "filter_count = " << cfg.filter_count << '\n'
      << "filter_width = " << cfg.filter_width << '\n'
      << "kmax = " << cfg.kmax << '\n'
      << "trainable_embeddings = " << (cfg.trainable_embeddings ? "true" : "false") << '\n'
      << "att_query_pool = " << cfg.att_query_pool << '\n'
      << "batch_size = " << cfg.train.batch_size << '\n'
      << "max_length = " << cfg.train.max_length << '\n'
      << "margin = " << cfg.train.margin << '\n'
      << "learning_rate = " << cfg.train.learning_rate << '\n'
      << "dropout = " << cfg.train.dropout << '\n'
      << "negative_samples = " << cfg.train.negatives << '\n'
      << "epochs = " << cfg.train.epochs << '\n'
      << "seed = " << cfg.train.seed << '\n'
      << "data_format = " << cfg.data_format << '\n'
      << "selection_metric = " << cfg.selection_metric << '\n';
  return out.str();
}

}  // namespace qarank
