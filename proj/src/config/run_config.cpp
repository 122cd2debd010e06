#include "scalant/config/run_config.hpp"

#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "scalant/core/rng.hpp"

namespace scalant {

namespace {

/// Walks one YAML mapping, remembering which keys were read so that
/// leftovers can be reported.
class Section {
 public:
  Section(const YAML::Node& node, std::string path) : node_(node), path_(std::move(path)) {
    if (node_ && !node_.IsMap()) throw Error("config section '" + path_ + "' must be a mapping");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return node_ && node_[key];
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    if (!has(key)) return;
    try {
      out = node_[key].as<T>();
    } catch (const YAML::Exception&) {
      throw Error("config key '" + where(key) + "' has an invalid value");
    }
  }

  void read_path(const std::string& key, std::filesystem::path& out) {
    std::string s;
    read(key, s);
    if (!s.empty()) out = s;
  }

  Section child(const std::string& key) {
    seen_.insert(key);
    return Section(node_ ? node_[key] : YAML::Node(), where(key));
  }

  YAML::Node raw(const std::string& key) {
    seen_.insert(key);
    return node_ ? node_[key] : YAML::Node();
  }

  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    if (!node_) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!seen_.count(key)) throw Error("unknown config key '" + where(key) + "'");
    }
  }

 private:
  YAML::Node node_;
  std::string path_;
  std::set<std::string> seen_;
};

ModelConfig parse_model(Section s) {
  ModelConfig c;
  s.read("vocab_size", c.vocab_size);
  s.read("max_width", c.max_width);
  s.read("width_menu", c.width_menu);
  s.read("encoder_layers", c.n_encoder_layers);
  s.read("decoder_layers", c.n_decoder_layers);
  s.read("head_dim", c.head_dim);
  s.read("ffn_multiplier", c.ffn_multiplier);
  s.read("max_seq_len", c.max_seq_len);
  s.read("layer_norm_eps", c.layer_norm_eps);
  if (s.has("dropout")) {
    c.dropout_by_width.clear();
    const YAML::Node node = s.raw("dropout");
    if (node.IsScalar()) {
      const double rate = node.as<double>();
      for (auto w : c.width_menu) c.dropout_by_width[w] = rate;
    } else if (node.IsMap()) {
      for (const auto& kv : node) c.dropout_by_width[kv.first.as<std::size_t>()] = kv.second.as<double>();
    } else {
      throw Error("config key 'model.dropout' must be a rate or a width: rate mapping");
    }
  }
  s.finish();
  return c;
}

void parse_stage(Section s, StageConfig& c, std::filesystem::path* init_from) {
  std::string variant;
  s.read("variant", variant);
  if (!variant.empty()) c.variant = parse_variant(variant);
  s.read("n_sampled", c.n_sampled);
  s.read("lambda2_threshold", c.lambda2_threshold);
  s.read("lambda3", c.lambda3);
  s.read("max_lr", c.max_lr);
  s.read("init_lr", c.init_lr);
  s.read("warmup_iters", c.warmup_iters);
  s.read("epochs", c.epochs);
  s.read("max_updates", c.max_updates);
  s.read("label_smoothing", c.label_smoothing);
  s.read("grad_accum_steps", c.grad_accum_steps);
  s.read("token_budget", c.token_budget);
  s.read("adam_beta1", c.adam.beta1);
  s.read("adam_beta2", c.adam.beta2);
  s.read("adam_eps", c.adam.eps);
  s.read("average_last", c.average_last);
  if (init_from) s.read_path("init_from", *init_from);
  s.finish();
}

void parse_data(Section s, DataConfig& d) {
  std::string task;
  s.read("task", task);
  if (!task.empty()) d.task = parse_task_kind(task);
  s.read("train_pairs", d.train_pairs);
  s.read("valid_pairs", d.valid_pairs);
  s.read("test_pairs", d.test_pairs);
  s.read("min_len", d.min_len);
  s.read("max_len", d.max_len);
  s.read_path("train", d.train_file);
  s.read_path("valid", d.valid_file);
  s.read_path("test", d.test_file);
  s.finish();
}

void parse_distill(Section s, DistillSettings& d, std::size_t& max_sources, std::filesystem::path& teacher) {
  s.read("beam", d.beam);
  s.read("alpha", d.alpha);
  std::string ratio;
  s.read("ratio_cap", ratio);
  if (!ratio.empty()) d.ratio_cap = ratio == "inf" ? std::numeric_limits<double>::infinity() : std::stod(ratio);
  s.read("len_cap", d.len_cap);
  s.read("max_len", d.max_len);
  s.read("max_sources", max_sources);
  s.read_path("teacher", teacher);
  s.finish();
}

void parse_search(Section s, SearchOptions& o, std::filesystem::path& checkpoint) {
  s.read("menu_subset", o.menu_subset);
  s.read("samples", o.n_samples);
  s.read("top_k", o.top_k);
  s.read("token_budget", o.token_budget);
  std::string metric;
  s.read("metric", metric);
  if (metric == "bleu") o.metric = SearchMetric::Bleu;
  else if (metric == "accuracy" || metric.empty()) o.metric = SearchMetric::Accuracy;
  else throw Error("search.metric must be 'accuracy' or 'bleu'");
  s.read_path("checkpoint", checkpoint);
  s.finish();
}

RunConfig parse_root(const YAML::Node& root) {
  if (!root || !root.IsMap()) throw Error("run configuration must be a YAML mapping");
  RunConfig rc;
  Section s(root, "");
  rc.model = parse_model(s.child("model"));
  parse_data(s.child("data"), rc.data);

  StageConfig common;
  parse_stage(s.child("training"), common, nullptr);
  for (int k = 0; k < 3; ++k) {
    rc.stages[k] = common;
    rc.stages[k].stage = k + 1;
    parse_stage(s.child("stage" + std::to_string(k + 1)), rc.stages[k], &rc.init_from[k]);
  }
  parse_distill(s.child("distill"), rc.distill, rc.distill_max_sources, rc.teacher_checkpoint);
  parse_search(s.child("search"), rc.search, rc.search_checkpoint);
  Section dec = s.child("decode");
  dec.read("beam", rc.decode.beam);
  dec.read("alpha", rc.decode.alpha);
  dec.finish();
  s.read_path("out_dir", rc.out_dir);
  s.read("seed", rc.seed);
  s.finish();
  return rc;
}

}  // namespace

std::uint64_t derived_seed(std::uint64_t run_seed, std::size_t index) {
  Rng rng(run_seed);
  std::uint64_t v = rng.next();
  for (std::size_t i = 0; i < index; ++i) v = rng.next();
  return v;
}

std::filesystem::path RunConfig::stage_checkpoint(int stage) const {
  return out_dir / ("stage" + std::to_string(stage) + ".ckpt");
}

void RunConfig::finalize() {
  model.validate();
  if (!data.task && data.train_file.empty()) throw Error("data needs either a task or a train file");
  if (data.task && !data.train_file.empty()) throw Error("data.task and data.train are mutually exclusive");
  if (data.task && (data.min_len < 1 || data.min_len > data.max_len))
    throw Error("data lengths must satisfy 1 <= min_len <= max_len");
  if (!data.train_file.empty() && data.valid_file.empty()) throw Error("data.valid is required with data.train");
  for (int k = 0; k < 3; ++k) {
    stages[k].stage = k + 1;
    stages[k].seed = derived_seed(seed, static_cast<std::size_t>(k + 1));
    stages[k].validate();
    if (k > 0 && init_from[k].empty()) init_from[k] = stage_checkpoint(k);
  }
  if (teacher_checkpoint.empty()) teacher_checkpoint = stage_checkpoint(2);
  if (search_checkpoint.empty()) search_checkpoint = stage_checkpoint(3);
  if (search.menu_subset.empty()) search.menu_subset = model.width_menu;
  for (auto w : search.menu_subset)
    if (!model.in_menu(w)) throw Error("search width " + std::to_string(w) + " is not in model.width_menu");
  search.seed = derived_seed(seed, 4);
  if (distill.beam < 1 || decode.beam < 1) throw Error("beam sizes must be at least 1");
  if (!(distill.alpha >= 0.0) || !(decode.alpha >= 0.0)) throw Error("length penalties must be nonnegative");
  if (!(distill.ratio_cap >= 1.0)) throw Error("distill.ratio_cap must be at least 1");
}

RunConfig parse_run_config(const std::string& yaml_text) {
  try {
    return parse_root(YAML::Load(yaml_text));
  } catch (const YAML::Exception& e) {
    throw Error(std::string("invalid YAML: ") + e.what());
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse_run_config(text.str());
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

}  // namespace scalant
