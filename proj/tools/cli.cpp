#include "cli.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdlib>
#include <iomanip>
#include <optional>
#include <ostream>

#include <CLI11.hpp>

#include "scalant/config/run_config.hpp"
#include "scalant/data/vocab.hpp"
#include "scalant/decoding/distill.hpp"
#include "scalant/decoding/search.hpp"
#include "scalant/eval/cost.hpp"
#include "scalant/eval/metrics.hpp"
#include "scalant/eval/search.hpp"
#include "scalant/model/checkpoint.hpp"
#include "scalant/training/trainer.hpp"

namespace scalant::cli {

namespace {

struct Flags {
  std::string config;
  int stage = 0;
  std::string spec;
  std::optional<std::size_t> beam;
  std::optional<double> alpha;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string checkpoint;
  std::vector<std::string> paths;
};

RunConfig load_config(const Flags& f) {
  if (f.config.empty()) throw Error("--config is required");
  RunConfig rc = load_run_config(f.config);
  if (f.seed) rc.seed = *f.seed;
  if (!f.out.empty()) rc.out_dir = f.out;
  if (f.beam) rc.decode.beam = rc.distill.beam = *f.beam;
  if (f.alpha) rc.decode.alpha = rc.distill.alpha = *f.alpha;
  rc.finalize();
  return rc;
}

void require_file(const std::filesystem::path& path, const std::string& what) {
  if (!std::filesystem::exists(path)) throw Error("missing " + what + ": " + path.string());
}

Vocab load_vocab(const RunConfig& rc) {
  require_file(rc.vocab_path(), "vocabulary (run prep first)");
  return Vocab::load(rc.vocab_path());
}

Corpus load_split(const RunConfig& rc, const Vocab& vocab, const std::string& name) {
  const auto path = rc.data_dir() / (name + ".tsv");
  require_file(path, name + " split (run prep first)");
  return encode_corpus(vocab, read_text_pairs(path));
}

ParameterStore load_model(const std::filesystem::path& path, const RunConfig& rc) {
  require_file(path, "checkpoint");
  Checkpoint ck = load_checkpoint(path);
  if (!(ck.store.config() == rc.model)) throw Error("checkpoint " + path.string() + " was trained with a different model config");
  return std::move(ck.store);
}

std::string display(const WidthSpec& spec) {
  return spec.is_type1() ? std::to_string(spec.io_width) : spec.to_string();
}

std::vector<WidthSpec> specs_to_report(const RunConfig& rc, const std::string& spec) {
  if (!spec.empty()) {
    auto s = WidthSpec::parse(spec, rc.model.n_layers());
    s.validate(rc.model);
    return {s};
  }
  std::vector<WidthSpec> all;
  for (auto w : rc.model.width_menu) all.push_back(WidthSpec::uniform(w, rc.model.n_layers()));
  return all;
}

int cmd_prep(const Flags& f, std::ostream& out) {
  const RunConfig rc = load_config(f);
  std::vector<TextPair> train, valid, test;
  if (rc.data.task) {
    const auto& d = rc.data;
    const std::size_t content = rc.model.vocab_size;
    train = ids_as_text(synth_task(*d.task, d.train_pairs, content, d.min_len, d.max_len, derived_seed(rc.seed, 5)));
    valid = ids_as_text(synth_task(*d.task, d.valid_pairs, content, d.min_len, d.max_len, derived_seed(rc.seed, 6)));
    test = ids_as_text(synth_task(*d.task, d.test_pairs, content, d.min_len, d.max_len, derived_seed(rc.seed, 7)));
  } else {
    train = read_text_pairs(rc.data.train_file);
    valid = read_text_pairs(rc.data.valid_file);
    test = rc.data.test_file.empty() ? valid : read_text_pairs(rc.data.test_file);
  }
  std::vector<std::string> sentences;
  for (const auto& [s, t] : train) {
    sentences.push_back(s);
    sentences.push_back(t);
  }
  const Vocab vocab = Vocab::build(sentences, rc.model.vocab_size);
  std::filesystem::create_directories(rc.data_dir());
  vocab.save(rc.vocab_path());
  write_text_pairs(rc.data_dir() / "train.tsv", train);
  write_text_pairs(rc.data_dir() / "valid.tsv", valid);
  write_text_pairs(rc.data_dir() / "test.tsv", test);
  out << "vocabulary " << vocab.size() << " entries, train " << train.size() << ", valid " << valid.size()
      << ", test " << test.size() << " pairs -> " << rc.data_dir().string() << '\n';
  return 0;
}

int cmd_train(const Flags& f, std::ostream& out) {
  const RunConfig rc = load_config(f);
  if (f.stage < 1 || f.stage > 3) throw Error("--stage must be 1, 2 or 3");
  const StageConfig& stage = rc.stages[f.stage - 1];
  const Vocab vocab = load_vocab(rc);
  const Corpus valid = load_split(rc, vocab, "valid");

  Corpus train;
  if (f.stage == 3) {
    require_file(rc.distill_path(), "distillation corpus required by stage 3 (run generate-targets)");
    train = load_distill_corpus(rc.distill_path(), vocab).pairs;
  } else {
    train = load_split(rc, vocab, "train");
  }

  const auto& init = rc.init_from[f.stage - 1];
  if (f.stage > 1) require_file(init, "stage " + std::to_string(f.stage - 1) + " checkpoint required by stage " + std::to_string(f.stage));
  ParameterStore store = init.empty() ? ParameterStore::initialized(rc.model, derived_seed(rc.seed, 0))
                                      : load_model(init, rc);

  TrainOptions options;
  options.out_dir = rc.out_dir / ("stage" + std::to_string(f.stage));
  options.progress = &out;
  out << metrics_header() << '\n';
  const StageResult result = train_stage(store, train, valid, stage, options);
  save_checkpoint(rc.stage_checkpoint(f.stage), store,
                  {{"stage", std::to_string(f.stage)},
                   {"seed", std::to_string(rc.seed)},
                   {"updates", std::to_string(result.updates)}});
  out << "stage " << f.stage << ": " << result.updates << " updates in " << std::fixed << std::setprecision(1)
      << result.seconds << " s -> " << rc.stage_checkpoint(f.stage).string() << '\n';
  out.unsetf(std::ios::floatfield);
  return 0;
}

int cmd_generate_targets(const Flags& f, std::ostream& out) {
  const RunConfig rc = load_config(f);
  const Vocab vocab = load_vocab(rc);
  const Corpus train = load_split(rc, vocab, "train");
  const ParameterStore store = load_model(rc.teacher_checkpoint, rc);
  std::vector<TokenSeq> sources;
  const std::size_t n = rc.distill_max_sources ? std::min(rc.distill_max_sources, train.size()) : train.size();
  for (std::size_t i = 0; i < n; ++i) sources.push_back(train[i].source);
  const SubModel teacher(store, WidthSpec::widest(rc.model));
  DistillCorpus corpus = generate_distill_corpus(teacher, sources, rc.distill);
  corpus.provenance["checkpoint"] = rc.teacher_checkpoint.string();
  save_distill_corpus(rc.distill_path(), corpus, vocab);
  out << "kept " << corpus.pairs.size() << " of " << sources.size() << " pairs -> " << rc.distill_path().string()
      << '\n';
  return 0;
}

int cmd_eval(const Flags& f, std::ostream& out) {
  const RunConfig rc = load_config(f);
  const Vocab vocab = load_vocab(rc);
  const Corpus test = load_split(rc, vocab, "test");
  const auto path = f.checkpoint.empty() ? rc.stage_checkpoint(3) : std::filesystem::path(f.checkpoint);
  const ParameterStore store = load_model(path, rc);
  std::vector<TokenSeq> sources, refs;
  for (const auto& p : test) {
    sources.push_back(p.source);
    refs.push_back(p.target);
  }
  out << std::left << std::setw(32) << "spec" << std::right << std::setw(12) << "params" << std::setw(12) << "accuracy"
      << std::setw(12) << "nll" << std::setw(12) << "bleu" << '\n';
  for (const auto& spec : specs_to_report(rc, f.spec)) {
    const SubModel sub(store, spec);
    const auto acc = token_accuracy(sub, test);
    std::vector<TokenSeq> hyps;
    for (auto& h : beam_search_batch(sub, sources, rc.decode.beam, rc.decode.alpha)) hyps.push_back(strip_eos(h.tokens));
    out << std::left << std::setw(32) << display(spec) << std::right << std::setw(12)
        << static_cast<std::size_t>(count_params(rc.model, spec)) << std::fixed << std::setprecision(4)
        << std::setw(12) << acc.accuracy << std::setw(12) << acc.nll << std::setw(12) << bleu(hyps, refs) << '\n';
    out.unsetf(std::ios::floatfield);
  }
  return 0;
}

int cmd_search(const Flags& f, std::ostream& out) {
  const RunConfig rc = load_config(f);
  const Vocab vocab = load_vocab(rc);
  const Corpus valid = load_split(rc, vocab, "valid");
  const auto path = f.checkpoint.empty() ? rc.search_checkpoint : std::filesystem::path(f.checkpoint);
  const ParameterStore store = load_model(path, rc);
  const SearchReport report = random_search_type2(store, valid, rc.search);
  const auto csv = rc.out_dir / "search.csv";
  write_search_csv(csv, report);
  out << report.ranked.size() << " distinct specs from " << report.draws << " draws over " << report.candidates
      << " candidates\n";
  for (std::size_t i = 0; i < report.top_k; ++i)
    out << std::setw(4) << i + 1 << "  " << report.ranked[i].spec.to_string() << "  " << report.ranked[i].metric << '\n';
  out << "top-" << report.top_k << ": " << report.top_summary() << "   widest: " << report.widest.metric << '\n';
  out << (report.beats_widest ? "a sampled sub-model beats the widest model\n"
                              : "no sampled sub-model beat the widest model\n");
  out << "report -> " << csv.string() << '\n';
  return 0;
}

int cmd_info(const Flags& f, std::ostream& out) {
  const RunConfig rc = load_config(f);
  const auto& m = rc.model;
  out << "vocab " << m.vocab_size << ", max width " << m.max_width << ", layers " << m.n_encoder_layers << "+"
      << m.n_decoder_layers << ", head dim " << m.head_dim << "\n";
  out << std::left << std::setw(32) << "spec" << std::right << std::setw(14) << "params (M)" << std::setw(16)
      << "no proj (M)" << std::setw(14) << "FLOPs (G)" << '\n';
  out << std::fixed;
  for (const auto& spec : specs_to_report(rc, f.spec)) {
    out << std::left << std::setw(32) << display(spec) << std::right << std::setprecision(2) << std::setw(14)
        << count_params(m, spec, true) / 1e6 << std::setw(16) << count_params(m, spec, false) / 1e6 << std::setw(14)
        << estimate_flops(m, spec) / 1e9 << '\n';
  }
  out.unsetf(std::ios::floatfield);
  return 0;
}

int cmd_average(const Flags& f, std::ostream& out) {
  if (f.paths.empty()) throw Error("average needs checkpoint paths");
  if (f.out.empty()) throw Error("average needs --out");
  std::vector<std::filesystem::path> paths(f.paths.begin(), f.paths.end());
  for (const auto& p : paths) require_file(p, "checkpoint");
  const ParameterStore avg = average_checkpoints(paths);
  save_checkpoint(f.out, avg, {{"averaged", std::to_string(paths.size())}});
  out << "averaged " << paths.size() << " checkpoints -> " << f.out << '\n';
  return 0;
}

void apply_thread_cap() {
  if (const char* env = std::getenv("SCALANT_THREADS")) {
    const int n = std::atoi(env);
    if (n < 1) throw Error("SCALANT_THREADS must be a positive integer");
    omp_set_num_threads(n);
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Scalable Transformer toolkit: one shared model trained so that every width slice translates");
  app.require_subcommand(1);
  Flags f;

  auto add_config = [&](CLI::App* c) { c->add_option("--config", f.config, "YAML run configuration")->required(); };
  auto add_run = [&](CLI::App* c) {
    c->add_option("--seed", f.seed, "override the run seed");
    c->add_option("--out", f.out, "override the output directory");
  };

  auto* prep = app.add_subcommand("prep", "write the data splits and vocabulary");
  add_config(prep);
  add_run(prep);

  auto* train = app.add_subcommand("train", "run one training stage");
  add_config(train);
  add_run(train);
  train->add_option("--stage", f.stage, "stage to run")->required()->check(CLI::Range(1, 3));

  auto* gen = app.add_subcommand("generate-targets", "beam-decode the training sources with the widest model");
  add_config(gen);
  add_run(gen);
  gen->add_option("--beam", f.beam, "beam size");
  gen->add_option("--alpha", f.alpha, "length penalty exponent");

  auto* eval = app.add_subcommand("eval", "evaluate sub-models on the test split");
  add_config(eval);
  add_run(eval);
  eval->add_option("--spec", f.spec, "width spec C:D1,...,DL or a bare width; default every menu width");
  eval->add_option("--checkpoint", f.checkpoint, "checkpoint to evaluate; default the stage 3 result");
  eval->add_option("--beam", f.beam, "beam size");
  eval->add_option("--alpha", f.alpha, "length penalty exponent");

  auto* search = app.add_subcommand("search", "random search over type-2 sub-models");
  add_config(search);
  add_run(search);
  search->add_option("--checkpoint", f.checkpoint, "checkpoint to search; default from the config");

  auto* info = app.add_subcommand("info", "parameter and FLOPs table");
  add_config(info);
  add_run(info);
  info->add_option("--spec", f.spec, "width spec; default every menu width");

  auto* average = app.add_subcommand("average", "elementwise mean of checkpoints");
  average->add_option("paths", f.paths, "checkpoints to average")->required();
  average->add_option("--out", f.out, "output checkpoint")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    apply_thread_cap();
    if (prep->parsed()) return cmd_prep(f, out);
    if (train->parsed()) return cmd_train(f, out);
    if (gen->parsed()) return cmd_generate_targets(f, out);
    if (eval->parsed()) return cmd_eval(f, out);
    if (search->parsed()) return cmd_search(f, out);
    if (info->parsed()) return cmd_info(f, out);
    if (average->parsed()) return cmd_average(f, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace scalant::cli
