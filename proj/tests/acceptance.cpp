// Acceptance checks for the toolkit. Prints one PASS/FAIL line per criterion
// and exits non-zero when any criterion fails. Arguments select criteria by
// number; with none, all nine run in order.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "decode_oracle.hpp"
#include "direct_forward.hpp"
#include "scalant/config/run_config.hpp"
#include "scalant/core/kernels.hpp"
#include "scalant/data/batching.hpp"
#include "scalant/decoding/distill.hpp"
#include "scalant/decoding/search.hpp"
#include "scalant/eval/cost.hpp"
#include "scalant/eval/metrics.hpp"
#include "scalant/eval/search.hpp"
#include "scalant/model/checkpoint.hpp"
#include "scalant/model/transformer.hpp"
#include "scalant/training/adam.hpp"
#include "scalant/training/losses.hpp"
#include "scalant/training/schedule.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace scalant;
using namespace scalant::testing;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      notes.push_back("FAILED " + what);
    }
  }
  void note(const std::string& s) { notes.push_back(s); }
};

std::string fixed(double v, int precision) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

std::string sci(double v) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(2) << v;
  return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

bool bits_equal(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

fs::path work_dir() {
  if (const char* env = std::getenv("SCALANT_ACCEPTANCE_DIR")) return env;
  return fs::current_path() / "acceptance_work";
}

Batch small_batch(std::uint64_t seed, std::size_t pairs, std::size_t vocab) {
  Rng rng(seed);
  Corpus c;
  for (std::size_t i = 0; i < pairs; ++i) c.push_back({random_tokens(rng, 2 + rng.index(4), vocab), random_tokens(rng, 1 + rng.index(4), vocab)});
  std::vector<std::size_t> idx(pairs);
  for (std::size_t i = 0; i < pairs; ++i) idx[i] = i;
  return make_batch(c, idx);
}

// ---- 1: gradients ----

Outcome gradient_correctness() {
  Outcome out;
  const auto start = std::chrono::steady_clock::now();
  using Loss = std::function<ad::Var(ad::Tape&, const std::vector<ad::Var>&)>;
  std::vector<std::tuple<std::string, Loss, std::vector<Tensor>>> cases;
  Rng rng(1);
  const Tensor a = random_tensor({3, 4}, rng), b = random_tensor({3, 4}, rng), c = random_tensor({3, 4}, rng);
  const Tensor m1 = random_tensor({3, 5}, rng), m2 = random_tensor({5, 4}, rng), m2t = random_tensor({4, 5}, rng);
  const Tensor bias = random_tensor({4}, rng), rows = random_tensor({2, 4}, rng), cols = random_tensor({3, 2}, rng);
  const Tensor wide = random_tensor({4, 6}, rng, -3, 3), cube = random_tensor({2, 3, 4}, rng, -3, 3);
  const Tensor gain = random_tensor({6}, rng), shift = random_tensor({6}, rng);
  Tensor kinked = random_tensor({4, 5}, rng);
  for (double& v : kinked.data()) v += v > 0 ? 0.1 : -0.1;
  Tensor soft({5, 7});
  for (std::size_t r = 0; r < 5; ++r) {
    double s = 0.0;
    for (std::size_t k = 0; k < 7; ++k) s += (soft.at(r, k) = rng.uniform());
    for (std::size_t k = 0; k < 7; ++k) soft.at(r, k) /= s;
  }
  const Tensor logits = random_tensor({5, 7}, rng, -2, 2);
  const Tensor weight = Tensor::vector({1, 0, 1, 1, 0.5});
  const std::vector<int> ids{2, 0, 2, 1};

  cases.emplace_back("add", [](ad::Tape&, const auto& x) { return project(ad::add(x[0], x[1]), 1); }, std::vector{a, b});
  cases.emplace_back("sub", [](ad::Tape&, const auto& x) { return project(ad::sub(x[0], x[1]), 2); }, std::vector{a, b});
  cases.emplace_back("mul", [](ad::Tape&, const auto& x) { return project(ad::mul(x[0], x[1]), 3); }, std::vector{a, b});
  cases.emplace_back("scale", [](ad::Tape&, const auto& x) { return project(ad::scale(x[0], -2.5), 4); }, std::vector{a});
  cases.emplace_back("add_constant", [c](ad::Tape&, const auto& x) { return project(ad::add_constant(x[0], c), 5); }, std::vector{a});
  cases.emplace_back("relu", [](ad::Tape&, const auto& x) { return project(ad::relu(x[0]), 6); }, std::vector{kinked});
  cases.emplace_back("dropout", [](ad::Tape&, const auto& x) { Rng mask(9); return project(ad::dropout(x[0], 0.3, mask, true), 7); }, std::vector{wide});
  cases.emplace_back("matmul", [](ad::Tape&, const auto& x) { return project(ad::matmul(x[0], x[1]), 8); }, std::vector{m1, m2});
  cases.emplace_back("matmul_nt", [](ad::Tape&, const auto& x) { return project(ad::matmul_nt(x[0], x[1]), 9); }, std::vector{m1, m2t});
  cases.emplace_back("linear", [](ad::Tape&, const auto& x) { return project(ad::linear(x[0], x[1], x[2]), 10); }, std::vector{m1, m2, bias});
  cases.emplace_back("transpose", [](ad::Tape&, const auto& x) { return project(ad::transpose(x[0]), 11); }, std::vector{a});
  cases.emplace_back("concat rows", [](ad::Tape&, const auto& x) { return project(ad::concat({x[0], x[1]}, 0), 12); }, std::vector{a, rows});
  cases.emplace_back("concat cols", [](ad::Tape&, const auto& x) { return project(ad::concat({x[0], x[1]}, 1), 13); }, std::vector{a, cols});
  cases.emplace_back("slice", [](ad::Tape&, const auto& x) { return project(ad::slice(x[0], 1, 1, 3), 14); }, std::vector{a});
  cases.emplace_back("gather_rows", [ids](ad::Tape&, const auto& x) { return project(ad::gather_rows(x[0], ids), 15); }, std::vector{a});
  cases.emplace_back("sum", [](ad::Tape&, const auto& x) { return ad::sum(ad::mul(x[0], x[0])); }, std::vector{wide});
  cases.emplace_back("softmax", [](ad::Tape&, const auto& x) { return project(ad::softmax(x[0], 1), 16); }, std::vector{wide});
  cases.emplace_back("softmax rank 3", [](ad::Tape&, const auto& x) { return project(ad::softmax(x[0], 1), 17); }, std::vector{cube});
  cases.emplace_back("layer_norm", [](ad::Tape&, const auto& x) { return project(ad::layer_norm(x[0], x[1], x[2], 1e-5), 18); }, std::vector{wide, gain, shift});
  cases.emplace_back("cross_entropy", [soft, weight](ad::Tape&, const auto& x) { return ad::cross_entropy(x[0], soft, weight); }, std::vector{logits});
  cases.emplace_back("cross_entropy tempered", [soft, weight](ad::Tape&, const auto& x) { return ad::cross_entropy(x[0], soft, weight, 10.0); }, std::vector{logits});
  for (bool causal : {false, true}) {
    const kernels::AttentionShape s{2, 3, 4, 2, 3, causal, causal ? 1u : 0u};
    cases.emplace_back(causal ? "attention causal" : "attention",
                       [s](ad::Tape&, const auto& x) { return project(ad::attention(x[0], x[1], x[2], s, {4, 3}), 19); },
                       std::vector{random_tensor({6, 6}, rng), random_tensor({8, 6}, rng), random_tensor({8, 6}, rng)});
  }

  double worst = 0.0;
  std::string worst_name;
  for (auto& [name, loss, inputs] : cases) {
    const double err = gradcheck(loss, inputs);
    out.require(err < 1e-4, name + " relative error " + sci(err));
    if (err >= worst) {
      worst = err;
      worst_name = name;
    }
  }

  // Whole 2+2 layer encoder-decoder, every parameter, through the stage 1 loss.
  const ParameterStore store = random_store(tiny_config(), 12);
  const Batch batch = small_batch(13, 2, 9);
  const std::vector<WidthSpec> specs{WidthSpec::parse("8:4,8,4,4", 4)};
  GradientBuffer grads(store);
  {
    ad::Tape tape;
    TapeBinding binding(tape, store);
    tape.backward(stage1_loss(binding, batch, specs, 0.1).total);
    binding.collect(grads);
  }
  auto loss_at = [&](const ParameterStore& s) {
    ad::Tape tape;
    TapeBinding binding(tape, s, false);
    return stage1_loss(binding, batch, specs, 0.1).total.value()[0];
  };
  ParameterStore probe = store;
  double model_worst = 0.0;
  std::size_t checked = 0;
  for (std::size_t i = 0; i < probe.size(); ++i)
    for (std::size_t e = 0; e < probe.value(i).size(); ++e) {
      double& x = probe.value(i)[e];
      const double saved = x;
      x = saved + 1e-5;
      const double up = loss_at(probe);
      x = saved - 1e-5;
      const double down = loss_at(probe);
      x = saved;
      model_worst = std::max(model_worst, relative_error(grads.grad(i)[e], (up - down) / 2e-5));
      ++checked;
    }
  out.require(model_worst < 1e-4, "full model relative error " + sci(model_worst));
  const double elapsed = seconds_since(start);
  out.require(elapsed < 60.0, "suite took " + fixed(elapsed, 1) + " s");
  out.note(std::to_string(cases.size()) + " op cases, worst relative error " + sci(worst) + " (" + worst_name + ")");
  out.note("full model " + std::to_string(checked) + " parameters, worst relative error " + sci(model_worst));
  out.note(fixed(elapsed, 1) + " s");
  return out;
}

// ---- 2: weight sharing ----

Outcome weight_sharing() {
  Outcome out;
  ParameterStore store = random_store(tiny_config(), 10);
  const ParameterStore before = store;
  const auto spec = WidthSpec::parse("4:8,4,4,8", 4);
  const Batch batch = small_batch(11, 4, 9);
  GradientBuffer grads(store);
  {
    ad::Tape tape;
    TapeBinding binding(tape, store);
    const SubModel sub(store, spec);
    const ad::Var logits = forward_logits(binding, sub, batch.source, batch.target_in, {});
    tape.backward(ad::cross_entropy(logits, hard_targets(batch.target_out, 9, 0.1), position_weights(batch.target_out)));
    binding.collect(grads);
  }
  Adam adam(store);
  adam.step(store, grads, 1e-3);
  std::size_t active = 0, changed = 0, outside_changed = 0, zero_grad_unchanged = 0, mismatched = 0;
  for (std::size_t i = 0; i < store.size(); ++i) {
    const Block blk = store.active_block(i, spec);
    const std::size_t cols = store.value(i).cols();
    for (std::size_t e = 0; e < store.value(i).size(); ++e) {
      const bool inside = e / cols < blk.rows && e % cols < blk.cols;
      const bool diff = !bits_equal(store.value(i)[e], before.value(i)[e]);
      active += inside;
      changed += diff;
      if (!inside && diff) ++outside_changed;
      if (inside && grads.grad(i)[e] == 0.0 && !diff) ++zero_grad_unchanged;
      if (inside && diff != (grads.grad(i)[e] != 0.0)) ++mismatched;
      if (static_cast<bool>(grads.touched(i)[e]) != inside) ++mismatched;
    }
  }
  out.require(outside_changed == 0, std::to_string(outside_changed) + " inactive elements changed");
  out.require(mismatched == 0, std::to_string(mismatched) + " active elements disagree with their gradient");
  out.require(active == SubModel(store, spec).active_parameter_count(), "active slice size");
  out.note("spec " + spec.to_string() + ": " + std::to_string(changed) + " of " + std::to_string(active) +
           " active elements changed, 0 outside; " + std::to_string(zero_grad_unchanged) +
           " active elements had exactly zero gradient and stayed put");

  const ParameterStore shared = random_store(tiny_config(), 21);
  Rng rng(5);
  const TokenBlock src = TokenBlock::from_sequences(random_sequences(rng, 3, 2, 6, 9));
  const TokenBlock tgt = decoder_input(random_sequences(rng, 3, 1, 5, 9));
  for (const auto& s : {WidthSpec::widest(tiny_config()), WidthSpec::parse("8:4,8,8,4", 4)}) {
    ad::Tape direct_tape, tape;
    const Tensor direct = DirectForward(direct_tape, shared, s).logits(src, tgt).value();
    TapeBinding binding(tape, shared, false);
    const Tensor shared_logits = forward_logits(binding, materialize(shared, s), src, tgt, {}).value();
    out.require(bitwise_equal(direct, shared_logits), "materialize(" + s.to_string() + ") differs from the direct forward");
  }
  out.note("materialize(widest) forward bitwise equal to the direct forward");
  return out;
}

// ---- 3: schedules ----

Outcome schedules() {
  Outcome out;
  out.require(lambda2(0, 1000) == 1.0, "lambda2(0)");
  out.require(lambda2(500, 1000) == 0.75, "lambda2(t/2)");
  out.require(lambda2(1000, 1000) == 0.5 && lambda2(4000, 1000) == 0.5, "lambda2(>= t)");
  out.require(lr_at(4000, 7e-3, 4000) == 7e-3, "lr at warmup");
  out.require(std::abs(lr_at(16000, 7e-3, 4000) - 3.5e-3) <= 1e-18, "lr at 4 x warmup");
  const ParameterStore store = random_store(tiny_config(), 2);
  const Batch batch = small_batch(3, 3, 9);
  const std::vector<WidthSpec> specs{WidthSpec::uniform(4, 4), WidthSpec::parse("8:4,8,8,4", 4)};
  ad::Tape t1, t2;
  TapeBinding b1(t1, store), b2(t2, store);
  const double s1 = stage1_loss(b1, batch, specs, 0.1).total.value()[0];
  const double s2 = stage2_loss(b2, batch, specs, 1.0, 0.1).total.value()[0];
  out.require(std::abs(s1 - s2) <= 1e-12, "stage2(lambda2=1) vs stage1: " + sci(std::abs(s1 - s2)));
  out.note("lambda2 1/0.75/0.5, lr max and max/2, |stage2 - stage1| = " + sci(std::abs(s1 - s2)));
  return out;
}

// ---- 4: decoding ----

Outcome decoding_oracle() {
  Outcome out;
  std::size_t greedy_agree = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const ModelConfig config = tiny_config(9);
    const ParameterStore store = random_store(config, 500 + seed, 0.8);
    Rng rng(seed);
    const SubModel sub(store, seed % 3 ? WidthSpec::widest(config) : WidthSpec::parse("8:4,8,4,4", 4));
    const TokenSeq source = random_tokens(rng, 1 + rng.index(8), 9);
    const double alpha = rng.uniform(0.0, 1.5);
    greedy_agree += strip_eos(beam_search(sub, source, 1, alpha).tokens) == greedy_decode(sub, source);
  }
  out.require(greedy_agree == 100, "beam 1 vs greedy: " + std::to_string(greedy_agree) + "/100");

  // Model vocabulary 6: PAD and BOS plus 4 emittable tokens (EOS, UNK, 4, 5).
  std::size_t exact = 0;
  const ModelConfig config = tiny_config(6);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const ParameterStore store = random_store(config, 1000 + seed, 1.0);
    Rng rng(seed);
    const SubModel sub(store, seed % 2 ? WidthSpec::widest(config) : WidthSpec::uniform(4, 4));
    const TokenSeq source = random_tokens(rng, 2 + rng.index(4), 6);
    const Scored oracle = exhaustive_best(sub, source, 3, 0.6);
    const Hypothesis h = beam_search(sub, source, 16, 0.6, 3);
    exact += h.tokens == oracle.tokens && std::abs(h.score - oracle.score) <= 1e-12;
  }
  out.require(exact == 50, "beam 16 vs enumeration: " + std::to_string(exact) + "/50");
  out.note("beam 1 == greedy " + std::to_string(greedy_agree) + "/100; beam 16 == exhaustive " + std::to_string(exact) +
           "/50 over " + std::to_string(all_outputs(6, 3).size()) + " outputs each");
  return out;
}

// ---- 5: cost accounting ----

Outcome cost_accounting() {
  Outcome out;
  const ModelConfig config = paper_config();
  const WidthSpec widest = WidthSpec::widest(config), narrow = WidthSpec::uniform(256, config.n_layers());
  const double p_wide = count_params(config, widest) / 1e6, p_narrow = count_params(config, narrow) / 1e6;
  const double f_wide = estimate_flops(config, widest) / 1e9, f_narrow = estimate_flops(config, narrow) / 1e9;
  auto within = [](double got, double target, double tol) { return std::abs(got - target) <= tol * target; };
  out.require(within(p_wide, 209.0, 0.03), "widest params " + fixed(p_wide, 2) + "M vs 209M ±3%");
  out.require(within(p_narrow, 45.0, 0.03), "256 params " + fixed(p_narrow, 2) + "M vs 45M ±3%");
  out.require(within(f_wide, 26.02, 0.15), "widest FLOPs " + fixed(f_wide, 2) + "G vs 26.02G ±15%");
  out.require(within(f_narrow, 5.2, 0.15), "256 FLOPs " + fixed(f_narrow, 2) + "G vs 5.2G ±15%");
  double prev_p = 0.0, prev_f = 0.0;
  bool monotone = true;
  for (auto w : config.width_menu) {
    const WidthSpec s = WidthSpec::uniform(w, config.n_layers());
    const double p = count_params(config, s), f = estimate_flops(config, s);
    monotone = monotone && p > prev_p && f > prev_f;
    prev_p = p;
    prev_f = f;
  }
  out.require(monotone, "strict monotonicity over the 13 menu widths");
  out.note("params " + fixed(p_wide, 2) + "M / " + fixed(p_narrow, 2) + "M, FLOPs " + fixed(f_wide, 2) + "G / " +
           fixed(f_narrow, 2) + "G (widest / 256), monotone over 13 widths: " + (monotone ? "yes" : "no"));
  return out;
}

// ---- 6: toy training study ----

const fs::path kToyConfig = fs::path(SCALANT_SOURCE_DIR) / "configs" / "toy_copy.yaml";

fs::path seed_dir(int seed) { return work_dir() / ("seed" + std::to_string(seed)); }

void run_cli(const std::vector<std::string>& args, std::ostream& log) {
  std::ostringstream err;
  const int status = cli::run(args, log, err);
  log << err.str();
  if (status != 0) throw Error("scalant " + args.front() + " failed: " + err.str());
}

void run_toy_pipeline(int seed, std::ostream& log) {
  const std::vector<std::string> common{"--config", kToyConfig.string(), "--seed", std::to_string(seed), "--out",
                                        seed_dir(seed).string()};
  auto with = [&](std::vector<std::string> args) {
    args.insert(args.end(), common.begin(), common.end());
    return args;
  };
  run_cli(with({"prep"}), log);
  run_cli(with({"train", "--stage", "1"}), log);
  run_cli(with({"train", "--stage", "2"}), log);
  run_cli(with({"generate-targets"}), log);
  run_cli(with({"train", "--stage", "3"}), log);
}

struct SeedResult {
  std::map<std::size_t, double> stage1, stage3;
};

SeedResult evaluate_seed(int seed) {
  const RunConfig rc = load_run_config(kToyConfig);
  const fs::path dir = seed_dir(seed);
  const Vocab vocab = Vocab::load(dir / "data" / "vocab.txt");
  const Corpus test = encode_corpus(vocab, read_text_pairs(dir / "data" / "test.tsv"));
  SeedResult r;
  for (auto [stage, table] : {std::pair{1, &r.stage1}, std::pair{3, &r.stage3}}) {
    const ParameterStore store = load_checkpoint(dir / ("stage" + std::to_string(stage) + ".ckpt")).store;
    for (auto w : rc.model.width_menu)
      (*table)[w] = token_accuracy(SubModel(store, WidthSpec::uniform(w, rc.model.n_layers())), test).accuracy;
  }
  return r;
}

double median3(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[1];
}

Outcome toy_training_study() {
  Outcome out;
  const auto start = std::chrono::steady_clock::now();
  fs::create_directories(work_dir());
  std::ofstream log(work_dir() / "training.log");
  std::vector<SeedResult> results;
  for (int seed = 1; seed <= 3; ++seed) {
    const auto t0 = std::chrono::steady_clock::now();
    run_toy_pipeline(seed, log);
    results.push_back(evaluate_seed(seed));
    std::cerr << "  seed " << seed << " trained in " << fixed(seconds_since(t0), 0) << " s" << std::endl;
  }
  const double elapsed = seconds_since(start);

  const std::size_t narrowest = results[0].stage1.begin()->first, widest = results[0].stage1.rbegin()->first;
  std::vector<double> narrow1, narrow3;
  for (std::size_t k = 0; k < results.size(); ++k) {
    const auto& r = results[k];
    const std::string tag = "seed " + std::to_string(k + 1);
    out.require(r.stage1.at(widest) >= 0.99, tag + " widest after stage 1: " + fixed(r.stage1.at(widest), 4));
    for (const auto& [w, acc] : r.stage3) out.require(acc >= 0.90, tag + " width " + std::to_string(w) + " after stage 3: " + fixed(acc, 4));
    narrow1.push_back(r.stage1.at(narrowest));
    narrow3.push_back(r.stage3.at(narrowest));
    std::string line = tag + " stage1";
    for (const auto& [w, acc] : r.stage1) line += " " + std::to_string(w) + ":" + fixed(acc, 4);
    line += " | stage1+2+3";
    for (const auto& [w, acc] : r.stage3) line += " " + std::to_string(w) + ":" + fixed(acc, 4);
    out.note(line);
  }
  const double m1 = median3(narrow1), m3 = median3(narrow3);
  out.require(m3 >= m1, "median narrowest stage1+2+3 " + fixed(m3, 4) + " < stage1-only " + fixed(m1, 4));
  out.require(elapsed < 1800.0, "runtime " + fixed(elapsed, 0) + " s");
  out.note("median narrowest: stage1-only " + fixed(m1, 4) + ", stage1+2+3 " + fixed(m3, 4));
  out.note("runtime " + fixed(elapsed, 0) + " s (limit 1800 s)");
  return out;
}

// ---- 7: type-2 search ----

Outcome search_harness() {
  Outcome out;
  if (!fs::exists(seed_dir(1) / "stage3.ckpt")) {
    fs::create_directories(work_dir());
    std::ofstream log(work_dir() / "training.log");
    run_toy_pipeline(1, log);
  }
  const RunConfig rc = load_run_config(kToyConfig);
  const ParameterStore store = load_checkpoint(seed_dir(1) / "stage3.ckpt").store;
  const Vocab vocab = Vocab::load(seed_dir(1) / "data" / "vocab.txt");
  const Corpus valid = encode_corpus(vocab, read_text_pairs(seed_dir(1) / "data" / "valid.tsv"));

  SearchOptions o;
  o.menu_subset = {128, 192, 256};
  o.n_samples = 200;
  o.top_k = 10;
  o.seed = derived_seed(1, 4);
  const auto start = std::chrono::steady_clock::now();
  const SearchReport r = random_search_type2(store, valid, o);
  const double elapsed = seconds_since(start);
  write_search_csv(work_dir() / "search.csv", r);

  std::size_t draws = 0;
  for (const auto& e : r.ranked) draws += e.draws;
  out.require(draws == 200, "draws recorded " + std::to_string(draws));
  out.require(r.top_k == 10, "top-k size");
  for (std::size_t i = 1; i < r.ranked.size(); ++i) out.require(r.ranked[i - 1].metric >= r.ranked[i].metric, "ranking order");
  const std::regex mean_std(R"(\d+\.\d+±\d+\.\d+)");
  out.require(std::regex_match(r.top_summary(), mean_std), "summary format " + r.top_summary());
  out.require(r.candidates == std::pow(3.0, static_cast<double>(rc.model.n_layers())), "toy candidate count");

  // Counting law: enumerate every per-layer choice from a 3-width subset.
  const std::vector<std::size_t> subset{128, 192, 256};
  for (std::size_t layers = 1; layers <= 8; ++layers) {
    std::set<std::vector<std::size_t>> all;
    std::vector<std::size_t> digit(layers, 0);
    while (true) {
      std::vector<std::size_t> widths;
      for (auto d : digit) widths.push_back(subset[d]);
      all.insert(widths);
      std::size_t k = 0;
      while (k < layers && ++digit[k] == subset.size()) digit[k++] = 0;
      if (k == layers) break;
    }
    out.require(static_cast<double>(all.size()) == candidate_count(Variant::Type2, 3, layers) &&
                    all.size() == static_cast<std::size_t>(std::pow(3, layers)),
                "3^" + std::to_string(layers) + " enumeration");
  }
  // The sampler covers exactly the enumerated space of the toy model.
  Rng rng(3);
  std::set<WidthSpec> seen;
  for (int i = 0; i < 5000; ++i) {
    const WidthSpec s = sample_submodel(rc.model, Variant::Type2, rng, subset);
    out.require(s.io_width == 256, "sampled io width");
    seen.insert(s);
  }
  out.require(seen.size() == 81, "sampler reached " + std::to_string(seen.size()) + " of 81 specs");

  out.note(std::to_string(r.ranked.size()) + " distinct of " + fixed(r.candidates, 0) + " candidates from " +
           std::to_string(r.draws) + " draws, evaluated in " + fixed(elapsed, 1) + " s");
  out.note("top-10 accuracy " + r.top_summary() + ", best " + r.ranked.front().spec.to_string() + " " +
           fixed(r.ranked.front().metric, 4) + ", widest " + fixed(r.widest.metric, 4) +
           (r.beats_widest ? " (a sub-model beats the widest)" : " (no sub-model beat the widest)"));
  out.note("counting law 3^L verified by enumeration for L = 1..8");
  return out;
}

// ---- 8: distillation filter ----

Outcome distill_filtering() {
  Outcome out;
  Rng rng(99);
  std::size_t dropped = 0, kept_total = 0, violators = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const double ratio_cap = rng.uniform(1.0, 4.0);
    const std::size_t len_cap = 5 + rng.index(40);
    Corpus corpus;
    std::vector<bool> violates;
    for (std::size_t i = 0, n = 1 + rng.index(50); i < n; ++i) {
      // Half the pairs are built to break one of the caps.
      std::size_t s = 1 + rng.index(len_cap), t = 1 + rng.index(len_cap);
      switch (rng.index(4)) {
        case 0: s = len_cap + 1 + rng.index(10); break;
        case 1: t = static_cast<std::size_t>(std::ceil(ratio_cap * static_cast<double>(s))) + 1 + rng.index(5); break;
        default: break;
      }
      corpus.push_back({random_tokens(rng, s, 20), random_tokens(rng, t, 20)});
      const double hi = static_cast<double>(std::max(s, t)), lo = static_cast<double>(std::min(s, t));
      violates.push_back(s > len_cap || t > len_cap || hi > ratio_cap * lo);
    }
    const Corpus kept = filter_pairs(corpus, ratio_cap, len_cap);
    Corpus expected;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      if (!violates[i]) expected.push_back(corpus[i]);
      violators += violates[i];
    }
    out.require(kept == expected, "trial " + std::to_string(trial) + " kept set");
    for (const auto& p : kept) {
      const double hi = static_cast<double>(std::max(p.source.size(), p.target.size()));
      const double lo = static_cast<double>(std::min(p.source.size(), p.target.size()));
      out.require(hi / lo <= ratio_cap && hi <= static_cast<double>(len_cap), "survivor within caps");
    }
    dropped += corpus.size() - kept.size();
    kept_total += kept.size();
  }
  out.require(dropped == violators, "dropped exactly the violating pairs");
  out.note("500 random corpora: " + std::to_string(dropped) + " violating pairs dropped, " + std::to_string(kept_total) +
           " survivors all within both caps");
  return out;
}

// ---- 9: round trips ----

Outcome round_trips() {
  Outcome out;
  fs::create_directories(work_dir());
  ParameterStore store = random_store(toy_config(), 7);
  store.value(0)[0] = -0.0;
  store.value(0)[1] = 4.9e-324;
  store.value(0)[2] = std::numeric_limits<double>::max();
  const fs::path path = work_dir() / "roundtrip.ckpt";
  save_checkpoint(path, store, {{"note", "round trip"}});
  const Checkpoint loaded = load_checkpoint(path);
  bool same = loaded.store.config() == store.config() && loaded.metadata.at("note") == "round trip";
  for (std::size_t i = 0; i < store.size(); ++i) same = same && bitwise_equal(loaded.store.value(i), store.value(i));
  out.require(same, "checkpoint bitwise round trip");

  std::vector<ParameterStore> stores;
  std::vector<fs::path> paths;
  for (int k = 0; k < 5; ++k) {
    stores.push_back(random_store(toy_config(), 100 + k, 1.0));
    paths.push_back(work_dir() / ("avg" + std::to_string(k) + ".ckpt"));
    save_checkpoint(paths.back(), stores.back());
  }
  const ParameterStore avg = average_checkpoints(paths);
  double worst = 0.0;
  for (std::size_t i = 0; i < avg.size(); ++i)
    for (std::size_t e = 0; e < avg.value(i).size(); ++e) {
      long double sum = 0.0L;
      for (const auto& s : stores) sum += s.value(i)[e];
      worst = std::max(worst, std::abs(avg.value(i)[e] - static_cast<double>(sum / stores.size())));
    }
  out.require(worst <= 1e-15, "averaging error " + sci(worst));
  for (const auto& p : paths) fs::remove(p);
  fs::remove(path);
  out.note("checkpoint of " + std::to_string(SubModel(store, WidthSpec::widest(toy_config())).active_parameter_count()) +
           " scalars bitwise identical after reload; 5-way average max |error| " + sci(worst));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient correctness", gradient_correctness},
      {"weight-sharing invariants", weight_sharing},
      {"schedule golden values", schedules},
      {"decoding oracle", decoding_oracle},
      {"cost accounting", cost_accounting},
      {"toy training study", toy_training_study},
      {"type-2 search harness", search_harness},
      {"distillation filtering", distill_filtering},
      {"round trips", round_trips},
  };
  std::set<std::size_t> selected;
  for (int i = 1; i < argc; ++i) selected.insert(static_cast<std::size_t>(std::atoi(argv[i])));

  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    if (!selected.empty() && !selected.count(k + 1)) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.notes.push_back(std::string("error: ") + e.what());
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << k + 1 << ": " << criteria[k].first << '\n';
    for (const auto& n : o.notes) std::cout << "      " << n << '\n';
    std::cout.flush();
  }
  std::cout << (failures ? std::to_string(failures) + " criteria failed" : std::string("all criteria passed")) << '\n';
  return failures ? 1 : 0;
}
