#include "scalant/training/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "scalant/data/batching.hpp"
#include "scalant/eval/metrics.hpp"
#include "scalant/model/checkpoint.hpp"
#include "scalant/model/submodel.hpp"
#include "scalant/training/losses.hpp"
#include "scalant/training/schedule.hpp"

namespace scalant {

void StageConfig::validate() const {
  if (stage < 1 || stage > 3) throw Error("stage must be 1, 2 or 3");
  if (n_sampled < 1) throw Error("n_sampled must be at least 1");
  if (lambda2_threshold < 1) throw Error("lambda2_threshold must be positive");
  if (!(lambda3 >= 0.0 && lambda3 <= 1.0)) throw Error("lambda3 must lie in [0, 1]");
  if (!(max_lr > 0.0) || !(init_lr > 0.0)) throw Error("learning rates must be positive");
  if (warmup_iters < 1) throw Error("warmup_iters must be at least 1");
  if (epochs < 1) throw Error("epochs must be at least 1");
  if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) throw Error("label_smoothing must lie in [0, 1)");
  if (grad_accum_steps < 1) throw Error("grad_accum_steps must be at least 1");
  if (token_budget < 2) throw Error("token_budget is too small");
  if (average_last < 1 || average_last > epochs) throw Error("average_last must lie in [1, epochs]");
}

std::string metrics_header() {
  return "stage,epoch,updates,lr,train_loss,widest_loss,spec,valid_accuracy,valid_nll";
}

std::string metrics_row(const EpochRecord& r) {
  std::ostringstream os;
  os << std::setprecision(10) << r.stage << ',' << r.epoch << ',' << r.updates << ',' << r.lr << ',' << r.train_loss
     << ',' << r.widest_loss << ",\"" << r.spec.to_string() << "\"," << r.valid_accuracy << ',' << r.valid_nll;
  return os.str();
}

namespace {

SubModelWeights weights_for(const StageConfig& c, std::size_t completed_updates) {
  switch (c.stage) {
    case 1: return stage1_weights();
    case 2: return stage2_weights(lambda2(completed_updates, c.lambda2_threshold));
    default: return stage3_weights(c.lambda3);
  }
}

std::vector<WidthSpec> default_probes(const ModelConfig& config) {
  std::vector<WidthSpec> probes;
  for (auto w : config.width_menu) probes.push_back(WidthSpec::uniform(w, config.n_layers()));
  return probes;
}

}  // namespace

StageResult train_stage(ParameterStore& store, const Corpus& train, const Corpus& valid, const StageConfig& config,
                        const TrainOptions& options) {
  config.validate();
  if (train.empty()) throw Error("training corpus is empty");
  const auto start = std::chrono::steady_clock::now();
  const ModelConfig& model = store.config();
  const auto probes = options.probes.empty() ? default_probes(model) : options.probes;

  Rng master(config.seed);
  Rng sampler = master.split();
  Rng dropout = master.split();

  Adam adam(store, config.adam);
  GradientBuffer grads(store);
  StageResult result;

  std::ofstream log;
  if (!options.out_dir.empty()) {
    std::filesystem::create_directories(options.out_dir);
    log.open(options.out_dir / ("stage" + std::to_string(config.stage) + "_metrics.csv"));
    if (!log) throw Error("cannot write metrics log in " + options.out_dir.string());
    log << metrics_header() << '\n';
  }

  std::vector<ParameterStore> recent;  // trailing epoch snapshots for averaging
  std::size_t updates = 0;
  double lr = 0.0;
  bool capped = false;
  for (std::size_t epoch = 1; epoch <= config.epochs && !capped; ++epoch) {
    const auto batches = make_batches(train, config.token_budget, master.next());
    double loss_sum = 0.0, widest_sum = 0.0, tokens_seen = 0.0;
    for (std::size_t first = 0; first < batches.size(); first += config.grad_accum_steps) {
      if (config.max_updates != 0 && updates >= config.max_updates) {
        capped = true;
        break;
      }
      const std::size_t last = std::min(first + config.grad_accum_steps, batches.size());
      double window_tokens = 0.0;
      for (std::size_t b = first; b < last; ++b) window_tokens += static_cast<double>(batches[b].target_out.token_count());

      const auto specs = sample_distinct_submodels(model, config.variant, config.n_sampled, sampler);
      const SubModelWeights w = weights_for(config, updates);
      grads.reset();
      std::vector<double> per_model;
      for (std::size_t b = first; b < last; ++b) {
        loss_sum += accumulate_gradients(store, batches[b], specs, w, config.label_smoothing, dropout, window_tokens,
                                         grads, &per_model) * window_tokens;
        widest_sum += per_model.front() * window_tokens;
      }
      tokens_seen += window_tokens;
      lr = lr_at(updates + 1, config.max_lr, config.warmup_iters, config.init_lr);
      adam.step(store, grads, lr);
      ++updates;
    }

    for (const auto& spec : probes) {
      const auto acc = token_accuracy(SubModel(store, spec), valid, options.eval_token_budget);
      EpochRecord r;
      r.stage = config.stage;
      r.epoch = epoch;
      r.updates = updates;
      r.lr = lr;
      r.train_loss = tokens_seen > 0 ? loss_sum / tokens_seen : 0.0;
      r.widest_loss = tokens_seen > 0 ? widest_sum / tokens_seen : 0.0;
      r.spec = spec;
      r.valid_accuracy = acc.accuracy;
      r.valid_nll = acc.nll;
      if (log.is_open()) log << metrics_row(r) << '\n';
      if (options.progress) *options.progress << metrics_row(r) << std::endl;
      result.records.push_back(r);
    }
    if (log.is_open()) log.flush();
    if (!options.out_dir.empty())
      save_checkpoint(options.out_dir / ("stage" + std::to_string(config.stage) + "_epoch" + std::to_string(epoch) + ".ckpt"),
                      store, {{"stage", std::to_string(config.stage)}, {"epoch", std::to_string(epoch)},
                              {"seed", std::to_string(config.seed)}});
    if (config.average_last > 1) {
      recent.push_back(store);
      if (recent.size() > config.average_last) recent.erase(recent.begin());
    }
  }

  if (config.average_last > 1 && recent.size() > 1) {
    std::vector<const ParameterStore*> ptrs;
    for (const auto& s : recent) ptrs.push_back(&s);
    store = average_stores(ptrs);
  }
  result.updates = updates;
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace scalant
