#include "scalant/eval/search.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "scalant/decoding/search.hpp"
#include "scalant/eval/cost.hpp"
#include "scalant/eval/metrics.hpp"
#include "scalant/model/submodel.hpp"

namespace scalant {

namespace {

double evaluate(const ParameterStore& store, const WidthSpec& spec, const Corpus& valid, const SearchOptions& o) {
  const SubModel sub(store, spec);
  if (o.metric == SearchMetric::Accuracy) return token_accuracy(sub, valid, o.token_budget).accuracy;
  std::vector<TokenSeq> sources, refs;
  for (const auto& p : valid) {
    sources.push_back(p.source);
    refs.push_back(p.target);
  }
  return bleu(greedy_decode_batch(sub, sources), refs);
}

SearchEntry make_entry(const ParameterStore& store, const WidthSpec& spec) {
  SearchEntry e;
  e.spec = spec;
  const auto cost = cost_report(store.config(), spec);
  e.params = cost.params;
  e.flops = cost.flops;
  return e;
}

}  // namespace

std::string format_mean_std(double mean, double std, int precision) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << mean << "±" << std;
  return os.str();
}

std::string SearchReport::top_summary(int precision) const { return format_mean_std(top_mean, top_std, precision); }

SearchReport random_search_type2(const ParameterStore& store, const Corpus& valid, const SearchOptions& options) {
  const ModelConfig& config = store.config();
  if (options.menu_subset.empty()) throw Error("search menu subset is empty");
  for (auto w : options.menu_subset)
    if (!config.in_menu(w)) throw Error("search width " + std::to_string(w) + " is not in the model menu");
  if (options.n_samples < 1 || options.top_k < 1) throw Error("search needs at least one sample and top_k >= 1");
  if (valid.empty()) throw Error("search validation set is empty");

  SearchReport report;
  report.draws = options.n_samples;
  report.candidates = candidate_count(Variant::Type2, options.menu_subset.size(), config.n_layers());
  const bool distinct = static_cast<double>(options.n_samples) <= report.candidates;

  Rng rng(options.seed);
  std::map<WidthSpec, std::size_t> draws;
  std::vector<WidthSpec> order;  // first-draw order keeps the evaluation deterministic
  for (std::size_t i = 0; i < options.n_samples; ++i) {
    WidthSpec spec = sample_submodel(config, Variant::Type2, rng, options.menu_subset);
    if (distinct)
      while (draws.count(spec)) spec = sample_submodel(config, Variant::Type2, rng, options.menu_subset);
    if (draws[spec]++ == 0) order.push_back(spec);
  }

  std::vector<SearchEntry> entries(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    entries[i] = make_entry(store, order[i]);
    entries[i].draws = draws[order[i]];
  }
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < entries.size(); ++i) entries[i].metric = evaluate(store, entries[i].spec, valid, options);

  std::stable_sort(entries.begin(), entries.end(), [](const SearchEntry& a, const SearchEntry& b) {
    if (a.metric != b.metric) return a.metric > b.metric;
    return a.spec < b.spec;
  });
  report.ranked = std::move(entries);

  report.top_k = std::min(options.top_k, report.ranked.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < report.top_k; ++i) sum += report.ranked[i].metric;
  report.top_mean = sum / static_cast<double>(report.top_k);
  double ss = 0.0;
  for (std::size_t i = 0; i < report.top_k; ++i) ss += std::pow(report.ranked[i].metric - report.top_mean, 2);
  report.top_std = report.top_k > 1 ? std::sqrt(ss / static_cast<double>(report.top_k - 1)) : 0.0;

  const WidthSpec widest = WidthSpec::widest(config);
  report.widest = make_entry(store, widest);
  report.widest.draws = draws.count(widest) ? draws[widest] : 0;
  report.widest.metric = evaluate(store, widest, valid, options);
  report.beats_widest = report.ranked.front().metric > report.widest.metric;
  return report;
}

void write_search_csv(const std::filesystem::path& path, const SearchReport& report) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write search report " + path.string());
  out << std::setprecision(10);
  out << "rank,spec,draws,params,flops,metric,note\n";
  for (std::size_t i = 0; i < report.ranked.size(); ++i) {
    const auto& e = report.ranked[i];
    out << i + 1 << ",\"" << e.spec.to_string() << "\"," << e.draws << ',' << e.params << ',' << e.flops << ','
        << e.metric << ",\n";
  }
  out << "widest,\"" << report.widest.spec.to_string() << "\"," << report.widest.draws << ',' << report.widest.params
      << ',' << report.widest.flops << ',' << report.widest.metric << ",\n";
  out << "summary,top" << report.top_k << ',' << report.draws << ",,," << report.top_summary() << ','
      << (report.beats_widest ? "sub-model beats widest" : "no sub-model beat the widest") << '\n';
}

}  // namespace scalant
