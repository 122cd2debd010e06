#include "scalant/decoding/distill.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "scalant/decoding/search.hpp"

namespace scalant {

namespace {

std::string format_cap(double v) {
  if (std::isinf(v)) return "inf";
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

bool passes_filter(std::size_t source_len, std::size_t target_len, double ratio_cap, std::size_t len_cap) {
  if (source_len > len_cap || target_len > len_cap) return false;
  const std::size_t longer = std::max(source_len, target_len), shorter = std::min(source_len, target_len);
  if (longer == 0) return true;
  const double ratio = shorter == 0 ? std::numeric_limits<double>::infinity()
                                    : static_cast<double>(longer) / static_cast<double>(shorter);
  return ratio <= ratio_cap;
}

Corpus filter_pairs(const Corpus& pairs, double ratio_cap, std::size_t len_cap) {
  Corpus out;
  for (const auto& p : pairs)
    if (passes_filter(p.source.size(), p.target.size(), ratio_cap, len_cap)) out.push_back(p);
  return out;
}

const TokenSeq& DistillCorpus::target_for(const TokenSeq& source) const {
  const auto it = std::find_if(pairs.begin(), pairs.end(), [&](const Pair& p) { return p.source == source; });
  if (it == pairs.end()) throw Error("source is not in the distillation corpus");
  return it->target;
}

DistillCorpus generate_distill_corpus(const SubModel& teacher, const std::vector<TokenSeq>& sources,
                                      const DistillSettings& settings) {
  if (sources.empty()) throw Error("no sources to decode");
  const auto hyps = beam_search_batch(teacher, sources, settings.beam, settings.alpha, settings.max_len);
  Corpus decoded;
  decoded.reserve(sources.size());
  for (std::size_t i = 0; i < sources.size(); ++i) decoded.push_back({sources[i], strip_eos(hyps[i].tokens)});

  DistillCorpus out;
  out.pairs = filter_pairs(decoded, settings.ratio_cap, settings.len_cap);
  if (out.pairs.empty()) throw Error("every generated pair was removed by the length filters");
  out.provenance = {
      {"teacher_spec", teacher.spec().to_string()},
      {"beam", std::to_string(settings.beam)},
      {"alpha", format_cap(settings.alpha)},
      {"ratio_cap", format_cap(settings.ratio_cap)},
      {"len_cap", std::to_string(settings.len_cap)},
      {"max_len", std::to_string(settings.max_len)},
      {"sources", std::to_string(sources.size())},
      {"kept", std::to_string(out.pairs.size())},
  };
  return out;
}

void save_distill_corpus(const std::filesystem::path& path, const DistillCorpus& corpus, const Vocab& vocab) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write distillation corpus " + path.string());
  for (const auto& [k, v] : corpus.provenance) out << "# " << k << ": " << v << '\n';
  for (const auto& p : corpus.pairs) out << vocab.decode(p.source) << '\t' << vocab.decode(p.target) << '\n';
  if (!out) throw Error("error while writing " + path.string());
}

DistillCorpus load_distill_corpus(const std::filesystem::path& path, const Vocab& vocab) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open distillation corpus " + path.string());
  DistillCorpus out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("# ", 0) != 0) continue;
    const auto colon = line.find(": ");
    if (colon == std::string::npos) continue;
    out.provenance[line.substr(2, colon - 2)] = line.substr(colon + 2);
  }
  out.pairs = encode_corpus(vocab, read_text_pairs(path));
  return out;
}

}  // namespace scalant
