#include "scalant/data/corpus.hpp"

#include <algorithm>
#include <fstream>

#include "scalant/core/rng.hpp"
#include "scalant/core/tensor.hpp"
#include "scalant/model/config.hpp"

namespace scalant {

TaskKind parse_task_kind(std::string_view name) {
  if (name == "copy") return TaskKind::Copy;
  if (name == "reverse") return TaskKind::Reverse;
  if (name == "sort") return TaskKind::Sort;
  throw Error("unknown task '" + std::string(name) + "' (expected copy, reverse or sort)");
}

std::string to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::Copy: return "copy";
    case TaskKind::Reverse: return "reverse";
    case TaskKind::Sort: return "sort";
  }
  return "?";
}

Corpus synth_task(TaskKind kind, std::size_t n_pairs, std::size_t vocab_size, std::size_t min_len,
                  std::size_t max_len, std::uint64_t seed) {
  if (vocab_size <= static_cast<std::size_t>(kFirstContentToken)) throw Error("synthetic vocabulary has no content tokens");
  if (min_len == 0 || min_len > max_len) throw Error("invalid synthetic length range");
  Rng rng(seed);
  const std::size_t n_content = vocab_size - kFirstContentToken;
  Corpus out;
  out.reserve(n_pairs);
  for (std::size_t i = 0; i < n_pairs; ++i) {
    const std::size_t len = min_len + rng.index(max_len - min_len + 1);
    Pair p;
    for (std::size_t t = 0; t < len; ++t) p.source.push_back(kFirstContentToken + static_cast<int>(rng.index(n_content)));
    p.target = p.source;
    if (kind == TaskKind::Reverse) std::reverse(p.target.begin(), p.target.end());
    if (kind == TaskKind::Sort) std::sort(p.target.begin(), p.target.end());
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<TextPair> read_text_pairs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus " + path.string());
  std::vector<TextPair> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos)
      throw Error(path.string() + ":" + std::to_string(lineno) + ": expected exactly one tab");
    out.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return out;
}

void write_text_pairs(const std::filesystem::path& path, const std::vector<TextPair>& pairs) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write corpus " + path.string());
  for (const auto& [s, t] : pairs) out << s << '\t' << t << '\n';
}

Corpus encode_corpus(const Vocab& vocab, const std::vector<TextPair>& text) {
  Corpus out;
  out.reserve(text.size());
  for (const auto& [s, t] : text) out.push_back(Pair{vocab.encode(s), vocab.encode(t)});
  return out;
}

std::vector<TextPair> decode_corpus(const Vocab& vocab, const Corpus& corpus) {
  std::vector<TextPair> out;
  out.reserve(corpus.size());
  for (const auto& p : corpus) out.emplace_back(vocab.decode(p.source), vocab.decode(p.target));
  return out;
}

std::vector<TextPair> ids_as_text(const Corpus& corpus) {
  auto join = [](const TokenSeq& s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) out += (i ? " " : "") + std::to_string(s[i]);
    return out;
  };
  std::vector<TextPair> out;
  out.reserve(corpus.size());
  for (const auto& p : corpus) out.emplace_back(join(p.source), join(p.target));
  return out;
}

}  // namespace scalant
