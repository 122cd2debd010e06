#include "scalant/data/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>

#include "scalant/core/tensor.hpp"
#include "scalant/model/config.hpp"

namespace scalant {

namespace {
const char* const kReserved[] = {"<pad>", "<s>", "</s>", "<unk>"};
}

std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

Vocab::Vocab() {
  for (const char* r : kReserved) append(r);
}

void Vocab::append(std::string token) {
  ids_.emplace(token, static_cast<int>(tokens_.size()));
  tokens_.push_back(std::move(token));
}

Vocab Vocab::build(const std::vector<std::string>& sentences, std::size_t max_size) {
  if (sentences.empty()) throw Error("cannot build a vocabulary from an empty corpus");
  if (max_size < 4) throw Error("vocabulary size must cover the 4 reserved tokens");
  std::map<std::string, std::size_t> counts;
  for (const auto& s : sentences)
    for (auto& tok : split_whitespace(s)) ++counts[tok];
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocab v;
  for (auto& [tok, n] : ranked) {
    if (v.size() >= max_size) break;
    if (v.ids_.count(tok)) continue;
    v.append(tok);
  }
  return v;
}

int Vocab::id(std::string_view token) const {
  const auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) throw Error("token id " + std::to_string(id) + " out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

TokenSeq Vocab::encode(std::string_view sentence) const {
  TokenSeq out;
  for (const auto& tok : split_whitespace(sentence)) out.push_back(id(tok));
  return out;
}

std::string Vocab::decode(const TokenSeq& ids) const {
  std::string out;
  for (int id : ids) {
    if (id == kPad || id == kBos || id == kEos) continue;
    if (!out.empty()) out += ' ';
    out += token(id);
  }
  return out;
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write vocabulary " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open vocabulary " + path.string());
  Vocab v;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    if (n < 4) {
      if (line != kReserved[n]) throw Error("vocabulary " + path.string() + " does not start with the reserved tokens");
    } else {
      if (line.empty() || v.ids_.count(line)) throw Error("vocabulary " + path.string() + ": bad or duplicate entry at line " + std::to_string(n + 1));
      v.append(line);
    }
    ++n;
  }
  if (n < 4) throw Error("vocabulary " + path.string() + " is truncated");
  return v;
}

}  // namespace scalant
