#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "scalant/data/vocab.hpp"
#include "scalant/model/tokens.hpp"

namespace scalant {

struct Pair {
  TokenSeq source;
  TokenSeq target;
  bool operator==(const Pair&) const = default;
};
using Corpus = std::vector<Pair>;

enum class TaskKind { Copy, Reverse, Sort };
TaskKind parse_task_kind(std::string_view name);
std::string to_string(TaskKind kind);

/// Random sources over content ids [4, vocab_size) with lengths drawn
/// uniformly from [min_len, max_len]; the target is the transformed source.
Corpus synth_task(TaskKind kind, std::size_t n_pairs, std::size_t vocab_size, std::size_t min_len,
                  std::size_t max_len, std::uint64_t seed);

using TextPair = std::pair<std::string, std::string>;

/// UTF-8 text, one pair per line, source and target separated by a tab.
/// Blank lines and lines starting with '#' are skipped.
std::vector<TextPair> read_text_pairs(const std::filesystem::path& path);
void write_text_pairs(const std::filesystem::path& path, const std::vector<TextPair>& pairs);

Corpus encode_corpus(const Vocab& vocab, const std::vector<TextPair>& text);
std::vector<TextPair> decode_corpus(const Vocab& vocab, const Corpus& corpus);

/// Token-id text form used for synthetic tasks: each id written as a decimal
/// word, so the vocabulary built from it maps words back to ids.
std::vector<TextPair> ids_as_text(const Corpus& corpus);

}  // namespace scalant
