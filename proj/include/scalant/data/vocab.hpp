#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "scalant/model/tokens.hpp"

namespace scalant {

/// Whitespace-token vocabulary shared by source and target. Ids 0..3 are
/// PAD, BOS, EOS and UNK; other tokens follow by descending frequency, ties
/// broken lexicographically.
class Vocab {
 public:
  Vocab();

  /// At most `max_size` entries including the four reserved ones.
  static Vocab build(const std::vector<std::string>& sentences, std::size_t max_size);

  std::size_t size() const noexcept { return tokens_.size(); }
  int id(std::string_view token) const;
  const std::string& token(int id) const;

  TokenSeq encode(std::string_view sentence) const;
  /// Joins tokens with single spaces; reserved ids other than UNK are skipped.
  std::string decode(const TokenSeq& ids) const;

  /// One token per line in id order.
  void save(const std::filesystem::path& path) const;
  static Vocab load(const std::filesystem::path& path);

 private:
  void append(std::string token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

std::vector<std::string> split_whitespace(std::string_view text);

}  // namespace scalant
