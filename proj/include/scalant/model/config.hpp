#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace scalant {

/// Reserved token ids shared by every vocabulary.
inline constexpr int kPad = 0;
inline constexpr int kBos = 1;
inline constexpr int kEos = 2;
inline constexpr int kUnk = 3;
inline constexpr int kFirstContentToken = 4;

/// Shape of the widest Transformer and the menu of widths its sub-models may
/// use.
struct ModelConfig {
  std::size_t vocab_size = 32768;
  std::size_t max_width = 1024;
  std::vector<std::size_t> width_menu;
  std::size_t n_encoder_layers = 6;
  std::size_t n_decoder_layers = 6;
  std::size_t head_dim = 64;
  std::size_t ffn_multiplier = 4;
  std::map<std::size_t, double> dropout_by_width;
  std::size_t max_seq_len = 256;
  double layer_norm_eps = 1e-5;

  /// The 6+6 layer, 13-width configuration with the En-De dropout ladder.
  static ModelConfig wmt_base();

  void validate() const;

  std::size_t n_layers() const noexcept { return n_encoder_layers + n_decoder_layers; }
  /// Position of `width` in the menu; throws if absent.
  std::size_t menu_index(std::size_t width) const;
  bool in_menu(std::size_t width) const;

  /// Flat key/value form used by the checkpoint header.
  std::vector<std::pair<std::string, std::string>> to_key_values() const;
  static ModelConfig from_key_values(const std::vector<std::pair<std::string, std::string>>& kv);

  bool operator==(const ModelConfig&) const = default;
};

enum class Variant { Type1, Type2 };

Variant parse_variant(std::string_view text);
std::string to_string(Variant v);

/// Widths of one sub-Transformer: the shared input/output width and one
/// attention width per layer (encoder layers first, then decoder layers).
struct WidthSpec {
  std::size_t io_width = 0;
  std::vector<std::size_t> attn_widths;

  static WidthSpec uniform(std::size_t width, std::size_t n_layers);
  static WidthSpec widest(const ModelConfig& config);
  /// "C:D1,...,DL", or a bare "C" for the type-1 spec of that width.
  static WidthSpec parse(std::string_view text, std::size_t n_layers);

  std::string to_string() const;

  bool is_type1() const;
  bool is_type2(const ModelConfig& config) const;
  /// Every width of this spec is <= the corresponding width of `other`.
  bool nested_in(const WidthSpec& other) const;

  void validate(const ModelConfig& config) const;

  auto operator<=>(const WidthSpec&) const = default;
};

/// Dropout rate a sub-model trains with: the per-width rate of C for type-1
/// specs; otherwise the rate of the menu width at the floored mean menu index
/// of the attention widths.
double dropout_rate(const ModelConfig& config, const WidthSpec& spec);

}  // namespace scalant
