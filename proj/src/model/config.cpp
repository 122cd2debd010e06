#include "scalant/model/config.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "scalant/core/tensor.hpp"

namespace scalant {

namespace {

std::size_t parse_size(std::string_view s, std::string_view what) {
  std::size_t v = 0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) throw Error("invalid " + std::string(what) + ": '" + std::string(s) + "'");
  return v;
}

double parse_double(std::string_view s, std::string_view what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(std::string(s), &used);
    if (used != s.size()) throw Error("");
    return v;
  } catch (...) {
    throw Error("invalid " + std::string(what) + ": '" + std::string(s) + "'");
  }
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

ModelConfig ModelConfig::wmt_base() {
  ModelConfig c;
  c.vocab_size = 32768;
  c.max_width = 1024;
  c.n_encoder_layers = 6;
  c.n_decoder_layers = 6;
  c.head_dim = 64;
  c.ffn_multiplier = 4;
  const double rates[13] = {0, 0, 0, 0.1, 0.1, 0.1, 0.1, 0.2, 0.2, 0.2, 0.3, 0.3, 0.3};
  for (std::size_t i = 0; i < 13; ++i) {
    const std::size_t w = 256 + 64 * i;
    c.width_menu.push_back(w);
    c.dropout_by_width[w] = rates[i];
  }
  c.max_seq_len = 256;
  return c;
}

void ModelConfig::validate() const {
  if (vocab_size <= static_cast<std::size_t>(kUnk)) throw Error("vocab_size must exceed the 4 reserved ids");
  if (head_dim == 0) throw Error("head_dim must be positive");
  if (ffn_multiplier == 0) throw Error("ffn_multiplier must be positive");
  if (n_encoder_layers == 0 || n_decoder_layers == 0) throw Error("encoder and decoder need at least one layer");
  if (max_seq_len == 0) throw Error("max_seq_len must be positive");
  if (!(layer_norm_eps > 0.0)) throw Error("layer_norm_eps must be positive");
  if (width_menu.empty()) throw Error("width_menu is empty");
  for (std::size_t i = 0; i < width_menu.size(); ++i) {
    const auto w = width_menu[i];
    if (w == 0 || w % head_dim != 0)
      throw Error("menu width " + std::to_string(w) + " is not a positive multiple of head_dim " +
                  std::to_string(head_dim));
    if (i > 0 && w <= width_menu[i - 1]) throw Error("width_menu must be strictly increasing");
    const auto it = dropout_by_width.find(w);
    if (it == dropout_by_width.end()) throw Error("no dropout rate for width " + std::to_string(w));
    if (!(it->second >= 0.0 && it->second < 1.0)) throw Error("dropout rates must lie in [0, 1)");
  }
  if (width_menu.back() != max_width) throw Error("largest menu width must equal max_width");
  if (dropout_by_width.size() != width_menu.size()) throw Error("dropout_by_width has widths outside the menu");
}

std::size_t ModelConfig::menu_index(std::size_t width) const {
  const auto it = std::find(width_menu.begin(), width_menu.end(), width);
  if (it == width_menu.end()) throw Error("width " + std::to_string(width) + " is not in the width menu");
  return static_cast<std::size_t>(it - width_menu.begin());
}

bool ModelConfig::in_menu(std::size_t width) const {
  return std::find(width_menu.begin(), width_menu.end(), width) != width_menu.end();
}

std::vector<std::pair<std::string, std::string>> ModelConfig::to_key_values() const {
  std::string menu, drop;
  for (std::size_t i = 0; i < width_menu.size(); ++i) menu += (i ? "," : "") + std::to_string(width_menu[i]);
  bool first = true;
  for (const auto& [w, r] : dropout_by_width) {
    drop += (first ? "" : ",") + std::to_string(w) + ":" + format_double(r);
    first = false;
  }
  return {
      {"vocab_size", std::to_string(vocab_size)},
      {"max_width", std::to_string(max_width)},
      {"width_menu", menu},
      {"n_encoder_layers", std::to_string(n_encoder_layers)},
      {"n_decoder_layers", std::to_string(n_decoder_layers)},
      {"head_dim", std::to_string(head_dim)},
      {"ffn_multiplier", std::to_string(ffn_multiplier)},
      {"dropout_by_width", drop},
      {"max_seq_len", std::to_string(max_seq_len)},
      {"layer_norm_eps", format_double(layer_norm_eps)},
  };
}

ModelConfig ModelConfig::from_key_values(const std::vector<std::pair<std::string, std::string>>& kv) {
  ModelConfig c;
  c.width_menu.clear();
  c.dropout_by_width.clear();
  for (const auto& [k, v] : kv) {
    if (k == "vocab_size") c.vocab_size = parse_size(v, k);
    else if (k == "max_width") c.max_width = parse_size(v, k);
    else if (k == "n_encoder_layers") c.n_encoder_layers = parse_size(v, k);
    else if (k == "n_decoder_layers") c.n_decoder_layers = parse_size(v, k);
    else if (k == "head_dim") c.head_dim = parse_size(v, k);
    else if (k == "ffn_multiplier") c.ffn_multiplier = parse_size(v, k);
    else if (k == "max_seq_len") c.max_seq_len = parse_size(v, k);
    else if (k == "layer_norm_eps") c.layer_norm_eps = parse_double(v, k);
    else if (k == "width_menu") {
      for (auto part : split(v, ',')) c.width_menu.push_back(parse_size(part, k));
    } else if (k == "dropout_by_width") {
      for (auto part : split(v, ',')) {
        const auto colon = part.find(':');
        if (colon == std::string_view::npos) throw Error("invalid dropout_by_width entry '" + std::string(part) + "'");
        c.dropout_by_width[parse_size(part.substr(0, colon), k)] = parse_double(part.substr(colon + 1), k);
      }
    } else {
      throw Error("unknown model config key '" + k + "'");
    }
  }
  c.validate();
  return c;
}

Variant parse_variant(std::string_view text) {
  if (text == "type1" || text == "1") return Variant::Type1;
  if (text == "type2" || text == "2") return Variant::Type2;
  throw Error("unknown variant '" + std::string(text) + "' (expected type1 or type2)");
}

std::string to_string(Variant v) { return v == Variant::Type1 ? "type1" : "type2"; }

WidthSpec WidthSpec::uniform(std::size_t width, std::size_t n_layers) {
  return WidthSpec{width, std::vector<std::size_t>(n_layers, width)};
}

WidthSpec WidthSpec::widest(const ModelConfig& config) { return uniform(config.max_width, config.n_layers()); }

WidthSpec WidthSpec::parse(std::string_view text, std::size_t n_layers) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) return uniform(parse_size(text, "width spec"), n_layers);
  WidthSpec s;
  s.io_width = parse_size(text.substr(0, colon), "width spec");
  for (auto part : split(text.substr(colon + 1), ',')) s.attn_widths.push_back(parse_size(part, "width spec"));
  if (s.attn_widths.size() != n_layers)
    throw Error("width spec '" + std::string(text) + "' lists " + std::to_string(s.attn_widths.size()) +
                " layer widths, model has " + std::to_string(n_layers));
  return s;
}

std::string WidthSpec::to_string() const {
  std::string s = std::to_string(io_width) + ":";
  for (std::size_t i = 0; i < attn_widths.size(); ++i) s += (i ? "," : "") + std::to_string(attn_widths[i]);
  return s;
}

bool WidthSpec::is_type1() const {
  return std::all_of(attn_widths.begin(), attn_widths.end(), [&](std::size_t d) { return d == io_width; });
}

bool WidthSpec::is_type2(const ModelConfig& config) const { return io_width == config.max_width; }

bool WidthSpec::nested_in(const WidthSpec& other) const {
  if (attn_widths.size() != other.attn_widths.size() || io_width > other.io_width) return false;
  for (std::size_t i = 0; i < attn_widths.size(); ++i)
    if (attn_widths[i] > other.attn_widths[i]) return false;
  return true;
}

void WidthSpec::validate(const ModelConfig& config) const {
  if (attn_widths.size() != config.n_layers())
    throw Error("width spec has " + std::to_string(attn_widths.size()) + " layer widths, model has " +
                std::to_string(config.n_layers()));
  if (!config.in_menu(io_width)) throw Error("input-output width " + std::to_string(io_width) + " is not in the menu");
  for (auto d : attn_widths)
    if (!config.in_menu(d)) throw Error("attention width " + std::to_string(d) + " is not in the menu");
}

double dropout_rate(const ModelConfig& config, const WidthSpec& spec) {
  if (spec.is_type1()) return config.dropout_by_width.at(spec.io_width);
  std::size_t total = 0;
  for (auto d : spec.attn_widths) total += config.menu_index(d);
  const std::size_t mean_index = total / spec.attn_widths.size();
  return config.dropout_by_width.at(config.width_menu[mean_index]);
}

}  // namespace scalant
