#include "scalant/decoding/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "scalant/eval/metrics.hpp"
#include "scalant/model/inference.hpp"

namespace scalant {

namespace {

constexpr std::size_t kChunk = 64;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool emittable(std::size_t token) { return token != static_cast<std::size_t>(kPad) && token != static_cast<std::size_t>(kBos); }

/// Log-softmax of one row with PAD and BOS excluded from the result.
void log_probs(const double* logits, std::size_t n, double* out) {
  const double mx = *std::max_element(logits, logits + n);
  double z = 0.0;
  for (std::size_t c = 0; c < n; ++c) z += std::exp(logits[c] - mx);
  const double log_z = std::log(z);
  for (std::size_t c = 0; c < n; ++c) out[c] = emittable(c) ? (logits[c] - mx) - log_z : kNegInf;
}

std::vector<std::size_t> cap_lengths(const SubModel& sub, const std::vector<TokenSeq>& sources, std::size_t max_len) {
  std::vector<std::size_t> caps;
  for (const auto& s : sources) {
    if (s.empty()) throw Error("cannot decode an empty source");
    const std::size_t cap = max_len ? max_len : default_max_len(sub.config(), s.size());
    if (cap > sub.config().max_seq_len) throw Error("decode length exceeds max_seq_len");
    caps.push_back(cap);
  }
  return caps;
}

template <typename Fn>
void for_chunks(std::size_t n, Fn&& fn) {
  for (std::size_t first = 0; first < n; first += kChunk) fn(first, std::min(first + kChunk, n));
}

struct Candidate {
  double total;
  double step;
  std::size_t row;
  std::size_t token;
};

bool better(const Candidate& a, const Candidate& b) {
  if (a.total != b.total) return a.total > b.total;
  if (a.step != b.step) return a.step > b.step;
  if (a.row != b.row) return a.row < b.row;
  return a.token < b.token;
}

}  // namespace

std::size_t default_max_len(const ModelConfig& config, std::size_t source_len) {
  return std::min(config.max_seq_len, 2 * source_len + 10);
}

double length_penalized(double log_prob, std::size_t length, double alpha) {
  return log_prob / std::pow(static_cast<double>(length), alpha);
}

TokenSeq strip_eos(const TokenSeq& tokens) {
  if (!tokens.empty() && tokens.back() == kEos) return TokenSeq(tokens.begin(), tokens.end() - 1);
  return tokens;
}

std::vector<TokenSeq> greedy_decode_batch(const SubModel& sub, const std::vector<TokenSeq>& sources,
                                          std::size_t max_len) {
  const auto caps = cap_lengths(sub, sources, max_len);
  std::vector<TokenSeq> out(sources.size());
  const std::size_t n = sub.config().vocab_size;
  std::vector<double> lp(n);
  for_chunks(sources.size(), [&](std::size_t first, std::size_t last) {
    const std::vector<TokenSeq> chunk(sources.begin() + first, sources.begin() + last);
    const EncodedSources enc = encode_sources(sub, TokenBlock::from_sequences(chunk));
    std::vector<std::size_t> rows(chunk.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    const std::size_t capacity = *std::max_element(caps.begin() + first, caps.begin() + last);
    IncrementalDecoder dec(sub, enc, rows, capacity);
    std::vector<int> last_tokens(rows.size(), kBos);
    while (!rows.empty()) {
      const Tensor logits = dec.step(last_tokens);
      std::vector<std::size_t> keep;
      std::vector<int> next;
      for (std::size_t r = 0; r < rows.size(); ++r) {
        log_probs(logits.ptr() + r * n, n, lp.data());
        const int tok = static_cast<int>(argmax(lp.data(), n));
        TokenSeq& seq = out[first + rows[r]];
        seq.push_back(tok);
        if (tok == kEos || seq.size() >= caps[first + rows[r]]) continue;
        keep.push_back(r);
        next.push_back(tok);
      }
      std::vector<std::size_t> kept_rows;
      for (auto r : keep) kept_rows.push_back(rows[r]);
      rows = std::move(kept_rows);
      last_tokens = std::move(next);
      if (!rows.empty()) dec.select(keep);
    }
  });
  for (auto& s : out) s = strip_eos(s);
  return out;
}

TokenSeq greedy_decode(const SubModel& sub, const TokenSeq& source, std::size_t max_len) {
  return greedy_decode_batch(sub, {source}, max_len).front();
}

std::vector<Hypothesis> beam_search_batch(const SubModel& sub, const std::vector<TokenSeq>& sources,
                                          std::size_t beam, double alpha, std::size_t max_len) {
  if (beam < 1) throw Error("beam size must be at least 1");
  if (!(alpha >= 0.0)) throw Error("length penalty must be nonnegative");
  const auto caps = cap_lengths(sub, sources, max_len);
  const std::size_t n = sub.config().vocab_size;
  std::vector<Hypothesis> results(sources.size());

  for_chunks(sources.size(), [&](std::size_t first, std::size_t last) {
    const std::size_t count = last - first;
    const std::vector<TokenSeq> chunk(sources.begin() + first, sources.begin() + last);
    const EncodedSources enc = encode_sources(sub, TokenBlock::from_sequences(chunk));
    const std::size_t capacity = *std::max_element(caps.begin() + first, caps.begin() + last);

    // Rows of the decoder, grouped by source in ascending order.
    std::vector<Hypothesis> live(count);
    std::vector<std::size_t> row_source(count);
    for (std::size_t i = 0; i < count; ++i) row_source[i] = i;
    std::vector<std::vector<Hypothesis>> finished(count);
    IncrementalDecoder dec(sub, enc, row_source, capacity);
    std::vector<int> feed(count, kBos);
    std::vector<double> lp(n);

    while (!live.empty()) {
      const Tensor logits = dec.step(feed);
      std::vector<std::vector<Candidate>> per_source(count);
      for (std::size_t r = 0; r < live.size(); ++r) {
        log_probs(logits.ptr() + r * n, n, lp.data());
        auto& cands = per_source[row_source[r]];
        for (std::size_t tok = 0; tok < n; ++tok)
          if (emittable(tok)) cands.push_back({live[r].log_prob + lp[tok], lp[tok], r, tok});
      }

      std::vector<Hypothesis> next_live;
      std::vector<std::size_t> next_source, parents;
      std::vector<int> next_feed;
      for (std::size_t s = 0; s < count; ++s) {
        auto& cands = per_source[s];
        if (cands.empty()) continue;
        const std::size_t keep = std::min(beam, cands.size());
        std::partial_sort(cands.begin(), cands.begin() + keep, cands.end(), better);
        const std::size_t cap = caps[first + s];
        std::vector<Hypothesis> survivors;
        std::vector<std::size_t> survivor_rows;
        for (std::size_t i = 0; i < keep; ++i) {
          const Candidate& c = cands[i];
          Hypothesis h;
          h.tokens = live[c.row].tokens;
          h.tokens.push_back(static_cast<int>(c.token));
          h.log_prob = c.total;
          if (c.token == static_cast<std::size_t>(kEos) || h.tokens.size() >= cap) {
            h.finished = true;
            h.score = length_penalized(h.log_prob, h.tokens.size(), alpha);
            finished[s].push_back(std::move(h));
          } else {
            survivors.push_back(std::move(h));
            survivor_rows.push_back(c.row);
          }
        }
        if (survivors.empty()) continue;
        if (!finished[s].empty()) {
          double best_finished = kNegInf;
          for (const auto& f : finished[s]) best_finished = std::max(best_finished, f.score);
          double best_live = kNegInf;
          for (const auto& h : survivors) best_live = std::max(best_live, h.log_prob);
          if (length_penalized(best_live, cap, alpha) <= best_finished) continue;
        }
        for (std::size_t i = 0; i < survivors.size(); ++i) {
          next_feed.push_back(survivors[i].tokens.back());
          next_live.push_back(std::move(survivors[i]));
          next_source.push_back(s);
          parents.push_back(survivor_rows[i]);
        }
      }
      live = std::move(next_live);
      row_source = std::move(next_source);
      feed = std::move(next_feed);
      if (!live.empty()) dec.select(parents);
    }

    for (std::size_t s = 0; s < count; ++s) {
      const auto& fin = finished[s];
      std::size_t best = 0;
      for (std::size_t i = 1; i < fin.size(); ++i)
        if (fin[i].score > fin[best].score) best = i;
      results[first + s] = fin.at(best);
    }
  });
  return results;
}

Hypothesis beam_search(const SubModel& sub, const TokenSeq& source, std::size_t beam, double alpha,
                       std::size_t max_len) {
  return beam_search_batch(sub, {source}, beam, alpha, max_len).front();
}

}  // namespace scalant
