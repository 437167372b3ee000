#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "adc/error.hpp"
#include "adc/nn/types.hpp"

namespace adc::metrics {

using NGram = std::vector<TokenId>;

/// n-gram -> count for a single order n.
struct NGramCounts {
  int order = 0;
  std::map<NGram, int> counts;

  long total() const {
    long t = 0;
    for (const auto& [g, c] : counts) t += c;
    return t;
  }
};

inline NGramCounts ngram_counts(const Tokens& seq, int n) {
  NGramCounts out{n, {}};
  if (n < 1) return out;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= seq.size(); ++i)
    ++out.counts[NGram(seq.begin() + static_cast<long>(i), seq.begin() + static_cast<long>(i) + n)];
  return out;
}

inline void require_references(const std::vector<Tokens>& refs, const char* who) {
  if (refs.empty()) throw ValidationError(std::string(who) + ": empty reference list");
}

// ---------------------------------------------------------------------------
// ROUGE-L

inline long lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<long> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

/// LCS F-measure, max over references.
inline double rouge_l(const Tokens& candidate, const std::vector<Tokens>& refs, double beta = 1.2) {
  require_references(refs, "rouge_l");
  if (!(beta > 0.0)) throw ValidationError("rouge_l: beta must be positive");
  if (candidate.empty()) return 0.0;
  const double b2 = beta * beta;
  double best = 0.0;
  for (const auto& ref : refs) {
    if (ref.empty()) continue;
    const double lcs = static_cast<double>(lcs_length(candidate, ref));
    const double p = lcs / static_cast<double>(candidate.size());
    const double r = lcs / static_cast<double>(ref.size());
    if (p == 0.0 && r == 0.0) continue;
    best = std::max(best, (1.0 + b2) * p * r / (r + b2 * p));
  }
  return best;
}

// ---------------------------------------------------------------------------
// BLEU (sentence level)

/// Clipped k-gram precisions for k = 1..n, +1 smoothing for k >= 2, brevity
/// penalty against the closest reference length (shorter on ties).
inline double bleu_n(const Tokens& candidate, const std::vector<Tokens>& refs, int n) {
  require_references(refs, "bleu_n");
  if (n < 1 || n > 4) throw ValidationError("bleu_n: n must be in 1..4");
  if (static_cast<long>(candidate.size()) < n) return 0.0;

  double log_sum = 0.0;
  for (int k = 1; k <= n; ++k) {
    const NGramCounts cand = ngram_counts(candidate, k);
    std::map<NGram, int> max_ref;
    for (const auto& ref : refs)
      for (const auto& [g, c] : ngram_counts(ref, k).counts) max_ref[g] = std::max(max_ref[g], c);
    long clipped = 0;
    for (const auto& [g, c] : cand.counts) {
      auto it = max_ref.find(g);
      if (it != max_ref.end()) clipped += std::min(c, it->second);
    }
    const double smooth = k >= 2 ? 1.0 : 0.0;
    const double p = (static_cast<double>(clipped) + smooth) / (static_cast<double>(cand.total()) + smooth);
    if (p <= 0.0) return 0.0;
    log_sum += std::log(p);
  }

  const long c = static_cast<long>(candidate.size());
  long r = static_cast<long>(refs.front().size());
  for (const auto& ref : refs) {
    const long len = static_cast<long>(ref.size());
    const long d = std::abs(len - c), best = std::abs(r - c);
    if (d < best || (d == best && len < r)) r = len;
  }
  const double bp = c < r ? std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c)) : 1.0;
  return bp * std::exp(log_sum / n);
}

// ---------------------------------------------------------------------------
// CIDEr

/// Document frequencies over reference sets, orders 1..4.
struct IdfTable {
  static constexpr int kMaxOrder = 4;
  double num_docs = 0.0;                   // N: number of reference sets
  std::map<NGram, int> doc_freq[kMaxOrder];  // index n-1

  static IdfTable build(const std::vector<std::vector<Tokens>>& reference_sets) {
    IdfTable t;
    t.num_docs = static_cast<double>(reference_sets.size());
    for (const auto& refs : reference_sets) {
      for (int n = 1; n <= kMaxOrder; ++n) {
        std::map<NGram, int> seen;
        for (const auto& ref : refs)
          for (const auto& [g, c] : ngram_counts(ref, n).counts) seen[g] = 1;
        for (const auto& [g, one] : seen) ++t.doc_freq[n - 1][g];
      }
    }
    return t;
  }

  int df(const NGram& g) const {
    const auto& m = doc_freq[g.size() - 1];
    auto it = m.find(g);
    return it == m.end() ? 0 : it->second;
  }

  /// log(N / df); n-grams absent from every reference set use df = 1.
  double weight(const NGram& g) const {
    if (num_docs <= 0.0) return 0.0;
    return std::log(num_docs / std::max(1.0, static_cast<double>(df(g))));
  }
};

namespace detail {

inline std::map<NGram, double> tfidf(const Tokens& seq, int n, const IdfTable& idf) {
  std::map<NGram, double> v;
  const NGramCounts counts = ngram_counts(seq, n);
  const double total = static_cast<double>(std::max(1L, counts.total()));
  for (const auto& [g, c] : counts.counts) v[g] = (c / total) * idf.weight(g);
  return v;
}

inline double cosine(const std::map<NGram, double>& a, const std::map<NGram, double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [g, w] : a) {
    na += w * w;
    auto it = b.find(g);
    if (it != b.end()) dot += w * it->second;
  }
  for (const auto& [g, w] : b) nb += w * w;
  if (na <= 0.0 || nb <= 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace detail

/// CIDEr for one candidate: mean over orders 1..4 and references of the
/// tf-idf cosine, times 10.
inline double cider_single(const Tokens& candidate, const std::vector<Tokens>& refs, const IdfTable& idf) {
  require_references(refs, "cider");
  double score = 0.0;
  for (int n = 1; n <= IdfTable::kMaxOrder; ++n) {
    const auto vc = detail::tfidf(candidate, n, idf);
    double sum = 0.0;
    for (const auto& ref : refs) sum += detail::cosine(vc, detail::tfidf(ref, n, idf));
    score += sum / static_cast<double>(refs.size());
  }
  return 10.0 * score / IdfTable::kMaxOrder;
}

/// Corpus CIDEr: mean of per-example scores.
inline double cider(const std::vector<Tokens>& candidates, const std::vector<std::vector<Tokens>>& refs,
                    const IdfTable& idf) {
  if (candidates.size() != refs.size())
    throw ValidationError("cider: " + std::to_string(candidates.size()) + " candidates but " +
                          std::to_string(refs.size()) + " reference sets");
  if (candidates.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) sum += cider_single(candidates[i], refs[i], idf);
  return sum / static_cast<double>(candidates.size());
}

// ---------------------------------------------------------------------------

struct MetricReport {
  double bleu1 = 0.0, bleu2 = 0.0, bleu3 = 0.0, bleu4 = 0.0;
  double rouge_l = 0.0;
  double cider = 0.0;
  std::size_t num_examples = 0;
};

/// Sentence-level BLEU/ROUGE-L averaged over examples; CIDEr with idf from
/// the given references.
inline MetricReport score_corpus(const std::vector<Tokens>& candidates,
                                 const std::vector<std::vector<Tokens>>& refs) {
  if (candidates.size() != refs.size()) throw ValidationError("score_corpus: misaligned inputs");
  MetricReport r;
  r.num_examples = candidates.size();
  if (candidates.empty()) return r;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    r.bleu1 += bleu_n(candidates[i], refs[i], 1);
    r.bleu2 += bleu_n(candidates[i], refs[i], 2);
    r.bleu3 += bleu_n(candidates[i], refs[i], 3);
    r.bleu4 += bleu_n(candidates[i], refs[i], 4);
    r.rouge_l += rouge_l(candidates[i], refs[i]);
  }
  const double n = static_cast<double>(candidates.size());
  r.bleu1 /= n;
  r.bleu2 /= n;
  r.bleu3 /= n;
  r.bleu4 /= n;
  r.rouge_l /= n;
  r.cider = cider(candidates, refs, IdfTable::build(refs));
  return r;
}

}  // namespace adc::metrics
