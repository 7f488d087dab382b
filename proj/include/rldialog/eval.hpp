#pragma once

#include <functional>
#include <string>
#include <vector>

#include "rldialog/corpus.hpp"
#include "rldialog/model.hpp"

namespace rldialog::eval {

using Tokens = std::vector<std::string>;

struct MetricReport {
  double bleu = 0.0;     // in [0,1]
  double rouge_l = 0.0;  // in [0,1]
  double perplexity = 0.0;
  size_t n_examples = 0;
};

/// Sentence-level BLEU: geometric mean of clipped n-gram precisions for
/// n = 1..max_n, with add-one smoothing applied to orders >= 2, times the
/// brevity penalty min(1, exp(1 - |ref|/|cand|)). Empty candidates score 0;
/// a zero unigram precision scores 0.
double bleu(const Tokens& candidate, const Tokens& reference, size_t max_n = 4);

/// ROUGE-L: LCS-based F-measure with recall weight beta;
/// P = LCS/|cand|, R = LCS/|ref|, F = (1+b^2)PR / (R + b^2 P), 0 when LCS=0.
double rouge_l(const Tokens& candidate, const Tokens& reference, double beta = 1.2);

/// Corpus perplexity, token-normalized: exp of minus the total target
/// log-likelihood divided by the total target token count (EOS included).
double perplexity(const model::Seq2SeqModel& m, const std::vector<corpus::DialogPair>& pairs);

using SentenceMetric = std::function<double(const Tokens& candidate, const Tokens& reference)>;

/// Two-sided paired bootstrap p-value for the difference in mean sentence
/// metric between two systems on aligned outputs. Per-example differences
/// are recentered under the null, resampled with replacement, and the
/// p-value is the add-one-smoothed fraction of resampled |means| reaching
/// the observed |mean|. Deterministic given the seed.
double paired_bootstrap(const SentenceMetric& metric, const std::vector<Tokens>& system_a,
                        const std::vector<Tokens>& system_b, const std::vector<Tokens>& references,
                        size_t resamples = 10000, uint64_t seed = 0);

/// Same test on aligned per-example score vectors (any scalar quality
/// measure, e.g. per-prompt rewards).
double paired_bootstrap_scores(const std::vector<double>& scores_a,
                               const std::vector<double>& scores_b, size_t resamples = 10000,
                               uint64_t seed = 0);

/// Mean sentence BLEU / ROUGE-L over aligned candidate/reference lists.
MetricReport evaluate_outputs(const std::vector<Tokens>& candidates,
                              const std::vector<Tokens>& references);

}  // namespace rldialog::eval
