#include "rldialog/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "rldialog/errors.hpp"
#include "rldialog/rng.hpp"

namespace rldialog::eval {

namespace {

using Ngram = std::vector<std::string>;

std::map<Ngram, int64_t> ngram_counts(const Tokens& tokens, size_t n) {
  std::map<Ngram, int64_t> counts;
  if (tokens.size() < n) return counts;
  for (size_t i = 0; i + n <= tokens.size(); ++i)
    ++counts[Ngram(tokens.begin() + i, tokens.begin() + i + n)];
  return counts;
}

size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (size_t i = 1; i <= a.size(); ++i) {
    for (size_t j = 1; j <= b.size(); ++j) {
      if (a[i - 1] == b[j - 1])
        cur[j] = prev[j - 1] + 1;
      else
        cur[j] = std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

double bleu(const Tokens& candidate, const Tokens& reference, size_t max_n) {
  if (reference.empty()) throw ValidationError("bleu: empty reference");
  if (max_n < 1) throw ValidationError("bleu: max_n must be >= 1");
  if (candidate.empty()) return 0.0;

  double log_precision_sum = 0.0;
  for (size_t n = 1; n <= max_n; ++n) {
    const auto cand_counts = ngram_counts(candidate, n);
    const auto ref_counts = ngram_counts(reference, n);
    int64_t clipped = 0, total = 0;
    for (const auto& [gram, count] : cand_counts) {
      total += count;
      const auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) clipped += std::min(count, it->second);
    }
    double p;
    if (n == 1) {
      if (clipped == 0) return 0.0;  // no unigram overlap
      p = static_cast<double>(clipped) / static_cast<double>(total);
    } else {
      // add-one smoothing for the higher orders
      p = static_cast<double>(clipped + 1) / static_cast<double>(total + 1);
    }
    log_precision_sum += std::log(p);
  }
  const double geo_mean = std::exp(log_precision_sum / static_cast<double>(max_n));
  const double bp = std::min(
      1.0, std::exp(1.0 - static_cast<double>(reference.size()) /
                              static_cast<double>(candidate.size())));
  return bp * geo_mean;
}

double rouge_l(const Tokens& candidate, const Tokens& reference, double beta) {
  if (reference.empty()) throw ValidationError("rouge_l: empty reference");
  if (candidate.empty()) return 0.0;
  const double lcs = static_cast<double>(lcs_length(candidate, reference));
  if (lcs == 0.0) return 0.0;
  const double p = lcs / static_cast<double>(candidate.size());
  const double r = lcs / static_cast<double>(reference.size());
  const double b2 = beta * beta;
  return (1.0 + b2) * p * r / (r + b2 * p);
}

double perplexity(const model::Seq2SeqModel& m, const std::vector<corpus::DialogPair>& pairs) {
  if (pairs.empty()) throw ValidationError("perplexity: empty pair list");
  double total_logp = 0.0;
  size_t total_tokens = 0;
  for (const corpus::DialogPair& p : pairs) {
    total_logp += model::sequence_log_prob(m, p.source, p.target);
    total_tokens += p.target.size() + 1;  // EOS counted
  }
  return std::exp(-total_logp / static_cast<double>(total_tokens));
}

double paired_bootstrap_scores(const std::vector<double>& scores_a,
                               const std::vector<double>& scores_b, size_t resamples,
                               uint64_t seed) {
  if (scores_a.size() != scores_b.size())
    throw ValidationError("paired_bootstrap: aligned lists required, got " +
                          std::to_string(scores_a.size()) + "/" +
                          std::to_string(scores_b.size()));
  const size_t n = scores_a.size();
  if (n < 2) throw ValidationError("paired_bootstrap: need at least 2 examples");

  std::vector<double> diff(n);
  double mean_diff = 0.0;
  for (size_t i = 0; i < n; ++i) {
    diff[i] = scores_a[i] - scores_b[i];
    mean_diff += diff[i];
  }
  mean_diff /= static_cast<double>(n);

  // Recenter so the resampling distribution realizes the null of zero mean
  // difference; two-sided tail count with add-one smoothing.
  std::vector<double> centered(n);
  for (size_t i = 0; i < n; ++i) centered[i] = diff[i] - mean_diff;

  Rng rng(seed);
  size_t hits = 0;
  for (size_t r = 0; r < resamples; ++r) {
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) acc += centered[static_cast<size_t>(rng.next_below(n))];
    if (std::abs(acc / static_cast<double>(n)) >= std::abs(mean_diff)) ++hits;
  }
  return static_cast<double>(hits + 1) / static_cast<double>(resamples + 1);
}

double paired_bootstrap(const SentenceMetric& metric, const std::vector<Tokens>& system_a,
                        const std::vector<Tokens>& system_b, const std::vector<Tokens>& references,
                        size_t resamples, uint64_t seed) {
  if (system_a.size() != system_b.size() || system_a.size() != references.size())
    throw ValidationError("paired_bootstrap: aligned lists required, got " +
                          std::to_string(system_a.size()) + "/" + std::to_string(system_b.size()) +
                          "/" + std::to_string(references.size()));
  std::vector<double> scores_a(system_a.size()), scores_b(system_b.size());
  for (size_t i = 0; i < system_a.size(); ++i) {
    scores_a[i] = metric(system_a[i], references[i]);
    scores_b[i] = metric(system_b[i], references[i]);
  }
  return paired_bootstrap_scores(scores_a, scores_b, resamples, seed);
}

MetricReport evaluate_outputs(const std::vector<Tokens>& candidates,
                              const std::vector<Tokens>& references) {
  if (candidates.size() != references.size())
    throw ValidationError("evaluate_outputs: aligned lists required, got " +
                          std::to_string(candidates.size()) + " candidates and " +
                          std::to_string(references.size()) + " references");
  if (candidates.empty()) throw ValidationError("evaluate_outputs: empty input");
  MetricReport report;
  report.n_examples = candidates.size();
  for (size_t i = 0; i < candidates.size(); ++i) {
    report.bleu += bleu(candidates[i], references[i]);
    report.rouge_l += rouge_l(candidates[i], references[i]);
  }
  report.bleu /= static_cast<double>(report.n_examples);
  report.rouge_l /= static_cast<double>(report.n_examples);
  return report;
}

}  // namespace rldialog::eval
