#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rldialog/affect.hpp"
#include "rldialog/corpus.hpp"
#include "rldialog/feedback.hpp"
#include "rldialog/model.hpp"

namespace rldialog::rewards {

// The fixed list of generic utterances the ease-of-answering reward steers
// away from. Entries that do not encode cleanly under the runtime vocabulary
// are dropped with a warning, shrinking the set.
class DullResponseSet {
 public:
  static const std::vector<std::string>& default_responses();

  static DullResponseSet build(const std::vector<std::string>& raw_responses,
                               const corpus::Vocabulary& vocab,
                               size_t max_len = corpus::kDefaultMaxLen);
  static DullResponseSet load_file(const std::string& path, const corpus::Vocabulary& vocab,
                                   size_t max_len = corpus::kDefaultMaxLen);

  size_t size() const { return encoded_.size(); }
  bool empty() const { return encoded_.empty(); }
  const std::vector<corpus::TokenSeq>& encoded() const { return encoded_; }
  const std::vector<std::string>& normalized() const { return normalized_; }

  /// Exact-match membership of an action sequence.
  bool contains(const corpus::TokenSeq& action) const;

 private:
  std::vector<corpus::TokenSeq> encoded_;
  std::vector<std::string> normalized_;
};

// Mixture weights for the reward components. For the dialog-corpus setup
// lambda_hf is zero and the external reward drops out of the sum.
struct RewardWeights {
  double lambda_ea = 0.25;
  double lambda_sc = 0.35;
  double lambda_ei = 0.40;
  double lambda_hf = 0.0;

  /// Validates nonnegativity and that the weights sum to 1 within 1e-9.
  static RewardWeights create(double ea, double sc, double ei, double hf);
  static RewardWeights cornell() { return create(0.25, 0.35, 0.40, 0.0); }
  static RewardWeights yelp() { return create(0.25, 0.25, 0.25, 0.25); }
};

struct RewardBreakdown {
  double r_ea = 0.0;
  double r_sc = 0.0;
  double r_ei = 0.0;
  double r_hf = 0.0;
  double combined = 0.0;
};

struct PartialRewards {
  double r_ea = 0.0;
  double r_sc = 0.0;
  double r_ei = 0.0;
  std::optional<double> r_hf;  // present iff the external weight is active
};

/// Ease of answering: mean over the dull set of the per-token-normalized
/// log-likelihood of producing the dull response as a follow-up to `action`,
/// negated. Token counts include the closing EOS, which makes the value
/// length-invariant for position-independent models. Higher is better.
double reward_ease_of_answering(const model::Seq2SeqModel& scorer, const corpus::TokenSeq& action,
                                const DullResponseSet& dull);

/// Semantic coherence: length-normalized forward log p(action|source) plus
/// length-normalized backward log p(source|action) under the reverse-trained
/// model. Both terms are <= 0; 0 is the maximum.
double reward_semantic_coherence(const model::Seq2SeqModel& forward,
                                 const model::Seq2SeqModel& backward,
                                 const corpus::TokenSeq& source, const corpus::TokenSeq& action);

/// Emotional intelligence: negated Euclidean distance between the affect
/// means of source and action tokens (affective dissonance). 0 when the
/// means coincide; always <= 0.
double reward_emotional_intelligence(const affect::AffectLexicon& lexicon,
                                     const std::vector<std::string>& source_tokens,
                                     const std::vector<std::string>& action_tokens);

/// External reward: 1.0 when the analyzer classifies the text Useful, else
/// 0.0. With margin_scaled the reward is the margin clamped to [0,1].
double reward_human_feedback(const feedback::UsefulnessAnalyzer& analyzer,
                             const std::string& action_text, bool margin_scaled = false);

/// combined = l1*r_ea + l2*r_sc + l3*r_ei (+ l4*r_hf). r_hf must be present
/// exactly when lambda_hf > 0.
RewardBreakdown combine_rewards(const PartialRewards& partial, const RewardWeights& weights);

}  // namespace rldialog::rewards
