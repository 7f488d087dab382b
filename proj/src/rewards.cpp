#include "rldialog/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>

#include "rldialog/errors.hpp"

namespace rldialog::rewards {

const std::vector<std::string>& DullResponseSet::default_responses() {
  static const std::vector<std::string> responses = {
      "I don't know.",
      "I don't know what I mean.",
      "I don't know what you're talking about.",
      "You don't know.",
      "You know what I mean.",
      "You know what I'm saying.",
      "You don't know anything.",
      "I am not sure.",
      "I know what you mean.",
      "I do not know anything.",
  };
  return responses;
}

DullResponseSet DullResponseSet::build(const std::vector<std::string>& raw_responses,
                                       const corpus::Vocabulary& vocab, size_t max_len) {
  DullResponseSet set;
  for (const std::string& raw : raw_responses) {
    const std::string norm = corpus::preprocess_text(raw);
    if (norm.empty()) continue;
    const corpus::TokenSeq ids = corpus::encode(norm, vocab, max_len);
    if (std::find(ids.begin(), ids.end(), corpus::kUnkId) != ids.end()) {
      std::cerr << "warning: dull response not fully in vocabulary, dropped: \"" << norm
                << "\"\n";
      continue;
    }
    set.encoded_.push_back(ids);
    set.normalized_.push_back(norm);
  }
  return set;
}

DullResponseSet DullResponseSet::load_file(const std::string& path,
                                           const corpus::Vocabulary& vocab, size_t max_len) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dull-response list: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return build(lines, vocab, max_len);
}

bool DullResponseSet::contains(const corpus::TokenSeq& action) const {
  return std::find(encoded_.begin(), encoded_.end(), action) != encoded_.end();
}

RewardWeights RewardWeights::create(double ea, double sc, double ei, double hf) {
  if (ea < 0 || sc < 0 || ei < 0 || hf < 0)
    throw ValidationError("reward weights must be nonnegative");
  const double sum = ea + sc + ei + hf;
  if (std::abs(sum - 1.0) > 1e-9)
    throw ValidationError("reward weights must sum to 1, got " + std::to_string(sum));
  RewardWeights w;
  w.lambda_ea = ea;
  w.lambda_sc = sc;
  w.lambda_ei = ei;
  w.lambda_hf = hf;
  return w;
}

double reward_ease_of_answering(const model::Seq2SeqModel& scorer, const corpus::TokenSeq& action,
                                const DullResponseSet& dull) {
  if (action.empty()) throw ValidationError("reward_ease_of_answering: empty action");
  if (dull.empty()) throw ValidationError("reward_ease_of_answering: empty dull set");
  double total = 0.0;
  for (const corpus::TokenSeq& s : dull.encoded()) {
    const double logp = model::sequence_log_prob(scorer, action, s);
    const double n_s = static_cast<double>(s.size() + 1);  // scored steps incl. EOS
    total += logp / n_s;
  }
  return -total / static_cast<double>(dull.size());
}

double reward_semantic_coherence(const model::Seq2SeqModel& forward,
                                 const model::Seq2SeqModel& backward,
                                 const corpus::TokenSeq& source, const corpus::TokenSeq& action) {
  if (source.empty()) throw ValidationError("reward_semantic_coherence: empty source");
  if (action.empty()) throw ValidationError("reward_semantic_coherence: empty action");
  const double n_y = static_cast<double>(action.size() + 1);
  const double n_x = static_cast<double>(source.size() + 1);
  const double fwd = model::sequence_log_prob(forward, source, action) / n_y;
  const double bwd = model::sequence_log_prob(backward, action, source) / n_x;
  return fwd + bwd;
}

double reward_emotional_intelligence(const affect::AffectLexicon& lexicon,
                                     const std::vector<std::string>& source_tokens,
                                     const std::vector<std::string>& action_tokens) {
  if (source_tokens.empty())
    throw ValidationError("reward_emotional_intelligence: empty source tokens");
  if (action_tokens.empty())
    throw ValidationError("reward_emotional_intelligence: empty action tokens");
  const affect::AffectVector src = affect::w2av_mean(source_tokens, lexicon);
  const affect::AffectVector act = affect::w2av_mean(action_tokens, lexicon);
  return -affect::affect_distance(src, act);
}

double reward_human_feedback(const feedback::UsefulnessAnalyzer& analyzer,
                             const std::string& action_text, bool margin_scaled) {
  const auto [label, margin] = feedback::classify(analyzer, action_text);
  if (margin_scaled) return std::clamp(margin, 0.0, 1.0);
  return label == feedback::UsefulnessLabel::Useful ? 1.0 : 0.0;
}

RewardBreakdown combine_rewards(const PartialRewards& partial, const RewardWeights& weights) {
  if (weights.lambda_hf > 0.0 && !partial.r_hf)
    throw ValidationError("combine_rewards: lambda_hf > 0 but no external reward provided");
  if (weights.lambda_hf == 0.0 && partial.r_hf)
    throw ValidationError("combine_rewards: external reward provided but lambda_hf is 0");
  RewardBreakdown out;
  out.r_ea = partial.r_ea;
  out.r_sc = partial.r_sc;
  out.r_ei = partial.r_ei;
  out.r_hf = partial.r_hf.value_or(0.0);
  out.combined = weights.lambda_ea * out.r_ea + weights.lambda_sc * out.r_sc +
                 weights.lambda_ei * out.r_ei + weights.lambda_hf * out.r_hf;
  return out;
}

}  // namespace rldialog::rewards
