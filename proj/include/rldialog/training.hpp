#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "rldialog/affect.hpp"
#include "rldialog/corpus.hpp"
#include "rldialog/feedback.hpp"
#include "rldialog/model.hpp"
#include "rldialog/rewards.hpp"

namespace rldialog::training {

struct OptimizerConfig {
  size_t batch_size = 128;
  double learning_rate = 0.01;
  double decay_rate = 0.0095;   // per-epoch geometric decay
  double gradient_clip = 1.0;   // global-norm threshold
  size_t epochs = 50;
  uint64_t seed = 0;

  void validate() const;
};

// lr_k = learning_rate * (1 - decay_rate)^k at epoch k (0-based).
double effective_learning_rate(const OptimizerConfig& cfg, size_t epoch);

// Moving-average reward baseline for the score-function estimator.
struct Baseline {
  double value = 0.0;
  double decay = 0.95;
  void update(double reward) { value = decay * value + (1.0 - decay) * reward; }
};

struct EpochStats {
  size_t epoch = 0;
  double train_metric = 0.0;  // mean per-token NLL (MLE) or mean combined reward (RL)
  std::optional<double> validation_perplexity;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  double wall_clock_seconds = 0.0;
  uint64_t seed = 0;
};

/// Scales gradients down to the global-norm threshold when they exceed it;
/// returns the pre-clip norm.
double clip_gradients(model::Seq2SeqModel& m, double max_norm);

void sgd_step(model::Seq2SeqModel& m, double lr);

/// Teacher-forced maximum-likelihood training: minimizes mean per-token NLL
/// (EOS counted) over the training pairs, batch by batch, with gradient
/// clipping and the per-epoch decay schedule. Deterministic given the seed.
TrainReport train_mle(model::Seq2SeqModel& m, const corpus::CorpusSplit& split,
                      const OptimizerConfig& cfg);

/// Fresh model trained on (target -> source); supplies p(source|action) for
/// the coherence reward.
model::Seq2SeqModel train_reverse(const model::ModelConfig& config,
                                  const corpus::CorpusSplit& split, const OptimizerConfig& cfg,
                                  TrainReport* report = nullptr);

/// Unconditional language model over the target side.
model::Seq2SeqModel train_language_model(const model::ModelConfig& config,
                                         const std::vector<corpus::TokenSeq>& targets,
                                         const OptimizerConfig& cfg,
                                         TrainReport* report = nullptr);

/// Same loop on an already-initialized language model (custom embeddings).
TrainReport train_language_model_inplace(model::Seq2SeqModel& lm,
                                         const std::vector<corpus::TokenSeq>& targets,
                                         const OptimizerConfig& cfg);

// Everything the reward evaluation needs during fine-tuning. The scorer is a
// frozen snapshot of the pretrained forward model: likelihood rewards are
// computed against it rather than the moving policy, so the policy cannot
// raise its reward by bending the scorer instead of changing its actions.
struct RlContext {
  const model::Seq2SeqModel* reward_scorer = nullptr;
  const model::Seq2SeqModel* reverse_model = nullptr;
  const model::Seq2SeqModel* language_model = nullptr;
  const rewards::DullResponseSet* dull = nullptr;
  const affect::AffectLexicon* lexicon = nullptr;
  const feedback::UsefulnessAnalyzer* analyzer = nullptr;  // required iff lambda_hf > 0
  const corpus::Vocabulary* vocab = nullptr;
  std::vector<corpus::TokenSeq> prompts;
  double baseline_decay = 0.95;
  bool margin_scaled_hf = false;
};

/// REINFORCE with a moving-average baseline: sample a response per prompt,
/// evaluate the combined reward, weight the sampled sequence's log-prob
/// gradient by (reward - baseline), clip, step. Sampled responses that come
/// out empty carry no reward signal and are skipped.
TrainReport finetune_rl(model::Seq2SeqModel& policy, RlContext& ctx,
                        const rewards::RewardWeights& weights, const OptimizerConfig& cfg);

struct GradientCheckResult {
  double max_rel_error = 0.0;
  std::string worst_tensor;
  size_t worst_index = 0;
  size_t coords_checked = 0;
  std::unordered_map<std::string, double> group_max;  // per parameter group
};

/// Central-difference check of the analytic MLE gradient on one example.
/// Samples at least min_coords coordinates spread over every parameter
/// group. Relative error uses a 1e-3 denominator floor so near-zero
/// coordinates compare absolutely.
GradientCheckResult gradient_check(model::Seq2SeqModel& m, const corpus::TokenSeq& source,
                                   const corpus::TokenSeq& target, double epsilon,
                                   size_t min_coords = 200, uint64_t seed = 1234);

/// Versioned binary checkpoint: magic, format version, config, then every
/// parameter tensor in named_tensors() order as little-endian 64-bit floats.
/// Round-trips are bit-exact.
void save_checkpoint(const model::Seq2SeqModel& m, const std::string& path);
model::Seq2SeqModel load_checkpoint(const std::string& path);
/// Load that additionally rejects any config field differing from `expected`,
/// naming the field.
model::Seq2SeqModel load_checkpoint(const std::string& path, const model::ModelConfig& expected);

/// Rebuilds the embedding table as base vectors with the word's VAD triple
/// in the last three columns. Base vectors come from `base_vectors` when a
/// token is present there, otherwise uniform [-0.1, 0.1] from the seed.
void apply_affect_embeddings(
    model::Seq2SeqModel& m, const corpus::Vocabulary& vocab,
    const affect::AffectLexicon& lexicon, bool rescale, uint64_t seed,
    const std::unordered_map<std::string, std::vector<double>>* base_vectors = nullptr);

// Flat key=value config file covering model, optimizer and reward-weight
// settings. Unknown keys are rejected.
struct FileConfig {
  model::ModelConfig model;        // vocab_size 0 means "take it from the vocabulary file"
  OptimizerConfig optim;
  double lambda_ea = 0.25;
  double lambda_sc = 0.35;
  double lambda_ei = 0.40;
  double lambda_hf = 0.0;
  bool affect_rescale = false;
  bool margin_reward = false;
  double baseline_decay = 0.95;
};

FileConfig parse_config_file(const std::string& path);

}  // namespace rldialog::training
