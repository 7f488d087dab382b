#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rldialog/corpus.hpp"
#include "rldialog/rng.hpp"

namespace rldialog::model {

using corpus::TokenId;
using corpus::TokenSeq;

enum class ModelKind : uint8_t {
  Seq2Seq = 0,        // bidirectional encoder + attention decoder
  LanguageModel = 1,  // decoder stack alone, no source conditioning
};

struct ModelConfig {
  size_t vocab_size = 0;
  size_t embed_dim = 0;  // base embedding width + 3 affect components
  size_t hidden_size = 0;
  size_t num_layers = 2;
  size_t max_decode_len = corpus::kDefaultMaxLen;
  double mmi_lambda = 0.5;
  TokenId sos_id = corpus::kSosId;
  TokenId eos_id = corpus::kEosId;
  ModelKind kind = ModelKind::Seq2Seq;

  void validate() const;  // throws ValidationError
  bool operator==(const ModelConfig&) const = default;
};

// Parameter block with a gradient buffer of the same shape. cols == 1 for
// vectors. Values are always 64-bit; likelihoods and gradient checks depend
// on it.
struct Tensor {
  size_t rows = 0;
  size_t cols = 1;
  std::vector<double> v;
  std::vector<double> g;

  void resize(size_t r, size_t c) {
    rows = r;
    cols = c;
    v.assign(r * c, 0.0);
    g.assign(r * c, 0.0);
  }
  size_t size() const { return v.size(); }
  double* row(size_t r) { return v.data() + r * cols; }
  const double* row(size_t r) const { return v.data() + r * cols; }
  double* grad_row(size_t r) { return g.data() + r * cols; }
};

// Gate weights packed [input; forget; cell; output] along the row axis.
struct LstmCell {
  Tensor Wx;  // 4H x in
  Tensor Wh;  // 4H x H
  Tensor b;   // 4H
};

struct NamedTensor {
  std::string group;  // parameter group for gradient checking
  std::string name;   // unique within the model
  Tensor* tensor;
};

// Full parameter set of the encoder-decoder (or of the unconditional
// language model, which drops the encoder, the init projection and the
// attention block). Members are public; training code walks them directly.
struct Seq2SeqModel {
  ModelConfig config;

  Tensor embedding;                 // V x E
  std::vector<LstmCell> enc_fwd;    // L cells (empty for LanguageModel)
  std::vector<LstmCell> enc_bwd;    // L cells (empty for LanguageModel)
  std::vector<Tensor> init_w;       // L of H x H: decoder start from final forward state
  std::vector<Tensor> init_b;       // L of H
  Tensor attn_query;                // H x H
  Tensor attn_key;                  // H x 2H
  Tensor attn_v;                    // H
  std::vector<LstmCell> dec;        // L cells; layer 0 input is E + 2H (E for LM)
  Tensor out_w;                     // V x H
  Tensor out_b;                     // V

  // All parameter tensors in checkpoint order.
  std::vector<NamedTensor> named_tensors();
  std::vector<double*> grad_buffers();
  size_t parameter_count() const;

  void zero_grad();

  // Weights uniform in [-0.1, 0.1] from the seed, biases zero.
  static Seq2SeqModel create(const ModelConfig& config, uint64_t seed);
};

// Encoder output: one state per source position, forward and backward top
// hidden states concatenated (width 2H), plus the per-layer final forward
// hidden states that seed the decoder.
struct EncoderStates {
  std::vector<std::vector<double>> states;       // n x 2H
  std::vector<std::vector<double>> fwd_final_h;  // L x H
};

EncoderStates encode(const Seq2SeqModel& model, const TokenSeq& source);

struct AttentionResult {
  std::vector<double> context;  // 2H
  std::vector<double> weights;  // one per encoder position, sums to 1
};

/// Additive attention: score_j = v . tanh(Wq q + Wk e_j), softmax over j,
/// context = sum of weighted encoder states.
AttentionResult attend(const Seq2SeqModel& model, const std::vector<double>& decoder_state,
                       const std::vector<std::vector<double>>& encoder_states);

// Incremental decoding handle over one source (or none, for a language
// model). Immutable once built; per-hypothesis state lives in DecoderState.
struct DecodeSession {
  const Seq2SeqModel* model = nullptr;
  EncoderStates enc;
  std::vector<std::vector<double>> h0, c0;  // L x H decoder start
};

struct DecoderState {
  std::vector<std::vector<double>> h, c;  // L x H
};

struct StepResult {
  std::vector<double> logits;  // V
  double log_z = 0.0;          // log sum exp(logits)
  double log_prob(TokenId id) const { return logits[static_cast<size_t>(id)] - log_z; }
};

DecodeSession start_decode(const Seq2SeqModel& model, const TokenSeq& source);
DecoderState initial_state(const DecodeSession& session);
/// Feeds prev_token, advances the state by one step, returns the next-token
/// distribution as logits plus their log partition sum.
StepResult decode_step(const DecodeSession& session, DecoderState& state, TokenId prev_token);

/// Sum over target steps (EOS included) of log p(token | prefix, source).
/// Always <= 0. For a LanguageModel pass an empty source.
double sequence_log_prob(const Seq2SeqModel& model, const TokenSeq& source,
                         const TokenSeq& target);

/// log p(tokens) under an unconditional language model, EOS-framed.
double language_model_log_prob(const Seq2SeqModel& lm, const TokenSeq& tokens);

/// Argmax decoding; stops at EOS or max_decode_len. Ties break toward the
/// lowest token id, so output is deterministic.
TokenSeq greedy_decode(const Seq2SeqModel& model, const TokenSeq& source);

struct SampleResult {
  TokenSeq tokens;                    // emitted tokens, EOS not included
  std::vector<double> step_log_probs; // one per sampled step incl. terminating EOS
  bool ended_with_eos = false;
};

/// Draws each step from the model distribution. The returned log-probs are
/// exactly those of the sampled tokens; the policy-gradient estimator needs
/// them.
SampleResult sample_decode(const Seq2SeqModel& model, const TokenSeq& source, uint64_t seed);

struct Candidate {
  TokenSeq tokens;
  double cond_logprob = 0.0;  // log p(T|S), EOS-framed
  double lm_logprob = 0.0;    // log p(T); set by mmi_rescore
  double mmi_score = 0.0;     // cond_logprob - lambda * lm_logprob
  bool scored = false;        // lm_logprob / mmi_score populated
};

/// Beam search of width n. Finished hypotheses (EOS chosen, or EOS appended
/// at the length cap) occupy result slots; candidates come back sorted by
/// cond_logprob descending. cond_logprob agrees exactly with
/// sequence_log_prob on the same tokens.
std::vector<Candidate> n_best_decode(const Seq2SeqModel& model, const TokenSeq& source, size_t n);

/// Fills lm_logprob from the language model, computes
/// mmi_score = cond_logprob - lambda * lm_logprob, re-sorts descending.
void mmi_rescore(std::vector<Candidate>& candidates, const Seq2SeqModel& language_model,
                 double lambda);

/// Same scoring/re-sorting but trusting lm_logprob values already present.
void mmi_rescore_scored(std::vector<Candidate>& candidates, double lambda);

}  // namespace rldialog::model
