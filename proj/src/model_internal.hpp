#pragma once

// Forward/backward internals shared between inference (model.cpp) and the
// trainer. Everything here keeps full activation tapes; desk-scale models
// make the memory cost irrelevant.

#include <vector>

#include "rldialog/model.hpp"

namespace rldialog::model::detail {

using Vec = std::vector<double>;

struct LstmGates {
  Vec i, f, g, o;  // post-nonlinearity gate activations
  Vec c, h;        // new cell / hidden
};

void lstm_forward(const LstmCell& cell, const Vec& x, const Vec& h_prev, const Vec& c_prev,
                  LstmGates& out);

// Gradient half of the cell. dh/dc_in arrive from above/future; emits
// parameter gradients (scaled) and the gradients w.r.t. x, h_prev, c_prev.
void lstm_backward(LstmCell& cell, const Vec& x, const Vec& h_prev, const Vec& c_prev,
                   const LstmGates& fwd, const Vec& dh, const Vec& dc_in, Vec& dx, Vec& dh_prev,
                   Vec& dc_prev);

struct AttnTape {
  Vec query;          // H
  std::vector<Vec> u; // n x H, tanh(Wq q + Wk e_j)
  Vec alpha;          // n
  Vec ctx;            // 2H
};

void attention_forward(const Seq2SeqModel& m, const Vec& query, const std::vector<Vec>& enc_states,
                       AttnTape& tape);

struct StepTape {
  TokenId prev_token = 0;
  AttnTape attn;                 // seq2seq only
  std::vector<Vec> x;            // per-layer inputs
  std::vector<LstmGates> lstm;   // per layer
  Vec probs;                     // V
  TokenId gold = 0;
  double logp_gold = 0.0;
};

struct EncTape {
  // steps[dir][layer][pos]; dir 0 = forward, 1 = backward
  std::vector<std::vector<std::vector<LstmGates>>> steps;
};

struct ForwardTape {
  EncTape enc;
  std::vector<Vec> enc_states;  // n x 2H
  std::vector<Vec> h0;          // L x H, decoder start (post-tanh)
  std::vector<StepTape> steps;
};

// Runs the encoder (when the model has one) and fills enc_states / h0.
void encode_with_tape(const Seq2SeqModel& m, const TokenSeq& source, ForwardTape& tape);

// Teacher-forced decode over step_targets; returns total NLL (sum of
// -log p(step_targets[t])). Requires encode_with_tape to have run first
// for seq2seq models.
double decode_with_tape(const Seq2SeqModel& m, const std::vector<TokenId>& step_targets,
                        ForwardTape& tape);

// Accumulates scale * d(total NLL)/d(theta) into every Tensor::g.
void backward(Seq2SeqModel& m, const TokenSeq& source, const ForwardTape& tape, double scale);

void check_ids(const Seq2SeqModel& m, const TokenSeq& seq, const char* what);

}  // namespace rldialog::model::detail
