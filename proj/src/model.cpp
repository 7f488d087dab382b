#include "rldialog/model.hpp"

#include <algorithm>
#include <cmath>

#include "model_internal.hpp"
#include "rldialog/errors.hpp"
#include "rldialog/kernels.hpp"

namespace rldialog::model {

using detail::Vec;

void ModelConfig::validate() const {
  if (vocab_size < 1) throw ValidationError("vocab_size must be >= 1");
  if (embed_dim < 4) throw ValidationError("embed_dim must be >= 4");
  if (hidden_size < 1) throw ValidationError("hidden_size must be >= 1");
  if (num_layers < 1) throw ValidationError("num_layers must be >= 1");
  if (max_decode_len < 1) throw ValidationError("max_decode_len must be >= 1");
  if (mmi_lambda < 0.0) throw ValidationError("mmi_lambda must be >= 0");
  const auto in_vocab = [&](TokenId id) {
    return id >= 0 && static_cast<size_t>(id) < vocab_size;
  };
  if (!in_vocab(sos_id) || !in_vocab(eos_id))
    throw ValidationError("sos/eos ids must lie inside the vocabulary");
}

namespace {

void init_cell(LstmCell& cell, size_t in_dim, size_t hidden) {
  cell.Wx.resize(4 * hidden, in_dim);
  cell.Wh.resize(4 * hidden, hidden);
  cell.b.resize(4 * hidden, 1);
}

void fill_uniform(Tensor& t, Rng& rng, double lo, double hi) {
  for (double& x : t.v) x = rng.next_uniform(lo, hi);
}

}  // namespace

Seq2SeqModel Seq2SeqModel::create(const ModelConfig& config, uint64_t seed) {
  config.validate();
  Seq2SeqModel m;
  m.config = config;
  const size_t V = config.vocab_size;
  const size_t E = config.embed_dim;
  const size_t H = config.hidden_size;
  const size_t L = config.num_layers;
  const bool seq2seq = config.kind == ModelKind::Seq2Seq;

  m.embedding.resize(V, E);
  if (seq2seq) {
    m.enc_fwd.resize(L);
    m.enc_bwd.resize(L);
    m.init_w.resize(L);
    m.init_b.resize(L);
    for (size_t l = 0; l < L; ++l) {
      init_cell(m.enc_fwd[l], l == 0 ? E : H, H);
      init_cell(m.enc_bwd[l], l == 0 ? E : H, H);
      m.init_w[l].resize(H, H);
      m.init_b[l].resize(H, 1);
    }
    m.attn_query.resize(H, H);
    m.attn_key.resize(H, 2 * H);
    m.attn_v.resize(H, 1);
  }
  m.dec.resize(L);
  const size_t dec_in = seq2seq ? E + 2 * H : E;
  for (size_t l = 0; l < L; ++l) init_cell(m.dec[l], l == 0 ? dec_in : H, H);
  m.out_w.resize(V, H);
  m.out_b.resize(V, 1);

  // Biases stay zero; weight matrices draw uniformly. The draw order below
  // matches named_tensors(), which keeps initialization reproducible.
  Rng rng(seed);
  for (NamedTensor& nt : m.named_tensors()) {
    const bool is_bias = nt.tensor->cols == 1 && nt.name.find(".b") != std::string::npos;
    if (!is_bias) fill_uniform(*nt.tensor, rng, -0.1, 0.1);
  }
  return m;
}

std::vector<NamedTensor> Seq2SeqModel::named_tensors() {
  std::vector<NamedTensor> out;
  out.push_back({"embedding", "embedding", &embedding});
  const auto add_cells = [&](std::vector<LstmCell>& cells, const std::string& group,
                             const std::string& prefix) {
    for (size_t l = 0; l < cells.size(); ++l) {
      const std::string base = prefix + "." + std::to_string(l);
      out.push_back({group, base + ".Wx", &cells[l].Wx});
      out.push_back({group, base + ".Wh", &cells[l].Wh});
      out.push_back({group, base + ".b", &cells[l].b});
    }
  };
  add_cells(enc_fwd, "encoder_fwd", "encoder_fwd");
  add_cells(enc_bwd, "encoder_bwd", "encoder_bwd");
  for (size_t l = 0; l < init_w.size(); ++l) {
    out.push_back({"init_proj", "init_proj." + std::to_string(l) + ".W", &init_w[l]});
    out.push_back({"init_proj", "init_proj." + std::to_string(l) + ".bias", &init_b[l]});
  }
  if (config.kind == ModelKind::Seq2Seq) {
    out.push_back({"attention", "attention.Wq", &attn_query});
    out.push_back({"attention", "attention.Wk", &attn_key});
    out.push_back({"attention", "attention.v", &attn_v});
  }
  add_cells(dec, "decoder", "decoder");
  out.push_back({"output_proj", "output_proj.W", &out_w});
  out.push_back({"output_proj", "output_proj.bias", &out_b});
  return out;
}

std::vector<double*> Seq2SeqModel::grad_buffers() {
  std::vector<double*> out;
  for (NamedTensor& nt : named_tensors()) out.push_back(nt.tensor->g.data());
  return out;
}

size_t Seq2SeqModel::parameter_count() const {
  size_t total = 0;
  for (const NamedTensor& nt : const_cast<Seq2SeqModel*>(this)->named_tensors())
    total += nt.tensor->size();
  return total;
}

void Seq2SeqModel::zero_grad() {
  for (NamedTensor& nt : named_tensors()) std::fill(nt.tensor->g.begin(), nt.tensor->g.end(), 0.0);
}

namespace detail {

namespace {
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

void check_ids(const Seq2SeqModel& m, const TokenSeq& seq, const char* what) {
  for (TokenId id : seq)
    if (id < 0 || static_cast<size_t>(id) >= m.config.vocab_size)
      throw ValidationError(std::string(what) + ": token id " + std::to_string(id) +
                            " outside vocabulary of size " +
                            std::to_string(m.config.vocab_size));
}

void lstm_forward(const LstmCell& cell, const Vec& x, const Vec& h_prev, const Vec& c_prev,
                  LstmGates& out) {
  const size_t H = cell.Wh.cols;
  Vec z(4 * H);
  kernels::matvec(cell.Wx.v.data(), 4 * H, cell.Wx.cols, x.data(), z.data());
  kernels::matvec_acc(cell.Wh.v.data(), 4 * H, H, h_prev.data(), z.data());
  for (size_t k = 0; k < 4 * H; ++k) z[k] += cell.b.v[k];

  out.i.resize(H);
  out.f.resize(H);
  out.g.resize(H);
  out.o.resize(H);
  out.c.resize(H);
  out.h.resize(H);
  for (size_t k = 0; k < H; ++k) {
    out.i[k] = sigmoid(z[k]);
    out.f[k] = sigmoid(z[H + k]);
    out.g[k] = std::tanh(z[2 * H + k]);
    out.o[k] = sigmoid(z[3 * H + k]);
    out.c[k] = out.f[k] * c_prev[k] + out.i[k] * out.g[k];
    out.h[k] = out.o[k] * std::tanh(out.c[k]);
  }
}

void lstm_backward(LstmCell& cell, const Vec& x, const Vec& h_prev, const Vec& c_prev,
                   const LstmGates& fwd, const Vec& dh, const Vec& dc_in, Vec& dx, Vec& dh_prev,
                   Vec& dc_prev) {
  const size_t H = cell.Wh.cols;
  Vec dz(4 * H);
  dc_prev.assign(H, 0.0);
  for (size_t k = 0; k < H; ++k) {
    const double tc = std::tanh(fwd.c[k]);
    const double do_ = dh[k] * tc;
    const double dc = dc_in[k] + dh[k] * fwd.o[k] * (1.0 - tc * tc);
    const double di = dc * fwd.g[k];
    const double df = dc * c_prev[k];
    const double dg = dc * fwd.i[k];
    dc_prev[k] = dc * fwd.f[k];
    dz[k] = di * fwd.i[k] * (1.0 - fwd.i[k]);
    dz[H + k] = df * fwd.f[k] * (1.0 - fwd.f[k]);
    dz[2 * H + k] = dg * (1.0 - fwd.g[k] * fwd.g[k]);
    dz[3 * H + k] = do_ * fwd.o[k] * (1.0 - fwd.o[k]);
  }
  kernels::outer_acc(cell.Wx.g.data(), 4 * H, cell.Wx.cols, dz.data(), x.data());
  kernels::outer_acc(cell.Wh.g.data(), 4 * H, H, dz.data(), h_prev.data());
  for (size_t k = 0; k < 4 * H; ++k) cell.b.g[k] += dz[k];
  dx.assign(cell.Wx.cols, 0.0);
  kernels::matvec_t_acc(cell.Wx.v.data(), 4 * H, cell.Wx.cols, dz.data(), dx.data());
  dh_prev.assign(H, 0.0);
  kernels::matvec_t_acc(cell.Wh.v.data(), 4 * H, H, dz.data(), dh_prev.data());
}

void attention_forward(const Seq2SeqModel& m, const Vec& query, const std::vector<Vec>& enc_states,
                       AttnTape& tape) {
  const size_t H = m.config.hidden_size;
  const size_t n = enc_states.size();
  Vec wq(H);
  kernels::matvec(m.attn_query.v.data(), H, H, query.data(), wq.data());
  tape.query = query;
  tape.u.assign(n, Vec(H));
  tape.alpha.assign(n, 0.0);
  Vec scores(n);
  for (size_t j = 0; j < n; ++j) {
    Vec& u = tape.u[j];
    kernels::matvec(m.attn_key.v.data(), H, 2 * H, enc_states[j].data(), u.data());
    double s = 0.0;
    for (size_t k = 0; k < H; ++k) {
      u[k] = std::tanh(u[k] + wq[k]);
      s += m.attn_v.v[k] * u[k];
    }
    scores[j] = s;
  }
  kernels::softmax_inplace(scores.data(), n);
  tape.alpha = scores;
  tape.ctx.assign(2 * H, 0.0);
  for (size_t j = 0; j < n; ++j) {
    const double a = tape.alpha[j];
    for (size_t k = 0; k < 2 * H; ++k) tape.ctx[k] += a * enc_states[j][k];
  }
}

void encode_with_tape(const Seq2SeqModel& m, const TokenSeq& source, ForwardTape& tape) {
  const size_t H = m.config.hidden_size;
  const size_t L = m.config.num_layers;
  const size_t n = source.size();
  if (n == 0) throw ValidationError("encode: empty source");
  check_ids(m, source, "encode");

  tape.enc.steps.assign(2, std::vector<std::vector<LstmGates>>(L, std::vector<LstmGates>(n)));
  const Vec zeros(H, 0.0);

  for (int dir = 0; dir < 2; ++dir) {
    const std::vector<LstmCell>& cells = dir == 0 ? m.enc_fwd : m.enc_bwd;
    for (size_t l = 0; l < L; ++l) {
      for (size_t step = 0; step < n; ++step) {
        const size_t j = dir == 0 ? step : n - 1 - step;
        const size_t j_prev = dir == 0 ? j - 1 : j + 1;
        const Vec& h_prev = step == 0 ? zeros : tape.enc.steps[dir][l][j_prev].h;
        const Vec& c_prev = step == 0 ? zeros : tape.enc.steps[dir][l][j_prev].c;
        Vec x;
        if (l == 0) {
          const double* row = m.embedding.row(static_cast<size_t>(source[j]));
          x.assign(row, row + m.config.embed_dim);
        } else {
          x = tape.enc.steps[dir][l - 1][j].h;
        }
        lstm_forward(cells[l], x, h_prev, c_prev, tape.enc.steps[dir][l][j]);
      }
    }
  }

  tape.enc_states.assign(n, Vec(2 * H));
  for (size_t j = 0; j < n; ++j) {
    for (size_t k = 0; k < H; ++k) {
      tape.enc_states[j][k] = tape.enc.steps[0][L - 1][j].h[k];
      tape.enc_states[j][H + k] = tape.enc.steps[1][L - 1][j].h[k];
    }
  }

  tape.h0.assign(L, Vec(H));
  for (size_t l = 0; l < L; ++l) {
    Vec z(H);
    kernels::matvec(m.init_w[l].v.data(), H, H, tape.enc.steps[0][l][n - 1].h.data(), z.data());
    for (size_t k = 0; k < H; ++k) tape.h0[l][k] = std::tanh(z[k] + m.init_b[l].v[k]);
  }
}

double decode_with_tape(const Seq2SeqModel& m, const std::vector<TokenId>& step_targets,
                        ForwardTape& tape) {
  const size_t H = m.config.hidden_size;
  const size_t L = m.config.num_layers;
  const size_t V = m.config.vocab_size;
  const size_t E = m.config.embed_dim;
  const bool seq2seq = m.config.kind == ModelKind::Seq2Seq;
  const Vec zeros(H, 0.0);
  if (seq2seq && tape.h0.empty()) throw ValidationError("decode: encoder pass missing");
  if (!seq2seq) tape.h0.assign(L, zeros);

  double nll = 0.0;
  tape.steps.assign(step_targets.size(), StepTape{});
  for (size_t st = 0; st < step_targets.size(); ++st) {
    StepTape& step = tape.steps[st];
    step.prev_token = st == 0 ? m.config.sos_id : step_targets[st - 1];
    step.gold = step_targets[st];
    const Vec& q = st == 0 ? tape.h0[L - 1] : tape.steps[st - 1].lstm[L - 1].h;

    const double* erow = m.embedding.row(static_cast<size_t>(step.prev_token));
    step.x.resize(L);
    if (seq2seq) {
      attention_forward(m, q, tape.enc_states, step.attn);
      step.x[0].assign(E + 2 * H, 0.0);
      std::copy(erow, erow + E, step.x[0].begin());
      std::copy(step.attn.ctx.begin(), step.attn.ctx.end(), step.x[0].begin() + E);
    } else {
      step.x[0].assign(erow, erow + E);
    }

    step.lstm.resize(L);
    for (size_t l = 0; l < L; ++l) {
      if (l > 0) step.x[l] = step.lstm[l - 1].h;
      const Vec& h_prev = st == 0 ? tape.h0[l] : tape.steps[st - 1].lstm[l].h;
      const Vec& c_prev = st == 0 ? zeros : tape.steps[st - 1].lstm[l].c;
      lstm_forward(m.dec[l], step.x[l], h_prev, c_prev, step.lstm[l]);
    }

    step.probs.assign(V, 0.0);
    kernels::matvec(m.out_w.v.data(), V, H, step.lstm[L - 1].h.data(), step.probs.data());
    for (size_t k = 0; k < V; ++k) step.probs[k] += m.out_b.v[k];
    // The gold logit is grabbed before the in-place softmax; forming
    // log(prob) afterwards would underflow for confident wrong models.
    const double gold_logit = step.probs[static_cast<size_t>(step.gold)];
    const double log_z = kernels::softmax_inplace(step.probs.data(), V);
    step.logp_gold = gold_logit - log_z;
    nll -= step.logp_gold;
  }
  return nll;
}

void backward(Seq2SeqModel& m, const TokenSeq& source, const ForwardTape& tape, double scale) {
  const size_t H = m.config.hidden_size;
  const size_t L = m.config.num_layers;
  const size_t V = m.config.vocab_size;
  const size_t E = m.config.embed_dim;
  const size_t T = tape.steps.size();
  const bool seq2seq = m.config.kind == ModelKind::Seq2Seq;
  const size_t n = tape.enc_states.size();
  const Vec zeros(H, 0.0);

  std::vector<Vec> dh_next(L, Vec(H, 0.0));
  std::vector<Vec> dc_next(L, Vec(H, 0.0));
  std::vector<Vec> d_enc(n, Vec(2 * H, 0.0));
  std::vector<Vec> dh0(L, Vec(H, 0.0));

  for (size_t st = T; st-- > 0;) {
    const StepTape& step = tape.steps[st];
    // Softmax + NLL: dlogits = scale * (p - onehot(gold)).
    Vec dlogits(V);
    for (size_t k = 0; k < V; ++k) dlogits[k] = scale * step.probs[k];
    dlogits[static_cast<size_t>(step.gold)] -= scale;

    const Vec& h_top = step.lstm[L - 1].h;
    kernels::outer_acc(m.out_w.g.data(), V, H, dlogits.data(), h_top.data());
    for (size_t k = 0; k < V; ++k) m.out_b.g[k] += dlogits[k];

    Vec dh_top(H, 0.0);
    kernels::matvec_t_acc(m.out_w.v.data(), V, H, dlogits.data(), dh_top.data());

    Vec dx_upper;  // input gradient arriving from the layer above
    for (size_t l = L; l-- > 0;) {
      Vec dh = dh_next[l];
      if (l == L - 1)
        for (size_t k = 0; k < H; ++k) dh[k] += dh_top[k];
      else
        for (size_t k = 0; k < H; ++k) dh[k] += dx_upper[k];

      const Vec& h_prev = st == 0 ? tape.h0[l] : tape.steps[st - 1].lstm[l].h;
      const Vec& c_prev = st == 0 ? zeros : tape.steps[st - 1].lstm[l].c;
      Vec dx, dh_prev, dc_prev;
      lstm_backward(m.dec[l], step.x[l], h_prev, c_prev, step.lstm[l], dh, dc_next[l], dx,
                    dh_prev, dc_prev);
      dh_next[l] = dh_prev;
      dc_next[l] = dc_prev;
      dx_upper = std::move(dx);
    }

    // dx_upper now holds the gradient of the layer-0 input.
    double* emb_grad = m.embedding.grad_row(static_cast<size_t>(step.prev_token));
    for (size_t k = 0; k < E; ++k) emb_grad[k] += dx_upper[k];

    if (seq2seq) {
      // Attention backward: context gradient fans out to the weights and
      // the encoder states; the query gradient flows to the previous top
      // hidden state (or to the decoder start for the first step).
      const AttnTape& at = step.attn;
      Vec dctx(dx_upper.begin() + E, dx_upper.end());
      Vec dalpha(n, 0.0);
      for (size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (size_t k = 0; k < 2 * H; ++k) {
          acc += tape.enc_states[j][k] * dctx[k];
          d_enc[j][k] += at.alpha[j] * dctx[k];
        }
        dalpha[j] = acc;
      }
      double alpha_dot = 0.0;
      for (size_t j = 0; j < n; ++j) alpha_dot += at.alpha[j] * dalpha[j];
      Vec dq(H, 0.0);
      for (size_t j = 0; j < n; ++j) {
        const double ds = at.alpha[j] * (dalpha[j] - alpha_dot);
        Vec da(H);
        for (size_t k = 0; k < H; ++k) {
          m.attn_v.g[k] += ds * at.u[j][k];
          da[k] = ds * m.attn_v.v[k] * (1.0 - at.u[j][k] * at.u[j][k]);
        }
        kernels::outer_acc(m.attn_query.g.data(), H, H, da.data(), at.query.data());
        kernels::outer_acc(m.attn_key.g.data(), H, 2 * H, da.data(), tape.enc_states[j].data());
        kernels::matvec_t_acc(m.attn_query.v.data(), H, H, da.data(), dq.data());
        kernels::matvec_t_acc(m.attn_key.v.data(), H, 2 * H, da.data(), d_enc[j].data());
      }
      if (st == 0)
        for (size_t k = 0; k < H; ++k) dh0[L - 1][k] += dq[k];
      else
        for (size_t k = 0; k < H; ++k) dh_next[L - 1][k] += dq[k];
    }
  }
  for (size_t l = 0; l < L; ++l)
    for (size_t k = 0; k < H; ++k) dh0[l][k] += dh_next[l][k];

  if (!seq2seq) return;

  // Decoder start projection: h0 = tanh(W hfwd_last + b).
  std::vector<Vec> d_fwd_final(L, Vec(H, 0.0));
  for (size_t l = 0; l < L; ++l) {
    Vec dz(H);
    for (size_t k = 0; k < H; ++k) dz[k] = dh0[l][k] * (1.0 - tape.h0[l][k] * tape.h0[l][k]);
    const Vec& src_h = tape.enc.steps[0][l][n - 1].h;
    kernels::outer_acc(m.init_w[l].g.data(), H, H, dz.data(), src_h.data());
    for (size_t k = 0; k < H; ++k) m.init_b[l].g[k] += dz[k];
    kernels::matvec_t_acc(m.init_w[l].v.data(), H, H, dz.data(), d_fwd_final[l].data());
  }

  // Encoder BPTT, top layer down, each direction in reverse processing order.
  for (int dir = 0; dir < 2; ++dir) {
    std::vector<LstmCell>& cells = dir == 0 ? m.enc_fwd : m.enc_bwd;
    // Per-position incoming hidden gradients for the layer being processed.
    std::vector<Vec> dh_in(n, Vec(H, 0.0));
    for (size_t j = 0; j < n; ++j)
      for (size_t k = 0; k < H; ++k) dh_in[j][k] = d_enc[j][dir == 0 ? k : H + k];
    if (dir == 0)
      for (size_t k = 0; k < H; ++k) dh_in[n - 1][k] += d_fwd_final[L - 1][k];

    for (size_t l = L; l-- > 0;) {
      std::vector<Vec> dh_below(n, Vec(H, 0.0));
      Vec dh_rec(H, 0.0), dc_rec(H, 0.0);
      for (size_t step = n; step-- > 0;) {
        const size_t j = dir == 0 ? step : n - 1 - step;
        const size_t j_prev = dir == 0 ? j - 1 : j + 1;
        Vec dh = dh_in[j];
        for (size_t k = 0; k < H; ++k) dh[k] += dh_rec[k];
        const LstmGates& fwd = tape.enc.steps[dir][l][j];
        const Vec& h_prev = step == 0 ? zeros : tape.enc.steps[dir][l][j_prev].h;
        const Vec& c_prev = step == 0 ? zeros : tape.enc.steps[dir][l][j_prev].c;
        Vec x;
        if (l == 0) {
          const double* row = m.embedding.row(static_cast<size_t>(source[j]));
          x.assign(row, row + E);
        } else {
          x = tape.enc.steps[dir][l - 1][j].h;
        }
        Vec dx, dh_prev, dc_prev;
        lstm_backward(cells[l], x, h_prev, c_prev, fwd, dh, dc_rec, dx, dh_prev, dc_prev);
        dh_rec = dh_prev;
        dc_rec = dc_prev;
        if (l == 0) {
          double* emb_grad = m.embedding.grad_row(static_cast<size_t>(source[j]));
          for (size_t k = 0; k < E; ++k) emb_grad[k] += dx[k];
        } else {
          for (size_t k = 0; k < H; ++k) dh_below[j][k] += dx[k];
        }
      }
      if (l > 0) {
        dh_in = std::move(dh_below);
        // The init projection taps the forward final hidden of every layer.
        if (dir == 0)
          for (size_t k = 0; k < H; ++k) dh_in[n - 1][k] += d_fwd_final[l - 1][k];
      }
    }
  }
}

}  // namespace detail

EncoderStates encode(const Seq2SeqModel& model, const TokenSeq& source) {
  if (model.config.kind != ModelKind::Seq2Seq)
    throw ValidationError("encode: language model has no encoder");
  detail::ForwardTape tape;
  detail::encode_with_tape(model, source, tape);
  EncoderStates out;
  out.states = tape.enc_states;
  const size_t L = model.config.num_layers;
  const size_t n = source.size();
  out.fwd_final_h.resize(L);
  for (size_t l = 0; l < L; ++l) out.fwd_final_h[l] = tape.enc.steps[0][l][n - 1].h;
  return out;
}

AttentionResult attend(const Seq2SeqModel& model, const std::vector<double>& decoder_state,
                       const std::vector<std::vector<double>>& encoder_states) {
  if (encoder_states.empty()) throw ValidationError("attend: no encoder states");
  if (decoder_state.size() != model.config.hidden_size)
    throw ValidationError("attend: decoder state width must equal hidden_size");
  for (const auto& e : encoder_states)
    if (e.size() != 2 * model.config.hidden_size)
      throw ValidationError("attend: encoder states must have width 2*hidden_size");
  detail::AttnTape tape;
  detail::attention_forward(model, decoder_state, encoder_states, tape);
  return AttentionResult{tape.ctx, tape.alpha};
}

DecodeSession start_decode(const Seq2SeqModel& model, const TokenSeq& source) {
  DecodeSession session;
  session.model = &model;
  if (model.config.kind == ModelKind::Seq2Seq) {
    detail::ForwardTape tape;
    detail::encode_with_tape(model, source, tape);
    session.enc.states = std::move(tape.enc_states);
    session.h0 = std::move(tape.h0);
  } else {
    if (!source.empty())
      throw ValidationError("language model decoding takes no source sequence");
    session.h0.assign(model.config.num_layers, Vec(model.config.hidden_size, 0.0));
  }
  session.c0.assign(model.config.num_layers, Vec(model.config.hidden_size, 0.0));
  return session;
}

DecoderState initial_state(const DecodeSession& session) {
  return DecoderState{session.h0, session.c0};
}

StepResult decode_step(const DecodeSession& session, DecoderState& state, TokenId prev_token) {
  const Seq2SeqModel& m = *session.model;
  const size_t H = m.config.hidden_size;
  const size_t L = m.config.num_layers;
  const size_t V = m.config.vocab_size;
  const size_t E = m.config.embed_dim;
  if (prev_token < 0 || static_cast<size_t>(prev_token) >= V)
    throw ValidationError("decode_step: token id outside vocabulary");

  const double* erow = m.embedding.row(static_cast<size_t>(prev_token));
  Vec x;
  if (m.config.kind == ModelKind::Seq2Seq) {
    detail::AttnTape attn;
    detail::attention_forward(m, state.h[L - 1], session.enc.states, attn);
    x.assign(E + 2 * H, 0.0);
    std::copy(erow, erow + E, x.begin());
    std::copy(attn.ctx.begin(), attn.ctx.end(), x.begin() + E);
  } else {
    x.assign(erow, erow + E);
  }

  for (size_t l = 0; l < L; ++l) {
    detail::LstmGates gates;
    detail::lstm_forward(m.dec[l], l == 0 ? x : state.h[l - 1], state.h[l], state.c[l], gates);
    state.h[l] = std::move(gates.h);
    state.c[l] = std::move(gates.c);
  }

  StepResult result;
  result.logits.assign(V, 0.0);
  kernels::matvec(m.out_w.v.data(), V, H, state.h[L - 1].data(), result.logits.data());
  for (size_t k = 0; k < V; ++k) result.logits[k] += m.out_b.v[k];
  Vec tmp = result.logits;
  result.log_z = kernels::softmax_inplace(tmp.data(), V);
  return result;
}

double sequence_log_prob(const Seq2SeqModel& model, const TokenSeq& source,
                         const TokenSeq& target) {
  if (target.empty()) throw ValidationError("sequence_log_prob: empty target");
  detail::check_ids(model, target, "sequence_log_prob");
  DecodeSession session = start_decode(model, source);
  DecoderState state = initial_state(session);
  double total = 0.0;
  TokenId prev = model.config.sos_id;
  for (size_t t = 0; t <= target.size(); ++t) {
    const TokenId gold = t < target.size() ? target[t] : model.config.eos_id;
    const StepResult step = decode_step(session, state, prev);
    total += step.log_prob(gold);
    prev = gold;
  }
  return total;
}

double language_model_log_prob(const Seq2SeqModel& lm, const TokenSeq& tokens) {
  if (lm.config.kind != ModelKind::LanguageModel)
    throw ValidationError("language_model_log_prob: model is not a language model");
  detail::check_ids(lm, tokens, "language_model_log_prob");
  // Unlike conditional scoring, the empty utterance is admissible here: it
  // is the single EOS step. Beam search produces such candidates.
  DecodeSession session = start_decode(lm, {});
  DecoderState state = initial_state(session);
  double total = 0.0;
  TokenId prev = lm.config.sos_id;
  for (size_t t = 0; t <= tokens.size(); ++t) {
    const TokenId gold = t < tokens.size() ? tokens[t] : lm.config.eos_id;
    total += decode_step(session, state, prev).log_prob(gold);
    prev = gold;
  }
  return total;
}

TokenSeq greedy_decode(const Seq2SeqModel& model, const TokenSeq& source) {
  DecodeSession session = start_decode(model, source);
  DecoderState state = initial_state(session);
  TokenSeq out;
  TokenId prev = model.config.sos_id;
  while (out.size() < model.config.max_decode_len) {
    const StepResult step = decode_step(session, state, prev);
    size_t best = 0;
    for (size_t k = 1; k < step.logits.size(); ++k)
      if (step.logits[k] > step.logits[best]) best = k;  // ties keep the lowest id
    const TokenId tok = static_cast<TokenId>(best);
    if (tok == model.config.eos_id) break;
    out.push_back(tok);
    prev = tok;
  }
  return out;
}

SampleResult sample_decode(const Seq2SeqModel& model, const TokenSeq& source, uint64_t seed) {
  DecodeSession session = start_decode(model, source);
  DecoderState state = initial_state(session);
  Rng rng(seed);
  SampleResult result;
  TokenId prev = model.config.sos_id;
  while (result.tokens.size() < model.config.max_decode_len) {
    const StepResult step = decode_step(session, state, prev);
    Vec probs = step.logits;
    kernels::softmax_inplace(probs.data(), probs.size());
    const double u = rng.next_unit();
    double cum = 0.0;
    size_t pick = probs.size() - 1;
    for (size_t k = 0; k < probs.size(); ++k) {
      cum += probs[k];
      if (u < cum) {
        pick = k;
        break;
      }
    }
    const TokenId tok = static_cast<TokenId>(pick);
    result.step_log_probs.push_back(step.log_prob(tok));
    if (tok == model.config.eos_id) {
      result.ended_with_eos = true;
      break;
    }
    result.tokens.push_back(tok);
    prev = tok;
  }
  return result;
}

std::vector<Candidate> n_best_decode(const Seq2SeqModel& model, const TokenSeq& source, size_t n) {
  if (n == 0) throw ValidationError("n_best_decode: n must be >= 1");
  DecodeSession session = start_decode(model, source);

  struct Hyp {
    TokenSeq tokens;
    double score = 0.0;
    DecoderState state;
    TokenId prev;
  };
  std::vector<Hyp> active;
  active.push_back({{}, 0.0, initial_state(session), model.config.sos_id});
  std::vector<Candidate> finished;

  const size_t V = model.config.vocab_size;
  const TokenId eos = model.config.eos_id;
  while (!active.empty() && finished.size() < n) {
    struct Child {
      size_t parent;
      TokenId token;
      double score;
    };
    // Expand every active hypothesis; once hypotheses hit the length cap the
    // only admissible extension is the closing EOS.
    const bool at_cap = active[0].tokens.size() >= model.config.max_decode_len;
    std::vector<Child> children;
    std::vector<StepResult> steps(active.size());
    std::vector<DecoderState> advanced(active.size());
    for (size_t idx = 0; idx < active.size(); ++idx) {
      advanced[idx] = active[idx].state;
      steps[idx] = decode_step(session, advanced[idx], active[idx].prev);
      if (at_cap) {
        children.push_back({idx, eos, active[idx].score + steps[idx].log_prob(eos)});
        continue;
      }
      for (size_t k = 0; k < V; ++k)
        children.push_back(
            {idx, static_cast<TokenId>(k), active[idx].score + steps[idx].log_prob((TokenId)k)});
    }
    const size_t width = n - finished.size();
    const size_t keep = std::min(width, children.size());
    std::partial_sort(children.begin(), children.begin() + keep, children.end(),
                      [](const Child& a, const Child& b) {
                        if (a.score != b.score) return a.score > b.score;
                        if (a.parent != b.parent) return a.parent < b.parent;
                        return a.token < b.token;
                      });
    children.resize(keep);

    std::vector<Hyp> next;
    for (const Child& ch : children) {
      if (ch.token == eos) {
        Candidate cand;
        cand.tokens = active[ch.parent].tokens;
        cand.cond_logprob = ch.score;
        finished.push_back(std::move(cand));
        continue;
      }
      Hyp hyp;
      hyp.tokens = active[ch.parent].tokens;
      hyp.tokens.push_back(ch.token);
      hyp.score = ch.score;
      hyp.state = advanced[ch.parent];
      hyp.prev = ch.token;
      next.push_back(std::move(hyp));
    }
    active = std::move(next);
  }

  std::stable_sort(finished.begin(), finished.end(), [](const Candidate& a, const Candidate& b) {
    if (a.cond_logprob != b.cond_logprob) return a.cond_logprob > b.cond_logprob;
    return a.tokens < b.tokens;
  });
  if (finished.size() > n) finished.resize(n);
  return finished;
}

void mmi_rescore_scored(std::vector<Candidate>& candidates, double lambda) {
  if (candidates.empty()) throw ValidationError("mmi_rescore: empty candidate list");
  if (lambda < 0.0) throw ValidationError("mmi_rescore: lambda must be >= 0");
  for (Candidate& c : candidates) {
    c.mmi_score = c.cond_logprob - lambda * c.lm_logprob;
    c.scored = true;
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.mmi_score > b.mmi_score; });
}

void mmi_rescore(std::vector<Candidate>& candidates, const Seq2SeqModel& language_model,
                 double lambda) {
  if (candidates.empty()) throw ValidationError("mmi_rescore: empty candidate list");
  for (Candidate& c : candidates) c.lm_logprob = language_model_log_prob(language_model, c.tokens);
  mmi_rescore_scored(candidates, lambda);
}

}  // namespace rldialog::model
