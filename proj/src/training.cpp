#include "rldialog/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "binio.hpp"
#include "model_internal.hpp"
#include "rldialog/errors.hpp"
#include "rldialog/eval.hpp"
#include "rldialog/kernels.hpp"

namespace rldialog::training {

using model::ModelKind;
using model::Seq2SeqModel;

void OptimizerConfig::validate() const {
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be > 0");
  if (!(gradient_clip > 0.0)) throw ValidationError("gradient_clip must be > 0");
  if (decay_rate < 0.0 || decay_rate >= 1.0)
    throw ValidationError("decay_rate must lie in [0, 1)");
}

double effective_learning_rate(const OptimizerConfig& cfg, size_t epoch) {
  return cfg.learning_rate * std::pow(1.0 - cfg.decay_rate, static_cast<double>(epoch));
}

double clip_gradients(Seq2SeqModel& m, double max_norm) {
  double sq = 0.0;
  for (const model::NamedTensor& nt : m.named_tensors())
    for (double g : nt.tensor->g) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (model::NamedTensor& nt : m.named_tensors())
      for (double& g : nt.tensor->g) g *= scale;
  }
  return norm;
}

void sgd_step(Seq2SeqModel& m, double lr) {
  for (model::NamedTensor& nt : m.named_tensors()) {
    model::Tensor& t = *nt.tensor;
    for (size_t i = 0; i < t.v.size(); ++i) t.v[i] -= lr * t.g[i];
  }
}

namespace {

struct Example {
  const corpus::TokenSeq* source;  // nullptr for language-model rows
  const corpus::TokenSeq* target;
};

// One teacher-forced MLE pass over a batch; scale folds the batch token
// count into the per-example backward so the loss is the mean per-token NLL.
double run_mle_batch(Seq2SeqModel& m, const std::vector<Example>& batch,
                     const OptimizerConfig& cfg, size_t epoch, size_t* tokens_out) {
  size_t batch_tokens = 0;
  for (const Example& ex : batch) batch_tokens += ex.target->size() + 1;
  const double scale = 1.0 / static_cast<double>(batch_tokens);

  m.zero_grad();
  double batch_nll = 0.0;
  for (const Example& ex : batch) {
    model::detail::ForwardTape tape;
    std::vector<corpus::TokenId> steps = *ex.target;
    steps.push_back(m.config.eos_id);
    if (m.config.kind == ModelKind::Seq2Seq)
      model::detail::encode_with_tape(m, *ex.source, tape);
    batch_nll += model::detail::decode_with_tape(m, steps, tape);
    model::detail::backward(m, ex.source ? *ex.source : corpus::TokenSeq{}, tape, scale);
  }
  clip_gradients(m, cfg.gradient_clip);
  sgd_step(m, effective_learning_rate(cfg, epoch));
  *tokens_out = batch_tokens;
  return batch_nll;
}

TrainReport train_examples(Seq2SeqModel& m, const std::vector<Example>& examples,
                           const std::vector<corpus::DialogPair>* validation,
                           const OptimizerConfig& cfg) {
  cfg.validate();
  if (examples.empty()) throw ValidationError("empty training split");
  const auto start = std::chrono::steady_clock::now();

  TrainReport report;
  report.seed = cfg.seed;
  Rng rng(cfg.seed);
  std::vector<size_t> order(examples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_nll = 0.0;
    size_t epoch_tokens = 0;
    for (size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const size_t end = std::min(order.size(), begin + cfg.batch_size);
      std::vector<Example> batch;
      batch.reserve(end - begin);
      for (size_t i = begin; i < end; ++i) batch.push_back(examples[order[i]]);
      size_t batch_tokens = 0;
      epoch_nll += run_mle_batch(m, batch, cfg, epoch, &batch_tokens);
      epoch_tokens += batch_tokens;
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.train_metric = epoch_nll / static_cast<double>(epoch_tokens);
    if (validation && !validation->empty())
      stats.validation_perplexity = eval::perplexity(m, *validation);
    report.epochs.push_back(stats);
  }
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace

TrainReport train_mle(Seq2SeqModel& m, const corpus::CorpusSplit& split,
                      const OptimizerConfig& cfg) {
  if (m.config.kind != ModelKind::Seq2Seq)
    throw ValidationError("train_mle expects a seq2seq model");
  std::vector<Example> examples;
  examples.reserve(split.train.size());
  for (const corpus::DialogPair& p : split.train) {
    if (p.source.empty() || p.target.empty())
      throw ValidationError("train_mle: pairs must be encoded and non-empty");
    examples.push_back({&p.source, &p.target});
  }
  return train_examples(m, examples, &split.validation, cfg);
}

Seq2SeqModel train_reverse(const model::ModelConfig& config, const corpus::CorpusSplit& split,
                           const OptimizerConfig& cfg, TrainReport* report) {
  corpus::CorpusSplit reversed;
  const auto swap_pairs = [](const std::vector<corpus::DialogPair>& in) {
    std::vector<corpus::DialogPair> out;
    out.reserve(in.size());
    for (const corpus::DialogPair& p : in) {
      corpus::DialogPair q;
      q.source = p.target;
      q.target = p.source;
      q.raw_source = p.raw_target;
      q.raw_target = p.raw_source;
      out.push_back(std::move(q));
    }
    return out;
  };
  reversed.train = swap_pairs(split.train);
  reversed.validation = swap_pairs(split.validation);
  reversed.test = swap_pairs(split.test);

  Seq2SeqModel m = Seq2SeqModel::create(config, cfg.seed);
  TrainReport r = train_mle(m, reversed, cfg);
  if (report) *report = std::move(r);
  return m;
}

TrainReport train_language_model_inplace(Seq2SeqModel& lm,
                                         const std::vector<corpus::TokenSeq>& targets,
                                         const OptimizerConfig& cfg) {
  if (lm.config.kind != ModelKind::LanguageModel)
    throw ValidationError("train_language_model expects a language model");
  std::vector<Example> examples;
  examples.reserve(targets.size());
  for (const corpus::TokenSeq& t : targets)
    if (!t.empty()) examples.push_back({nullptr, &t});
  return train_examples(lm, examples, nullptr, cfg);
}

Seq2SeqModel train_language_model(const model::ModelConfig& config,
                                  const std::vector<corpus::TokenSeq>& targets,
                                  const OptimizerConfig& cfg, TrainReport* report) {
  model::ModelConfig lm_config = config;
  lm_config.kind = ModelKind::LanguageModel;
  Seq2SeqModel m = Seq2SeqModel::create(lm_config, cfg.seed);
  TrainReport r = train_language_model_inplace(m, targets, cfg);
  if (report) *report = std::move(r);
  return m;
}

namespace {

struct Episode {
  corpus::TokenSeq tokens;
  std::vector<corpus::TokenId> steps;  // tokens plus EOS when sampled
  double combined = 0.0;
  bool usable = false;
};

}  // namespace

TrainReport finetune_rl(Seq2SeqModel& policy, RlContext& ctx,
                        const rewards::RewardWeights& weights, const OptimizerConfig& cfg) {
  cfg.validate();
  if (policy.config.kind != ModelKind::Seq2Seq)
    throw ValidationError("finetune_rl expects a seq2seq policy");
  if (!ctx.reward_scorer) throw ValidationError("finetune_rl: missing reward scorer model");
  if (!ctx.reverse_model) throw ValidationError("finetune_rl: missing reverse model");
  if (!ctx.language_model) throw ValidationError("finetune_rl: missing language model");
  if (!ctx.dull || ctx.dull->empty()) throw ValidationError("finetune_rl: empty dull set");
  if (!ctx.lexicon) throw ValidationError("finetune_rl: missing affect lexicon");
  if (!ctx.vocab) throw ValidationError("finetune_rl: missing vocabulary");
  if (weights.lambda_hf > 0.0 && !ctx.analyzer)
    throw ValidationError("analyzer required when lambda_hf > 0");
  if (weights.lambda_hf > 0.0 && !ctx.analyzer->classifier.trained)
    throw ValidationError("analyzer required when lambda_hf > 0 (checkpoint is untrained)");
  if (ctx.prompts.empty()) throw ValidationError("finetune_rl: no prompts");
  // Everything the parallel episode loop touches is validated here; the
  // loop body must not throw.
  for (size_t i = 0; i < ctx.prompts.size(); ++i) {
    if (ctx.prompts[i].empty())
      throw ValidationError("finetune_rl: empty prompt at index " + std::to_string(i));
    model::detail::check_ids(policy, ctx.prompts[i], "finetune_rl prompt");
  }

  const auto start = std::chrono::steady_clock::now();
  TrainReport report;
  report.seed = cfg.seed;
  Baseline baseline;
  baseline.decay = ctx.baseline_decay;

  Rng rng(cfg.seed);
  std::vector<size_t> order(ctx.prompts.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_reward = 0.0;
    size_t epoch_episodes = 0;
    for (size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const size_t end = std::min(order.size(), begin + cfg.batch_size);
      const size_t count = end - begin;
      std::vector<Episode> episodes(count);

      // Sampling and reward evaluation are pure per episode (per-episode
      // seeds, frozen scorers), so the batch fans out across threads; the
      // gradient pass below stays serial in index order.
#pragma omp parallel for schedule(static)
      for (size_t i = 0; i < count; ++i) {
        const corpus::TokenSeq& prompt = ctx.prompts[order[begin + i]];
        const uint64_t ep_seed = mix_seed(mix_seed(cfg.seed, epoch), begin + i);
        const model::SampleResult sample = model::sample_decode(policy, prompt, ep_seed);
        Episode& ep = episodes[i];
        if (sample.tokens.empty()) continue;  // no action to reward
        ep.tokens = sample.tokens;
        ep.steps = sample.tokens;
        if (sample.ended_with_eos) ep.steps.push_back(policy.config.eos_id);

        // Components with zero weight are skipped; they cannot move the sum.
        rewards::PartialRewards partial;
        if (weights.lambda_ea > 0.0)
          partial.r_ea =
              rewards::reward_ease_of_answering(*ctx.reward_scorer, ep.tokens, *ctx.dull);
        if (weights.lambda_sc > 0.0)
          partial.r_sc = rewards::reward_semantic_coherence(*ctx.reward_scorer,
                                                            *ctx.reverse_model, prompt, ep.tokens);
        if (weights.lambda_ei > 0.0)
          partial.r_ei = rewards::reward_emotional_intelligence(
              *ctx.lexicon, corpus::decode_tokens(prompt, *ctx.vocab),
              corpus::decode_tokens(ep.tokens, *ctx.vocab));
        if (weights.lambda_hf > 0.0)
          partial.r_hf = rewards::reward_human_feedback(
              *ctx.analyzer, corpus::decode_text(ep.tokens, *ctx.vocab), ctx.margin_scaled_hf);
        ep.combined = rewards::combine_rewards(partial, weights).combined;
        ep.usable = true;
      }

      size_t usable = 0;
      double batch_reward = 0.0;
      for (const Episode& ep : episodes)
        if (ep.usable) {
          ++usable;
          batch_reward += ep.combined;
        }
      if (usable == 0) continue;

      policy.zero_grad();
      for (size_t i = 0; i < count; ++i) {
        const Episode& ep = episodes[i];
        if (!ep.usable) continue;
        const double advantage = ep.combined - baseline.value;
        const double scale = advantage / static_cast<double>(usable);
        if (scale == 0.0) continue;
        model::detail::ForwardTape tape;
        const corpus::TokenSeq& prompt = ctx.prompts[order[begin + i]];
        model::detail::encode_with_tape(policy, prompt, tape);
        model::detail::decode_with_tape(policy, ep.steps, tape);
        model::detail::backward(policy, prompt, tape, scale);
      }
      clip_gradients(policy, cfg.gradient_clip);
      sgd_step(policy, effective_learning_rate(cfg, epoch));
      baseline.update(batch_reward / static_cast<double>(usable));
      epoch_reward += batch_reward;
      epoch_episodes += usable;
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.train_metric =
        epoch_episodes > 0 ? epoch_reward / static_cast<double>(epoch_episodes) : 0.0;
    report.epochs.push_back(stats);
  }
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

namespace {

double example_nll(Seq2SeqModel& m, const corpus::TokenSeq& source,
                   const std::vector<corpus::TokenId>& steps) {
  model::detail::ForwardTape tape;
  if (m.config.kind == ModelKind::Seq2Seq) model::detail::encode_with_tape(m, source, tape);
  return model::detail::decode_with_tape(m, steps, tape);
}

}  // namespace

GradientCheckResult gradient_check(Seq2SeqModel& m, const corpus::TokenSeq& source,
                                   const corpus::TokenSeq& target, double epsilon,
                                   size_t min_coords, uint64_t seed) {
  if (epsilon < 1e-6 || epsilon > 1e-4)
    throw ValidationError("gradient_check: epsilon must lie in [1e-6, 1e-4]");
  if (target.empty()) throw ValidationError("gradient_check: empty target");

  std::vector<corpus::TokenId> steps = target;
  steps.push_back(m.config.eos_id);

  // Analytic pass.
  m.zero_grad();
  {
    model::detail::ForwardTape tape;
    if (m.config.kind == ModelKind::Seq2Seq) model::detail::encode_with_tape(m, source, tape);
    model::detail::decode_with_tape(m, steps, tape);
    model::detail::backward(m, source, tape, 1.0);
  }

  auto tensors = m.named_tensors();
  std::vector<std::vector<double>> analytic(tensors.size());
  for (size_t t = 0; t < tensors.size(); ++t) analytic[t] = tensors[t].tensor->g;

  const size_t per_tensor =
      std::max<size_t>(2, (min_coords + tensors.size() - 1) / tensors.size());
  Rng rng(seed);
  GradientCheckResult result;
  for (size_t t = 0; t < tensors.size(); ++t) {
    model::Tensor& tensor = *tensors[t].tensor;
    std::vector<size_t> coords(tensor.size());
    for (size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    if (coords.size() > per_tensor) {
      rng.shuffle(coords);
      coords.resize(per_tensor);
    }
    for (size_t idx : coords) {
      const double saved = tensor.v[idx];
      tensor.v[idx] = saved + epsilon;
      const double f_plus = example_nll(m, source, steps);
      tensor.v[idx] = saved - epsilon;
      const double f_minus = example_nll(m, source, steps);
      tensor.v[idx] = saved;
      const double numeric = (f_plus - f_minus) / (2.0 * epsilon);
      const double a = analytic[t][idx];
      const double rel =
          std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-3});
      ++result.coords_checked;
      auto [it, inserted] = result.group_max.try_emplace(tensors[t].group, rel);
      if (!inserted) it->second = std::max(it->second, rel);
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst_tensor = tensors[t].name;
        result.worst_index = idx;
      }
    }
  }
  // Restore the analytic gradients so callers can inspect them.
  for (size_t t = 0; t < tensors.size(); ++t) tensors[t].tensor->g = analytic[t];
  return result;
}

namespace {
constexpr char kCheckpointMagic[9] = "RLDLGCKP";
constexpr uint32_t kCheckpointVersion = 1;
constexpr char kCheckpointTrailer[5] = "END!";
}  // namespace

void save_checkpoint(const Seq2SeqModel& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  out.write(kCheckpointMagic, 8);
  binio::write_u32(out, kCheckpointVersion);
  const model::ModelConfig& c = m.config;
  binio::write_u64(out, c.vocab_size);
  binio::write_u64(out, c.embed_dim);
  binio::write_u64(out, c.hidden_size);
  binio::write_u64(out, c.num_layers);
  binio::write_u64(out, c.max_decode_len);
  binio::write_f64(out, c.mmi_lambda);
  binio::write_i32(out, c.sos_id);
  binio::write_i32(out, c.eos_id);
  binio::write_u8(out, static_cast<uint8_t>(c.kind));

  auto tensors = const_cast<Seq2SeqModel&>(m).named_tensors();
  binio::write_u64(out, tensors.size());
  for (const model::NamedTensor& nt : tensors) {
    binio::write_u64(out, nt.tensor->rows);
    binio::write_u64(out, nt.tensor->cols);
    for (double v : nt.tensor->v) binio::write_f64(out, v);
  }
  out.write(kCheckpointTrailer, 4);
  if (!out) throw IoError("failed writing checkpoint: " + path);
}

Seq2SeqModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  char magic[8];
  binio::read_bytes(in, magic, 8, "magic");
  if (std::string(magic, 8) != std::string(kCheckpointMagic, 8))
    throw IoError("bad magic in checkpoint: " + path);
  const uint32_t version = binio::read_u32(in, "version");
  if (version != kCheckpointVersion)
    throw IoError("unsupported checkpoint version " + std::to_string(version));

  model::ModelConfig c;
  c.vocab_size = binio::read_u64(in, "vocab_size");
  c.embed_dim = binio::read_u64(in, "embed_dim");
  c.hidden_size = binio::read_u64(in, "hidden_size");
  c.num_layers = binio::read_u64(in, "num_layers");
  c.max_decode_len = binio::read_u64(in, "max_decode_len");
  c.mmi_lambda = binio::read_f64(in, "mmi_lambda");
  c.sos_id = binio::read_i32(in, "sos_id");
  c.eos_id = binio::read_i32(in, "eos_id");
  const uint8_t kind = binio::read_u8(in, "kind");
  if (kind > 1) throw IoError("invalid model kind in checkpoint: " + std::to_string(kind));
  c.kind = static_cast<ModelKind>(kind);
  c.validate();

  Seq2SeqModel m = Seq2SeqModel::create(c, 0);
  auto tensors = m.named_tensors();
  const uint64_t count = binio::read_u64(in, "tensor count");
  if (count != tensors.size())
    throw IoError("checkpoint tensor count mismatch: expected " +
                  std::to_string(tensors.size()) + ", found " + std::to_string(count));
  for (model::NamedTensor& nt : tensors) {
    const uint64_t rows = binio::read_u64(in, "tensor rows");
    const uint64_t cols = binio::read_u64(in, "tensor cols");
    if (rows != nt.tensor->rows || cols != nt.tensor->cols)
      throw IoError("checkpoint shape mismatch for " + nt.name);
    for (double& v : nt.tensor->v) v = binio::read_f64(in, nt.name.c_str());
  }
  char trailer[4];
  binio::read_bytes(in, trailer, 4, "trailer");
  if (std::string(trailer, 4) != std::string(kCheckpointTrailer, 4))
    throw IoError("corrupt checkpoint trailer: " + path);
  return m;
}

Seq2SeqModel load_checkpoint(const std::string& path, const model::ModelConfig& expected) {
  Seq2SeqModel m = load_checkpoint(path);
  const model::ModelConfig& c = m.config;
  const auto fail = [&](const std::string& field) {
    throw ValidationError("checkpoint " + path + " config mismatch on field " + field);
  };
  if (c.vocab_size != expected.vocab_size) fail("vocab_size");
  if (c.embed_dim != expected.embed_dim) fail("embed_dim");
  if (c.hidden_size != expected.hidden_size) fail("hidden_size");
  if (c.num_layers != expected.num_layers) fail("num_layers");
  if (c.max_decode_len != expected.max_decode_len) fail("max_decode_len");
  if (c.sos_id != expected.sos_id) fail("sos_id");
  if (c.eos_id != expected.eos_id) fail("eos_id");
  if (c.kind != expected.kind) fail("kind");
  return m;
}

void apply_affect_embeddings(
    Seq2SeqModel& m, const corpus::Vocabulary& vocab, const affect::AffectLexicon& lexicon,
    bool rescale, uint64_t seed,
    const std::unordered_map<std::string, std::vector<double>>* base_vectors) {
  const size_t E = m.config.embed_dim;
  const size_t d = E - 3;
  if (vocab.size() != m.config.vocab_size)
    throw ValidationError("apply_affect_embeddings: vocabulary size does not match model");
  Rng rng(seed);
  for (size_t id = 0; id < vocab.size(); ++id) {
    const std::string& token = vocab.token_of(static_cast<corpus::TokenId>(id));
    double* row = m.embedding.row(id);
    const std::vector<double>* base = nullptr;
    if (base_vectors) {
      auto it = base_vectors->find(token);
      if (it != base_vectors->end()) {
        if (it->second.size() != d)
          throw ValidationError("base embedding for '" + token + "' has dimension " +
                                std::to_string(it->second.size()) + ", expected " +
                                std::to_string(d));
        base = &it->second;
      }
    }
    for (size_t k = 0; k < d; ++k) row[k] = base ? (*base)[k] : rng.next_uniform(-0.1, 0.1);
    const affect::AffectVector av = affect::lookup_affect(token, lexicon);
    const auto scaled = [&](double v) { return rescale ? (v - 5.0) / 4.0 : v; };
    row[d] = scaled(av.valence);
    row[d + 1] = scaled(av.arousal);
    row[d + 2] = scaled(av.dominance);
  }
}

namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const uint64_t v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("config key " + key + ": expected an integer, got '" + value + "'");
  }
}

double parse_f64(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("config key " + key + ": expected a number, got '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ValidationError("config key " + key + ": expected true/false, got '" + value + "'");
}

}  // namespace

FileConfig parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file: " + path);
  FileConfig cfg;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ValidationError(path + " line " + std::to_string(lineno) +
                            ": expected key=value");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));

    if (key == "vocab_size")
      cfg.model.vocab_size = parse_u64(key, value);
    else if (key == "embed_dim")
      cfg.model.embed_dim = parse_u64(key, value);
    else if (key == "hidden_size")
      cfg.model.hidden_size = parse_u64(key, value);
    else if (key == "num_layers")
      cfg.model.num_layers = parse_u64(key, value);
    else if (key == "max_decode_len")
      cfg.model.max_decode_len = parse_u64(key, value);
    else if (key == "mmi_lambda")
      cfg.model.mmi_lambda = parse_f64(key, value);
    else if (key == "batch_size")
      cfg.optim.batch_size = parse_u64(key, value);
    else if (key == "learning_rate")
      cfg.optim.learning_rate = parse_f64(key, value);
    else if (key == "decay_rate")
      cfg.optim.decay_rate = parse_f64(key, value);
    else if (key == "gradient_clip")
      cfg.optim.gradient_clip = parse_f64(key, value);
    else if (key == "epochs")
      cfg.optim.epochs = parse_u64(key, value);
    else if (key == "seed")
      cfg.optim.seed = parse_u64(key, value);
    else if (key == "lambda_ea")
      cfg.lambda_ea = parse_f64(key, value);
    else if (key == "lambda_sc")
      cfg.lambda_sc = parse_f64(key, value);
    else if (key == "lambda_ei")
      cfg.lambda_ei = parse_f64(key, value);
    else if (key == "lambda_hf")
      cfg.lambda_hf = parse_f64(key, value);
    else if (key == "affect_rescale")
      cfg.affect_rescale = parse_bool(key, value);
    else if (key == "margin_reward")
      cfg.margin_reward = parse_bool(key, value);
    else if (key == "baseline_decay")
      cfg.baseline_decay = parse_f64(key, value);
    else
      throw ValidationError(path + " line " + std::to_string(lineno) + ": unknown config key '" +
                            key + "'");
  }
  return cfg;
}

}  // namespace rldialog::training
