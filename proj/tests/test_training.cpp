#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "rldialog/errors.hpp"
#include "rldialog/eval.hpp"
#include "rldialog/training.hpp"
#include "test_helpers.hpp"

using namespace rldialog;
using namespace rldialog::training;
using model::ModelConfig;
using model::ModelKind;
using model::Seq2SeqModel;
using rldialog::testhelpers::forced_model;
using rldialog::testhelpers::tiny_config;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

// id-space corpus: prompts {4..7} each mapping to a fixed short reply
corpus::CorpusSplit toy_split(size_t vocab, size_t pairs, uint64_t seed) {
  corpus::CorpusSplit split;
  Rng rng(seed);
  for (size_t i = 0; i < pairs; ++i) {
    corpus::DialogPair p;
    const size_t len_s = 1 + rng.next_below(4);
    const size_t len_t = 1 + rng.next_below(4);
    for (size_t k = 0; k < len_s; ++k)
      p.source.push_back(static_cast<corpus::TokenId>(4 + rng.next_below(vocab - 4)));
    for (size_t k = 0; k < len_t; ++k)
      p.target.push_back(static_cast<corpus::TokenId>(4 + rng.next_below(vocab - 4)));
    split.train.push_back(p);
  }
  return split;
}

bool files_identical(const std::string& a, const std::string& b) {
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  std::string ca((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
  std::string cb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
  return !ca.empty() && ca == cb;
}

}  // namespace

TEST_CASE("gradient check passes for every parameter group (seq2seq)") {
  ModelConfig cfg = tiny_config(12, 7, 8, 2);
  Seq2SeqModel m = Seq2SeqModel::create(cfg, 42);
  const corpus::TokenSeq source = {4, 5, 6, 7};
  const corpus::TokenSeq target = {8, 9, 10, 4, 11};

  const GradientCheckResult result = gradient_check(m, source, target, 1e-5, 200);
  CHECK(result.coords_checked >= 200);
  CHECK(result.max_rel_error < 1e-4);

  // every group must actually have been covered
  for (const char* group : {"embedding", "encoder_fwd", "encoder_bwd", "init_proj", "attention",
                            "decoder", "output_proj"}) {
    REQUIRE(result.group_max.count(group) == 1);
    CHECK(result.group_max.at(group) < 1e-4);
  }
}

TEST_CASE("gradient check passes for the language model") {
  ModelConfig cfg = tiny_config(12, 7, 8, 2);
  cfg.kind = ModelKind::LanguageModel;
  Seq2SeqModel lm = Seq2SeqModel::create(cfg, 43);
  const GradientCheckResult result = gradient_check(lm, {}, {4, 5, 6, 7}, 1e-5, 200);
  CHECK(result.max_rel_error < 1e-4);
  CHECK(result.group_max.count("decoder") == 1);
  CHECK(result.group_max.count("embedding") == 1);
  CHECK(result.group_max.count("attention") == 0);  // no such group in an LM
}

TEST_CASE("zero-loss example has (near) zero analytic gradient") {
  Seq2SeqModel m = forced_model(8, 5);
  m.zero_grad();
  const GradientCheckResult result = gradient_check(m, {4}, {5}, 1e-5, 50);
  double norm = 0.0;
  for (model::NamedTensor& nt : m.named_tensors())
    for (double g : nt.tensor->g) norm += g * g;
  CHECK(std::sqrt(norm) < 1e-8);
  CHECK(result.max_rel_error < 1e-4);
}

TEST_CASE("embedding rows of absent tokens get exactly zero gradient") {
  ModelConfig cfg = tiny_config(12, 6, 7, 1);
  Seq2SeqModel m = Seq2SeqModel::create(cfg, 77);
  const corpus::TokenSeq source = {4, 5};
  const corpus::TokenSeq target = {6};
  gradient_check(m, source, target, 1e-5, 30);  // leaves analytic grads in place
  // token 11 appears nowhere (and is neither SOS nor EOS)
  const double* row = m.embedding.grad_row(11);
  for (size_t k = 0; k < cfg.embed_dim; ++k) CHECK(row[k] == 0.0);
}

TEST_CASE("training perplexity reaches < 1.5 on a 20-pair toy corpus") {
  const corpus::CorpusSplit split = toy_split(16, 20, 99);
  ModelConfig cfg = tiny_config(16, 10, 24, 1);
  Seq2SeqModel m = Seq2SeqModel::create(cfg, 1);

  OptimizerConfig opt;
  opt.batch_size = 4;
  opt.learning_rate = 2.0;
  opt.decay_rate = 0.002;
  opt.gradient_clip = 5.0;
  opt.epochs = 200;
  opt.seed = 17;
  const TrainReport report = train_mle(m, split, opt);
  CHECK(report.epochs.size() == 200);

  const double ppl = eval::perplexity(m, split.train);
  CHECK(ppl < 1.5);
  // per-epoch metric is the mean per-token NLL; it must have dropped
  CHECK(report.epochs.back().train_metric < report.epochs.front().train_metric);
}

TEST_CASE("zero epochs leave the parameters untouched") {
  const corpus::CorpusSplit split = toy_split(12, 6, 5);
  Seq2SeqModel m = Seq2SeqModel::create(tiny_config(12, 6, 8, 1), 2);
  const std::vector<double> before = m.embedding.v;
  OptimizerConfig opt;
  opt.epochs = 0;
  opt.batch_size = 2;
  const TrainReport report = train_mle(m, split, opt);
  CHECK(report.epochs.empty());
  CHECK(m.embedding.v == before);
}

TEST_CASE("empty training split is rejected") {
  Seq2SeqModel m = Seq2SeqModel::create(tiny_config(12, 6, 8, 1), 2);
  OptimizerConfig opt;
  CHECK_THROWS_AS(train_mle(m, corpus::CorpusSplit{}, opt), ValidationError);
  CHECK_THROWS_AS(train_language_model(tiny_config(12, 6, 8, 1), {}, opt), ValidationError);
}

TEST_CASE("reverse training overfits the swapped direction") {
  corpus::CorpusSplit split;
  corpus::DialogPair p;
  p.source = {4, 5};
  p.target = {6, 7, 8};
  split.train = {p};

  OptimizerConfig opt;
  opt.batch_size = 1;
  opt.learning_rate = 0.5;
  opt.decay_rate = 0.0;
  opt.gradient_clip = 5.0;
  opt.epochs = 150;
  opt.seed = 3;
  const Seq2SeqModel reverse = train_reverse(tiny_config(12, 8, 16, 1), split, opt);
  // p(source | target) must now be high
  const double logp = model::sequence_log_prob(reverse, {6, 7, 8}, {4, 5});
  CHECK(std::exp(logp) > 0.5);
}

TEST_CASE("symmetric corpora give matching forward and reverse perplexities") {
  corpus::CorpusSplit split;
  Rng rng(31);
  for (int i = 0; i < 8; ++i) {
    corpus::DialogPair p;
    p.source = {static_cast<corpus::TokenId>(4 + rng.next_below(6)),
                static_cast<corpus::TokenId>(4 + rng.next_below(6))};
    p.target = {static_cast<corpus::TokenId>(4 + rng.next_below(6)),
                static_cast<corpus::TokenId>(4 + rng.next_below(6))};
    split.train.push_back(p);
    corpus::DialogPair q;
    q.source = p.target;
    q.target = p.source;
    split.train.push_back(q);  // every pair present both ways
  }
  split.validation = split.train;

  ModelConfig cfg = tiny_config(10, 6, 12, 1);
  OptimizerConfig opt;
  opt.batch_size = 4;
  opt.learning_rate = 0.3;
  opt.decay_rate = 0.001;
  opt.gradient_clip = 5.0;
  opt.epochs = 60;
  opt.seed = 12;

  Seq2SeqModel forward = Seq2SeqModel::create(cfg, opt.seed);
  train_mle(forward, split, opt);
  const Seq2SeqModel reverse = train_reverse(cfg, split, opt);

  const double fwd_ppl = eval::perplexity(forward, split.validation);
  corpus::CorpusSplit swapped;
  for (const corpus::DialogPair& pr : split.validation) {
    corpus::DialogPair q;
    q.source = pr.target;
    q.target = pr.source;
    swapped.validation.push_back(q);
  }
  const double bwd_ppl = eval::perplexity(reverse, swapped.validation);
  CHECK(std::abs(fwd_ppl - bwd_ppl) / fwd_ppl < 0.10);
}

TEST_CASE("language model overfits a single sentence") {
  OptimizerConfig opt;
  opt.batch_size = 1;
  opt.learning_rate = 2.0;
  opt.decay_rate = 0.0;
  opt.gradient_clip = 5.0;
  opt.epochs = 150;
  opt.seed = 9;
  const Seq2SeqModel lm =
      train_language_model(tiny_config(10, 6, 12, 1), {{4, 5, 6, 7}}, opt);
  const double logp = model::language_model_log_prob(lm, {4, 5, 6, 7});
  // 5 scored steps; per-token probability must be near 1
  CHECK(std::exp(logp / 5.0) > 0.9);
}

TEST_CASE("gradient clipping caps the global norm") {
  Seq2SeqModel m = Seq2SeqModel::create(tiny_config(12, 6, 8, 2), 4);
  // gradient_check leaves the analytic gradients of this example in place
  gradient_check(m, {4, 5, 6}, {7, 8, 9}, 1e-5, 10);
  const double pre = clip_gradients(m, 0.01);
  CHECK(pre > 0.01);  // raw gradients exceed the tiny threshold
  double post_sq = 0.0;
  for (model::NamedTensor& nt : m.named_tensors())
    for (double g : nt.tensor->g) post_sq += g * g;
  CHECK(std::sqrt(post_sq) <= 0.01 + 1e-9);
}

TEST_CASE("the decay schedule is geometric per epoch") {
  OptimizerConfig opt;
  opt.learning_rate = 0.2;
  opt.decay_rate = 0.1;
  CHECK(effective_learning_rate(opt, 0) == 0.2);
  CHECK(effective_learning_rate(opt, 1) == doctest::Approx(0.18).epsilon(1e-12));
  CHECK(effective_learning_rate(opt, 5) == doctest::Approx(0.2 * std::pow(0.9, 5)).epsilon(1e-12));
  for (size_t k = 1; k < 10; ++k)
    CHECK(effective_learning_rate(opt, k) < effective_learning_rate(opt, k - 1));
}

TEST_CASE("same seed and data produce byte-identical checkpoints") {
  const corpus::CorpusSplit split = toy_split(14, 10, 77);
  OptimizerConfig opt;
  opt.batch_size = 3;
  opt.learning_rate = 0.2;
  opt.epochs = 5;
  opt.seed = 123;

  const std::string path_a = temp_path("rldialog_det_a.bin");
  const std::string path_b = temp_path("rldialog_det_b.bin");
  for (const std::string& path : {path_a, path_b}) {
    Seq2SeqModel m = Seq2SeqModel::create(tiny_config(14, 6, 8, 2), opt.seed);
    train_mle(m, split, opt);
    save_checkpoint(m, path);
  }
  CHECK(files_identical(path_a, path_b));
  std::remove(path_a.c_str());
  std::remove(path_b.c_str());
}

TEST_CASE("checkpoint save/load round-trips bit-exactly") {
  Seq2SeqModel m = Seq2SeqModel::create(tiny_config(13, 7, 9, 2), 5);
  const std::string path = temp_path("rldialog_ckpt_roundtrip.bin");
  save_checkpoint(m, path);
  const Seq2SeqModel loaded = load_checkpoint(path);
  CHECK(loaded.config == m.config);
  auto ta = const_cast<Seq2SeqModel&>(m).named_tensors();
  auto tb = const_cast<Seq2SeqModel&>(loaded).named_tensors();
  REQUIRE(ta.size() == tb.size());
  for (size_t i = 0; i < ta.size(); ++i) CHECK(ta[i].tensor->v == tb[i].tensor->v);
  std::remove(path.c_str());
}

TEST_CASE("corrupted and mismatched checkpoints are rejected") {
  Seq2SeqModel m = Seq2SeqModel::create(tiny_config(13, 7, 9, 1), 5);
  const std::string path = temp_path("rldialog_ckpt_corrupt.bin");
  save_checkpoint(m, path);

  SUBCASE("bad magic") {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.write("BADMAGIC", 8);
    f.close();
    CHECK_THROWS_AS(load_checkpoint(path), IoError);
  }

  SUBCASE("truncation") {
    std::filesystem::resize_file(path, std::filesystem::file_size(path) / 2);
    CHECK_THROWS_AS(load_checkpoint(path), IoError);
  }

  SUBCASE("config mismatch names the field") {
    model::ModelConfig expected = m.config;
    expected.vocab_size = 99;
    CHECK_THROWS_WITH_AS(load_checkpoint(path, expected), doctest::Contains("vocab_size"),
                         ValidationError);
  }

  std::remove(path.c_str());
}

TEST_CASE("affect-augmented embeddings carry VAD in the last three columns") {
  corpus::Vocabulary vocab = corpus::build_vocabulary({"happy sad table"}, 10);
  affect::AffectLexicon lex;
  lex.insert("happy", {8.0, 6.0, 7.0});
  lex.insert("sad", {2.0, 5.0, 3.0});

  ModelConfig cfg = tiny_config(vocab.size(), 7, 8, 1);
  Seq2SeqModel m = Seq2SeqModel::create(cfg, 11);
  apply_affect_embeddings(m, vocab, lex, false, 21);

  const double* happy = m.embedding.row(static_cast<size_t>(vocab.id_of("happy")));
  CHECK(happy[4] == 8.0);
  CHECK(happy[5] == 6.0);
  CHECK(happy[6] == 7.0);
  const double* table = m.embedding.row(static_cast<size_t>(vocab.id_of("table")));
  CHECK(table[4] == 5.0);
  CHECK(table[5] == 1.0);
  CHECK(table[6] == 5.0);
  for (size_t k = 0; k < 4; ++k) {
    CHECK(std::abs(happy[k]) <= 0.1);  // base part from the seeded uniform draw
  }

  std::unordered_map<std::string, std::vector<double>> base = {
      {"table", {0.5, 0.25, -0.5, 0.125}}};
  apply_affect_embeddings(m, vocab, lex, false, 21, &base);
  const double* table2 = m.embedding.row(static_cast<size_t>(vocab.id_of("table")));
  CHECK(table2[0] == 0.5);
  CHECK(table2[3] == 0.125);
}

TEST_CASE("config files parse, defaults apply and unknown keys are rejected") {
  const std::string path = temp_path("rldialog_config_test.cfg");
  {
    std::ofstream out(path);
    out << "# toy settings\n"
        << "embed_dim = 7\n"
        << "hidden_size = 8\n"
        << "batch_size = 4\n"
        << "learning_rate = 0.05\n"
        << "lambda_ea = 1.0\n"
        << "lambda_sc = 0.0\n"
        << "lambda_ei = 0.0\n"
        << "lambda_hf = 0.0\n";
  }
  const FileConfig cfg = parse_config_file(path);
  CHECK(cfg.model.embed_dim == 7);
  CHECK(cfg.model.hidden_size == 8);
  CHECK(cfg.model.num_layers == 2);  // default untouched
  CHECK(cfg.optim.batch_size == 4);
  CHECK(cfg.optim.learning_rate == 0.05);
  CHECK(cfg.lambda_ea == 1.0);

  {
    std::ofstream out(path);
    out << "not_a_key = 3\n";
  }
  CHECK_THROWS_WITH_AS(parse_config_file(path), doctest::Contains("not_a_key"), ValidationError);
  std::remove(path.c_str());
}

TEST_CASE("optimizer config validation") {
  OptimizerConfig opt;
  CHECK_NOTHROW(opt.validate());
  opt.learning_rate = 0.0;
  CHECK_THROWS_AS(opt.validate(), ValidationError);
  opt = OptimizerConfig{};
  opt.decay_rate = 1.0;
  CHECK_THROWS_AS(opt.validate(), ValidationError);
}

#include "rl_fixture.hpp"

using rldialog::testhelpers::dull_profile;
using rldialog::testhelpers::make_dull_rl_fixture;
using rldialog::testhelpers::pretrain_dull_policy;

namespace {

RlContext make_rl_context(const rldialog::testhelpers::DullRlFixture& fx,
                          const Seq2SeqModel& frozen, const Seq2SeqModel& reverse,
                          const Seq2SeqModel& lm) {
  RlContext ctx;
  ctx.reward_scorer = &frozen;
  ctx.reverse_model = &reverse;
  ctx.language_model = &lm;
  ctx.dull = &fx.dull;
  ctx.lexicon = &fx.lexicon;
  ctx.vocab = &fx.vocab;
  ctx.prompts = fx.prompts;
  return ctx;
}

std::pair<Seq2SeqModel, Seq2SeqModel> quick_reverse_and_lm(
    const rldialog::testhelpers::DullRlFixture& fx, uint64_t seed) {
  OptimizerConfig quick;
  quick.epochs = 0;
  quick.seed = seed;
  Seq2SeqModel reverse = train_reverse(fx.model_config(), fx.split, quick);
  std::vector<corpus::TokenSeq> targets;
  for (const corpus::DialogPair& p : fx.split.train) targets.push_back(p.target);
  Seq2SeqModel lm = train_language_model(fx.model_config(), targets, quick);
  return {std::move(reverse), std::move(lm)};
}

}  // namespace

TEST_CASE("finetune_rl suppresses dull responses and raises the mean reward") {
  const auto fx = make_dull_rl_fixture();
  Seq2SeqModel policy = pretrain_dull_policy(fx, 2);
  const Seq2SeqModel frozen = policy;
  auto [reverse, lm] = quick_reverse_and_lm(fx, 2);

  const auto [dull_before, reward_before] = dull_profile(fx, policy, frozen, 4242);
  CHECK(dull_before > 0.3);  // the pretrained policy is biased toward the dull reply

  RlContext ctx = make_rl_context(fx, frozen, reverse, lm);
  OptimizerConfig rl;
  rl.batch_size = 6;
  rl.learning_rate = 0.2;
  rl.decay_rate = 0.005;
  rl.gradient_clip = 1.0;
  rl.epochs = 30;
  rl.seed = 1002;
  const TrainReport report =
      finetune_rl(policy, ctx, rewards::RewardWeights::create(1.0, 0.0, 0.0, 0.0), rl);
  CHECK(report.epochs.size() == 30);

  const auto [dull_after, reward_after] = dull_profile(fx, policy, frozen, 4242);
  CHECK(dull_after < dull_before);
  CHECK(reward_after > reward_before);
}

TEST_CASE("constant reward matched by the baseline yields a zero update") {
  const auto fx = make_dull_rl_fixture();
  Seq2SeqModel policy = Seq2SeqModel::create(fx.model_config(), 5);
  const Seq2SeqModel frozen = policy;
  auto [reverse, lm] = quick_reverse_and_lm(fx, 5);

  // Only the affect term is weighted and the lexicon is empty, so every
  // episode scores exactly 0 -- equal to the initial baseline.
  RlContext ctx = make_rl_context(fx, frozen, reverse, lm);
  OptimizerConfig rl;
  rl.batch_size = 4;
  rl.learning_rate = 0.5;
  rl.epochs = 3;
  rl.seed = 8;

  const std::vector<double> before = policy.embedding.v;
  finetune_rl(policy, ctx, rewards::RewardWeights::create(0.0, 0.0, 1.0, 0.0), rl);
  CHECK(policy.embedding.v == before);
}

TEST_CASE("finetune_rl validates its prerequisites") {
  const auto fx = make_dull_rl_fixture();
  Seq2SeqModel policy = Seq2SeqModel::create(fx.model_config(), 5);
  const Seq2SeqModel frozen = policy;
  auto [reverse, lm] = quick_reverse_and_lm(fx, 5);
  OptimizerConfig rl;
  rl.epochs = 1;

  RlContext no_reverse = make_rl_context(fx, frozen, reverse, lm);
  no_reverse.reverse_model = nullptr;
  CHECK_THROWS_WITH_AS(
      finetune_rl(policy, no_reverse, rewards::RewardWeights::cornell(), rl),
      doctest::Contains("reverse"), ValidationError);

  RlContext no_analyzer = make_rl_context(fx, frozen, reverse, lm);
  CHECK_THROWS_WITH_AS(
      finetune_rl(policy, no_analyzer, rewards::RewardWeights::yelp(), rl),
      doctest::Contains("analyzer required"), ValidationError);
}
