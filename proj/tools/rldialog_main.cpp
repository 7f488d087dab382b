// Command-line front end: corpus preprocessing, model training (MLE,
// reverse, language model, RL fine-tuning), analyzer training, generation
// and evaluation. Exit codes: 0 success, 1 validation/precondition failure,
// 2 I/O failure.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rldialog/corpus.hpp"
#include "rldialog/errors.hpp"
#include "rldialog/eval.hpp"
#include "rldialog/feedback.hpp"
#include "rldialog/model.hpp"
#include "rldialog/rewards.hpp"
#include "rldialog/rng.hpp"
#include "rldialog/training.hpp"

using json = nlohmann::json;
using namespace rldialog;

namespace {

// ---------------------------------------------------------------- utilities

uint64_t fnv1a_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open input for digest: " + path);
  uint64_t hash = 1469598103934665603ULL;
  char buf[1 << 14];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    const std::streamsize n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 1099511628211ULL;
    }
    if (!in) break;
  }
  return hash;
}

std::string iso_timestamp() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file: " + path);
  out << content;
  if (!out) throw IoError("failed writing file: " + path);
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

// load a preprocessed TSV as one flat pair list (no striped re-splitting)
std::vector<corpus::DialogPair> load_flat_pairs(const std::string& path) {
  corpus::SplitRatios flat;
  flat.validation_stripe = -1;
  flat.test_stripe = -1;
  return corpus::load_dialog_corpus(path, flat).train;
}

json report_to_json(const training::TrainReport& report, const std::string& metric_name) {
  json epochs = json::array();
  for (const training::EpochStats& e : report.epochs) {
    json row = {{"epoch", e.epoch}, {metric_name, e.train_metric}};
    if (e.validation_perplexity) row["validation_perplexity"] = *e.validation_perplexity;
    epochs.push_back(row);
  }
  return json{{"seed", report.seed},
              {"wall_clock_seconds", report.wall_clock_seconds},
              {"epochs", epochs}};
}

void log_report(const training::TrainReport& report, const std::string& metric_name) {
  for (const training::EpochStats& e : report.epochs) {
    std::cerr << "epoch " << e.epoch << " " << metric_name << " " << e.train_metric;
    if (e.validation_perplexity) std::cerr << " validation_perplexity " << *e.validation_perplexity;
    std::cerr << "\n";
  }
}

// ------------------------------------------------------------ run manifest

struct ManifestBuilder {
  json doc;
  ManifestBuilder(const std::string& command, int argc, char** argv) {
    doc["command"] = command;
    json args = json::array();
    for (int i = 0; i < argc; ++i) args.push_back(argv[i]);
    doc["argv"] = args;
    doc["timestamp"] = iso_timestamp();
    doc["inputs"] = json::array();
    doc["outputs"] = json::array();
  }
  void input(const std::string& path) {
    doc["inputs"].push_back(
        {{"path", path}, {"digest_fnv1a64", fnv1a_file(path)}});
  }
  void output(const std::string& path) { doc["outputs"].push_back(path); }
  void write(const std::string& path) const { write_text_file(path, doc.dump(2) + "\n"); }
};

// ------------------------------------------------------------- subcommands

struct PreprocessArgs {
  std::string in, out_dir, vocab_out;
  size_t max_vocab = corpus::kDefaultMaxVocab;
  size_t max_len = corpus::kDefaultMaxLen;
};

int cmd_preprocess(const PreprocessArgs& args) {
  corpus::CorpusSplit split = corpus::load_dialog_corpus(args.in);
  if (split.train.empty()) throw ValidationError("no training pairs in " + args.in);

  // vocabulary comes from the training and validation sides only
  std::vector<std::string> texts;
  for (const corpus::DialogPair& p : split.train) {
    texts.push_back(p.raw_source);
    texts.push_back(p.raw_target);
  }
  for (const corpus::DialogPair& p : split.validation) {
    texts.push_back(p.raw_source);
    texts.push_back(p.raw_target);
  }
  corpus::Vocabulary vocab = corpus::build_vocabulary(texts, args.max_vocab);

  corpus::encode_split(split, vocab, args.max_len);
  split = corpus::filter_training_split(split, vocab);

  const std::string vocab_path =
      args.vocab_out.empty() ? args.out_dir + "/vocab.txt" : args.vocab_out;
  vocab.save(vocab_path);

  const auto dump_pairs = [&](const std::vector<corpus::DialogPair>& pairs,
                              const std::string& name) {
    std::string content;
    for (const corpus::DialogPair& p : pairs)
      content += p.raw_source + "\t" + p.raw_target + "\n";
    write_text_file(args.out_dir + "/" + name, content);
  };
  dump_pairs(split.train, "train.tsv");
  dump_pairs(split.validation, "validation.tsv");
  dump_pairs(split.test, "test.tsv");

  std::cout << "              Training set  Validation set  Testing set\n";
  std::cout << "pairs         " << split.train.size() << "\t" << split.validation.size() << "\t"
            << split.test.size() << "\n";
  std::cout << "vocabulary    " << vocab.size() << " tokens (4 reserved)\n";
  return 0;
}

struct TrainArgs {
  std::string mode, config_path, vocab_path, data_path, valid_path, checkpoint_out;
  std::string checkpoint_in, reverse_path, lm_path, analyzer_path, lexicon_path, dull_path;
  std::string embeddings_path;
  std::optional<uint64_t> seed_override;
  std::string weights_override;  // "ea,sc,ei,hf"
};

rewards::RewardWeights parse_weights(const std::string& csv) {
  std::vector<double> vals;
  std::stringstream ss(csv);
  std::string field;
  while (std::getline(ss, field, ',')) vals.push_back(std::stod(field));
  if (vals.size() != 4)
    throw ValidationError("--reward-weights expects ea,sc,ei,hf (4 values), got " + csv);
  return rewards::RewardWeights::create(vals[0], vals[1], vals[2], vals[3]);
}

std::unordered_map<std::string, std::vector<double>> load_base_embeddings(
    const std::string& path) {
  std::unordered_map<std::string, std::vector<double>> out;
  size_t lineno = 0;
  for (const std::string& line : read_lines(path)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string token;
    ss >> token;
    std::vector<double> vec;
    double x;
    while (ss >> x) vec.push_back(x);
    if (token.empty() || vec.empty())
      throw ValidationError(path + " line " + std::to_string(lineno) +
                            ": expected `token v1 v2 ...`");
    out[token] = std::move(vec);
  }
  return out;
}

rewards::DullResponseSet resolve_dull_set(const std::string& flag_path,
                                          const corpus::Vocabulary& vocab) {
  if (!flag_path.empty()) return rewards::DullResponseSet::load_file(flag_path, vocab);
  if (const char* dir = std::getenv("RLDIALOG_DATA_DIR")) {
    const std::string candidate = std::string(dir) + "/dull_responses.txt";
    if (std::ifstream(candidate).good())
      return rewards::DullResponseSet::load_file(candidate, vocab);
  }
  return rewards::DullResponseSet::build(rewards::DullResponseSet::default_responses(), vocab);
}

int cmd_train(const TrainArgs& args, int argc, char** argv) {
  training::FileConfig cfg = training::parse_config_file(args.config_path);
  if (args.seed_override) cfg.optim.seed = *args.seed_override;
  rewards::RewardWeights weights =
      args.weights_override.empty()
          ? rewards::RewardWeights::create(cfg.lambda_ea, cfg.lambda_sc, cfg.lambda_ei,
                                           cfg.lambda_hf)
          : parse_weights(args.weights_override);

  const corpus::Vocabulary vocab = corpus::Vocabulary::load(args.vocab_path);
  if (cfg.model.vocab_size != 0 && cfg.model.vocab_size != vocab.size())
    throw ValidationError("config vocab_size " + std::to_string(cfg.model.vocab_size) +
                          " does not match vocabulary file size " +
                          std::to_string(vocab.size()));
  cfg.model.vocab_size = vocab.size();

  corpus::CorpusSplit split;
  split.train = load_flat_pairs(args.data_path);
  if (!args.valid_path.empty()) split.validation = load_flat_pairs(args.valid_path);
  corpus::encode_split(split, vocab, cfg.model.max_decode_len);
  split = corpus::filter_training_split(split, vocab);
  if (split.train.empty()) throw ValidationError("no usable training pairs after filtering");

  ManifestBuilder manifest("train --mode " + args.mode, argc, argv);
  manifest.doc["seed"] = cfg.optim.seed;
  manifest.input(args.config_path);
  manifest.input(args.vocab_path);
  manifest.input(args.data_path);
  if (!args.valid_path.empty()) manifest.input(args.valid_path);
  {
    json c;
    c["mode"] = args.mode;
    c["embed_dim"] = cfg.model.embed_dim;
    c["hidden_size"] = cfg.model.hidden_size;
    c["num_layers"] = cfg.model.num_layers;
    c["max_decode_len"] = cfg.model.max_decode_len;
    c["mmi_lambda"] = cfg.model.mmi_lambda;
    c["vocab_size"] = cfg.model.vocab_size;
    c["batch_size"] = cfg.optim.batch_size;
    c["learning_rate"] = cfg.optim.learning_rate;
    c["decay_rate"] = cfg.optim.decay_rate;
    c["gradient_clip"] = cfg.optim.gradient_clip;
    c["epochs"] = cfg.optim.epochs;
    c["seed"] = cfg.optim.seed;
    c["lambda"] = {weights.lambda_ea, weights.lambda_sc, weights.lambda_ei, weights.lambda_hf};
    c["affect_rescale"] = cfg.affect_rescale;
    c["margin_reward"] = cfg.margin_reward;
    c["baseline_decay"] = cfg.baseline_decay;
    manifest.doc["config"] = c;
  }
  manifest.output(args.checkpoint_out);

  affect::AffectLexicon lexicon;
  if (!args.lexicon_path.empty()) {
    lexicon = affect::AffectLexicon::load_csv(args.lexicon_path);
    manifest.input(args.lexicon_path);
  }
  std::unordered_map<std::string, std::vector<double>> base_vectors;
  if (!args.embeddings_path.empty()) {
    base_vectors = load_base_embeddings(args.embeddings_path);
    manifest.input(args.embeddings_path);
  }

  training::TrainReport report;
  std::string metric_name = "mean_token_nll";

  if (args.mode == "mle" || args.mode == "reverse") {
    manifest.write(args.checkpoint_out + ".manifest.json");
    model::Seq2SeqModel m = model::Seq2SeqModel::create(cfg.model, cfg.optim.seed);
    training::apply_affect_embeddings(m, vocab, lexicon, cfg.affect_rescale,
                                      mix_seed(cfg.optim.seed, 0xE0BED),
                                      base_vectors.empty() ? nullptr : &base_vectors);
    if (args.mode == "mle") {
      report = training::train_mle(m, split, cfg.optim);
    } else {
      // train_reverse builds its own model; recreate with the same init path
      corpus::CorpusSplit swapped;
      const auto swap_all = [](std::vector<corpus::DialogPair> v) {
        for (corpus::DialogPair& p : v) {
          std::swap(p.source, p.target);
          std::swap(p.raw_source, p.raw_target);
        }
        return v;
      };
      swapped.train = swap_all(split.train);
      swapped.validation = swap_all(split.validation);
      report = training::train_mle(m, swapped, cfg.optim);
    }
    training::save_checkpoint(m, args.checkpoint_out);
  } else if (args.mode == "lm") {
    manifest.write(args.checkpoint_out + ".manifest.json");
    model::ModelConfig lm_cfg = cfg.model;
    lm_cfg.kind = model::ModelKind::LanguageModel;
    model::Seq2SeqModel m = model::Seq2SeqModel::create(lm_cfg, cfg.optim.seed);
    training::apply_affect_embeddings(m, vocab, lexicon, cfg.affect_rescale,
                                      mix_seed(cfg.optim.seed, 0xE0BED),
                                      base_vectors.empty() ? nullptr : &base_vectors);
    std::vector<corpus::TokenSeq> targets;
    for (const corpus::DialogPair& p : split.train) targets.push_back(p.target);
    report = training::train_language_model_inplace(m, targets, cfg.optim);
    training::save_checkpoint(m, args.checkpoint_out);
  } else if (args.mode == "rl") {
    metric_name = "mean_combined_reward";
    if (args.checkpoint_in.empty())
      throw ValidationError("--checkpoint (pretrained forward model) required for rl mode");
    if (args.reverse_path.empty()) throw ValidationError("--reverse checkpoint required for rl mode");
    if (args.lm_path.empty()) throw ValidationError("--lm checkpoint required for rl mode");
    if (weights.lambda_hf > 0.0 && args.analyzer_path.empty())
      throw ValidationError("analyzer required: rl mode with lambda_hf > 0 needs --analyzer");

    model::Seq2SeqModel policy = training::load_checkpoint(args.checkpoint_in);
    const model::Seq2SeqModel frozen = policy;
    const model::Seq2SeqModel reverse = training::load_checkpoint(args.reverse_path);
    const model::Seq2SeqModel lm = training::load_checkpoint(args.lm_path);
    if (lm.config.kind != model::ModelKind::LanguageModel)
      throw ValidationError("--lm checkpoint is not a language model");

    feedback::UsefulnessAnalyzer analyzer;
    if (!args.analyzer_path.empty()) {
      analyzer = feedback::UsefulnessAnalyzer::load(args.analyzer_path);
      manifest.input(args.analyzer_path);
    }
    const rewards::DullResponseSet dull = resolve_dull_set(args.dull_path, vocab);
    if (!args.dull_path.empty()) manifest.input(args.dull_path);
    manifest.input(args.checkpoint_in);
    manifest.input(args.reverse_path);
    manifest.input(args.lm_path);
    manifest.write(args.checkpoint_out + ".manifest.json");

    training::RlContext ctx;
    ctx.reward_scorer = &frozen;
    ctx.reverse_model = &reverse;
    ctx.language_model = &lm;
    ctx.dull = &dull;
    ctx.lexicon = &lexicon;
    ctx.analyzer = args.analyzer_path.empty() ? nullptr : &analyzer;
    ctx.vocab = &vocab;
    ctx.baseline_decay = cfg.baseline_decay;
    ctx.margin_scaled_hf = cfg.margin_reward;
    for (const corpus::DialogPair& p : split.train) ctx.prompts.push_back(p.source);

    report = training::finetune_rl(policy, ctx, weights, cfg.optim);
    training::save_checkpoint(policy, args.checkpoint_out);
  } else {
    throw ValidationError("unknown --mode '" + args.mode + "' (expected mle|reverse|lm|rl)");
  }

  log_report(report, metric_name);
  write_text_file(args.checkpoint_out + ".report.json",
                  report_to_json(report, metric_name).dump(2) + "\n");
  std::cerr << "checkpoint written to " << args.checkpoint_out << "\n";
  return 0;
}

struct TrainAnalyzerArgs {
  std::string reviews_path, out_path;
  double holdout = 0.2;
  size_t epochs = 40;
  double step_size = 0.5;
  double regularization = 1e-4;
  uint64_t seed = 7;
  size_t max_features = 20000;
};

int cmd_train_analyzer(const TrainAnalyzerArgs& args, int argc, char** argv) {
  std::vector<corpus::Review> reviews = corpus::load_review_corpus(args.reviews_path);
  reviews = feedback::normalize_usefulness(std::move(reviews));

  std::vector<std::pair<std::string, feedback::UsefulnessLabel>> labeled;
  size_t excluded = 0;
  for (const corpus::Review& r : reviews) {
    const auto label = feedback::binarize_usefulness(r);
    if (!label) {
      ++excluded;
      continue;
    }
    labeled.emplace_back(r.text, *label);
  }
  if (labeled.empty()) throw ValidationError("no rated reviews in " + args.reviews_path);

  // deterministic shuffled holdout split
  Rng rng(args.seed);
  rng.shuffle(labeled);
  const size_t holdout_n = static_cast<size_t>(static_cast<double>(labeled.size()) * args.holdout);
  const size_t train_n = labeled.size() - holdout_n;
  if (train_n == 0) throw ValidationError("holdout fraction leaves no training reviews");

  std::vector<std::string> train_texts;
  for (size_t i = 0; i < train_n; ++i) train_texts.push_back(labeled[i].first);
  feedback::UsefulnessAnalyzer analyzer;
  analyzer.features = feedback::FeatureVocabulary::build(train_texts, args.max_features);

  std::vector<std::pair<feedback::FeatureVector, feedback::UsefulnessLabel>> train_set;
  size_t useful_n = 0;
  for (size_t i = 0; i < train_n; ++i) {
    train_set.emplace_back(feedback::featurize(labeled[i].first, analyzer.features),
                           labeled[i].second);
    if (labeled[i].second == feedback::UsefulnessLabel::Useful) ++useful_n;
  }

  ManifestBuilder manifest("train-analyzer", argc, argv);
  manifest.doc["seed"] = args.seed;
  manifest.input(args.reviews_path);
  manifest.output(args.out_path);
  manifest.write(args.out_path + ".manifest.json");

  feedback::AnalyzerTrainConfig cfg;
  cfg.epochs = args.epochs;
  cfg.step_size = args.step_size;
  cfg.regularization = args.regularization;
  cfg.seed = args.seed;
  analyzer.classifier = feedback::train_analyzer(train_set, cfg);

  size_t correct = 0;
  for (size_t i = train_n; i < labeled.size(); ++i)
    if (feedback::classify(analyzer, labeled[i].first).first == labeled[i].second) ++correct;

  analyzer.save(args.out_path);

  std::cout << "reviews: " << reviews.size() << " (excluded unrated: " << excluded << ")\n";
  std::cout << "class balance: " << useful_n << " useful / " << (train_n - useful_n)
            << " not useful (training portion)\n";
  if (holdout_n > 0)
    std::cout << "held-out accuracy: "
              << static_cast<double>(correct) / static_cast<double>(holdout_n) << " on "
              << holdout_n << " reviews\n";
  std::cout << "analyzer written to " << args.out_path << "\n";
  return 0;
}

struct GenerateArgs {
  std::string checkpoint, vocab_path, lm_path, input_path, out_path;
  size_t n_best = 1;
  std::optional<double> mmi_lambda;
  bool verbose = false;
};

int cmd_generate(const GenerateArgs& args) {
  const model::Seq2SeqModel m = training::load_checkpoint(args.checkpoint);
  if (m.config.kind != model::ModelKind::Seq2Seq)
    throw ValidationError("--checkpoint must be a seq2seq model");
  const corpus::Vocabulary vocab = corpus::Vocabulary::load(args.vocab_path);
  if (vocab.size() != m.config.vocab_size)
    throw ValidationError("vocabulary size does not match the checkpoint");

  std::optional<model::Seq2SeqModel> lm;
  if (!args.lm_path.empty()) {
    lm = training::load_checkpoint(args.lm_path);
    if (lm->config.kind != model::ModelKind::LanguageModel)
      throw ValidationError("--lm checkpoint is not a language model");
  }
  const double lambda = args.mmi_lambda ? *args.mmi_lambda : m.config.mmi_lambda;

  std::ostream* out = &std::cout;
  std::ofstream out_file;
  if (!args.out_path.empty()) {
    out_file.open(args.out_path, std::ios::binary);
    if (!out_file) throw IoError("cannot write output file: " + args.out_path);
    out = &out_file;
  }

  const auto respond = [&](const std::string& raw_prompt) {
    const std::string norm = corpus::preprocess_text(raw_prompt);
    const corpus::TokenSeq ids = corpus::encode(norm, vocab, m.config.max_decode_len);
    if (ids.empty()) {
      std::cerr << "warning: prompt normalizes to nothing, emitting empty response\n";
      *out << "\n";
      return;
    }
    bool all_unk = true;
    for (corpus::TokenId id : ids) all_unk = all_unk && id == corpus::kUnkId;
    if (all_unk)
      std::cerr << "warning: prompt encodes entirely to <unk>, generating anyway\n";

    corpus::TokenSeq response;
    if (args.n_best == 1 && !lm) {
      response = model::greedy_decode(m, ids);
    } else {
      std::vector<model::Candidate> cands = model::n_best_decode(m, ids, args.n_best);
      if (lm) model::mmi_rescore(cands, *lm, lambda);
      if (args.verbose) {
        for (const model::Candidate& c : cands) {
          std::cerr << "  cand cond=" << c.cond_logprob;
          if (c.scored) std::cerr << " lm=" << c.lm_logprob << " mmi=" << c.mmi_score;
          std::cerr << " :: " << corpus::decode_text(c.tokens, vocab) << "\n";
        }
      }
      response = cands.front().tokens;
    }
    *out << corpus::decode_text(response, vocab) << "\n";
  };

  if (!args.input_path.empty()) {
    for (const std::string& line : read_lines(args.input_path)) respond(line);
  } else {
    std::string line;
    while (std::getline(std::cin, line)) respond(line);
  }
  return 0;
}

struct EvaluateArgs {
  std::string outputs_path, baseline_path, checkpoint, vocab_path, json_out;
  size_t resamples = 10000;
  uint64_t seed = 0;
};

struct EvalRows {
  std::vector<std::string> prompts, candidates, references;
};

EvalRows load_eval_rows(const std::string& path) {
  EvalRows rows;
  size_t lineno = 0;
  for (const std::string& line : read_lines(path)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    size_t start = 0;
    while (true) {
      const size_t tab = line.find('\t', start);
      if (tab == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, tab - start));
      start = tab + 1;
    }
    if (fields.size() != 3)
      throw ValidationError(path + " line " + std::to_string(lineno) +
                            ": expected prompt<TAB>candidate<TAB>reference");
    rows.prompts.push_back(corpus::preprocess_text(fields[0]));
    rows.candidates.push_back(corpus::preprocess_text(fields[1]));
    rows.references.push_back(corpus::preprocess_text(fields[2]));
  }
  if (rows.prompts.empty()) throw ValidationError("no evaluation rows in " + path);
  return rows;
}

int cmd_evaluate(const EvaluateArgs& args) {
  const EvalRows rows = load_eval_rows(args.outputs_path);
  std::vector<eval::Tokens> cands, refs;
  for (size_t i = 0; i < rows.candidates.size(); ++i) {
    cands.push_back(corpus::tokenize(rows.candidates[i]));
    refs.push_back(corpus::tokenize(rows.references[i]));
  }
  for (const eval::Tokens& r : refs)
    if (r.empty()) throw ValidationError("empty reference in " + args.outputs_path);

  const eval::MetricReport report = eval::evaluate_outputs(cands, refs);
  json out;
  out["n_examples"] = report.n_examples;
  out["bleu"] = report.bleu;
  out["rouge_l"] = report.rouge_l;

  std::cout << "examples   " << report.n_examples << "\n";
  std::cout << "BLEU       " << report.bleu << "\n";
  std::cout << "ROUGE-L    " << report.rouge_l << "\n";

  if (!args.checkpoint.empty()) {
    if (args.vocab_path.empty())
      throw ValidationError("--vocab is required with --checkpoint for perplexity");
    const model::Seq2SeqModel m = training::load_checkpoint(args.checkpoint);
    const corpus::Vocabulary vocab = corpus::Vocabulary::load(args.vocab_path);
    std::vector<corpus::DialogPair> pairs;
    for (size_t i = 0; i < rows.prompts.size(); ++i) {
      corpus::DialogPair p;
      p.source = corpus::encode(rows.prompts[i], vocab, m.config.max_decode_len);
      p.target = corpus::encode(rows.references[i], vocab, m.config.max_decode_len);
      if (p.source.empty() || p.target.empty())
        throw ValidationError("evaluation row " + std::to_string(i + 1) +
                              " encodes to an empty sequence");
      pairs.push_back(p);
    }
    const double ppl = eval::perplexity(m, pairs);
    std::cout << "perplexity " << ppl << " (references under the checkpoint model)\n";
    out["perplexity"] = ppl;
  }

  if (!args.baseline_path.empty()) {
    const EvalRows base_rows = load_eval_rows(args.baseline_path);
    if (base_rows.candidates.size() != rows.candidates.size())
      throw ValidationError("misaligned evaluation files: " +
                            std::to_string(rows.candidates.size()) + " vs " +
                            std::to_string(base_rows.candidates.size()) + " rows");
    std::vector<eval::Tokens> base_cands;
    for (const std::string& c : base_rows.candidates)
      base_cands.push_back(corpus::tokenize(c));

    const eval::MetricReport base_report = eval::evaluate_outputs(base_cands, refs);
    const double p_bleu = eval::paired_bootstrap(
        [](const eval::Tokens& c, const eval::Tokens& r) { return eval::bleu(c, r); }, cands,
        base_cands, refs, args.resamples, args.seed);
    const double p_rouge = eval::paired_bootstrap(
        [](const eval::Tokens& c, const eval::Tokens& r) { return eval::rouge_l(c, r); }, cands,
        base_cands, refs, args.resamples, mix_seed(args.seed, 1));

    std::cout << "baseline BLEU    " << base_report.bleu << "  (p=" << p_bleu << ")\n";
    std::cout << "baseline ROUGE-L " << base_report.rouge_l << "  (p=" << p_rouge << ")\n";
    out["baseline"] = {{"bleu", base_report.bleu},
                       {"rouge_l", base_report.rouge_l},
                       {"p_bleu", p_bleu},
                       {"p_rouge_l", p_rouge}};
  }

  if (!args.json_out.empty()) write_text_file(args.json_out, out.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RL-tuned neural response generation with internal and external rewards"};
  app.require_subcommand(1);

  PreprocessArgs pre_args;
  CLI::App* pre = app.add_subcommand("preprocess", "Normalize a dialog corpus, build splits");
  pre->add_option("--in", pre_args.in, "dialog corpus, source<TAB>target per line")->required();
  pre->add_option("--out-dir", pre_args.out_dir, "directory for split files")->required();
  pre->add_option("--vocab-out", pre_args.vocab_out, "vocabulary file (default out-dir/vocab.txt)");
  pre->add_option("--max-vocab", pre_args.max_vocab, "vocabulary cap (default 12000)");
  pre->add_option("--max-len", pre_args.max_len, "token count threshold (default 20)");

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "Train a model (mle|reverse|lm|rl)");
  train->add_option("--mode", train_args.mode, "mle|reverse|lm|rl")->required();
  train->add_option("--config", train_args.config_path, "key=value config file")->required();
  train->add_option("--vocab", train_args.vocab_path, "vocabulary file")->required();
  train->add_option("--data", train_args.data_path, "training pairs TSV")->required();
  train->add_option("--valid", train_args.valid_path, "validation pairs TSV");
  train->add_option("--checkpoint-out", train_args.checkpoint_out, "checkpoint to write")
      ->required();
  train->add_option("--checkpoint", train_args.checkpoint_in, "pretrained model (rl mode)");
  train->add_option("--reverse", train_args.reverse_path, "reverse checkpoint (rl mode)");
  train->add_option("--lm", train_args.lm_path, "language-model checkpoint (rl mode)");
  train->add_option("--analyzer", train_args.analyzer_path, "analyzer checkpoint (rl mode)");
  train->add_option("--lexicon", train_args.lexicon_path, "affect lexicon CSV");
  train->add_option("--dull-responses", train_args.dull_path, "dull response list override");
  train->add_option("--embeddings", train_args.embeddings_path, "base embedding vectors");
  uint64_t seed_value = 0;
  CLI::Option* seed_opt = train->add_option("--seed", seed_value, "seed override");
  train->add_option("--reward-weights", train_args.weights_override,
                    "ea,sc,ei,hf mixture override");

  TrainAnalyzerArgs analyzer_args;
  CLI::App* tan = app.add_subcommand("train-analyzer", "Train the usefulness analyzer");
  tan->add_option("--reviews", analyzer_args.reviews_path, "review corpus TSV")->required();
  tan->add_option("--out", analyzer_args.out_path, "analyzer checkpoint to write")->required();
  tan->add_option("--holdout", analyzer_args.holdout, "held-out fraction (default 0.2)");
  tan->add_option("--epochs", analyzer_args.epochs, "training epochs");
  tan->add_option("--step-size", analyzer_args.step_size, "initial step size");
  tan->add_option("--reg", analyzer_args.regularization, "L2 regularization");
  tan->add_option("--seed", analyzer_args.seed, "shuffle seed");
  tan->add_option("--max-features", analyzer_args.max_features, "feature cap (default 20000)");

  GenerateArgs gen_args;
  CLI::App* gen = app.add_subcommand("generate", "Generate responses for prompts");
  gen->add_option("--checkpoint", gen_args.checkpoint, "seq2seq checkpoint")->required();
  gen->add_option("--vocab", gen_args.vocab_path, "vocabulary file")->required();
  gen->add_option("--lm", gen_args.lm_path, "language model for MMI reranking");
  gen->add_option("--input", gen_args.input_path, "prompt file (default: read stdin)");
  gen->add_option("--out", gen_args.out_path, "response file (default: stdout)");
  gen->add_option("--n-best", gen_args.n_best, "beam width (default 1 = greedy)");
  double lambda_value = 0.0;
  CLI::Option* lambda_opt =
      gen->add_option("--mmi-lambda", lambda_value, "MMI penalty (default: checkpoint value)");
  gen->add_flag("--verbose", gen_args.verbose, "print the n-best list with scores");

  EvaluateArgs eval_args;
  CLI::App* ev = app.add_subcommand("evaluate", "Score outputs with BLEU/ROUGE-L/perplexity");
  ev->add_option("--outputs", eval_args.outputs_path, "prompt<TAB>candidate<TAB>reference rows")
      ->required();
  ev->add_option("--baseline", eval_args.baseline_path, "baseline outputs for significance");
  ev->add_option("--checkpoint", eval_args.checkpoint, "model for perplexity");
  ev->add_option("--vocab", eval_args.vocab_path, "vocabulary file (with --checkpoint)");
  ev->add_option("--resamples", eval_args.resamples, "bootstrap resamples (default 10000)");
  ev->add_option("--seed", eval_args.seed, "bootstrap seed");
  ev->add_option("--json-out", eval_args.json_out, "machine-readable report path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*pre) return cmd_preprocess(pre_args);
    if (*train) {
      if (*seed_opt) train_args.seed_override = seed_value;
      return cmd_train(train_args, argc, argv);
    }
    if (*tan) return cmd_train_analyzer(analyzer_args, argc, argv);
    if (*gen) {
      if (*lambda_opt) gen_args.mmi_lambda = lambda_value;
      return cmd_generate(gen_args);
    }
    if (*ev) return cmd_evaluate(eval_args);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
