#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "rldialog/errors.hpp"
#include "rldialog/feedback.hpp"
#include "rldialog/rng.hpp"

using namespace rldialog;
using namespace rldialog::feedback;

namespace {

corpus::Review rated(int64_t raw, const std::string& text = "text") {
  corpus::Review r;
  r.text = text;
  r.useful_raw = raw;
  return r;
}

corpus::Review unrated(const std::string& text = "text") {
  corpus::Review r;
  r.text = text;
  return r;
}

// Synthetic review corpus where class membership is carried by marker terms.
std::vector<std::pair<std::string, UsefulnessLabel>> marker_corpus(size_t n, uint64_t seed) {
  const char* useful_markers[] = {"excellent", "helpful", "detailed", "thorough"};
  const char* useless_markers[] = {"meh", "spam", "vague", "noise"};
  const char* filler[] = {"the", "food", "was", "service", "place", "visit", "again"};
  Rng rng(seed);
  std::vector<std::pair<std::string, UsefulnessLabel>> out;
  for (size_t i = 0; i < n; ++i) {
    const bool useful = rng.next_below(2) == 0;
    std::string text;
    const size_t len = 4 + rng.next_below(6);
    for (size_t k = 0; k < len; ++k) {
      text += filler[rng.next_below(7)];
      text += ' ';
    }
    const char** markers = useful ? useful_markers : useless_markers;
    text += markers[rng.next_below(4)];
    out.emplace_back(text, useful ? UsefulnessLabel::Useful : UsefulnessLabel::NotUseful);
  }
  return out;
}

}  // namespace

TEST_CASE("normalize_usefulness rescales to [0,10]") {
  auto out = normalize_usefulness({rated(0), rated(5), rated(10)});
  CHECK(*out[0].useful_normalized == 0.0);
  CHECK(*out[1].useful_normalized == 5.0);
  CHECK(*out[2].useful_normalized == 10.0);
}

TEST_CASE("normalize_usefulness degenerate range maps to the maximum") {
  auto out = normalize_usefulness({rated(2), rated(2), unrated(), rated(2)});
  CHECK(*out[0].useful_normalized == 10.0);
  CHECK(*out[3].useful_normalized == 10.0);
  CHECK_FALSE(out[2].useful_normalized.has_value());
}

TEST_CASE("normalize_usefulness requires at least one rated review") {
  CHECK_THROWS_AS(normalize_usefulness({unrated(), unrated()}), ValidationError);
}

TEST_CASE("binarization boundary") {
  corpus::Review r;
  r.text = "x";
  r.useful_normalized = 4.9;
  CHECK(binarize_usefulness(r) == UsefulnessLabel::NotUseful);
  r.useful_normalized = 5.0;
  CHECK(binarize_usefulness(r) == UsefulnessLabel::Useful);
  r.useful_normalized.reset();
  CHECK_FALSE(binarize_usefulness(r).has_value());
}

TEST_CASE("binarize after normalize never labels an unrated review") {
  auto out = normalize_usefulness({rated(1), unrated(), rated(9), unrated()});
  for (const corpus::Review& r : out) {
    if (!r.useful_raw) CHECK_FALSE(binarize_usefulness(r).has_value());
  }
}

TEST_CASE("featurize produces L2-normalized TF-IDF, dropping OOV terms") {
  const FeatureVocabulary vocab = FeatureVocabulary::build({"alpha beta", "alpha gamma"}, 100);

  CHECK(featurize("", vocab).entries.empty());
  CHECK(featurize("unseen words only", vocab).entries.empty());

  const FeatureVector single = featurize("alpha", vocab);
  REQUIRE(single.entries.size() == 1);
  CHECK(single.entries[0].second == doctest::Approx(1.0).epsilon(1e-12));

  // two distinct unigrams with one occurrence each and equal IDF
  const FeatureVector pair = featurize("beta gamma", vocab);
  REQUIRE(pair.entries.size() == 2);
  CHECK(pair.entries[0].second == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(pair.entries[1].second == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("feature space includes bigrams and honors the cap") {
  const FeatureVocabulary vocab = FeatureVocabulary::build({"a b c", "a b d"}, 100);
  CHECK(vocab.id_of("a b").has_value());  // bigram present
  CHECK(vocab.id_of("a").has_value());

  const FeatureVocabulary capped = FeatureVocabulary::build({"a b c", "a b d"}, 2);
  CHECK(capped.size() == 2);
  // a and "a b" have document frequency 2; ties break by first occurrence
  CHECK(capped.id_of("a") == 0);
  CHECK(capped.id_of("b") == 1);
}

TEST_CASE("train_analyzer separates two separable points") {
  const FeatureVocabulary vocab = FeatureVocabulary::build({"good", "bad"}, 10);
  std::vector<std::pair<FeatureVector, UsefulnessLabel>> data = {
      {featurize("good", vocab), UsefulnessLabel::Useful},
      {featurize("bad", vocab), UsefulnessLabel::NotUseful},
  };
  const LinearClassifier clf = train_analyzer(data, {});
  CHECK(clf.trained);
  CHECK(clf.margin(data[0].first) > 0.0);
  CHECK(clf.margin(data[1].first) < 0.0);
}

TEST_CASE("train_analyzer rejects single-class input") {
  const FeatureVocabulary vocab = FeatureVocabulary::build({"good"}, 10);
  std::vector<std::pair<FeatureVector, UsefulnessLabel>> data = {
      {featurize("good", vocab), UsefulnessLabel::Useful},
  };
  CHECK_THROWS_AS(train_analyzer(data, {}), ValidationError);
}

TEST_CASE("duplicating the dataset keeps the decision pattern") {
  const FeatureVocabulary vocab =
      FeatureVocabulary::build({"good fine", "bad poor", "good", "poor"}, 50);
  std::vector<std::pair<FeatureVector, UsefulnessLabel>> data = {
      {featurize("good fine", vocab), UsefulnessLabel::Useful},
      {featurize("good", vocab), UsefulnessLabel::Useful},
      {featurize("bad poor", vocab), UsefulnessLabel::NotUseful},
      {featurize("poor", vocab), UsefulnessLabel::NotUseful},
  };
  auto doubled = data;
  doubled.insert(doubled.end(), data.begin(), data.end());

  const LinearClassifier a = train_analyzer(data, {});
  const LinearClassifier b = train_analyzer(doubled, {});
  for (const auto& [x, label] : data)
    CHECK((a.margin(x) >= 0.0) == (b.margin(x) >= 0.0));
}

TEST_CASE("hinge objective is non-increasing across epochs on fixture data") {
  const auto corpus = marker_corpus(60, 4);
  std::vector<std::string> texts;
  for (const auto& [text, label] : corpus) texts.push_back(text);
  const FeatureVocabulary vocab = FeatureVocabulary::build(texts, 1000);

  std::vector<std::pair<FeatureVector, UsefulnessLabel>> data;
  for (const auto& [text, label] : corpus) data.emplace_back(featurize(text, vocab), label);

  AnalyzerTrainConfig cfg;
  cfg.step_size = 0.25;
  cfg.regularization = 1e-4;
  double prev = hinge_objective(LinearClassifier{std::vector<double>(vocab.size(), 0.0), 0.0, true},
                                data, cfg.regularization);
  for (size_t epochs = 1; epochs <= 8; ++epochs) {
    AnalyzerTrainConfig c = cfg;
    c.epochs = epochs;
    const LinearClassifier clf = train_analyzer(data, c);
    const double loss = hinge_objective(clf, data, cfg.regularization);
    CHECK(loss <= prev + 1e-9);
    prev = loss;
  }
}

TEST_CASE("held-out accuracy reaches 0.9 on the marker corpus") {
  const auto train_set = marker_corpus(200, 11);
  const auto held_out = marker_corpus(100, 12);

  std::vector<std::string> texts;
  for (const auto& [text, label] : train_set) texts.push_back(text);
  const FeatureVocabulary vocab = FeatureVocabulary::build(texts, 20000);

  std::vector<std::pair<FeatureVector, UsefulnessLabel>> data;
  for (const auto& [text, label] : train_set) data.emplace_back(featurize(text, vocab), label);
  UsefulnessAnalyzer analyzer;
  analyzer.features = vocab;
  analyzer.classifier = train_analyzer(data, {});

  size_t correct = 0;
  for (const auto& [text, label] : held_out)
    if (classify(analyzer, text).first == label) ++correct;
  CHECK(static_cast<double>(correct) / held_out.size() >= 0.9);
}

TEST_CASE("classify is deterministic, margin sign agrees with the label") {
  const auto train_set = marker_corpus(80, 21);
  std::vector<std::string> texts;
  for (const auto& [text, label] : train_set) texts.push_back(text);
  UsefulnessAnalyzer analyzer;
  analyzer.features = FeatureVocabulary::build(texts, 20000);
  std::vector<std::pair<FeatureVector, UsefulnessLabel>> data;
  for (const auto& [text, label] : train_set)
    data.emplace_back(featurize(text, analyzer.features), label);
  analyzer.classifier = train_analyzer(data, {});

  for (const char* probe : {"excellent helpful", "spam noise", "the food was"}) {
    const auto [label1, margin1] = classify(analyzer, probe);
    const auto [label2, margin2] = classify(analyzer, probe);
    CHECK(label1 == label2);
    CHECK(margin1 == margin2);
    CHECK((margin1 >= 0.0) == (label1 == UsefulnessLabel::Useful));
  }

  // zero feature vector: the bias alone decides
  const auto [label, margin] = classify(analyzer, "zzzz qqqq");
  CHECK(margin == analyzer.classifier.bias);
}

TEST_CASE("analyzer checkpoints round-trip") {
  UsefulnessAnalyzer analyzer;
  analyzer.features = FeatureVocabulary::build({"good stuff", "bad stuff"}, 100);
  std::vector<std::pair<FeatureVector, UsefulnessLabel>> data = {
      {featurize("good stuff", analyzer.features), UsefulnessLabel::Useful},
      {featurize("bad stuff", analyzer.features), UsefulnessLabel::NotUseful},
  };
  analyzer.classifier = train_analyzer(data, {});

  const std::string path =
      (std::filesystem::temp_directory_path() / "rldialog_analyzer_test.bin").string();
  analyzer.save(path);
  const UsefulnessAnalyzer loaded = UsefulnessAnalyzer::load(path);
  CHECK(loaded.classifier.weights == analyzer.classifier.weights);
  CHECK(loaded.classifier.bias == analyzer.classifier.bias);
  CHECK(loaded.features.features() == analyzer.features.features());
  CHECK(classify(loaded, "good stuff").first == UsefulnessLabel::Useful);
  std::remove(path.c_str());
}
