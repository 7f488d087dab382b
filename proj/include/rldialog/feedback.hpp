#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rldialog/corpus.hpp"

namespace rldialog::feedback {

enum class UsefulnessLabel { Useful, NotUseful };

/// Min-max rescale of raw vote counts to [0,10] across the rated reviews.
/// Unrated reviews pass through with the score still absent. When every
/// rated review carries the same count the range is degenerate and they all
/// map to 10 (each equals the maximum). Throws when nothing is rated.
std::vector<corpus::Review> normalize_usefulness(std::vector<corpus::Review> reviews);

/// score < 5 -> NotUseful, score >= 5 -> Useful, absent -> nullopt
/// (excluded from analyzer training entirely).
std::optional<UsefulnessLabel> binarize_usefulness(const corpus::Review& review);

// Sparse TF-IDF vector, entries sorted by feature id, L2-normalized.
struct FeatureVector {
  std::vector<std::pair<uint32_t, double>> entries;
};

// Unigram + adjacent-bigram feature space capped by document frequency.
class FeatureVocabulary {
 public:
  static FeatureVocabulary build(const std::vector<std::string>& texts,
                                 size_t max_features = 20000);

  std::optional<uint32_t> id_of(const std::string& feature) const;
  size_t size() const { return features_.size(); }
  const std::vector<std::string>& features() const { return features_; }
  const std::vector<double>& idf() const { return idf_; }

  // used by checkpoint loading
  void set(std::vector<std::string> features, std::vector<double> idf);

 private:
  std::vector<std::string> features_;  // id order
  std::vector<double> idf_;
  std::unordered_map<std::string, uint32_t> index_;
};

/// L2-normalized TF-IDF over the feature vocabulary; out-of-vocabulary terms
/// drop out; empty text gives the zero vector.
FeatureVector featurize(const std::string& text, const FeatureVocabulary& vocab);

// Maximum-margin linear separator: decision = sign(w.x + b).
struct LinearClassifier {
  std::vector<double> weights;
  double bias = 0.0;
  bool trained = false;

  double margin(const FeatureVector& x) const;
};

struct AnalyzerTrainConfig {
  size_t epochs = 40;
  double step_size = 0.5;
  double regularization = 1e-4;
  uint64_t seed = 7;
};

/// L2-regularized hinge loss minimized by seeded stochastic subgradient
/// descent with a 1/(1+epoch) step decay. Requires both classes present.
LinearClassifier train_analyzer(
    const std::vector<std::pair<FeatureVector, UsefulnessLabel>>& labeled,
    const AnalyzerTrainConfig& cfg);

/// Mean hinge loss plus the L2 penalty term, for monitoring convergence.
double hinge_objective(const LinearClassifier& clf,
                       const std::vector<std::pair<FeatureVector, UsefulnessLabel>>& labeled,
                       double regularization);

// The external reward analyzer: feature space plus trained separator, the
// unit that gets checkpointed and queried during RL fine-tuning.
struct UsefulnessAnalyzer {
  FeatureVocabulary features;
  LinearClassifier classifier;

  void save(const std::string& path) const;
  static UsefulnessAnalyzer load(const std::string& path);
};

/// Label and signed margin for arbitrary text. Thread-safe on a trained
/// analyzer; RL fine-tuning calls this once per generated sample.
std::pair<UsefulnessLabel, double> classify(const UsefulnessAnalyzer& analyzer,
                                            const std::string& text);

}  // namespace rldialog::feedback
