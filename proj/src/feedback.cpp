#include "rldialog/feedback.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include "binio.hpp"
#include "rldialog/errors.hpp"
#include "rldialog/rng.hpp"

namespace rldialog::feedback {

std::vector<corpus::Review> normalize_usefulness(std::vector<corpus::Review> reviews) {
  int64_t lo = 0, hi = 0;
  bool any = false;
  for (const corpus::Review& r : reviews) {
    if (!r.useful_raw) continue;
    if (!any) {
      lo = hi = *r.useful_raw;
      any = true;
    } else {
      lo = std::min(lo, *r.useful_raw);
      hi = std::max(hi, *r.useful_raw);
    }
  }
  if (!any) throw ValidationError("normalize_usefulness: no rated reviews");
  for (corpus::Review& r : reviews) {
    if (!r.useful_raw) continue;
    if (hi == lo)
      r.useful_normalized = 10.0;  // all counts equal the maximum
    else
      r.useful_normalized =
          10.0 * static_cast<double>(*r.useful_raw - lo) / static_cast<double>(hi - lo);
  }
  return reviews;
}

std::optional<UsefulnessLabel> binarize_usefulness(const corpus::Review& review) {
  if (!review.useful_normalized) return std::nullopt;
  return *review.useful_normalized < 5.0 ? UsefulnessLabel::NotUseful : UsefulnessLabel::Useful;
}

namespace {

std::vector<std::string> feature_terms(const std::string& text) {
  const std::vector<std::string> toks = corpus::tokenize(text);
  std::vector<std::string> terms = toks;
  for (size_t i = 0; i + 1 < toks.size(); ++i) terms.push_back(toks[i] + " " + toks[i + 1]);
  return terms;
}

}  // namespace

FeatureVocabulary FeatureVocabulary::build(const std::vector<std::string>& texts,
                                           size_t max_features) {
  if (max_features < 1) throw ValidationError("max_features must be >= 1");
  struct Stat {
    int64_t df = 0;
    size_t first_seen = 0;
  };
  std::unordered_map<std::string, Stat> stats;
  std::vector<std::string> order;  // global first-seen order for tie-breaking
  size_t position = 0;
  for (const std::string& text : texts) {
    std::unordered_set<std::string> seen_in_doc;
    for (const std::string& t : feature_terms(text)) {
      auto [it, inserted] = stats.try_emplace(t);
      if (inserted) {
        it->second.first_seen = position;
        order.push_back(t);
      }
      ++position;
      if (seen_in_doc.insert(t).second) ++it->second.df;
    }
  }

  std::sort(order.begin(), order.end(), [&](const std::string& a, const std::string& b) {
    const Stat& sa = stats.at(a);
    const Stat& sb = stats.at(b);
    if (sa.df != sb.df) return sa.df > sb.df;
    return sa.first_seen < sb.first_seen;
  });
  if (order.size() > max_features) order.resize(max_features);

  FeatureVocabulary vocab;
  const double n_docs = static_cast<double>(texts.size());
  for (const std::string& t : order) {
    vocab.index_.emplace(t, static_cast<uint32_t>(vocab.features_.size()));
    vocab.features_.push_back(t);
    const double df = static_cast<double>(stats.at(t).df);
    vocab.idf_.push_back(std::log((1.0 + n_docs) / (1.0 + df)) + 1.0);
  }
  return vocab;
}

std::optional<uint32_t> FeatureVocabulary::id_of(const std::string& feature) const {
  auto it = index_.find(feature);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void FeatureVocabulary::set(std::vector<std::string> features, std::vector<double> idf) {
  if (features.size() != idf.size())
    throw ValidationError("feature/idf length mismatch in analyzer data");
  features_ = std::move(features);
  idf_ = std::move(idf);
  index_.clear();
  for (size_t i = 0; i < features_.size(); ++i)
    index_.emplace(features_[i], static_cast<uint32_t>(i));
}

FeatureVector featurize(const std::string& text, const FeatureVocabulary& vocab) {
  std::unordered_map<uint32_t, double> counts;
  for (const std::string& term : feature_terms(text)) {
    if (const auto id = vocab.id_of(term)) counts[*id] += 1.0;
  }
  FeatureVector out;
  out.entries.reserve(counts.size());
  for (const auto& [id, tf] : counts) out.entries.emplace_back(id, tf * vocab.idf()[id]);
  std::sort(out.entries.begin(), out.entries.end());
  double norm = 0.0;
  for (const auto& [id, w] : out.entries) norm += w * w;
  if (norm > 0.0) {
    const double inv = 1.0 / std::sqrt(norm);
    for (auto& [id, w] : out.entries) w *= inv;
  }
  return out;
}

double LinearClassifier::margin(const FeatureVector& x) const {
  double m = bias;
  for (const auto& [id, w] : x.entries) {
    if (id < weights.size()) m += weights[id] * w;
  }
  return m;
}

LinearClassifier train_analyzer(
    const std::vector<std::pair<FeatureVector, UsefulnessLabel>>& labeled,
    const AnalyzerTrainConfig& cfg) {
  bool has_useful = false, has_not = false;
  uint32_t dim = 0;
  for (const auto& [x, y] : labeled) {
    (y == UsefulnessLabel::Useful ? has_useful : has_not) = true;
    for (const auto& [id, w] : x.entries) dim = std::max(dim, id + 1);
  }
  if (!(has_useful && has_not))
    throw ValidationError("train_analyzer: both classes must be present");

  LinearClassifier clf;
  clf.weights.assign(dim, 0.0);
  Rng rng(cfg.seed);
  std::vector<size_t> order(labeled.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    const double eta = cfg.step_size / (1.0 + static_cast<double>(epoch));
    for (size_t idx : order) {
      const auto& [x, label] = labeled[idx];
      const double y = label == UsefulnessLabel::Useful ? 1.0 : -1.0;
      const double m = clf.margin(x) * y;
      // L2 shrink, then the hinge subgradient when the margin is violated.
      const double shrink = 1.0 - eta * cfg.regularization;
      for (double& w : clf.weights) w *= shrink;
      if (m < 1.0) {
        for (const auto& [id, w] : x.entries) clf.weights[id] += eta * y * w;
        clf.bias += eta * y;
      }
    }
  }
  clf.trained = true;
  return clf;
}

double hinge_objective(const LinearClassifier& clf,
                       const std::vector<std::pair<FeatureVector, UsefulnessLabel>>& labeled,
                       double regularization) {
  double loss = 0.0;
  for (const auto& [x, label] : labeled) {
    const double y = label == UsefulnessLabel::Useful ? 1.0 : -1.0;
    loss += std::max(0.0, 1.0 - y * clf.margin(x));
  }
  loss /= static_cast<double>(labeled.size());
  double w2 = 0.0;
  for (double w : clf.weights) w2 += w * w;
  return loss + 0.5 * regularization * w2;
}

std::pair<UsefulnessLabel, double> classify(const UsefulnessAnalyzer& analyzer,
                                            const std::string& text) {
  if (!analyzer.classifier.trained) throw ValidationError("classify: analyzer not trained");
  const FeatureVector x = featurize(text, analyzer.features);
  const double m = analyzer.classifier.margin(x);
  return {m >= 0.0 ? UsefulnessLabel::Useful : UsefulnessLabel::NotUseful, m};
}

namespace {
constexpr char kAnalyzerMagic[9] = "RLDLGANL";
constexpr uint32_t kAnalyzerVersion = 1;
}  // namespace

void UsefulnessAnalyzer::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write analyzer checkpoint: " + path);
  out.write(kAnalyzerMagic, 8);
  binio::write_u32(out, kAnalyzerVersion);
  binio::write_u64(out, features.size());
  for (const std::string& f : features.features()) binio::write_string(out, f);
  for (double v : features.idf()) binio::write_f64(out, v);
  binio::write_u64(out, classifier.weights.size());
  for (double w : classifier.weights) binio::write_f64(out, w);
  binio::write_f64(out, classifier.bias);
  binio::write_u8(out, classifier.trained ? 1 : 0);
  if (!out) throw IoError("failed writing analyzer checkpoint: " + path);
}

UsefulnessAnalyzer UsefulnessAnalyzer::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open analyzer checkpoint: " + path);
  char magic[8];
  binio::read_bytes(in, magic, 8, "magic");
  if (std::string(magic, 8) != std::string(kAnalyzerMagic, 8))
    throw IoError("bad magic in analyzer checkpoint: " + path);
  const uint32_t version = binio::read_u32(in, "version");
  if (version != kAnalyzerVersion)
    throw IoError("unsupported analyzer checkpoint version " + std::to_string(version));
  const uint64_t n = binio::read_u64(in, "feature count");
  std::vector<std::string> features(n);
  for (auto& f : features) f = binio::read_string(in, "feature");
  std::vector<double> idf(n);
  for (auto& v : idf) v = binio::read_f64(in, "idf");
  const uint64_t wn = binio::read_u64(in, "weight count");
  UsefulnessAnalyzer analyzer;
  analyzer.features.set(std::move(features), std::move(idf));
  analyzer.classifier.weights.resize(wn);
  for (auto& w : analyzer.classifier.weights) w = binio::read_f64(in, "weight");
  analyzer.classifier.bias = binio::read_f64(in, "bias");
  analyzer.classifier.trained = binio::read_u8(in, "trained flag") != 0;
  return analyzer;
}

}  // namespace rldialog::feedback
