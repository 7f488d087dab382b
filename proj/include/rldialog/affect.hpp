#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace rldialog::affect {

// Valence / arousal / dominance triple on the lexicon's 1-9 scale.
struct AffectVector {
  double valence = 5.0;
  double arousal = 1.0;
  double dominance = 5.0;
};

// Words missing from the lexicon carry this vector.
constexpr AffectVector neutral_affect() { return AffectVector{5.0, 1.0, 5.0}; }

// Immutable after load; lookups never fail (neutral fallback).
class AffectLexicon {
 public:
  AffectLexicon() = default;

  void insert(const std::string& word, AffectVector v);
  bool contains(const std::string& word) const;
  size_t size() const { return entries_.size(); }

  /// CSV with a `word,valence,arousal,dominance` header row; component
  /// values outside [1,9] are rejected with the offending line number.
  static AffectLexicon load_csv(const std::string& path);

  const std::unordered_map<std::string, AffectVector>& entries() const { return entries_; }

 private:
  std::unordered_map<std::string, AffectVector> entries_;
};

/// Lexicon entry for a preprocessed token, neutral (5,1,5) when absent.
/// Empty words are a caller bug and throw.
AffectVector lookup_affect(const std::string& word, const AffectLexicon& lexicon);

struct AugmentedEmbedding {
  std::vector<double> base;
  AffectVector affect;
  std::vector<double> combined;  // base ++ (V, A, D); dimension base.size() + 3
};

/// Appends the word's VAD triple to the base vector. With `rescale` the
/// appended components are mapped from [1,9] to [-1,1]; the stored affect
/// field keeps the raw lexicon values either way.
AugmentedEmbedding augment_embedding(const std::vector<double>& base, const std::string& word,
                                     const AffectLexicon& lexicon, bool rescale = false);

/// Componentwise mean of the tokens' affect vectors.
AffectVector w2av_mean(const std::vector<std::string>& tokens, const AffectLexicon& lexicon);

/// Euclidean distance between two affect vectors.
double affect_distance(const AffectVector& a, const AffectVector& b);

}  // namespace rldialog::affect
