#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace rldialog::corpus {

using TokenId = int32_t;
using TokenSeq = std::vector<TokenId>;

// Reserved ids. Vocabulary files list surface tokens from id 4 upward; the
// specials are implicit.
constexpr TokenId kPadId = 0;
constexpr TokenId kUnkId = 1;
constexpr TokenId kSosId = 2;
constexpr TokenId kEosId = 3;
constexpr size_t kNumSpecials = 4;

constexpr size_t kDefaultMaxVocab = 12000;
constexpr size_t kDefaultMaxLen = 20;

/// Text normalization applied to every corpus line and to every prompt at
/// generation time: HTML entities resolved, lowercased, contractions expanded
/// through the bundled table, runs of identical end punctuation compressed to
/// one symbol, whitespace collapsed. Idempotent.
std::string preprocess_text(const std::string& raw);

/// Splits preprocessed text into tokens: whitespace separation with
/// punctuation characters (. , ! ? ; : " ( )) peeled off as their own tokens.
/// Apostrophes stay attached so possessive forms survive intact.
std::vector<std::string> tokenize(const std::string& text);

// Ordered token<->id bijection with the four reserved specials in ids 0-3.
class Vocabulary {
 public:
  Vocabulary();

  // Appends a surface token with the next free id. Returns its id.
  TokenId add(const std::string& token);

  // Id of a surface form; unknown forms map to the UNK id.
  TokenId id_of(const std::string& token) const;
  const std::string& token_of(TokenId id) const;
  bool contains(const std::string& token) const;

  size_t size() const { return tokens_.size(); }
  size_t max_size() const { return max_size_; }
  void set_max_size(size_t m) { max_size_ = m; }

  // All surface tokens in id order, specials included.
  const std::vector<std::string>& tokens() const { return tokens_; }

  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

 private:
  std::vector<std::string> tokens_;  // id order; the map is lookup only
  std::unordered_map<std::string, TokenId> index_;
  size_t max_size_ = kDefaultMaxVocab;
};

/// Most frequent `max_size` tokens across `texts` plus the four specials.
/// Frequency ties break by first occurrence in the scan, so the result is a
/// deterministic function of the input order. Throws ValidationError on an
/// empty corpus.
Vocabulary build_vocabulary(const std::vector<std::string>& texts, size_t max_size);

/// Token ids for preprocessed text: tokenize, map (OOV -> UNK), truncate to
/// max_len. No SOS/EOS framing; scoring code frames internally.
TokenSeq encode(const std::string& text, const Vocabulary& vocab, size_t max_len);

/// Surface tokens for an id sequence.
std::vector<std::string> decode_tokens(const TokenSeq& ids, const Vocabulary& vocab);

/// Rendered text: tokens joined by single spaces, PAD/SOS/EOS dropped, UNK
/// rendered as its reserved surface form.
std::string decode_text(const TokenSeq& ids, const Vocabulary& vocab);

struct DialogPair {
  TokenSeq source;      // empty until encode_split runs
  TokenSeq target;
  std::string raw_source;  // normalized text
  std::string raw_target;
};

struct Review {
  std::string text;  // normalized
  std::optional<int64_t> useful_raw;
  std::optional<double> useful_normalized;
};

struct CorpusSplit {
  std::vector<DialogPair> train;
  std::vector<DialogPair> validation;
  std::vector<DialogPair> test;
};

struct SplitRatios {
  // Assignment is striped by line index modulo 10: indices ending in 8 go to
  // validation, 9 to test, everything else to train (an 80/10/10 layout that
  // still covers all splits on tiny corpora).
  int validation_stripe = 8;
  int test_stripe = 9;
};

/// Reads `source<TAB>target` lines, normalizes both sides, splits by stripe.
/// A line without a tab is a hard error naming the line number; a line whose
/// side normalizes to nothing is skipped with a note on stderr.
CorpusSplit load_dialog_corpus(const std::string& path, SplitRatios ratios = {});

/// Reads `useful_raw<TAB>text` lines; empty first field means no rating.
std::vector<Review> load_review_corpus(const std::string& path);

/// Fills in token ids on all three partitions.
void encode_split(CorpusSplit& split, const Vocabulary& vocab, size_t max_len);

/// Drops training pairs whose encoded target contains UNK. Validation and
/// test are left untouched.
CorpusSplit filter_training_split(const CorpusSplit& split, const Vocabulary& vocab);

}  // namespace rldialog::corpus
