#include "rldialog/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>

#include "rldialog/errors.hpp"

namespace rldialog::corpus {

namespace {

const char* kSpecialSurfaces[kNumSpecials] = {"<pad>", "<unk>", "<sos>", "<eos>"};

bool is_special_surface(const std::string& t) {
  for (const char* s : kSpecialSurfaces)
    if (t == s) return true;
  return false;
}

// Punctuation peeled into standalone tokens. Apostrophes and hyphens stay
// attached to their word.
bool is_split_punct(char c) {
  switch (c) {
    case '.':
    case ',':
    case '!':
    case '?':
    case ';':
    case ':':
    case '"':
    case '(':
    case ')':
      return true;
    default:
      return false;
  }
}

bool is_end_punct(char c) { return c == '.' || c == '!' || c == '?'; }

// The bundled contraction table. Expansions never contain a contraction, so
// a second pass is a no-op. Possessive/ambiguous 's and 'd are left alone.
const std::unordered_map<std::string, std::string>& contraction_table() {
  static const std::unordered_map<std::string, std::string> table = {
      {"can't", "cannot"},        {"won't", "will not"},
      {"shan't", "shall not"},    {"ain't", "is not"},
      {"don't", "do not"},        {"doesn't", "does not"},
      {"didn't", "did not"},      {"isn't", "is not"},
      {"aren't", "are not"},      {"wasn't", "was not"},
      {"weren't", "were not"},    {"haven't", "have not"},
      {"hasn't", "has not"},      {"hadn't", "had not"},
      {"wouldn't", "would not"},  {"couldn't", "could not"},
      {"shouldn't", "should not"},{"mustn't", "must not"},
      {"needn't", "need not"},    {"i'm", "i am"},
      {"i'll", "i will"},         {"you'll", "you will"},
      {"he'll", "he will"},       {"she'll", "she will"},
      {"we'll", "we will"},       {"they'll", "they will"},
      {"it'll", "it will"},       {"you're", "you are"},
      {"we're", "we are"},        {"they're", "they are"},
      {"i've", "i have"},         {"you've", "you have"},
      {"we've", "we have"},       {"they've", "they have"},
      {"gonna", "going to"},      {"wanna", "want to"},
      {"gotta", "got to"},        {"&", "and"},
  };
  return table;
}

// Suffix fallbacks for forms the table does not list explicitly.
std::string expand_contraction(const std::string& word) {
  const auto& table = contraction_table();
  auto it = table.find(word);
  if (it != table.end()) return it->second;
  const auto ends_with = [&](const char* suf, size_t n) {
    return word.size() > n && word.compare(word.size() - n, n, suf) == 0;
  };
  if (ends_with("n't", 3)) return word.substr(0, word.size() - 3) + " not";
  if (ends_with("'re", 3)) return word.substr(0, word.size() - 3) + " are";
  if (ends_with("'ll", 3)) return word.substr(0, word.size() - 3) + " will";
  if (ends_with("'ve", 3)) return word.substr(0, word.size() - 3) + " have";
  return word;
}

// HTML entities either carry text content (&amp; reads "and", &#39; is an
// apostrophe) or are markup noise and get dropped.
std::string resolve_entities(const std::string& in) {
  std::string out;
  out.reserve(in.size());
  size_t i = 0;
  while (i < in.size()) {
    if (in[i] != '&') {
      out += in[i++];
      continue;
    }
    const size_t semi = in.find(';', i + 1);
    if (semi == std::string::npos || semi - i > 9) {
      out += in[i++];
      continue;
    }
    const std::string body = in.substr(i + 1, semi - i - 1);
    bool entity_like = !body.empty();
    for (char c : body) {
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '#')) entity_like = false;
    }
    if (!entity_like) {
      out += in[i++];
      continue;
    }
    if (body == "amp" || body == "#38")
      out += " and ";
    else if (body == "#39" || body == "apos" || body == "rsquo" || body == "lsquo")
      out += '\'';
    else
      out += ' ';  // lt, gt, quot, nbsp, numeric refs, ...
    i = semi + 1;
  }
  return out;
}

// UTF-8 curly quotes: apostrophes become ASCII so the contraction table sees
// them; double quotes become plain '"'.
std::string normalize_quotes(const std::string& in) {
  std::string out;
  out.reserve(in.size());
  size_t i = 0;
  while (i < in.size()) {
    if (i + 2 < in.size() && static_cast<unsigned char>(in[i]) == 0xE2 &&
        static_cast<unsigned char>(in[i + 1]) == 0x80) {
      const unsigned char b = static_cast<unsigned char>(in[i + 2]);
      if (b == 0x98 || b == 0x99) {  // U+2018 / U+2019
        out += '\'';
        i += 3;
        continue;
      }
      if (b == 0x9C || b == 0x9D) {  // U+201C / U+201D
        out += '"';
        i += 3;
        continue;
      }
    }
    if (in[i] == '`') {
      out += '\'';
      i += 1;
      continue;
    }
    out += in[i++];
  }
  return out;
}

std::string compress_end_punct_runs(const std::string& in) {
  std::string out;
  out.reserve(in.size());
  for (size_t i = 0; i < in.size(); ++i) {
    if (is_end_punct(in[i]) && !out.empty() && out.back() == in[i]) continue;
    out += in[i];
  }
  return out;
}

std::vector<std::string> whitespace_split(const std::string& text) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) parts.push_back(std::move(cur)), cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) parts.push_back(std::move(cur));
  return parts;
}

std::vector<std::string> split_fields(const std::string& line) {
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
  return fields;
}

}  // namespace

std::string preprocess_text(const std::string& raw) {
  std::string s = resolve_entities(raw);
  s = normalize_quotes(s);
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  s = compress_end_punct_runs(s);

  // Contractions are expanded per whitespace token with any surrounding
  // punctuation carried along; rejoining collapses whitespace.
  std::string out;
  for (const std::string& part : whitespace_split(s)) {
    size_t lead = 0;
    while (lead < part.size() && is_split_punct(part[lead])) ++lead;
    size_t tail = part.size();
    while (tail > lead && is_split_punct(part[tail - 1])) --tail;
    const std::string core = part.substr(lead, tail - lead);
    std::string expanded = part.substr(0, lead);
    expanded += core.empty() ? "" : expand_contraction(core);
    expanded += part.substr(tail);
    if (!out.empty()) out += ' ';
    out += expanded;
  }
  return out;
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  for (const std::string& part : whitespace_split(text)) {
    size_t lead = 0;
    while (lead < part.size() && is_split_punct(part[lead])) ++lead;
    size_t tail = part.size();
    while (tail > lead && is_split_punct(part[tail - 1])) --tail;
    for (size_t i = 0; i < lead; ++i) tokens.push_back(std::string(1, part[i]));
    if (tail > lead) tokens.push_back(part.substr(lead, tail - lead));
    for (size_t i = tail; i < part.size(); ++i) tokens.push_back(std::string(1, part[i]));
  }
  return tokens;
}

Vocabulary::Vocabulary() {
  for (const char* s : kSpecialSurfaces) {
    index_.emplace(s, static_cast<TokenId>(tokens_.size()));
    tokens_.emplace_back(s);
  }
}

TokenId Vocabulary::add(const std::string& token) {
  if (token.empty()) throw ValidationError("cannot add empty token to vocabulary");
  if (index_.count(token)) throw ValidationError("duplicate vocabulary token: " + token);
  if (tokens_.size() >= max_size_ + kNumSpecials)
    throw ValidationError("vocabulary full (max_size=" + std::to_string(max_size_) + ")");
  const TokenId id = static_cast<TokenId>(tokens_.size());
  index_.emplace(token, id);
  tokens_.push_back(token);
  return id;
}

TokenId Vocabulary::id_of(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::token_of(TokenId id) const {
  if (id < 0 || static_cast<size_t>(id) >= tokens_.size())
    throw ValidationError("token id out of range: " + std::to_string(id));
  return tokens_[static_cast<size_t>(id)];
}

bool Vocabulary::contains(const std::string& token) const { return index_.count(token) > 0; }

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write vocabulary file: " + path);
  for (size_t i = kNumSpecials; i < tokens_.size(); ++i) out << tokens_[i] << '\n';
  if (!out) throw IoError("failed writing vocabulary file: " + path);
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open vocabulary file: " + path);
  std::vector<std::string> lines;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty())
      throw ValidationError("vocabulary file " + path + " line " + std::to_string(lineno) +
                            ": empty token");
    lines.push_back(line);
  }
  Vocabulary vocab;
  vocab.set_max_size(std::max(kDefaultMaxVocab, lines.size()));
  for (const std::string& tok : lines) vocab.add(tok);
  return vocab;
}

Vocabulary build_vocabulary(const std::vector<std::string>& texts, size_t max_size) {
  if (max_size < 1) throw ValidationError("max_size must be >= 1");
  struct Entry {
    int64_t count = 0;
    size_t first_seen = 0;
  };
  std::unordered_map<std::string, Entry> counts;
  std::vector<std::string> order;  // first-occurrence order
  size_t position = 0;
  for (const std::string& text : texts) {
    for (std::string& tok : tokenize(text)) {
      if (is_special_surface(tok)) continue;
      auto [it, inserted] = counts.try_emplace(tok);
      if (inserted) {
        it->second.first_seen = position;
        order.push_back(tok);
      }
      ++it->second.count;
      ++position;
    }
  }
  if (order.empty()) throw ValidationError("empty corpus");

  std::sort(order.begin(), order.end(), [&](const std::string& a, const std::string& b) {
    const Entry& ea = counts.at(a);
    const Entry& eb = counts.at(b);
    if (ea.count != eb.count) return ea.count > eb.count;
    return ea.first_seen < eb.first_seen;
  });

  Vocabulary vocab;
  vocab.set_max_size(max_size);
  const size_t keep = std::min(max_size, order.size());
  for (size_t i = 0; i < keep; ++i) vocab.add(order[i]);
  return vocab;
}

TokenSeq encode(const std::string& text, const Vocabulary& vocab, size_t max_len) {
  TokenSeq ids;
  for (const std::string& tok : tokenize(text)) {
    if (ids.size() >= max_len) break;
    ids.push_back(vocab.id_of(tok));
  }
  return ids;
}

std::vector<std::string> decode_tokens(const TokenSeq& ids, const Vocabulary& vocab) {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (TokenId id : ids) out.push_back(vocab.token_of(id));
  return out;
}

std::string decode_text(const TokenSeq& ids, const Vocabulary& vocab) {
  std::string out;
  for (TokenId id : ids) {
    if (id == kPadId || id == kSosId || id == kEosId) continue;
    if (!out.empty()) out += ' ';
    out += vocab.token_of(id);
  }
  return out;
}

CorpusSplit load_dialog_corpus(const std::string& path, SplitRatios ratios) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dialog corpus: " + path);
  CorpusSplit split;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != 2)
      throw ValidationError(path + " line " + std::to_string(lineno) +
                            ": expected source<TAB>target, got " +
                            std::to_string(fields.size()) + " fields");
    DialogPair pair;
    pair.raw_source = preprocess_text(fields[0]);
    pair.raw_target = preprocess_text(fields[1]);
    if (pair.raw_source.empty() || pair.raw_target.empty()) {
      std::cerr << "note: " << path << " line " << lineno
                << ": side empty after normalization, skipped\n";
      continue;
    }
    const int stripe = static_cast<int>((lineno - 1) % 10);
    if (stripe == ratios.validation_stripe)
      split.validation.push_back(std::move(pair));
    else if (stripe == ratios.test_stripe)
      split.test.push_back(std::move(pair));
    else
      split.train.push_back(std::move(pair));
  }
  return split;
}

std::vector<Review> load_review_corpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open review corpus: " + path);
  std::vector<Review> reviews;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != 2)
      throw ValidationError(path + " line " + std::to_string(lineno) +
                            ": expected useful_raw<TAB>text, got " +
                            std::to_string(fields.size()) + " fields");
    Review review;
    if (!fields[0].empty()) {
      int64_t value = 0;
      const auto [ptr, ec] =
          std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), value);
      if (ec != std::errc() || ptr != fields[0].data() + fields[0].size() || value < 0)
        throw ValidationError(path + " line " + std::to_string(lineno) +
                              ": usefulness must be a nonnegative integer, got '" + fields[0] +
                              "'");
      review.useful_raw = value;
    }
    review.text = preprocess_text(fields[1]);
    if (review.text.empty()) {
      std::cerr << "note: " << path << " line " << lineno
                << ": text empty after normalization, skipped\n";
      continue;
    }
    reviews.push_back(std::move(review));
  }
  return reviews;
}

void encode_split(CorpusSplit& split, const Vocabulary& vocab, size_t max_len) {
  const auto encode_part = [&](std::vector<DialogPair>& pairs) {
    for (DialogPair& p : pairs) {
      p.source = encode(p.raw_source, vocab, max_len);
      p.target = encode(p.raw_target, vocab, max_len);
    }
  };
  encode_part(split.train);
  encode_part(split.validation);
  encode_part(split.test);
}

CorpusSplit filter_training_split(const CorpusSplit& split, const Vocabulary& vocab) {
  CorpusSplit out = split;
  std::erase_if(out.train, [&](const DialogPair& p) {
    corpus::TokenSeq target = p.target;
    if (target.empty()) target = encode(p.raw_target, vocab, kDefaultMaxLen);
    return std::find(target.begin(), target.end(), kUnkId) != target.end();
  });
  return out;
}

}  // namespace rldialog::corpus
