#include "rldialog/affect.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "rldialog/errors.hpp"

namespace rldialog::affect {

namespace {

double parse_component(const std::string& field, const std::string& path, size_t lineno) {
  try {
    size_t pos = 0;
    const double v = std::stod(field, &pos);
    if (pos != field.size()) throw std::invalid_argument(field);
    if (!(v >= 1.0 && v <= 9.0))
      throw rldialog::ValidationError(path + " line " + std::to_string(lineno) +
                                      ": affect component " + field + " outside [1,9]");
    return v;
  } catch (const rldialog::ValidationError&) {
    throw;
  } catch (const std::exception&) {
    throw rldialog::ValidationError(path + " line " + std::to_string(lineno) +
                                    ": cannot parse affect component '" + field + "'");
  }
}

}  // namespace

void AffectLexicon::insert(const std::string& word, AffectVector v) {
  if (word.empty()) throw ValidationError("lexicon word must be non-empty");
  entries_[word] = v;
}

bool AffectLexicon::contains(const std::string& word) const { return entries_.count(word) > 0; }

AffectLexicon AffectLexicon::load_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open affect lexicon: " + path);
  AffectLexicon lexicon;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1) continue;  // header row
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 4)
      throw ValidationError(path + " line " + std::to_string(lineno) +
                            ": expected word,valence,arousal,dominance");
    AffectVector v;
    v.valence = parse_component(fields[1], path, lineno);
    v.arousal = parse_component(fields[2], path, lineno);
    v.dominance = parse_component(fields[3], path, lineno);
    lexicon.insert(fields[0], v);
  }
  return lexicon;
}

AffectVector lookup_affect(const std::string& word, const AffectLexicon& lexicon) {
  if (word.empty()) throw ValidationError("lookup_affect: empty word");
  auto it = lexicon.entries().find(word);
  return it == lexicon.entries().end() ? neutral_affect() : it->second;
}

AugmentedEmbedding augment_embedding(const std::vector<double>& base, const std::string& word,
                                     const AffectLexicon& lexicon, bool rescale) {
  if (base.empty()) throw ValidationError("augment_embedding: base dimension must be >= 1");
  AugmentedEmbedding out;
  out.base = base;
  out.affect = lookup_affect(word, lexicon);
  out.combined = base;
  const auto scaled = [&](double v) { return rescale ? (v - 5.0) / 4.0 : v; };
  out.combined.push_back(scaled(out.affect.valence));
  out.combined.push_back(scaled(out.affect.arousal));
  out.combined.push_back(scaled(out.affect.dominance));
  return out;
}

AffectVector w2av_mean(const std::vector<std::string>& tokens, const AffectLexicon& lexicon) {
  if (tokens.empty()) throw ValidationError("w2av_mean: empty token list");
  double v = 0.0, a = 0.0, d = 0.0;
  for (const std::string& tok : tokens) {
    const AffectVector av = lookup_affect(tok, lexicon);
    v += av.valence;
    a += av.arousal;
    d += av.dominance;
  }
  const double n = static_cast<double>(tokens.size());
  return AffectVector{v / n, a / n, d / n};
}

double affect_distance(const AffectVector& a, const AffectVector& b) {
  const double dv = a.valence - b.valence;
  const double da = a.arousal - b.arousal;
  const double dd = a.dominance - b.dominance;
  return std::sqrt(dv * dv + da * da + dd * dd);
}

}  // namespace rldialog::affect
