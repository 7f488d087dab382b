#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "rldialog/corpus.hpp"
#include "rldialog/errors.hpp"
#include "rldialog/rng.hpp"

using namespace rldialog;
using namespace rldialog::corpus;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  const std::string path = (std::filesystem::temp_directory_path() / name).string();
  std::ofstream out(path, std::ios::binary);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("preprocess_text normalizes the documented cases") {
  CHECK(preprocess_text("Hello!!!") == "hello!");
  CHECK(preprocess_text("") == "");
  CHECK(preprocess_text("I CAN'T &amp; won't go") == "i cannot and will not go");
  CHECK(preprocess_text("don't???  DO IT...") == "do not? do it.");
  CHECK(preprocess_text("they're  here") == "they are here");
  CHECK(preprocess_text("she'll win") == "she will win");
  CHECK(preprocess_text("it's fine") == "it's fine");  // ambiguous 's stays
  CHECK(preprocess_text("a &lt;b&gt; c") == "a b c");
  CHECK(preprocess_text("I’m here") == "i am here");
}

TEST_CASE("preprocess_text is idempotent") {
  Rng rng(3);
  const std::string alphabet = "abc'!?.&; \tA<>B&amp;n't";
  for (int round = 0; round < 300; ++round) {
    std::string s;
    const size_t len = rng.next_below(40);
    for (size_t i = 0; i < len; ++i) s += alphabet[rng.next_below(alphabet.size())];
    const std::string once = preprocess_text(s);
    CHECK(preprocess_text(once) == once);
  }
}

TEST_CASE("tokenize splits punctuation off but keeps apostrophes") {
  CHECK(tokenize("hello!") == std::vector<std::string>{"hello", "!"});
  CHECK(tokenize("it's fine.") == std::vector<std::string>{"it's", "fine", "."});
  CHECK(tokenize("(a, b)") == std::vector<std::string>{"(", "a", ",", "b", ")"});
  CHECK(tokenize("") == std::vector<std::string>{});
}

TEST_CASE("build_vocabulary keeps the most frequent tokens, ties by first occurrence") {
  const Vocabulary vocab = build_vocabulary({"a b a", "b c"}, 2);
  CHECK(vocab.size() == 2 + kNumSpecials);
  // a and b tie at 2; a appeared first
  CHECK(vocab.id_of("a") == 4);
  CHECK(vocab.id_of("b") == 5);
  CHECK(vocab.id_of("c") == kUnkId);
}

TEST_CASE("build_vocabulary handles a corpus smaller than the cap") {
  const Vocabulary vocab = build_vocabulary({"x"}, 12000);
  CHECK(vocab.size() == 1 + kNumSpecials);
  CHECK(vocab.id_of("x") == 4);
}

TEST_CASE("build_vocabulary rejects an empty corpus") {
  CHECK_THROWS_AS(build_vocabulary({}, 10), ValidationError);
  CHECK_THROWS_AS(build_vocabulary({"", "  "}, 10), ValidationError);
}

TEST_CASE("build_vocabulary is deterministic") {
  const std::vector<std::string> texts = {"d c b a", "a b c d", "b d"};
  const Vocabulary v1 = build_vocabulary(texts, 3);
  const Vocabulary v2 = build_vocabulary(texts, 3);
  CHECK(v1.tokens() == v2.tokens());
}

TEST_CASE("encode maps tokens, UNKs unknowns, truncates") {
  Vocabulary vocab = build_vocabulary({"a b"}, 10);
  CHECK(encode("a b", vocab, 20) == TokenSeq{vocab.id_of("a"), vocab.id_of("b")});
  CHECK(encode("a q", vocab, 20) == TokenSeq{vocab.id_of("a"), kUnkId});

  std::string long_text;
  for (int i = 0; i < 25; ++i) long_text += "a ";
  CHECK(encode(long_text, vocab, 20).size() == 20);
}

TEST_CASE("encode/decode round-trip is the identity on in-vocab sequences") {
  const std::vector<std::string> texts = {"the cat sat on the mat !", "a dog ate the cat ."};
  Vocabulary vocab = build_vocabulary(texts, 100);
  Rng rng(17);
  for (int round = 0; round < 100; ++round) {
    TokenSeq ids;
    const size_t len = 1 + rng.next_below(20);
    for (size_t i = 0; i < len; ++i)
      ids.push_back(static_cast<TokenId>(kNumSpecials + rng.next_below(vocab.size() - kNumSpecials)));
    const std::string text = decode_text(ids, vocab);
    CHECK(encode(text, vocab, 20) == ids);
  }
}

TEST_CASE("vocabulary save/load preserves ordering") {
  Vocabulary vocab = build_vocabulary({"a b c b c c"}, 10);
  const std::string path = write_temp("rldialog_vocab_test.txt", "");
  vocab.save(path);
  const Vocabulary loaded = Vocabulary::load(path);
  CHECK(loaded.tokens() == vocab.tokens());
  std::remove(path.c_str());
}

TEST_CASE("dialog corpus loader parses, splits and reports malformed lines") {
  const std::string good = write_temp("rldialog_dialog_good.tsv",
                                      "Hi there\tHello!\n"
                                      "How are you?\tI am fine.\n"
                                      "See you\tBye bye\n");
  const CorpusSplit split = load_dialog_corpus(good);
  CHECK(split.train.size() == 3);
  CHECK(split.train[0].raw_source == "hi there");
  CHECK(split.train[0].raw_target == "hello!");
  std::remove(good.c_str());

  const std::string bad = write_temp("rldialog_dialog_bad.tsv", "no tab separator here\n");
  CHECK_THROWS_WITH_AS(load_dialog_corpus(bad), doctest::Contains("line 1"), ValidationError);
  std::remove(bad.c_str());

  CHECK_THROWS_AS(load_dialog_corpus("/nonexistent/dialogs.tsv"), IoError);
}

TEST_CASE("dialog corpus striping fills all three partitions") {
  std::string content;
  for (int i = 0; i < 30; ++i)
    content += "source " + std::to_string(i) + "\ttarget " + std::to_string(i) + "\n";
  const std::string path = write_temp("rldialog_dialog_split.tsv", content);
  const CorpusSplit split = load_dialog_corpus(path);
  CHECK(split.train.size() == 24);
  CHECK(split.validation.size() == 3);
  CHECK(split.test.size() == 3);
  std::remove(path.c_str());
}

TEST_CASE("review corpus loader handles ratings and absent ratings") {
  const std::string path = write_temp("rldialog_reviews.tsv",
                                      "12\tGreat food!\n"
                                      "\tno rating on this one\n"
                                      "0\tterrible\n");
  const std::vector<Review> reviews = load_review_corpus(path);
  REQUIRE(reviews.size() == 3);
  CHECK(reviews[0].useful_raw == 12);
  CHECK_FALSE(reviews[1].useful_raw.has_value());
  CHECK_FALSE(reviews[1].useful_normalized.has_value());
  CHECK(reviews[2].useful_raw == 0);
  std::remove(path.c_str());

  const std::string bad = write_temp("rldialog_reviews_bad.tsv", "abc\ttext\n");
  CHECK_THROWS_WITH_AS(load_review_corpus(bad), doctest::Contains("line 1"), ValidationError);
  std::remove(bad.c_str());
}

TEST_CASE("filter_training_split drops only training pairs with OOV targets") {
  CorpusSplit split;
  DialogPair in_vocab{{}, {}, "a b", "b a"};
  DialogPair oov_target{{}, {}, "a b", "a zzz"};
  DialogPair oov_source{{}, {}, "zzz", "a b"};
  split.train = {in_vocab, oov_target, oov_source};
  split.test = {oov_target};

  Vocabulary vocab = build_vocabulary({"a b", "b a"}, 10);
  encode_split(split, vocab, 20);
  const CorpusSplit filtered = filter_training_split(split, vocab);
  CHECK(filtered.train.size() == 2);  // oov_target removed, oov_source kept
  CHECK(filtered.test.size() == 1);   // test untouched

  for (const DialogPair& p : filtered.train)
    for (TokenId id : p.target) CHECK(id != kUnkId);
}
