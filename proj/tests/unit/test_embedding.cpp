#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "editfx/embedding.hpp"
#include "test_helpers.hpp"

using namespace editfx;
using testing_helpers::data_path;
using testing_helpers::TempDir;

namespace {

EmbeddingTable abc() { return parse_table("2 3\na 1 0 0\nb 0 1 0\n"); }

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> g(0.0, 3.0);
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

}  // namespace

TEST(EmbeddingTable, HeaderFormat) {
  const auto t = abc();
  EXPECT_EQ(t.dim(), 3u);
  EXPECT_EQ(t.size(), 2u);
  ASSERT_FALSE(t.lookup("b").empty());
  EXPECT_EQ(t.lookup("b")[1], 1.0);
  EXPECT_TRUE(t.lookup("zzz").empty());
}

TEST(EmbeddingTable, ShortLineIsFatalWithLineNumber) {
  try {
    parse_table("2 3\na 1 0 0\nb 0 1\n");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(EmbeddingTable, HeaderDimMustAgree) { EXPECT_THROW(parse_table("1 4\na 1 0 0\n"), DataError); }

TEST(EmbeddingTable, EmptyFileIsFatal) {
  EXPECT_THROW(parse_table(""), DataError);
  TempDir dir;
  write_file_atomic(dir / "empty.txt", "");
  EXPECT_THROW(load_table(dir / "empty.txt"), DataError);
}

TEST(EmbeddingTable, DimInferredWithoutHeader) {
  std::string text;
  for (int w = 0; w < 3; ++w) {
    text += "w" + std::to_string(w);
    for (int d = 0; d < 300; ++d) text += " 0." + std::to_string(d % 10);
    text += "\n";
  }
  const auto t = parse_table(text);
  EXPECT_EQ(t.dim(), 300u);
  EXPECT_EQ(t.size(), 3u);
}

TEST(EmbeddingTable, TextRoundTrip) {
  const auto t = load_table(data_path("tiny_vectors.txt"));
  const auto back = parse_table(t.to_text());
  ASSERT_EQ(back.size(), t.size());
  for (const auto& tok : t.tokens()) {
    const auto a = t.lookup(tok), b = back.lookup(tok);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
  }
}

TEST(Tokenize, LowercasesAndSplitsOnPunctuation) {
  EXPECT_EQ(tokenize("Hello, World! It's 2018"), (std::vector<std::string>{"hello", "world", "it", "s", "2018"}));
  EXPECT_EQ(tokenize("zzz-unknown"), (std::vector<std::string>{"zzz", "unknown"}));
  EXPECT_EQ(tokenize("  ...  "), std::vector<std::string>{});
  EXPECT_EQ(tokenize("\xc3\x89t\xc3\xa9"), std::vector<std::string>{"\xc3\xa9t\xc3\xa9"});
}

TEST(EmbedText, Averages) {
  const auto t = abc();
  auto d = embed_text(t, "a a");
  EXPECT_EQ(d.values, (std::vector<double>{1, 0, 0}));
  EXPECT_EQ(d.token_hits, 2u);
  d = embed_text(t, "a b");
  EXPECT_EQ(d.values, (std::vector<double>{0.5, 0.5, 0}));
  EXPECT_EQ(d.token_hits, 2u);
  d = embed_text(t, "zzz-unknown");
  EXPECT_EQ(d.values, (std::vector<double>{0, 0, 0}));
  EXPECT_EQ(d.token_hits, 0u);
  EXPECT_TRUE(d.zero_hit());
  d = embed_text(t, "A, b; unknown");
  EXPECT_EQ(d.values, (std::vector<double>{0.5, 0.5, 0}));
}

TEST(EmbedText, PermutationInvariant) {
  const auto t = load_table(data_path("tiny_vectors.txt"));
  std::vector<std::string> words{"the", "cat", "sat", "mat", "dog", "ran", "park", "news", "a", "b"};
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    std::string s1, s2;
    auto w = words;
    for (auto& x : w) s1 += x + " ";
    std::shuffle(w.begin(), w.end(), rng);
    for (auto& x : w) s2 += x + " ";
    const auto a = embed_text(t, s1), b = embed_text(t, s2);
    for (std::size_t d = 0; d < a.values.size(); ++d) EXPECT_NEAR(a.values[d], b.values[d], 1e-12);
  }
}

TEST(Cosine, HandValues) {
  const std::vector<double> u{1, 2, 3};
  EXPECT_NEAR(cosine(u, u), 1.0, 1e-15);
  EXPECT_EQ(cosine(std::vector<double>{1, 0, 0}, std::vector<double>{0, 1, 0}), 0.0);
  EXPECT_NEAR(cosine(std::vector<double>{1, 0}, std::vector<double>{1, 1}), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_EQ(cosine(std::vector<double>{0, 0}, std::vector<double>{1, 1}), 0.0);
  EXPECT_THROW(cosine(std::vector<double>{1, 0}, std::vector<double>{1, 1, 0}), InvalidArgument);
}

TEST(Cosine, RandomizedProperties) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  for (int i = 0; i < 1000; ++i) {
    const auto u = random_vector(rng, 7), v = random_vector(rng, 7);
    const double c = cosine(u, v);
    EXPECT_EQ(c, cosine(v, u));
    EXPECT_LE(std::abs(c), 1.0 + 1e-12);
    auto su = u;
    const double k = scale(rng);
    for (auto& x : su) x *= k;
    EXPECT_NEAR(cosine(su, v), c, 1e-12);
  }
}
