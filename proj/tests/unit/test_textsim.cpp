#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "editfx/stats.hpp"
#include "editfx/textsim.hpp"
#include "test_helpers.hpp"

using namespace editfx;
using testing_helpers::data_path;
using testing_helpers::TempDir;

namespace {

// Full-matrix reference, no shared code with the library.
std::size_t reference_levenshtein(const std::u32string& a, const std::u32string& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0u : 1u)});
    }
  }
  return d[a.size()][b.size()];
}

std::string random_text(std::mt19937_64& rng, std::size_t max_len) {
  static const std::vector<std::string> alphabet{"a", "b", "c", " ", "\xc3\xa9", "\xe4\xb8\xad", "\xf0\x9f\x98\x80"};
  std::uniform_int_distribution<std::size_t> len(0, max_len), pick(0, alphabet.size() - 1);
  std::string s;
  for (std::size_t n = len(rng); n > 0; --n) s += alphabet[pick(rng)];
  return s;
}

double pairwise_u(const std::vector<double>& x, const std::vector<double>& y) {
  double u = 0.0;
  for (double a : x) {
    for (double b : y) u += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
  }
  return u;
}

// Enumerates every split of the pooled values into groups of |x| and |y|.
double brute_force_p(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> pooled(x);
  pooled.insert(pooled.end(), y.begin(), y.end());
  const std::size_t n = pooled.size();
  const double obs = pairwise_u(x, y);
  double le = 0, ge = 0, all = 0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != x.size()) continue;
    std::vector<double> a, b;
    for (std::size_t i = 0; i < n; ++i) ((mask >> i) & 1u ? a : b).push_back(pooled[i]);
    const double u = pairwise_u(a, b);
    all += 1;
    if (u <= obs + 1e-9) le += 1;
    if (u >= obs - 1e-9) ge += 1;
  }
  return std::min(1.0, 2.0 * std::min(le, ge) / all);
}

}  // namespace

TEST(EditDistance, HandValues) {
  EXPECT_EQ(normalized_edit_distance("abc", "abc"), 0.0);
  EXPECT_NEAR(normalized_edit_distance("kitten", "sitting"), 3.0 / 7.0, 1e-9);
  EXPECT_EQ(normalized_edit_distance("", "abc"), 1.0);
  EXPECT_EQ(normalized_edit_distance("", ""), 0.0);
  // one scalar value, not two bytes
  EXPECT_NEAR(normalized_edit_distance("caf\xc3\xa9", "cafe"), 0.25, 1e-15);
}

TEST(EditDistance, AgreesWithReferenceOnRandomPairs) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 1000; ++i) {
    const auto a = random_text(rng, 40), b = random_text(rng, 40);
    const auto ua = utf8_to_scalars(a), ub = utf8_to_scalars(b);
    ASSERT_EQ(levenshtein(ua, ub), reference_levenshtein(ua, ub)) << a << " | " << b;
    const double d = normalized_edit_distance(a, b);
    EXPECT_EQ(d, normalized_edit_distance(b, a));
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 1.0);
    EXPECT_EQ(normalized_edit_distance(a, a), 0.0);
  }
}

TEST(MannWhitney, HandValues) {
  const std::vector<double> x{1, 2}, y{3, 4};
  const auto r = mann_whitney_u(x, y);
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_TRUE(r.exact);
  EXPECT_NEAR(r.p_value, 2.0 / 6.0, 1e-12);
  EXPECT_EQ(r.method, TestMethod::mann_whitney_u);
}

TEST(MannWhitney, IdenticalSamplesGiveHighP) {
  const std::vector<double> x{1, 2, 2, 5, 7};
  EXPECT_GE(mann_whitney_u(x, x).p_value, 0.99);
  std::vector<double> big;
  for (int i = 0; i < 30; ++i) big.push_back(i % 7);
  const auto r = mann_whitney_u(big, big);
  EXPECT_FALSE(r.exact);
  EXPECT_GE(r.p_value, 0.99);
}

TEST(MannWhitney, EmptySampleThrows) {
  const std::vector<double> x{1}, none;
  EXPECT_THROW(mann_whitney_u(x, none), InvalidArgument);
  EXPECT_THROW(mann_whitney_u(none, x), InvalidArgument);
}

TEST(MannWhitney, ExactMatchesBruteForce) {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<int> size(1, 6), value(0, 6);
  for (int i = 0; i < 300; ++i) {
    std::vector<double> x(static_cast<std::size_t>(size(rng))), y(static_cast<std::size_t>(size(rng)));
    for (auto& v : x) v = value(rng);
    for (auto& v : y) v = value(rng);
    const auto r = mann_whitney_u(x, y);
    ASSERT_TRUE(r.exact);
    EXPECT_EQ(r.statistic, pairwise_u(x, y));
    EXPECT_NEAR(r.p_value, brute_force_p(x, y), 1e-12);
  }
}

TEST(MannWhitney, ComplementIdentityOnTieFreeSamples) {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> x(8), y(15);
    for (auto& v : x) v = u(rng);
    for (auto& v : y) v = u(rng);
    EXPECT_NEAR(mann_whitney_u(x, y).statistic + mann_whitney_u(y, x).statistic, 8.0 * 15.0, 1e-9);
  }
}

TEST(MannWhitney, NormalApproximationCloseToExactAtTenAndTen) {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> g(0, 1);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> x(10), y(10);
    for (auto& v : x) v = g(rng);
    for (auto& v : y) v = g(rng) + 0.5;
    const auto exact = mann_whitney_u(x, y);
    ASSERT_TRUE(exact.exact);
    EXPECT_NEAR(exact.p_value, mann_whitney_u_normal(x, y).p_value, 0.02);
  }
}

TEST(WelchT, Properties) {
  const std::vector<double> x{1, 2, 3, 4}, y{2, 4, 5, 9};
  const auto same = welch_t(x, x);
  EXPECT_EQ(same.statistic, 0.0);
  EXPECT_NEAR(same.p_value, 1.0, 1e-12);
  const auto a = welch_t(x, y), b = welch_t(y, x);
  EXPECT_EQ(a.statistic, -b.statistic);
  EXPECT_NEAR(a.p_value, b.p_value, 1e-15);
  EXPECT_EQ(a.method, TestMethod::welch_t);
}

TEST(WelchT, HandComputedStatistic) {
  // means 2.5 and 5, variances 5/3 and 26/3, n = 4 each
  const std::vector<double> x{1, 2, 3, 4}, y{2, 4, 5, 9};
  const auto r = welch_t(x, y);
  const double se2 = (5.0 / 3.0) / 4 + (26.0 / 3.0) / 4;
  EXPECT_NEAR(r.statistic, -2.5 / std::sqrt(se2), 1e-12);
  const double df = se2 * se2 / (std::pow(5.0 / 12.0, 2) / 3 + std::pow(26.0 / 12.0, 2) / 3);
  EXPECT_NEAR(r.df, df, 1e-12);
}

TEST(WelchT, LargeSeparation) {
  const std::vector<double> x{0.01, -0.02, 0.0, 0.015}, y{10.0, 10.02, 9.99, 10.01};
  EXPECT_LT(welch_t(x, y).p_value, 0.001);
}

TEST(WelchT, DegenerateInputsThrow) {
  const std::vector<double> c{3, 3, 3}, d{4, 4}, one{1};
  EXPECT_THROW(welch_t(c, d), InvalidArgument);
  EXPECT_THROW(welch_t(one, d), InvalidArgument);
}

TEST(Profile, OnePerRecordInOrder) {
  const auto corpus = load_corpus(data_path("three_records.jsonl"));
  const auto table = load_table(data_path("tiny_vectors.txt"));
  const auto p = profile(corpus, table);
  ASSERT_EQ(p.size(), 3u);
  EXPECT_EQ(p[0].record_id, "r1");
  EXPECT_TRUE(p[0].mirrored);
  EXPECT_EQ(p[0].edit_distance, 0.0);
  EXPECT_NEAR(p[0].embedding_similarity, 1.0, 1e-12);
  EXPECT_FALSE(p[1].mirrored);
  EXPECT_FALSE(p[0].cluster.has_value());
  EXPECT_FALSE(p[0].headline_clickbait.has_value());
  // r3 differs only in case and whitespace
  EXPECT_FALSE(p[2].mirrored);
  EXPECT_NEAR(p[2].embedding_similarity, 1.0, 1e-12);
}

TEST(Profile, DisjointTextsAreFarApart) {
  const std::string text =
      R"({"id":"d1","outlet":"x","headline":"aaaa","body_text":"","post_text":"zzzz qq","created_at":"2018-06-15T13:00:00Z","replies":0,"retweets":0,"likes":0})"
      "\n"
      R"({"id":"d2","outlet":"x","headline":"a","body_text":"","post_text":"a","created_at":"2018-06-15T13:00:00Z","replies":0,"retweets":0,"likes":0})"
      "\n";
  const auto corpus = parse_corpus(text, CorpusFormat::jsonl);
  const auto table = parse_table("a 1 0\nb 0 1\n");
  const auto p = profile(corpus, table);
  EXPECT_EQ(p[0].edit_distance, 1.0);
  EXPECT_EQ(p[0].embedding_similarity, 0.0);
  EXPECT_TRUE(p[0].zero_hit);
  EXPECT_TRUE(p[1].mirrored);
}

TEST(Profile, CsvIsDeterministicAndRoundTrips) {
  const auto corpus = load_corpus(data_path("three_records.jsonl"));
  const auto table = load_table(data_path("tiny_vectors.txt"));
  auto p = profile(corpus, table);
  const auto csv = profiles_to_csv(p);
  EXPECT_EQ(csv, profiles_to_csv(profile(corpus, table)));
  EXPECT_EQ(csv, profiles_to_csv(profile(corpus, table, 3)));
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "record_id,edit_distance,embedding_similarity,mirrored,cluster,headline_clickbait,post_clickbait");
  p[1].cluster = 2;
  p[1].headline_clickbait = 0.25;
  p[1].post_clickbait = 0.75;
  for (auto& q : p) q.zero_hit = false;
  TempDir dir;
  save_profiles(p, dir / "p.csv");
  EXPECT_EQ(load_profiles(dir / "p.csv"), p);
}

TEST(Profile, MalformedCsvThrows) {
  EXPECT_THROW(profiles_from_csv("record_id,edit_distance\nr1,0.5\n"), DataError);
  EXPECT_THROW(profiles_from_csv("record_id,edit_distance,embedding_similarity,mirrored,cluster,headline_clickbait,"
                                 "post_clickbait\nr1,2.5,0.1,0,,,\n"),
               DataError);
}
