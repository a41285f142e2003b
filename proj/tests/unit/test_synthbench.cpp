#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "editfx/synthbench.hpp"
#include "editfx/textsim.hpp"

using namespace editfx;

namespace {

struct Gap {
  double diff = 0.0;
  double se = 0.0;
};

Gap naive_likes(const SynthOutput& out) {
  double s[2] = {0, 0}, ss[2] = {0, 0};
  double n[2] = {0, 0};
  for (std::size_t i = 0; i < out.corpus.size(); ++i) {
    const int g = out.truth[i].treated ? 1 : 0;
    const double y = static_cast<double>(out.corpus.records()[i].likes);
    s[g] += y;
    ss[g] += y * y;
    n[g] += 1;
  }
  Gap gap;
  double var[2];
  for (int g = 0; g < 2; ++g) {
    const double m = s[g] / n[g];
    var[g] = (ss[g] - n[g] * m * m) / (n[g] - 1);
  }
  gap.diff = s[1] / n[1] - s[0] / n[0];
  gap.se = std::sqrt(var[0] / n[0] + var[1] / n[1]);
  return gap;
}

}  // namespace

TEST(Synth, DeterministicPerSeed) {
  const auto a = generate(confounded_spec(300, 50.0, 4));
  const auto b = generate(confounded_spec(300, 50.0, 4));
  const auto c = generate(confounded_spec(300, 50.0, 5));
  EXPECT_EQ(to_jsonl(a.corpus), to_jsonl(b.corpus));
  EXPECT_EQ(truth_to_jsonl(a.truth), truth_to_jsonl(b.truth));
  EXPECT_NE(to_jsonl(a.corpus), to_jsonl(c.corpus));
}

TEST(Synth, CorpusRoundTripsWithoutRejects) {
  const auto out = generate(confounded_spec(500, 50.0, 6));
  const auto parsed = parse_corpus(to_jsonl(out.corpus), CorpusFormat::jsonl);
  EXPECT_TRUE(parsed.rejections().empty());
  ASSERT_EQ(parsed.size(), 500u);
  EXPECT_EQ(parsed.records(), out.corpus.records());
}

TEST(Synth, TreatedPostsAreEditedControlsMirrored) {
  const auto out = generate(confounded_spec(400, 10.0, 7));
  const auto profiles = profile(out.corpus, out.table);
  std::set<std::string> ids;
  for (std::size_t i = 0; i < out.corpus.size(); ++i) {
    const auto& r = out.corpus.records()[i];
    const auto& t = out.truth[i];
    EXPECT_EQ(t.id, r.id);
    EXPECT_EQ(is_mirrored(r), !t.treated);
    EXPECT_EQ(profiles[i].mirrored, !t.treated);
    EXPECT_FALSE(r.has_empty_body());
    EXPECT_GE(r.likes, 0);
    ids.insert(r.id);
    EXPECT_GE(r.created_at, std::string("2018-06-01"));
    EXPECT_LT(r.created_at, std::string("2018-07-02"));
  }
  EXPECT_EQ(ids.size(), out.corpus.size());
}

TEST(Synth, EveryEmittedTokenHasAVector) {
  const auto out = generate(confounded_spec(200, 0.0, 8));
  for (const auto& r : out.corpus.records()) {
    for (const auto& text : {r.headline, r.body_text, r.post_text}) {
      for (const auto& tok : tokenize(text)) EXPECT_TRUE(out.table.contains(tok)) << tok;
    }
  }
}

TEST(Synth, TruthExpectedMeansAndClamping) {
  auto spec = unconfounded_spec(200, -150.0, 9);
  const auto out = generate(spec);
  for (const auto& t : out.truth) {
    if (t.treated) {
      EXPECT_TRUE(t.clamped);
      EXPECT_EQ(t.expected[2], 0.0);
    } else {
      EXPECT_FALSE(t.clamped);
      EXPECT_EQ(t.expected[2], 100.0);
    }
  }
}

TEST(Synth, ZeroEffectUnconfoundedGapWithinTwoSe) {
  const auto out = generate(unconfounded_spec(5000, 0.0, 10));
  const auto gap = naive_likes(out);
  EXPECT_LT(std::abs(gap.diff), 2.0 * gap.se) << gap.diff << " se " << gap.se;
}

TEST(Synth, UnconfoundedGapRecoversEffect) {
  const auto out = generate(unconfounded_spec(5000, 50.0, 11));
  EXPECT_NEAR(naive_likes(out).diff, 50.0, 5.0);
}

TEST(Synth, ConfoundedNullShowsLargeNaiveGap) {
  const auto out = generate(confounded_spec(5000, 0.0, 12));
  const auto gap = naive_likes(out);
  EXPECT_GT(gap.diff, 3.0 * gap.se);
  EXPECT_GT(gap.diff, 20.0);
}

TEST(Synth, ValidationErrors) {
  auto ok = confounded_spec(100, 0.0, 1);
  EXPECT_NO_THROW(validate(ok));
  auto s = ok;
  s.n_records = 59;
  EXPECT_THROW(validate(s), DataError);
  s = ok;
  s.topics[0].treatment_probability = 1.2;
  EXPECT_THROW(validate(s), DataError);
  s = ok;
  s.topics.clear();
  EXPECT_THROW(validate(s), DataError);
  s = ok;
  s.topics[1].vocabulary.clear();
  EXPECT_THROW(validate(s), DataError);
  s = ok;
  s.noise = -0.5;
  EXPECT_THROW(validate(s), DataError);
  s = ok;
  s.topics[2].vocabulary[0] = "Two words";
  EXPECT_THROW(validate(s), DataError);
  EXPECT_THROW(generate(s), DataError);
}

TEST(Synth, SpecJsonRoundTrip) {
  const auto spec = confounded_spec(700, 25.0, 13, 4);
  const auto back = synth_spec_from_json(synth_spec_to_json(spec));
  EXPECT_EQ(synth_spec_to_json(back).dump(), synth_spec_to_json(spec).dump());
  EXPECT_EQ(to_jsonl(generate(back).corpus), to_jsonl(generate(spec).corpus));

  const auto j = nlohmann::json::parse(R"({"n_records":100,"seed":2,"true_effect":{"likes":5},
      "topics":[{"id":"a","vocabulary_size":10,"base_means":{"replies":1,"retweets":2,"likes":3},"treatment_probability":0.3},
                {"id":"b","vocabulary":["x","y"],"base_means":{"replies":1,"retweets":2,"likes":3},"treatment_probability":0.5}]})");
  const auto parsed = synth_spec_from_json(j);
  EXPECT_EQ(parsed.true_effect[2], 5.0);
  EXPECT_EQ(parsed.true_effect[0], 0.0);
  EXPECT_EQ(parsed.topics[0].vocabulary.size(), 10u);
  EXPECT_EQ(parsed.topics[1].vocabulary.size(), 2u);
  auto missing = j;
  missing["topics"][1].erase("treatment_probability");
  EXPECT_THROW(synth_spec_from_json(missing), DataError);
  EXPECT_THROW(synth_spec_from_json(nlohmann::json::parse(R"({"n_records":"many"})")), DataError);
}

TEST(Synth, SeparableClickbaitCorpus) {
  const auto data = separable_clickbait_corpus(200, 3);
  ASSERT_EQ(data.size(), 200u);
  std::set<std::string> bait, news;
  for (std::size_t i = 0; i < data.size(); ++i) {
    EXPECT_EQ(data[i].label, static_cast<int>(i % 2));
    for (const auto& tok : tokenize(data[i].text)) (data[i].label ? bait : news).insert(tok);
  }
  for (const auto& t : bait) EXPECT_EQ(news.count(t), 0u) << t;
}
