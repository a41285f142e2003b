#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "editfx/causal.hpp"
#include "editfx/synthbench.hpp"
#include "editfx/textsim.hpp"

using namespace editfx;

namespace {

std::vector<ScoredUnit> units(const std::vector<double>& ps, const std::string& prefix) {
  std::vector<ScoredUnit> out;
  for (std::size_t i = 0; i < ps.size(); ++i) out.push_back({prefix + std::to_string(i), ps[i]});
  return out;
}

MatchResult matched(const std::string& t, std::vector<std::string> controls) {
  MatchResult m;
  m.treatment_id = t;
  m.matched_control_ids = std::move(controls);
  return m;
}

std::vector<std::string> brute_force_match(const ScoredUnit& t, const std::vector<ScoredUnit>& controls,
                                           std::size_t k) {
  auto sorted = controls;
  std::sort(sorted.begin(), sorted.end(), [&](const ScoredUnit& a, const ScoredUnit& b) {
    const double ga = std::abs(t.propensity - a.propensity), gb = std::abs(t.propensity - b.propensity);
    return ga != gb ? ga < gb : a.id < b.id;
  });
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < k; ++i) ids.push_back(sorted[i].id);
  return ids;
}

struct SynthFixture {
  SynthOutput data;
  std::vector<EditProfile> profiles;
};

const SynthFixture& small_synth() {
  static const SynthFixture f = [] {
    auto spec = confounded_spec(800, 50.0, 21);
    spec.embedding_dim = 16;
    SynthFixture s{generate(spec), {}};
    s.profiles = profile(s.data.corpus, s.data.table);
    return s;
  }();
  return f;
}

CausalConfig quick_config() {
  CausalConfig cfg;
  cfg.propensity.hidden = {16, 8};
  cfg.propensity.epochs = 5;
  cfg.seed = 3;
  return cfg;
}

}  // namespace

TEST(Match, ForcedWhenExactlyKControls) {
  const auto t = units({0.4}, "t");
  const auto c = units({0.1, 0.9, 0.5, 0.3, 0.7}, "c");
  const auto m = match(t, c, 5);
  ASSERT_EQ(m.size(), 1u);
  auto ids = m[0].matched_control_ids;
  std::sort(ids.begin(), ids.end());
  EXPECT_EQ(ids, (std::vector<std::string>{"c0", "c1", "c2", "c3", "c4"}));
}

TEST(Match, NearestByGap) {
  const auto t = units({0.88}, "t");
  const auto c = units({0.1, 0.2, 0.8, 0.85, 0.9, 0.95}, "c");
  const auto m = match(t, c, 5);
  const auto& ids = m[0].matched_control_ids;
  EXPECT_EQ(std::count(ids.begin(), ids.end(), "c0"), 0);
  EXPECT_EQ(ids.front(), "c4");
  for (std::size_t i = 1; i < m[0].propensity_gaps.size(); ++i) {
    EXPECT_LE(m[0].propensity_gaps[i - 1], m[0].propensity_gaps[i]);
  }
}

TEST(Match, WithReplacementAcrossTreatments) {
  const auto t = units({0.5, 0.51}, "t");
  const auto c = units({0.49, 0.52, 0.1}, "c");
  const auto m = match(t, c, 2);
  EXPECT_EQ(m[0].matched_control_ids, (std::vector<std::string>{"c0", "c1"}));
  EXPECT_EQ(m[1].matched_control_ids, (std::vector<std::string>{"c1", "c0"}));
}

TEST(Match, TiesGoToSmallerId) {
  const std::vector<ScoredUnit> c{{"b", 0.4}, {"a", 0.6}, {"c", 0.6}};
  const std::vector<ScoredUnit> t{{"t", 0.5}};
  EXPECT_EQ(match(t, c, 1)[0].matched_control_ids, std::vector<std::string>{"a"});
  EXPECT_EQ(match(t, c, 2)[0].matched_control_ids, (std::vector<std::string>{"a", "b"}));
}

TEST(Match, FewerControlsThanKThrows) {
  const auto t = units({0.5}, "t");
  const auto c = units({0.1, 0.2}, "c");
  EXPECT_THROW(match(t, c, 5), InvalidArgument);
  EXPECT_THROW(match(t, c, 0), InvalidArgument);
}

TEST(Match, AgreesWithBruteForce) {
  std::mt19937_64 rng(41);
  std::uniform_int_distribution<int> level(0, 20);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ScoredUnit> c, t;
    const int nc = 5 + trial % 30;
    for (int i = 0; i < nc; ++i) c.push_back({"c" + std::to_string(rng() % 1000), level(rng) / 20.0});
    std::sort(c.begin(), c.end(), [](auto& a, auto& b) { return a.id < b.id; });
    c.erase(std::unique(c.begin(), c.end(), [](auto& a, auto& b) { return a.id == b.id; }), c.end());
    if (c.size() < 5) continue;
    std::shuffle(c.begin(), c.end(), rng);
    for (int i = 0; i < 5; ++i) t.push_back({"t" + std::to_string(i), level(rng) / 20.0});
    const auto m = match(t, c, 5);
    for (std::size_t i = 0; i < t.size(); ++i) {
      EXPECT_EQ(m[i].matched_control_ids, brute_force_match(t[i], c, 5));
    }
  }
}

TEST(Balance, GateValues) {
  auto b = evaluate_balance(1.0, 0.5, 0.1);
  EXPECT_DOUBLE_EQ(b.threshold, 0.8);
  EXPECT_TRUE(b.passed);
  EXPECT_FALSE(evaluate_balance(0.79, 0.5, 0.1).passed);
  b = evaluate_balance(0.85, 0.82, 0.0);
  EXPECT_DOUBLE_EQ(b.threshold, 0.82);
  EXPECT_TRUE(b.passed);
  b = evaluate_balance(0.9, 0.6, 0.2);
  EXPECT_NEAR(b.threshold, 0.9, 1e-15);
}

TEST(Balance, FlipsExactlyAtThreshold) {
  for (const auto& [mu, sigma] : std::vector<std::pair<double, double>>{{0.5, 0.1}, {0.3, 0.4}, {0.7, 0.05}}) {
    const double threshold = std::max(mu + 1.5 * sigma, 0.8);
    EXPECT_TRUE(evaluate_balance(threshold, mu, sigma).passed);
    EXPECT_TRUE(evaluate_balance(threshold + 1e-9, mu, sigma).passed);
    EXPECT_FALSE(evaluate_balance(threshold - 1e-9, mu, sigma).passed);
  }
}

TEST(Balance, CheckAveragesMatchedSimilarities) {
  DocumentVectors docs;
  docs.add("t1", {1, 0}, 1);
  docs.add("c1", {1, 0}, 1);
  docs.add("c2", {0, 1}, 1);
  docs.add("c3", {2, 0}, 1);
  std::vector<MatchResult> m{matched("t1", {"c1", "c3"})};
  auto b = balance_check(m, docs, 1.5, 0.8, 0.5, 0.1);
  EXPECT_DOUBLE_EQ(b.achieved, 1.0);
  EXPECT_TRUE(b.passed);
  EXPECT_DOUBLE_EQ(m[0].mean_similarity, 1.0);
  m = {matched("t1", {"c1", "c2"})};
  b = balance_check(m, docs, 1.5, 0.8, 0.5, 0.1);
  EXPECT_DOUBLE_EQ(b.achieved, 0.5);
  EXPECT_FALSE(b.passed);
}

TEST(SimilarityMoments, ExactAndSampled) {
  std::mt19937_64 rng(43);
  std::normal_distribution<double> g(0, 1);
  DocumentVectors docs;
  std::vector<std::string> ids;
  std::vector<std::vector<double>> raw;
  for (int i = 0; i < 60; ++i) {
    std::vector<double> v{g(rng) + 1, g(rng), g(rng)};
    raw.push_back(v);
    ids.push_back("d" + std::to_string(i));
    docs.add(ids.back(), v, 3);
  }
  double s = 0, ss = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    for (std::size_t j = i + 1; j < raw.size(); ++j) {
      const double c = cosine(raw[i], raw[j]);
      s += c;
      ss += c * c;
      ++n;
    }
  }
  const double mu = s / n, sigma = std::sqrt(ss / n - mu * mu);
  const auto exact = similarity_moments(docs, ids, 1);
  EXPECT_FALSE(exact.sampled);
  EXPECT_EQ(exact.pairs, n);
  EXPECT_NEAR(exact.mu, mu, 1e-12);
  EXPECT_NEAR(exact.sigma, sigma, 1e-12);
  const auto sampled = similarity_moments(docs, ids, 1, 10, 50000);
  EXPECT_TRUE(sampled.sampled);
  EXPECT_EQ(sampled.pairs, 50000u);
  EXPECT_NEAR(sampled.mu, mu, 0.02);
  EXPECT_NEAR(sampled.sigma, sigma, 0.02);
  const auto again = similarity_moments(docs, ids, 1, 10, 50000);
  EXPECT_EQ(again.mu, sampled.mu);
}

TEST(Eate, HandValues) {
  std::unordered_map<std::string, double> y{{"t", 10}, {"c1", 1}, {"c2", 2}, {"c3", 3}, {"c4", 4}, {"c5", 5}};
  EXPECT_EQ(estimate_eate({matched("t", {"c1", "c2", "c3", "c4", "c5"})}, y, 5), 7.0);

  std::unordered_map<std::string, double> flat{{"t", 3}, {"a", 3}, {"b", 3}};
  EXPECT_EQ(estimate_eate({matched("t", {"a", "b"})}, flat, 2), 0.0);

  std::unordered_map<std::string, double> sym{{"t1", 10}, {"t2", -4}, {"c1", 1}, {"c2", 5}, {"c3", 3}};
  const std::vector<MatchResult> two{matched("t1", {"c1", "c2", "c3"}), matched("t2", {"c1", "c2", "c3"})};
  EXPECT_NEAR(estimate_eate(two, sym, 3), 0.0, 1e-12);

  std::unordered_map<std::string, double> multi{{"t1", 10}, {"t2", 4}, {"t3", 1}, {"c1", 2}, {"c2", 7}};
  const std::vector<MatchResult> three{matched("t1", {"c1", "c2"}), matched("t2", {"c2", "c2"}),
                                       matched("t3", {"c1", "c1"})};
  // (10 - 4.5) + (4 - 7) + (1 - 2) = 1.5 over 3 treatments
  EXPECT_NEAR(estimate_eate(three, multi, 2), 0.5, 1e-12);
}

TEST(Eate, MissingOutcomeThrows) {
  std::unordered_map<std::string, double> y{{"t", 1}};
  EXPECT_THROW(estimate_eate({matched("t", {"c"})}, y, 1), InvalidArgument);
  EXPECT_THROW(estimate_eate({}, y, 1), InvalidArgument);
}

TEST(Eate, LinearInOutcomes) {
  std::mt19937_64 rng(47);
  std::uniform_real_distribution<double> u(0, 100);
  std::unordered_map<std::string, double> y;
  std::vector<MatchResult> m;
  for (int t = 0; t < 20; ++t) {
    y["t" + std::to_string(t)] = u(rng);
    std::vector<std::string> cs;
    for (int j = 0; j < 5; ++j) cs.push_back("c" + std::to_string(rng() % 30));
    m.push_back(matched("t" + std::to_string(t), cs));
  }
  for (int c = 0; c < 30; ++c) y["c" + std::to_string(c)] = u(rng);
  const double base = estimate_eate(m, y, 5);
  auto scaled = y, shifted = y;
  for (auto& [id, v] : scaled) v *= 3.5;
  for (auto& [id, v] : shifted) v += 17.0;
  EXPECT_NEAR(estimate_eate(m, scaled, 5), 3.5 * base, 1e-10);
  EXPECT_NEAR(estimate_eate(m, shifted, 5), base, 1e-10);
}

TEST(Eate, RoleSwapNegatesOnSymmetricDesign) {
  // complete bipartite matching with equal group sizes
  std::unordered_map<std::string, double> y{{"a1", 5}, {"a2", 9}, {"a3", 1}, {"b1", 2}, {"b2", 4}, {"b3", 8}};
  const std::vector<std::string> a{"a1", "a2", "a3"}, b{"b1", "b2", "b3"};
  std::vector<MatchResult> ab, ba;
  for (const auto& t : a) ab.push_back(matched(t, b));
  for (const auto& t : b) ba.push_back(matched(t, a));
  EXPECT_NEAR(estimate_eate(ab, y, 3), -estimate_eate(ba, y, 3), 1e-12);
}

TEST(TInterval, ZeroVarianceAndHandValue) {
  const std::vector<double> same(10, 4.2);
  const auto ci = t_interval(same);
  EXPECT_EQ(ci.mean, 4.2);
  EXPECT_EQ(ci.low, 4.2);
  EXPECT_EQ(ci.high, 4.2);
  std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const auto c = t_interval(v);
  const double sd = std::sqrt(55.0 / 6.0);  // sample variance of 1..10
  const double half = 2.2621571627409915 * sd / std::sqrt(10.0);
  EXPECT_NEAR(c.mean, 5.5, 1e-12);
  EXPECT_NEAR(c.low, 5.5 - half, 1e-9);
  EXPECT_NEAR(c.high, 5.5 + half, 1e-9);
  EXPECT_THROW(t_interval(std::vector<double>{1.0}), InvalidArgument);
}

TEST(Scenario, FactoriesAndJson) {
  const auto s = Scenario::clickbait_transition("s", "x", "NC->C");
  EXPECT_TRUE(s.exclude_mirrored);
  EXPECT_EQ(*s.treatment.post_class, ClickbaitClass::C);
  EXPECT_EQ(*s.control.post_class, ClickbaitClass::NC);
  EXPECT_THROW(Scenario::clickbait_transition("s", "x", "C->C"), InvalidArgument);
  EXPECT_THROW(Scenario::cluster_pair("s", "x", 1, 1), InvalidArgument);

  const auto j = nlohmann::json::parse(
      R"({"name":"c","outlet":"x","treatment":{"cluster":2},"control":{"cluster":0},"section":"politics","time_block":"B2"})");
  const auto parsed = scenario_from_json(j);
  EXPECT_EQ(*parsed.treatment.cluster, 2);
  EXPECT_EQ(*parsed.section, "politics");
  EXPECT_EQ(*parsed.time_block, TimeBlock::B2);
  const auto back = scenario_from_json(scenario_to_json(parsed));
  EXPECT_EQ(back.treatment.describe(), parsed.treatment.describe());
  EXPECT_EQ(back.section, parsed.section);
  EXPECT_THROW(scenario_from_json(nlohmann::json::parse(R"({"name":"c","outlet":"x","treatment":{"colour":1},"control":{}})")),
               DataError);
  EXPECT_THROW(scenario_from_json(nlohmann::json::parse(R"({"name":"c"})")), DataError);
}

TEST(CausalConfig, FromJson) {
  const auto c = causal_config_from_json(nlohmann::json::parse(R"({"knn":3,"alpha":2.0,"propensity":{"epochs":4}})"));
  EXPECT_EQ(c.k, 3u);
  EXPECT_EQ(c.alpha, 2.0);
  EXPECT_EQ(c.tau, 0.8);
  EXPECT_EQ(c.propensity.epochs, 4u);
  EXPECT_THROW(causal_config_from_json(nlohmann::json::parse(R"({"folds":1})")), DataError);
}

TEST(Dataset, SelectionAndOverlap) {
  const auto& f = small_synth();
  const CausalDataset data(f.data.corpus, f.profiles, f.data.table);
  const auto u = data.select(Scenario::edited_vs_mirrored("e", "synth"));
  EXPECT_EQ(u.treatment.size() + u.control.size(), f.data.corpus.size());
  for (const auto& id : u.treatment) EXPECT_FALSE(data.profile(id).mirrored);
  Scenario overlapping;
  overlapping.name = "o";
  overlapping.outlet = "synth";
  EXPECT_THROW(data.select(overlapping), InvalidArgument);
  EXPECT_TRUE(data.select(Scenario::edited_vs_mirrored("e", "other")).treatment.empty());
}

TEST(Dataset, EmptyBodiesAreExcluded) {
  const std::string text =
      R"({"id":"a","outlet":"x","headline":"cat","body_text":"","post_text":"cat","created_at":"2018-06-15T13:00:00Z","replies":0,"retweets":0,"likes":0})"
      "\n"
      R"({"id":"b","outlet":"x","headline":"cat","body_text":"zzz","post_text":"cat","created_at":"2018-06-15T13:00:00Z","replies":0,"retweets":0,"likes":0})"
      "\n"
      R"({"id":"c","outlet":"x","headline":"cat","body_text":"cat","post_text":"cat","created_at":"2018-06-15T13:00:00Z","replies":0,"retweets":0,"likes":0})"
      "\n";
  const auto corpus = parse_corpus(text, CorpusFormat::jsonl);
  const auto table = parse_table("cat 1 0\n");
  const auto profiles = profile(corpus, table);
  const CausalDataset data(corpus, profiles, table);
  const auto u = data.select(Scenario::edited_vs_mirrored("e", "x"));
  EXPECT_EQ(u.control, std::vector<std::string>{"c"});
}

TEST(RunScenario, InsufficientUnitsNamesSelector) {
  const auto& f = small_synth();
  auto cfg = quick_config();
  cfg.min_group = 5000;
  try {
    run_scenario(f.data.corpus, f.profiles, Scenario::edited_vs_mirrored("e", "synth"), f.data.table, cfg);
    FAIL() << "expected InsufficientUnits";
  } catch (const InsufficientUnits& e) {
    EXPECT_NE(std::string(e.what()).find("edited"), std::string::npos) << e.what();
  }
}

TEST(RunScenario, ReportInvariantsAndDeterminism) {
  const auto& f = small_synth();
  const auto cfg = quick_config();
  const auto s = Scenario::edited_vs_mirrored("e", "synth");
  const auto reps = run_scenario(f.data.corpus, f.profiles, s, f.data.table, cfg);
  ASSERT_EQ(reps.size(), 3u);
  for (std::size_t m = 0; m < 3; ++m) {
    const auto& r = reps[m];
    EXPECT_EQ(r.metric, kAllMetrics[m]);
    ASSERT_EQ(r.fold_eates.size(), 10u);
    ASSERT_EQ(r.balance.size(), 10u);
    double sum = 0;
    for (double v : r.fold_eates) sum += v;
    EXPECT_NEAR(r.mean_eate, sum / 10.0, 1e-12);
    EXPECT_EQ(r.ci_includes_zero, r.ci_low <= 0.0 && 0.0 <= r.ci_high);
    bool any_fail = false;
    for (const auto& b : r.balance) any_fail |= !b.passed;
    EXPECT_EQ(r.balance_failed, any_fail);
    EXPECT_EQ(r.discarded, r.ci_includes_zero || r.balance_failed);
    EXPECT_LE(r.ci_low, r.mean_eate);
    EXPECT_GE(r.ci_high, r.mean_eate);
  }
  EXPECT_NEAR(reps[2].mean_eate, 50.0, 15.0);

  auto threaded = cfg;
  threaded.jobs = 3;
  const auto again = run_scenario(f.data.corpus, f.profiles, s, f.data.table, threaded);
  for (std::size_t m = 0; m < 3; ++m) EXPECT_EQ(again[m].fold_eates, reps[m].fold_eates);

  std::vector<ScenarioOutcome> outcomes{{s, false, "", reps}};
  const auto csv = outcomes_to_csv(outcomes);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "scenario,metric,mean_eate,ci_low,ci_high,discarded,balance_passed,fold_1,fold_2,fold_3,fold_4,fold_5,"
            "fold_6,fold_7,fold_8,fold_9,fold_10");
  EXPECT_EQ(outcomes_to_json(outcomes, cfg).dump(), outcomes_to_json(outcomes, cfg).dump());
}

TEST(Propensity, SeparatesDisjointTopics) {
  auto spec = confounded_spec(600, 0.0, 5, 2);
  spec.topics[0].treatment_probability = 1.0;
  spec.topics[1].treatment_probability = 0.0;
  spec.embedding_dim = 16;
  const auto out = generate(spec);
  const DocumentVectors docs(out.corpus, out.table);
  std::vector<int> labels;
  nn::Tensor x({out.corpus.size(), 16});
  for (std::size_t i = 0; i < out.corpus.size(); ++i) {
    labels.push_back(out.truth[i].treated ? 1 : 0);
    const auto v = docs.raw(out.corpus.records()[i].id);
    std::copy(v.begin(), v.end(), x.row(i).begin());
  }
  PropensityConfig cfg;
  cfg.hidden = {16, 8};
  cfg.epochs = 5;
  const std::size_t n_train = 450;
  nn::Tensor train({n_train, 16}), test({out.corpus.size() - n_train, 16});
  for (std::size_t i = 0; i < out.corpus.size(); ++i) {
    auto dst = i < n_train ? train.row(i) : test.row(i - n_train);
    std::copy(x.row(i).begin(), x.row(i).end(), dst.begin());
  }
  const std::vector<int> train_labels(labels.begin(), labels.begin() + n_train);
  const std::vector<int> test_labels(labels.begin() + n_train, labels.end());
  const auto model = train_propensity(train, train_labels, cfg, 9);
  const auto scores = model.predict(test);
  EXPECT_GT(roc_auc(scores, test_labels), 0.9);
  for (double s : scores) {
    EXPECT_GT(s, 0.0);
    EXPECT_LT(s, 1.0);
  }

  // shuffled labels carry no signal
  std::mt19937_64 rng(10);
  auto shuffled = labels;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const std::vector<int> sh_train(shuffled.begin(), shuffled.begin() + n_train);
  const std::vector<int> sh_test(shuffled.begin() + n_train, shuffled.end());
  const auto null_model = train_propensity(train, sh_train, cfg, 9);
  const double auc = roc_auc(null_model.predict(test), sh_test);
  EXPECT_GE(auc, 0.4);
  EXPECT_LE(auc, 0.6);

  const std::vector<int> one_class(n_train, 1);
  EXPECT_THROW(train_propensity(train, one_class, cfg, 9), InvalidArgument);
}

TEST(Propensity, GradientCheckWithL2) {
  PropensityConfig cfg;
  cfg.hidden = {6, 4};
  PropensityModel model(5, cfg, 3);
  EXPECT_EQ(model.network().l2_layer(), 1u);
  EXPECT_EQ(model.network().l2_lambda(), 0.001);
  Rng rng(4);
  std::uniform_real_distribution<double> u(-1, 1);
  nn::Tensor x({10, 5});
  for (auto& v : x.values()) v = u(rng);
  const std::vector<double> y{1, 0, 0, 1, 1, 0, 1, 0, 1, 1};
  auto& net = model.network();
  const auto r = nn::check_gradients(net.parameters(), [&](bool bp) { return net.bce_loss(x, y, bp); });
  EXPECT_LT(r.max_relative_error, 1e-4);
}

TEST(RocAuc, HandValues) {
  EXPECT_DOUBLE_EQ(roc_auc(std::vector<double>{0.1, 0.4, 0.35, 0.8}, std::vector<int>{0, 0, 1, 1}), 0.75);
  EXPECT_DOUBLE_EQ(roc_auc(std::vector<double>{0.5, 0.5}, std::vector<int>{0, 1}), 0.5);
}
