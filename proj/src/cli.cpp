#include "editfx/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <optional>

#include "CLI11.hpp"
#include "editfx/causal.hpp"
#include "editfx/clickbait.hpp"
#include "editfx/clusterer.hpp"
#include "editfx/corpus.hpp"
#include "editfx/embedding.hpp"
#include "editfx/stats.hpp"
#include "editfx/synthbench.hpp"
#include "editfx/textsim.hpp"
#include "editfx/util.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace editfx {

namespace {

class UsageError : public Error {
public:
  using Error::Error;
};

struct Common {
  std::string config;
  std::string corpus;
  std::string embeddings;
  std::string out;
  std::string format = "jsonl";
  std::uint64_t seed = 1;
  unsigned jobs = 1;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* jobs_opt = nullptr;
  nlohmann::json cfg = nlohmann::json::object();

  void load_config() {
    std::string path = config;
    if (path.empty()) {
      if (const char* env = std::getenv(kConfigEnv); env && *env) path = env;
    }
    if (path.empty()) return;
    try {
      cfg = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(path + ": " + e.what());
    }
    if (!cfg.is_object()) throw DataError(path + ": config must be a JSON object");
    auto fill = [&](std::string& field, const char* key) {
      if (field.empty() && cfg.contains(key)) field = cfg.at(key).get<std::string>();
    };
    fill(corpus, "corpus");
    fill(embeddings, "embeddings");
    fill(out, "out");
    if (seed_opt && seed_opt->count() == 0 && cfg.contains("seed")) seed = cfg.at("seed").get<std::uint64_t>();
    if (jobs_opt && jobs_opt->count() == 0 && cfg.contains("jobs")) jobs = cfg.at("jobs").get<unsigned>();
  }

  nlohmann::json section(const char* key) const {
    if (cfg.contains(key)) return cfg.at(key);
    return nlohmann::json::object();
  }

  CorpusFormat corpus_format() const {
    if (format == "jsonl") return CorpusFormat::jsonl;
    if (format == "csv") return CorpusFormat::csv;
    throw UsageError("--format must be jsonl or csv");
  }
};

void add_common(CLI::App* cmd, Common& c, bool corpus, bool embeddings, bool out) {
  cmd->add_option("--config", c.config, std::string("JSON config file (default: $") + kConfigEnv + ")");
  if (corpus) {
    cmd->add_option("--corpus", c.corpus, "Paired-record corpus file");
    cmd->add_option("--format", c.format, "Corpus format: jsonl or csv")->capture_default_str();
  }
  if (embeddings) cmd->add_option("--embeddings", c.embeddings, "Word-vector text file");
  if (out) cmd->add_option("--out", c.out, "Output directory");
  c.seed_opt = cmd->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  c.jobs_opt = cmd->add_option("--jobs", c.jobs, "Worker threads")->capture_default_str();
}

const std::string& require(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string("missing required ") + flag);
  return value;
}

fs::path out_dir(const Common& c) {
  fs::path dir = require(c.out, "--out");
  fs::create_directories(dir);
  return dir;
}

void write_json(const fs::path& path, const ojson& j) { write_file_atomic(path, j.dump(2) + "\n"); }

template <class T>
void override_from(const CLI::Option* opt, T& target, const nlohmann::json& section, const char* key) {
  if (opt && opt->count() > 0) return;
  if (section.contains(key)) target = section.at(key).get<T>();
}

ojson test_json(const TestResult& t) {
  ojson j;
  j["statistic"] = t.statistic;
  j["p_value"] = t.p_value;
  j["method"] = to_string(t.method);
  j["exact"] = t.exact;
  if (t.method == TestMethod::welch_t) j["df"] = t.df;
  return j;
}

ojson distribution_json(std::vector<double> v) {
  ojson j;
  j["n"] = v.size();
  j["mean"] = mean(v);
  j["median"] = median(v);
  j["q25"] = quantile(v, 0.25);
  j["q75"] = quantile(v, 0.75);
  j["min"] = *std::min_element(v.begin(), v.end());
  j["max"] = *std::max_element(v.begin(), v.end());
  return j;
}

std::vector<EditProfile> load_aligned_profiles(const fs::path& path, const Corpus& corpus) {
  auto profiles = load_profiles(path);
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    if (!corpus.find(profiles[i].record_id)) {
      throw DataError(path.string() + ": profile for record " + profiles[i].record_id + " not in corpus");
    }
    seen[profiles[i].record_id] = i;
  }
  for (const auto& r : corpus.records()) {
    if (!seen.count(r.id)) throw DataError(path.string() + ": no profile for record " + r.id);
  }
  return profiles;
}

ClickbaitConfig clickbait_config_from_json(const nlohmann::json& j, ClickbaitConfig c) {
  override_from(nullptr, c.hidden_size, j, "hidden_size");
  override_from(nullptr, c.attention_size, j, "attention_size");
  override_from(nullptr, c.embedding_dim, j, "embedding_dim");
  override_from(nullptr, c.max_tokens, j, "max_tokens");
  override_from(nullptr, c.epochs, j, "epochs");
  override_from(nullptr, c.batch_size, j, "batch_size");
  override_from(nullptr, c.patience, j, "patience");
  override_from(nullptr, c.adam.learning_rate, j, "learning_rate");
  override_from(nullptr, c.adam.clip_norm, j, "clip_norm");
  return c;
}

// ---------------------------------------------------------------- commands

int cmd_ingest(Common& c, std::ostream& out, std::ostream& err) {
  const auto corpus = load_corpus(require(c.corpus, "--corpus"), c.corpus_format());
  for (const auto& r : corpus.rejections()) err << "line " << r.line << ": " << r.reason << "\n";
  out << corpus.size() << " records, " << corpus.rejections().size() << " rejected, " << corpus.empty_body_count()
      << " with empty body\n";
  if (!c.out.empty()) {
    ojson j;
    j["source"] = corpus.source_path();
    j["records"] = corpus.size();
    j["rejected"] = corpus.rejections().size();
    j["empty_body"] = corpus.empty_body_count();
    ojson outlets;
    for (const auto& [name, count] : mirroring_by_outlet(corpus)) outlets[name] = count.total;
    j["outlets"] = outlets;
    auto rej = ojson::array();
    for (const auto& r : corpus.rejections()) rej.push_back({{"line", r.line}, {"reason", r.reason}});
    j["rejections"] = rej;
    write_json(out_dir(c) / "ingest_report.json", j);
  }
  return kExitOk;
}

int cmd_profile(Common& c, std::ostream& out) {
  const auto corpus = load_corpus(require(c.corpus, "--corpus"), c.corpus_format());
  const auto table = load_table(require(c.embeddings, "--embeddings"));
  const auto dir = out_dir(c);
  const auto profiles = profile(corpus, table, c.jobs);
  save_profiles(profiles, dir / "profiles.csv");

  ojson summary;
  summary["records"] = profiles.size();
  summary["zero_hit"] = std::count_if(profiles.begin(), profiles.end(), [](const auto& p) { return p.zero_hit; });
  auto mirroring = ojson::array();
  for (const auto& [outlet, count] : mirroring_by_outlet(corpus)) {
    mirroring.push_back(
        {{"outlet", outlet}, {"mirrored", count.mirrored}, {"total", count.total}, {"fraction", count.fraction()}});
    out << outlet << ": " << count.mirrored << "/" << count.total << " mirrored\n";
  }
  summary["mirroring"] = mirroring;

  const auto outlets = corpus.outlets();
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_outlet;
  for (const auto& p : profiles) {
    auto& slot = by_outlet[corpus.at(p.record_id).outlet];
    slot.first.push_back(p.edit_distance);
    slot.second.push_back(p.embedding_similarity);
  }
  auto dists = ojson::array();
  for (const auto& o : outlets) {
    const auto& [d, s] = by_outlet.at(o);
    dists.push_back({{"outlet", o}, {"edit_distance", distribution_json(d)}, {"embedding_similarity", distribution_json(s)}});
  }
  summary["distributions"] = dists;
  auto mwu = ojson::array();
  for (std::size_t i = 0; i < outlets.size(); ++i) {
    for (std::size_t j = i + 1; j < outlets.size(); ++j) {
      const auto& a = by_outlet.at(outlets[i]);
      const auto& b = by_outlet.at(outlets[j]);
      mwu.push_back({{"a", outlets[i]},
                     {"b", outlets[j]},
                     {"edit_distance", test_json(mann_whitney_u(a.first, b.first))},
                     {"embedding_similarity", test_json(mann_whitney_u(a.second, b.second))}});
    }
  }
  summary["mann_whitney"] = mwu;
  write_json(dir / "profile_summary.json", summary);
  out << profiles.size() << " profiles written to " << (dir / "profiles.csv").string() << "\n";
  return kExitOk;
}

struct ClusterArgs {
  std::size_t k = 0;
  std::size_t k_max = 6;
  double threshold = kDefaultElbowThreshold;
  std::string profiles;
  CLI::Option* k_opt = nullptr;
  CLI::Option* k_max_opt = nullptr;
  CLI::Option* threshold_opt = nullptr;
};

int cmd_cluster(Common& c, ClusterArgs& a, std::ostream& out) {
  const auto sec = c.section("cluster");
  override_from(a.k_opt, a.k, sec, "k");
  override_from(a.k_max_opt, a.k_max, sec, "k_max");
  override_from(a.threshold_opt, a.threshold, sec, "threshold");
  const auto corpus = load_corpus(require(c.corpus, "--corpus"), c.corpus_format());
  const auto dir = out_dir(c);
  const fs::path profiles_path = a.profiles.empty() ? dir / "profiles.csv" : fs::path(a.profiles);
  auto profiles = load_aligned_profiles(profiles_path, corpus);
  const auto points = points_from_profiles(profiles);

  std::size_t k = a.k;
  if (k == 0) {
    if (a.k_max < 2) throw UsageError("--k-max must be at least 2");
    const auto elbow = elbow_select(points, a.k_max, c.seed, a.threshold, c.jobs);
    k = elbow.k;
    ojson j;
    j["selected_k"] = elbow.k;
    j["threshold"] = a.threshold;
    j["inertias"] = elbow.inertias;
    j["ratios"] = elbow.ratios;
    write_json(dir / "cluster_elbow.json", j);
    out << "elbow selected k = " << k << "\n";
  }
  const auto fit = fit_best_of(points, k, c.seed, kDefaultRestarts, InitMethod::kmeans_plus_plus, c.jobs);
  write_file_atomic(dir / "cluster_model.json", model_to_json(fit.model) + "\n");
  std::vector<ClusterAssignment> assignments;
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    profiles[i].cluster = fit.labels[i];
    assignments.push_back({profiles[i].record_id, fit.labels[i]});
  }
  save_profiles(profiles, dir / "profiles.csv");
  const auto table = cluster_fractions(assignments, corpus, k);
  std::string csv = "outlet";
  for (std::size_t i = 0; i < k; ++i) csv += ",cluster_" + std::to_string(i);
  csv += '\n';
  for (const auto& outlet : corpus.outlets()) {
    csv += outlet;
    for (double f : table.at(outlet)) csv += "," + format_double(f);
    csv += '\n';
  }
  write_file_atomic(dir / "cluster_fractions.csv", csv);
  out << "k = " << k << ", inertia = " << format_double(fit.model.inertia) << "\n";
  return kExitOk;
}

struct ClickbaitArgs {
  std::string data;
  std::string model;
  std::string profiles;
  std::size_t epochs = 0;
  CLI::Option* epochs_opt = nullptr;
};

int cmd_clickbait_train(Common& c, ClickbaitArgs& a, std::ostream& out) {
  auto cfg = clickbait_config_from_json(c.section("clickbait"), {});
  if (a.epochs_opt && a.epochs_opt->count() > 0) cfg.epochs = a.epochs;
  cfg.seed = c.seed;
  const auto data = load_labeled_csv(require(a.data, "--data"));
  std::optional<EmbeddingTable> table;
  if (!c.embeddings.empty()) table = load_table(c.embeddings);
  const auto dir = out_dir(c);
  const auto result = train_clickbait(data, cfg, table ? &*table : nullptr);
  const fs::path model_path = a.model.empty() ? dir / "clickbait_model.bin" : fs::path(a.model);
  result.model.save(model_path);
  ojson j;
  j["examples"] = data.size();
  j["test_f1"] = result.test_f1;
  j["test_precision"] = result.test_confusion.precision();
  j["test_recall"] = result.test_confusion.recall();
  j["epochs_run"] = result.epochs_run;
  j["validation_f1"] = result.validation_f1;
  write_json(dir / "clickbait_train.json", j);
  out << "test F1 = " << format_double(result.test_f1) << "\n";
  return kExitOk;
}

int cmd_clickbait_score(Common& c, ClickbaitArgs& a, std::ostream& out) {
  const auto dir = out_dir(c);
  const fs::path model_path = a.model.empty() ? dir / "clickbait_model.bin" : fs::path(a.model);
  if (!fs::exists(model_path)) throw DataError("clickbait model not found: " + model_path.string());
  const auto model = ClickbaitModel::load(model_path);
  const auto corpus = load_corpus(require(c.corpus, "--corpus"), c.corpus_format());
  const fs::path profiles_path = a.profiles.empty() ? dir / "profiles.csv" : fs::path(a.profiles);
  auto profiles = load_aligned_profiles(profiles_path, corpus);
  score_profiles(model, corpus, profiles);
  save_profiles(profiles, dir / "profiles.csv");
  ojson j;
  j["threshold"] = model.threshold();
  auto list = ojson::array();
  for (const auto& outlet : corpus.outlets()) {
    const auto shift = conditional_shift_table(profiles, corpus, outlet);
    const auto cmp = compare_clickbait_scores(profiles, corpus, outlet);
    ojson o;
    o["outlet"] = outlet;
    o["headlines_c"] = shift.headlines_c;
    o["headlines_nc"] = shift.headlines_nc;
    o["c_to_nc"] = shift.c_to_nc;
    o["nc_to_c"] = shift.nc_to_c;
    o["p_nc_given_c"] = shift.p_nc_given_c ? ojson(*shift.p_nc_given_c) : ojson(nullptr);
    o["p_c_given_nc"] = shift.p_c_given_nc ? ojson(*shift.p_c_given_nc) : ojson(nullptr);
    o["mean_headline_score"] = cmp.mean_headline;
    o["mean_post_score"] = cmp.mean_post;
    o["post_vs_headline"] = cmp.post_vs_headline ? test_json(*cmp.post_vs_headline) : ojson(nullptr);
    list.push_back(std::move(o));
    out << outlet << ": P(NC|C) = " << (shift.p_nc_given_c ? format_double(*shift.p_nc_given_c) : "undefined")
        << ", P(C|NC) = " << (shift.p_c_given_nc ? format_double(*shift.p_c_given_nc) : "undefined") << "\n";
  }
  j["outlets"] = list;
  write_json(dir / "clickbait_report.json", j);
  return kExitOk;
}

struct EstimateArgs {
  std::string profiles;
  std::string scenarios;
  std::size_t knn = 5;
  double alpha = 1.5;
  double tau = 0.8;
  std::size_t folds = 10;
  std::size_t min_group = 30;
  CLI::Option* knn_opt = nullptr;
  CLI::Option* alpha_opt = nullptr;
  CLI::Option* tau_opt = nullptr;
  CLI::Option* folds_opt = nullptr;
  CLI::Option* min_group_opt = nullptr;
};

int cmd_estimate(Common& c, EstimateArgs& a, std::ostream& out, std::ostream& err) {
  const auto sec = c.section("estimate");
  auto config = causal_config_from_json(sec);
  auto flag = [](const CLI::Option* o) { return o && o->count() > 0; };
  if (flag(a.knn_opt)) config.k = a.knn;
  if (flag(a.alpha_opt)) config.alpha = a.alpha;
  if (flag(a.tau_opt)) config.tau = a.tau;
  if (flag(a.folds_opt)) config.folds = a.folds;
  if (flag(a.min_group_opt)) config.min_group = a.min_group;
  if (config.k == 0) throw UsageError("--knn must be positive");
  if (config.folds < 2) throw UsageError("--folds must be at least 2");
  config.seed = c.seed;
  config.jobs = c.jobs;

  nlohmann::json scenario_json = nlohmann::json::array();
  if (!a.scenarios.empty()) {
    try {
      scenario_json = nlohmann::json::parse(read_file(a.scenarios));
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(a.scenarios + ": " + e.what());
    }
    if (scenario_json.is_object()) scenario_json = scenario_json.value("scenarios", nlohmann::json::array());
  } else if (sec.contains("scenarios")) {
    scenario_json = sec.at("scenarios");
  }
  if (!scenario_json.is_array()) throw DataError("scenarios must be a JSON array");
  if (scenario_json.empty()) throw UsageError("no scenarios given (use --scenarios or the config's estimate.scenarios)");
  std::vector<Scenario> scenarios;
  for (const auto& s : scenario_json) scenarios.push_back(scenario_from_json(s));

  const auto corpus = load_corpus(require(c.corpus, "--corpus"), c.corpus_format());
  const auto table = load_table(require(c.embeddings, "--embeddings"));
  const auto dir = out_dir(c);
  const fs::path profiles_path = a.profiles.empty() ? dir / "profiles.csv" : fs::path(a.profiles);
  const auto profiles = load_aligned_profiles(profiles_path, corpus);
  const CausalDataset data(corpus, profiles, table);

  std::vector<ScenarioOutcome> outcomes;
  for (const auto& s : scenarios) {
    ScenarioOutcome o;
    o.scenario = s;
    try {
      o.reports = run_scenario(data, s, config);
    } catch (const InsufficientUnits& e) {
      o.skipped = true;
      o.skip_reason = e.what();
      err << "warning: skipping " << e.what() << "\n";
    }
    for (const auto& r : o.reports) {
      out << s.name << " " << to_string(r.metric) << ": EATE " << format_double(r.mean_eate) << " [" << format_double(r.ci_low)
          << ", " << format_double(r.ci_high) << "]" << (r.discarded ? " discarded" : "") << "\n";
    }
    outcomes.push_back(std::move(o));
  }
  write_file_atomic(dir / "eate_report.json", outcomes_to_json(outcomes, config).dump(2) + "\n");
  write_file_atomic(dir / "eate_report.csv", outcomes_to_csv(outcomes));
  return kExitOk;
}

struct SynthArgs {
  std::string spec;
  std::size_t clickbait_examples = 0;
};

int cmd_synth(Common& c, SynthArgs& a, std::ostream& out) {
  SynthSpec spec;
  if (!a.spec.empty()) {
    spec = load_synth_spec(a.spec);
  } else if (c.cfg.contains("synth")) {
    spec = synth_spec_from_json(c.cfg.at("synth"));
  } else {
    throw UsageError("missing required --spec");
  }
  if (c.seed_opt && c.seed_opt->count() > 0) spec.seed = c.seed;
  const auto dir = out_dir(c);
  const auto result = generate(spec);
  write_file_atomic(dir / "corpus.jsonl", to_jsonl(result.corpus));
  write_file_atomic(dir / "truth.jsonl", truth_to_jsonl(result.truth));
  write_file_atomic(dir / "embeddings.txt", result.table.to_text());
  if (a.clickbait_examples > 0) {
    write_file_atomic(dir / "clickbait_train.csv",
                      labeled_to_csv(separable_clickbait_corpus(a.clickbait_examples, derive_seed(spec.seed, 0xCB))));
  }
  out << result.corpus.size() << " records written to " << (dir / "corpus.jsonl").string() << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Headline-editing analytics and engagement effect estimation", "editfx"};
  app.require_subcommand(1);

  Common c;
  ClusterArgs cluster;
  ClickbaitArgs cb;
  EstimateArgs est;
  SynthArgs synth;

  auto* ingest = app.add_subcommand("ingest", "Validate a corpus file and report rejects");
  add_common(ingest, c, true, false, true);

  auto* prof = app.add_subcommand("profile", "Edit distance, embedding similarity and mirroring per record");
  add_common(prof, c, true, true, true);

  auto* clus = app.add_subcommand("cluster", "K-means++ on (similarity, distance) with per-outlet fractions");
  add_common(clus, c, true, false, true);
  clus->add_option("--profiles", cluster.profiles, "Profile CSV (default: <out>/profiles.csv)");
  cluster.k_opt = clus->add_option("--k", cluster.k, "Number of clusters (0 selects by elbow)");
  cluster.k_max_opt = clus->add_option("--k-max", cluster.k_max, "Largest k tried by the elbow rule")->capture_default_str();
  cluster.threshold_opt =
      clus->add_option("--threshold", cluster.threshold, "Elbow reduction-ratio threshold")->capture_default_str();

  auto* cbait = app.add_subcommand("clickbait", "Train or apply the clickbait classifier");
  cbait->require_subcommand(1);
  auto* train = cbait->add_subcommand("train", "Train on a text,label CSV and report held-out F1");
  add_common(train, c, false, true, true);
  train->add_option("--data", cb.data, "Labeled headline CSV");
  train->add_option("--model", cb.model, "Model output path (default: <out>/clickbait_model.bin)");
  cb.epochs_opt = train->add_option("--epochs", cb.epochs, "Training epochs");
  auto* score = cbait->add_subcommand("score", "Score headlines and posts; write shift tables");
  add_common(score, c, true, false, true);
  score->add_option("--model", cb.model, "Trained model (default: <out>/clickbait_model.bin)");
  score->add_option("--profiles", cb.profiles, "Profile CSV (default: <out>/profiles.csv)");

  auto* estimate = app.add_subcommand("estimate", "Propensity matching and EATE for each scenario");
  add_common(estimate, c, true, true, true);
  estimate->add_option("--profiles", est.profiles, "Profile CSV (default: <out>/profiles.csv)");
  estimate->add_option("--scenarios", est.scenarios, "Scenario JSON file");
  est.knn_opt = estimate->add_option("--knn", est.knn, "Matched controls per treatment")->capture_default_str();
  est.alpha_opt = estimate->add_option("--alpha", est.alpha, "Balance-gate alpha")->capture_default_str();
  est.tau_opt = estimate->add_option("--tau", est.tau, "Balance-gate floor tau")->capture_default_str();
  est.folds_opt = estimate->add_option("--folds", est.folds, "Cross-validation folds")->capture_default_str();
  est.min_group_opt =
      estimate->add_option("--min-group", est.min_group, "Minimum units per arm")->capture_default_str();

  auto* syn = app.add_subcommand("synth", "Generate a synthetic corpus with known effects");
  add_common(syn, c, false, false, true);
  syn->add_option("--spec", synth.spec, "Synthetic spec JSON");
  syn->add_option("--clickbait-examples", synth.clickbait_examples,
                  "Also write a separable labeled headline set of this size");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    c.load_config();
    if (ingest->parsed()) return cmd_ingest(c, out, err);
    if (prof->parsed()) return cmd_profile(c, out);
    if (clus->parsed()) return cmd_cluster(c, cluster, out);
    if (train->parsed()) return cmd_clickbait_train(c, cb, out);
    if (score->parsed()) return cmd_clickbait_score(c, cb, out);
    if (estimate->parsed()) return cmd_estimate(c, est, out, err);
    if (syn->parsed()) return cmd_synth(c, synth, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    err << "error: config: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace editfx
