// Acceptance suite: runs every criterion and prints one pass/fail line each.
// Exit status is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "support.hpp"
#include "tsd/convnet.hpp"
#include "tsd/dba.hpp"
#include "tsd/dtw.hpp"
#include "tsd/kg.hpp"
#include "tsd/matcher.hpp"
#include "tsd/metrics.hpp"
#include "tsd/pipeline.hpp"

using namespace tsd;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* pattern, auto... args) {
  char buffer[512];
  std::snprintf(buffer, sizeof(buffer), pattern, args...);
  return std::string(buffer);
}

// --- criterion 1: DTW oracle equivalence -----------------------------------

Outcome criterion_dtw_oracle() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(1001);
  double worst = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t channels = 1 + rng.below(2);
    const auto a = tsupport::random_multichannel(rng, 1 + rng.below(40), channels);
    const auto b = tsupport::random_multichannel(rng, 1 + rng.below(40), channels);
    worst = std::max(worst, std::abs(dtw_distance(a, b) - tsupport::naive_dtw(a, b)));
  }
  const double elapsed = seconds_since(start);
  return {worst < 1e-9 && elapsed < 30.0,
          fmt("max |dtw - oracle| = %.2e over 500 pairs, %.1f s", worst, elapsed)};
}

// --- criterion 2: DBA monotonicity ------------------------------------------

Outcome criterion_dba_monotonicity() {
  Rng rng(1002);
  int groups_ok = 0;
  double worst_increase = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<MultiChannelSeries> group;
    const std::size_t count = 2 + rng.below(6);
    const std::size_t channels = 1 + rng.below(2);
    const std::size_t len = 4 + rng.below(16);
    for (std::size_t i = 0; i < count; ++i)
      group.push_back(tsupport::random_multichannel(rng, len, channels));

    std::vector<double> trace;
    const MultiChannelSeries init = group[rng.below(count)];
    const MultiChannelSeries result = dba_barycenter(group, init, 30, 1e-9, &trace);

    bool monotone = true;
    for (std::size_t i = 1; i < trace.size(); ++i) {
      worst_increase = std::max(worst_increase, trace[i] - trace[i - 1]);
      if (trace[i] > trace[i - 1] + 1e-9) monotone = false;
    }
    auto inertia = [&group](const MultiChannelSeries& b) {
      double total = 0.0;
      for (const auto& s : group) {
        const double d = dtw_distance(s, b);
        total += d * d;
      }
      return total;
    };
    if (monotone && inertia(result) <= inertia(init) + 1e-9) ++groups_ok;
  }
  return {groups_ok == 100,
          fmt("%d/100 groups monotone (worst increase %.2e)", groups_ok, worst_increase)};
}

// --- criterion 3: clustering recovery ----------------------------------------

Outcome criterion_clustering_recovery() {
  const auto start = std::chrono::steady_clock::now();
  int ari_ok = 0, elbow_ok = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto data = tsupport::prototype_groups(3, 60, 24, 0.1, 10050 + seed);
    KMeansOptions opts;  // defaults carry the 20/500/300 caps
    const Clustering c = dba_kmeans(data.series, 3, opts, seed);
    if (ari(c.assignments, data.labels) == 1.0) ++ari_ok;

    KMeansOptions scan = opts;
    scan.n_init = 4;  // cheaper scan, as configured for elbow estimation
    if (estimate_k(data.series, 1, 6, scan, seed).chosen_k == 3) ++elbow_ok;
  }
  const double elapsed = seconds_since(start);
  return {ari_ok >= 9 && elbow_ok >= 8 && elapsed < 120.0,
          fmt("ARI==1 in %d/10 seeds, elbow k=3 in %d/10, %.1f s", ari_ok, elbow_ok, elapsed)};
}

// --- criterion 4: metric oracles ---------------------------------------------

Outcome criterion_metric_oracles() {
  double worst = 0.0;
  long pairs = 0;
  for (int n = 1; n <= 8; ++n) {
    const auto parts = tsupport::all_partitions(n);
    const long count = static_cast<long>(parts.size());
#pragma omp parallel for schedule(dynamic, 8) reduction(max : worst) reduction(+ : pairs)
    for (long i = 0; i < count; ++i) {
      for (long j = 0; j < count; ++j) {
        const auto& x = parts[static_cast<std::size_t>(i)];
        const auto& y = parts[static_cast<std::size_t>(j)];
        worst = std::max(worst, std::abs(ari(x, y) - tsupport::oracle_ari(x, y)));
        worst = std::max(worst, std::abs(nmi(x, y) - tsupport::oracle_nmi(x, y)));
        worst = std::max(worst, std::abs(purity(x, y) - tsupport::oracle_purity(x, y)));
        ++pairs;
      }
    }
  }

  Rng rng(1004);
  double worst_rho = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> xs, ys;
    const std::size_t n = 3 + rng.below(30);
    for (std::size_t i = 0; i < n; ++i) {
      xs.push_back(rng.normal());
      ys.push_back(rng.below(4) == 0 ? xs.back() : rng.normal());  // some ties via copies
    }
    worst_rho =
        std::max(worst_rho, std::abs(spearman(xs, ys).rho - tsupport::oracle_spearman_rho(xs, ys)));
  }
  return {worst < 1e-9 && worst_rho < 1e-12,
          fmt("max metric deviation %.2e over %ld partition pairs; max rho deviation %.2e", worst,
              pairs, worst_rho)};
}

// --- criterion 5: gradient correctness ---------------------------------------

Outcome criterion_gradients() {
  Rng rng(1005);
  double worst = 0.0;
  int models = 0, redraws = 0;
  while (models < 20) {
    ConvNetConfig cfg;
    cfg.input_len = 8 + static_cast<int>(rng.below(16));
    cfg.conv1_filters = 2 + static_cast<int>(rng.below(3));
    cfg.conv1_kernel = rng.below(2) == 0 ? 3 : 5;
    cfg.conv2_filters = 2 + static_cast<int>(rng.below(3));
    cfg.conv2_kernel = rng.below(2) == 0 ? 3 : 5;
    cfg.position_channel = rng.below(2) == 0;
    const ConvClassifier model =
        init_classifier(cfg, 5000 + static_cast<std::uint64_t>(models) * 131 + redraws);
    const TimeSeries x = tsupport::random_series(rng, static_cast<std::size_t>(cfg.input_len));
    // Central differences are only valid away from the ReLU kinks.
    if (kink_distance(model, x) < 1e-3) {
      ++redraws;
      continue;
    }
    worst = std::max(worst, gradient_check(model, x, static_cast<int>(rng.below(2))));
    ++models;
  }
  return {worst < 1e-4, fmt("max relative gradient error %.2e over 20 models (%d kink redraws)",
                            worst, redraws)};
}

// --- criterion 6: saliency localization --------------------------------------

Outcome criterion_saliency_localization() {
  const auto start = std::chrono::steady_clock::now();
  const auto train = tsupport::spike_task(60, 64, 30001);
  const auto test = tsupport::spike_task(50, 64, 40001);

  ConvNetConfig arch;
  arch.input_len = 64;
  arch.conv1_filters = 6;
  arch.conv1_kernel = 5;
  arch.conv2_filters = 6;
  arch.conv2_kernel = 5;
  TrainConfig tc;
  tc.epochs = 60;
  tc.batch_size = 8;
  tc.learning_rate = 0.1;
  tc.seed = 1;
  const TrainResult result = train_classifier(train.data, arch, tc);

  int correct = 0, localized = 0;
  for (std::size_t i = 0; i < test.data.size(); ++i) {
    const auto [cls, probs] = predict(result.model, test.data.series[i]);
    if (cls != (*test.data.binary_labels)[i]) continue;
    ++correct;
    const Heatmap map = saliency(result.model, test.data.series[i]);
    const auto argmax = std::max_element(map.relevance.begin(), map.relevance.end()) -
                        map.relevance.begin();
    if ((argmax < 32) == (cls == 0)) ++localized;
  }
  const double accuracy = static_cast<double>(correct) / static_cast<double>(test.data.size());
  const double led = correct > 0 ? static_cast<double>(localized) / correct : 0.0;
  const double elapsed = seconds_since(start);
  return {accuracy >= 0.95 && led >= 0.9 && elapsed < 120.0,
          fmt("test accuracy %.3f, heatmap argmax in correct half for %.1f%% (%.1f s)", accuracy,
              100.0 * led, elapsed)};
}

// --- criteria 7 + 8: saliency-guided discovery beats signal-only discovery ----

struct SubclassRuns {
  int ari_wins = 0;        // multivariate ARI strictly above input ARI
  int identified_geq = 0;  // multivariate discovers at least as many subclasses
  int both_geq = 0;        // ... and with at least the input mode's coverage
};

SubclassRuns run_subclass_experiment() {
  SubclassRuns out;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const std::string dir = tsupport::make_temp_dir("acc78-" + std::to_string(seed));
    tsupport::write_ucr(dir + "/train.tsv", tsupport::subclass_task(20, 48, 7000 + seed, 1.0, 3.0));
    tsupport::write_ucr(dir + "/test.tsv", tsupport::subclass_task(20, 48, 8000 + seed, 1.0, 3.0));

    PipelineConfig cfg;
    cfg.train_path = dir + "/train.tsv";
    cfg.test_path = dir + "/test.tsv";
    cfg.target_len = 48;
    cfg.modes = {Mode::input, Mode::multivariate};
    cfg.arch.conv1_filters = 6;
    cfg.arch.conv1_kernel = 5;
    cfg.arch.conv2_filters = 6;
    cfg.arch.conv2_kernel = 5;
    cfg.training.epochs = 200;
    cfg.training.batch_size = 8;
    cfg.training.learning_rate = 0.3;
    cfg.k_range = {3, 3};
    cfg.kmeans.n_init = 6;
    cfg.kmeans.max_iter = 60;
    cfg.kmeans.dba_iter = 30;
    cfg.kmeans.band = 3;
    cfg.elbow_n_init = 2;
    cfg.seed = seed;
    cfg.out_dir = dir + "/out";
    cfg.offline = true;

    const RunReport report = run(cfg);
    double ari_input = 0.0, ari_multi = 0.0, cov_input = 0.0, cov_multi = 0.0;
    int id_input = 0, id_multi = 0;
    for (const auto& e : report.at("clusterings")) {
      if (!e.at("error").is_null()) continue;
      const bool input_mode = e.at("mode").get<std::string>() == "input";
      (input_mode ? ari_input : ari_multi) += e.at("ari").get<double>() / 2.0;
      (input_mode ? id_input : id_multi) += e.at("matching").at("identified").get<int>();
      (input_mode ? cov_input : cov_multi) +=
          e.at("matching").at("mean_coverage").get<double>() / 2.0;
    }
    if (ari_multi > ari_input) ++out.ari_wins;
    if (id_multi >= id_input) {
      ++out.identified_geq;
      if (cov_multi >= cov_input) ++out.both_geq;
    }
  }
  return out;
}

Outcome criterion_success_1(const SubclassRuns& runs) {
  return {runs.ari_wins >= 8,
          fmt("multivariate ARI beats input-only in %d/10 seeds", runs.ari_wins)};
}

Outcome criterion_success_2(const SubclassRuns& runs) {
  return {runs.both_geq >= 8,
          fmt("multivariate identifies >= subclasses in %d/10 seeds, with >= coverage in %d/10",
              runs.identified_geq, runs.both_geq)};
}

// --- criterion 9: matching protocol -------------------------------------------

Outcome criterion_matching_protocol() {
  auto runs_of = [](std::vector<std::vector<const char*>> rows) {
    std::vector<MatchRun> runs;
    for (const auto& row : rows) {
      MatchRun run;
      for (const char* cell : row)
        run.assignments.push_back(cell ? std::optional<std::string>(cell) : std::nullopt);
      runs.push_back(std::move(run));
    }
    return runs;
  };
  const char* none = nullptr;

  struct Case {
    std::vector<std::vector<const char*>> rows;
    std::vector<std::optional<std::string>> expected;
  };
  const std::vector<Case> cases = {
      // plain majority, mirrors the five-repetition table protocol
      {{{"A"}, {"A"}, {"B"}, {none}, {"A"}}, {std::string("A")}},
      // all abstain stays abstain
      {{{none}, {none}, {none}, {none}, {none}}, {std::nullopt}},
      // abstentions never outvote a single real assignment
      {{{none}, {none}, {none}, {none}, {"C"}}, {std::string("C")}},
      // two-way tie breaks lexicographically
      {{{"B"}, {"A"}, {none}, {none}, {none}}, {std::string("A")}},
      // three-way tie breaks lexicographically
      {{{"c"}, {"b"}, {"a"}}, {std::string("a")}},
      // majority despite noise
      {{{"7"}, {"7"}, {"4"}, {"4"}, {"7"}}, {std::string("7")}},
      // unanimity
      {{{"X"}, {"X"}, {"X"}, {"X"}, {"X"}}, {std::string("X")}},
      // per-centroid independence (second column abstains overall)
      {{{"A", none}, {"A", none}, {"B", none}, {none, none}, {"A", none}},
       {std::string("A"), std::nullopt}},
      // tie between counts of 2 with abstentions around
      {{{"Z"}, {"Y"}, {none}, {"Y"}, {"Z"}}, {std::string("Y")}},
      // single run decides
      {{{"Q", "R"}}, {std::string("Q"), std::string("R")}},
      // later runs can flip an early leader
      {{{"A"}, {"B"}, {"B"}, {"B"}, {"A"}}, {std::string("B")}},
      // asymmetric abstention columns
      {{{none, "M"}, {"N", none}, {none, "M"}, {"N", none}, {none, none}},
       {std::string("N"), std::string("M")}},
  };

  std::size_t passed = 0;
  for (const Case& c : cases) {
    if (majority_vote(runs_of(c.rows)) == c.expected) ++passed;
  }

  // Self-match property: descriptions generated from the same centroids match
  // themselves perfectly.
  OfflineClient client;
  std::vector<MultiChannelSeries> centroids;
  {
    auto bump = [](std::size_t n, double frac, double width, double amp) {
      std::vector<double> v(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const double d = (static_cast<double>(i) - frac * static_cast<double>(n - 1)) / width;
        v[i] = amp * std::exp(-0.5 * d * d);
      }
      return TimeSeries(std::move(v));
    };
    std::vector<double> up(40), down(40);
    for (std::size_t i = 0; i < 40; ++i) {
      up[i] = static_cast<double>(i);
      down[i] = 40.0 - static_cast<double>(i);
    }
    centroids.emplace_back(TimeSeries(up));
    centroids.emplace_back(TimeSeries(down));
    centroids.emplace_back(bump(40, 0.2, 2.0, 2.0));
    centroids.emplace_back(bump(40, 0.8, 2.0, 2.0));
    centroids.emplace_back(bump(40, 0.5, 6.0, -2.0));
  }
  std::vector<SensorFault> faults;
  for (std::size_t i = 0; i < centroids.size(); ++i) {
    DescriptionRequest req;
    req.signal = centroids[i].signal().values;
    faults.push_back(
        {"c" + std::to_string(i), "class_" + std::to_string(i), client.describe(req), "n/a"});
  }
  std::size_t self_hits = 0, self_total = 0;
  for (const MatchRun& run : match_centroids(client, centroids, faults, 5)) {
    for (std::size_t i = 0; i < run.assignments.size(); ++i) {
      ++self_total;
      if (run.assignments[i] && *run.assignments[i] == "class_" + std::to_string(i)) ++self_hits;
    }
  }
  const bool pass = passed == cases.size() && self_hits == self_total;
  return {pass, fmt("%zu/%zu voting cases, self-match %zu/%zu", passed, cases.size(), self_hits,
                    self_total)};
}

// --- criterion 10: KG round-trip ----------------------------------------------

Outcome criterion_kg_roundtrip() {
  Rng rng(1010);
  int roundtrips = 0, queries_ok = 0;
  const std::vector<std::string> pieces = {"flat",        "spike",      "droop",   "ätzend",
                                           "信号",        "\"quoted\"", "a\\b",    "x\ny",
                                           "tab\tstop",   "naïve",      "Ω",       "dot.",
                                           "semi;colon",  "comma,",     "<angle>", "{brace}"};
  auto text_of = [&](bool allow_empty) {
    std::string out;
    const std::size_t count = (allow_empty ? 0 : 1) + rng.below(4);
    for (std::size_t i = 0; i < count; ++i) {
      if (i) out += ' ';
      out += pieces[rng.below(pieces.size())];
    }
    if (!allow_empty && out.empty()) out = "x";
    return out;
  };

  for (int trial = 0; trial < 200; ++trial) {
    FaultGraph g;
    const std::size_t faults = rng.below(6);
    for (std::size_t i = 0; i < faults; ++i) {
      SensorFault f;
      f.id = "fault_" + std::to_string(i);
      f.name = "name " + std::to_string(i) + " " + text_of(false);
      f.fault_desc = text_of(false);
      f.severity = text_of(false);
      g.add_fault(f);
    }
    const std::size_t extra = rng.below(5);
    for (std::size_t i = 0; i < extra; ++i) {
      g.insert({Term::iri(kgns::base + "n" + std::to_string(rng.below(8))),
                Term::iri(kgns::base + "related_to"),
                rng.below(2) == 0
                    ? Term::iri("http://elsewhere.example/item?q=" + text_of(true))
                    : Term::literal(text_of(true), rng.below(2) == 0 ? "" : kgns::base + "T")});
    }

    if (from_turtle(to_turtle(g)) == g) ++roundtrips;

    // Query vs linear-scan oracle on a handful of random patterns.
    bool all_ok = true;
    for (int q = 0; q < 5; ++q) {
      std::optional<Term> s, p, o;
      if (g.size() > 0) {
        auto it = g.triples().begin();
        std::advance(it, static_cast<long>(rng.below(g.size())));
        if (rng.below(2) == 0) s = it->subject;
        if (rng.below(2) == 0) p = it->predicate;
        if (rng.below(2) == 0) o = it->object;
      }
      std::vector<Triple> expected;
      for (const Triple& t : g.triples()) {
        if (s && t.subject != *s) continue;
        if (p && t.predicate != *p) continue;
        if (o && t.object != *o) continue;
        expected.push_back(t);
      }
      if (g.query(s, p, o) != expected) all_ok = false;
    }
    if (all_ok) ++queries_ok;
  }
  return {roundtrips == 200 && queries_ok == 200,
          fmt("%d/200 round-trips, %d/200 query batches match the scan oracle", roundtrips,
              queries_ok)};
}

// --- criterion 11: end-to-end determinism --------------------------------------

Outcome criterion_determinism() {
  const std::string dir = tsupport::make_temp_dir("acc-determinism");
  tsupport::write_ucr(dir + "/train.tsv", tsupport::subclass_task(6, 32, 9100, 1.0, 3.0));
  tsupport::write_ucr(dir + "/test.tsv", tsupport::subclass_task(6, 32, 9101, 1.0, 3.0));

  nlohmann::json config;
  config["train"] = dir + "/train.tsv";
  config["test"] = dir + "/test.tsv";
  config["target_len"] = 32;
  config["classifier"] = {{"epochs", 8},      {"batch_size", 8},   {"learning_rate", 0.2},
                          {"conv1_filters", 4}, {"conv1_kernel", 5}, {"conv2_filters", 4},
                          {"conv2_kernel", 5}};
  config["k_range"] = {2, 3};
  config["clustering"] = {{"n_init", 2}, {"kmeans_iter", 20}, {"dba_iter", 10}, {"band", 3},
                          {"elbow_n_init", 1}};
  config["matching"] = {{"repetitions", 3}};
  config["seed"] = 17;
  config["out"] = dir + "/out";
  {
    std::ofstream out(dir + "/config.json");
    out << config.dump(2) << "\n";
  }

  auto slurp = [](const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
  };

  const char* cli = std::getenv("TSD_CLI");
  std::string how;
  std::string first, second;
  if (cli && *cli) {
    const std::string cmd = std::string("\"") + cli + "\" run --offline --config \"" + dir +
                            "/config.json\" > \"" + dir + "/cli.log\" 2>&1";
    if (std::system(cmd.c_str()) != 0) return {false, "first CLI run failed, see cli.log"};
    first = slurp(dir + "/out/report.json");
    if (std::system(cmd.c_str()) != 0) return {false, "second CLI run failed, see cli.log"};
    second = slurp(dir + "/out/report.json");
    how = "via the CLI";
  } else {
    PipelineConfig cfg = config_from_json(config);
    cfg.offline = true;
    static_cast<void>(run(cfg));
    first = slurp(dir + "/out/report.json");
    static_cast<void>(run(cfg));
    second = slurp(dir + "/out/report.json");
    how = "in-process (TSD_CLI unset)";
  }
  const bool pass = !first.empty() && first == second;
  return {pass, fmt("%zu-byte reports %s, byte-identical: %s", first.size(), how.c_str(),
                    pass ? "yes" : "NO")};
}

// --- criterion 12: correlation analysis plumbing --------------------------------

Outcome criterion_correlation_plumbing() {
  const auto data = tsupport::prototype_groups(3, 20, 24, 0.15, 1012);
  const std::size_t n = data.series.size();

  std::vector<double> nmis, var_s_means, fracs;
  Rng rng(1013);
  for (int step = 0; step < 10; ++step) {
    // Plant a quality gradient: flip a growing fraction of assignments.
    std::vector<int> assignments = data.labels;
    const std::size_t flips = n * static_cast<std::size_t>(step) / 10;
    for (std::size_t f = 0; f < flips; ++f) {
      const std::size_t idx = rng.below(n);
      assignments[idx] = static_cast<int>(rng.below(3));
    }
    for (int c = 0; c < 3; ++c) {
      if (std::count(assignments.begin(), assignments.end(), c) == 0)
        assignments[static_cast<std::size_t>(c)] = c;  // keep clusters non-empty
    }

    std::vector<std::vector<MultiChannelSeries>> members(3);
    for (std::size_t i = 0; i < n; ++i)
      members[static_cast<std::size_t>(assignments[i])].push_back(data.series[i]);
    std::vector<MultiChannelSeries> centroids;
    for (int c = 0; c < 3; ++c)
      centroids.push_back(dba_barycenter(members[static_cast<std::size_t>(c)],
                                         members[static_cast<std::size_t>(c)][0], 20));

    double vs = 0.0, frac = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
      vs += var_s(members[c]) / 3.0;
      frac += dtw_frac(members[c], centroids[c], centroids, c) / 3.0;
    }
    nmis.push_back(nmi(assignments, data.labels));
    var_s_means.push_back(vs);
    fracs.push_back(frac);
  }

  const Correlation c_vs = spearman(var_s_means, nmis);
  const Correlation c_frac = spearman(fracs, nmis);
  const bool pass = c_vs.rho < -0.5 && c_vs.p_value < 0.05 && c_frac.rho < -0.5 &&
                    c_frac.p_value < 0.05;
  return {pass, fmt("var_s vs NMI rho=%.2f (p=%.3g), dtw_frac vs NMI rho=%.2f (p=%.3g)", c_vs.rho,
                    c_vs.p_value, c_frac.rho, c_frac.p_value)};
}

}  // namespace

int main() {
  struct Entry {
    int id;
    const char* name;
    std::function<Outcome()> fn;
  };

  // Criteria 7 and 8 share one set of pipeline runs.
  SubclassRuns subclass_runs;
  bool subclass_ready = false;
  auto ensure_subclass = [&]() {
    if (!subclass_ready) {
      subclass_runs = run_subclass_experiment();
      subclass_ready = true;
    }
  };

  const std::vector<Entry> entries = {
      {1, "dtw-oracle-equivalence", criterion_dtw_oracle},
      {2, "dba-monotonicity", criterion_dba_monotonicity},
      {3, "clustering-recovery", criterion_clustering_recovery},
      {4, "metric-oracles", criterion_metric_oracles},
      {5, "gradient-correctness", criterion_gradients},
      {6, "saliency-localization", criterion_saliency_localization},
      {7, "success-criterion-1",
       [&] {
         ensure_subclass();
         return criterion_success_1(subclass_runs);
       }},
      {8, "success-criterion-2",
       [&] {
         ensure_subclass();
         return criterion_success_2(subclass_runs);
       }},
      {9, "matching-protocol", criterion_matching_protocol},
      {10, "kg-round-trip", criterion_kg_roundtrip},
      {11, "determinism", criterion_determinism},
      {12, "correlation-plumbing", criterion_correlation_plumbing},
  };

  int failures = 0;
  for (const Entry& entry : entries) {
    Outcome outcome;
    const auto start = std::chrono::steady_clock::now();
    try {
      outcome = entry.fn();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double elapsed = seconds_since(start);
    std::printf("criterion %2d %-26s %s  (%s) [%.1f s]\n", entry.id, entry.name,
                outcome.pass ? "PASS" : "FAIL", outcome.detail.c_str(), elapsed);
    std::fflush(stdout);
    if (!outcome.pass) ++failures;
  }
  if (failures == 0) {
    std::printf("all %zu acceptance criteria passed\n", entries.size());
  } else {
    std::printf("%d acceptance criteria FAILED\n", failures);
  }
  return failures;
}
