#include "tsd/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "tsd/metrics.hpp"
#include "tsd/seeds.hpp"

namespace tsd {

using json = nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// UCR ingestion

namespace {

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> cells;
  std::string current;
  for (char c : line) {
    if (c == '\t' || c == ',' || c == ' ' || c == '\r') {
      if (!current.empty()) {
        cells.push_back(std::move(current));
        current.clear();
      }
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) cells.push_back(std::move(current));
  return cells;
}

double parse_cell(const std::string& cell, std::size_t row) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("row " + std::to_string(row) + ": non-numeric cell '" + cell + "'");
  }
}

}  // namespace

LabeledDataset load_ucr(const std::string& path, Split split) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read dataset: " + path);

  LabeledDataset data;
  data.split = split;
  std::string line;
  std::size_t row = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++row;
    const std::vector<std::string> cells = split_cells(line);
    if (cells.empty()) continue;
    if (cells.size() < 2)
      throw std::runtime_error("row " + std::to_string(row) + ": needs a label and values");
    if (width == 0) width = cells.size();
    if (cells.size() != width)
      throw std::runtime_error("row " + std::to_string(row) + ": ragged row (" +
                               std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(width) + ")");

    const double label_raw = parse_cell(cells[0], row);
    const double rounded = std::round(label_raw);
    if (std::abs(label_raw - rounded) > 1e-9 || rounded < 1.0)
      throw std::runtime_error("row " + std::to_string(row) + ": label must be a positive integer");
    data.original_labels.push_back(static_cast<int>(rounded));

    std::vector<double> values;
    values.reserve(cells.size() - 1);
    for (std::size_t i = 1; i < cells.size(); ++i) values.push_back(parse_cell(cells[i], row));
    data.series.emplace_back(std::move(values));
  }
  if (data.series.empty()) throw std::runtime_error("empty dataset file: " + path);
  data.validate();
  return data;
}

void save_ucr(const LabeledDataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset: " + path);
  out.precision(17);
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data.original_labels[i];
    for (double v : data.series[i].values) out << '\t' << v;
    out << '\n';
  }
}

std::vector<int> load_predictions_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read predictions: " + path);
  std::vector<int> out;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    const auto cells = split_cells(line);
    if (cells.empty()) continue;
    const double v = parse_cell(cells[0], row);
    if (v != 0.0 && v != 1.0)
      throw std::runtime_error("row " + std::to_string(row) + ": prediction must be 0 or 1");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

void save_predictions_csv(const std::vector<int>& predictions, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write predictions: " + path);
  for (int p : predictions) out << p << '\n';
}

// ---------------------------------------------------------------------------
// Dataset selection

std::vector<FilterVerdict> filter_datasets(const std::vector<DatasetDescriptor>& metadata) {
  std::vector<FilterVerdict> verdicts;
  verdicts.reserve(metadata.size());
  for (const DatasetDescriptor& d : metadata) {
    if (d.per_class_test_counts.empty())
      throw std::invalid_argument("descriptor '" + d.name + "': per-class test counts missing");
    FilterVerdict v;
    v.name = d.name;
    v.class_count_ok = d.class_count >= 6 && d.class_count <= 16;
    v.per_class_ok =
        *std::min_element(d.per_class_test_counts.begin(), d.per_class_test_counts.end()) >= 100;
    v.length_ok = d.series_length >= 100;
    v.not_image_ok = !d.image_derived;
    v.accuracy_ok = d.reference_accuracy >= 0.6;
    verdicts.push_back(v);
  }
  return verdicts;
}

DatasetDescriptor descriptor_from_json(const json& doc) {
  for (const char* field : {"name", "class_count", "per_class_test_counts", "series_length",
                            "reference_accuracy", "image_derived"}) {
    if (!doc.contains(field))
      throw std::invalid_argument(std::string("dataset descriptor: missing field '") + field + "'");
  }
  DatasetDescriptor d;
  d.name = doc.at("name").get<std::string>();
  d.class_count = doc.at("class_count").get<int>();
  d.per_class_test_counts = doc.at("per_class_test_counts").get<std::vector<int>>();
  d.series_length = doc.at("series_length").get<int>();
  d.reference_accuracy = doc.at("reference_accuracy").get<double>();
  d.image_derived = doc.at("image_derived").get<bool>();
  return d;
}

// ---------------------------------------------------------------------------
// Configuration

PipelineConfig config_from_json(const json& doc) {
  PipelineConfig cfg;
  cfg.train_path = doc.value("train", "");
  cfg.test_path = doc.value("test", "");
  if (doc.contains("modes")) {
    cfg.modes.clear();
    for (const auto& m : doc.at("modes")) cfg.modes.push_back(mode_from_string(m.get<std::string>()));
    if (cfg.modes.empty()) throw std::invalid_argument("config: mode set must be non-empty");
  }
  cfg.target_len = doc.value("target_len", cfg.target_len);

  if (doc.contains("classifier")) {
    const json& c = doc.at("classifier");
    cfg.training.epochs = c.value("epochs", cfg.training.epochs);
    cfg.training.batch_size = c.value("batch_size", cfg.training.batch_size);
    cfg.training.learning_rate = c.value("learning_rate", cfg.training.learning_rate);
    cfg.training.val_fraction = c.value("val_fraction", cfg.training.val_fraction);
    cfg.arch.conv1_filters = c.value("conv1_filters", cfg.arch.conv1_filters);
    cfg.arch.conv1_kernel = c.value("conv1_kernel", cfg.arch.conv1_kernel);
    cfg.arch.conv2_filters = c.value("conv2_filters", cfg.arch.conv2_filters);
    cfg.arch.conv2_kernel = c.value("conv2_kernel", cfg.arch.conv2_kernel);
    cfg.arch.position_channel = c.value("position_channel", cfg.arch.position_channel);
  }
  if (doc.contains("external_saliency"))
    cfg.external_saliency_csv = doc.at("external_saliency").get<std::string>();
  if (doc.contains("external_predictions"))
    cfg.external_predictions_csv = doc.at("external_predictions").get<std::string>();

  if (doc.contains("k_range")) {
    const auto& r = doc.at("k_range");
    cfg.k_range.lo = r.at(0).get<int>();
    cfg.k_range.hi = r.at(1).get<int>();
  }
  if (doc.contains("clustering")) {
    const json& c = doc.at("clustering");
    cfg.kmeans.n_init = c.value("n_init", cfg.kmeans.n_init);
    cfg.kmeans.max_iter = c.value("kmeans_iter", cfg.kmeans.max_iter);
    cfg.kmeans.dba_iter = c.value("dba_iter", cfg.kmeans.dba_iter);
    cfg.kmeans.tol = c.value("tol", cfg.kmeans.tol);
    if (c.contains("band") && !c.at("band").is_null()) cfg.kmeans.band = c.at("band").get<int>();
    cfg.elbow_n_init = c.value("elbow_n_init", cfg.kmeans.n_init);
  }
  if (doc.contains("matching")) {
    const json& m = doc.at("matching");
    cfg.repetitions = m.value("repetitions", cfg.repetitions);
    cfg.match_threshold = m.value("threshold", cfg.match_threshold);
    cfg.quality.min_silhouette = m.value("min_silhouette", cfg.quality.min_silhouette);
    cfg.quality.max_dtw_frac = m.value("max_dtw_frac", cfg.quality.max_dtw_frac);
  }
  if (doc.contains("llm")) {
    const json& l = doc.at("llm");
    cfg.llm.base_url = l.value("base_url", cfg.llm.base_url);
    cfg.llm.path = l.value("path", cfg.llm.path);
    cfg.llm.model = l.value("model", cfg.llm.model);
    cfg.llm.api_key_env = l.value("api_key_env", cfg.llm.api_key_env);
    cfg.llm.temperature = l.value("temperature", cfg.llm.temperature);
    cfg.llm.max_retries = l.value("max_retries", cfg.llm.max_retries);
    cfg.llm.backoff_base_ms = l.value("backoff_base_ms", cfg.llm.backoff_base_ms);
    cfg.llm.timeout_sec = l.value("timeout_sec", cfg.llm.timeout_sec);
  }
  if (doc.contains("kg")) cfg.kg_path = doc.at("kg").get<std::string>();
  cfg.offline = doc.value("offline", cfg.offline);
  cfg.seed = doc.value("seed", cfg.seed);
  cfg.out_dir = doc.value("out", cfg.out_dir);
  cfg.plots = doc.value("plots", cfg.plots);

  if (cfg.target_len < 2) throw std::invalid_argument("config: target_len must be >= 2");
  if (cfg.k_range.lo < 1 || cfg.k_range.hi < cfg.k_range.lo)
    throw std::invalid_argument("config: invalid k range");
  if (cfg.repetitions < 1) throw std::invalid_argument("config: repetitions must be positive");
  if (cfg.kmeans.n_init < 1 || cfg.kmeans.max_iter < 1 || cfg.kmeans.dba_iter < 1)
    throw std::invalid_argument("config: clustering caps must be positive");
  return cfg;
}

json config_to_json(const PipelineConfig& cfg) {
  json doc;
  doc["train"] = cfg.train_path;
  doc["test"] = cfg.test_path;
  json modes = json::array();
  for (Mode m : cfg.modes) modes.push_back(to_string(m));
  doc["modes"] = modes;
  doc["target_len"] = cfg.target_len;
  doc["classifier"] = {{"epochs", cfg.training.epochs},
                       {"batch_size", cfg.training.batch_size},
                       {"learning_rate", cfg.training.learning_rate},
                       {"val_fraction", cfg.training.val_fraction},
                       {"conv1_filters", cfg.arch.conv1_filters},
                       {"conv1_kernel", cfg.arch.conv1_kernel},
                       {"conv2_filters", cfg.arch.conv2_filters},
                       {"conv2_kernel", cfg.arch.conv2_kernel},
                       {"position_channel", cfg.arch.position_channel}};
  if (cfg.external_saliency_csv) doc["external_saliency"] = *cfg.external_saliency_csv;
  if (cfg.external_predictions_csv) doc["external_predictions"] = *cfg.external_predictions_csv;
  doc["k_range"] = {cfg.k_range.lo, cfg.k_range.hi};
  doc["clustering"] = {{"n_init", cfg.kmeans.n_init},
                       {"kmeans_iter", cfg.kmeans.max_iter},
                       {"dba_iter", cfg.kmeans.dba_iter},
                       {"tol", cfg.kmeans.tol},
                       {"band", cfg.kmeans.band ? json(*cfg.kmeans.band) : json(nullptr)},
                       {"elbow_n_init", cfg.elbow_n_init}};
  doc["matching"] = {{"repetitions", cfg.repetitions},
                     {"threshold", cfg.match_threshold},
                     {"min_silhouette", cfg.quality.min_silhouette},
                     {"max_dtw_frac", cfg.quality.max_dtw_frac}};
  doc["llm"] = {{"base_url", cfg.llm.base_url},     {"path", cfg.llm.path},
                {"model", cfg.llm.model},           {"api_key_env", cfg.llm.api_key_env},
                {"temperature", cfg.llm.temperature}, {"max_retries", cfg.llm.max_retries},
                {"backoff_base_ms", cfg.llm.backoff_base_ms}, {"timeout_sec", cfg.llm.timeout_sec}};
  if (cfg.kg_path) doc["kg"] = *cfg.kg_path;
  doc["offline"] = cfg.offline;
  doc["seed"] = cfg.seed;
  doc["out"] = cfg.out_dir;
  doc["plots"] = cfg.plots;
  return doc;
}

// ---------------------------------------------------------------------------
// Pipeline

void preprocess_dataset(LabeledDataset& data, int target_len) {
  if (data.series.empty()) throw std::invalid_argument("preprocess: empty dataset");
  for (TimeSeries& s : data.series) {
    const TimeSeries shrunk =
        static_cast<int>(s.size()) > target_len ? downsample(s, target_len) : s;
    s = z_normalize(shrunk);
  }
  const std::size_t len = data.series.front().size();
  for (const TimeSeries& s : data.series) {
    if (s.size() != len)
      throw std::runtime_error("series lengths disagree after preprocessing; "
                               "choose a target_len no longer than the shortest series");
  }
}

MultiChannelSeries build_mode_series(Mode mode, const TimeSeries& signal, const Heatmap& heatmap) {
  switch (mode) {
    case Mode::input: return MultiChannelSeries(signal);
    case Mode::saliency: return MultiChannelSeries(z_normalize(TimeSeries(heatmap.relevance)));
    case Mode::multivariate:
      return MultiChannelSeries(signal, z_normalize(TimeSeries(heatmap.relevance)));
  }
  throw std::invalid_argument("unknown mode");
}

namespace {

json heatmap_stats(const std::vector<Heatmap>& maps) {
  json out;
  out["count"] = maps.size();
  out["length"] = maps.empty() ? 0 : maps[0].size();
  return out;
}

double mean_of(const std::vector<double>& v) {
  double total = 0.0;
  for (double x : v) total += x;
  return v.empty() ? 0.0 : total / static_cast<double>(v.size());
}

json opt_number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

struct GroupSeries {
  std::vector<std::size_t> test_indices;        // provenance into the test set
  std::vector<MultiChannelSeries> series;
  std::vector<int> labels;                      // original labels, aligned with series
};

}  // namespace

RunReport run(const PipelineConfig& cfg) {
  RunReport report;
  report["schema"] = "tsd-run-report";
  report["version"] = 1;
  report["seed"] = cfg.seed;
  report["config"] = config_to_json(cfg);

  fs::create_directories(cfg.out_dir);

  std::string stage = "load";
  auto persist_partial = [&report, &cfg](const std::string& failed_stage, const std::string& why) {
    report["failed_stage"] = failed_stage;
    report["error"] = why;
    std::ofstream out(fs::path(cfg.out_dir) / "report-partial.json");
    if (out) out << report.dump(2) << "\n";
  };

  try {
    // -- load ---------------------------------------------------------------
    LabeledDataset train = load_ucr(cfg.train_path, Split::train);
    LabeledDataset test = load_ucr(cfg.test_path, Split::test);

    // -- labels -------------------------------------------------------------
    stage = "labels";
    if (!train.binary_labels) train.binary_labels = subsume_labels(train.original_labels);
    if (!test.binary_labels) test.binary_labels = subsume_labels(test.original_labels);

    std::map<int, long> test_class_counts;
    for (int y : test.original_labels) ++test_class_counts[y];
    {
      json counts;
      for (const auto& [label, count] : test_class_counts)
        counts[std::to_string(label)] = count;
      report["dataset"] = {{"train_size", train.size()},
                           {"test_size", test.size()},
                           {"class_counts_test", counts}};
    }

    // -- preprocess ---------------------------------------------------------
    stage = "preprocess";
    preprocess_dataset(train, cfg.target_len);
    preprocess_dataset(test, cfg.target_len);
    report["dataset"]["length"] = train.series.front().size();

    // -- classifier + saliency ----------------------------------------------
    stage = "classifier";
    bool need_saliency = false;
    for (Mode m : cfg.modes) need_saliency |= m != Mode::input;

    std::vector<int> predicted(test.size(), 0);
    std::vector<Heatmap> heatmaps;
    json classifier_info;

    if (cfg.external_saliency_csv) {
      heatmaps = load_saliency_csv(*cfg.external_saliency_csv);
      if (heatmaps.size() != test.size())
        throw std::runtime_error("external saliency row count does not match the test set");
      if (!heatmaps.empty() && heatmaps[0].size() != test.series[0].size())
        throw std::runtime_error("external saliency length does not match the test series");
      if (cfg.external_predictions_csv) {
        predicted = load_predictions_csv(*cfg.external_predictions_csv);
        if (predicted.size() != test.size())
          throw std::runtime_error("external predictions row count does not match the test set");
      } else {
        predicted = *test.binary_labels;  // fall back to the subsumed labels
      }
      classifier_info["external"] = true;
    } else {
      TrainConfig tc = cfg.training;
      tc.seed = derive_seed(cfg.seed, "classifier");
      const TrainResult trained = train_classifier(train, cfg.arch, tc);

      stage = "saliency";
      if (need_saliency) heatmaps.assign(test.size(), Heatmap{});
      std::size_t hits = 0;
      std::vector<std::string> errors(test.size());
#pragma omp parallel for schedule(dynamic) reduction(+ : hits)
      for (long i = 0; i < static_cast<long>(test.size()); ++i) {
        const std::size_t idx = static_cast<std::size_t>(i);
        try {
          const auto [cls, probs] = predict(trained.model, test.series[idx]);
          predicted[idx] = cls;
          if (need_saliency) heatmaps[idx] = saliency(trained.model, test.series[idx]);
          if (cls == (*test.binary_labels)[idx]) ++hits;
        } catch (const std::exception& e) {
          errors[idx] = e.what();
        }
      }
      for (const std::string& e : errors) {
        if (!e.empty()) throw std::runtime_error("saliency extraction failed: " + e);
      }
      classifier_info["external"] = false;
      classifier_info["val_accuracy"] = trained.best_val_accuracy;
      classifier_info["train_accuracy"] = trained.train_accuracy;
      classifier_info["best_epoch"] = trained.best_epoch;
      classifier_info["test_accuracy"] =
          static_cast<double>(hits) / static_cast<double>(test.size());
    }
    classifier_info["saliency"] = heatmap_stats(heatmaps);
    report["classifier"] = classifier_info;

    // -- knowledge graph ----------------------------------------------------
    stage = "kg";
    OfflineClient offline_client(cfg.match_threshold, derive_seed(cfg.seed, "offline-client"));
    std::unique_ptr<RemoteClient> remote_client;
    if (!cfg.offline) remote_client = std::make_unique<RemoteClient>(cfg.llm);
    DescriptionClient& client =
        cfg.offline ? static_cast<DescriptionClient&>(offline_client) : *remote_client;

    FaultGraph graph;
    if (cfg.kg_path) {
      std::ifstream in(*cfg.kg_path);
      if (!in) throw std::runtime_error("cannot read knowledge graph: " + *cfg.kg_path);
      std::stringstream buffer;
      buffer << in.rdbuf();
      graph = from_turtle(buffer.str());
    } else {
      // One fault per original class, described from the class medoid of the
      // z-normalized training split.
      std::map<int, std::vector<TimeSeries>> by_class;
      for (std::size_t i = 0; i < train.size(); ++i)
        by_class[train.original_labels[i]].push_back(train.series[i]);
      for (const auto& [label, members] : by_class) {
        const std::size_t m = medoid(members, [](const TimeSeries& a, const TimeSeries& b) {
          return dtw_distance(a, b);
        });
        const std::string desc =
            describe_centroid(client, MultiChannelSeries(members[m]));
        graph.add_fault({"class_" + std::to_string(label), std::to_string(label), desc,
                         "unspecified"});
      }
    }
    {
      std::ofstream out(fs::path(cfg.out_dir) / "kg.ttl");
      if (!out) throw std::runtime_error("cannot write kg.ttl");
      out << to_turtle(graph);
    }
    const std::vector<SensorFault> faults = graph.all_faults();
    report["kg"] = {{"faults", faults.size()}, {"file", "kg.ttl"}};

    // -- clustering per (predicted class, mode) ------------------------------
    stage = "cluster";
    report["clusterings"] = json::array();

    for (int cls = 0; cls <= 1; ++cls) {
      GroupSeries base;
      for (std::size_t i = 0; i < test.size(); ++i) {
        if (predicted[i] == cls) {
          base.test_indices.push_back(i);
          base.labels.push_back(test.original_labels[i]);
        }
      }

      for (Mode mode : cfg.modes) {
        json entry;
        entry["class"] = cls;
        entry["mode"] = to_string(mode);
        entry["error"] = nullptr;
        try {
          if (base.test_indices.empty())
            throw std::runtime_error("no test samples predicted as class " + std::to_string(cls));

          GroupSeries group = base;
          static const Heatmap no_heatmap;
          for (std::size_t idx : group.test_indices) {
            group.series.push_back(build_mode_series(
                mode, test.series[idx], mode == Mode::input ? no_heatmap : heatmaps[idx]));
          }
          entry["sample_indices"] = group.test_indices;

          const std::uint64_t group_seed =
              derive_seed(cfg.seed, "cluster-" + to_string(mode) + "-class", static_cast<std::uint64_t>(cls));

          const int k_hi = std::min<int>(cfg.k_range.hi, static_cast<int>(group.series.size()));
          const int k_lo = std::min(cfg.k_range.lo, k_hi);
          KMeansOptions scan = cfg.kmeans;
          scan.n_init = cfg.elbow_n_init;
          const ElbowCurve elbow = estimate_k(group.series, k_lo, k_hi, scan, group_seed);
          entry["elbow"] = {{"ks", elbow.ks},
                            {"inertias", elbow.inertias},
                            {"chosen_k", elbow.chosen_k},
                            {"noise_tolerance", elbow.noise_tolerance}};

          Clustering clustering = dba_kmeans(group.series, elbow.chosen_k, cfg.kmeans,
                                             derive_seed(group_seed, "final"));
          clustering.mode = mode;
          const int k = clustering.k;

          std::set<int> distinct(group.labels.begin(), group.labels.end());
          entry["k"] = k;
          entry["gt_k"] = distinct.size();
          entry["inertia"] = clustering.inertia;

          std::vector<long> sizes(static_cast<std::size_t>(k), 0);
          for (int a : clustering.assignments) ++sizes[static_cast<std::size_t>(a)];
          entry["sizes"] = sizes;

          entry["ari"] = ari(clustering.assignments, group.labels);
          entry["nmi"] = nmi(clustering.assignments, group.labels);
          entry["purity"] = purity(clustering.assignments, group.labels);

          // Uninformed metrics.
          std::vector<std::vector<MultiChannelSeries>> members(static_cast<std::size_t>(k));
          std::vector<ClusterTruth> truths(static_cast<std::size_t>(k));
          for (std::size_t i = 0; i < group.series.size(); ++i) {
            members[static_cast<std::size_t>(clustering.assignments[i])].push_back(group.series[i]);
            truths[static_cast<std::size_t>(clustering.assignments[i])].member_labels.push_back(
                group.labels[i]);
          }
          std::vector<double> intra, inter, frac, vs, vi;
          for (int j = 0; j < k; ++j) {
            intra.push_back(dtw_intra(members[static_cast<std::size_t>(j)],
                                      clustering.centroids[static_cast<std::size_t>(j)],
                                      cfg.kmeans.band));
            vs.push_back(var_s(members[static_cast<std::size_t>(j)]));
            vi.push_back(var_i(members[static_cast<std::size_t>(j)],
                               clustering.centroids[static_cast<std::size_t>(j)]));
            if (k >= 2) {
              inter.push_back(dtw_inter(clustering.centroids, static_cast<std::size_t>(j),
                                        cfg.kmeans.band));
              frac.push_back(inter.back() > 0.0 ? intra.back() / inter.back()
                                                : std::numeric_limits<double>::infinity());
            }
          }
          const double sil =
              k >= 2 ? silhouette_dtw(group.series, clustering.assignments, cfg.kmeans.band)
                     : std::numeric_limits<double>::quiet_NaN();
          entry["uninformed"] = {
              {"dtw_intra_mean", opt_number(mean_of(intra))},
              {"dtw_inter_mean", k >= 2 ? opt_number(mean_of(inter)) : json(nullptr)},
              {"dtw_frac_mean", k >= 2 ? opt_number(mean_of(frac)) : json(nullptr)},
              {"silhouette", opt_number(sil)},
              {"size_entropy", size_entropy(clustering.assignments)},
              {"var_s_mean", opt_number(mean_of(vs))},
              {"var_i_mean", opt_number(mean_of(vi))}};

          json centroids = json::array();
          for (const MultiChannelSeries& c : clustering.centroids) {
            json chans = json::array();
            for (const TimeSeries& ch : c.channels) chans.push_back(ch.values);
            centroids.push_back(chans);
          }
          entry["centroids"] = centroids;

          // Matching: input and multivariate modes only.
          if (mode == Mode::saliency) {
            entry["matching"] = nullptr;
          } else {
            const std::vector<MatchRun> runs =
                match_centroids(client, clustering.centroids, faults, cfg.repetitions);
            const MatchReport match_report = evaluate_matching(
                runs, truths, test_class_counts,
                [](int label) { return std::to_string(label); });

            json matching;
            json runs_json = json::array();
            for (const MatchRun& r : runs) {
              json row = json::array();
              for (const auto& a : r.assignments) row.push_back(a ? json(*a) : json("_"));
              runs_json.push_back(row);
            }
            matching["runs"] = runs_json;
            json result = json::array();
            for (const auto& a : match_report.majority) result.push_back(a ? json(*a) : json("_"));
            matching["result"] = result;
            json gts = json::array();
            for (int label : match_report.dominant_labels) gts.push_back(std::to_string(label));
            matching["ground_truth"] = gts;
            matching["dominant_proportions"] = match_report.dominant_proportions;
            matching["identified"] = match_report.identified;
            matching["group_gt_classes"] = distinct.size();
            matching["identified_str"] = std::to_string(match_report.identified) + "/" +
                                         std::to_string(k) + " (" +
                                         std::to_string(distinct.size()) + ")";
            json subclasses = json::array();
            for (const SubclassMatch& s : match_report.identified_subclasses) {
              subclasses.push_back({{"label", s.label},
                                    {"fault_name", s.fault_name},
                                    {"cluster", s.cluster_index},
                                    {"matched_in_cluster", s.matched_in_cluster},
                                    {"class_total", s.class_total},
                                    {"cluster_size", s.cluster_size},
                                    {"precision", s.precision},
                                    {"dominant_proportion", s.dominant_proportion}});
            }
            matching["subclasses"] = subclasses;
            matching["mean_coverage"] = match_report.mean_coverage;

            json outcomes = json::array();
            for (int j = 0; j < k; ++j) {
              QualityFlags flags;
              flags.silhouette = sil;
              flags.dtw_frac = k >= 2 ? frac[static_cast<std::size_t>(j)]
                                      : std::numeric_limits<double>::quiet_NaN();
              const DiscoveryOutcome outcome =
                  classify_outcome(match_report.majority[static_cast<std::size_t>(j)], flags,
                                   cfg.quality);
              outcomes.push_back(to_string(outcome.kind));
            }
            matching["outcomes"] = outcomes;
            entry["matching"] = matching;
          }
        } catch (const std::exception& e) {
          entry["error"] = e.what();
        }
        report["clusterings"].push_back(entry);
      }
    }

    // -- correlations ---------------------------------------------------------
    stage = "correlate";
    const std::vector<std::string> uninformed = {"dtw_intra_mean", "dtw_inter_mean",
                                                 "dtw_frac_mean",  "silhouette",
                                                 "size_entropy",   "var_s_mean",
                                                 "var_i_mean"};
    const std::vector<std::string> informed = {"ari", "nmi", "purity"};
    report["correlations"] = json::array();
    for (const std::string& u : uninformed) {
      for (const std::string& inf : informed) {
        std::vector<double> xs, ys;
        for (const json& entry : report["clusterings"]) {
          if (!entry["error"].is_null()) continue;
          const json& uv = entry["uninformed"][u];
          const json& iv = entry[inf];
          if (uv.is_null() || iv.is_null()) continue;
          xs.push_back(uv.get<double>());
          ys.push_back(iv.get<double>());
        }
        json cell = {{"uninformed", u}, {"informed", inf}, {"n", xs.size()}};
        try {
          const Correlation corr = spearman(xs, ys);
          cell["rho"] = corr.rho;
          cell["p"] = corr.p_value;
        } catch (const std::exception& e) {
          cell["rho"] = nullptr;
          cell["p"] = nullptr;
          cell["note"] = e.what();
        }
        report["correlations"].push_back(cell);
      }
    }

    // -- emit -----------------------------------------------------------------
    stage = "emit";
    emit_report(report, cfg.out_dir, cfg.plots);
  } catch (const std::exception& e) {
    persist_partial(stage, e.what());
    throw StageError(stage, e.what());
  }
  return report;
}

}  // namespace tsd
