#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>

#include "tsd/dtw.hpp"
#include "tsd/metrics.hpp"
#include "tsd/pipeline.hpp"
#include "tsd/seeds.hpp"

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return json::parse(in);
}

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> mode;
  bool offline = false;
  bool plots = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "pipeline config JSON")->required();
  cmd->add_option("--seed", flags.seed, "override the config seed");
  cmd->add_option("--out", flags.out, "override the output directory");
  cmd->add_option("--mode", flags.mode, "restrict to one mode: input|saliency|multivariate");
  cmd->add_flag("--offline", flags.offline, "force the deterministic fallback matcher");
  cmd->add_flag("--plots", flags.plots, "emit per-cluster centroid SVG plots");
}

tsd::PipelineConfig load_config(const CommonFlags& flags) {
  tsd::PipelineConfig cfg = tsd::config_from_json(read_json_file(flags.config_path));
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.out) cfg.out_dir = *flags.out;
  if (flags.offline) cfg.offline = true;
  if (flags.plots) cfg.plots = true;
  if (flags.mode) cfg.modes = {tsd::mode_from_string(*flags.mode)};
  return cfg;
}

// Shared by the cluster/discover subcommands: preprocessed test split plus
// the per-sample heatmaps and predicted classes the config points at.
struct PreparedTest {
  tsd::LabeledDataset test;
  std::vector<tsd::Heatmap> heatmaps;
  std::vector<int> predicted;
};

PreparedTest prepare_test(const tsd::PipelineConfig& cfg, bool need_saliency) {
  PreparedTest prep;
  prep.test = tsd::load_ucr(cfg.test_path, tsd::Split::test);
  if (!prep.test.binary_labels)
    prep.test.binary_labels = tsd::subsume_labels(prep.test.original_labels);
  tsd::preprocess_dataset(prep.test, cfg.target_len);

  if (cfg.external_saliency_csv) {
    prep.heatmaps = tsd::load_saliency_csv(*cfg.external_saliency_csv);
    if (prep.heatmaps.size() != prep.test.size())
      throw std::runtime_error("external saliency row count does not match the test set");
  } else if (need_saliency) {
    throw std::runtime_error(
        "this subcommand needs saliency maps: set external_saliency in the config "
        "(generate them with the saliency subcommand) or use run for end-to-end");
  }
  if (cfg.external_predictions_csv) {
    prep.predicted = tsd::load_predictions_csv(*cfg.external_predictions_csv);
    if (prep.predicted.size() != prep.test.size())
      throw std::runtime_error("external predictions row count does not match the test set");
  } else {
    prep.predicted = *prep.test.binary_labels;
  }
  return prep;
}

int cmd_filter(const std::string& meta_path, const std::string& out_dir) {
  const json doc = read_json_file(meta_path);
  std::vector<tsd::DatasetDescriptor> descriptors;
  for (const json& d : doc) descriptors.push_back(tsd::descriptor_from_json(d));
  const auto verdicts = tsd::filter_datasets(descriptors);

  json out = json::array();
  for (const auto& v : verdicts) {
    std::cout << (v.accepted() ? "ACCEPT " : "reject ") << v.name
              << "  classes:" << (v.class_count_ok ? "ok" : "FAIL")
              << " per-class:" << (v.per_class_ok ? "ok" : "FAIL")
              << " length:" << (v.length_ok ? "ok" : "FAIL")
              << " temporal:" << (v.not_image_ok ? "ok" : "FAIL")
              << " accuracy:" << (v.accuracy_ok ? "ok" : "FAIL") << "\n";
    out.push_back({{"name", v.name},
                   {"accepted", v.accepted()},
                   {"class_count_ok", v.class_count_ok},
                   {"per_class_ok", v.per_class_ok},
                   {"length_ok", v.length_ok},
                   {"not_image_ok", v.not_image_ok},
                   {"accuracy_ok", v.accuracy_ok}});
  }
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream file(fs::path(out_dir) / "filter.json");
    file << out.dump(2) << "\n";
  }
  return 0;
}

int cmd_train(const tsd::PipelineConfig& cfg) {
  tsd::LabeledDataset train = tsd::load_ucr(cfg.train_path, tsd::Split::train);
  if (!train.binary_labels) train.binary_labels = tsd::subsume_labels(train.original_labels);
  tsd::preprocess_dataset(train, cfg.target_len);

  tsd::TrainConfig tc = cfg.training;
  tc.seed = tsd::derive_seed(cfg.seed, "classifier");
  const tsd::TrainResult result = tsd::train_classifier(train, cfg.arch, tc);

  fs::create_directories(cfg.out_dir);
  const std::string model_path = (fs::path(cfg.out_dir) / "model.json").string();
  tsd::save_model(result.model, model_path);
  std::cout << "model: " << model_path << "\n"
            << "best validation accuracy: " << result.best_val_accuracy << " (epoch "
            << result.best_epoch << ")\n"
            << "train accuracy: " << result.train_accuracy << "\n";
  return 0;
}

int cmd_saliency(const tsd::PipelineConfig& cfg, const std::string& model_path) {
  const tsd::ConvClassifier model = tsd::load_model(model_path);
  tsd::LabeledDataset test = tsd::load_ucr(cfg.test_path, tsd::Split::test);
  if (!test.binary_labels) test.binary_labels = tsd::subsume_labels(test.original_labels);
  tsd::preprocess_dataset(test, cfg.target_len);

  std::vector<tsd::Heatmap> maps;
  std::vector<int> predicted;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto [cls, probs] = tsd::predict(model, test.series[i]);
    predicted.push_back(cls);
    maps.push_back(tsd::saliency(model, test.series[i]));
    if (cls == (*test.binary_labels)[i]) ++hits;
  }
  fs::create_directories(cfg.out_dir);
  tsd::save_saliency_csv(maps, (fs::path(cfg.out_dir) / "saliency.csv").string());
  tsd::save_predictions_csv(predicted, (fs::path(cfg.out_dir) / "predictions.csv").string());
  std::cout << "test accuracy: " << static_cast<double>(hits) / static_cast<double>(test.size())
            << "\nwrote saliency.csv and predictions.csv to " << cfg.out_dir << "\n";
  return 0;
}

int cmd_cluster(const tsd::PipelineConfig& cfg) {
  const tsd::Mode mode = cfg.modes.size() == 1 ? cfg.modes[0] : tsd::Mode::input;
  const bool needs_saliency = mode != tsd::Mode::input;
  PreparedTest prep = prepare_test(cfg, needs_saliency);

  json out = json::array();
  for (int cls = 0; cls <= 1; ++cls) {
    std::vector<tsd::MultiChannelSeries> series;
    std::vector<int> labels;
    for (std::size_t i = 0; i < prep.test.size(); ++i) {
      if (prep.predicted[i] != cls) continue;
      const tsd::TimeSeries& sig = prep.test.series[i];
      switch (mode) {
        case tsd::Mode::input: series.emplace_back(sig); break;
        case tsd::Mode::saliency:
          series.emplace_back(tsd::z_normalize(tsd::TimeSeries(prep.heatmaps[i].relevance)));
          break;
        case tsd::Mode::multivariate:
          series.emplace_back(sig,
                              tsd::z_normalize(tsd::TimeSeries(prep.heatmaps[i].relevance)));
          break;
      }
      labels.push_back(prep.test.original_labels[i]);
    }
    if (series.empty()) {
      out.push_back({{"class", cls}, {"error", "empty group"}});
      continue;
    }
    const std::uint64_t seed =
        tsd::derive_seed(cfg.seed, "cluster-" + tsd::to_string(mode) + "-class",
                         static_cast<std::uint64_t>(cls));
    const int k_hi = std::min<int>(cfg.k_range.hi, static_cast<int>(series.size()));
    const int k_lo = std::min(cfg.k_range.lo, k_hi);
    tsd::KMeansOptions scan = cfg.kmeans;
    scan.n_init = cfg.elbow_n_init;
    const tsd::ElbowCurve elbow = tsd::estimate_k(series, k_lo, k_hi, scan, seed);
    tsd::Clustering clustering =
        tsd::dba_kmeans(series, elbow.chosen_k, cfg.kmeans, tsd::derive_seed(seed, "final"));
    clustering.mode = mode;

    json centroids = json::array();
    for (const auto& c : clustering.centroids) {
      json chans = json::array();
      for (const auto& ch : c.channels) chans.push_back(ch.values);
      centroids.push_back(chans);
    }
    out.push_back({{"class", cls},
                   {"mode", tsd::to_string(mode)},
                   {"k", clustering.k},
                   {"inertia", clustering.inertia},
                   {"assignments", clustering.assignments},
                   {"labels", labels},
                   {"ari", tsd::ari(clustering.assignments, labels)},
                   {"nmi", tsd::nmi(clustering.assignments, labels)},
                   {"purity", tsd::purity(clustering.assignments, labels)},
                   {"centroids", centroids}});
    std::cout << "class " << cls << " (" << tsd::to_string(mode) << "): k=" << clustering.k
              << " ari=" << out.back()["ari"].get<double>() << "\n";
  }
  fs::create_directories(cfg.out_dir);
  std::ofstream file(fs::path(cfg.out_dir) / "clusterings.json");
  file << out.dump(2) << "\n";
  std::cout << "wrote clusterings.json to " << cfg.out_dir << "\n";
  return 0;
}

int cmd_discover(const tsd::PipelineConfig& cfg, const std::string& clusterings_path) {
  const json clusterings = read_json_file(clusterings_path);

  tsd::OfflineClient offline(cfg.match_threshold, tsd::derive_seed(cfg.seed, "offline-client"));
  std::unique_ptr<tsd::RemoteClient> remote;
  if (!cfg.offline) remote = std::make_unique<tsd::RemoteClient>(cfg.llm);
  tsd::DescriptionClient& client =
      cfg.offline ? static_cast<tsd::DescriptionClient&>(offline) : *remote;

  if (!cfg.kg_path) throw std::runtime_error("discover needs a kg path in the config");
  std::ifstream kg_in(*cfg.kg_path);
  if (!kg_in) throw std::runtime_error("cannot read knowledge graph: " + *cfg.kg_path);
  std::stringstream buffer;
  buffer << kg_in.rdbuf();
  const tsd::FaultGraph graph = tsd::from_turtle(buffer.str());
  const std::vector<tsd::SensorFault> faults = graph.all_faults();

  json out = json::array();
  for (const json& entry : clusterings) {
    if (entry.contains("error")) continue;
    std::vector<tsd::MultiChannelSeries> centroids;
    for (const json& c : entry.at("centroids")) {
      std::vector<tsd::TimeSeries> chans;
      for (const json& ch : c) chans.emplace_back(ch.get<std::vector<double>>());
      centroids.emplace_back(std::move(chans));
    }
    const auto runs = tsd::match_centroids(client, centroids, faults, cfg.repetitions);

    const std::vector<int> labels = entry.at("labels").get<std::vector<int>>();
    const std::vector<int> assignments = entry.at("assignments").get<std::vector<int>>();
    std::vector<tsd::ClusterTruth> truths(centroids.size());
    for (std::size_t i = 0; i < assignments.size(); ++i)
      truths[static_cast<std::size_t>(assignments[i])].member_labels.push_back(labels[i]);
    std::map<int, long> class_counts;
    for (int label : labels) ++class_counts[label];

    const tsd::MatchReport match_report = tsd::evaluate_matching(
        runs, truths, class_counts, [](int label) { return std::to_string(label); });

    json result = json::array();
    for (const auto& a : match_report.majority) result.push_back(a ? json(*a) : json("_"));
    out.push_back({{"class", entry.at("class")},
                   {"mode", entry.at("mode")},
                   {"result", result},
                   {"identified", match_report.identified},
                   {"mean_coverage", match_report.mean_coverage}});
    std::cout << "class " << entry.at("class") << " (" << entry.at("mode").get<std::string>()
              << "): identified " << match_report.identified << "/" << centroids.size()
              << ", mean coverage " << match_report.mean_coverage << "\n";
  }
  fs::create_directories(cfg.out_dir);
  std::ofstream file(fs::path(cfg.out_dir) / "matching.json");
  file << out.dump(2) << "\n";
  return 0;
}

int cmd_run(const tsd::PipelineConfig& cfg) {
  const tsd::RunReport report = tsd::run(cfg);
  std::cout << "report written to " << cfg.out_dir << "\n";
  for (const json& e : report.at("clusterings")) {
    std::cout << "  class " << e.at("class").get<int>() << " " << e.at("mode").get<std::string>();
    if (e.at("error").is_null()) {
      std::cout << ": k=" << e.at("k").get<int>() << " ari=" << e.at("ari").get<double>()
                << " nmi=" << e.at("nmi").get<double>()
                << " purity=" << e.at("purity").get<double>();
      if (e.contains("matching") && !e.at("matching").is_null())
        std::cout << " identified=" << e.at("matching").at("identified_str").get<std::string>();
    } else {
      std::cout << ": ERROR " << e.at("error").get<std::string>();
    }
    std::cout << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent subclass rediscovery for time-series classification datasets: "
               "saliency-guided DBA k-means clustering with knowledge-graph matching"};
  app.require_subcommand(1);

  CommonFlags flags;

  auto* filter = app.add_subcommand("filter", "check dataset selection criteria");
  std::string meta_path;
  std::string filter_out;
  filter->add_option("--meta", meta_path, "JSON array of dataset descriptors")->required();
  filter->add_option("--out", filter_out, "directory for filter.json");

  auto* train = app.add_subcommand("train", "train the binary classifier");
  add_common(train, flags);

  auto* sal = app.add_subcommand("saliency", "saliency maps + predictions for the test split");
  std::string model_path;
  add_common(sal, flags);
  sal->add_option("--model", model_path, "model checkpoint JSON")->required();

  auto* cluster = app.add_subcommand("cluster", "elbow + DBA k-means per predicted class");
  add_common(cluster, flags);

  auto* discover = app.add_subcommand("discover", "match cluster centroids against the KG");
  std::string clusterings_path;
  add_common(discover, flags);
  discover->add_option("--clusterings", clusterings_path, "clusterings.json from `cluster`")
      ->required();

  auto* run_cmd = app.add_subcommand("run", "end-to-end pipeline");
  add_common(run_cmd, flags);

  auto* report_cmd = app.add_subcommand("report", "re-emit CSV tables and plots from a report");
  std::string report_path, report_out;
  bool report_plots = false;
  report_cmd->add_option("--report", report_path, "report.json")->required();
  report_cmd->add_option("--out", report_out, "output directory")->required();
  report_cmd->add_flag("--plots", report_plots, "emit per-cluster centroid SVG plots");

  CLI11_PARSE(app, argc, argv);

  try {
    if (filter->parsed()) return cmd_filter(meta_path, filter_out);
    if (report_cmd->parsed()) {
      tsd::emit_report(read_json_file(report_path), report_out, report_plots);
      std::cout << "report re-emitted to " << report_out << "\n";
      return 0;
    }
    const tsd::PipelineConfig cfg = load_config(flags);
    if (train->parsed()) return cmd_train(cfg);
    if (sal->parsed()) return cmd_saliency(cfg, model_path);
    if (cluster->parsed()) return cmd_cluster(cfg);
    if (discover->parsed()) return cmd_discover(cfg, clusterings_path);
    if (run_cmd->parsed()) return cmd_run(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
