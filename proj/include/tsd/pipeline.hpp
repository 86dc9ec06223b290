#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tsd/convnet.hpp"
#include "tsd/dba.hpp"
#include "tsd/kg.hpp"
#include "tsd/matcher.hpp"
#include "tsd/series.hpp"

namespace tsd {

/// UCR-style table: class label in the first column, one value per remaining
/// column; tab, comma or space separated. Labels are coerced to positive
/// integers.
LabeledDataset load_ucr(const std::string& path, Split split = Split::train);
void save_ucr(const LabeledDataset& data, const std::string& path);

/// One prediction (0/1) per line.
std::vector<int> load_predictions_csv(const std::string& path);
void save_predictions_csv(const std::vector<int>& predictions, const std::string& path);

/// What the pipeline applies before anything else: series longer than
/// target_len are downsampled to it, then every series is z-normalized.
/// Lengths must agree afterwards.
void preprocess_dataset(LabeledDataset& data, int target_len);

/// Clustering-input construction per mode. The saliency channel is
/// z-normalized alongside the (already normalized) signal so both channels
/// contribute on the same scale.
MultiChannelSeries build_mode_series(Mode mode, const TimeSeries& signal, const Heatmap& heatmap);

// ---------------------------------------------------------------------------
// Dataset selection

struct DatasetDescriptor {
  std::string name;
  int class_count = 0;
  std::vector<int> per_class_test_counts;
  int series_length = 0;
  double reference_accuracy = 0.0;
  bool image_derived = false;
};

struct FilterVerdict {
  std::string name;
  bool class_count_ok = false;   // |Y| in [6, 16]
  bool per_class_ok = false;     // >= 100 test series per class
  bool length_ok = false;        // >= 100 time steps
  bool not_image_ok = false;     // not an image-to-time-series dataset
  bool accuracy_ok = false;      // reference accuracy >= 0.6

  bool accepted() const {
    return class_count_ok && per_class_ok && length_ok && not_image_ok && accuracy_ok;
  }
};

std::vector<FilterVerdict> filter_datasets(const std::vector<DatasetDescriptor>& metadata);

/// Throws when a required descriptor field is missing.
DatasetDescriptor descriptor_from_json(const nlohmann::json& doc);

// ---------------------------------------------------------------------------
// Pipeline configuration

struct KRange {
  int lo = 1;
  int hi = 10;
};

struct PipelineConfig {
  std::string train_path;
  std::string test_path;
  std::vector<Mode> modes = {Mode::input, Mode::saliency, Mode::multivariate};

  int target_len = 256;  // downsample longer series to this length

  ConvNetConfig arch;
  TrainConfig training;
  std::optional<std::string> external_saliency_csv;
  std::optional<std::string> external_predictions_csv;

  KRange k_range;
  KMeansOptions kmeans;   // n_init 20, kmeans_iter 500, dba_iter 300
  int elbow_n_init = 20;  // restart count during the k scan

  int repetitions = 5;
  double match_threshold = 0.35;
  QualityThresholds quality;
  bool offline = true;
  LlmConfig llm;
  std::optional<std::string> kg_path;  // Turtle input; otherwise auto-populated

  std::uint64_t seed = 0;
  std::string out_dir = "out";
  bool plots = false;
};

PipelineConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const PipelineConfig& config);

struct StageError : std::runtime_error {
  std::string stage;
  StageError(const std::string& stage_, const std::string& what_)
      : std::runtime_error("[" + stage_ + "] " + what_), stage(stage_) {}
};

using RunReport = nlohmann::json;

/// End-to-end pipeline: ingest, subsume labels, preprocess, train or ingest
/// saliency, group by predicted class, cluster per mode, evaluate, match
/// against the knowledge graph, correlate metrics, and emit the report into
/// config.out_dir. A stage failure persists partial results and raises a
/// StageError; per-(class, mode) failures are recorded as error markers
/// instead.
RunReport run(const PipelineConfig& config);

/// Writes report.json, the CSV tables and (optionally) per-cluster centroid
/// SVG plots into out_dir.
void emit_report(const RunReport& report, const std::string& out_dir, bool plots);

}  // namespace tsd
