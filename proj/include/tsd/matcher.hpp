#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tsd/kg.hpp"
#include "tsd/series.hpp"

namespace tsd {

/// What a describer backend receives: the centroid's signal channel only
/// (saliency never leaves the numeric pipeline) plus the prompt contract.
struct DescriptionRequest {
  std::vector<double> signal;
  std::string template_id = "describe-v1";
  bool forbid_raw_values = true;
};

/// Deterministic shape-feature tokens the offline describer builds prose
/// from; the offline matcher scores descriptions over this vocabulary.
struct ShapeFeatures {
  std::vector<std::string> tokens;
};

ShapeFeatures shape_features(const TimeSeries& signal);

/// Lowercased hyphen-preserving word tokens of a description.
std::vector<std::string> description_tokens(const std::string& text);

/// Weighted term-frequency cosine over the controlled feature vocabulary.
double description_similarity(const std::string& a, const std::string& b);

/// Backend contract: turn a centroid into prose, and fuzzy-match prose
/// against knowledge-graph fault descriptions (returning a fault name, or
/// nothing to abstain).
class DescriptionClient {
 public:
  virtual ~DescriptionClient() = default;
  virtual std::string describe(const DescriptionRequest& request) = 0;
  virtual std::optional<std::string> match(const std::string& description,
                                           const std::vector<SensorFault>& candidates) = 0;
};

/// Deterministic fallback: feature extraction plus cosine matching with an
/// abstention threshold.
class OfflineClient : public DescriptionClient {
 public:
  explicit OfflineClient(double threshold = 0.35, std::uint64_t seed = 0)
      : threshold_(threshold), seed_(seed) {}

  std::string describe(const DescriptionRequest& request) override;
  std::optional<std::string> match(const std::string& description,
                                   const std::vector<SensorFault>& candidates) override;

  double threshold() const { return threshold_; }

 private:
  double threshold_;
  std::uint64_t seed_;  // reserved; the fallback is pure in its inputs
};

/// Chat-completion endpoint settings. The bearer token is read from the
/// environment variable named by api_key_env.
struct LlmConfig {
  std::string base_url = "https://api.openai.com";
  std::string path = "/v1/chat/completions";
  std::string model = "o3";
  std::string api_key_env = "TSD_LLM_API_KEY";
  double temperature = 1.0;
  int max_retries = 5;
  int backoff_base_ms = 1000;
  int timeout_sec = 120;
};

/// Remote backend: POSTs {model, messages, sampling parameters} as JSON and
/// parses the first choice. 429 and 5xx responses are retried with
/// exponential backoff; the raised error carries the per-attempt log.
class RemoteClient : public DescriptionClient {
 public:
  explicit RemoteClient(LlmConfig cfg) : cfg_(std::move(cfg)) {}

  std::string describe(const DescriptionRequest& request) override;
  std::optional<std::string> match(const std::string& description,
                                   const std::vector<SensorFault>& candidates) override;

 private:
  std::string complete(const std::string& system_prompt, const std::string& user_prompt);
  LlmConfig cfg_;
};

/// Wraps client.describe with the numeric-token filter: a description that
/// echoes raw values is retried once, then rejected.
std::string describe_centroid(DescriptionClient& client, const MultiChannelSeries& centroid);

bool contains_raw_numbers(const std::string& text);

/// One repetition's per-centroid assignment; nullopt is an abstention.
struct MatchRun {
  std::vector<std::optional<std::string>> assignments;
};

/// R independent description+matching repetitions over all centroids.
std::vector<MatchRun> match_centroids(DescriptionClient& client,
                                      const std::vector<MultiChannelSeries>& centroids,
                                      const std::vector<SensorFault>& kg_descriptions,
                                      int repetitions = 5);

/// Most frequent non-abstain assignment per centroid; abstains only when all
/// runs abstained. Ties break to the lexicographically smallest name.
std::vector<std::optional<std::string>> majority_vote(const std::vector<MatchRun>& runs);

struct ClusterTruth {
  std::vector<int> member_labels;  // original class ids of the cluster members
};

struct SubclassMatch {
  int label = 0;
  std::string fault_name;
  std::size_t cluster_index = 0;
  long matched_in_cluster = 0;   // samples of the class inside the cluster
  long class_total = 0;          // samples of the class in the split
  long cluster_size = 0;
  long dominant_in_cluster = 0;
  double precision = 0.0;            // matched_in_cluster / class_total
  double dominant_proportion = 0.0;  // dominant_in_cluster / cluster_size
};

struct MatchReport {
  std::vector<MatchRun> runs;
  std::vector<std::optional<std::string>> majority;
  std::vector<int> dominant_labels;
  std::vector<double> dominant_proportions;
  int identified = 0;  // distinct classes whose cluster majority named them
  std::vector<SubclassMatch> identified_subclasses;
  double mean_coverage = 0.0;
};

/// A class counts as discovered when its cluster's dominant ground-truth
/// label matches the majority assignment. Per-class precision is the covered
/// fraction of that class in the whole split; when several clusters discover
/// the same class, the one covering most of it is reported.
MatchReport evaluate_matching(const std::vector<MatchRun>& runs,
                              const std::vector<ClusterTruth>& clusters,
                              const std::map<int, long>& split_class_counts,
                              const std::function<std::string(int)>& label_name);

enum class Discovery { knowledge, pattern, none };

std::string to_string(Discovery d);

struct QualityFlags {
  double silhouette = 0.0;
  double dtw_frac = std::numeric_limits<double>::quiet_NaN();  // NaN: not computed
};

struct QualityThresholds {
  double min_silhouette = 0.25;
  double max_dtw_frac = 0.75;
};

struct DiscoveryOutcome {
  Discovery kind = Discovery::none;
  std::optional<std::string> matched_fault;
};

/// Matched -> knowledge discovery; unmatched with quality above thresholds
/// -> pattern discovery; otherwise no discovery.
DiscoveryOutcome classify_outcome(const std::optional<std::string>& final_assignment,
                                  const QualityFlags& flags, const QualityThresholds& thresholds = {});

}  // namespace tsd
