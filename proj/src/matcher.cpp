#include "tsd/matcher.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <httplib.h>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace tsd {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Shape features and the offline describer

namespace {

double segment_rise(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
  // Least-squares slope over v[lo, hi), scaled to the segment's span.
  const std::size_t n = hi - lo;
  if (n < 2) return 0.0;
  double mean_t = 0.0, mean_x = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    mean_t += static_cast<double>(i - lo);
    mean_x += v[i];
  }
  mean_t /= static_cast<double>(n);
  mean_x /= static_cast<double>(n);
  double num = 0.0, den = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    const double dt = static_cast<double>(i - lo) - mean_t;
    num += dt * (v[i] - mean_x);
    den += dt * dt;
  }
  if (den == 0.0) return 0.0;
  return num / den * static_cast<double>(n - 1);
}

const char* third_name(std::size_t idx, std::size_t n) {
  const double frac = static_cast<double>(idx) / static_cast<double>(std::max<std::size_t>(1, n - 1));
  if (frac < 1.0 / 3.0) return "early";
  if (frac < 2.0 / 3.0) return "middle";
  return "late";
}

const char* count_word(std::size_t count, const char* noun_zero, const char* noun_one,
                       const char* noun_two, const char* noun_many) {
  if (count == 0) return noun_zero;
  if (count == 1) return noun_one;
  if (count == 2) return noun_two;
  return noun_many;
}

// Token weights for the cosine; position and width carry the most signal.
double token_weight(const std::string& token) {
  if (token.starts_with("max-") || token.starts_with("min-") || token.ends_with("-main-peak"))
    return 2.0;
  if (token.starts_with("energy-")) return 1.5;
  return 1.0;
}

}  // namespace

ShapeFeatures shape_features(const TimeSeries& signal) {
  const std::vector<double>& v = signal.values;
  const std::size_t n = v.size();
  ShapeFeatures features;

  double lo = v[0], hi = v[0];
  std::size_t argmin = 0, argmax = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (v[i] < lo) {
      lo = v[i];
      argmin = i;
    }
    if (v[i] > hi) {
      hi = v[i];
      argmax = i;
    }
  }
  const double range = hi - lo;
  if (range < 1e-9 || n < 2) {
    features.tokens.push_back("flat");
    return features;
  }

  // Overall trend.
  const double rel_rise = segment_rise(v, 0, n) / range;
  if (rel_rise > 0.5) features.tokens.push_back("rising-overall");
  else if (rel_rise < -0.5) features.tokens.push_back("falling-overall");
  else features.tokens.push_back("level-overall");

  bool increasing = true, decreasing = true;
  for (std::size_t i = 1; i < n; ++i) {
    if (v[i] < v[i - 1] - 1e-12 * range) increasing = false;
    if (v[i] > v[i - 1] + 1e-12 * range) decreasing = false;
  }
  if (increasing) features.tokens.push_back("monotonic-increase");
  if (decreasing) features.tokens.push_back("monotonic-decrease");

  // Trend per third.
  const char* seg_names[3] = {"start", "middle-part", "end"};
  for (int s = 0; s < 3; ++s) {
    const std::size_t seg_lo = n * static_cast<std::size_t>(s) / 3;
    const std::size_t seg_hi = n * static_cast<std::size_t>(s + 1) / 3;
    const double rise = segment_rise(v, seg_lo, std::max(seg_hi, seg_lo + 1)) / range;
    std::string tok = seg_names[s];
    if (rise > 0.15) tok += "-rising";
    else if (rise < -0.15) tok += "-falling";
    else tok += "-level";
    features.tokens.push_back(std::move(tok));
  }

  // Peaks above and valleys below the mid level, deduplicated within a
  // window so name jitter does not inflate the counts.
  const double mid = lo + 0.5 * range;
  const std::size_t window = std::max<std::size_t>(1, n / 16);
  std::size_t peaks = 0, valleys = 0;
  std::size_t last_peak = n + window, last_valley = n + window;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const bool local_max = v[i] >= v[i - 1] && v[i] >= v[i + 1] && (v[i] > v[i - 1] || v[i] > v[i + 1]);
    const bool local_min = v[i] <= v[i - 1] && v[i] <= v[i + 1] && (v[i] < v[i - 1] || v[i] < v[i + 1]);
    if (local_max && v[i] > mid && (last_peak > n || i - last_peak > window)) {
      ++peaks;
      last_peak = i;
    }
    if (local_min && v[i] < mid && (last_valley > n || i - last_valley > window)) {
      ++valleys;
      last_valley = i;
    }
  }
  features.tokens.push_back(count_word(peaks, "no-peaks", "one-peak", "two-peaks", "many-peaks"));
  features.tokens.push_back(
      count_word(valleys, "no-valleys", "one-valley", "two-valleys", "many-valleys"));

  features.tokens.push_back(std::string("max-") + third_name(argmax, n));
  features.tokens.push_back(std::string("min-") + third_name(argmin, n));

  // Width of the main peak at three-quarter height.
  if (peaks > 0) {
    const double level = hi - 0.25 * range;
    std::size_t left = argmax, right = argmax;
    while (left > 0 && v[left - 1] >= level) --left;
    while (right + 1 < n && v[right + 1] >= level) ++right;
    const double width_frac = static_cast<double>(right - left + 1) / static_cast<double>(n);
    if (width_frac < 0.12) features.tokens.push_back("narrow-main-peak");
    else if (width_frac > 0.25) features.tokens.push_back("broad-main-peak");
    else features.tokens.push_back("medium-main-peak");
  }

  // Energy distribution over thirds.
  double energy[3] = {0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) energy[std::min<std::size_t>(2, 3 * i / n)] += v[i] * v[i];
  const double total = energy[0] + energy[1] + energy[2];
  if (total > 0.0) {
    const char* names[3] = {"energy-early", "energy-middle", "energy-late"};
    int dominant = 0;
    for (int s = 1; s < 3; ++s)
      if (energy[s] > energy[dominant]) dominant = s;
    if (energy[dominant] / total > 0.5) features.tokens.push_back(names[dominant]);
    else features.tokens.push_back("energy-balanced");
  }

  // Crossings of the mid level.
  std::size_t crossings = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if ((v[i - 1] - mid) * (v[i] - mid) < 0.0) ++crossings;
  }
  if (crossings <= 2) features.tokens.push_back("few-crossings");
  else if (crossings <= 6) features.tokens.push_back("some-crossings");
  else features.tokens.push_back("many-crossings");

  return features;
}

std::vector<std::string> description_tokens(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char raw : text) {
    const unsigned char c = static_cast<unsigned char>(raw);
    if (std::isalnum(c) || c == '-') {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

namespace {

std::map<std::string, double> feature_vector(const std::string& text) {
  // Controlled vocabulary: only tokens the feature extractor can emit count.
  static const std::set<std::string> vocabulary = [] {
    std::set<std::string> vocab{"flat",
                                "rising-overall",
                                "falling-overall",
                                "level-overall",
                                "monotonic-increase",
                                "monotonic-decrease",
                                "no-peaks",
                                "one-peak",
                                "two-peaks",
                                "many-peaks",
                                "no-valleys",
                                "one-valley",
                                "two-valleys",
                                "many-valleys",
                                "narrow-main-peak",
                                "medium-main-peak",
                                "broad-main-peak",
                                "energy-early",
                                "energy-middle",
                                "energy-late",
                                "energy-balanced",
                                "few-crossings",
                                "some-crossings",
                                "many-crossings"};
    for (const char* seg : {"start", "middle-part", "end"})
      for (const char* dir : {"-rising", "-falling", "-level"})
        vocab.insert(std::string(seg) + dir);
    for (const char* ext : {"max-", "min-"})
      for (const char* pos : {"early", "middle", "late"}) vocab.insert(std::string(ext) + pos);
    return vocab;
  }();

  std::map<std::string, double> vec;
  for (const std::string& tok : description_tokens(text)) {
    if (vocabulary.count(tok)) vec[tok] += token_weight(tok);
  }
  return vec;
}

}  // namespace

double description_similarity(const std::string& a, const std::string& b) {
  const auto va = feature_vector(a);
  const auto vb = feature_vector(b);
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [tok, w] : va) na += w * w;
  for (const auto& [tok, w] : vb) nb += w * w;
  for (const auto& [tok, w] : va) {
    const auto it = vb.find(tok);
    if (it != vb.end()) dot += w * it->second;
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

std::string OfflineClient::describe(const DescriptionRequest& request) {
  const ShapeFeatures features = shape_features(TimeSeries(request.signal));
  const auto& t = features.tokens;
  auto has = [&t](const std::string& tok) {
    return std::find(t.begin(), t.end(), tok) != t.end();
  };
  if (has("flat")) return "A flat signal with no notable structure.";

  std::ostringstream out;
  out << "A " << t[0] << " profile";
  if (has("monotonic-increase")) out << " (monotonic-increase)";
  if (has("monotonic-decrease")) out << " (monotonic-decrease)";
  out << " that is ";
  bool first = true;
  for (const std::string& tok : t) {
    if (tok.starts_with("start-") || tok.starts_with("middle-part-") || tok.starts_with("end-")) {
      if (!first) out << ", ";
      out << tok;
      first = false;
    }
  }
  out << "; it shows ";
  for (const std::string& tok : t)
    if (tok.ends_with("-peak") || tok.ends_with("-peaks")) {
      out << tok;
      break;
    }
  for (const std::string& tok : t)
    if (tok.ends_with("-main-peak")) out << " (" << tok << ")";
  out << " and ";
  for (const std::string& tok : t)
    if (tok.ends_with("-valley") || tok.ends_with("-valleys")) {
      out << tok;
      break;
    }
  for (const std::string& tok : t) {
    if (tok.starts_with("max-")) out << ", with its maximum " << tok;
    if (tok.starts_with("min-")) out << " and its minimum " << tok;
  }
  for (const std::string& tok : t)
    if (tok.starts_with("energy-")) out << "; " << tok;
  for (const std::string& tok : t)
    if (tok.ends_with("-crossings")) out << ", " << tok;
  out << ".";
  return out.str();
}

std::optional<std::string> OfflineClient::match(const std::string& description,
                                                const std::vector<SensorFault>& candidates) {
  std::optional<std::string> best;
  double best_score = -1.0;
  for (const SensorFault& fault : candidates) {
    const double score = description_similarity(description, fault.fault_desc);
    if (score > best_score ||
        (score == best_score && best && fault.name < *best)) {
      best_score = score;
      best = fault.name;
    }
  }
  if (best_score < threshold_) return std::nullopt;
  return best;
}

// ---------------------------------------------------------------------------
// Remote backend

namespace {

namespace prompts {
constexpr const char* kVersion = "v1";

constexpr const char* kDescribeSystem =
    "You describe univariate sensor signals. Reply with one short sentence about the overall "
    "shape of the signal: trend, peaks and valleys, where along the series they sit, and where "
    "the energy concentrates. Be brief and general. Do not repeat raw numeric values.";

constexpr const char* kMatchSystem =
    "You match a signal description against a catalog of fault descriptions. Reply with exactly "
    "the name of the single best matching catalog entry, or the word none if nothing fits.";
}  // namespace prompts

std::string strip(const std::string& s) {
  std::size_t lo = 0, hi = s.size();
  auto is_junk = [](char c) {
    return std::isspace(static_cast<unsigned char>(c)) || c == '"' || c == '\'' || c == '.';
  };
  while (lo < hi && is_junk(s[lo])) ++lo;
  while (hi > lo && is_junk(s[hi - 1])) --hi;
  return s.substr(lo, hi - lo);
}

}  // namespace

std::string RemoteClient::complete(const std::string& system_prompt,
                                   const std::string& user_prompt) {
  json body;
  body["model"] = cfg_.model;
  body["messages"] = json::array({json{{"role", "system"}, {"content", system_prompt}},
                                  json{{"role", "user"}, {"content", user_prompt}}});
  body["temperature"] = cfg_.temperature;
  const std::string payload = body.dump();

  const char* key = std::getenv(cfg_.api_key_env.c_str());
  httplib::Headers headers;
  if (key && *key) headers.emplace("Authorization", std::string("Bearer ") + key);

  std::ostringstream attempts;
  for (int attempt = 0; attempt < std::max(1, cfg_.max_retries); ++attempt) {
    if (attempt > 0) {
      const auto delay = std::chrono::milliseconds(
          static_cast<long long>(cfg_.backoff_base_ms) * (1LL << (attempt - 1)));
      std::this_thread::sleep_for(delay);
    }
    httplib::Client client(cfg_.base_url);
    client.set_connection_timeout(cfg_.timeout_sec);
    client.set_read_timeout(cfg_.timeout_sec);
    auto res = client.Post(cfg_.path, headers, payload, "application/json");
    if (!res) {
      attempts << "attempt " << (attempt + 1) << ": transport error ("
               << httplib::to_string(res.error()) << "); ";
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      attempts << "attempt " << (attempt + 1) << ": status " << res->status << "; ";
      continue;
    }
    if (res->status != 200) {
      throw std::runtime_error("llm request rejected with status " +
                               std::to_string(res->status) + ": " + res->body);
    }
    try {
      json doc = json::parse(res->body);
      return doc.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const std::exception& e) {
      throw std::runtime_error(std::string("malformed llm response: ") + e.what());
    }
  }
  throw std::runtime_error("llm request failed after " + std::to_string(cfg_.max_retries) +
                           " attempts: " + attempts.str());
}

std::string RemoteClient::describe(const DescriptionRequest& request) {
  if (request.template_id != std::string("describe-") + prompts::kVersion)
    throw std::invalid_argument("unknown prompt template: " + request.template_id);
  std::ostringstream user;
  user << "Signal values: [";
  user.precision(4);
  user << std::fixed;
  for (std::size_t i = 0; i < request.signal.size(); ++i) {
    if (i) user << ", ";
    user << request.signal[i];
  }
  user << "]";
  return complete(prompts::kDescribeSystem, user.str());
}

std::optional<std::string> RemoteClient::match(const std::string& description,
                                               const std::vector<SensorFault>& candidates) {
  std::ostringstream user;
  user << "Description of the signal:\n" << description << "\n\nCatalog:\n";
  for (const SensorFault& fault : candidates)
    user << fault.name << ": " << fault.fault_desc << "\n";
  const std::string reply = strip(complete(prompts::kMatchSystem, user.str()));
  if (reply.empty()) return std::nullopt;
  std::string lowered = reply;
  std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (lowered == "none") return std::nullopt;
  for (const SensorFault& fault : candidates) {
    if (reply == fault.name) return fault.name;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Protocol operations

bool contains_raw_numbers(const std::string& text) {
  // Raw values look like decimals (possibly signed / scientific) or long
  // digit runs; ordinal words and small counts are allowed.
  const std::size_t n = text.size();
  std::size_t i = 0;
  while (i < n) {
    const unsigned char c = static_cast<unsigned char>(text[i]);
    if (std::isdigit(c)) {
      std::size_t j = i;
      bool has_dot = false, has_exp = false;
      std::size_t digits = 0;
      while (j < n) {
        const unsigned char d = static_cast<unsigned char>(text[j]);
        if (std::isdigit(d)) {
          ++digits;
          ++j;
        } else if (d == '.' && !has_dot && j + 1 < n &&
                   std::isdigit(static_cast<unsigned char>(text[j + 1]))) {
          has_dot = true;
          ++j;
        } else if ((d == 'e' || d == 'E') && !has_exp && j + 1 < n &&
                   (std::isdigit(static_cast<unsigned char>(text[j + 1])) || text[j + 1] == '-' ||
                    text[j + 1] == '+')) {
          has_exp = true;
          ++j;
          if (text[j] == '-' || text[j] == '+') ++j;
        } else {
          break;
        }
      }
      if (has_dot || has_exp || digits >= 3) return true;
      i = j;
    } else {
      ++i;
    }
  }
  return false;
}

std::string describe_centroid(DescriptionClient& client, const MultiChannelSeries& centroid) {
  DescriptionRequest request;
  request.signal = centroid.signal().values;  // signal channel only
  for (int attempt = 0; attempt < 2; ++attempt) {
    const std::string text = client.describe(request);
    if (!request.forbid_raw_values || !contains_raw_numbers(text)) return text;
  }
  throw std::runtime_error("centroid description echoes raw numeric values after retry");
}

std::vector<MatchRun> match_centroids(DescriptionClient& client,
                                      const std::vector<MultiChannelSeries>& centroids,
                                      const std::vector<SensorFault>& kg_descriptions,
                                      int repetitions) {
  if (centroids.empty()) throw std::invalid_argument("match_centroids: no centroids");
  if (kg_descriptions.empty())
    throw std::invalid_argument("match_centroids: empty knowledge graph");
  if (repetitions < 1) throw std::invalid_argument("match_centroids: repetitions must be >= 1");

  std::vector<MatchRun> runs;
  runs.reserve(static_cast<std::size_t>(repetitions));
  for (int r = 0; r < repetitions; ++r) {
    MatchRun run;
    run.assignments.reserve(centroids.size());
    for (const MultiChannelSeries& centroid : centroids) {
      const std::string description = describe_centroid(client, centroid);
      run.assignments.push_back(client.match(description, kg_descriptions));
    }
    runs.push_back(std::move(run));
  }
  return runs;
}

std::vector<std::optional<std::string>> majority_vote(const std::vector<MatchRun>& runs) {
  if (runs.empty()) throw std::invalid_argument("majority_vote: no runs");
  const std::size_t width = runs[0].assignments.size();
  for (const MatchRun& run : runs) {
    if (run.assignments.size() != width)
      throw std::invalid_argument("majority_vote: runs disagree on centroid count");
  }

  std::vector<std::optional<std::string>> result(width);
  for (std::size_t c = 0; c < width; ++c) {
    std::map<std::string, int> votes;  // ordered: lexicographic tie-break for free
    for (const MatchRun& run : runs) {
      if (run.assignments[c]) ++votes[*run.assignments[c]];
    }
    int best = 0;
    for (const auto& [name, count] : votes) {
      if (count > best) {
        best = count;
        result[c] = name;
      }
    }
  }
  return result;
}

MatchReport evaluate_matching(const std::vector<MatchRun>& runs,
                              const std::vector<ClusterTruth>& clusters,
                              const std::map<int, long>& split_class_counts,
                              const std::function<std::string(int)>& label_name) {
  MatchReport report;
  report.runs = runs;
  report.majority = majority_vote(runs);
  if (report.majority.size() != clusters.size())
    throw std::invalid_argument("evaluate_matching: cluster/centroid count mismatch");

  for (std::size_t j = 0; j < clusters.size(); ++j) {
    const auto& members = clusters[j].member_labels;
    if (members.empty()) throw std::invalid_argument("evaluate_matching: empty cluster");
    std::map<int, long> counts;
    for (int label : members) ++counts[label];
    int dominant = counts.begin()->first;
    for (const auto& [label, count] : counts) {
      if (count > counts[dominant]) dominant = label;
    }
    report.dominant_labels.push_back(dominant);
    report.dominant_proportions.push_back(static_cast<double>(counts[dominant]) /
                                          static_cast<double>(members.size()));
  }

  // A class is discovered when the majority assignment names the cluster's
  // dominant label; per class, keep the cluster covering most of it.
  std::map<int, SubclassMatch> discovered;
  for (std::size_t j = 0; j < clusters.size(); ++j) {
    if (!report.majority[j]) continue;
    const int dominant = report.dominant_labels[j];
    if (*report.majority[j] != label_name(dominant)) continue;

    long in_cluster = 0;
    for (int label : clusters[j].member_labels)
      if (label == dominant) ++in_cluster;

    const auto total_it = split_class_counts.find(dominant);
    const long total = total_it != split_class_counts.end() ? total_it->second : in_cluster;

    SubclassMatch match;
    match.label = dominant;
    match.fault_name = *report.majority[j];
    match.cluster_index = j;
    match.matched_in_cluster = in_cluster;
    match.class_total = total;
    match.cluster_size = static_cast<long>(clusters[j].member_labels.size());
    match.dominant_in_cluster = in_cluster;
    match.precision = total > 0 ? static_cast<double>(in_cluster) / static_cast<double>(total) : 0.0;
    match.dominant_proportion = report.dominant_proportions[j];

    const auto it = discovered.find(dominant);
    if (it == discovered.end() || match.matched_in_cluster > it->second.matched_in_cluster)
      discovered[dominant] = match;
  }

  double coverage = 0.0;
  for (const auto& [label, match] : discovered) {
    report.identified_subclasses.push_back(match);
    coverage += match.precision;
  }
  report.identified = static_cast<int>(discovered.size());
  report.mean_coverage = discovered.empty() ? 0.0 : coverage / static_cast<double>(discovered.size());
  return report;
}

std::string to_string(Discovery d) {
  switch (d) {
    case Discovery::knowledge: return "knowledge-discovery";
    case Discovery::pattern: return "pattern-discovery";
    case Discovery::none: return "no-discovery";
  }
  return "no-discovery";
}

DiscoveryOutcome classify_outcome(const std::optional<std::string>& final_assignment,
                                  const QualityFlags& flags, const QualityThresholds& thresholds) {
  if (final_assignment) return {Discovery::knowledge, final_assignment};
  const bool frac_ok = std::isnan(flags.dtw_frac) || flags.dtw_frac <= thresholds.max_dtw_frac;
  if (flags.silhouette >= thresholds.min_silhouette && frac_ok) return {Discovery::pattern, {}};
  return {Discovery::none, {}};
}

}  // namespace tsd
