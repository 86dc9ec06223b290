#include "tsd/dba.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tsd/random.hpp"
#include "tsd/seeds.hpp"

namespace tsd {

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::input: return "input";
    case Mode::saliency: return "saliency";
    case Mode::multivariate: return "multivariate";
  }
  return "input";
}

Mode mode_from_string(const std::string& s) {
  if (s == "input") return Mode::input;
  if (s == "saliency") return Mode::saliency;
  if (s == "multivariate") return Mode::multivariate;
  throw std::invalid_argument("unknown clustering mode: " + s);
}

namespace {

double group_inertia(const std::vector<MultiChannelSeries>& group, const MultiChannelSeries& bary,
                     const std::optional<int>& band) {
  double total = 0.0;
  for (const auto& s : group) {
    const double d = dtw_distance(s, bary, band);
    total += d * d;
  }
  return total;
}

}  // namespace

MultiChannelSeries dba_barycenter(const std::vector<MultiChannelSeries>& group,
                                  MultiChannelSeries init, int max_iter, double tol,
                                  std::vector<double>* inertia_trace, std::optional<int> band) {
  if (group.empty()) throw std::invalid_argument("dba_barycenter: empty group");
  for (const auto& s : group) {
    if (s.channel_count() != init.channel_count())
      throw std::invalid_argument("dba_barycenter: channel-count mismatch");
  }

  const std::size_t channels = init.channel_count();
  const std::size_t len = init.length();

  MultiChannelSeries bary = std::move(init);
  double inertia = group_inertia(group, bary, band);
  if (inertia_trace) inertia_trace->push_back(inertia);

  MultiChannelSeries best = bary;
  double best_inertia = inertia;

  std::vector<std::vector<double>> sums(channels, std::vector<double>(len));
  std::vector<double> counts(len);

  for (int iter = 0; iter < max_iter; ++iter) {
    for (auto& s : sums) std::fill(s.begin(), s.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0.0);

    for (const auto& member : group) {
      const auto [d, path] = dtw_path(member, bary, band);
      (void)d;
      for (const auto& [i, j] : path.steps) {
        counts[static_cast<std::size_t>(j)] += 1.0;
        for (std::size_t ch = 0; ch < channels; ++ch)
          sums[ch][static_cast<std::size_t>(j)] += member.at(ch, static_cast<std::size_t>(i));
      }
    }

    std::vector<TimeSeries> new_channels;
    new_channels.reserve(channels);
    for (std::size_t ch = 0; ch < channels; ++ch) {
      std::vector<double> v(len);
      for (std::size_t t = 0; t < len; ++t) v[t] = sums[ch][t] / counts[t];
      new_channels.emplace_back(std::move(v));
    }
    MultiChannelSeries updated{std::move(new_channels)};

    const double new_inertia = group_inertia(group, updated, band);
    if (inertia_trace) inertia_trace->push_back(new_inertia);
    bary = std::move(updated);
    if (new_inertia < best_inertia) {
      best_inertia = new_inertia;
      best = bary;
    }
    const double improvement = inertia - new_inertia;
    inertia = new_inertia;
    if (improvement < tol * std::max(inertia, 1e-300)) break;
  }
  return best;
}

namespace detail {

void repair_empty_clusters(const std::vector<MultiChannelSeries>& data,
                           std::vector<int>& assignments,
                           std::vector<MultiChannelSeries>& centroids,
                           std::vector<double>& dist_to_centroid) {
  const int k = static_cast<int>(centroids.size());
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  for (int a : assignments) ++counts[static_cast<std::size_t>(a)];

  for (int c = 0; c < k; ++c) {
    if (counts[static_cast<std::size_t>(c)] > 0) continue;
    // Farthest sample whose cluster keeps at least one member.
    std::size_t pick = data.size();
    double worst = -1.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (counts[static_cast<std::size_t>(assignments[i])] < 2) continue;
      if (dist_to_centroid[i] > worst) {
        worst = dist_to_centroid[i];
        pick = i;
      }
    }
    if (pick == data.size()) continue;  // k == n with all singletons cannot happen with an empty
    --counts[static_cast<std::size_t>(assignments[pick])];
    assignments[pick] = c;
    ++counts[static_cast<std::size_t>(c)];
    centroids[static_cast<std::size_t>(c)] = data[pick];
    dist_to_centroid[pick] = 0.0;
  }
}

}  // namespace detail

namespace detail {

RestartResult kmeans_restart(const std::vector<MultiChannelSeries>& data, int k,
                             const KMeansOptions& opts, std::uint64_t restart_seed) {
  const std::size_t n = data.size();
  Rng rng(restart_seed);

  std::vector<MultiChannelSeries> centroids;
  centroids.reserve(static_cast<std::size_t>(k));
  for (std::size_t idx : rng.sample_indices(n, static_cast<std::size_t>(k)))
    centroids.push_back(data[idx]);

  std::vector<int> assignments(n, -1);
  std::vector<double> dist(n, 0.0);
  RestartResult result;
  int iters = 0;

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    iters = iter + 1;
    bool changed = false;
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      int best_c = 0;
      double best_d = dtw_distance(data[i], centroids[0], opts.band);
      for (int c = 1; c < k; ++c) {
        const double d = dtw_distance(data[i], centroids[static_cast<std::size_t>(c)], opts.band);
        if (d < best_d) {
          best_d = d;
          best_c = c;
        }
      }
      if (assignments[i] != best_c) {
        assignments[i] = best_c;
        changed = true;
      }
      dist[i] = best_d;
      inertia += best_d * best_d;
    }
    result.lloyd_trace.push_back(inertia);
    if (!changed) break;

    detail::repair_empty_clusters(data, assignments, centroids, dist);

    for (int c = 0; c < k; ++c) {
      std::vector<MultiChannelSeries> members;
      for (std::size_t i = 0; i < n; ++i)
        if (assignments[i] == c) members.push_back(data[i]);
      centroids[static_cast<std::size_t>(c)] = dba_barycenter(
          members, centroids[static_cast<std::size_t>(c)], opts.dba_iter, opts.tol, nullptr,
          opts.band);
    }
  }

  // Final inertia against the final centroids.
  double inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = dtw_distance(data[i], centroids[static_cast<std::size_t>(assignments[i])],
                                  opts.band);
    inertia += d * d;
  }

  result.clustering.assignments = std::move(assignments);
  result.clustering.centroids = std::move(centroids);
  result.clustering.inertia = inertia;
  result.clustering.k = k;
  result.clustering.iterations = iters;
  return result;
}

}  // namespace detail

Clustering dba_kmeans(const std::vector<MultiChannelSeries>& data, int k,
                      const KMeansOptions& opts, std::uint64_t seed,
                      std::vector<double>* lloyd_inertia_trace) {
  if (k < 1) throw std::invalid_argument("dba_kmeans: k must be >= 1");
  if (static_cast<std::size_t>(k) > data.size())
    throw std::invalid_argument("dba_kmeans: k exceeds sample count");
  for (const auto& s : data) {
    if (s.channel_count() != data[0].channel_count())
      throw std::invalid_argument("dba_kmeans: channel-count mismatch");
  }
  if (opts.band) {
    std::size_t lo = data[0].length(), hi = lo;
    for (const auto& s : data) {
      lo = std::min(lo, s.length());
      hi = std::max(hi, s.length());
    }
    if (*opts.band < 0 || static_cast<std::size_t>(*opts.band) < hi - lo)
      throw std::invalid_argument("dba_kmeans: band too small to admit any path");
  }
  const int n_init = std::max(1, opts.n_init);

  std::vector<detail::RestartResult> results(static_cast<std::size_t>(n_init));
#pragma omp parallel for schedule(dynamic)
  for (int r = 0; r < n_init; ++r) {
    results[static_cast<std::size_t>(r)] = detail::kmeans_restart(
        data, k, opts, derive_seed(seed, "kmeans-restart", static_cast<std::uint64_t>(r)));
  }

  std::size_t best = 0;
  for (std::size_t r = 1; r < results.size(); ++r) {
    if (results[r].clustering.inertia < results[best].clustering.inertia) best = r;
  }
  results[best].clustering.restart = static_cast<int>(best);
  if (lloyd_inertia_trace) *lloyd_inertia_trace = results[best].lloyd_trace;
  return std::move(results[best].clustering);
}

namespace detail {

int choose_elbow(const std::vector<int>& ks, const std::vector<double>& inertias) {
  if (ks.empty() || ks.size() != inertias.size())
    throw std::invalid_argument("choose_elbow: malformed curve");
  const std::size_t count = ks.size();
  double i_min = inertias[0], i_max = inertias[0];
  for (double v : inertias) {
    i_min = std::min(i_min, v);
    i_max = std::max(i_max, v);
  }
  // Flat curve (including all-zero inertia): no elbow, the smallest k wins.
  if (count <= 2 || i_max - i_min <= 1e-12 * std::max(1.0, std::abs(i_max))) return ks.front();

  // Normalize both axes, then take the interior point with maximal
  // perpendicular distance to the chord between the endpoints.
  const double span_k = static_cast<double>(ks.back() - ks.front());
  const double span_i = i_max - i_min;
  const double x0 = 0.0, y0 = (inertias.front() - i_min) / span_i;
  const double x1 = 1.0, y1 = (inertias.back() - i_min) / span_i;
  const double chord = std::hypot(x1 - x0, y1 - y0);

  std::size_t best = 1;
  double best_dist = -1.0;
  for (std::size_t idx = 1; idx + 1 < count; ++idx) {
    const double x = static_cast<double>(ks[idx] - ks.front()) / span_k;
    const double y = (inertias[idx] - i_min) / span_i;
    const double dist = std::abs((x1 - x0) * (y0 - y) - (x0 - x) * (y1 - y0)) / chord;
    if (dist > best_dist) {
      best_dist = dist;
      best = idx;
    }
  }
  return ks[best];
}

}  // namespace detail

ElbowCurve estimate_k(const std::vector<MultiChannelSeries>& data, int k_lo, int k_hi,
                      const KMeansOptions& opts, std::uint64_t seed) {
  if (k_lo < 1 || k_hi < k_lo) throw std::invalid_argument("estimate_k: empty k range");
  if (static_cast<std::size_t>(k_hi) > data.size())
    throw std::invalid_argument("estimate_k: k range exceeds sample count");

  ElbowCurve curve;
  for (int k = k_lo; k <= k_hi; ++k) {
    const Clustering c =
        dba_kmeans(data, k, opts, derive_seed(seed, "elbow-k", static_cast<std::uint64_t>(k)));
    curve.ks.push_back(k);
    curve.inertias.push_back(c.inertia);
  }
  for (std::size_t i = 1; i < curve.inertias.size(); ++i)
    curve.noise_tolerance =
        std::max(curve.noise_tolerance, curve.inertias[i] - curve.inertias[i - 1]);
  curve.chosen_k = detail::choose_elbow(curve.ks, curve.inertias);
  return curve;
}

}  // namespace tsd
