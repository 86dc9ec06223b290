#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tsd/dtw.hpp"
#include "tsd/series.hpp"

namespace tsd {

enum class Mode { input, saliency, multivariate };

std::string to_string(Mode mode);
Mode mode_from_string(const std::string& s);

/// A converged k-means result. Inertia is the sum over samples of the squared
/// DTW distance to the assigned centroid. No returned cluster is empty.
struct Clustering {
  std::vector<int> assignments;
  std::vector<MultiChannelSeries> centroids;
  double inertia = 0.0;
  Mode mode = Mode::input;
  int k = 0;
  int iterations = 0;   // Lloyd iterations of the winning restart
  int restart = 0;      // index of the winning restart
};

struct KMeansOptions {
  int n_init = 20;
  int max_iter = 500;
  int dba_iter = 300;
  double tol = 1e-6;  // relative inertia improvement
  std::optional<int> band;
};

/// One DBA refinement: every group member is aligned to the current
/// barycenter; each barycenter coordinate becomes the mean of the member
/// values aligned to it (per channel, one shared path). Iterates until the
/// inertia improvement falls below tol or max_iter is reached. When
/// inertia_trace is given it receives the inertia after each iteration,
/// starting with the init's.
MultiChannelSeries dba_barycenter(const std::vector<MultiChannelSeries>& group,
                                  MultiChannelSeries init, int max_iter, double tol = 1e-6,
                                  std::vector<double>* inertia_trace = nullptr,
                                  std::optional<int> band = std::nullopt);

/// Multi-restart DBA k-means. Restarts run independently (possibly in
/// parallel); each derives its own seed from (seed, restart index), so the
/// result is identical regardless of scheduling. Returns the restart with
/// minimal inertia, ties broken by restart index. lloyd_inertia_trace, when
/// given, receives the winning restart's inertia after each assignment step.
Clustering dba_kmeans(const std::vector<MultiChannelSeries>& data, int k,
                      const KMeansOptions& opts, std::uint64_t seed,
                      std::vector<double>* lloyd_inertia_trace = nullptr);

/// Inertia-vs-k scan with a chord-distance ("kneedle" style) elbow pick.
struct ElbowCurve {
  std::vector<int> ks;
  std::vector<double> inertias;
  int chosen_k = 0;
  double noise_tolerance = 0.0;  // largest observed inertia increase across k
};

ElbowCurve estimate_k(const std::vector<MultiChannelSeries>& data, int k_lo, int k_hi,
                      const KMeansOptions& opts, std::uint64_t seed);

namespace detail {
/// Moves the sample farthest from its centroid into each empty cluster as a
/// new singleton. Exposed for tests.
void repair_empty_clusters(const std::vector<MultiChannelSeries>& data,
                           std::vector<int>& assignments,
                           std::vector<MultiChannelSeries>& centroids,
                           std::vector<double>& dist_to_centroid);

/// One k-means restart (init + Lloyd loop). Shared by the parallel driver and
/// the serial reference.
struct RestartResult {
  Clustering clustering;
  std::vector<double> lloyd_trace;
};
RestartResult kmeans_restart(const std::vector<MultiChannelSeries>& data, int k,
                             const KMeansOptions& opts, std::uint64_t restart_seed);

/// Chord-distance knee pick on a scanned curve. A flat curve yields the
/// first k; so does a two-point scan; an exactly linear curve yields the
/// first interior k.
int choose_elbow(const std::vector<int>& ks, const std::vector<double>& inertias);
}  // namespace detail

}  // namespace tsd
