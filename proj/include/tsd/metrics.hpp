#pragma once

#include <optional>
#include <vector>

#include "tsd/dtw.hpp"
#include "tsd/series.hpp"

namespace tsd {

/// r x s table of overlap counts between two partitions of the same sample
/// set, with row/column marginals.
struct ContingencyTable {
  int r = 0, s = 0, n = 0;
  std::vector<long> counts;     // row-major r*s
  std::vector<long> row_sums;   // a_i
  std::vector<long> col_sums;   // b_j

  long at(int i, int j) const { return counts[static_cast<std::size_t>(i * s + j)]; }

  /// Builds the table from two label vectors (arbitrary integer ids).
  static ContingencyTable from_labels(const std::vector<int>& x, const std::vector<int>& y);
};

/// Adjusted Rand Index via pair counting. When the pair-counting denominator
/// degenerates, returns 1.0 if the two partitions induce identical pair
/// relations and 0.0 otherwise.
double ari(const std::vector<int>& x, const std::vector<int>& y);

/// Normalized mutual information, 2*I(Y,X) / (H(Y) + H(X)), natural log.
/// Returns 1.0 when both partitions are trivial (H(X) + H(Y) == 0).
double nmi(const std::vector<int>& x, const std::vector<int>& y);

/// Fraction of samples covered by each cluster's dominant class.
double purity(const std::vector<int>& x, const std::vector<int>& y);

/// Mean DTW distance of cluster members to their centroid.
double dtw_intra(const std::vector<MultiChannelSeries>& cluster, const MultiChannelSeries& centroid,
                 std::optional<int> band = std::nullopt);

/// Mean DTW distance of centroid j to all other centroids; needs >= 2 clusters.
double dtw_inter(const std::vector<MultiChannelSeries>& centroids, std::size_t j,
                 std::optional<int> band = std::nullopt);

/// dtw_intra / dtw_inter for cluster j.
double dtw_frac(const std::vector<MultiChannelSeries>& cluster, const MultiChannelSeries& centroid,
                const std::vector<MultiChannelSeries>& centroids, std::size_t j,
                std::optional<int> band = std::nullopt);

/// Mean silhouette coefficient under DTW dissimilarity. Members of singleton
/// clusters contribute 0. Needs >= 2 non-empty clusters.
double silhouette_dtw(const std::vector<MultiChannelSeries>& data,
                      const std::vector<int>& assignments,
                      std::optional<int> band = std::nullopt);

/// Cluster size entropy, normalized by log(r); 1.0 for a single cluster.
double size_entropy(const std::vector<int>& assignments);

/// Mean squared deviation from the per-timestep cluster mean.
double var_s(const std::vector<MultiChannelSeries>& cluster);

/// Mean squared deviation from the centroid's coordinates.
double var_i(const std::vector<MultiChannelSeries>& cluster, const MultiChannelSeries& centroid);

struct Correlation {
  double rho = 0.0;
  double p_value = 1.0;
};

/// Spearman rank correlation (mean ranks on ties) with a two-sided p-value
/// from the t-statistic approximation. Throws on constant input.
Correlation spearman(const std::vector<double>& xs, const std::vector<double>& ys);

/// Pearson correlation with the same t-approximation p-value.
Correlation pearson(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace tsd
