#pragma once

#include "tsd/dba.hpp"
#include "tsd/dtw.hpp"

namespace tsd::reference {

/// Serial counterparts of the OpenMP kernels. They share the per-cell /
/// per-restart math with the parallel versions but run plain loops; tests
/// compare the two and the bench target times them against each other.

DistanceMatrix pairwise_matrix(const std::vector<MultiChannelSeries>& group,
                               std::optional<int> band = std::nullopt);

Clustering dba_kmeans(const std::vector<MultiChannelSeries>& data, int k,
                      const KMeansOptions& opts, std::uint64_t seed);

}  // namespace tsd::reference
