#include "tsd/reference.hpp"

#include <stdexcept>

#include "tsd/seeds.hpp"

namespace tsd::reference {

DistanceMatrix pairwise_matrix(const std::vector<MultiChannelSeries>& group,
                               std::optional<int> band) {
  if (group.empty()) throw std::invalid_argument("pairwise_matrix: empty group");
  const std::size_t n = group.size();
  DistanceMatrix mat;
  mat.n = n;
  mat.values.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = dtw_distance(group[i], group[j], band);
      mat.values[i * n + j] = d;
      mat.values[j * n + i] = d;
    }
  }
  return mat;
}

Clustering dba_kmeans(const std::vector<MultiChannelSeries>& data, int k,
                      const KMeansOptions& opts, std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("dba_kmeans: k must be >= 1");
  if (static_cast<std::size_t>(k) > data.size())
    throw std::invalid_argument("dba_kmeans: k exceeds sample count");
  const int n_init = std::max(1, opts.n_init);

  detail::RestartResult best;
  bool have = false;
  for (int r = 0; r < n_init; ++r) {
    detail::RestartResult res = detail::kmeans_restart(
        data, k, opts, derive_seed(seed, "kmeans-restart", static_cast<std::uint64_t>(r)));
    if (!have || res.clustering.inertia < best.clustering.inertia) {
      res.clustering.restart = r;
      best = std::move(res);
      have = true;
    }
  }
  return best.clustering;
}

}  // namespace tsd::reference
