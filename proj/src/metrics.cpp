#include "tsd/metrics.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

namespace tsd {

ContingencyTable ContingencyTable::from_labels(const std::vector<int>& x,
                                               const std::vector<int>& y) {
  if (x.size() != y.size())
    throw std::invalid_argument("partitions must cover the same sample set");
  if (x.empty()) throw std::invalid_argument("partitions must be non-empty");

  std::map<int, int> xid, yid;
  for (int v : x) xid.emplace(v, 0);
  for (int v : y) yid.emplace(v, 0);
  int next = 0;
  for (auto& [key, idx] : xid) idx = next++;
  next = 0;
  for (auto& [key, idx] : yid) idx = next++;

  ContingencyTable t;
  t.r = static_cast<int>(xid.size());
  t.s = static_cast<int>(yid.size());
  t.n = static_cast<int>(x.size());
  t.counts.assign(static_cast<std::size_t>(t.r) * t.s, 0);
  t.row_sums.assign(static_cast<std::size_t>(t.r), 0);
  t.col_sums.assign(static_cast<std::size_t>(t.s), 0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const int xi = xid[x[i]];
    const int yj = yid[y[i]];
    ++t.counts[static_cast<std::size_t>(xi * t.s + yj)];
    ++t.row_sums[static_cast<std::size_t>(xi)];
    ++t.col_sums[static_cast<std::size_t>(yj)];
  }
  return t;
}

namespace {

double comb2(long v) { return v < 2 ? 0.0 : 0.5 * static_cast<double>(v) * (v - 1); }

bool same_pair_relations(const std::vector<int>& x, const std::vector<int>& y) {
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j)
      if ((x[i] == x[j]) != (y[i] == y[j])) return false;
  return true;
}

double entropy(const std::vector<long>& sums, int n) {
  double h = 0.0;
  for (long v : sums) {
    if (v > 0) {
      const double p = static_cast<double>(v) / n;
      h -= p * std::log(p);
    }
  }
  return h;
}

}  // namespace

double ari(const std::vector<int>& x, const std::vector<int>& y) {
  const ContingencyTable t = ContingencyTable::from_labels(x, y);

  double sum_cells = 0.0;
  for (long v : t.counts) sum_cells += comb2(v);
  double sum_a = 0.0;
  for (long v : t.row_sums) sum_a += comb2(v);
  double sum_b = 0.0;
  for (long v : t.col_sums) sum_b += comb2(v);

  const double pairs = comb2(t.n);
  const double expected = pairs > 0.0 ? sum_a * sum_b / pairs : 0.0;
  const double max_index = 0.5 * (sum_a + sum_b);
  const double denom = max_index - expected;
  if (std::abs(denom) < 1e-12) return same_pair_relations(x, y) ? 1.0 : 0.0;
  return (sum_cells - expected) / denom;
}

double nmi(const std::vector<int>& x, const std::vector<int>& y) {
  const ContingencyTable t = ContingencyTable::from_labels(x, y);
  const double hx = entropy(t.row_sums, t.n);
  const double hy = entropy(t.col_sums, t.n);
  if (hx + hy == 0.0) return 1.0;  // both partitions trivial

  // I(Y, X) = H(Y) - H(Y|X)
  double h_y_given_x = 0.0;
  for (int i = 0; i < t.r; ++i) {
    const long a = t.row_sums[static_cast<std::size_t>(i)];
    if (a == 0) continue;
    for (int j = 0; j < t.s; ++j) {
      const long nij = t.at(i, j);
      if (nij > 0) {
        h_y_given_x -= (static_cast<double>(nij) / t.n) *
                       std::log(static_cast<double>(nij) / static_cast<double>(a));
      }
    }
  }
  const double mutual = hy - h_y_given_x;
  return 2.0 * mutual / (hx + hy);
}

double purity(const std::vector<int>& x, const std::vector<int>& y) {
  const ContingencyTable t = ContingencyTable::from_labels(x, y);
  long covered = 0;
  for (int i = 0; i < t.r; ++i) {
    long best = 0;
    for (int j = 0; j < t.s; ++j) best = std::max(best, t.at(i, j));
    covered += best;
  }
  return static_cast<double>(covered) / t.n;
}

double dtw_intra(const std::vector<MultiChannelSeries>& cluster, const MultiChannelSeries& centroid,
                 std::optional<int> band) {
  if (cluster.empty()) throw std::invalid_argument("dtw_intra: empty cluster");
  double total = 0.0;
  for (const auto& s : cluster) total += dtw_distance(s, centroid, band);
  return total / static_cast<double>(cluster.size());
}

double dtw_inter(const std::vector<MultiChannelSeries>& centroids, std::size_t j,
                 std::optional<int> band) {
  if (centroids.size() < 2) throw std::invalid_argument("dtw_inter: undefined for single cluster");
  if (j >= centroids.size()) throw std::invalid_argument("dtw_inter: centroid index out of range");
  double total = 0.0;
  for (std::size_t k = 0; k < centroids.size(); ++k) {
    if (k != j) total += dtw_distance(centroids[j], centroids[k], band);
  }
  return total / static_cast<double>(centroids.size() - 1);
}

double dtw_frac(const std::vector<MultiChannelSeries>& cluster, const MultiChannelSeries& centroid,
                const std::vector<MultiChannelSeries>& centroids, std::size_t j,
                std::optional<int> band) {
  return dtw_intra(cluster, centroid, band) / dtw_inter(centroids, j, band);
}

double silhouette_dtw(const std::vector<MultiChannelSeries>& data,
                      const std::vector<int>& assignments, std::optional<int> band) {
  if (data.size() != assignments.size())
    throw std::invalid_argument("silhouette_dtw: assignment size mismatch");
  const std::size_t n = data.size();
  int k = 0;
  for (int a : assignments) k = std::max(k, a + 1);
  std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
  for (int a : assignments) {
    if (a < 0) throw std::invalid_argument("silhouette_dtw: negative cluster id");
    ++counts[static_cast<std::size_t>(a)];
  }
  std::size_t non_empty = 0;
  for (std::size_t c : counts) non_empty += c > 0 ? 1 : 0;
  if (non_empty < 2) throw std::invalid_argument("silhouette_dtw: needs at least 2 clusters");

  const DistanceMatrix dm = pairwise_matrix(data, band);

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const int own = assignments[i];
    if (counts[static_cast<std::size_t>(own)] == 1) continue;  // singleton contributes 0

    std::vector<double> sum(static_cast<std::size_t>(k), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) sum[static_cast<std::size_t>(assignments[j])] += dm.at(i, j);
    }
    const double a =
        sum[static_cast<std::size_t>(own)] / static_cast<double>(counts[static_cast<std::size_t>(own)] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      if (c == own || counts[static_cast<std::size_t>(c)] == 0) continue;
      b = std::min(b, sum[static_cast<std::size_t>(c)] /
                          static_cast<double>(counts[static_cast<std::size_t>(c)]));
    }
    const double denom = std::max(a, b);
    total += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return total / static_cast<double>(n);
}

double size_entropy(const std::vector<int>& assignments) {
  if (assignments.empty()) throw std::invalid_argument("size_entropy: empty assignment");
  std::map<int, long> sizes;
  for (int a : assignments) ++sizes[a];
  const std::size_t r = sizes.size();
  if (r == 1) return 1.0;
  const double n = static_cast<double>(assignments.size());
  double h = 0.0;
  for (const auto& [id, count] : sizes) {
    const double p = static_cast<double>(count) / n;
    h -= p * std::log(p);
  }
  return h / std::log(static_cast<double>(r));
}

namespace {

void check_equal_lengths(const std::vector<MultiChannelSeries>& cluster, std::size_t len,
                         std::size_t channels) {
  for (const auto& s : cluster) {
    if (s.length() != len || s.channel_count() != channels)
      throw std::invalid_argument("variance metrics need equal-shape members");
  }
}

}  // namespace

double var_s(const std::vector<MultiChannelSeries>& cluster) {
  if (cluster.empty()) throw std::invalid_argument("var_s: empty cluster");
  const std::size_t len = cluster[0].length();
  const std::size_t channels = cluster[0].channel_count();
  check_equal_lengths(cluster, len, channels);

  const double nj = static_cast<double>(cluster.size());
  double total = 0.0;
  for (std::size_t ch = 0; ch < channels; ++ch) {
    for (std::size_t t = 0; t < len; ++t) {
      double mean = 0.0;
      for (const auto& s : cluster) mean += s.at(ch, t);
      mean /= nj;
      for (const auto& s : cluster) {
        const double d = s.at(ch, t) - mean;
        total += d * d;
      }
    }
  }
  return total / (nj * static_cast<double>(len * channels));
}

double var_i(const std::vector<MultiChannelSeries>& cluster, const MultiChannelSeries& centroid) {
  if (cluster.empty()) throw std::invalid_argument("var_i: empty cluster");
  const std::size_t len = centroid.length();
  const std::size_t channels = centroid.channel_count();
  check_equal_lengths(cluster, len, channels);

  const double nj = static_cast<double>(cluster.size());
  double total = 0.0;
  for (std::size_t ch = 0; ch < channels; ++ch) {
    for (std::size_t t = 0; t < len; ++t) {
      const double c = centroid.at(ch, t);
      for (const auto& s : cluster) {
        const double d = s.at(ch, t) - c;
        total += d * d;
      }
    }
  }
  return total / (nj * static_cast<double>(len * channels));
}

namespace {

std::vector<double> ranks_of(const std::vector<double>& xs) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });

  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double mean_rank = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based mean rank
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = mean_rank;
    i = j + 1;
  }
  return ranks;
}

Correlation correlate(const std::vector<double>& xs, const std::vector<double>& ys) {
  const std::size_t n = xs.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);

  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw std::invalid_argument("rank correlation undefined for constant input");

  Correlation c;
  c.rho = sxy / std::sqrt(sxx * syy);
  c.rho = std::clamp(c.rho, -1.0, 1.0);

  const double dof = static_cast<double>(n) - 2.0;
  const double denom = 1.0 - c.rho * c.rho;
  if (denom <= 0.0) {
    c.p_value = 0.0;
  } else {
    const double t = c.rho * std::sqrt(dof / denom);
    boost::math::students_t dist(dof);
    c.p_value = 2.0 * boost::math::cdf(dist, -std::abs(t));
  }
  return c;
}

}  // namespace

Correlation spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 3)
    throw std::invalid_argument("spearman: needs >= 3 paired samples");
  return correlate(ranks_of(xs), ranks_of(ys));
}

Correlation pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 3)
    throw std::invalid_argument("pearson: needs >= 3 paired samples");
  return correlate(xs, ys);
}

}  // namespace tsd
