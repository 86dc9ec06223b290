#include "tsd/dtw.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>

namespace tsd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_pair(const MultiChannelSeries& a, const MultiChannelSeries& b,
                const std::optional<int>& band) {
  if (a.channel_count() != b.channel_count())
    throw std::invalid_argument("dtw: channel-count mismatch");
  if (band) {
    const long diff = std::labs(static_cast<long>(a.length()) - static_cast<long>(b.length()));
    if (*band < diff) throw std::invalid_argument("dtw: band too small to admit any path");
  }
}

inline double local_cost(const MultiChannelSeries& a, const MultiChannelSeries& b, std::size_t i,
                         std::size_t j) {
  double c = 0.0;
  for (std::size_t ch = 0; ch < a.channel_count(); ++ch) {
    const double d = a.at(ch, i) - b.at(ch, j);
    c += d * d;
  }
  return c;
}

}  // namespace

double dtw_distance(const MultiChannelSeries& a, const MultiChannelSeries& b,
                    std::optional<int> band) {
  check_pair(a, b, band);
  const std::size_t n = a.length();
  const std::size_t m = b.length();

  // Two-row DP; row i holds accumulated costs over b positions.
  std::vector<double> prev(m + 1, kInf), cur(m + 1, kInf);
  prev[0] = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    std::size_t j_lo = 1, j_hi = m;
    if (band) {
      const long r = *band;
      j_lo = static_cast<std::size_t>(std::max<long>(1, static_cast<long>(i) - r));
      j_hi = static_cast<std::size_t>(std::min<long>(static_cast<long>(m), static_cast<long>(i) + r));
    }
    std::fill(cur.begin(), cur.end(), kInf);
    for (std::size_t j = j_lo; j <= j_hi; ++j) {
      const double best = std::min({prev[j - 1], prev[j], cur[j - 1]});
      cur[j] = local_cost(a, b, i - 1, j - 1) + best;
    }
    std::swap(prev, cur);
  }
  const double acc = prev[m];
  if (!std::isfinite(acc)) throw std::invalid_argument("dtw: band too small to admit any path");
  return std::sqrt(acc);
}

double dtw_distance(const TimeSeries& a, const TimeSeries& b, std::optional<int> band) {
  return dtw_distance(MultiChannelSeries(a), MultiChannelSeries(b), band);
}

std::pair<double, WarpingPath> dtw_path(const MultiChannelSeries& a, const MultiChannelSeries& b,
                                        std::optional<int> band) {
  check_pair(a, b, band);
  const std::size_t n = a.length();
  const std::size_t m = b.length();

  std::vector<double> acc((n + 1) * (m + 1), kInf);
  auto cell = [m](std::size_t i, std::size_t j) { return i * (m + 1) + j; };
  acc[cell(0, 0)] = 0.0;

  for (std::size_t i = 1; i <= n; ++i) {
    std::size_t j_lo = 1, j_hi = m;
    if (band) {
      const long r = *band;
      j_lo = static_cast<std::size_t>(std::max<long>(1, static_cast<long>(i) - r));
      j_hi = static_cast<std::size_t>(std::min<long>(static_cast<long>(m), static_cast<long>(i) + r));
    }
    for (std::size_t j = j_lo; j <= j_hi; ++j) {
      const double best =
          std::min({acc[cell(i - 1, j - 1)], acc[cell(i - 1, j)], acc[cell(i, j - 1)]});
      if (best < kInf) acc[cell(i, j)] = local_cost(a, b, i - 1, j - 1) + best;
    }
  }
  const double total = acc[cell(n, m)];
  if (!std::isfinite(total)) throw std::invalid_argument("dtw: band too small to admit any path");

  WarpingPath path;
  std::size_t i = n, j = m;
  while (i > 0 && j > 0) {
    path.steps.emplace_back(static_cast<int>(i) - 1, static_cast<int>(j) - 1);
    const double diag = acc[cell(i - 1, j - 1)];
    const double up = acc[cell(i - 1, j)];
    const double left = acc[cell(i, j - 1)];
    if (diag <= up && diag <= left) {
      --i;
      --j;
    } else if (up <= left) {
      --i;
    } else {
      --j;
    }
  }
  std::reverse(path.steps.begin(), path.steps.end());
  return {std::sqrt(total), std::move(path)};
}

DistanceMatrix pairwise_matrix(const std::vector<MultiChannelSeries>& group,
                               std::optional<int> band) {
  if (group.empty()) throw std::invalid_argument("pairwise_matrix: empty group");
  for (const auto& s : group) {
    if (s.channel_count() != group[0].channel_count())
      throw std::invalid_argument("pairwise_matrix: channel-count mismatch");
  }
  if (band) {
    // Validate up front: exceptions must not escape the parallel region.
    std::size_t lo = group[0].length(), hi = lo;
    for (const auto& s : group) {
      lo = std::min(lo, s.length());
      hi = std::max(hi, s.length());
    }
    if (*band < 0 || static_cast<std::size_t>(*band) < hi - lo)
      throw std::invalid_argument("pairwise_matrix: band too small to admit any path");
  }
  const std::size_t n = group.size();
  DistanceMatrix mat;
  mat.n = n;
  mat.values.assign(n * n, 0.0);

  // Upper triangle, flattened so the loop parallelizes evenly.
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  cells.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) cells.emplace_back(i, j);

  const long total = static_cast<long>(cells.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (long t = 0; t < total; ++t) {
    const auto [i, j] = cells[static_cast<std::size_t>(t)];
    const double d = dtw_distance(group[i], group[j], band);
    mat.values[i * n + j] = d;
    mat.values[j * n + i] = d;
  }
  return mat;
}

}  // namespace tsd
