#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "tsd/series.hpp"

namespace tsd {

/// Monotone, continuous alignment between two series: starts at (0,0), ends
/// at (n-1, m-1), each step increments i, j, or both by exactly 1.
struct WarpingPath {
  std::vector<std::pair<int, int>> steps;
};

/// DTW distance with squared-Euclidean local cost summed over channels; the
/// returned value is the square root of the minimal accumulated cost.
/// band, when given, is a Sakoe-Chiba radius (|i - j| <= band).
double dtw_distance(const MultiChannelSeries& a, const MultiChannelSeries& b,
                    std::optional<int> band = std::nullopt);
double dtw_distance(const TimeSeries& a, const TimeSeries& b,
                    std::optional<int> band = std::nullopt);

/// Distance plus one optimal warping path (backtrace prefers the diagonal
/// step on ties, then the step consuming a).
std::pair<double, WarpingPath> dtw_path(const MultiChannelSeries& a, const MultiChannelSeries& b,
                                        std::optional<int> band = std::nullopt);

/// Symmetric pairwise DTW distance matrix with a zero diagonal.
struct DistanceMatrix {
  std::size_t n = 0;
  std::vector<double> values;  // row-major n*n

  double at(std::size_t i, std::size_t j) const { return values[i * n + j]; }
};

/// Fills the upper triangle in parallel and mirrors it; the result does not
/// depend on scheduling. See tsd::reference for the serial counterpart.
DistanceMatrix pairwise_matrix(const std::vector<MultiChannelSeries>& group,
                               std::optional<int> band = std::nullopt);

}  // namespace tsd
