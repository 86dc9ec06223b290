#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace tsd {

/// A single univariate signal. Values must be finite and the series non-empty.
struct TimeSeries {
  std::vector<double> values;

  TimeSeries() = default;
  explicit TimeSeries(std::vector<double> v);
  TimeSeries(std::initializer_list<double> v);

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  bool operator==(const TimeSeries&) const = default;
};

/// Equal-length channel stack. Channel 0 is the signal; channel 1, when
/// present, is the saliency channel.
struct MultiChannelSeries {
  std::vector<TimeSeries> channels;

  MultiChannelSeries() = default;
  explicit MultiChannelSeries(std::vector<TimeSeries> ch);
  explicit MultiChannelSeries(TimeSeries signal);
  MultiChannelSeries(TimeSeries signal, TimeSeries saliency);

  std::size_t length() const { return channels.empty() ? 0 : channels[0].size(); }
  std::size_t channel_count() const { return channels.size(); }
  double at(std::size_t channel, std::size_t t) const { return channels[channel].values[t]; }
  const TimeSeries& signal() const { return channels[0]; }
  bool operator==(const MultiChannelSeries&) const = default;
};

enum class Split { train, test };

/// Collection of series with 1-based multiclass labels and, optionally, the
/// derived binary labels.
struct LabeledDataset {
  std::vector<TimeSeries> series;
  std::vector<int> original_labels;
  std::optional<std::vector<int>> binary_labels;
  Split split = Split::train;

  std::size_t size() const { return series.size(); }
  void validate() const;
};

/// (x - mean) / population stddev. A constant series maps to all zeros.
TimeSeries z_normalize(const TimeSeries& series);

/// Linear interpolation at target_len uniformly spaced positions over
/// [0, n-1]. Endpoints are preserved. Upsampling is rejected.
TimeSeries downsample(const TimeSeries& series, int target_len);

/// Alternating label subsumption: even class ids map to 0, odd ids to 1.
std::vector<int> subsume_labels(const std::vector<int>& original_labels);

using SeriesDistance = std::function<double(const TimeSeries&, const TimeSeries&)>;

/// Index of the group member minimizing the summed distance to all others.
/// Ties break to the lowest index.
std::size_t medoid(const std::vector<TimeSeries>& group, const SeriesDistance& distance);

}  // namespace tsd
