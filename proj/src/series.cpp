#include "tsd/series.hpp"

#include <cmath>
#include <stdexcept>

namespace tsd {

namespace {

void check_values(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("time series must be non-empty");
  for (double x : v) {
    if (!std::isfinite(x)) throw std::invalid_argument("time series values must be finite");
  }
}

}  // namespace

TimeSeries::TimeSeries(std::vector<double> v) : values(std::move(v)) { check_values(values); }

TimeSeries::TimeSeries(std::initializer_list<double> v) : values(v) { check_values(values); }

MultiChannelSeries::MultiChannelSeries(std::vector<TimeSeries> ch) : channels(std::move(ch)) {
  if (channels.empty() || channels.size() > 2)
    throw std::invalid_argument("channel count must be 1 or 2");
  for (const auto& c : channels) {
    if (c.size() != channels[0].size())
      throw std::invalid_argument("all channels must share one length");
  }
}

MultiChannelSeries::MultiChannelSeries(TimeSeries signal)
    : MultiChannelSeries(std::vector<TimeSeries>{std::move(signal)}) {}

MultiChannelSeries::MultiChannelSeries(TimeSeries signal, TimeSeries saliency)
    : MultiChannelSeries(std::vector<TimeSeries>{std::move(signal), std::move(saliency)}) {}

void LabeledDataset::validate() const {
  if (series.size() != original_labels.size())
    throw std::invalid_argument("series and original_labels must have equal size");
  for (int y : original_labels) {
    if (y < 1) throw std::invalid_argument("class ids must be positive integers");
  }
  if (binary_labels) {
    if (binary_labels->size() != series.size())
      throw std::invalid_argument("binary_labels must match series count");
    for (int y : *binary_labels) {
      if (y != 0 && y != 1) throw std::invalid_argument("binary labels must be 0 or 1");
    }
  }
}

TimeSeries z_normalize(const TimeSeries& series) {
  const std::size_t n = series.size();
  double mean = 0.0;
  for (double x : series.values) mean += x;
  mean /= static_cast<double>(n);

  double var = 0.0;
  for (double x : series.values) var += (x - mean) * (x - mean);
  var /= static_cast<double>(n);  // population variance

  std::vector<double> out(n, 0.0);
  if (var > 0.0) {
    const double sd = std::sqrt(var);
    for (std::size_t i = 0; i < n; ++i) out[i] = (series.values[i] - mean) / sd;
  }
  return TimeSeries(std::move(out));
}

TimeSeries downsample(const TimeSeries& series, int target_len) {
  const int n = static_cast<int>(series.size());
  if (target_len < 2) throw std::invalid_argument("downsample target length must be >= 2");
  if (target_len > n) throw std::invalid_argument("upsampling not supported");
  if (target_len == n) return series;

  std::vector<double> out(static_cast<std::size_t>(target_len));
  const double step = static_cast<double>(n - 1) / static_cast<double>(target_len - 1);
  for (int i = 0; i < target_len; ++i) {
    const double pos = static_cast<double>(i) * step;
    const int lo = std::min(static_cast<int>(pos), n - 2);
    const double frac = pos - lo;
    out[static_cast<std::size_t>(i)] =
        series.values[lo] * (1.0 - frac) + series.values[lo + 1] * frac;
  }
  out.front() = series.values.front();
  out.back() = series.values.back();
  return TimeSeries(std::move(out));
}

std::vector<int> subsume_labels(const std::vector<int>& original_labels) {
  std::vector<int> binary(original_labels.size());
  for (std::size_t i = 0; i < original_labels.size(); ++i) {
    if (original_labels[i] < 1) throw std::invalid_argument("class ids must be positive integers");
    binary[i] = (original_labels[i] % 2 == 0) ? 0 : 1;
  }
  return binary;
}

std::size_t medoid(const std::vector<TimeSeries>& group, const SeriesDistance& distance) {
  if (group.empty()) throw std::invalid_argument("medoid of empty group");
  const std::size_t n = group.size();

  // Symmetric distances: fill the upper triangle once.
  std::vector<double> row_sum(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = distance(group[i], group[j]);
      row_sum[i] += d;
      row_sum[j] += d;
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (row_sum[i] < row_sum[best]) best = i;
  }
  return best;
}

}  // namespace tsd
