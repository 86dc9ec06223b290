#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace tsupport {

double naive_dtw(const tsd::MultiChannelSeries& a, const tsd::MultiChannelSeries& b,
                 std::optional<int> band) {
  const std::size_t n = a.length();
  const std::size_t m = b.length();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> acc(n + 1, std::vector<double>(m + 1, inf));
  acc[0][0] = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      if (band && std::llabs(static_cast<long long>(i) - static_cast<long long>(j)) > *band)
        continue;
      double cost = 0.0;
      for (std::size_t ch = 0; ch < a.channel_count(); ++ch) {
        const double d = a.at(ch, i - 1) - b.at(ch, j - 1);
        cost += d * d;
      }
      acc[i][j] = cost + std::min({acc[i - 1][j - 1], acc[i - 1][j], acc[i][j - 1]});
    }
  }
  return std::sqrt(acc[n][m]);
}

std::vector<std::vector<int>> all_partitions(int n) {
  // Restricted growth strings: label[i] <= 1 + max(label[0..i-1]).
  std::vector<std::vector<int>> out;
  std::vector<int> current(static_cast<std::size_t>(n), 0);
  std::function<void(int, int)> rec = [&](int i, int max_used) {
    if (i == n) {
      out.push_back(current);
      return;
    }
    for (int v = 0; v <= max_used + 1; ++v) {
      current[static_cast<std::size_t>(i)] = v;
      rec(i + 1, std::max(max_used, v));
    }
  };
  rec(0, -1);
  return out;
}

double oracle_ari(const std::vector<int>& x, const std::vector<int>& y) {
  const std::size_t n = x.size();
  double both_same = 0, x_same = 0, y_same = 0, both_diff = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool sx = x[i] == x[j];
      const bool sy = y[i] == y[j];
      if (sx && sy) ++both_same;
      else if (sx) ++x_same;
      else if (sy) ++y_same;
      else ++both_diff;
    }
  }
  const double denom = (both_same + x_same) * (x_same + both_diff) +
                       (both_same + y_same) * (y_same + both_diff);
  if (denom == 0.0) return (x_same == 0 && y_same == 0) ? 1.0 : 0.0;
  return 2.0 * (both_same * both_diff - x_same * y_same) / denom;
}

namespace {

std::map<int, double> marginal(const std::vector<int>& v) {
  std::map<int, double> p;
  for (int a : v) p[a] += 1.0;
  for (auto& [key, val] : p) val /= static_cast<double>(v.size());
  return p;
}

}  // namespace

double oracle_nmi(const std::vector<int>& x, const std::vector<int>& y) {
  const auto px = marginal(x);
  const auto py = marginal(y);
  std::map<std::pair<int, int>, double> joint;
  for (std::size_t i = 0; i < x.size(); ++i) joint[{x[i], y[i]}] += 1.0;
  for (auto& [key, val] : joint) val /= static_cast<double>(x.size());

  double hx = 0.0, hy = 0.0, mutual = 0.0;
  for (const auto& [key, p] : px)
    if (p > 0) hx -= p * std::log(p);
  for (const auto& [key, p] : py)
    if (p > 0) hy -= p * std::log(p);
  for (const auto& [key, p] : joint) {
    if (p > 0) mutual += p * std::log(p / (px.at(key.first) * py.at(key.second)));
  }
  if (hx + hy == 0.0) return 1.0;
  return 2.0 * mutual / (hx + hy);
}

double oracle_purity(const std::vector<int>& x, const std::vector<int>& y) {
  std::map<int, std::map<int, int>> clusters;
  for (std::size_t i = 0; i < x.size(); ++i) ++clusters[x[i]][y[i]];
  long covered = 0;
  for (const auto& [cluster, classes] : clusters) {
    long best = 0;
    for (const auto& [cls, count] : classes) best = std::max<long>(best, count);
    covered += best;
  }
  return static_cast<double>(covered) / static_cast<double>(x.size());
}

namespace {

std::vector<double> mean_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    for (std::size_t t = i; t <= j; ++t)
      ranks[order[t]] = 1.0 + 0.5 * static_cast<double>(i + j);
    i = j + 1;
  }
  return ranks;
}

double pearson_of(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double num = 0, da = 0, db = 0;
  for (std::size_t i = 0; i < n; ++i) {
    num += (a[i] - ma) * (b[i] - mb);
    da += (a[i] - ma) * (a[i] - ma);
    db += (b[i] - mb) * (b[i] - mb);
  }
  return num / std::sqrt(da * db);
}

}  // namespace

double oracle_spearman_rho(const std::vector<double>& xs, const std::vector<double>& ys) {
  return pearson_of(mean_ranks(xs), mean_ranks(ys));
}

double oracle_spearman_perm_p(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() > 8) throw std::invalid_argument("permutation oracle limited to n <= 8");
  const double observed = std::abs(oracle_spearman_rho(xs, ys));
  std::vector<double> perm = ys;
  std::sort(perm.begin(), perm.end());
  long total = 0, extreme = 0;
  do {
    ++total;
    if (std::abs(oracle_spearman_rho(xs, perm)) >= observed - 1e-12) ++extreme;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(extreme) / static_cast<double>(total);
}

tsd::TimeSeries random_series(tsd::Rng& rng, std::size_t len, double scale) {
  std::vector<double> v(len);
  for (double& x : v) x = scale * rng.normal();
  return tsd::TimeSeries(std::move(v));
}

tsd::MultiChannelSeries random_multichannel(tsd::Rng& rng, std::size_t len, std::size_t channels,
                                            double scale) {
  std::vector<tsd::TimeSeries> chans;
  for (std::size_t c = 0; c < channels; ++c) chans.push_back(random_series(rng, len, scale));
  return tsd::MultiChannelSeries(std::move(chans));
}

namespace {

double prototype_value(int proto, double phase01) {
  switch (proto % 3) {
    case 0: return std::sin(2.0 * std::numbers::pi * phase01);
    case 1: return std::sin(6.0 * std::numbers::pi * phase01);
    default: return phase01 < 0.5 ? 1.0 : -1.0;  // square step
  }
}

}  // namespace

PrototypeData prototype_groups(int prototypes, int per_group, std::size_t len, double noise,
                               std::uint64_t seed) {
  tsd::Rng rng(seed);
  PrototypeData data;
  for (int p = 0; p < prototypes; ++p) {
    for (int s = 0; s < per_group; ++s) {
      std::vector<double> v(len);
      for (std::size_t t = 0; t < len; ++t) {
        const double phase = static_cast<double>(t) / static_cast<double>(len - 1);
        v[t] = prototype_value(p, phase) + noise * rng.normal();
      }
      data.series.emplace_back(tsd::TimeSeries(std::move(v)));
      data.labels.push_back(p);
    }
  }
  return data;
}

SpikeData spike_task(int per_class, std::size_t len, std::uint64_t seed) {
  tsd::Rng rng(seed);
  SpikeData out;
  out.data.split = tsd::Split::train;
  const std::size_t margin = std::max<std::size_t>(2, len / 16);
  for (int cls = 0; cls <= 1; ++cls) {
    for (int s = 0; s < per_class; ++s) {
      const std::size_t half = len / 2;
      const std::size_t lo = cls == 0 ? margin : half + margin;
      const std::size_t hi = cls == 0 ? half - margin : len - margin;
      const std::size_t pos = lo + static_cast<std::size_t>(rng.below(hi - lo));
      std::vector<double> v(len);
      for (std::size_t t = 0; t < len; ++t) {
        const double d = static_cast<double>(t) - static_cast<double>(pos);
        v[t] = 3.0 * std::exp(-d * d / 2.0) + 0.2 * rng.normal();
      }
      out.data.series.emplace_back(tsd::TimeSeries(std::move(v)));
      out.data.original_labels.push_back(cls == 0 ? 2 : 1);  // even -> 0, odd -> 1
      out.spike_pos.push_back(static_cast<int>(pos));
    }
  }
  out.data.binary_labels = tsd::subsume_labels(out.data.original_labels);
  return out;
}

tsd::LabeledDataset subclass_task(int per_subclass, std::size_t len, std::uint64_t seed,
                                  double confounder_amp, double segment_amp) {
  tsd::Rng rng(seed);
  tsd::LabeledDataset data;
  const double centers[3] = {0.2, 0.5, 0.8};

  for (int subclass = 1; subclass <= 6; ++subclass) {
    const bool positive = subclass % 2 == 0;  // even ids -> binary class 0 -> bump
    const double center = centers[(subclass - 1) / 2] * static_cast<double>(len - 1);
    for (int s = 0; s < per_subclass; ++s) {
      // Low-frequency, large-amplitude confounder: dominates elastic
      // distances on the raw signals while staying nearly curvature-free, so
      // only the sharp segment carries class evidence.
      double freq[3], phase[3], amp[3];
      for (int c = 0; c < 3; ++c) {
        freq[c] = 0.5 + rng.real01() * 1.1;
        phase[c] = rng.real01() * 2.0 * std::numbers::pi;
        amp[c] = confounder_amp * (0.8 + 0.6 * rng.real01());
      }
      std::vector<double> v(len);
      for (std::size_t t = 0; t < len; ++t) {
        const double x = static_cast<double>(t) / static_cast<double>(len - 1);
        double value = 0.0;
        for (int c = 0; c < 3; ++c)
          value += amp[c] * std::sin(2.0 * std::numbers::pi * freq[c] * x + phase[c]);
        const double d = (static_cast<double>(t) - center) / (0.04 * static_cast<double>(len));
        value += (positive ? segment_amp : -segment_amp) * std::exp(-0.5 * d * d);
        value += 0.05 * rng.normal();
        v[t] = value;
      }
      data.series.emplace_back(tsd::TimeSeries(std::move(v)));
      data.original_labels.push_back(subclass);
    }
  }
  data.binary_labels = tsd::subsume_labels(data.original_labels);
  return data;
}

void write_ucr(const std::string& path, const tsd::LabeledDataset& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.precision(17);
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data.original_labels[i];
    for (double v : data.series[i].values) out << '\t' << v;
    out << '\n';
  }
}

std::string make_temp_dir(const std::string& tag) {
  namespace fs = std::filesystem;
  const fs::path base = fs::temp_directory_path() / ("tsd-tests-" + tag);
  fs::remove_all(base);
  fs::create_directories(base);
  return base.string();
}

}  // namespace tsupport
