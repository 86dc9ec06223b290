// Test-only oracles and synthetic data generators. Everything here is kept
// independent of the library code paths it checks.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tsd/random.hpp"
#include "tsd/series.hpp"

namespace tsupport {

// --- independent DTW oracle -------------------------------------------------

/// Naive full-matrix dynamic program over the squared-Euclidean multichannel
/// local cost; returns sqrt of the accumulated cost.
double naive_dtw(const tsd::MultiChannelSeries& a, const tsd::MultiChannelSeries& b,
                 std::optional<int> band = std::nullopt);

// --- partition / metric oracles ----------------------------------------------

/// All set partitions of {0..n-1} as restricted-growth label vectors.
std::vector<std::vector<int>> all_partitions(int n);

/// Pair-counting ARI: classifies all sample pairs into agree/disagree buckets.
double oracle_ari(const std::vector<int>& x, const std::vector<int>& y);

/// NMI from joint and marginal distributions (I = sum p log(p / (p p))).
double oracle_nmi(const std::vector<int>& x, const std::vector<int>& y);

double oracle_purity(const std::vector<int>& x, const std::vector<int>& y);

/// Rank-then-Pearson Spearman rho (mean ranks on ties).
double oracle_spearman_rho(const std::vector<double>& xs, const std::vector<double>& ys);

/// Exact two-sided permutation p-value for Spearman rho; n <= 8.
double oracle_spearman_perm_p(const std::vector<double>& xs, const std::vector<double>& ys);

// --- generators ---------------------------------------------------------------

tsd::TimeSeries random_series(tsd::Rng& rng, std::size_t len, double scale = 1.0);

tsd::MultiChannelSeries random_multichannel(tsd::Rng& rng, std::size_t len, std::size_t channels,
                                            double scale = 1.0);

/// k prototype shapes (sines of different frequency plus a square wave), each
/// repeated per_group times with additive noise. Returns series and the
/// generating group id per sample.
struct PrototypeData {
  std::vector<tsd::MultiChannelSeries> series;
  std::vector<int> labels;
};
PrototypeData prototype_groups(int prototypes, int per_group, std::size_t len, double noise,
                               std::uint64_t seed);

/// Binary spike-position task: one positive spike in the left half (class 0)
/// or the right half (class 1), plus noise. spike_pos records the spike index.
struct SpikeData {
  tsd::LabeledDataset data;
  std::vector<int> spike_pos;
};
SpikeData spike_task(int per_class, std::size_t len, std::uint64_t seed);

/// Six latent subclasses subsumed into two binary classes. Every sample is a
/// smooth random confounder plus a localized discriminative segment: even
/// subclasses carry a positive bump, odd subclasses a negative dip, at an
/// early / middle / late position. The confounder dominates raw-signal DTW;
/// the segment is what a classifier must attend to.
tsd::LabeledDataset subclass_task(int per_subclass, std::size_t len, std::uint64_t seed,
                                  double confounder_amp = 1.0, double segment_amp = 2.4);

/// Writes a UCR-style TSV file.
void write_ucr(const std::string& path, const tsd::LabeledDataset& data);

/// Fresh scratch directory under the system temp dir.
std::string make_temp_dir(const std::string& tag);

}  // namespace tsupport
