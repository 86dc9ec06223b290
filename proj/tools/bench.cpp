// Times the OpenMP kernels against their serial reference implementations.

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "tsd/dba.hpp"
#include "tsd/dtw.hpp"
#include "tsd/random.hpp"
#include "tsd/reference.hpp"

namespace {

std::vector<tsd::MultiChannelSeries> make_data(int n, int len, int channels, std::uint64_t seed) {
  tsd::Rng rng(seed);
  std::vector<tsd::MultiChannelSeries> data;
  data.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double freq = 1.0 + rng.real01() * 3.0;
    const double phase = rng.real01() * 2.0 * std::numbers::pi;
    std::vector<tsd::TimeSeries> chans;
    for (int c = 0; c < channels; ++c) {
      std::vector<double> v(static_cast<std::size_t>(len));
      for (int t = 0; t < len; ++t) {
        v[static_cast<std::size_t>(t)] =
            std::sin(freq * t * 2.0 * std::numbers::pi / len + phase + c) + 0.1 * rng.normal();
      }
      chans.emplace_back(std::move(v));
    }
    data.emplace_back(std::move(chans));
  }
  return data;
}

template <typename F>
double time_ms(F&& fn) {
  const auto start = std::chrono::steady_clock::now();
  fn();
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(stop - start).count();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"serial vs OpenMP kernel timings"};
  int n = 64, len = 128, channels = 2, k = 4, restarts = 8;
  std::uint64_t seed = 7;
  app.add_option("--n", n, "series count");
  app.add_option("--len", len, "series length");
  app.add_option("--channels", channels, "1 or 2 channels");
  app.add_option("--k", k, "cluster count");
  app.add_option("--restarts", restarts, "k-means restarts");
  app.add_option("--seed", seed, "rng seed");
  CLI11_PARSE(app, argc, argv);

#ifdef _OPENMP
  std::printf("openmp: %d thread(s)\n", omp_get_max_threads());
#else
  std::printf("openmp: disabled at build time\n");
#endif

  const auto data = make_data(n, len, channels, seed);

  tsd::DistanceMatrix serial_mat, parallel_mat;
  const double t_serial_pm = time_ms([&] { serial_mat = tsd::reference::pairwise_matrix(data); });
  const double t_parallel_pm = time_ms([&] { parallel_mat = tsd::pairwise_matrix(data); });
  double max_diff = 0.0;
  for (std::size_t i = 0; i < serial_mat.values.size(); ++i)
    max_diff = std::max(max_diff, std::abs(serial_mat.values[i] - parallel_mat.values[i]));
  std::printf("pairwise_matrix  n=%d len=%d ch=%d   serial %8.1f ms   parallel %8.1f ms   "
              "speedup %.2fx   max|diff| %.3g\n",
              n, len, channels, t_serial_pm, t_parallel_pm, t_serial_pm / t_parallel_pm, max_diff);

  tsd::KMeansOptions opts;
  opts.n_init = restarts;
  opts.max_iter = 50;
  opts.dba_iter = 30;
  tsd::Clustering serial_cl, parallel_cl;
  const double t_serial_km =
      time_ms([&] { serial_cl = tsd::reference::dba_kmeans(data, k, opts, seed); });
  const double t_parallel_km = time_ms([&] { parallel_cl = tsd::dba_kmeans(data, k, opts, seed); });
  std::printf("dba_kmeans       k=%d restarts=%d      serial %8.1f ms   parallel %8.1f ms   "
              "speedup %.2fx   inertia %s\n",
              k, restarts, t_serial_km, t_parallel_km, t_serial_km / t_parallel_km,
              serial_cl.inertia == parallel_cl.inertia ? "identical" : "DIFFERS");
  return 0;
}
