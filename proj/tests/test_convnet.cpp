#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "support.hpp"
#include "tsd/convnet.hpp"
#include "tsd/series.hpp"

using namespace tsd;

namespace {

ConvNetConfig small_arch(int len, bool position = true) {
  ConvNetConfig cfg;
  cfg.input_len = len;
  cfg.conv1_filters = 3;
  cfg.conv1_kernel = 5;
  cfg.conv2_filters = 3;
  cfg.conv2_kernel = 3;
  cfg.position_channel = position;
  return cfg;
}

LabeledDataset constant_level_task(int per_class, std::size_t len, std::uint64_t seed) {
  Rng rng(seed);
  LabeledDataset data;
  for (int cls = 0; cls <= 1; ++cls) {
    for (int i = 0; i < per_class; ++i) {
      std::vector<double> v(len);
      for (double& x : v) x = (cls == 0 ? -1.0 : 1.0) + 0.1 * rng.normal();
      data.series.emplace_back(TimeSeries(std::move(v)));
      data.original_labels.push_back(cls == 0 ? 2 : 1);
    }
  }
  data.binary_labels = subsume_labels(data.original_labels);
  return data;
}

}  // namespace

TEST_CASE("heatmap invariants") {
  CHECK_THROWS(Heatmap(std::vector<double>{}));
  CHECK_THROWS(Heatmap({0.5, 1.2}));
  CHECK_THROWS(Heatmap({-0.1}));
  CHECK(Heatmap({0.0, 0.5, 1.0}).size() == 3);
}

TEST_CASE("analytic gradients match finite differences") {
  Rng rng(61);
  int done = 0;
  while (done < 3) {
    const int len = 12 + static_cast<int>(rng.below(8));
    const ConvClassifier model = init_classifier(small_arch(len, done % 2 == 0), 100 + done);
    const TimeSeries x = tsupport::random_series(rng, static_cast<std::size_t>(len));
    if (kink_distance(model, x) < 1e-3) continue;  // keep the probe away from ReLU kinks
    CHECK(gradient_check(model, x, done % 2) < 1e-4);
    ++done;
  }
}

TEST_CASE("zero dense head gives coin-flip probabilities and no learning signal below it") {
  ConvClassifier model = init_classifier(small_arch(16), 7);
  for (double& w : model.wh) w = 0.0;
  for (double& b : model.bh) b = 0.0;

  Rng rng(62);
  const TimeSeries x = tsupport::random_series(rng, 16);
  const auto [cls, probs] = predict(model, x);
  CHECK(probs[0] == doctest::Approx(0.5));
  CHECK(probs[1] == doctest::Approx(0.5));
  CHECK(cls == 0);

  // The loss is flat in every parameter below the zero head, so the full
  // gradient check reduces to comparing zeros against zeros.
  CHECK(gradient_check(model, x, 0) < 1e-10);
}

TEST_CASE("positive-weight bias-free net is linear in the input") {
  // With all ReLUs in their active region the stack is linear, so doubling
  // the input doubles the pre-activation evidence, i.e. the log-odds.
  ConvNetConfig cfg = small_arch(12, false);
  ConvClassifier model = init_classifier(cfg, 11);
  for (double& w : model.w1) w = std::abs(w);
  for (double& w : model.w2) w = std::abs(w);

  std::vector<double> pos(12);
  Rng rng(63);
  for (double& v : pos) v = 0.5 + rng.real01();
  const TimeSeries x(pos);
  std::vector<double> doubled = pos;
  for (double& v : doubled) v *= 2.0;

  const auto p1 = predict(model, x).second;
  const auto p2 = predict(model, TimeSeries(doubled)).second;
  const double odds1 = std::log(p1[1] / p1[0]);
  const double odds2 = std::log(p2[1] / p2[0]);
  CHECK(odds2 == doctest::Approx(2.0 * odds1).epsilon(1e-9));
}

TEST_CASE("training solves a linearly separable task quickly and deterministically") {
  const LabeledDataset data = constant_level_task(20, 16, 64);

  TrainConfig tc;
  tc.epochs = 20;
  tc.batch_size = 8;
  tc.learning_rate = 0.1;
  tc.seed = 5;

  const TrainResult first = train_classifier(data, small_arch(16), tc);
  CHECK(first.train_accuracy == doctest::Approx(1.0));
  CHECK(first.best_val_accuracy == doctest::Approx(1.0));

  const TrainResult second = train_classifier(data, small_arch(16), tc);
  CHECK(first.model.w1 == second.model.w1);
  CHECK(first.model.b1 == second.model.b1);
  CHECK(first.model.w2 == second.model.w2);
  CHECK(first.model.b2 == second.model.b2);
  CHECK(first.model.wh == second.model.wh);
  CHECK(first.model.bh == second.model.bh);

  // A held-out class-0 prototype classifies as 0.
  std::vector<double> proto(16, -1.0);
  CHECK(predict(first.model, TimeSeries(proto)).first == 0);

  // Probabilities always sum to one.
  Rng rng(65);
  for (int i = 0; i < 20; ++i) {
    const auto probs = predict(first.model, tsupport::random_series(rng, 16)).second;
    CHECK(probs[0] + probs[1] == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("zero epochs returns the initialized model near chance level") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    // Balanced labels carrying no signal: an untrained model cannot beat chance.
    Rng rng(70 + seed);
    LabeledDataset data;
    for (int i = 0; i < 120; ++i) {
      data.series.push_back(tsupport::random_series(rng, 16));
      data.original_labels.push_back(1 + i % 2);
    }
    data.binary_labels = subsume_labels(data.original_labels);

    TrainConfig tc;
    tc.epochs = 0;
    tc.seed = seed;
    const TrainResult result = train_classifier(data, small_arch(16), tc);
    CHECK(result.best_epoch == 0);

    std::size_t hits = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (predict(result.model, data.series[i]).first == (*data.binary_labels)[i]) ++hits;
    }
    const double acc = static_cast<double>(hits) / static_cast<double>(data.size());
    CHECK(acc >= 0.4);
    CHECK(acc <= 0.6);
  }
}

TEST_CASE("training rejects degenerate datasets") {
  LabeledDataset data;
  data.series = {TimeSeries{1.0, 2.0}, TimeSeries{2.0, 1.0}};
  data.original_labels = {1, 1};
  data.binary_labels = std::vector<int>{1, 1};
  CHECK_THROWS_WITH_AS(static_cast<void>(train_classifier(data, small_arch(2), TrainConfig{})),
                       "train: fewer than 2 classes present", std::invalid_argument);
  data.binary_labels.reset();
  CHECK_THROWS(static_cast<void>(train_classifier(data, small_arch(2), TrainConfig{})));
}

TEST_CASE("predict and saliency reject length mismatches") {
  const ConvClassifier model = init_classifier(small_arch(16), 3);
  CHECK_THROWS(static_cast<void>(predict(model, TimeSeries{1.0, 2.0})));
  CHECK_THROWS(static_cast<void>(saliency(model, TimeSeries{1.0, 2.0})));
}

TEST_CASE("saliency maps stay within bounds over random models and inputs") {
  Rng rng(66);
  for (int trial = 0; trial < 50; ++trial) {
    const int len = 8 + static_cast<int>(rng.below(24));
    const ConvClassifier model =
        init_classifier(small_arch(len, trial % 2 == 0), 300 + static_cast<std::uint64_t>(trial));
    const TimeSeries x = tsupport::random_series(rng, static_cast<std::size_t>(len), 2.0);
    const Heatmap map = saliency(model, x, trial % 2);
    REQUIRE(map.size() == static_cast<std::size_t>(len));
    double hi = 0.0;
    for (double v : map.relevance) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      hi = std::max(hi, v);
    }
    // Max is one unless the raw map was all zero.
    CHECK((hi == doctest::Approx(1.0) || hi == 0.0));
  }
}

TEST_CASE("all-negative head weights give an all-zero heatmap") {
  ConvClassifier model = init_classifier(small_arch(12), 9);
  for (double& w : model.wh) w = -std::abs(w) - 0.1;
  Rng rng(67);
  const Heatmap map = saliency(model, tsupport::random_series(rng, 12), 1);
  for (double v : map.relevance) CHECK(v == 0.0);
}

TEST_CASE("trained spike model localizes the spike (occlusion oracle)") {
  const auto spikes = tsupport::spike_task(40, 32, 68);

  ConvNetConfig arch;
  arch.input_len = 32;
  arch.conv1_filters = 6;
  arch.conv1_kernel = 5;
  arch.conv2_filters = 6;
  arch.conv2_kernel = 5;

  TrainConfig tc;
  tc.epochs = 40;
  tc.batch_size = 8;
  tc.learning_rate = 0.1;
  tc.seed = 21;
  const TrainResult result = train_classifier(spikes.data, arch, tc);
  REQUIRE(result.train_accuracy >= 0.9);

  int checked = 0, heat_ok = 0, occlusion_ok = 0;
  for (std::size_t i = 0; i < spikes.data.size(); i += 7) {
    const TimeSeries& x = spikes.data.series[i];
    const auto [cls, probs] = predict(result.model, x);
    if (cls != (*spikes.data.binary_labels)[i]) continue;
    ++checked;

    const Heatmap map = saliency(result.model, x);
    const auto heat_argmax = static_cast<int>(
        std::max_element(map.relevance.begin(), map.relevance.end()) - map.relevance.begin());

    // Occlusion oracle: zero out a window, measure the predicted-class
    // probability drop, take the argmax window center.
    int best_center = 0;
    double best_drop = -1.0;
    for (int center = 0; center < 32; center += 2) {
      std::vector<double> occluded = x.values;
      for (int t = std::max(0, center - 3); t <= std::min(31, center + 3); ++t)
        occluded[static_cast<std::size_t>(t)] = 0.0;
      const double drop =
          probs[static_cast<std::size_t>(cls)] -
          predict(result.model, TimeSeries(occluded)).second[static_cast<std::size_t>(cls)];
      if (drop > best_drop) {
        best_drop = drop;
        best_center = center;
      }
    }
    const int w = arch.conv1_kernel;
    if (std::abs(heat_argmax - spikes.spike_pos[i]) <= w) ++heat_ok;
    if (std::abs(heat_argmax - best_center) <= w + 2) ++occlusion_ok;
  }
  REQUIRE(checked >= 8);
  CHECK(heat_ok >= checked * 7 / 10);
  CHECK(occlusion_ok >= checked * 7 / 10);
}

TEST_CASE("saliency differs between the two target classes on a trained model") {
  const LabeledDataset data = constant_level_task(20, 16, 69);
  TrainConfig tc;
  tc.epochs = 15;
  tc.learning_rate = 0.1;
  tc.seed = 4;
  const TrainResult result = train_classifier(data, small_arch(16), tc);

  const Heatmap a = saliency(result.model, data.series[0], 0);
  const Heatmap b = saliency(result.model, data.series[0], 1);
  CHECK(a.relevance != b.relevance);
}

TEST_CASE("checkpoint round-trip is exact") {
  namespace fs = std::filesystem;
  const std::string dir = tsupport::make_temp_dir("convnet");
  const ConvClassifier model = init_classifier(small_arch(20), 77);
  const std::string path = dir + "/model.json";
  save_model(model, path);
  const ConvClassifier loaded = load_model(path);
  CHECK(loaded.cfg.input_len == model.cfg.input_len);
  CHECK(loaded.cfg.position_channel == model.cfg.position_channel);
  CHECK(loaded.w1 == model.w1);
  CHECK(loaded.b1 == model.b1);
  CHECK(loaded.w2 == model.w2);
  CHECK(loaded.b2 == model.b2);
  CHECK(loaded.wh == model.wh);
  CHECK(loaded.bh == model.bh);

  std::ofstream bad(dir + "/bad.json");
  bad << "{\"format\": \"other\"}";
  bad.close();
  CHECK_THROWS(static_cast<void>(load_model(dir + "/bad.json")));
}

TEST_CASE("saliency csv round-trip and error reporting") {
  const std::string dir = tsupport::make_temp_dir("salcsv");
  std::vector<Heatmap> maps;
  Rng rng(78);
  for (int i = 0; i < 5; ++i) {
    std::vector<double> v(9);
    for (double& x : v) x = rng.real01();
    v[0] = 0.0;
    v[1] = 1.0;
    maps.emplace_back(std::move(v));
  }
  const std::string path = dir + "/maps.csv";
  save_saliency_csv(maps, path);
  const auto loaded = load_saliency_csv(path);
  REQUIRE(loaded.size() == maps.size());
  for (std::size_t i = 0; i < maps.size(); ++i) CHECK(loaded[i].relevance == maps[i].relevance);

  {
    std::ofstream bad(dir + "/ragged.csv");
    bad << "0.5,0.5\n0.5\n";
  }
  CHECK_THROWS(static_cast<void>(load_saliency_csv(dir + "/ragged.csv")));
  {
    std::ofstream bad(dir + "/range.csv");
    bad << "0.5,1.5\n";
  }
  CHECK_THROWS(static_cast<void>(load_saliency_csv(dir + "/range.csv")));
  {
    std::ofstream bad(dir + "/nonnum.csv");
    bad << "0.5,abc\n";
  }
  CHECK_THROWS(static_cast<void>(load_saliency_csv(dir + "/nonnum.csv")));
}
