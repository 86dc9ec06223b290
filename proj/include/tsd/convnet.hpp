#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tsd/series.hpp"

namespace tsd {

/// Per-timestep relevance scores in [0, 1], same length as the explained
/// series.
struct Heatmap {
  std::vector<double> relevance;

  Heatmap() = default;
  explicit Heatmap(std::vector<double> r);
  std::size_t size() const { return relevance.size(); }
};

/// Two same-padded 1D convolutions (ReLU) followed by global average pooling
/// and a dense 2-logit head. Same padding keeps the last feature maps aligned
/// with input timesteps, which the saliency extraction relies on. When
/// position_channel is set, the signal gated by a fixed time ramp is stacked
/// onto the input, so pooled features can encode where along the series a
/// pattern sits; pooling alone cannot.
struct ConvNetConfig {
  int input_len = 0;  // 0: taken from the training data
  int conv1_filters = 8;
  int conv1_kernel = 9;
  int conv2_filters = 8;
  int conv2_kernel = 9;
  bool position_channel = true;

  int in_channels() const { return position_channel ? 2 : 1; }
};

struct ConvClassifier {
  ConvNetConfig cfg;
  std::vector<double> w1, b1;  // w1[f][c][u]
  std::vector<double> w2, b2;  // w2[g][f][u]
  std::vector<double> wh, bh;  // wh[class][g], 2 classes

  std::size_t param_count() const {
    return w1.size() + b1.size() + w2.size() + b2.size() + wh.size() + bh.size();
  }
};

ConvClassifier init_classifier(ConvNetConfig cfg, std::uint64_t seed);

struct TrainConfig {
  int epochs = 60;
  int batch_size = 16;
  double learning_rate = 0.05;
  double val_fraction = 0.2;
  // Optional L2 penalty on the weights (never the biases). Zero keeps the
  // plain cross-entropy objective. A small value prunes head weights of
  // features whose pooled activation is input-independent, which sharpens
  // the saliency maps considerably.
  double weight_decay = 0.0;
  std::uint64_t seed = 0;
};

struct TrainResult {
  ConvClassifier model;  // parameter snapshot with the best validation accuracy
  double best_val_accuracy = 0.0;
  double train_accuracy = 0.0;  // of the returned snapshot, on the training portion
  int best_epoch = 0;           // 0 = the initialized model
};

/// Mini-batch gradient descent on cross-entropy with a fixed learning rate.
/// The dataset must carry binary labels covering both classes. The
/// train/validation split and all shuffling derive from the seed, so a run is
/// bitwise reproducible.
TrainResult train_classifier(const LabeledDataset& data, ConvNetConfig arch,
                             const TrainConfig& cfg);

/// argmax class and softmax probabilities. The series must already be
/// z-normalized and match the model's input length.
std::pair<int, std::array<double, 2>> predict(const ConvClassifier& model,
                                              const TimeSeries& series);

/// Grad-CAM style heatmap: channel weights are the temporal mean of
/// d logit_target / d (last conv feature map); the weighted feature-map sum
/// is ReLU'd and min-max rescaled to [0, 1]. An all-zero raw map stays zero.
/// target_class defaults to the predicted class.
Heatmap saliency(const ConvClassifier& model, const TimeSeries& series,
                 std::optional<int> target_class = std::nullopt);

/// Max relative error between analytic parameter gradients of the
/// cross-entropy loss and central finite differences (step 1e-4). The
/// relative error uses an absolute floor of 1e-3 in the denominator so that
/// finite-difference noise on near-zero gradients does not dominate.
double gradient_check(const ConvClassifier& model, const TimeSeries& series, int label = 0);

/// Smallest |pre-activation| across both conv layers for this input. A
/// finite-difference gradient comparison is only meaningful when this is
/// well above the probe step, i.e. no ReLU sits on its kink.
double kink_distance(const ConvClassifier& model, const TimeSeries& series);

/// Versioned JSON checkpoint (architecture header + flat parameter arrays).
void save_model(const ConvClassifier& model, const std::string& path);
ConvClassifier load_model(const std::string& path);

/// Saliency maps as CSV, one row per series, one column per timestep.
void save_saliency_csv(const std::vector<Heatmap>& maps, const std::string& path);
std::vector<Heatmap> load_saliency_csv(const std::string& path);

}  // namespace tsd
