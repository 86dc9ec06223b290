#include "tsd/convnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <stdexcept>

#include "tsd/random.hpp"
#include "tsd/seeds.hpp"

namespace tsd {

using json = nlohmann::json;

Heatmap::Heatmap(std::vector<double> r) : relevance(std::move(r)) {
  if (relevance.empty()) throw std::invalid_argument("heatmap must be non-empty");
  for (double v : relevance) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("heatmap values must lie in [0,1]");
  }
}

namespace {

void check_arch(const ConvNetConfig& cfg) {
  if (cfg.input_len < 1) throw std::invalid_argument("convnet: input length must be positive");
  if (cfg.conv1_filters < 1 || cfg.conv2_filters < 1)
    throw std::invalid_argument("convnet: filter counts must be positive");
  if (cfg.conv1_kernel % 2 == 0 || cfg.conv2_kernel % 2 == 0)
    throw std::invalid_argument("convnet: kernel widths must be odd (same padding)");
}

// Channel-major activation planes, [channel][t].
using Planes = std::vector<std::vector<double>>;

struct Activations {
  Planes input;
  Planes z1, a1;
  Planes z2, a2;
  std::vector<double> gap;
  std::array<double, 2> logits{};
  std::array<double, 2> probs{};
};

Planes make_input(const ConvNetConfig& cfg, const TimeSeries& series) {
  const std::size_t n = series.size();
  Planes input;
  input.push_back(series.values);
  if (cfg.position_channel) {
    // Signal gated by a time ramp in [-1, 1]. Gating (instead of a bare ramp
    // channel) means no feature can fire independently of the input, so
    // pooled activations stay tied to where the signal actually is.
    std::vector<double> gated(n);
    for (std::size_t t = 0; t < n; ++t) {
      const double ramp =
          n > 1 ? 2.0 * static_cast<double>(t) / static_cast<double>(n - 1) - 1.0 : 0.0;
      gated[t] = series.values[t] * ramp;
    }
    input.push_back(std::move(gated));
  }
  return input;
}

// Same-padded correlation: out[f][t] = b[f] + sum_{c,u} w[f][c][u] * in[c][t+u-pad]
void conv_forward(const Planes& in, int out_ch, int kernel, const std::vector<double>& w,
                  const std::vector<double>& b, Planes& z) {
  const int in_ch = static_cast<int>(in.size());
  const int n = static_cast<int>(in[0].size());
  const int pad = kernel / 2;
  z.assign(static_cast<std::size_t>(out_ch), std::vector<double>(static_cast<std::size_t>(n)));
  for (int f = 0; f < out_ch; ++f) {
    for (int t = 0; t < n; ++t) {
      double acc = b[static_cast<std::size_t>(f)];
      for (int c = 0; c < in_ch; ++c) {
        const double* wf = &w[static_cast<std::size_t>((f * in_ch + c) * kernel)];
        const int lo = std::max(0, pad - t);
        const int hi = std::min(kernel, n + pad - t);
        const double* src = in[static_cast<std::size_t>(c)].data() + (t - pad);
        for (int u = lo; u < hi; ++u) acc += wf[u] * src[u];
      }
      z[static_cast<std::size_t>(f)][static_cast<std::size_t>(t)] = acc;
    }
  }
}

void relu(const Planes& z, Planes& a) {
  a = z;
  for (auto& plane : a)
    for (double& v : plane) v = std::max(0.0, v);
}

Activations forward(const ConvClassifier& m, const TimeSeries& series) {
  Activations acts;
  acts.input = make_input(m.cfg, series);
  conv_forward(acts.input, m.cfg.conv1_filters, m.cfg.conv1_kernel, m.w1, m.b1, acts.z1);
  relu(acts.z1, acts.a1);
  conv_forward(acts.a1, m.cfg.conv2_filters, m.cfg.conv2_kernel, m.w2, m.b2, acts.z2);
  relu(acts.z2, acts.a2);

  const int g_count = m.cfg.conv2_filters;
  const double n = static_cast<double>(series.size());
  acts.gap.assign(static_cast<std::size_t>(g_count), 0.0);
  for (int g = 0; g < g_count; ++g) {
    double sum = 0.0;
    for (double v : acts.a2[static_cast<std::size_t>(g)]) sum += v;
    acts.gap[static_cast<std::size_t>(g)] = sum / n;
  }
  for (int c = 0; c < 2; ++c) {
    double acc = m.bh[static_cast<std::size_t>(c)];
    for (int g = 0; g < g_count; ++g)
      acc += m.wh[static_cast<std::size_t>(c * g_count + g)] * acts.gap[static_cast<std::size_t>(g)];
    acts.logits[static_cast<std::size_t>(c)] = acc;
  }
  const double mx = std::max(acts.logits[0], acts.logits[1]);
  const double e0 = std::exp(acts.logits[0] - mx);
  const double e1 = std::exp(acts.logits[1] - mx);
  acts.probs = {e0 / (e0 + e1), e1 / (e0 + e1)};
  return acts;
}

struct Gradients {
  std::vector<double> w1, b1, w2, b2, wh, bh;

  explicit Gradients(const ConvClassifier& m)
      : w1(m.w1.size(), 0.0),
        b1(m.b1.size(), 0.0),
        w2(m.w2.size(), 0.0),
        b2(m.b2.size(), 0.0),
        wh(m.wh.size(), 0.0),
        bh(m.bh.size(), 0.0) {}

  void add(const Gradients& o) {
    auto axpy = [](std::vector<double>& dst, const std::vector<double>& src) {
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    };
    axpy(w1, o.w1);
    axpy(b1, o.b1);
    axpy(w2, o.w2);
    axpy(b2, o.b2);
    axpy(wh, o.wh);
    axpy(bh, o.bh);
  }

  void scale(double s) {
    for (auto* v : {&w1, &b1, &w2, &b2, &wh, &bh})
      for (double& x : *v) x *= s;
  }
};

// Accumulates dw/db and, when din is given, d cost / d in.
void conv_backward(const Planes& in, const Planes& dz, int kernel, const std::vector<double>& w,
                   std::vector<double>& dw, std::vector<double>& db, Planes* din) {
  const int out_ch = static_cast<int>(dz.size());
  const int in_ch = static_cast<int>(in.size());
  const int n = static_cast<int>(in[0].size());
  const int pad = kernel / 2;

  if (din)
    din->assign(static_cast<std::size_t>(in_ch),
                std::vector<double>(static_cast<std::size_t>(n), 0.0));

  for (int f = 0; f < out_ch; ++f) {
    const auto& dzf = dz[static_cast<std::size_t>(f)];
    for (int t = 0; t < n; ++t) {
      const double g = dzf[static_cast<std::size_t>(t)];
      if (g == 0.0) continue;
      db[static_cast<std::size_t>(f)] += g;
      for (int c = 0; c < in_ch; ++c) {
        const std::size_t base = static_cast<std::size_t>((f * in_ch + c) * kernel);
        const int lo = std::max(0, pad - t);
        const int hi = std::min(kernel, n + pad - t);
        const double* src = in[static_cast<std::size_t>(c)].data() + (t - pad);
        for (int u = lo; u < hi; ++u) dw[base + static_cast<std::size_t>(u)] += g * src[u];
        if (din) {
          double* dst = (*din)[static_cast<std::size_t>(c)].data() + (t - pad);
          const double* wf = &w[base];
          for (int u = lo; u < hi; ++u) dst[u] += g * wf[u];
        }
      }
    }
  }
}

// Cross-entropy gradients for one sample.
Gradients backward(const ConvClassifier& m, const Activations& acts, int label) {
  Gradients grads(m);
  const int g_count = m.cfg.conv2_filters;
  const int n = static_cast<int>(acts.input[0].size());

  std::array<double, 2> dlogits = acts.probs;
  dlogits[static_cast<std::size_t>(label)] -= 1.0;

  std::vector<double> dgap(static_cast<std::size_t>(g_count), 0.0);
  for (int c = 0; c < 2; ++c) {
    grads.bh[static_cast<std::size_t>(c)] = dlogits[static_cast<std::size_t>(c)];
    for (int g = 0; g < g_count; ++g) {
      grads.wh[static_cast<std::size_t>(c * g_count + g)] =
          dlogits[static_cast<std::size_t>(c)] * acts.gap[static_cast<std::size_t>(g)];
      dgap[static_cast<std::size_t>(g)] +=
          dlogits[static_cast<std::size_t>(c)] * m.wh[static_cast<std::size_t>(c * g_count + g)];
    }
  }

  Planes dz2(static_cast<std::size_t>(g_count), std::vector<double>(static_cast<std::size_t>(n)));
  for (int g = 0; g < g_count; ++g) {
    const double per_step = dgap[static_cast<std::size_t>(g)] / static_cast<double>(n);
    for (int t = 0; t < n; ++t) {
      dz2[static_cast<std::size_t>(g)][static_cast<std::size_t>(t)] =
          acts.z2[static_cast<std::size_t>(g)][static_cast<std::size_t>(t)] > 0.0 ? per_step : 0.0;
    }
  }

  Planes da1;
  conv_backward(acts.a1, dz2, m.cfg.conv2_kernel, m.w2, grads.w2, grads.b2, &da1);

  Planes dz1 = da1;
  for (int f = 0; f < m.cfg.conv1_filters; ++f) {
    for (int t = 0; t < n; ++t) {
      if (acts.z1[static_cast<std::size_t>(f)][static_cast<std::size_t>(t)] <= 0.0)
        dz1[static_cast<std::size_t>(f)][static_cast<std::size_t>(t)] = 0.0;
    }
  }
  conv_backward(acts.input, dz1, m.cfg.conv1_kernel, m.w1, grads.w1, grads.b1, nullptr);
  return grads;
}

void sgd_step(ConvClassifier& m, const Gradients& g, double lr, double weight_decay) {
  auto step = [lr](std::vector<double>& p, const std::vector<double>& grad) {
    for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * grad[i];
  };
  auto step_decayed = [lr, weight_decay](std::vector<double>& p, const std::vector<double>& grad) {
    for (std::size_t i = 0; i < p.size(); ++i)
      p[i] -= lr * (grad[i] + weight_decay * p[i]);
  };
  step_decayed(m.w1, g.w1);
  step(m.b1, g.b1);
  step_decayed(m.w2, g.w2);
  step(m.b2, g.b2);
  step_decayed(m.wh, g.wh);
  step(m.bh, g.bh);
}

void check_input(const ConvClassifier& m, const TimeSeries& series) {
  if (static_cast<int>(series.size()) != m.cfg.input_len)
    throw std::invalid_argument("convnet: series length does not match the model's input length");
}

std::vector<double> linear_resample(const std::vector<double>& v, std::size_t target) {
  if (v.size() == target) return v;
  std::vector<double> out(target);
  if (target == 1 || v.size() == 1) {
    std::fill(out.begin(), out.end(), v[0]);
    return out;
  }
  const double step = static_cast<double>(v.size() - 1) / static_cast<double>(target - 1);
  for (std::size_t i = 0; i < target; ++i) {
    const double pos = static_cast<double>(i) * step;
    const std::size_t lo = std::min(static_cast<std::size_t>(pos), v.size() - 2);
    const double frac = pos - static_cast<double>(lo);
    out[i] = v[lo] * (1.0 - frac) + v[lo + 1] * frac;
  }
  return out;
}

double accuracy(const ConvClassifier& m, const LabeledDataset& data,
                const std::vector<std::size_t>& indices) {
  if (indices.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i : indices) {
    const Activations acts = forward(m, data.series[i]);
    const int pred = acts.probs[1] > acts.probs[0] ? 1 : 0;
    if (pred == (*data.binary_labels)[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(indices.size());
}

}  // namespace

ConvClassifier init_classifier(ConvNetConfig cfg, std::uint64_t seed) {
  check_arch(cfg);
  ConvClassifier m;
  m.cfg = cfg;
  Rng rng(seed);

  auto fill = [&rng](std::vector<double>& v, std::size_t count, int fan_in) {
    v.resize(count);
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& x : v) x = rng.uniform(-bound, bound);
  };
  const int in_ch = cfg.in_channels();
  fill(m.w1, static_cast<std::size_t>(cfg.conv1_filters * in_ch * cfg.conv1_kernel),
       in_ch * cfg.conv1_kernel);
  m.b1.assign(static_cast<std::size_t>(cfg.conv1_filters), 0.0);
  fill(m.w2, static_cast<std::size_t>(cfg.conv2_filters * cfg.conv1_filters * cfg.conv2_kernel),
       cfg.conv1_filters * cfg.conv2_kernel);
  m.b2.assign(static_cast<std::size_t>(cfg.conv2_filters), 0.0);
  fill(m.wh, static_cast<std::size_t>(2 * cfg.conv2_filters), cfg.conv2_filters);
  m.bh.assign(2, 0.0);
  return m;
}

TrainResult train_classifier(const LabeledDataset& data, ConvNetConfig arch,
                             const TrainConfig& cfg) {
  data.validate();
  if (!data.binary_labels) throw std::invalid_argument("train: dataset has no binary labels");
  if (data.size() == 0) throw std::invalid_argument("train: empty dataset");
  std::set<int> classes(data.binary_labels->begin(), data.binary_labels->end());
  if (classes.size() < 2) throw std::invalid_argument("train: fewer than 2 classes present");

  const std::size_t len = data.series[0].size();
  for (const auto& s : data.series) {
    if (s.size() != len) throw std::invalid_argument("train: series lengths differ");
  }
  if (arch.input_len == 0) arch.input_len = static_cast<int>(len);
  if (arch.input_len != static_cast<int>(len))
    throw std::invalid_argument("train: series length does not match the configured input length");

  Rng split_rng(derive_seed(cfg.seed, "train-split"));
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  split_rng.shuffle(order);

  std::size_t val_count = static_cast<std::size_t>(
      std::llround(cfg.val_fraction * static_cast<double>(data.size())));
  val_count = std::min(val_count, data.size() - 1);
  std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<long>(val_count));
  std::vector<std::size_t> train(order.begin() + static_cast<long>(val_count), order.end());

  ConvClassifier model = init_classifier(arch, derive_seed(cfg.seed, "init"));

  TrainResult result;
  result.model = model;
  result.best_val_accuracy = accuracy(model, data, val);
  result.best_epoch = 0;

  Rng epoch_rng(derive_seed(cfg.seed, "epochs"));
  const int batch = std::max(1, cfg.batch_size);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    epoch_rng.shuffle(train);
    for (std::size_t start = 0; start < train.size(); start += static_cast<std::size_t>(batch)) {
      const std::size_t stop = std::min(train.size(), start + static_cast<std::size_t>(batch));
      Gradients total(model);
      for (std::size_t i = start; i < stop; ++i) {
        const std::size_t idx = train[i];
        const Activations acts = forward(model, data.series[idx]);
        total.add(backward(model, acts, (*data.binary_labels)[idx]));
      }
      total.scale(1.0 / static_cast<double>(stop - start));
      sgd_step(model, total, cfg.learning_rate, cfg.weight_decay);
    }
    const double val_acc = accuracy(model, data, val);
    // Ties go to the later epoch: with small validation sets the accuracy
    // saturates long before the margins stop improving.
    if (val_acc >= result.best_val_accuracy) {
      result.best_val_accuracy = val_acc;
      result.model = model;
      result.best_epoch = epoch;
    }
  }
  result.train_accuracy = accuracy(result.model, data, train);
  return result;
}

std::pair<int, std::array<double, 2>> predict(const ConvClassifier& model,
                                              const TimeSeries& series) {
  check_input(model, series);
  const Activations acts = forward(model, series);
  const int cls = acts.probs[1] > acts.probs[0] ? 1 : 0;
  return {cls, acts.probs};
}

Heatmap saliency(const ConvClassifier& model, const TimeSeries& series,
                 std::optional<int> target_class) {
  check_input(model, series);
  const Activations acts = forward(model, series);
  const int target = target_class.value_or(acts.probs[1] > acts.probs[0] ? 1 : 0);
  if (target != 0 && target != 1)
    throw std::invalid_argument("saliency: target class must be 0 or 1");

  const int g_count = model.cfg.conv2_filters;
  const std::size_t map_len = acts.a2[0].size();
  const double inv_t = 1.0 / static_cast<double>(map_len);

  std::vector<double> raw(map_len, 0.0);
  for (int g = 0; g < g_count; ++g) {
    // d logit_target / d a2[g][t] is wh[target][g]/T for every t, so its
    // temporal mean is the same value.
    const double weight = model.wh[static_cast<std::size_t>(target * g_count + g)] * inv_t;
    const auto& plane = acts.a2[static_cast<std::size_t>(g)];
    for (std::size_t t = 0; t < map_len; ++t) raw[t] += weight * plane[t];
  }
  for (double& v : raw) v = std::max(0.0, v);

  double lo = raw[0], hi = raw[0];
  for (double v : raw) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi <= 0.0) {
    std::fill(raw.begin(), raw.end(), 0.0);
  } else if (hi - lo < 1e-300) {
    std::fill(raw.begin(), raw.end(), 1.0);
  } else {
    for (double& v : raw) v = (v - lo) / (hi - lo);
  }
  return Heatmap(linear_resample(raw, series.size()));
}

double gradient_check(const ConvClassifier& model, const TimeSeries& series, int label) {
  check_input(model, series);
  if (label != 0 && label != 1) throw std::invalid_argument("gradient_check: label must be 0 or 1");

  const Activations acts = forward(model, series);
  const Gradients analytic = backward(model, acts, label);

  ConvClassifier probe = model;
  std::vector<std::pair<std::vector<double>*, const std::vector<double>*>> blocks = {
      {&probe.w1, &analytic.w1}, {&probe.b1, &analytic.b1}, {&probe.w2, &analytic.w2},
      {&probe.b2, &analytic.b2}, {&probe.wh, &analytic.wh}, {&probe.bh, &analytic.bh}};

  const double h = 1e-4;
  auto loss = [&series, label](const ConvClassifier& m) {
    return -std::log(forward(m, series).probs[static_cast<std::size_t>(label)]);
  };

  double worst = 0.0;
  for (auto& [params, grads] : blocks) {
    for (std::size_t i = 0; i < params->size(); ++i) {
      const double saved = (*params)[i];
      (*params)[i] = saved + h;
      const double up = loss(probe);
      (*params)[i] = saved - h;
      const double down = loss(probe);
      (*params)[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic_g = (*grads)[i];
      const double rel = std::abs(analytic_g - numeric) /
                         std::max({std::abs(analytic_g), std::abs(numeric), 1e-3});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

double kink_distance(const ConvClassifier& model, const TimeSeries& series) {
  check_input(model, series);
  const Activations acts = forward(model, series);
  double closest = std::numeric_limits<double>::infinity();
  for (const Planes* planes : {&acts.z1, &acts.z2}) {
    for (const auto& plane : *planes)
      for (double z : plane) closest = std::min(closest, std::abs(z));
  }
  return closest;
}

void save_model(const ConvClassifier& model, const std::string& path) {
  json doc;
  doc["format"] = "tsd-convnet";
  doc["version"] = 1;
  doc["architecture"] = {{"input_len", model.cfg.input_len},
                         {"conv1_filters", model.cfg.conv1_filters},
                         {"conv1_kernel", model.cfg.conv1_kernel},
                         {"conv2_filters", model.cfg.conv2_filters},
                         {"conv2_kernel", model.cfg.conv2_kernel},
                         {"position_channel", model.cfg.position_channel}};
  doc["params"] = {{"w1", model.w1}, {"b1", model.b1}, {"w2", model.w2},
                   {"b2", model.b2}, {"wh", model.wh}, {"bh", model.bh}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model checkpoint: " + path);
  out << doc.dump(1) << "\n";
}

ConvClassifier load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read model checkpoint: " + path);
  json doc = json::parse(in);
  if (doc.value("format", "") != "tsd-convnet")
    throw std::runtime_error("not a convnet checkpoint: " + path);
  if (doc.value("version", 0) != 1)
    throw std::runtime_error("unsupported checkpoint version in " + path);

  ConvClassifier m;
  const json& arch = doc.at("architecture");
  m.cfg.input_len = arch.at("input_len").get<int>();
  m.cfg.conv1_filters = arch.at("conv1_filters").get<int>();
  m.cfg.conv1_kernel = arch.at("conv1_kernel").get<int>();
  m.cfg.conv2_filters = arch.at("conv2_filters").get<int>();
  m.cfg.conv2_kernel = arch.at("conv2_kernel").get<int>();
  m.cfg.position_channel = arch.at("position_channel").get<bool>();
  check_arch(m.cfg);

  const json& params = doc.at("params");
  m.w1 = params.at("w1").get<std::vector<double>>();
  m.b1 = params.at("b1").get<std::vector<double>>();
  m.w2 = params.at("w2").get<std::vector<double>>();
  m.b2 = params.at("b2").get<std::vector<double>>();
  m.wh = params.at("wh").get<std::vector<double>>();
  m.bh = params.at("bh").get<std::vector<double>>();

  const int in_ch = m.cfg.in_channels();
  if (m.w1.size() != static_cast<std::size_t>(m.cfg.conv1_filters * in_ch * m.cfg.conv1_kernel) ||
      m.b1.size() != static_cast<std::size_t>(m.cfg.conv1_filters) ||
      m.w2.size() != static_cast<std::size_t>(m.cfg.conv2_filters * m.cfg.conv1_filters *
                                              m.cfg.conv2_kernel) ||
      m.b2.size() != static_cast<std::size_t>(m.cfg.conv2_filters) ||
      m.wh.size() != static_cast<std::size_t>(2 * m.cfg.conv2_filters) || m.bh.size() != 2) {
    throw std::runtime_error("checkpoint parameter shapes do not match the architecture header");
  }
  return m;
}

void save_saliency_csv(const std::vector<Heatmap>& maps, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write saliency csv: " + path);
  out.precision(17);
  for (const auto& map : maps) {
    for (std::size_t i = 0; i < map.relevance.size(); ++i) {
      if (i) out << ',';
      out << map.relevance[i];
    }
    out << '\n';
  }
}

std::vector<Heatmap> load_saliency_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read saliency csv: " + path);
  std::vector<Heatmap> maps;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<double> values;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw std::runtime_error("saliency csv: non-numeric cell in row " + std::to_string(row));
      }
    }
    try {
      maps.emplace_back(std::move(values));
    } catch (const std::exception& e) {
      throw std::runtime_error("saliency csv row " + std::to_string(row) + ": " + e.what());
    }
    if (maps.size() > 1 && maps.back().size() != maps.front().size())
      throw std::runtime_error("saliency csv: ragged row " + std::to_string(row));
  }
  return maps;
}

}  // namespace tsd
