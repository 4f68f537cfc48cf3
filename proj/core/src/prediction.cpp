#include "smarttoy/prediction.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"
#include "smarttoy/rng.hpp"

namespace smarttoy {
namespace {

using Json = nlohmann::ordered_json;

double dist(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

double mean_y(std::span<const Point2> p, std::size_t first, std::size_t last) {
  double s = 0.0;
  for (std::size_t i = first; i <= last; ++i) s += p[i].y;
  return s / static_cast<double>(last - first + 1);
}

Point2 mean_point(std::span<const Point2> p, std::size_t first, std::size_t last) {
  Point2 m;
  for (std::size_t i = first; i <= last; ++i) {
    m.x += p[i].x;
    m.y += p[i].y;
  }
  const double n = static_cast<double>(last - first + 1);
  return {m.x / n, m.y / n};
}

double ratio(double a, double b) {
  const double s = a + b;
  return s > 0.0 ? a / s : 0.5;
}

void check_input(const MlpModel& model, std::span<const double> x) {
  if (x.size() != model.layers[0].inputs) {
    throw InputError("dimension mismatch: model expects " + std::to_string(model.layers[0].inputs) +
                     " inputs, got " + std::to_string(x.size()));
  }
  if (model.layers[1].outputs != kEmotionCount || model.layers[1].inputs != model.layers[0].outputs) {
    throw InputError("malformed model: inconsistent layer sizes");
  }
}

// Hidden activations and the output distribution for one input.
struct ForwardPass {
  std::vector<double> hidden;
  Distribution probs{};
};

ForwardPass forward_pass(const MlpModel& model, std::span<const double> x) {
  check_input(model, x);
  const DenseLayer& l1 = model.layers[0];
  const DenseLayer& l2 = model.layers[1];
  ForwardPass fp;
  fp.hidden.resize(l1.outputs);
  for (std::size_t j = 0; j < l1.outputs; ++j) {
    double z = l1.biases[j];
    for (std::size_t i = 0; i < l1.inputs; ++i) z += l1.w(j, i) * x[i];
    fp.hidden[j] = std::tanh(z);
  }
  Distribution logits{};
  for (std::size_t k = 0; k < kEmotionCount; ++k) {
    double z = l2.biases[k];
    for (std::size_t j = 0; j < l2.inputs; ++j) z += l2.w(k, j) * fp.hidden[j];
    logits[k] = z;
  }
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t k = 0; k < kEmotionCount; ++k) {
    fp.probs[k] = std::exp(logits[k] - peak);
    total += fp.probs[k];
  }
  for (double& p : fp.probs) p /= total;
  return fp;
}

DenseLayer zero_layer(std::size_t inputs, std::size_t outputs) {
  return DenseLayer{inputs, outputs, std::vector<double>(inputs * outputs, 0.0),
                    std::vector<double>(outputs, 0.0)};
}

Json layer_json(const DenseLayer& l) {
  Json j;
  j["inputs"] = l.inputs;
  j["outputs"] = l.outputs;
  j["weights"] = l.weights;
  j["biases"] = l.biases;
  return j;
}

std::vector<double> read_reals(const Json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_array()) throw InputError(std::string("model file: missing ") + key);
  std::vector<double> out;
  for (const auto& v : j[key]) {
    if (!v.is_number()) throw InputError(std::string("model file: non-numeric entry in ") + key);
    out.push_back(v.get<double>());
  }
  return out;
}

std::size_t read_size(const Json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number_unsigned()) {
    throw InputError(std::string("model file: missing ") + key);
  }
  return j[key].get<std::size_t>();
}

}  // namespace

std::string_view to_string(FeatureKind kind) { return kind == FeatureKind::Face ? "face" : "voice"; }

std::optional<FeatureKind> parse_feature_kind(std::string_view name) {
  if (name == "face") return FeatureKind::Face;
  if (name == "voice") return FeatureKind::Voice;
  return std::nullopt;
}

std::vector<Point2> preprocess_face(const FaceFrame& frame) {
  if (frame.landmarks.size() != kLandmarkCount) {
    throw InputError("landmarks: expected 68, got " + std::to_string(frame.landmarks.size()));
  }
  Point2 centroid = mean_point(frame.landmarks, 0, kLandmarkCount - 1);
  std::vector<Point2> out(kLandmarkCount);
  for (std::size_t i = 0; i < kLandmarkCount; ++i) {
    out[i] = {frame.landmarks[i].x - centroid.x, frame.landmarks[i].y - centroid.y};
  }
  const double iod = dist(mean_point(out, 36, 41), mean_point(out, 42, 47));
  if (!(iod >= 1e-9)) throw DegenerateInputError("degenerate input: coincident eye landmarks");
  for (auto& p : out) {
    p.x /= iod;
    p.y /= iod;
  }
  return out;
}

FeatureVector extract_face_features(std::span<const Point2> p) {
  if (p.size() != kLandmarkCount) {
    throw InputError("landmarks: expected 68, got " + std::to_string(p.size()));
  }
  const double mouth_w = dist(p[48], p[54]);
  const double mouth_h = dist(p[51], p[57]);
  const double corner = (p[51].y + p[57].y) / 2.0 - (p[48].y + p[54].y) / 2.0;
  const double eye_l = (dist(p[37], p[41]) + dist(p[38], p[40])) / 2.0;
  const double eye_r = (dist(p[43], p[47]) + dist(p[44], p[46])) / 2.0;
  const double brow_l = mean_y(p, 36, 41) - mean_y(p, 17, 21);
  const double brow_r = mean_y(p, 42, 47) - mean_y(p, 22, 26);
  const double slope_l = std::atan2(p[17].y - p[21].y, std::abs(p[21].x - p[17].x));
  const double slope_r = std::atan2(p[26].y - p[22].y, std::abs(p[26].x - p[22].x));
  const double nose_chin = dist(p[33], p[8]);
  const double jaw_w = dist(p[0], p[16]);

  FeatureVector fv;
  fv.kind = FeatureKind::Face;
  fv.values = {mouth_w,
               mouth_h,
               corner,
               eye_l,
               eye_r,
               brow_l,
               brow_r,
               slope_l,
               slope_r,
               nose_chin,
               jaw_w,
               ratio(mouth_w, jaw_w),
               ratio(mouth_h, mouth_w),
               ratio(eye_l, std::abs(brow_l)),
               ratio(eye_r, std::abs(brow_r)),
               ratio(nose_chin, dist(p[27], p[8])),
               ratio(mouth_h, nose_chin)};
  return fv;
}

FeatureVector preprocess_voice(const VoiceFrame& frame) {
  if (frame.band_energies.size() != kVoiceBandCount) {
    throw InputError("band_energies: expected 26, got " + std::to_string(frame.band_energies.size()));
  }
  FeatureVector fv;
  fv.kind = FeatureKind::Voice;
  fv.values.resize(kVoiceFeatureCount, 0.0);
  std::array<double, kVoiceBandCount> logs{};
  for (std::size_t i = 0; i < kVoiceBandCount; ++i) logs[i] = std::log1p(frame.band_energies[i]);
  const double n = static_cast<double>(kVoiceBandCount);
  const double mean = std::accumulate(logs.begin(), logs.end(), 0.0) / n;
  double var = 0.0;
  for (double v : logs) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  if (sd > 1e-12) {
    for (std::size_t i = 0; i < kVoiceBandCount; ++i) fv.values[i] = (logs[i] - mean) / sd;
  }
  fv.values[kVoiceBandCount] = std::clamp(frame.pitch_hz / 500.0, 0.0, 1.0);
  return fv;
}

MlpModel MlpModel::zeros(std::size_t inputs, std::size_t hidden, std::size_t outputs) {
  MlpModel m;
  m.layers = {zero_layer(inputs, hidden), zero_layer(hidden, outputs)};
  return m;
}

MlpModel MlpModel::initialized(std::size_t inputs, std::size_t hidden, std::uint64_t seed,
                               std::size_t outputs) {
  MlpModel m = zeros(inputs, hidden, outputs);
  m.seed = seed;
  Rng rng(seed);
  for (auto& layer : m.layers) {
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.inputs + layer.outputs));
    for (double& w : layer.weights) w = rng.uniform(-limit, limit);
  }
  return m;
}

std::optional<std::string> MlpModel::check() const {
  if (layers[1].inputs != layers[0].outputs) return "hidden sizes disagree";
  if (layers[1].outputs != kEmotionCount) return "output layer must have 6 units";
  for (const auto& l : layers) {
    if (l.inputs == 0 || l.outputs == 0) return "empty layer";
    if (l.weights.size() != l.inputs * l.outputs) return "weight matrix size mismatch";
    if (l.biases.size() != l.outputs) return "bias vector size mismatch";
    for (double v : l.weights) {
      if (!std::isfinite(v)) return "non-finite weight";
    }
    for (double v : l.biases) {
      if (!std::isfinite(v)) return "non-finite bias";
    }
  }
  return std::nullopt;
}

Distribution mlp_forward(const MlpModel& model, std::span<const double> x) {
  return forward_pass(model, x).probs;
}

Distribution mlp_forward(const MlpModel& model, const FeatureVector& x) {
  return mlp_forward(model, std::span<const double>(x.values));
}

double cross_entropy(const MlpModel& model, std::span<const double> x, EmotionLabel y) {
  return -std::log(mlp_forward(model, x)[static_cast<std::size_t>(y)]);
}

MlpGradient mlp_backprop(const MlpModel& model, std::span<const double> x, EmotionLabel y) {
  const ForwardPass fp = forward_pass(model, x);
  const DenseLayer& l1 = model.layers[0];
  const DenseLayer& l2 = model.layers[1];
  const auto target = static_cast<std::size_t>(y);

  MlpGradient g;
  g.layers = {zero_layer(l1.inputs, l1.outputs), zero_layer(l2.inputs, l2.outputs)};
  g.loss = -std::log(fp.probs[target]);

  // Softmax + cross-entropy: dL/dlogit = p - onehot(y).
  Distribution d_logits = fp.probs;
  d_logits[target] -= 1.0;

  std::vector<double> d_hidden(l1.outputs, 0.0);
  for (std::size_t k = 0; k < l2.outputs; ++k) {
    g.layers[1].biases[k] = d_logits[k];
    for (std::size_t j = 0; j < l2.inputs; ++j) {
      g.layers[1].w(k, j) = d_logits[k] * fp.hidden[j];
      d_hidden[j] += l2.w(k, j) * d_logits[k];
    }
  }
  for (std::size_t j = 0; j < l1.outputs; ++j) {
    const double d_pre = d_hidden[j] * (1.0 - fp.hidden[j] * fp.hidden[j]);
    g.layers[0].biases[j] = d_pre;
    for (std::size_t i = 0; i < l1.inputs; ++i) g.layers[0].w(j, i) = d_pre * x[i];
  }
  return g;
}

TrainingResult train(MlpModel model, const Dataset& dataset, const TrainingConfig& config) {
  if (dataset.empty()) throw InputError("training dataset is empty");
  if (!(config.learning_rate > 0.0) || config.epochs < 0 || config.batch_size < 1) {
    throw InputError("invalid training config");
  }
  for (const auto& s : dataset) {
    if (s.features.values.size() != model.layers[0].inputs) {
      throw InputError("dataset feature length " + std::to_string(s.features.values.size()) +
                       " does not match model input " + std::to_string(model.layers[0].inputs));
    }
  }

  TrainingResult result;
  Rng rng(config.seed);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  const auto batch = static_cast<std::size_t>(config.batch_size);

  for (std::int64_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      std::array<DenseLayer, 2> acc = {zero_layer(model.layers[0].inputs, model.layers[0].outputs),
                                       zero_layer(model.layers[1].inputs, model.layers[1].outputs)};
      for (std::size_t b = start; b < end; ++b) {
        const LabeledSample& s = dataset[order[b]];
        MlpGradient g = mlp_backprop(model, s.features.values, s.label);
        epoch_loss += g.loss;
        for (std::size_t l = 0; l < 2; ++l) {
          for (std::size_t k = 0; k < acc[l].weights.size(); ++k) acc[l].weights[k] += g.layers[l].weights[k];
          for (std::size_t k = 0; k < acc[l].biases.size(); ++k) acc[l].biases[k] += g.layers[l].biases[k];
        }
      }
      const double step = config.learning_rate / static_cast<double>(end - start);
      for (std::size_t l = 0; l < 2; ++l) {
        for (std::size_t k = 0; k < acc[l].weights.size(); ++k) model.layers[l].weights[k] -= step * acc[l].weights[k];
        for (std::size_t k = 0; k < acc[l].biases.size(); ++k) model.layers[l].biases[k] -= step * acc[l].biases[k];
      }
    }
    result.epoch_loss.push_back(epoch_loss / static_cast<double>(dataset.size()));
  }
  result.model = std::move(model);
  return result;
}

double accuracy(const MlpModel& model, const Dataset& dataset) {
  if (dataset.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& s : dataset) hits += argmax(mlp_forward(model, s.features)) == s.label ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(dataset.size());
}

EmotionLabel argmax(const Distribution& dist) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < dist.size(); ++k) {
    if (dist[k] > dist[best]) best = k;
  }
  return kAllEmotions[best];
}

double l1_distance(const Distribution& a, const Distribution& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += std::abs(a[k] - b[k]);
  return s;
}

Distribution uniform_distribution() {
  Distribution d;
  d.fill(1.0 / static_cast<double>(kEmotionCount));
  return d;
}

EmotionAssessment assess(const Distribution& dist, const std::optional<Distribution>& baseline) {
  EmotionAssessment a;
  a.distribution = dist;
  a.top = argmax(dist);
  a.confidence = dist[static_cast<std::size_t>(a.top)];
  a.baseline_deviation = l1_distance(dist, baseline.value_or(uniform_distribution()));
  return a;
}

std::optional<EmotionAssessment> predict_event(const MlpModel& face_model,
                                               const MlpModel& voice_model,
                                               const BehaviorEvent& event,
                                               const Baselines& baselines) {
  std::optional<EmotionAssessment> out;
  if (const auto* face = std::get_if<FaceFrame>(&event.payload)) {
    const auto features = extract_face_features(preprocess_face(*face));
    out = assess(mlp_forward(face_model, features), baselines.face);
    out->channel = FeatureKind::Face;
  } else if (const auto* voice = std::get_if<VoiceFrame>(&event.payload)) {
    const auto features = preprocess_voice(*voice);
    out = assess(mlp_forward(voice_model, features), baselines.voice);
    out->channel = FeatureKind::Voice;
  } else {
    return std::nullopt;
  }
  out->ts = event.ts;
  out->child = event.child;
  return out;
}

std::string serialize_model(const MlpModel& model) {
  Json j;
  j["format"] = "smarttoy-mlp";
  j["version"] = kModelFormatVersion;
  const auto sizes = model.layer_sizes();
  j["layer_sizes"] = {sizes[0], sizes[1], sizes[2]};
  j["seed"] = model.seed;
  j["layers"] = Json::array({layer_json(model.layers[0]), layer_json(model.layers[1])});
  return j.dump(1) + "\n";
}

MlpModel deserialize_model(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("model file: ") + e.what());
  }
  if (!j.is_object() || j.value("format", std::string{}) != "smarttoy-mlp") {
    throw InputError("model file: not a smarttoy-mlp model");
  }
  if (!j.contains("version") || !j["version"].is_number_integer() ||
      j["version"].get<int>() != kModelFormatVersion) {
    throw InputError("model file: unsupported format version");
  }
  if (!j.contains("layers") || !j["layers"].is_array() || j["layers"].size() != 2) {
    throw InputError("model file: expected two layers");
  }
  MlpModel m;
  if (!j.contains("seed") || !j["seed"].is_number_unsigned()) throw InputError("model file: missing seed");
  m.seed = j["seed"].get<std::uint64_t>();
  for (std::size_t l = 0; l < 2; ++l) {
    const Json& lj = j["layers"][l];
    if (!lj.is_object()) throw InputError("model file: layer is not an object");
    m.layers[l].inputs = read_size(lj, "inputs");
    m.layers[l].outputs = read_size(lj, "outputs");
    m.layers[l].weights = read_reals(lj, "weights");
    m.layers[l].biases = read_reals(lj, "biases");
  }
  if (auto problem = m.check()) throw InputError("model file: " + *problem);
  const auto sizes = m.layer_sizes();
  const Json& ls = j.value("layer_sizes", Json::array());
  if (ls != Json({sizes[0], sizes[1], sizes[2]})) throw InputError("model file: layer_sizes mismatch");
  return m;
}

}  // namespace smarttoy
