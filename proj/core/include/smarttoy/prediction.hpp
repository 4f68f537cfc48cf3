#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "smarttoy/event_model.hpp"

namespace smarttoy {

inline constexpr std::size_t kFaceFeatureCount = 17;
inline constexpr std::size_t kVoiceFeatureCount = 27;

/// Probability per EmotionLabel, in declaration order.
using Distribution = std::array<double, kEmotionCount>;

enum class FeatureKind : std::uint8_t { Face, Voice };

std::string_view to_string(FeatureKind kind);
std::optional<FeatureKind> parse_feature_kind(std::string_view name);

struct FeatureVector {
  FeatureKind kind = FeatureKind::Face;
  std::vector<double> values;

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/// Raised when eye landmarks coincide and no scale can be recovered.
class DegenerateInputError : public InputError {
 public:
  using InputError::InputError;
};

// ---------------------------------------------------------------------------
// Pre-processing and feature extraction
// ---------------------------------------------------------------------------

/// Landmarks translated to a zero centroid and scaled to unit inter-ocular
/// distance (eye centres are the means of points 36-41 and 42-47, 0-based).
/// Rotation is left untouched: head tilt carries affect.
std::vector<Point2> preprocess_face(const FaceFrame& frame);

/// Face geometry feature table (0-based landmark indices, y grows downward,
/// "elevation" is measured upward). d(a,b) is Euclidean distance and
/// ratio(a,b) = a / (a + b), or 0.5 when a + b == 0.
///
///   0  mouth width            d(48,54)
///   1  mouth height           d(51,57)
///   2  corner elevation       (y51 + y57)/2 - (y48 + y54)/2
///   3  left eye openness      (d(37,41) + d(38,40)) / 2
///   4  right eye openness     (d(43,47) + d(44,46)) / 2
///   5  left brow height       mean_y(36..41) - mean_y(17..21)
///   6  right brow height      mean_y(42..47) - mean_y(22..26)
///   7  left brow slope        atan2(y17 - y21, |x21 - x17|)
///   8  right brow slope       atan2(y26 - y22, |x26 - x22|)
///   9  nose to chin           d(33,8)
///  10  jaw width              d(0,16)
///  11  ratio(mouth width, jaw width)
///  12  ratio(mouth height, mouth width)
///  13  ratio(left eye openness, |left brow height|)
///  14  ratio(right eye openness, |right brow height|)
///  15  ratio(nose to chin, d(27,8))
///  16  ratio(mouth height, nose to chin)
FeatureVector extract_face_features(std::span<const Point2> normalized);

/// log(1 + band) z-scored across the 26 bands (all zeros when the bands have
/// no variance), followed by pitch_hz / 500 clamped to [0, 1].
FeatureVector preprocess_voice(const VoiceFrame& frame);

// ---------------------------------------------------------------------------
// Classifier
// ---------------------------------------------------------------------------

/// Fully connected layer; weights are row-major, outputs x inputs.
struct DenseLayer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<double> weights;
  std::vector<double> biases;

  double& w(std::size_t row, std::size_t col) { return weights[row * inputs + col]; }
  double w(std::size_t row, std::size_t col) const { return weights[row * inputs + col]; }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// One tanh hidden layer followed by a softmax output layer.
struct MlpModel {
  std::array<DenseLayer, 2> layers;
  std::uint64_t seed = 0;

  /// All parameters zero.
  static MlpModel zeros(std::size_t inputs, std::size_t hidden, std::size_t outputs = kEmotionCount);

  /// Xavier-uniform weights and zero biases drawn from `seed`.
  static MlpModel initialized(std::size_t inputs, std::size_t hidden, std::uint64_t seed,
                              std::size_t outputs = kEmotionCount);

  std::array<std::size_t, 3> layer_sizes() const {
    return {layers[0].inputs, layers[0].outputs, layers[1].outputs};
  }

  /// Nullopt when dimensions are consistent, the output has 6 classes and
  /// every parameter is finite.
  std::optional<std::string> check() const;

  friend bool operator==(const MlpModel&, const MlpModel&) = default;
};

/// Same shape as the model; holds dLoss/dParameter.
struct MlpGradient {
  std::array<DenseLayer, 2> layers;
  double loss = 0.0;

  friend bool operator==(const MlpGradient&, const MlpGradient&) = default;
};

/// Throws InputError on a dimension mismatch.
Distribution mlp_forward(const MlpModel& model, std::span<const double> x);
Distribution mlp_forward(const MlpModel& model, const FeatureVector& x);

/// Analytic gradient of -log p(y | x).
MlpGradient mlp_backprop(const MlpModel& model, std::span<const double> x, EmotionLabel y);

double cross_entropy(const MlpModel& model, std::span<const double> x, EmotionLabel y);

struct LabeledSample {
  FeatureVector features;
  EmotionLabel label = EmotionLabel::Neutral;

  friend bool operator==(const LabeledSample&, const LabeledSample&) = default;
};

using Dataset = std::vector<LabeledSample>;

struct TrainingConfig {
  double learning_rate = 0.05;
  std::int64_t epochs = 200;
  std::int64_t batch_size = 16;
  std::uint64_t seed = 1;
  std::size_t hidden = 16;  // width used when a fresh model is created
};

struct TrainingResult {
  MlpModel model;
  std::vector<double> epoch_loss;  // mean per-example loss seen during each epoch
};

/// Mini-batch gradient descent with seeded shuffling. Throws InputError on an
/// empty dataset or inconsistent dimensions.
TrainingResult train(MlpModel model, const Dataset& dataset, const TrainingConfig& config);

/// Fraction of samples whose argmax equals the label.
double accuracy(const MlpModel& model, const Dataset& dataset);

// ---------------------------------------------------------------------------
// Assessment
// ---------------------------------------------------------------------------

struct EmotionAssessment {
  Timestamp ts;
  ChildId child;
  FeatureKind channel = FeatureKind::Face;
  Distribution distribution{};
  EmotionLabel top = EmotionLabel::Happy;
  double confidence = 0.0;
  double baseline_deviation = 0.0;  // L1 distance to the baseline

  friend bool operator==(const EmotionAssessment&, const EmotionAssessment&) = default;
};

/// First label with the maximal probability.
EmotionLabel argmax(const Distribution& dist);

double l1_distance(const Distribution& a, const Distribution& b);

Distribution uniform_distribution();

/// Missing baseline compares against the uniform distribution.
EmotionAssessment assess(const Distribution& dist, const std::optional<Distribution>& baseline);

/// Per-channel stored baselines for one child.
struct Baselines {
  std::optional<Distribution> face;
  std::optional<Distribution> voice;
};

/// Face and voice frames are routed through their pipelines; any other
/// payload yields nullopt.
std::optional<EmotionAssessment> predict_event(const MlpModel& face_model,
                                               const MlpModel& voice_model,
                                               const BehaviorEvent& event,
                                               const Baselines& baselines);

// ---------------------------------------------------------------------------
// Model file
// ---------------------------------------------------------------------------

inline constexpr int kModelFormatVersion = 1;

/// Deterministic JSON text; doubles are written in shortest round-trip form.
std::string serialize_model(const MlpModel& model);

/// Throws InputError on malformed text, a version mismatch, or an invalid model.
MlpModel deserialize_model(std::string_view text);

}  // namespace smarttoy
