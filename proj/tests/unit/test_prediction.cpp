#include <cmath>
#include <numeric>

#include "doctest.h"
#include "generators.hpp"
#include "smarttoy/prediction.hpp"
#include "smarttoy/synthetic.hpp"

using namespace smarttoy;

namespace {

const SyntheticProfiles& profiles() {
  static const SyntheticProfiles p = load_profiles(testsupport::data_dir() / "templates" / "profiles.json");
  return p;
}

FaceFrame template_face(EmotionLabel label) { return FaceFrame{profiles()[label].face}; }

double sum(const Distribution& d) { return std::accumulate(d.begin(), d.end(), 0.0); }

std::vector<double> random_input(Rng& rng, std::size_t n) {
  std::vector<double> x(n);
  for (auto& v : x) v = rng.uniform(-2.0, 2.0);
  return x;
}

MlpModel random_model(Rng& rng, std::size_t in, std::size_t hidden) {
  MlpModel m = MlpModel::initialized(in, hidden, rng.next_u64());
  for (auto& layer : m.layers) {
    for (auto& b : layer.biases) b = rng.uniform(-0.5, 0.5);
  }
  return m;
}

}  // namespace

TEST_SUITE("prediction") {

TEST_CASE("preprocessed landmarks have zero centroid and unit eye distance") {
  const auto pts = preprocess_face(template_face(EmotionLabel::Sad));
  double cx = 0, cy = 0;
  for (const auto& p : pts) {
    cx += p.x;
    cy += p.y;
  }
  CHECK(std::abs(cx / 68) < 1e-12);
  CHECK(std::abs(cy / 68) < 1e-12);
  Point2 l{}, r{};
  for (int i = 36; i < 42; ++i) {
    l.x += pts[i].x / 6;
    l.y += pts[i].y / 6;
    r.x += pts[i + 6].x / 6;
    r.y += pts[i + 6].y / 6;
  }
  CHECK(std::hypot(l.x - r.x, l.y - r.y) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("preprocessing is idempotent on canonical input") {
  const auto once = preprocess_face(template_face(EmotionLabel::Happy));
  // Canonical coordinates leave [0,1]; preprocess itself does not validate.
  const auto twice = preprocess_face(FaceFrame{once});
  for (std::size_t i = 0; i < once.size(); ++i) {
    CHECK(std::abs(once[i].x - twice[i].x) < 1e-12);
    CHECK(std::abs(once[i].y - twice[i].y) < 1e-12);
  }
}

TEST_CASE("preprocessing is invariant under translation and uniform scale") {
  Rng rng(3);
  const FaceFrame base = template_face(EmotionLabel::Angry);
  const auto ref = preprocess_face(base);
  for (int t = 0; t < 100; ++t) {
    const double s = rng.uniform(0.2, 1.0), dx = rng.uniform(0.0, 1.0 - s), dy = rng.uniform(0.0, 1.0 - s);
    FaceFrame moved;
    for (const auto& p : base.landmarks) moved.landmarks.push_back({p.x * s + dx, p.y * s + dy});
    const auto out = preprocess_face(moved);
    for (std::size_t i = 0; i < out.size(); ++i) {
      REQUIRE(std::abs(out[i].x - ref[i].x) < 1e-9);
      REQUIRE(std::abs(out[i].y - ref[i].y) < 1e-9);
    }
  }
}

TEST_CASE("coincident eyes are degenerate") {
  FaceFrame f{std::vector<Point2>(68, Point2{0.5, 0.5})};
  CHECK_THROWS_AS(preprocess_face(f), DegenerateInputError);
}

TEST_CASE("symmetric neutral face has equal paired features") {
  const FeatureVector f = extract_face_features(preprocess_face(template_face(EmotionLabel::Neutral)));
  REQUIRE(f.values.size() == kFaceFeatureCount);
  CHECK(f.kind == FeatureKind::Face);
  CHECK(std::abs(f.values[3] - f.values[4]) < 1e-9);
  CHECK(std::abs(f.values[5] - f.values[6]) < 1e-9);
  CHECK(std::abs(f.values[7] - f.values[8]) < 1e-9);
  CHECK(std::abs(f.values[13] - f.values[14]) < 1e-9);
}

TEST_CASE("raised mouth corners increase corner elevation") {
  FaceFrame f = template_face(EmotionLabel::Neutral);
  const double base = extract_face_features(preprocess_face(f)).values[2];
  f.landmarks[48].y -= 0.1;
  f.landmarks[54].y -= 0.1;
  CHECK(extract_face_features(preprocess_face(f)).values[2] > base);
}

TEST_CASE("features are finite over random frames") {
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const auto label = kAllEmotions[rng.below(kEmotionCount)];
    FaceFrame f;
    if (rng.below(4) == 0) {
      for (int k = 0; k < 68; ++k) f.landmarks.push_back({rng.uniform01(), rng.uniform01()});
    } else {
      f = sample_face(profiles(), label, rng);
    }
    const FeatureVector v = extract_face_features(preprocess_face(f));
    for (double x : v.values) REQUIRE(std::isfinite(x));
  }
}

TEST_CASE("voice preprocessing") {
  VoiceFrame zero{std::vector<double>(26, 0.0), 0.0, 250.0};
  const FeatureVector z = preprocess_voice(zero);
  REQUIRE(z.values.size() == kVoiceFeatureCount);
  for (int i = 0; i < 26; ++i) CHECK(z.values[i] == 0.0);
  CHECK(z.values[26] == doctest::Approx(0.5));
  CHECK(preprocess_voice({std::vector<double>(26, 3.0), 0.0, 9000.0}).values[26] == 1.0);

  Rng rng(4);
  VoiceFrame v{std::vector<double>(26), 0.1, 120.0};
  for (auto& b : v.band_energies) b = rng.uniform(0.0, 50.0);
  VoiceFrame loud = v;
  for (auto& b : loud.band_energies) b *= 10.0;
  for (const VoiceFrame* frame : {&v, &loud}) {
    std::vector<double> logs;
    for (double b : frame->band_energies) logs.push_back(std::log1p(b));
    const double mean = std::accumulate(logs.begin(), logs.end(), 0.0) / 26.0;
    double var = 0;
    for (double l : logs) var += (l - mean) * (l - mean);
    const double sd = std::sqrt(var / 26.0);
    const FeatureVector out = preprocess_voice(*frame);
    for (int i = 0; i < 26; ++i) CHECK(out.values[i] == doctest::Approx((logs[i] - mean) / sd).epsilon(1e-12));
  }
}

TEST_CASE("zero model gives the uniform distribution") {
  const MlpModel m = MlpModel::zeros(17, 16);
  std::vector<double> x(17, 0.3);
  for (double p : mlp_forward(m, x)) CHECK(p == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
}

TEST_CASE("softmax is shift invariant in the output biases") {
  Rng rng(8);
  MlpModel m = random_model(rng, 5, 8);
  const auto x = random_input(rng, 5);
  const Distribution a = mlp_forward(m, x);
  for (auto& b : m.layers[1].biases) b += 3.7;
  const Distribution b = mlp_forward(m, x);
  for (std::size_t k = 0; k < 6; ++k) CHECK(std::abs(a[k] - b[k]) < 1e-9);
}

TEST_CASE("hand-set 2-2-6 model matches a hand computation") {
  MlpModel m = MlpModel::zeros(2, 2);
  m.layers[0].weights = {0.5, -0.25, 0.1, 0.3};
  m.layers[0].biases = {0.05, -0.1};
  m.layers[1].weights = {1, 0, 0, 1, -1, 0.5, 0.25, -0.75, 0.3, 0.3, -0.4, 0.9};
  m.layers[1].biases = {0, 0.1, -0.1, 0.2, 0, -0.2};
  const std::vector<double> x = {1.0, -2.0};
  // h = tanh(W1 x + b1) = (0.781806357608774, -0.537049566998035)
  const Distribution want = {0.32067589856212869, 0.094781574321359016, 0.046446144220198833,
                             0.32598890867542712, 0.15791416577978423,  0.054193308441102053};
  const Distribution got = mlp_forward(m, x);
  for (std::size_t k = 0; k < 6; ++k) CHECK(std::abs(got[k] - want[k]) < 1e-12);
}

TEST_CASE("forward rejects a dimension mismatch") {
  const MlpModel m = MlpModel::zeros(5, 4);
  CHECK_THROWS_AS(mlp_forward(m, std::vector<double>(4, 0.0)), InputError);
  CHECK_THROWS_AS(mlp_backprop(m, std::vector<double>(6, 0.0), EmotionLabel::Sad), InputError);
}

TEST_CASE("backprop matches central differences") {
  Rng rng(17);
  for (auto [in, hid] : {std::pair<std::size_t, std::size_t>{5, 8}, {17, 16}}) {
    for (int trial = 0; trial < 5; ++trial) {
      MlpModel m = random_model(rng, in, hid);
      const auto x = random_input(rng, in);
      const auto y = kAllEmotions[rng.below(6)];
      const MlpGradient g = mlp_backprop(m, x, y);
      CHECK(g.loss == doctest::Approx(cross_entropy(m, x, y)).epsilon(1e-14));
      double worst = 0;
      for (std::size_t l = 0; l < 2; ++l) {
        auto check_param = [&](double& p, double analytic) {
          const double keep = p;
          p = keep + 1e-5;
          const double up = cross_entropy(m, x, y);
          p = keep - 1e-5;
          const double down = cross_entropy(m, x, y);
          p = keep;
          const double numeric = (up - down) / 2e-5;
          worst = std::max(worst, std::abs(analytic - numeric) /
                                      std::max({std::abs(analytic), std::abs(numeric), 1e-8}));
        };
        for (std::size_t i = 0; i < m.layers[l].weights.size(); ++i) check_param(m.layers[l].weights[i], g.layers[l].weights[i]);
        for (std::size_t i = 0; i < m.layers[l].biases.size(); ++i) check_param(m.layers[l].biases[i], g.layers[l].biases[i]);
      }
      CHECK(worst < 1e-4);
    }
  }
}

TEST_CASE("output-bias gradient at the uniform point") {
  const MlpModel m = MlpModel::zeros(3, 4);
  const MlpGradient g = mlp_backprop(m, std::vector<double>{0.1, 0.2, 0.3}, EmotionLabel::Fear);
  for (std::size_t k = 0; k < 6; ++k) {
    const double want = 1.0 / 6.0 - (k == static_cast<std::size_t>(EmotionLabel::Fear) ? 1.0 : 0.0);
    CHECK(g.layers[1].biases[k] == doctest::Approx(want).epsilon(1e-14));
  }
  CHECK(g.loss == doctest::Approx(std::log(6.0)));
}

TEST_CASE("the gradient is defined per example") {
  Rng rng(21);
  const MlpModel m = random_model(rng, 5, 8);
  const auto x = random_input(rng, 5);
  CHECK(mlp_backprop(m, x, EmotionLabel::Happy) == mlp_backprop(m, x, EmotionLabel::Happy));
}

TEST_CASE("training basics") {
  const Dataset data = make_face_dataset(profiles(), 120, 5, 1);
  const MlpModel init = MlpModel::initialized(17, 16, 5);
  TrainingConfig cfg;
  cfg.epochs = 0;
  const TrainingResult none = train(init, data, cfg);
  CHECK(none.model == init);
  CHECK(none.epoch_loss.empty());

  cfg.epochs = 30;
  const TrainingResult a = train(init, data, cfg);
  const TrainingResult b = train(init, data, cfg);
  CHECK(a.model == b.model);
  CHECK(a.epoch_loss == b.epoch_loss);
  REQUIRE(a.epoch_loss.size() == 30);
  for (double l : a.epoch_loss) CHECK(std::isfinite(l));
  CHECK(a.epoch_loss.back() <= a.epoch_loss.front());
  CHECK_FALSE(a.model.check().has_value());

  CHECK_THROWS_AS(train(init, Dataset{}, cfg), InputError);
  cfg.learning_rate = -1;
  CHECK_THROWS_AS(train(init, data, cfg), InputError);
}

TEST_CASE("assessment") {
  Distribution happy{}, sad{};
  happy[0] = 1;
  sad[1] = 1;
  CHECK(assess(happy, happy).baseline_deviation == 0.0);
  CHECK(assess(happy, sad).baseline_deviation == doctest::Approx(2.0));
  const auto a = assess(happy, std::nullopt);
  CHECK(a.top == EmotionLabel::Happy);
  CHECK(a.confidence == 1.0);
  CHECK(a.baseline_deviation == doctest::Approx(2.0 * 5.0 / 6.0));
  Distribution tie = {0.1, 0.3, 0.3, 0.1, 0.1, 0.1};
  CHECK(argmax(tie) == EmotionLabel::Sad);

  Rng rng(6);
  for (int i = 0; i < 200; ++i) {
    Distribution p{}, q{};
    for (auto& v : p) v = rng.uniform01();
    for (auto& v : q) v = rng.uniform01();
    const double sp = sum(p), sq = sum(q);
    double want = 0;
    for (std::size_t k = 0; k < 6; ++k) {
      p[k] /= sp;
      q[k] /= sq;
    }
    for (std::size_t k = 0; k < 6; ++k) want += std::abs(p[k] - q[k]);
    CHECK(assess(p, q).baseline_deviation == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("predict_event routes by payload") {
  Rng rng(12);
  const MlpModel face = MlpModel::initialized(17, 16, 1), voice = MlpModel::initialized(27, 16, 2);
  BehaviorEvent f{{10}, {"c1"}, sample_face(profiles(), EmotionLabel::Happy, rng)};
  auto a = predict_event(face, voice, f, {});
  REQUIRE(a.has_value());
  CHECK(a->channel == FeatureKind::Face);
  CHECK(a->ts.millis == 10);
  CHECK(std::abs(sum(a->distribution) - 1.0) < 1e-9);
  CHECK(a->distribution == mlp_forward(face, extract_face_features(preprocess_face(std::get<FaceFrame>(f.payload)))));
  BehaviorEvent v{{11}, {"c1"}, sample_voice(profiles(), EmotionLabel::Sad, rng)};
  CHECK(predict_event(face, voice, v, {})->channel == FeatureKind::Voice);
  BehaviorEvent g{{12}, {"c1"}, sample_gait(profiles(), EmotionLabel::Sad, rng)};
  CHECK_FALSE(predict_event(face, voice, g, {}).has_value());
}

TEST_CASE("model text round-trips bit-exactly") {
  Rng rng(30);
  const MlpModel m = random_model(rng, 17, 16);
  const std::string text = serialize_model(m);
  const MlpModel back = deserialize_model(text);
  CHECK(back == m);
  CHECK(serialize_model(back) == text);
  std::string bad = text;
  bad.replace(bad.find("\"version\": 1"), 12, "\"version\": 2");
  CHECK_THROWS_AS(deserialize_model(bad), InputError);
  CHECK_THROWS_AS(deserialize_model(text.substr(0, text.size() / 2)), InputError);
  CHECK_THROWS_AS(deserialize_model(serialize_model(MlpModel::zeros(3, 2, 4))), InputError);
}

}
