#include "smarttoy/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace smarttoy {
namespace {

using Json = nlohmann::ordered_json;

constexpr double kFaceNoise = 0.003;
constexpr double kBandNoise = 0.15;  // log-normal sigma
constexpr double kPitchNoise = 12.0;

double number(const Json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number()) {
    throw InputError(std::string("profiles: missing number ") + key);
  }
  return j[key].get<double>();
}

template <typename Sampler>
Dataset make_dataset(std::size_t samples, std::size_t classes, std::uint64_t seed, Sampler sample) {
  if (classes == 0 || classes > kEmotionCount) throw InputError("classes must be in [1, 6]");
  Rng rng(seed);
  Dataset out;
  out.reserve(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    const EmotionLabel label = kAllEmotions[i % classes];
    out.push_back({sample(label, rng), label});
  }
  return out;
}

}  // namespace

SyntheticProfiles parse_profiles(std::string_view json_text) {
  Json doc;
  try {
    doc = Json::parse(json_text.begin(), json_text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("profiles: ") + e.what());
  }
  if (doc.value("format", std::string{}) != "smarttoy-profiles" || doc.value("version", 0) != 1) {
    throw InputError("profiles: unsupported format");
  }
  SyntheticProfiles profiles;
  for (EmotionLabel label : kAllEmotions) {
    const std::string name(to_string(label));
    if (!doc["emotions"].contains(name)) throw InputError("profiles: missing emotion " + name);
    const Json& e = doc["emotions"][name];
    EmotionProfile& p = profiles.emotions[static_cast<std::size_t>(label)];
    for (const auto& pt : e.at("face")) p.face.push_back({pt.at(0).get<double>(), pt.at(1).get<double>()});
    if (p.face.size() != kLandmarkCount) throw InputError("profiles: face template for " + name + " needs 68 points");
    p.voice.bands = e.at("voice").at("bands").get<std::vector<double>>();
    if (p.voice.bands.size() != kVoiceBandCount) throw InputError("profiles: voice bands for " + name + " need 26 values");
    p.voice.pitch_hz = number(e["voice"], "pitch_hz");
    p.voice.rms = number(e["voice"], "rms");
    p.gait = {number(e["gait"], "cadence"), number(e["gait"], "tiptoe"), number(e["gait"], "speed")};
  }
  return profiles;
}

SyntheticProfiles load_profiles(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open profiles file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_profiles(ss.str());
}

FaceFrame sample_face(const SyntheticProfiles& profiles, EmotionLabel label, Rng& rng) {
  const double scale = rng.uniform(0.85, 1.15);
  const double dx = rng.uniform(-0.05, 0.05);
  const double dy = rng.uniform(-0.05, 0.05);
  FaceFrame f;
  f.landmarks.reserve(kLandmarkCount);
  for (const Point2& p : profiles[label].face) {
    const double x = 0.5 + scale * (p.x - 0.5) + dx + rng.normal(0.0, kFaceNoise);
    const double y = 0.5 + scale * (p.y - 0.5) + dy + rng.normal(0.0, kFaceNoise);
    f.landmarks.push_back({std::clamp(x, 0.0, 1.0), std::clamp(y, 0.0, 1.0)});
  }
  return f;
}

VoiceFrame sample_voice(const SyntheticProfiles& profiles, EmotionLabel label, Rng& rng) {
  const VoiceProfile& vp = profiles[label].voice;
  const double gain = rng.uniform(0.5, 2.0);
  VoiceFrame v;
  v.band_energies.reserve(kVoiceBandCount);
  for (double b : vp.bands) v.band_energies.push_back(gain * b * std::exp(rng.normal(0.0, kBandNoise)));
  v.rms = std::max(0.0, gain * vp.rms * std::exp(rng.normal(0.0, 0.1)));
  v.pitch_hz = std::max(0.0, rng.normal(vp.pitch_hz, kPitchNoise));
  return v;
}

GaitFrame sample_gait(const SyntheticProfiles& profiles, EmotionLabel label, Rng& rng) {
  const GaitProfile& gp = profiles[label].gait;
  return GaitFrame{std::max(0.0, rng.normal(gp.cadence, 5.0)),
                   std::clamp(rng.normal(gp.tiptoe, 0.05), 0.0, 1.0),
                   std::max(0.0, rng.normal(gp.speed, 0.08))};
}

Dataset make_face_dataset(const SyntheticProfiles& profiles, std::size_t samples,
                          std::size_t classes, std::uint64_t seed) {
  return make_dataset(samples, classes, seed, [&](EmotionLabel label, Rng& rng) {
    return extract_face_features(preprocess_face(sample_face(profiles, label, rng)));
  });
}

Dataset make_voice_dataset(const SyntheticProfiles& profiles, std::size_t samples,
                           std::size_t classes, std::uint64_t seed) {
  return make_dataset(samples, classes, seed, [&](EmotionLabel label, Rng& rng) {
    return preprocess_voice(sample_voice(profiles, label, rng));
  });
}

DatasetSplit split_dataset(const Dataset& dataset, double holdout, std::uint64_t seed) {
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  const auto test_count = static_cast<std::size_t>(std::llround(holdout * static_cast<double>(dataset.size())));
  DatasetSplit split;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i + test_count < order.size() ? split.train : split.test).push_back(dataset[order[i]]);
  }
  return split;
}

std::string encode_dataset(const Dataset& dataset) {
  std::string out;
  for (const auto& s : dataset) {
    Json j;
    j["kind"] = std::string(to_string(s.features.kind));
    j["label"] = std::string(to_string(s.label));
    j["values"] = s.features.values;
    out += j.dump();
    out += '\n';
  }
  return out;
}

Dataset decode_dataset(std::string_view text) {
  Dataset out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    const std::string where = "dataset line " + std::to_string(line_no) + ": ";
    Json j;
    try {
      j = Json::parse(line.begin(), line.end());
    } catch (const nlohmann::json::parse_error& e) {
      throw InputError(where + e.what());
    }
    if (!j.is_object()) throw InputError(where + "expected an object");
    auto kind = parse_feature_kind(j.value("kind", std::string{}));
    auto label = parse_emotion(j.value("label", std::string{}));
    if (!kind || !label || !j.contains("values") || !j["values"].is_array()) {
      throw InputError(where + "expected kind, label and values");
    }
    LabeledSample s;
    s.features.kind = *kind;
    s.label = *label;
    for (const auto& v : j["values"]) {
      if (!v.is_number()) throw InputError(where + "non-numeric value");
      s.features.values.push_back(v.get<double>());
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace smarttoy
