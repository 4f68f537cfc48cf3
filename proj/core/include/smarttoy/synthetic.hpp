#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "smarttoy/event_model.hpp"
#include "smarttoy/prediction.hpp"
#include "smarttoy/rng.hpp"

namespace smarttoy {

/// Seed of the shipped 500-sample learnability dataset.
inline constexpr std::uint64_t kSyntheticDatasetSeed = 20'240'517;
inline constexpr std::size_t kSyntheticDatasetSize = 500;
inline constexpr std::size_t kSyntheticClusterCount = 5;

struct VoiceProfile {
  std::vector<double> bands;  // 26 mean band energies
  double pitch_hz = 0.0;
  double rms = 0.0;
};

struct GaitProfile {
  double cadence = 0.0;
  double tiptoe = 0.0;
  double speed = 0.0;
};

struct EmotionProfile {
  std::vector<Point2> face;  // 68-point template
  VoiceProfile voice;
  GaitProfile gait;
};

/// Per-emotion ground truth written by tools/gen_profiles.py.
struct SyntheticProfiles {
  std::array<EmotionProfile, kEmotionCount> emotions;

  const EmotionProfile& operator[](EmotionLabel label) const {
    return emotions[static_cast<std::size_t>(label)];
  }
};

SyntheticProfiles parse_profiles(std::string_view json_text);
SyntheticProfiles load_profiles(const std::filesystem::path& path);

/// Template under a random similarity transform plus per-coordinate noise,
/// clamped into [0, 1].
FaceFrame sample_face(const SyntheticProfiles& profiles, EmotionLabel label, Rng& rng);
/// Band energies with multiplicative noise, jittered pitch and rms.
VoiceFrame sample_voice(const SyntheticProfiles& profiles, EmotionLabel label, Rng& rng);
GaitFrame sample_gait(const SyntheticProfiles& profiles, EmotionLabel label, Rng& rng);

/// `samples` examples cycling through the first `classes` labels in
/// declaration order.
Dataset make_face_dataset(const SyntheticProfiles& profiles, std::size_t samples,
                          std::size_t classes, std::uint64_t seed);
Dataset make_voice_dataset(const SyntheticProfiles& profiles, std::size_t samples,
                           std::size_t classes, std::uint64_t seed);

/// Seeded shuffle, then the last `holdout` fraction becomes the test split.
struct DatasetSplit {
  Dataset train;
  Dataset test;
};
DatasetSplit split_dataset(const Dataset& dataset, double holdout, std::uint64_t seed);

/// One JSON object per line: {"kind":..,"label":..,"values":[..]}.
std::string encode_dataset(const Dataset& dataset);
Dataset decode_dataset(std::string_view text);

}  // namespace smarttoy
