#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "smarttoy/error.hpp"

namespace smarttoy {

inline constexpr std::size_t kLandmarkCount = 68;
inline constexpr std::size_t kVoiceBandCount = 26;

/// Simulated time in integer milliseconds. No wall clock is ever consulted.
struct Timestamp {
  std::int64_t millis = 0;

  friend auto operator<=>(const Timestamp&, const Timestamp&) = default;
};

struct ChildId {
  std::string id;

  friend auto operator<=>(const ChildId&, const ChildId&) = default;
};

enum class EmotionLabel : std::uint8_t { Happy, Sad, Angry, Fear, Surprise, Neutral };

inline constexpr std::size_t kEmotionCount = 6;
inline constexpr std::array<EmotionLabel, kEmotionCount> kAllEmotions = {
    EmotionLabel::Happy, EmotionLabel::Sad,      EmotionLabel::Angry,
    EmotionLabel::Fear,  EmotionLabel::Surprise, EmotionLabel::Neutral};

std::string_view to_string(EmotionLabel label);
std::optional<EmotionLabel> parse_emotion(std::string_view name);

/// Speaking tone of the toy. Familiar tones name a voice from the registry.
struct ToneId {
  enum class Kind : std::uint8_t { Male, Female, Familiar };

  Kind kind = Kind::Male;
  std::string name;  // only meaningful for Familiar

  static ToneId male() { return {Kind::Male, {}}; }
  static ToneId female() { return {Kind::Female, {}}; }
  static ToneId familiar(std::string name) { return {Kind::Familiar, std::move(name)}; }

  friend bool operator==(const ToneId&, const ToneId&) = default;
};

/// "male", "female" or "familiar:<name>".
std::string to_string(const ToneId& tone);
std::optional<ToneId> parse_tone(std::string_view text);

enum class PatternKind : std::uint8_t { HeadHit, LegBeat, Scream, RunAway };

inline constexpr std::array<PatternKind, 4> kAllPatternKinds = {
    PatternKind::HeadHit, PatternKind::LegBeat, PatternKind::Scream, PatternKind::RunAway};

std::string_view to_string(PatternKind kind);
std::optional<PatternKind> parse_pattern_kind(std::string_view name);

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

/// 68 landmarks in normalized image coordinates (x right, y down).
struct FaceFrame {
  std::vector<Point2> landmarks;
  friend bool operator==(const FaceFrame&, const FaceFrame&) = default;
};

struct GaitFrame {
  double cadence = 0.0;  // steps per minute
  double tiptoe_score = 0.0;
  double speed = 0.0;  // m/s
  friend bool operator==(const GaitFrame&, const GaitFrame&) = default;
};

struct VoiceFrame {
  std::vector<double> band_energies;
  double rms = 0.0;
  double pitch_hz = 0.0;  // 0 = unvoiced
  friend bool operator==(const VoiceFrame&, const VoiceFrame&) = default;
};

struct ResponseFeedback {
  ToneId tone_used;
  double affect = 0.0;
  friend bool operator==(const ResponseFeedback&, const ResponseFeedback&) = default;
};

struct PatternEvent {
  PatternKind kind = PatternKind::HeadHit;
  friend bool operator==(const PatternEvent&, const PatternEvent&) = default;
};

/// A module reporting completion of an action; feeds policy done-clauses.
struct ModuleDone {
  std::string module;
  std::vector<std::string> args;
  std::string action;
  friend bool operator==(const ModuleDone&, const ModuleDone&) = default;
};

/// Activation or deactivation of a policy scope token.
struct ScopeChange {
  std::string scope;
  std::optional<std::string> qualifier;
  bool active = true;
  friend bool operator==(const ScopeChange&, const ScopeChange&) = default;
};

using EventPayload = std::variant<FaceFrame, GaitFrame, VoiceFrame, ResponseFeedback,
                                  PatternEvent, ModuleDone, ScopeChange>;

struct BehaviorEvent {
  Timestamp ts;
  ChildId child;
  EventPayload payload;

  friend bool operator==(const BehaviorEvent&, const BehaviorEvent&) = default;
};

/// Tag written in the `type` field of the event log.
std::string_view payload_tag(const EventPayload& payload);

/// Returns nullopt when every field invariant holds, otherwise a description
/// naming the first failing field.
std::optional<std::string> validate_event(const BehaviorEvent& event);

/// Validates every event and checks per-child timestamps are non-decreasing.
std::optional<std::string> validate_stream(std::span<const BehaviorEvent> events);

/// One-line flat JSON record without the trailing newline.
std::string encode_event(const BehaviorEvent& event);

/// Throws EventParseError with the byte offset and the expected token.
BehaviorEvent decode_event(std::string_view line);

}  // namespace smarttoy
