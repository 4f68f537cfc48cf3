#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "smarttoy/event_model.hpp"
#include "smarttoy/modulation.hpp"
#include "smarttoy/synthetic.hpp"

namespace smarttoy {

struct PatternInjection {
  PatternKind kind = PatternKind::HeadHit;
  std::vector<std::int64_t> offsets_ms;  // relative to the segment start
};

struct TimedScopeChange {
  std::int64_t offset_ms = 0;
  ScopeChange change;
};

struct TimedModuleDone {
  std::int64_t offset_ms = 0;
  ModuleDone done;
};

struct ScenarioSegment {
  std::int64_t duration_ms = 0;
  EmotionLabel true_emotion = EmotionLabel::Neutral;
  ToneId tone_preference = ToneId::male();
  double face_rate_hz = 0.0;
  double voice_rate_hz = 0.0;
  double gait_rate_hz = 0.0;
  double feedback_rate_hz = 0.0;
  std::vector<PatternInjection> pattern_injections;
  std::vector<TimedScopeChange> scope_changes;
  std::vector<TimedModuleDone> module_done_script;
};

/// Scenario file (JSON):
///
///   {"seed": 7, "child": "c1", "start_tone": "male",
///    "segments": [{"duration_ms": 20000, "true_emotion": "happy",
///      "tone_preference": "female", "face_rate_hz": 2, "voice_rate_hz": 1,
///      "gait_rate_hz": 0.5, "feedback_rate_hz": 1,
///      "pattern_injections": [{"kind": "head_hit", "offsets_ms": [0, 4000]}],
///      "scope_changes": [{"offset_ms": 0, "scope": "ChildBehaviour",
///                         "qualifier": null, "active": true}],
///      "module_done_script": [{"offset_ms": 1500, "module": "MaleVoice",
///                              "args": ["MV", "FV"], "action": "Submit"}]}]}
///
/// Segments are back to back; offsets are relative to their segment start.
struct Scenario {
  std::uint64_t seed = 0;
  ChildId child;
  ToneId start_tone = ToneId::male();
  std::vector<ScenarioSegment> segments;

  std::int64_t duration_ms() const;
  /// Segment covering `ts`; the last segment for ts at or past the end.
  const ScenarioSegment& segment_at(Timestamp ts) const;
  std::optional<std::string> check() const;
};

Scenario parse_scenario(std::string_view json_text);
Scenario load_scenario(const std::filesystem::path& path);
std::string encode_scenario(const Scenario& scenario);

enum class FeedbackLoop : std::uint8_t { Closed, Open };

/// Produces a scenario's events in timestamp order. Everything except the
/// feedback affect is drawn up front from the scenario seed; feedback is
/// completed at emission time from the tone the toy is using then:
/// affect = +0.6 on the preferred tone, -0.6 otherwise, plus uniform noise
/// in [-0.1, 0.1].
class StreamGenerator {
 public:
  StreamGenerator(const Scenario& scenario, const SyntheticProfiles& profiles);

  bool done() const { return next_ >= slots_.size(); }
  std::size_t size() const { return slots_.size(); }
  BehaviorEvent next(const ToneId& current_tone);

 private:
  struct Slot {
    std::int64_t ts = 0;
    int rank = 0;  // tie-break for equal timestamps
    std::size_t seq = 0;
    std::optional<EventPayload> payload;  // empty for feedback slots
    ToneId preference;
    double noise = 0.0;
  };

  ChildId child_;
  std::vector<Slot> slots_;
  std::size_t next_ = 0;
};

/// Closed loop tracks the tone with an autonomous controller built from
/// `controller`; open loop always answers the scenario's start tone.
std::vector<BehaviorEvent> generate_stream(const Scenario& scenario, const SyntheticProfiles& profiles,
                                           const ControllerConfig& controller = {},
                                           FeedbackLoop loop = FeedbackLoop::Closed);

}  // namespace smarttoy
