#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "smarttoy/checker.hpp"
#include "smarttoy/event_model.hpp"
#include "smarttoy/prediction.hpp"

namespace smarttoy {

enum class Intent : std::uint8_t { Praise, Correction, Comfort, Prompt };

std::string_view to_string(Intent intent);
std::optional<Intent> parse_intent(std::string_view name);

/// Autonomous: k sub-threshold feedbacks switch the tone.
/// DirectiveGated: the switch also needs a VoiceModulation directive received
/// since the previous switch; whichever arrives last triggers it.
enum class SwitchMode : std::uint8_t { Autonomous, DirectiveGated };

inline constexpr std::string_view kVoiceModulationOutcome = "VoiceModulation";
inline constexpr std::string_view kCommunicationOutcome = "Communication";

struct ControllerConfig {
  std::int64_t switch_threshold = 3;  // k
  double affect_floor = -0.2;         // theta
  SwitchMode mode = SwitchMode::Autonomous;
  std::vector<ToneId> tone_order = {ToneId::male(), ToneId::female()};
};

struct ToneState {
  ToneId current;
  std::int64_t negative_streak = 0;
  std::vector<ToneId> tone_order;
  std::int64_t switch_threshold = 3;
  double affect_floor = -0.2;
  SwitchMode mode = SwitchMode::Autonomous;
  bool directive_pending = false;
  std::uint64_t utterance_count = 0;

  /// Throws InputError unless `start` is in the tone order, k >= 1 and
  /// theta lies in [-1, 1].
  static ToneState make(const ControllerConfig& config, ToneId start);

  friend bool operator==(const ToneState&, const ToneState&) = default;
};

struct ToneUpdate {
  ToneState state;
  std::optional<ToneId> switched_to;
};

/// Feedback for a tone other than the current one is ignored.
ToneUpdate on_feedback(ToneState state, const ResponseFeedback& feedback);

/// Only VoiceModulation directives matter, and only in DirectiveGated mode.
ToneUpdate on_directive(ToneState state, const AuthorizationDirective& directive);

/// Phrase lines per intent, loaded from `intent<TAB>text` lines.
class PhraseCatalog {
 public:
  /// Throws InputError on malformed lines or when an intent has no phrase.
  static PhraseCatalog parse(std::string_view text);
  static PhraseCatalog load(const std::filesystem::path& path);
  static PhraseCatalog builtin();
  static std::string_view builtin_source();

  const std::vector<std::string>& phrases(Intent intent) const;

 private:
  std::array<std::vector<std::string>, 4> phrases_;
};

struct Utterance {
  std::string text;
  ToneId tone;
  Intent intent = Intent::Prompt;

  friend bool operator==(const Utterance&, const Utterance&) = default;
};

/// Intent table: VoiceModulation directive -> Prompt, Communication
/// directive -> Correction; otherwise the assessment decides: Sad or Fear ->
/// Comfort, Happy -> Praise, anything else -> Prompt. Directive utterances
/// index the catalog by fired_count, the rest by state.utterance_count.
Utterance select_utterance(const std::optional<EmotionAssessment>& assessment,
                           const std::optional<AuthorizationDirective>& directive,
                           const ToneState& state, const PhraseCatalog& catalog);

}  // namespace smarttoy
