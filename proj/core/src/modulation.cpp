#include "smarttoy/modulation.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace smarttoy {
namespace {

constexpr std::array<std::string_view, 4> kIntentNames = {"praise", "correction", "comfort",
                                                          "prompt"};

constexpr std::string_view kBuiltinPhrases =
    "praise\tWell done, that was great!\n"
    "praise\tYou did it, I am proud of you.\n"
    "praise\tWhat a lovely answer.\n"
    "correction\tLet's say it together, slowly.\n"
    "correction\tAlmost! Listen and try once more.\n"
    "correction\tGood try, let's practice that word again.\n"
    "comfort\tIt's okay, I am here with you.\n"
    "comfort\tLet's take a deep breath together.\n"
    "comfort\tYou are safe. Shall we hum a song?\n"
    "prompt\tShall we play a game?\n"
    "prompt\tCan you show me your favourite toy?\n"
    "prompt\tTell me about your day.\n";

ToneState rotate(ToneState state) {
  auto it = std::find(state.tone_order.begin(), state.tone_order.end(), state.current);
  ++it;
  state.current = it == state.tone_order.end() ? state.tone_order.front() : *it;
  state.negative_streak = 0;
  state.directive_pending = false;
  return state;
}

bool ready_to_switch(const ToneState& s) {
  if (s.negative_streak < s.switch_threshold) return false;
  return s.mode == SwitchMode::Autonomous || s.directive_pending;
}

}  // namespace

std::string_view to_string(Intent intent) { return kIntentNames[static_cast<std::size_t>(intent)]; }

std::optional<Intent> parse_intent(std::string_view name) {
  for (std::size_t i = 0; i < kIntentNames.size(); ++i) {
    if (kIntentNames[i] == name) return static_cast<Intent>(i);
  }
  return std::nullopt;
}

ToneState ToneState::make(const ControllerConfig& config, ToneId start) {
  if (config.switch_threshold < 1) throw InputError("controller: switch_threshold must be >= 1");
  if (!(config.affect_floor >= -1.0 && config.affect_floor <= 1.0)) {
    throw InputError("controller: affect_floor must lie in [-1, 1]");
  }
  if (std::find(config.tone_order.begin(), config.tone_order.end(), start) == config.tone_order.end()) {
    throw InputError("controller: start tone " + to_string(start) + " is not in the tone order");
  }
  ToneState s;
  s.current = std::move(start);
  s.tone_order = config.tone_order;
  s.switch_threshold = config.switch_threshold;
  s.affect_floor = config.affect_floor;
  s.mode = config.mode;
  return s;
}

ToneUpdate on_feedback(ToneState state, const ResponseFeedback& feedback) {
  if (feedback.tone_used != state.current) return {std::move(state), std::nullopt};
  if (feedback.affect >= state.affect_floor) {
    state.negative_streak = 0;
    return {std::move(state), std::nullopt};
  }
  state.negative_streak = std::min(state.negative_streak + 1, state.switch_threshold);
  if (!ready_to_switch(state)) return {std::move(state), std::nullopt};
  ToneState next = rotate(std::move(state));
  ToneId to = next.current;
  return {std::move(next), std::move(to)};
}

ToneUpdate on_directive(ToneState state, const AuthorizationDirective& directive) {
  if (state.mode != SwitchMode::DirectiveGated || directive.outcome != kVoiceModulationOutcome) {
    return {std::move(state), std::nullopt};
  }
  state.directive_pending = true;
  if (!ready_to_switch(state)) return {std::move(state), std::nullopt};
  ToneState next = rotate(std::move(state));
  ToneId to = next.current;
  return {std::move(next), std::move(to)};
}

PhraseCatalog PhraseCatalog::parse(std::string_view text) {
  PhraseCatalog catalog;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    auto intent = tab == std::string_view::npos ? std::nullopt : parse_intent(line.substr(0, tab));
    if (!intent || tab + 1 >= line.size()) {
      throw InputError("phrase catalog line " + std::to_string(line_no) +
                       ": expected `intent<TAB>text`");
    }
    catalog.phrases_[static_cast<std::size_t>(*intent)].emplace_back(line.substr(tab + 1));
  }
  for (std::size_t i = 0; i < catalog.phrases_.size(); ++i) {
    if (catalog.phrases_[i].empty()) {
      throw InputError("phrase catalog has no entry for intent " + std::string(kIntentNames[i]));
    }
  }
  return catalog;
}

PhraseCatalog PhraseCatalog::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open phrase catalog " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

PhraseCatalog PhraseCatalog::builtin() { return parse(kBuiltinPhrases); }

std::string_view PhraseCatalog::builtin_source() { return kBuiltinPhrases; }

const std::vector<std::string>& PhraseCatalog::phrases(Intent intent) const {
  return phrases_[static_cast<std::size_t>(intent)];
}

Utterance select_utterance(const std::optional<EmotionAssessment>& assessment,
                           const std::optional<AuthorizationDirective>& directive,
                           const ToneState& state, const PhraseCatalog& catalog) {
  std::optional<Intent> intent;
  std::uint64_t index = state.utterance_count;
  if (directive) {
    if (directive->outcome == kVoiceModulationOutcome) intent = Intent::Prompt;
    if (directive->outcome == kCommunicationOutcome) intent = Intent::Correction;
    if (intent) index = directive->fired_count;
  }
  if (!intent) {
    intent = Intent::Prompt;
    if (assessment) {
      switch (assessment->top) {
        case EmotionLabel::Sad:
        case EmotionLabel::Fear:
          intent = Intent::Comfort;
          break;
        case EmotionLabel::Happy:
          intent = Intent::Praise;
          break;
        default:
          break;
      }
    }
  }
  const auto& lines = catalog.phrases(*intent);
  if (lines.empty()) throw InputError("phrase catalog has no entry for intent " + std::string(to_string(*intent)));
  return Utterance{lines[index % lines.size()], state.current, *intent};
}

}  // namespace smarttoy
