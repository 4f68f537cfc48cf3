#include "doctest.h"
#include "smarttoy/modulation.hpp"

using namespace smarttoy;

namespace {

ResponseFeedback fb(ToneId tone, double affect) { return {std::move(tone), affect}; }

AuthorizationDirective directive(std::string outcome, std::uint64_t fired = 1) {
  AuthorizationDirective d;
  d.policy = outcome == "VoiceModulation" ? "Policy4" : "Policy3";
  d.outcome = std::move(outcome);
  d.fired_count = fired;
  return d;
}

EmotionAssessment top(EmotionLabel label) {
  Distribution d{};
  d[static_cast<std::size_t>(label)] = 1.0;
  return assess(d, std::nullopt);
}

}  // namespace

TEST_SUITE("modulation") {

TEST_CASE("three negative feedbacks switch male to female") {
  ToneState s = ToneState::make({}, ToneId::male());
  for (int i = 0; i < 2; ++i) {
    auto u = on_feedback(s, fb(ToneId::male(), -0.5));
    CHECK_FALSE(u.switched_to.has_value());
    s = u.state;
  }
  CHECK(s.negative_streak == 2);
  auto u = on_feedback(s, fb(ToneId::male(), -0.5));
  REQUIRE(u.switched_to.has_value());
  CHECK(*u.switched_to == ToneId::female());
  CHECK(u.state.current == ToneId::female());
  CHECK(u.state.negative_streak == 0);
}

TEST_CASE("a non-negative feedback resets the streak") {
  ToneState s = ToneState::make({}, ToneId::male());
  s = on_feedback(s, fb(ToneId::male(), -0.5)).state;
  s = on_feedback(s, fb(ToneId::male(), -0.5)).state;
  auto u = on_feedback(s, fb(ToneId::male(), 0.5));
  CHECK_FALSE(u.switched_to.has_value());
  CHECK(u.state.negative_streak == 0);
  // Exactly theta is not sub-threshold.
  CHECK(on_feedback(u.state, fb(ToneId::male(), -0.2)).state.negative_streak == 0);
}

TEST_CASE("rotation wraps around the tone order") {
  ToneState s = ToneState::make({}, ToneId::female());
  std::optional<ToneId> sw;
  for (int i = 0; i < 3; ++i) {
    auto u = on_feedback(s, fb(ToneId::female(), -0.9));
    s = u.state;
    sw = u.switched_to;
  }
  CHECK(sw == ToneId::male());
}

TEST_CASE("after |tone_order| switches the start tone returns") {
  ControllerConfig cfg;
  cfg.tone_order = {ToneId::male(), ToneId::female(), ToneId::familiar("grandma")};
  ToneState s = ToneState::make(cfg, ToneId::female());
  std::vector<ToneId> visited;
  for (int i = 0; i < 9; ++i) {
    auto u = on_feedback(s, fb(s.current, -1.0));
    s = u.state;
    if (u.switched_to) visited.push_back(*u.switched_to);
  }
  CHECK(visited == std::vector<ToneId>{ToneId::familiar("grandma"), ToneId::male(), ToneId::female()});
}

TEST_CASE("feedback for another tone is ignored") {
  ToneState s = ToneState::make({}, ToneId::male());
  s = on_feedback(s, fb(ToneId::male(), -0.5)).state;
  auto u = on_feedback(s, fb(ToneId::female(), -0.5));
  CHECK(u.state == s);
  CHECK_FALSE(u.switched_to.has_value());
}

TEST_CASE("a switch needs exactly k sub-threshold feedbacks") {
  for (std::int64_t k = 1; k <= 5; ++k) {
    ControllerConfig cfg;
    cfg.switch_threshold = k;
    ToneState s = ToneState::make(cfg, ToneId::male());
    int count = 0;
    std::optional<ToneId> sw;
    while (!sw) {
      auto u = on_feedback(s, fb(ToneId::male(), -0.3));
      s = u.state;
      sw = u.switched_to;
      ++count;
    }
    CHECK(count == k);
  }
}

TEST_CASE("directive-gated mode waits for a VoiceModulation directive") {
  ControllerConfig cfg;
  cfg.mode = SwitchMode::DirectiveGated;
  ToneState s = ToneState::make(cfg, ToneId::male());
  for (int i = 0; i < 4; ++i) {
    auto u = on_feedback(s, fb(ToneId::male(), -0.5));
    CHECK_FALSE(u.switched_to.has_value());
    s = u.state;
  }
  CHECK(s.negative_streak == 3);
  CHECK_FALSE(on_directive(s, directive("Communication")).switched_to.has_value());
  auto u = on_directive(s, directive("VoiceModulation"));
  CHECK(u.switched_to == ToneId::female());

  // Directive first, then the third feedback triggers.
  ToneState t = ToneState::make(cfg, ToneId::male());
  t = on_directive(t, directive("VoiceModulation")).state;
  CHECK(t.directive_pending);
  t = on_feedback(t, fb(ToneId::male(), -0.5)).state;
  t = on_feedback(t, fb(ToneId::male(), -0.5)).state;
  auto last = on_feedback(t, fb(ToneId::male(), -0.5));
  CHECK(last.switched_to == ToneId::female());
  CHECK_FALSE(last.state.directive_pending);
}

TEST_CASE("autonomous mode ignores directives") {
  ToneState s = ToneState::make({}, ToneId::male());
  auto u = on_directive(s, directive("VoiceModulation"));
  CHECK_FALSE(u.switched_to.has_value());
  CHECK(u.state == s);
}

TEST_CASE("invalid controller settings") {
  ControllerConfig cfg;
  CHECK_THROWS_AS(ToneState::make(cfg, ToneId::familiar("x")), InputError);
  cfg.switch_threshold = 0;
  CHECK_THROWS_AS(ToneState::make(cfg, ToneId::male()), InputError);
  cfg.switch_threshold = 3;
  cfg.affect_floor = -1.5;
  CHECK_THROWS_AS(ToneState::make(cfg, ToneId::male()), InputError);
}

TEST_CASE("utterance intent table") {
  const PhraseCatalog cat = PhraseCatalog::builtin();
  ToneState s = ToneState::make({}, ToneId::male());
  auto happy = select_utterance(top(EmotionLabel::Happy), std::nullopt, s, cat);
  CHECK(happy.intent == Intent::Praise);
  CHECK(happy.tone == ToneId::male());
  CHECK(select_utterance(top(EmotionLabel::Sad), std::nullopt, s, cat).intent == Intent::Comfort);
  CHECK(select_utterance(top(EmotionLabel::Fear), std::nullopt, s, cat).intent == Intent::Comfort);
  CHECK(select_utterance(top(EmotionLabel::Angry), std::nullopt, s, cat).intent == Intent::Prompt);
  CHECK(select_utterance(std::nullopt, directive("Communication"), s, cat).intent == Intent::Correction);
  s.current = ToneId::female();
  auto vm = select_utterance(top(EmotionLabel::Happy), directive("VoiceModulation"), s, cat);
  CHECK(vm.intent == Intent::Prompt);
  CHECK(vm.tone == ToneId::female());
}

TEST_CASE("utterances index the catalog deterministically") {
  const PhraseCatalog cat = PhraseCatalog::builtin();
  ToneState s = ToneState::make({}, ToneId::male());
  const auto& prompts = cat.phrases(Intent::Prompt);
  for (std::uint64_t n = 0; n < 7; ++n) {
    CHECK(select_utterance(std::nullopt, directive("VoiceModulation", n), s, cat).text == prompts[n % prompts.size()]);
  }
  s.utterance_count = 4;
  const auto& praise = cat.phrases(Intent::Praise);
  CHECK(select_utterance(top(EmotionLabel::Happy), std::nullopt, s, cat).text == praise[4 % praise.size()]);
  CHECK(select_utterance(top(EmotionLabel::Happy), std::nullopt, s, cat) ==
        select_utterance(top(EmotionLabel::Happy), std::nullopt, s, cat));
}

TEST_CASE("phrase catalog parsing") {
  const PhraseCatalog c = PhraseCatalog::parse("# c\npraise\tYay\ncorrection\tAgain\ncomfort\tThere\nprompt\tPlay?\n");
  CHECK(c.phrases(Intent::Praise) == std::vector<std::string>{"Yay"});
  CHECK_THROWS_AS(PhraseCatalog::parse("praise\tYay\n"), InputError);
  CHECK_THROWS_AS(PhraseCatalog::parse("praise Yay\ncorrection\tA\ncomfort\tB\nprompt\tC\n"), InputError);
  CHECK_THROWS_AS(PhraseCatalog::parse("cheer\tYay\npraise\tA\ncorrection\tA\ncomfort\tB\nprompt\tC\n"), InputError);
  CHECK(PhraseCatalog::parse(PhraseCatalog::builtin_source()).phrases(Intent::Comfort).size() == 3);
}

}
