#include <fstream>
#include <sstream>

#include "doctest.h"
#include "generators.hpp"
#include "smarttoy/pipeline.hpp"

using namespace smarttoy;

namespace {

RunConfig config(const std::string& name = "default") {
  return RunConfig::load(testsupport::data_dir() / "configs" / (name + ".cfg"));
}

Scenario shipped(const std::string& name) {
  return load_scenario(testsupport::data_dir() / "scenarios" / (name + ".json"));
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Transcript run(const std::string& scenario, const std::string& cfg, const std::string& dir) {
  std::ostringstream console;
  return run_simulation(shipped(scenario), config(cfg), testsupport::scratch_dir(dir), console);
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("run config parsing") {
  const RunConfig c = RunConfig::parse(
      R"({"checker":{"min_repeats":4},"controller":{"mode":"directive-gated","tone_order":["female","male"]},
          "dispatcher":{"cooldown_ms":5000,"transports":[{"kind":"file","endpoint":"alerts.txt"}]},
          "loop":"open","policies":"p.pol"})",
      "/base");
  CHECK(c.checker.min_repeats == 4);
  CHECK(c.controller.mode == SwitchMode::DirectiveGated);
  CHECK(c.controller.tone_order == std::vector<ToneId>{ToneId::female(), ToneId::male()});
  CHECK(c.cooldown_ms == 5000);
  REQUIRE(c.transports.size() == 1);
  CHECK(c.transports[0].endpoint == "/base/alerts.txt");
  CHECK(c.loop == FeedbackLoop::Open);
  CHECK(c.policies == std::filesystem::path("/base/p.pol"));
  CHECK(RunConfig::parse(c.encode()).encode() == c.encode());
  CHECK_THROWS_AS(RunConfig::parse(R"({"speed":1})"), InputError);
  CHECK_THROWS_AS(RunConfig::parse(R"({"controller":{"mode":"sometimes"}})"), InputError);
  CHECK_THROWS_AS(RunConfig::parse(R"({"checker":{"min_repeats":"three"}})"), InputError);
  CHECK_THROWS_AS(RunConfig::parse("{"), InputError);
}

TEST_CASE("familiar voices join the rotation after female") {
  RunConfig c;
  c.familiar_voices = {{"grandma", std::vector<double>(26, 0.2)}};
  const ControllerConfig cc = effective_controller(c);
  CHECK(cc.tone_order == std::vector<ToneId>{ToneId::male(), ToneId::female(), ToneId::familiar("grandma")});
  RunConfig bad;
  bad.controller.tone_order = {ToneId::male(), ToneId::familiar("ghost")};
  CHECK_THROWS_AS(effective_controller(bad), InputError);
}

TEST_CASE("head-hit scenario yields exactly one delivered alert") {
  const Transcript t = run("head_hit", "default", "pl_head_hit");
  int delivered = 0, suppressed = 0;
  for (const auto& a : t.alerts) {
    delivered += a.record.status == DispatchStatus::Delivered;
    suppressed += a.record.status == DispatchStatus::Suppressed;
  }
  CHECK(delivered == 1);
  CHECK(suppressed == 1);
  CHECK(t.patterns.size() == 2);
}

TEST_CASE("tone-preference scenario switches after three feedbacks") {
  const Transcript t = run("tone_preference", "default", "pl_tone");
  REQUIRE(t.switches.size() == 1);
  CHECK(t.switches[0].from == ToneId::male());
  CHECK(t.switches[0].to == ToneId::female());
  CHECK(t.switches[0].ts.millis == 2000);
}

TEST_CASE("all-happy scenario scores at least 0.9") {
  const Transcript t = run("all_happy", "default", "pl_happy");
  CHECK(t.scored_frames > 0);
  CHECK(t.emotion_score() >= 0.9);
}

TEST_CASE("run directory layout and replay") {
  const auto dir = testsupport::scratch_dir("pl_replay");
  std::ostringstream console;
  const Transcript t = run_simulation(shipped("head_hit"), config(), dir, console);
  CHECK(std::filesystem::exists(dir / "data" / "ben" / "events.log"));
  CHECK(std::filesystem::exists(dir / "data" / "ben" / "alerts.log"));
  CHECK(std::filesystem::exists(dir / "data" / "models" / "face.model"));
  CHECK(std::filesystem::exists(dir / "data" / "schedule.cfg"));
  CHECK(std::filesystem::exists(dir / "outbox" / "email" / "ben-9000.msg"));
  CHECK(slurp(dir / "transcript.txt") == t.text());
  const auto alerts_before = slurp(dir / "data" / "ben" / "alerts.log");
  const Transcript r = replay_run(dir);
  CHECK(r.text() == t.text());
  CHECK(slurp(dir / "data" / "ben" / "alerts.log") == alerts_before);
  CHECK_THROWS_AS(run_simulation(shipped("head_hit"), config(), dir, console), InputError);
}

TEST_CASE("summaries are recorded per window") {
  const auto dir = testsupport::scratch_dir("pl_summaries");
  std::ostringstream console;
  run_simulation(shipped("all_happy"), config(), dir, console);
  DataStore store(dir / "data");
  const auto s = store.read_summaries({"dan"});
  CHECK(s.size() == 12);
  for (const auto& x : s) CHECK(x.dominant == EmotionLabel::Happy);
}

}
