#include <fstream>
#include <sstream>

#include "doctest.h"
#include "generators.hpp"
#include "smarttoy/datastore.hpp"

using namespace smarttoy;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("datastore") {

TEST_CASE("append and query") {
  DataStore store(testsupport::scratch_dir("ds_basic"));
  const ChildId c{"c1"};
  store.append_event({{10}, c, PatternEvent{}});
  store.append_event({{20}, c, GaitFrame{90, 0.1, 1.0}});
  store.append_event({{30}, c, PatternEvent{PatternKind::Scream}});
  const auto all = store.query_window(c, {0}, {100});
  REQUIRE(all.size() == 3);
  CHECK(all[0].ts.millis == 10);
  CHECK(all[2].ts.millis == 30);
  CHECK(store.query_window(c, {15}, {15}).empty());
  CHECK(store.query_window(c, {20}, {20}).size() == 1);
  CHECK(store.query_window({"nobody"}, {0}, {100}).empty());
  CHECK_THROWS_AS(store.query_window(c, {5}, {1}), InputError);
  CHECK(store.children() == std::vector<ChildId>{c});
}

TEST_CASE("append rejects out-of-order and invalid events") {
  const auto root = testsupport::scratch_dir("ds_order");
  {
    DataStore store(root);
    store.append_event({{100}, {"c1"}, PatternEvent{}});
    CHECK_THROWS_AS(store.append_event({{99}, {"c1"}, PatternEvent{}}), OrderingError);
    CHECK_THROWS_AS(store.append_event({{200}, {"c1"}, ResponseFeedback{ToneId::male(), 4}}), InputError);
    CHECK_NOTHROW(store.append_event({{1}, {"c2"}, PatternEvent{}}));
  }
  DataStore reopened(root);
  CHECK_THROWS_AS(reopened.append_event({{50}, {"c1"}, PatternEvent{}}), OrderingError);
  CHECK(reopened.read_events({"c1"}).size() == 1);
}

TEST_CASE("child ids must be safe directory names") {
  DataStore store(testsupport::scratch_dir("ds_names"));
  CHECK_THROWS_AS(store.append_event({{0}, {"../x"}, PatternEvent{}}), InputError);
  CHECK_THROWS_AS(store.append_event({{0}, {"models"}, PatternEvent{}}), InputError);
  CHECK_THROWS_AS(store.append_event({{0}, {".."}, PatternEvent{}}), InputError);
}

TEST_CASE("query agrees with an in-memory filter") {
  DataStore store(testsupport::scratch_dir("ds_oracle"));
  Rng rng(77);
  std::vector<BehaviorEvent> memory;
  std::map<std::string, std::int64_t> clock;
  for (int i = 0; i < 1000; ++i) {
    const std::string child = "k" + std::to_string(rng.below(3));
    clock[child] += rng.between(0, 50);
    auto e = testsupport::random_event(rng, clock[child], child);
    store.append_event(e);
    memory.push_back(e);
  }
  for (int q = 0; q < 200; ++q) {
    const ChildId child{"k" + std::to_string(rng.below(3))};
    std::int64_t t0 = rng.between(0, 20'000), t1 = rng.between(0, 20'000);
    if (t0 > t1) std::swap(t0, t1);
    std::vector<BehaviorEvent> want;
    for (const auto& e : memory) {
      if (e.child == child && e.ts.millis >= t0 && e.ts.millis <= t1) want.push_back(e);
    }
    REQUIRE(store.query_window(child, {t0}, {t1}) == want);
  }
}

TEST_CASE("models round-trip bit-exactly and save deterministically") {
  DataStore store(testsupport::scratch_dir("ds_model"));
  MlpModel m = MlpModel::initialized(17, 16, 42);
  m.layers[1].biases[2] = 0.1 + 0.2;  // not representable in short decimal
  m.layers[0].weights[5] = 1e-300;
  store.save_model("face", m);
  CHECK(store.load_model("face") == m);
  const std::string first = slurp(store.model_path("face"));
  store.save_model("face", m);
  CHECK(slurp(store.model_path("face")) == first);
  {
    std::ofstream out(store.model_path("broken"));
    out << first.substr(0, first.size() / 3);
  }
  CHECK_THROWS_AS(store.load_model("broken"), InputError);
  CHECK_THROWS_AS(store.load_model("missing"), InputError);
}

TEST_CASE("alerts are retrievable by id") {
  DataStore store(testsupport::scratch_dir("ds_alerts"));
  AlertRecord r;
  r.alert.ts = {9000};
  r.alert.child = {"c1"};
  r.alert.count = 3;
  r.alert.evidence = {{0}, {4000}, {9000}};
  r.alert.message = "line one\nline two\n";
  r.dispatched_at = Timestamp{9000};
  r.transport_results = {{"email:a@b", true}, {"sms:1", false}};
  CHECK(store.record_alert(r) == 0);
  AlertRecord s = r;
  s.status = DispatchStatus::Suppressed;
  s.dispatched_at.reset();
  s.transport_results.clear();
  CHECK(store.record_alert(s) == 1);
  CHECK(store.read_alert({"c1"}, 0) == r);
  CHECK(store.read_alert({"c1"}, 1) == s);
  CHECK(store.read_alerts({"c1"}).size() == 2);
  CHECK_THROWS_AS(store.read_alert({"c1"}, 2), InputError);
}

TEST_CASE("summaries keep insertion order") {
  DataStore store(testsupport::scratch_dir("ds_summaries"));
  std::vector<PredictionSummary> in;
  for (int i = 0; i < 4; ++i) {
    PredictionSummary s;
    s.child = {"c1"};
    s.channel = i % 2 == 0 ? FeatureKind::Face : FeatureKind::Voice;
    s.window_start = {i * 1000};
    s.window_end = {(i + 1) * 1000};
    s.count = 3;
    s.mean = {0.5, 0.1, 0.1, 0.1, 0.1, 0.1};
    s.dominant = EmotionLabel::Happy;
    store.record_summary(s);
    in.push_back(s);
  }
  CHECK(store.read_summaries({"c1"}) == in);
}

TEST_CASE("familiar voices are unique") {
  const auto root = testsupport::scratch_dir("ds_voices");
  DataStore store(root);
  FamiliarVoice v{"grandma", std::vector<double>(26, 0.5)};
  store.register_familiar_voice(v);
  CHECK_THROWS_AS(store.register_familiar_voice(v), InputError);
  CHECK_THROWS_AS(store.register_familiar_voice({"short", std::vector<double>(3, 0.5)}), InputError);
  store.register_familiar_voice({"uncle", std::vector<double>(26, 1.0)});
  DataStore again(root);
  const auto voices = again.familiar_voices();
  REQUIRE(voices.size() == 2);
  CHECK(voices[0] == v);
}

TEST_CASE("schedules") {
  Schedule s{{{0, 1000}, {5000, 6000}}};
  CHECK_FALSE(s.check().has_value());
  CHECK(s.quiet_until({500}) == Timestamp{1000});
  CHECK(s.quiet_until({kMillisPerDay + 5500}) == Timestamp{kMillisPerDay + 6000});
  CHECK_FALSE(s.quiet_until({1000}).has_value());
  CHECK_FALSE(s.quiet_until({4999}).has_value());
  CHECK(Schedule{{{0, 1000}, {500, 2000}}}.check().has_value());
  CHECK(Schedule{{{10, 10}}}.check().has_value());
  CHECK(Schedule{{{0, kMillisPerDay + 1}}}.check().has_value());
  CHECK(decode_schedule(encode_schedule(s)) == s);
  CHECK_THROWS_AS(decode_schedule(R"({"quiet_windows":[[5,1]]})"), InputError);

  DataStore store(testsupport::scratch_dir("ds_schedule"));
  CHECK(store.load_schedule() == Schedule{});
  store.save_schedule(s);
  CHECK(store.load_schedule() == s);
}

}
