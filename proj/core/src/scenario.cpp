#include "smarttoy/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <tuple>

#include "json.hpp"

namespace smarttoy {
namespace {

using Json = nlohmann::ordered_json;

constexpr double kLikedAffect = 0.6;
constexpr double kFeedbackNoise = 0.1;

enum SlotRank { kScope = 0, kDone, kFace, kVoice, kGait, kFeedback, kPattern };

[[noreturn]] void bad(const std::string& what) { throw InputError("scenario: " + what); }

const Json& need(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) bad(std::string("missing field \"") + key + "\"");
  return j[key];
}

void only_keys(const Json& j, std::initializer_list<std::string_view> allowed, const char* where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      bad(std::string("unknown field \"") + it.key() + "\" in " + where);
    }
  }
}

double real(const Json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) bad(std::string("\"") + key + "\" must be a number");
  return j[key].get<double>();
}

std::int64_t integer(const Json& j, const char* key) {
  const Json& v = need(j, key);
  if (!v.is_number_integer()) bad(std::string("\"") + key + "\" must be an integer");
  return v.get<std::int64_t>();
}

std::string text(const Json& j, const char* key) {
  const Json& v = need(j, key);
  if (!v.is_string()) bad(std::string("\"") + key + "\" must be a string");
  return v.get<std::string>();
}

ToneId tone(const std::string& s) {
  auto t = parse_tone(s);
  if (!t) bad("unknown tone \"" + s + "\"");
  return *t;
}

// Event times for a constant rate: floor(k * 1000 / rate) < duration.
std::vector<std::int64_t> sample_times(double rate_hz, std::int64_t duration_ms) {
  std::vector<std::int64_t> out;
  if (rate_hz <= 0.0) return out;
  const double period = 1000.0 / rate_hz;
  for (std::int64_t k = 0;; ++k) {
    const auto t = static_cast<std::int64_t>(std::floor(static_cast<double>(k) * period));
    if (t >= duration_ms) break;
    out.push_back(t);
  }
  return out;
}

}  // namespace

std::int64_t Scenario::duration_ms() const {
  std::int64_t total = 0;
  for (const auto& s : segments) total += s.duration_ms;
  return total;
}

const ScenarioSegment& Scenario::segment_at(Timestamp ts) const {
  if (segments.empty()) throw InputError("scenario has no segments");
  std::int64_t start = 0;
  for (const auto& s : segments) {
    if (ts.millis < start + s.duration_ms) return s;
    start += s.duration_ms;
  }
  return segments.back();
}

std::optional<std::string> Scenario::check() const {
  if (child.id.empty()) return "child must be non-empty";
  if (segments.empty()) return "at least one segment is required";
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& s = segments[i];
    const std::string where = "segment " + std::to_string(i) + ": ";
    if (s.duration_ms <= 0) return where + "duration_ms must be positive";
    for (double r : {s.face_rate_hz, s.voice_rate_hz, s.gait_rate_hz, s.feedback_rate_hz}) {
      if (!(std::isfinite(r) && r >= 0.0)) return where + "rates must be finite and >= 0";
    }
    auto inside = [&](std::int64_t t) { return t >= 0 && t < s.duration_ms; };
    for (const auto& p : s.pattern_injections) {
      for (auto t : p.offsets_ms) {
        if (!inside(t)) return where + "pattern injection outside the segment";
      }
    }
    for (const auto& c : s.scope_changes) {
      if (!inside(c.offset_ms)) return where + "scope change outside the segment";
      if (c.change.scope.empty()) return where + "scope change needs a scope";
    }
    for (const auto& d : s.module_done_script) {
      if (!inside(d.offset_ms)) return where + "module completion outside the segment";
      if (d.done.module.empty() || d.done.action.empty()) return where + "module completion needs module and action";
    }
  }
  return std::nullopt;
}

Scenario parse_scenario(std::string_view json_text) {
  Json doc;
  try {
    doc = Json::parse(json_text.begin(), json_text.end());
  } catch (const nlohmann::json::parse_error& e) {
    bad(e.what());
  }
  if (!doc.is_object()) bad("expected a JSON object");
  only_keys(doc, {"seed", "child", "start_tone", "segments"}, "scenario");

  Scenario sc;
  const Json& seed = need(doc, "seed");
  if (!seed.is_number_unsigned()) bad("\"seed\" must be a non-negative integer");
  sc.seed = seed.get<std::uint64_t>();
  sc.child.id = text(doc, "child");
  if (doc.contains("start_tone")) sc.start_tone = tone(text(doc, "start_tone"));
  const Json& segments = need(doc, "segments");
  if (!segments.is_array()) bad("\"segments\" must be an array");

  try {
    for (const Json& sj : segments) {
      only_keys(sj,
                {"duration_ms", "true_emotion", "tone_preference", "face_rate_hz", "voice_rate_hz",
                 "gait_rate_hz", "feedback_rate_hz", "pattern_injections", "scope_changes",
                 "module_done_script"},
                "segment");
      ScenarioSegment s;
      s.duration_ms = integer(sj, "duration_ms");
      auto emotion = parse_emotion(text(sj, "true_emotion"));
      if (!emotion) bad("unknown emotion \"" + text(sj, "true_emotion") + "\"");
      s.true_emotion = *emotion;
      s.tone_preference = sj.contains("tone_preference") ? tone(text(sj, "tone_preference")) : sc.start_tone;
      s.face_rate_hz = real(sj, "face_rate_hz", 0.0);
      s.voice_rate_hz = real(sj, "voice_rate_hz", 0.0);
      s.gait_rate_hz = real(sj, "gait_rate_hz", 0.0);
      s.feedback_rate_hz = real(sj, "feedback_rate_hz", 0.0);
      for (const Json& pj : sj.value("pattern_injections", Json::array())) {
        auto kind = parse_pattern_kind(text(pj, "kind"));
        if (!kind) bad("unknown pattern kind \"" + text(pj, "kind") + "\"");
        s.pattern_injections.push_back({*kind, need(pj, "offsets_ms").get<std::vector<std::int64_t>>()});
      }
      for (const Json& cj : sj.value("scope_changes", Json::array())) {
        TimedScopeChange c;
        c.offset_ms = integer(cj, "offset_ms");
        c.change.scope = text(cj, "scope");
        if (cj.contains("qualifier") && !cj["qualifier"].is_null()) c.change.qualifier = text(cj, "qualifier");
        c.change.active = cj.value("active", true);
        s.scope_changes.push_back(std::move(c));
      }
      for (const Json& dj : sj.value("module_done_script", Json::array())) {
        TimedModuleDone d;
        d.offset_ms = integer(dj, "offset_ms");
        d.done.module = text(dj, "module");
        d.done.args = dj.value("args", std::vector<std::string>{});
        d.done.action = text(dj, "action");
        s.module_done_script.push_back(std::move(d));
      }
      sc.segments.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    bad(e.what());
  }
  if (auto problem = sc.check()) bad(*problem);
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open scenario " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string encode_scenario(const Scenario& sc) {
  Json doc;
  doc["seed"] = sc.seed;
  doc["child"] = sc.child.id;
  doc["start_tone"] = to_string(sc.start_tone);
  Json segments = Json::array();
  for (const auto& s : sc.segments) {
    Json sj;
    sj["duration_ms"] = s.duration_ms;
    sj["true_emotion"] = std::string(to_string(s.true_emotion));
    sj["tone_preference"] = to_string(s.tone_preference);
    sj["face_rate_hz"] = s.face_rate_hz;
    sj["voice_rate_hz"] = s.voice_rate_hz;
    sj["gait_rate_hz"] = s.gait_rate_hz;
    sj["feedback_rate_hz"] = s.feedback_rate_hz;
    Json injections = Json::array();
    for (const auto& p : s.pattern_injections) {
      injections.push_back({{"kind", std::string(to_string(p.kind))}, {"offsets_ms", p.offsets_ms}});
    }
    sj["pattern_injections"] = std::move(injections);
    Json scopes = Json::array();
    for (const auto& c : s.scope_changes) {
      Json cj;
      cj["offset_ms"] = c.offset_ms;
      cj["scope"] = c.change.scope;
      cj["qualifier"] = c.change.qualifier ? Json(*c.change.qualifier) : Json(nullptr);
      cj["active"] = c.change.active;
      scopes.push_back(std::move(cj));
    }
    sj["scope_changes"] = std::move(scopes);
    Json dones = Json::array();
    for (const auto& d : s.module_done_script) {
      Json dj;
      dj["offset_ms"] = d.offset_ms;
      dj["module"] = d.done.module;
      dj["args"] = d.done.args;
      dj["action"] = d.done.action;
      dones.push_back(std::move(dj));
    }
    sj["module_done_script"] = std::move(dones);
    segments.push_back(std::move(sj));
  }
  doc["segments"] = std::move(segments);
  return doc.dump(2) + "\n";
}

StreamGenerator::StreamGenerator(const Scenario& scenario, const SyntheticProfiles& profiles)
    : child_(scenario.child) {
  if (auto problem = scenario.check()) throw InputError("scenario: " + *problem);
  Rng rng(scenario.seed);
  std::int64_t start = 0;
  auto add = [&](std::int64_t ts, int rank, std::optional<EventPayload> payload,
                 const ToneId& preference = ToneId::male(), double noise = 0.0) {
    slots_.push_back({ts, rank, slots_.size(), std::move(payload), preference, noise});
  };
  for (const auto& seg : scenario.segments) {
    for (const auto& c : seg.scope_changes) add(start + c.offset_ms, kScope, c.change);
    for (const auto& d : seg.module_done_script) add(start + d.offset_ms, kDone, d.done);
    for (auto t : sample_times(seg.face_rate_hz, seg.duration_ms)) {
      add(start + t, kFace, sample_face(profiles, seg.true_emotion, rng));
    }
    for (auto t : sample_times(seg.voice_rate_hz, seg.duration_ms)) {
      add(start + t, kVoice, sample_voice(profiles, seg.true_emotion, rng));
    }
    for (auto t : sample_times(seg.gait_rate_hz, seg.duration_ms)) {
      add(start + t, kGait, sample_gait(profiles, seg.true_emotion, rng));
    }
    for (auto t : sample_times(seg.feedback_rate_hz, seg.duration_ms)) {
      add(start + t, kFeedback, std::nullopt, seg.tone_preference,
          rng.uniform(-kFeedbackNoise, kFeedbackNoise));
    }
    for (const auto& p : seg.pattern_injections) {
      for (auto t : p.offsets_ms) add(start + t, kPattern, PatternEvent{p.kind});
    }
    start += seg.duration_ms;
  }
  std::sort(slots_.begin(), slots_.end(), [](const Slot& a, const Slot& b) {
    return std::tie(a.ts, a.rank, a.seq) < std::tie(b.ts, b.rank, b.seq);
  });
}

BehaviorEvent StreamGenerator::next(const ToneId& current_tone) {
  if (done()) throw InvariantError("stream generator exhausted");
  Slot& slot = slots_[next_++];
  BehaviorEvent e;
  e.ts = Timestamp{slot.ts};
  e.child = child_;
  if (slot.payload) {
    e.payload = std::move(*slot.payload);
  } else {
    const double base = current_tone == slot.preference ? kLikedAffect : -kLikedAffect;
    e.payload = ResponseFeedback{current_tone, std::clamp(base + slot.noise, -1.0, 1.0)};
  }
  return e;
}

std::vector<BehaviorEvent> generate_stream(const Scenario& scenario, const SyntheticProfiles& profiles,
                                           const ControllerConfig& controller, FeedbackLoop loop) {
  StreamGenerator gen(scenario, profiles);
  ControllerConfig autonomous = controller;
  autonomous.mode = SwitchMode::Autonomous;
  ToneState tone = ToneState::make(autonomous, scenario.start_tone);
  std::vector<BehaviorEvent> out;
  out.reserve(gen.size());
  while (!gen.done()) {
    out.push_back(gen.next(tone.current));
    if (loop == FeedbackLoop::Closed) {
      if (const auto* fb = std::get_if<ResponseFeedback>(&out.back().payload)) {
        tone = on_feedback(std::move(tone), *fb).state;
      }
    }
  }
  return out;
}

}  // namespace smarttoy
