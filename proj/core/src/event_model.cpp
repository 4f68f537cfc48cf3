#include "smarttoy/event_model.hpp"

#include <cmath>
#include <map>

#include "json.hpp"

namespace smarttoy {
namespace {

using Json = nlohmann::ordered_json;

constexpr std::array<std::string_view, kEmotionCount> kEmotionNames = {
    "happy", "sad", "angry", "fear", "surprise", "neutral"};

constexpr std::array<std::string_view, 4> kPatternNames = {"head_hit", "leg_beat", "scream",
                                                           "run_away"};

bool finite(double v) { return std::isfinite(v); }

struct Decoder {
  std::string_view line;
  const Json& obj;

  std::size_t offset_of(std::string_view key) const {
    std::string quoted = "\"" + std::string(key) + "\"";
    auto pos = line.find(quoted);
    return pos == std::string_view::npos ? line.size() : pos;
  }

  [[noreturn]] void fail(std::string_view key, std::string expected) const {
    throw EventParseError(offset_of(key), std::move(expected));
  }

  const Json& field(std::string_view key) const {
    auto it = obj.find(std::string(key));
    if (it == obj.end()) {
      throw EventParseError(line.size(), "field \"" + std::string(key) + "\"");
    }
    return *it;
  }

  double number(std::string_view key) const {
    const Json& v = field(key);
    if (!v.is_number()) fail(key, "number for \"" + std::string(key) + "\"");
    return v.get<double>();
  }

  std::string string(std::string_view key) const {
    const Json& v = field(key);
    if (!v.is_string()) fail(key, "string for \"" + std::string(key) + "\"");
    return v.get<std::string>();
  }

  std::vector<std::string> strings(std::string_view key) const {
    const Json& v = field(key);
    if (!v.is_array()) fail(key, "array of strings for \"" + std::string(key) + "\"");
    std::vector<std::string> out;
    for (const auto& s : v) {
      if (!s.is_string()) fail(key, "array of strings for \"" + std::string(key) + "\"");
      out.push_back(s.get<std::string>());
    }
    return out;
  }

  std::vector<double> numbers(std::string_view key) const {
    const Json& v = field(key);
    if (!v.is_array()) fail(key, "array of numbers for \"" + std::string(key) + "\"");
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& n : v) {
      if (!n.is_number()) fail(key, "array of numbers for \"" + std::string(key) + "\"");
      out.push_back(n.get<double>());
    }
    return out;
  }

  void only_keys(std::initializer_list<std::string_view> allowed) const {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      bool known = false;
      for (auto k : allowed) known = known || it.key() == k;
      if (!known) fail(it.key(), "no field \"" + it.key() + "\"");
    }
  }
};

EventPayload decode_payload(const Decoder& d, const std::string& tag) {
  if (tag == "face") {
    d.only_keys({"ts", "child", "type", "landmarks"});
    const Json& arr = d.field("landmarks");
    if (!arr.is_array()) d.fail("landmarks", "array of [x,y] pairs");
    FaceFrame f;
    f.landmarks.reserve(arr.size());
    for (const auto& p : arr) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
        d.fail("landmarks", "[x,y] pair");
      }
      f.landmarks.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    return f;
  }
  if (tag == "gait") {
    d.only_keys({"ts", "child", "type", "cadence", "tiptoe_score", "speed"});
    return GaitFrame{d.number("cadence"), d.number("tiptoe_score"), d.number("speed")};
  }
  if (tag == "voice") {
    d.only_keys({"ts", "child", "type", "band_energies", "rms", "pitch_hz"});
    return VoiceFrame{d.numbers("band_energies"), d.number("rms"), d.number("pitch_hz")};
  }
  if (tag == "feedback") {
    d.only_keys({"ts", "child", "type", "tone_used", "affect"});
    auto tone = parse_tone(d.string("tone_used"));
    if (!tone) d.fail("tone_used", "tone (male|female|familiar:<name>)");
    return ResponseFeedback{*tone, d.number("affect")};
  }
  if (tag == "pattern") {
    d.only_keys({"ts", "child", "type", "kind"});
    auto kind = parse_pattern_kind(d.string("kind"));
    if (!kind) d.fail("kind", "pattern kind (head_hit|leg_beat|scream|run_away)");
    return PatternEvent{*kind};
  }
  if (tag == "done") {
    d.only_keys({"ts", "child", "type", "module", "args", "action"});
    return ModuleDone{d.string("module"), d.strings("args"), d.string("action")};
  }
  if (tag == "scope") {
    d.only_keys({"ts", "child", "type", "scope", "qualifier", "active"});
    ScopeChange s;
    s.scope = d.string("scope");
    const Json& q = d.field("qualifier");
    if (q.is_string()) {
      s.qualifier = q.get<std::string>();
    } else if (!q.is_null()) {
      d.fail("qualifier", "string or null for \"qualifier\"");
    }
    const Json& a = d.field("active");
    if (!a.is_boolean()) d.fail("active", "boolean for \"active\"");
    s.active = a.get<bool>();
    return s;
  }
  d.fail("type", "payload type (face|gait|voice|feedback|pattern|done|scope), got \"" + tag +
                     "\"");
}

}  // namespace

std::string_view to_string(EmotionLabel label) {
  return kEmotionNames[static_cast<std::size_t>(label)];
}

std::optional<EmotionLabel> parse_emotion(std::string_view name) {
  for (std::size_t i = 0; i < kEmotionNames.size(); ++i) {
    if (kEmotionNames[i] == name) return kAllEmotions[i];
  }
  return std::nullopt;
}

std::string to_string(const ToneId& tone) {
  switch (tone.kind) {
    case ToneId::Kind::Male:
      return "male";
    case ToneId::Kind::Female:
      return "female";
    case ToneId::Kind::Familiar:
      return "familiar:" + tone.name;
  }
  return {};
}

std::optional<ToneId> parse_tone(std::string_view text) {
  if (text == "male") return ToneId::male();
  if (text == "female") return ToneId::female();
  constexpr std::string_view prefix = "familiar:";
  if (text.starts_with(prefix) && text.size() > prefix.size()) {
    return ToneId::familiar(std::string(text.substr(prefix.size())));
  }
  return std::nullopt;
}

std::string_view to_string(PatternKind kind) { return kPatternNames[static_cast<std::size_t>(kind)]; }

std::optional<PatternKind> parse_pattern_kind(std::string_view name) {
  for (std::size_t i = 0; i < kPatternNames.size(); ++i) {
    if (kPatternNames[i] == name) return kAllPatternKinds[i];
  }
  return std::nullopt;
}

std::string_view payload_tag(const EventPayload& payload) {
  static constexpr std::array<std::string_view, 7> tags = {"face",    "gait", "voice", "feedback",
                                                           "pattern", "done", "scope"};
  return tags[payload.index()];
}

std::optional<std::string> validate_event(const BehaviorEvent& event) {
  if (event.ts.millis < 0) return "ts: must be non-negative";
  if (event.child.id.empty()) return "child: must be non-empty";

  struct Visitor {
    std::optional<std::string> operator()(const FaceFrame& f) const {
      if (f.landmarks.size() != kLandmarkCount) {
        return "landmarks: expected 68, got " + std::to_string(f.landmarks.size());
      }
      for (std::size_t i = 0; i < f.landmarks.size(); ++i) {
        const auto& p = f.landmarks[i];
        if (!(p.x >= 0.0 && p.x <= 1.0 && p.y >= 0.0 && p.y <= 1.0)) {
          return "landmarks: point " + std::to_string(i) + " outside [0,1]";
        }
      }
      return std::nullopt;
    }
    std::optional<std::string> operator()(const GaitFrame& g) const {
      if (!(finite(g.cadence) && g.cadence >= 0.0)) return "cadence: must be finite and >= 0";
      if (!(g.tiptoe_score >= 0.0 && g.tiptoe_score <= 1.0)) return "tiptoe_score: out of [0,1]";
      if (!(finite(g.speed) && g.speed >= 0.0)) return "speed: must be finite and >= 0";
      return std::nullopt;
    }
    std::optional<std::string> operator()(const VoiceFrame& v) const {
      if (v.band_energies.size() != kVoiceBandCount) {
        return "band_energies: expected 26, got " + std::to_string(v.band_energies.size());
      }
      for (double e : v.band_energies) {
        if (!(finite(e) && e >= 0.0)) return "band_energies: must be finite and >= 0";
      }
      if (!(finite(v.rms) && v.rms >= 0.0)) return "rms: must be finite and >= 0";
      if (!(finite(v.pitch_hz) && v.pitch_hz >= 0.0)) return "pitch_hz: must be finite and >= 0";
      return std::nullopt;
    }
    std::optional<std::string> operator()(const ResponseFeedback& r) const {
      if (r.tone_used.kind == ToneId::Kind::Familiar && r.tone_used.name.empty()) {
        return "tone_used: familiar tone needs a name";
      }
      if (!(r.affect >= -1.0 && r.affect <= 1.0)) return "affect out of [-1,1]";
      return std::nullopt;
    }
    std::optional<std::string> operator()(const PatternEvent&) const { return std::nullopt; }
    std::optional<std::string> operator()(const ModuleDone& m) const {
      if (m.module.empty()) return "module: must be non-empty";
      if (m.action.empty()) return "action: must be non-empty";
      return std::nullopt;
    }
    std::optional<std::string> operator()(const ScopeChange& s) const {
      if (s.scope.empty()) return "scope: must be non-empty";
      if (s.qualifier && s.qualifier->empty()) return "qualifier: must be non-empty when present";
      return std::nullopt;
    }
  };
  return std::visit(Visitor{}, event.payload);
}

std::optional<std::string> validate_stream(std::span<const BehaviorEvent> events) {
  std::map<std::string, std::int64_t> newest;
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (auto v = validate_event(events[i])) return "event " + std::to_string(i) + ": " + *v;
    auto [it, inserted] = newest.try_emplace(events[i].child.id, events[i].ts.millis);
    if (!inserted) {
      if (events[i].ts.millis < it->second) {
        return "event " + std::to_string(i) + ": ts " + std::to_string(events[i].ts.millis) +
               " precedes " + std::to_string(it->second) + " for child " + it->first;
      }
      it->second = events[i].ts.millis;
    }
  }
  return std::nullopt;
}

std::string encode_event(const BehaviorEvent& event) {
  Json j;
  j["ts"] = event.ts.millis;
  j["child"] = event.child.id;
  j["type"] = std::string(payload_tag(event.payload));

  struct Visitor {
    Json& j;
    void operator()(const FaceFrame& f) const {
      Json arr = Json::array();
      for (const auto& p : f.landmarks) arr.push_back(Json::array({p.x, p.y}));
      j["landmarks"] = std::move(arr);
    }
    void operator()(const GaitFrame& g) const {
      j["cadence"] = g.cadence;
      j["tiptoe_score"] = g.tiptoe_score;
      j["speed"] = g.speed;
    }
    void operator()(const VoiceFrame& v) const {
      j["band_energies"] = v.band_energies;
      j["rms"] = v.rms;
      j["pitch_hz"] = v.pitch_hz;
    }
    void operator()(const ResponseFeedback& r) const {
      j["tone_used"] = to_string(r.tone_used);
      j["affect"] = r.affect;
    }
    void operator()(const PatternEvent& p) const { j["kind"] = std::string(to_string(p.kind)); }
    void operator()(const ModuleDone& m) const {
      j["module"] = m.module;
      j["args"] = m.args;
      j["action"] = m.action;
    }
    void operator()(const ScopeChange& s) const {
      j["scope"] = s.scope;
      j["qualifier"] = s.qualifier ? Json(*s.qualifier) : Json(nullptr);
      j["active"] = s.active;
    }
  };
  std::visit(Visitor{j}, event.payload);
  return j.dump();
}

BehaviorEvent decode_event(std::string_view line) {
  Json obj;
  try {
    obj = Json::parse(line.begin(), line.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw EventParseError(e.byte == 0 ? 0 : e.byte - 1, "well-formed JSON object");
  }
  if (!obj.is_object()) throw EventParseError(0, "JSON object");

  Decoder d{line, obj};
  const Json& ts = d.field("ts");
  if (!ts.is_number_integer()) d.fail("ts", "integer milliseconds for \"ts\"");
  BehaviorEvent event;
  event.ts.millis = ts.get<std::int64_t>();
  if (ts.is_number_unsigned() && event.ts.millis < 0) d.fail("ts", "64-bit timestamp");
  event.child.id = d.string("child");
  event.payload = decode_payload(d, d.string("type"));
  return event;
}

}  // namespace smarttoy
