#include "smarttoy/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace smarttoy {
namespace fs = std::filesystem;
namespace {

using Json = nlohmann::ordered_json;

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, std::string_view text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

[[noreturn]] void bad(const std::string& what) { throw InputError("run config: " + what); }

void only_keys(const Json& j, std::initializer_list<std::string_view> allowed, const char* where) {
  if (!j.is_object()) bad(std::string(where) + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      bad("unknown field \"" + it.key() + "\" in " + where);
    }
  }
}

template <typename T>
void read(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j[key].get<T>();
  } catch (const nlohmann::json::exception&) {
    bad(std::string("bad value for \"") + key + "\"");
  }
}

void read_path(const Json& j, const char* key, const fs::path& base, fs::path& out) {
  std::string s;
  read(j, key, s);
  if (s.empty()) return;
  fs::path p(s);
  out = p.is_relative() && !base.empty() ? base / p : p;
}

ToneId tone_from(const std::string& s) {
  auto t = parse_tone(s);
  if (!t) bad("unknown tone \"" + s + "\"");
  return *t;
}

std::size_t channel_index(FeatureKind k) { return k == FeatureKind::Face ? 0 : 1; }

Distribution mean_of(const std::array<double, kEmotionCount>& sum, std::uint64_t count) {
  Distribution d{};
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = sum[i] / static_cast<double>(count);
  return d;
}

std::string directive_cause(const AuthorizationDirective& d) { return "directive:" + d.policy; }

}  // namespace

RunConfig RunConfig::parse(std::string_view json_text, const fs::path& base_dir) {
  Json doc;
  try {
    doc = Json::parse(json_text.begin(), json_text.end());
  } catch (const nlohmann::json::parse_error& e) {
    bad(e.what());
  }
  only_keys(doc,
            {"checker", "controller", "dispatcher", "schedule", "training", "familiar_voices",
             "summary_window_ms", "loop", "policies", "phrases", "profiles", "face_model", "voice_model"},
            "run config");
  RunConfig c;
  if (doc.contains("checker")) {
    const Json& j = doc["checker"];
    only_keys(j, {"bind_window_ms", "pattern_window_ms", "min_repeats"}, "checker");
    read(j, "bind_window_ms", c.checker.bind_window_ms);
    read(j, "pattern_window_ms", c.checker.pattern_window_ms);
    read(j, "min_repeats", c.checker.min_repeats);
  }
  if (doc.contains("controller")) {
    const Json& j = doc["controller"];
    only_keys(j, {"switch_threshold", "affect_floor", "mode", "tone_order"}, "controller");
    read(j, "switch_threshold", c.controller.switch_threshold);
    read(j, "affect_floor", c.controller.affect_floor);
    std::string mode = "autonomous";
    read(j, "mode", mode);
    if (mode == "autonomous") {
      c.controller.mode = SwitchMode::Autonomous;
    } else if (mode == "directive-gated") {
      c.controller.mode = SwitchMode::DirectiveGated;
    } else {
      bad("controller mode must be autonomous or directive-gated");
    }
    if (j.contains("tone_order")) {
      std::vector<std::string> order;
      read(j, "tone_order", order);
      c.controller.tone_order.clear();
      for (const auto& t : order) c.controller.tone_order.push_back(tone_from(t));
      if (c.controller.tone_order.empty()) bad("tone_order must not be empty");
    }
  }
  if (doc.contains("dispatcher")) {
    const Json& j = doc["dispatcher"];
    only_keys(j, {"cooldown_ms", "transports"}, "dispatcher");
    read(j, "cooldown_ms", c.cooldown_ms);
    if (j.contains("transports")) {
      c.transports.clear();
      if (!j["transports"].is_array()) bad("transports must be an array");
      for (const Json& t : j["transports"]) {
        only_keys(t, {"kind", "endpoint"}, "transport");
        std::string kind;
        TransportSpec spec;
        read(t, "kind", kind);
        auto k = parse_transport_kind(kind);
        if (!k) bad("unknown transport kind \"" + kind + "\"");
        spec.kind = *k;
        read(t, "endpoint", spec.endpoint);
        if (spec.endpoint.empty() && spec.kind != TransportKind::Console) bad("transport needs an endpoint");
        if (spec.kind == TransportKind::File) {
          fs::path p(spec.endpoint);
          if (p.is_relative() && !base_dir.empty()) spec.endpoint = (base_dir / p).string();
        }
        if (spec.kind == TransportKind::Console && spec.endpoint.empty()) spec.endpoint = "console";
        c.transports.push_back(std::move(spec));
      }
    }
  }
  if (doc.contains("schedule")) {
    c.schedule = decode_schedule(doc["schedule"].dump());
  }
  if (doc.contains("training")) {
    const Json& j = doc["training"];
    only_keys(j, {"learning_rate", "epochs", "batch_size", "seed", "hidden", "samples"}, "training");
    read(j, "learning_rate", c.training.training.learning_rate);
    read(j, "epochs", c.training.training.epochs);
    read(j, "batch_size", c.training.training.batch_size);
    read(j, "seed", c.training.training.seed);
    read(j, "hidden", c.training.training.hidden);
    read(j, "samples", c.training.samples);
  }
  if (doc.contains("familiar_voices")) {
    if (!doc["familiar_voices"].is_array()) bad("familiar_voices must be an array");
    for (const Json& v : doc["familiar_voices"]) {
      only_keys(v, {"name", "descriptor"}, "familiar voice");
      FamiliarVoice fv;
      read(v, "name", fv.name);
      read(v, "descriptor", fv.descriptor);
      c.familiar_voices.push_back(std::move(fv));
    }
  }
  read(doc, "summary_window_ms", c.summary_window_ms);
  if (doc.contains("loop")) {
    std::string loop;
    read(doc, "loop", loop);
    if (loop == "closed") {
      c.loop = FeedbackLoop::Closed;
    } else if (loop == "open") {
      c.loop = FeedbackLoop::Open;
    } else {
      bad("loop must be closed or open");
    }
  }
  read_path(doc, "policies", base_dir, c.policies);
  read_path(doc, "phrases", base_dir, c.phrases);
  read_path(doc, "profiles", base_dir, c.profiles);
  read_path(doc, "face_model", base_dir, c.face_model);
  read_path(doc, "voice_model", base_dir, c.voice_model);

  if (c.summary_window_ms <= 0) bad("summary_window_ms must be positive");
  if (c.training.samples == 0 || c.training.training.hidden == 0) bad("training samples and hidden must be positive");
  if (c.checker.min_repeats < 1) bad("checker.min_repeats must be >= 1");
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  return parse(read_text(path), path.has_parent_path() ? path.parent_path() : fs::path{});
}

std::string RunConfig::encode() const {
  Json doc;
  doc["checker"] = {{"bind_window_ms", checker.bind_window_ms},
                    {"pattern_window_ms", checker.pattern_window_ms},
                    {"min_repeats", checker.min_repeats}};
  Json order = Json::array();
  for (const auto& t : controller.tone_order) order.push_back(to_string(t));
  doc["controller"] = {{"switch_threshold", controller.switch_threshold},
                       {"affect_floor", controller.affect_floor},
                       {"mode", controller.mode == SwitchMode::Autonomous ? "autonomous" : "directive-gated"},
                       {"tone_order", order}};
  Json transports_json = Json::array();
  for (const auto& t : transports) {
    transports_json.push_back({{"kind", std::string(to_string(t.kind))}, {"endpoint", t.endpoint}});
  }
  doc["dispatcher"] = {{"cooldown_ms", cooldown_ms}, {"transports", transports_json}};
  doc["schedule"] = Json::parse(encode_schedule(schedule));
  doc["training"] = {{"learning_rate", training.training.learning_rate},
                     {"epochs", training.training.epochs},
                     {"batch_size", training.training.batch_size},
                     {"seed", training.training.seed},
                     {"hidden", training.training.hidden},
                     {"samples", training.samples}};
  Json voices = Json::array();
  for (const auto& v : familiar_voices) voices.push_back({{"name", v.name}, {"descriptor", v.descriptor}});
  doc["familiar_voices"] = voices;
  doc["summary_window_ms"] = summary_window_ms;
  doc["loop"] = loop == FeedbackLoop::Closed ? "closed" : "open";
  auto put = [&](const char* key, const fs::path& p) {
    if (!p.empty()) doc[key] = p.string();
  };
  put("policies", policies);
  put("phrases", phrases);
  put("profiles", profiles);
  put("face_model", face_model);
  put("voice_model", voice_model);
  return doc.dump(2) + "\n";
}

ControllerConfig effective_controller(const RunConfig& config) {
  ControllerConfig c = config.controller;
  auto pos = std::find(c.tone_order.begin(), c.tone_order.end(), ToneId::female());
  auto insert_at = pos == c.tone_order.end() ? c.tone_order.size()
                                             : static_cast<std::size_t>(pos - c.tone_order.begin()) + 1;
  for (const auto& v : config.familiar_voices) {
    ToneId t = ToneId::familiar(v.name);
    if (std::find(c.tone_order.begin(), c.tone_order.end(), t) != c.tone_order.end()) continue;
    c.tone_order.insert(c.tone_order.begin() + static_cast<std::ptrdiff_t>(insert_at), t);
    ++insert_at;
  }
  for (const auto& t : c.tone_order) {
    if (t.kind != ToneId::Kind::Familiar) continue;
    bool registered = std::any_of(config.familiar_voices.begin(), config.familiar_voices.end(),
                                  [&](const FamiliarVoice& v) { return v.name == t.name; });
    if (!registered) throw InputError("tone " + to_string(t) + " is not a registered familiar voice");
  }
  return c;
}

std::string Transcript::text() const {
  std::string out;
  for (const auto& l : lines) {
    out += l;
    out += '\n';
  }
  return out;
}

Pipeline::Pipeline(const Scenario& scenario, const RunConfig& config, PipelineResources resources,
                   std::vector<std::unique_ptr<Transport>> transports, DataStore* store)
    : scenario_(scenario),
      config_(config),
      resources_(std::move(resources)),
      checker_(resources_.policies, config.checker),
      dispatcher_(DispatcherConfig{config.cooldown_ms, config.checker.min_repeats}, resources_.schedule,
                  std::move(transports), store),
      store_(store),
      tone_(ToneState::make(effective_controller(config), scenario.start_tone)) {}

void Pipeline::add_alert(DispatchResult result) {
  transcript_.lines.push_back(transcript_line(result));
  transcript_.alerts.push_back(std::move(result));
}

void Pipeline::switch_to(Timestamp ts, const ToneState& before, ToneUpdate update, std::string cause) {
  tone_ = std::move(update.state);
  if (!update.switched_to) return;
  transcript_.lines.push_back(std::to_string(ts.millis) + " " + scenario_.child.id + " SWITCH " +
                              to_string(before.current) + "->" + to_string(*update.switched_to) +
                              " cause=" + cause);
  transcript_.switches.push_back({ts, before.current, *update.switched_to, std::move(cause)});
}

void Pipeline::emit_utterance(Timestamp ts, const std::optional<EmotionAssessment>& assessment,
                              const std::optional<AuthorizationDirective>& directive) {
  Utterance u = select_utterance(assessment, directive, tone_, resources_.catalog);
  ++tone_.utterance_count;
  transcript_.lines.push_back(std::to_string(ts.millis) + " " + scenario_.child.id + " UTTER " +
                              std::string(to_string(u.intent)) + " " + to_string(u.tone) + " \"" + u.text +
                              "\"");
  transcript_.utterances.push_back({ts, std::move(u)});
}

void Pipeline::flush_summary(std::size_t channel) {
  SummaryWindow& w = summaries_[channel];
  if (w.acc.count > 0 && store_ != nullptr) {
    PredictionSummary s;
    s.child = scenario_.child;
    s.channel = channel == 0 ? FeatureKind::Face : FeatureKind::Voice;
    s.window_start.millis = w.index * config_.summary_window_ms;
    s.window_end.millis = (w.index + 1) * config_.summary_window_ms;
    s.count = w.acc.count;
    s.mean = mean_of(w.acc.sum, w.acc.count);
    s.dominant = argmax(s.mean);
    store_->record_summary(s);
  }
  w.acc = {};
}

void Pipeline::observe(const EmotionAssessment& a) {
  const std::size_t ch = channel_index(a.channel);
  transcript_.lines.push_back(std::to_string(a.ts.millis) + " " + a.child.id + " ASSESS " +
                              std::string(to_string(a.channel)) + " " + std::string(to_string(a.top)) +
                              " conf=" + fixed6(a.confidence) + " dev=" + fixed6(a.baseline_deviation));
  transcript_.assessments.push_back(a);

  ++transcript_.scored_frames;
  if (a.top == scenario_.segment_at(a.ts).true_emotion) ++transcript_.matched_frames;

  for (std::size_t k = 0; k < kEmotionCount; ++k) baseline_[ch].sum[k] += a.distribution[k];
  ++baseline_[ch].count;

  const std::int64_t window = a.ts.millis / config_.summary_window_ms;
  if (summaries_[ch].index != window) {
    flush_summary(ch);
    summaries_[ch].index = window;
  }
  for (std::size_t k = 0; k < kEmotionCount; ++k) summaries_[ch].acc.sum[k] += a.distribution[k];
  ++summaries_[ch].acc.count;

  if (last_spoken_ != a.top) {
    last_spoken_ = a.top;
    emit_utterance(a.ts, a, std::nullopt);
  }
}

void Pipeline::process(const BehaviorEvent& event) {
  if (finished_) throw InvariantError("pipeline already finished");
  for (auto& released : dispatcher_.advance(event.ts)) add_alert(std::move(released));

  for (auto& output : checker_.ingest(event)) {
    transcript_.lines.push_back(transcript_line(output));
    if (auto* d = std::get_if<AuthorizationDirective>(&output)) {
      transcript_.directives.push_back(*d);
      const ToneState before = tone_;
      switch_to(event.ts, before, on_directive(tone_, *d), directive_cause(*d));
      if (d->outcome == kVoiceModulationOutcome || d->outcome == kCommunicationOutcome) {
        emit_utterance(event.ts, std::nullopt, *d);
      }
    } else {
      const auto& p = std::get<AbnormalPattern>(output);
      transcript_.patterns.push_back(p);
      add_alert(dispatcher_.dispatch(p, event.ts));
    }
  }

  if (const auto* fb = std::get_if<ResponseFeedback>(&event.payload)) {
    const ToneState before = tone_;
    switch_to(event.ts, before, on_feedback(tone_, *fb), "feedback");
  }

  Baselines baselines;
  if (baseline_[0].count > 0) baselines.face = mean_of(baseline_[0].sum, baseline_[0].count);
  if (baseline_[1].count > 0) baselines.voice = mean_of(baseline_[1].sum, baseline_[1].count);
  if (auto a = predict_event(resources_.face_model, resources_.voice_model, event, baselines)) observe(*a);
}

Transcript Pipeline::finish() {
  if (finished_) throw InvariantError("pipeline already finished");
  finished_ = true;
  for (auto& released : dispatcher_.flush_all()) add_alert(std::move(released));
  flush_summary(0);
  flush_summary(1);
  transcript_.lines.push_back(std::to_string(scenario_.duration_ms()) + " " + scenario_.child.id +
                              " SCORE emotion=" + fixed6(transcript_.emotion_score()) +
                              " matched=" + std::to_string(transcript_.matched_frames) +
                              " frames=" + std::to_string(transcript_.scored_frames));
  return transcript_;
}

MlpModel train_channel_model(const SyntheticProfiles& profiles, FeatureKind channel,
                             const ModelTraining& training) {
  const std::uint64_t seed = training.training.seed;
  const bool face = channel == FeatureKind::Face;
  Dataset data = face ? make_face_dataset(profiles, training.samples, kEmotionCount, seed)
                      : make_voice_dataset(profiles, training.samples, kEmotionCount, seed + 1);
  MlpModel init = MlpModel::initialized(face ? kFaceFeatureCount : kVoiceFeatureCount,
                                        training.training.hidden, seed + (face ? 2 : 3));
  return train(std::move(init), data, training.training).model;
}

namespace {

constexpr const char* kRunConfigFile = "run.cfg";
constexpr const char* kScenarioFile = "scenario.json";
constexpr const char* kPoliciesFile = "policies.pol";
constexpr const char* kPhrasesFile = "phrases.tsv";
constexpr const char* kTranscriptFile = "transcript.txt";

PolicySet load_policies(const fs::path& path) {
  PolicySet set = path.empty() ? builtin_policies() : parse_policy_set(read_text(path));
  auto violations = validate_policy_set(set);
  if (!violations.empty()) throw InputError("policies: " + violations.front());
  return set;
}

std::vector<std::unique_ptr<Transport>> live_transports(const RunConfig& config, const fs::path& out_dir,
                                                        std::ostream& console) {
  std::vector<std::unique_ptr<Transport>> out;
  for (const auto& spec : config.transports) {
    switch (spec.kind) {
      case TransportKind::Email:
      case TransportKind::Sms:
        out.push_back(std::make_unique<OutboxTransport>(spec.kind, spec.endpoint, out_dir));
        break;
      case TransportKind::File: {
        fs::path p(spec.endpoint);
        out.push_back(std::make_unique<FileTransport>((p.is_relative() ? out_dir / p : p).string()));
        break;
      }
      case TransportKind::Console:
        out.push_back(std::make_unique<ConsoleTransport>(console));
        break;
    }
  }
  return out;
}

}  // namespace

Transcript run_simulation(const Scenario& scenario, const RunConfig& config, const fs::path& out_dir,
                          std::ostream& console) {
  if (auto problem = scenario.check()) throw InputError("scenario: " + *problem);
  const fs::path data_dir = out_dir / "data";
  if (fs::exists(data_dir) && !fs::is_empty(data_dir)) {
    throw InputError("output directory " + out_dir.string() + " already holds a run");
  }
  if (config.profiles.empty()) throw InputError("run config: no synthetic profiles file given");
  const SyntheticProfiles profiles = load_profiles(config.profiles);

  DataStore store(data_dir);
  PipelineResources res;
  res.policies = load_policies(config.policies);
  res.catalog = config.phrases.empty() ? PhraseCatalog::builtin() : PhraseCatalog::load(config.phrases);
  res.schedule = config.schedule;
  store.save_schedule(res.schedule);
  for (const auto& v : config.familiar_voices) store.register_familiar_voice(v);

  res.face_model = config.face_model.empty() ? train_channel_model(profiles, FeatureKind::Face, config.training)
                                             : load_model_file(config.face_model);
  res.voice_model = config.voice_model.empty()
                        ? train_channel_model(profiles, FeatureKind::Voice, config.training)
                        : load_model_file(config.voice_model);
  store.save_model("face", res.face_model);
  store.save_model("voice", res.voice_model);

  write_text(data_dir / kRunConfigFile, config.encode());
  write_text(data_dir / kScenarioFile, encode_scenario(scenario));
  write_text(data_dir / kPoliciesFile, render_policy_set(res.policies));
  {
    std::string phrases;
    for (Intent intent : {Intent::Praise, Intent::Correction, Intent::Comfort, Intent::Prompt}) {
      for (const auto& p : res.catalog.phrases(intent)) phrases += std::string(to_string(intent)) + "\t" + p + "\n";
    }
    write_text(data_dir / kPhrasesFile, phrases);
  }

  Pipeline pipeline(scenario, config, std::move(res), live_transports(config, out_dir, console), &store);
  StreamGenerator gen(scenario, profiles);
  const ToneId open_loop_tone = scenario.start_tone;
  while (!gen.done()) {
    BehaviorEvent e = gen.next(config.loop == FeedbackLoop::Closed ? pipeline.tone().current : open_loop_tone);
    store.append_event(e);
    pipeline.process(e);
  }
  Transcript t = pipeline.finish();
  write_text(out_dir / kTranscriptFile, t.text());
  return t;
}

Transcript replay_run(const fs::path& run_dir) {
  const fs::path data_dir = run_dir / "data";
  if (!fs::exists(data_dir / kRunConfigFile)) throw InputError("no run found in " + run_dir.string());
  const RunConfig config = RunConfig::parse(read_text(data_dir / kRunConfigFile));
  const Scenario scenario = parse_scenario(read_text(data_dir / kScenarioFile));
  DataStore store(data_dir);

  PipelineResources res;
  res.policies = load_policies(data_dir / kPoliciesFile);
  res.catalog = PhraseCatalog::load(data_dir / kPhrasesFile);
  res.schedule = store.load_schedule();
  res.face_model = store.load_model("face");
  res.voice_model = store.load_model("voice");

  RunConfig replay_config = config;
  replay_config.familiar_voices = store.familiar_voices();

  std::vector<std::unique_ptr<Transport>> transports;
  for (const auto& spec : config.transports) {
    transports.push_back(std::make_unique<MemoryTransport>(spec.kind, spec.endpoint));
  }
  Pipeline pipeline(scenario, replay_config, std::move(res), std::move(transports), nullptr);
  for (const auto& e : store.read_events(scenario.child)) pipeline.process(e);
  return pipeline.finish();
}

}  // namespace smarttoy
