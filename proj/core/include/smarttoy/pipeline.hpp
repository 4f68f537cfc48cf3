#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "smarttoy/alert_dispatcher.hpp"
#include "smarttoy/checker.hpp"
#include "smarttoy/datastore.hpp"
#include "smarttoy/modulation.hpp"
#include "smarttoy/prediction.hpp"
#include "smarttoy/scenario.hpp"

namespace smarttoy {

struct TransportSpec {
  TransportKind kind = TransportKind::Console;
  std::string endpoint;
};

struct ModelTraining {
  TrainingConfig training;
  std::size_t samples = 600;  // synthetic samples per channel, all six labels
};

/// Run configuration file (JSON). Every field is optional:
///
///   {"checker": {"bind_window_ms": 30000, "pattern_window_ms": 10000, "min_repeats": 3},
///    "controller": {"switch_threshold": 3, "affect_floor": -0.2,
///                   "mode": "autonomous" | "directive-gated",
///                   "tone_order": ["male", "female"]},
///    "dispatcher": {"cooldown_ms": 60000,
///                   "transports": [{"kind": "email", "endpoint": "parent@example.org"}]},
///    "schedule": {"quiet_windows": [[start_ms_of_day, end_ms_of_day]]},
///    "training": {"learning_rate": 0.05, "epochs": 200, "batch_size": 16,
///                 "seed": 1, "hidden": 16, "samples": 600},
///    "familiar_voices": [{"name": "grandma", "descriptor": [26 reals]}],
///    "summary_window_ms": 10000,
///    "loop": "closed" | "open",
///    "policies": "<file>", "phrases": "<file>", "profiles": "<file>",
///    "face_model": "<file>", "voice_model": "<file>"}
///
/// Relative paths resolve against the config file's directory.
struct RunConfig {
  CheckerConfig checker;
  ControllerConfig controller;
  std::int64_t cooldown_ms = 60'000;
  std::vector<TransportSpec> transports = {{TransportKind::Email, "parent@example.org"},
                                           {TransportKind::Sms, "+10000000000"}};
  Schedule schedule;
  ModelTraining training;
  std::vector<FamiliarVoice> familiar_voices;
  std::int64_t summary_window_ms = 10'000;
  FeedbackLoop loop = FeedbackLoop::Closed;
  std::filesystem::path policies;  // empty: built-in policies
  std::filesystem::path phrases;   // empty: built-in catalog
  std::filesystem::path profiles;  // required for simulation
  std::filesystem::path face_model;   // empty: train
  std::filesystem::path voice_model;  // empty: train

  /// Throws InputError on unknown fields or invalid values.
  static RunConfig parse(std::string_view json_text, const std::filesystem::path& base_dir = {});
  static RunConfig load(const std::filesystem::path& path);
  /// Paths are written as given.
  std::string encode() const;
};

/// Tone order with registered familiar voices inserted after Female.
ControllerConfig effective_controller(const RunConfig& config);

struct ToneSwitch {
  Timestamp ts;
  ToneId from;
  ToneId to;
  std::string cause;  // "feedback" or "directive:<policy>"
};

struct SpokenUtterance {
  Timestamp ts;
  Utterance utterance;
};

/// Everything the pipeline produced, in emission order. `lines` is the
/// canonical transcript (`ts child KIND ...`).
struct Transcript {
  std::vector<std::string> lines;
  std::vector<AuthorizationDirective> directives;
  std::vector<AbnormalPattern> patterns;
  std::vector<EmotionAssessment> assessments;
  std::vector<ToneSwitch> switches;
  std::vector<SpokenUtterance> utterances;
  std::vector<DispatchResult> alerts;
  std::uint64_t scored_frames = 0;
  std::uint64_t matched_frames = 0;

  double emotion_score() const {
    return scored_frames == 0 ? 0.0 : static_cast<double>(matched_frames) / static_cast<double>(scored_frames);
  }
  /// Lines joined with '\n', with a trailing newline.
  std::string text() const;
};

struct PipelineResources {
  PolicySet policies;
  PhraseCatalog catalog = PhraseCatalog::builtin();
  MlpModel face_model;
  MlpModel voice_model;
  Schedule schedule;
};

/// Checker, prediction, controller and dispatcher wired in order for one
/// scenario. With a datastore attached, alerts and summaries are recorded.
class Pipeline {
 public:
  Pipeline(const Scenario& scenario, const RunConfig& config, PipelineResources resources,
           std::vector<std::unique_ptr<Transport>> transports, DataStore* store);

  void process(const BehaviorEvent& event);
  /// Flushes queued alerts and pending summaries and appends the score line.
  Transcript finish();

  const ToneState& tone() const { return tone_; }
  const Transcript& transcript() const { return transcript_; }

 private:
  void emit_utterance(Timestamp ts, const std::optional<EmotionAssessment>& assessment,
                      const std::optional<AuthorizationDirective>& directive);
  void switch_to(Timestamp ts, const ToneState& before, ToneUpdate update, std::string cause);
  void add_alert(DispatchResult result);
  void observe(const EmotionAssessment& assessment);
  void flush_summary(std::size_t channel);

  struct Accumulator {
    Distribution sum{};
    std::uint64_t count = 0;
  };
  struct SummaryWindow {
    std::int64_t index = -1;
    Accumulator acc;
  };

  const Scenario& scenario_;
  RunConfig config_;
  PipelineResources resources_;
  Checker checker_;
  AlertDispatcher dispatcher_;
  DataStore* store_;
  ToneState tone_;
  std::array<Accumulator, 2> baseline_{};
  std::array<SummaryWindow, 2> summaries_{};
  std::optional<EmotionLabel> last_spoken_;  // top emotion of the last assessment-driven utterance
  Transcript transcript_;
  bool finished_ = false;
};

/// Trains a fresh model on the synthetic dataset of one channel.
MlpModel train_channel_model(const SyntheticProfiles& profiles, FeatureKind channel,
                             const ModelTraining& training);

/// Runs a scenario end to end into `out_dir`:
///   <out_dir>/data/...          datastore (events, alerts, summaries, models,
///                               schedule, voices) plus the run inputs
///   <out_dir>/outbox/...        email/sms mocks
///   <out_dir>/transcript.txt
/// Throws InputError when `out_dir` already holds a run.
Transcript run_simulation(const Scenario& scenario, const RunConfig& config,
                          const std::filesystem::path& out_dir, std::ostream& console);

/// Re-runs the pipeline over the stored event log of a run directory without
/// side effects and returns the reproduced transcript.
Transcript replay_run(const std::filesystem::path& run_dir);

}  // namespace smarttoy
