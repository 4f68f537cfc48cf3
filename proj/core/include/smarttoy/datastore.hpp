#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "smarttoy/alert_types.hpp"
#include "smarttoy/event_model.hpp"
#include "smarttoy/prediction.hpp"

namespace smarttoy {

inline constexpr std::int64_t kMillisPerDay = 86'400'000;

/// Quiet hours during which alerts are queued instead of dispatched.
/// Windows are [start, end) in milliseconds of the simulated day.
struct Schedule {
  std::vector<std::pair<std::int64_t, std::int64_t>> quiet_windows;

  /// Nullopt when 0 <= start < end <= 86 400 000 and windows do not overlap.
  std::optional<std::string> check() const;

  /// Absolute end of the quiet window containing `now`, if any.
  std::optional<Timestamp> quiet_until(Timestamp now) const;

  friend bool operator==(const Schedule&, const Schedule&) = default;
};

struct FamiliarVoice {
  std::string name;
  std::vector<double> descriptor;  // 26-value voice signature

  friend bool operator==(const FamiliarVoice&, const FamiliarVoice&) = default;
};

/// Aggregated assessments of one channel over one time window.
struct PredictionSummary {
  ChildId child;
  FeatureKind channel = FeatureKind::Face;
  Timestamp window_start;
  Timestamp window_end;  // exclusive
  std::uint64_t count = 0;
  Distribution mean{};
  EmotionLabel dominant = EmotionLabel::Neutral;

  friend bool operator==(const PredictionSummary&, const PredictionSummary&) = default;
};

void save_model_file(const std::filesystem::path& path, const MlpModel& model);
/// Throws InputError on a missing, malformed or version-mismatched file.
MlpModel load_model_file(const std::filesystem::path& path);

std::string encode_schedule(const Schedule& schedule);
Schedule decode_schedule(std::string_view text);

/// Plain-file store rooted at one directory:
///
///   <root>/<child>/events.log      one encoded event per line, append-only
///   <root>/<child>/alerts.log      one AlertRecord per line
///   <root>/<child>/summaries.log   one PredictionSummary per line
///   <root>/models/<name>.model
///   <root>/schedule.cfg
///   <root>/voices.cfg
///
/// Single writer per child. Every record is written as one whole line.
class DataStore {
 public:
  /// Creates the root directory when missing.
  explicit DataStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  /// Throws OrderingError when `event` is older than the child's newest
  /// stored event, InputError when it is invalid.
  void append_event(const BehaviorEvent& event);

  /// Stored events with t0 <= ts <= t1 in log order.
  std::vector<BehaviorEvent> query_window(const ChildId& child, Timestamp t0, Timestamp t1) const;
  std::vector<BehaviorEvent> read_events(const ChildId& child) const;
  /// Children with an event log, sorted.
  std::vector<ChildId> children() const;

  void save_model(const std::string& name, const MlpModel& model) const;
  MlpModel load_model(const std::string& name) const;
  std::filesystem::path model_path(const std::string& name) const;

  /// Returns the record id (0-based position in the child's alert log).
  std::size_t record_alert(const AlertRecord& record);
  std::vector<AlertRecord> read_alerts(const ChildId& child) const;
  /// Throws InputError for an unknown id.
  AlertRecord read_alert(const ChildId& child, std::size_t id) const;

  void record_summary(const PredictionSummary& summary);
  std::vector<PredictionSummary> read_summaries(const ChildId& child) const;

  /// Throws InputError on a duplicate name or a descriptor that is not 26
  /// finite values.
  void register_familiar_voice(const FamiliarVoice& voice);
  std::vector<FamiliarVoice> familiar_voices() const;

  void save_schedule(const Schedule& schedule) const;
  /// Empty schedule when no file exists.
  Schedule load_schedule() const;

 private:
  std::filesystem::path child_dir(const ChildId& child) const;
  void append_line(const std::filesystem::path& path, const std::string& line) const;

  std::filesystem::path root_;
  std::map<ChildId, Timestamp> newest_;
  std::map<ChildId, std::size_t> alert_counts_;
};

}  // namespace smarttoy
