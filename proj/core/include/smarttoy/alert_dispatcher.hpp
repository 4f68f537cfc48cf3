#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "smarttoy/alert_types.hpp"
#include "smarttoy/checker.hpp"
#include "smarttoy/datastore.hpp"

namespace smarttoy {

enum class TransportKind : std::uint8_t { Email, Sms, File, Console };

std::string_view to_string(TransportKind kind);
std::optional<TransportKind> parse_transport_kind(std::string_view name);

/// Delivery endpoint. Implementations see sequential calls only.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual TransportKind kind() const = 0;
  virtual const std::string& endpoint() const = 0;
  /// False when the write failed.
  virtual bool deliver(const Alert& alert) = 0;

  /// "<kind>:<endpoint>", the name stored in transport results.
  std::string label() const { return std::string(to_string(kind())) + ":" + endpoint(); }
};

/// Email/SMS mock: one file per message at
/// `<outbox_root>/outbox/<email|sms>/<child>-<ts>.msg`.
class OutboxTransport final : public Transport {
 public:
  OutboxTransport(TransportKind kind, std::string endpoint, std::filesystem::path outbox_root);
  TransportKind kind() const override { return kind_; }
  const std::string& endpoint() const override { return endpoint_; }
  bool deliver(const Alert& alert) override;
  std::filesystem::path message_path(const Alert& alert) const;

 private:
  TransportKind kind_;
  std::string endpoint_;
  std::filesystem::path root_;
};

/// Appends each message to the file named by the endpoint.
class FileTransport final : public Transport {
 public:
  explicit FileTransport(std::string path);
  TransportKind kind() const override { return TransportKind::File; }
  const std::string& endpoint() const override { return path_; }
  bool deliver(const Alert& alert) override;

 private:
  std::string path_;
};

class ConsoleTransport final : public Transport {
 public:
  explicit ConsoleTransport(std::ostream& out);
  TransportKind kind() const override { return TransportKind::Console; }
  const std::string& endpoint() const override { return endpoint_; }
  bool deliver(const Alert& alert) override;

 private:
  std::ostream* out_;
  std::string endpoint_ = "console";
};

/// Keeps delivered messages in memory; used by tests and side-effect-free replay.
class MemoryTransport final : public Transport {
 public:
  explicit MemoryTransport(TransportKind kind = TransportKind::Console, std::string endpoint = "memory",
                           bool fail = false);
  TransportKind kind() const override { return kind_; }
  const std::string& endpoint() const override { return endpoint_; }
  bool deliver(const Alert& alert) override;
  const std::vector<std::string>& messages() const { return messages_; }

 private:
  TransportKind kind_;
  std::string endpoint_;
  bool fail_;
  std::vector<std::string> messages_;
};

/// Fixed template listing kind, severity, count, span and evidence times.
std::string render_alert_message(const Alert& alert);

/// Severity is Critical iff count >= 2 * min_repeats.
Alert make_alert(const AbnormalPattern& pattern, std::int64_t min_repeats);

struct DispatcherConfig {
  std::int64_t cooldown_ms = 60'000;
  std::int64_t min_repeats = 3;  // r_min, for severity
};

struct DispatchResult {
  AlertRecord record;
  /// Set for queued alerts and for deliveries released from the queue.
  std::optional<Timestamp> release_at;
};

/// `ts child ALERT kind severity count=N status` (ts = dispatch time for
/// deliveries, pattern time otherwise).
std::string transcript_line(const DispatchResult& result);

/// Dedup and schedule gating in front of the transports. Every pattern ends
/// up delivered, suppressed, or queued and later delivered; each outcome is
/// recorded in the datastore when one is attached.
class AlertDispatcher {
 public:
  AlertDispatcher(DispatcherConfig config, Schedule schedule,
                  std::vector<std::unique_ptr<Transport>> transports, DataStore* store = nullptr);

  /// Suppressed when the same (child, kind) was accepted less than the
  /// cooldown ago; queued inside a quiet window; delivered otherwise.
  DispatchResult dispatch(const AbnormalPattern& pattern, Timestamp now);

  /// Delivers queued alerts whose quiet window ended at or before `now`.
  std::vector<DispatchResult> advance(Timestamp now);

  /// Delivers everything still queued, each at its window end.
  std::vector<DispatchResult> flush_all();

  std::size_t queued() const { return queue_.size(); }
  const std::vector<std::unique_ptr<Transport>>& transports() const { return transports_; }

 private:
  DispatchResult deliver(Alert alert, Timestamp at, std::optional<Timestamp> released_from);
  void record(const AlertRecord& record);

  DispatcherConfig config_;
  Schedule schedule_;
  std::vector<std::unique_ptr<Transport>> transports_;
  DataStore* store_;
  std::map<std::pair<ChildId, PatternKind>, Timestamp> last_accepted_;
  std::vector<std::pair<Timestamp, Alert>> queue_;  // release time, alert
};

}  // namespace smarttoy
