#include "smarttoy/alert_dispatcher.hpp"

#include <algorithm>
#include <fstream>

namespace smarttoy {
namespace fs = std::filesystem;

std::string_view to_string(TransportKind kind) {
  switch (kind) {
    case TransportKind::Email:
      return "email";
    case TransportKind::Sms:
      return "sms";
    case TransportKind::File:
      return "file";
    case TransportKind::Console:
      return "console";
  }
  return "console";
}

std::optional<TransportKind> parse_transport_kind(std::string_view name) {
  for (auto k : {TransportKind::Email, TransportKind::Sms, TransportKind::File, TransportKind::Console}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

OutboxTransport::OutboxTransport(TransportKind kind, std::string endpoint, fs::path outbox_root)
    : kind_(kind), endpoint_(std::move(endpoint)), root_(std::move(outbox_root)) {
  if (kind_ != TransportKind::Email && kind_ != TransportKind::Sms) {
    throw InputError("outbox transport must be email or sms");
  }
}

fs::path OutboxTransport::message_path(const Alert& alert) const {
  return root_ / "outbox" / std::string(to_string(kind_)) /
         (alert.child.id + "-" + std::to_string(alert.ts.millis) + ".msg");
}

bool OutboxTransport::deliver(const Alert& alert) {
  std::error_code ec;
  const fs::path path = message_path(alert);
  fs::create_directories(path.parent_path(), ec);
  if (ec) return false;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) return false;
  out << "To: " << endpoint_ << "\n\n" << alert.message;
  return static_cast<bool>(out.flush());
}

FileTransport::FileTransport(std::string path) : path_(std::move(path)) {}

bool FileTransport::deliver(const Alert& alert) {
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) return false;
  out << alert.message;
  return static_cast<bool>(out.flush());
}

ConsoleTransport::ConsoleTransport(std::ostream& out) : out_(&out) {}

bool ConsoleTransport::deliver(const Alert& alert) {
  *out_ << alert.message;
  return static_cast<bool>(out_->flush());
}

MemoryTransport::MemoryTransport(TransportKind kind, std::string endpoint, bool fail)
    : kind_(kind), endpoint_(std::move(endpoint)), fail_(fail) {}

bool MemoryTransport::deliver(const Alert& alert) {
  if (fail_) return false;
  messages_.push_back(alert.message);
  return true;
}

std::string render_alert_message(const Alert& alert) {
  std::string msg = "ALERT " + std::string(to_string(alert.kind)) + " for child " + alert.child.id + "\n";
  msg += "severity: " + std::string(to_string(alert.severity)) + "\n";
  msg += "detected_at: " + std::to_string(alert.ts.millis) + "\n";
  msg += "count: " + std::to_string(alert.count) + "\n";
  msg += "span_ms: " + std::to_string(alert.span_ms) + "\n";
  msg += "evidence:";
  for (std::size_t i = 0; i < alert.evidence.size(); ++i) {
    msg += (i == 0 ? " " : ",") + std::to_string(alert.evidence[i].millis);
  }
  return msg + "\n";
}

Alert make_alert(const AbnormalPattern& pattern, std::int64_t min_repeats) {
  if (pattern.evidence.empty()) throw InvariantError("abnormal pattern without evidence");
  Alert a;
  a.ts = pattern.ts;
  a.child = pattern.child;
  a.kind = pattern.kind;
  a.severity = pattern.count >= 2 * min_repeats ? Severity::Critical : Severity::Warning;
  a.count = pattern.count;
  a.span_ms = pattern.span_ms;
  a.evidence = pattern.evidence;
  a.message = render_alert_message(a);
  return a;
}

std::string transcript_line(const DispatchResult& result) {
  const AlertRecord& r = result.record;
  Timestamp at = r.dispatched_at.value_or(r.alert.ts);
  if (r.status == DispatchStatus::Delivered && result.release_at) at = *result.release_at;
  std::string line = std::to_string(at.millis) + " " + r.alert.child.id + " ALERT " +
                     std::string(to_string(r.alert.kind)) + " " + std::string(to_string(r.alert.severity)) +
                     " count=" + std::to_string(r.alert.count) + " " + std::string(to_string(r.status));
  if (r.status == DispatchStatus::Queued && result.release_at) {
    line += " until=" + std::to_string(result.release_at->millis);
  } else if (r.status == DispatchStatus::Delivered && result.release_at) {
    line += " queued_from=" + std::to_string(r.alert.ts.millis);
  }
  return line;
}

AlertDispatcher::AlertDispatcher(DispatcherConfig config, Schedule schedule,
                                 std::vector<std::unique_ptr<Transport>> transports, DataStore* store)
    : config_(config), schedule_(std::move(schedule)), transports_(std::move(transports)), store_(store) {
  if (config_.cooldown_ms < 0) throw InputError("dispatcher: cooldown_ms must be >= 0");
  if (auto problem = schedule_.check()) throw InputError("schedule: " + *problem);
}

void AlertDispatcher::record(const AlertRecord& r) {
  if (store_ != nullptr) store_->record_alert(r);
}

DispatchResult AlertDispatcher::deliver(Alert alert, Timestamp at, std::optional<Timestamp> released_from) {
  DispatchResult result;
  result.release_at = released_from;
  result.record.status = DispatchStatus::Delivered;
  for (const auto& t : transports_) {
    result.record.transport_results.push_back({t->label(), t->deliver(alert)});
  }
  if (!result.record.transport_results.empty()) result.record.dispatched_at = at;
  result.record.alert = std::move(alert);
  record(result.record);
  return result;
}

DispatchResult AlertDispatcher::dispatch(const AbnormalPattern& pattern, Timestamp now) {
  Alert alert = make_alert(pattern, config_.min_repeats);
  const auto key = std::make_pair(alert.child, alert.kind);
  auto last = last_accepted_.find(key);
  if (last != last_accepted_.end() && alert.ts.millis - last->second.millis < config_.cooldown_ms) {
    DispatchResult result;
    result.record.alert = std::move(alert);
    result.record.status = DispatchStatus::Suppressed;
    record(result.record);
    return result;
  }
  last_accepted_[key] = alert.ts;

  if (auto until = schedule_.quiet_until(now)) {
    DispatchResult result;
    result.record.alert = alert;
    result.record.status = DispatchStatus::Queued;
    result.release_at = until;
    record(result.record);
    queue_.emplace_back(*until, std::move(alert));
    return result;
  }
  return deliver(std::move(alert), now, std::nullopt);
}

std::vector<DispatchResult> AlertDispatcher::advance(Timestamp now) {
  std::vector<DispatchResult> out;
  std::vector<std::pair<Timestamp, Alert>> keep;
  for (auto& [release, alert] : queue_) {
    if (release <= now) {
      out.push_back(deliver(std::move(alert), release, release));
    } else {
      keep.emplace_back(release, std::move(alert));
    }
  }
  queue_ = std::move(keep);
  return out;
}

std::vector<DispatchResult> AlertDispatcher::flush_all() {
  std::vector<DispatchResult> out;
  for (auto& [release, alert] : queue_) out.push_back(deliver(std::move(alert), release, release));
  queue_.clear();
  return out;
}

}  // namespace smarttoy
