#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "smarttoy/event_model.hpp"

namespace smarttoy {

enum class Severity : std::uint8_t { Warning, Critical };

std::string_view to_string(Severity severity);

struct Alert {
  Timestamp ts;
  ChildId child;
  PatternKind kind = PatternKind::HeadHit;
  Severity severity = Severity::Warning;
  std::int64_t count = 0;
  std::int64_t span_ms = 0;
  std::vector<Timestamp> evidence;
  std::string message;

  friend bool operator==(const Alert&, const Alert&) = default;
};

enum class DispatchStatus : std::uint8_t { Delivered, Suppressed, Queued };

std::string_view to_string(DispatchStatus status);

struct TransportResult {
  std::string transport;  // "email:<endpoint>", "file:<path>", ...
  bool ok = false;

  friend bool operator==(const TransportResult&, const TransportResult&) = default;
};

/// Stored outcome of one abnormal pattern. dispatched_at is set iff at least
/// one transport was attempted.
struct AlertRecord {
  Alert alert;
  DispatchStatus status = DispatchStatus::Delivered;
  std::optional<Timestamp> dispatched_at;
  std::vector<TransportResult> transport_results;

  friend bool operator==(const AlertRecord&, const AlertRecord&) = default;
};

}  // namespace smarttoy
