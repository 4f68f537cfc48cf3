#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "smarttoy/event_model.hpp"
#include "smarttoy/policy_lang.hpp"

namespace smarttoy {

struct CheckerConfig {
  std::int64_t bind_window_ms = 30'000;     // freshness of a ModuleDone
  std::int64_t pattern_window_ms = 10'000;  // pattern window
  std::int64_t min_repeats = 3;             // r_min
};

/// Emitted when a policy's scope gate is open and every bound module has
/// freshly reported the policy's done action.
struct AuthorizationDirective {
  Timestamp ts;
  ChildId child;
  std::string policy;
  std::vector<Binding> args;  // authorize args in order, alias -> module
  std::string outcome;
  std::vector<std::string> bound_tokens;  // `t=` list, carried for traceability
  std::uint64_t fired_count = 0;          // 1 on the first firing

  friend bool operator==(const AuthorizationDirective&, const AuthorizationDirective&) = default;
};

/// r_min or more same-kind physical events inside one pattern window.
struct AbnormalPattern {
  Timestamp ts;
  ChildId child;
  PatternKind kind = PatternKind::HeadHit;
  std::int64_t count = 0;
  std::int64_t span_ms = 0;          // newest minus oldest evidence ts
  std::vector<Timestamp> evidence;  // ts of the counted events, ascending

  friend bool operator==(const AbnormalPattern&, const AbnormalPattern&) = default;
};

using CheckerOutput = std::variant<AuthorizationDirective, AbnormalPattern>;

/// `ts child DIRECTIVE policy outcome alias=module,...` or
/// `ts child PATTERN kind count=N span_ms=S evidence=t1,t2,...`.
std::string transcript_line(const CheckerOutput& output);

/// Checker state for a single child. Copyable value; not thread-safe.
class ChildChecker {
 public:
  ChildChecker(ChildId child, const PolicySet* policies, CheckerConfig config);

  /// Rejects invalid events, foreign children and out-of-order timestamps
  /// (InputError / OrderingError); the state is unchanged on rejection.
  std::vector<CheckerOutput> ingest(const BehaviorEvent& event);

  /// Fires the policy when its gate is open and every binding is fresh.
  /// Clears the policy's ledger on firing.
  std::optional<AuthorizationDirective> evaluate_policy(std::size_t policy_index, Timestamp now);

  /// One report per kind with >= r_min events in [now - pattern_window_ms, now].
  std::vector<AbnormalPattern> detect_patterns(Timestamp now) const;

  const ChildId& child() const { return child_; }
  std::optional<Timestamp> newest() const { return newest_; }
  std::uint64_t fired_count(std::size_t policy_index) const { return fired_count_.at(policy_index); }
  bool scope_active(const std::string& scope, const std::optional<std::string>& qualifier) const;
  /// Ledger entry for `module` under the given policy, if any.
  std::optional<Timestamp> ledger_entry(std::size_t policy_index, const std::string& module) const;
  const std::deque<std::pair<Timestamp, PatternKind>>& pattern_window() const {
    return pattern_window_;
  }

 private:
  std::optional<AbnormalPattern> detect_kind(PatternKind kind, Timestamp now) const;
  void prune_window(Timestamp now);

  ChildId child_;
  const PolicySet* policies_;
  CheckerConfig config_;
  std::optional<Timestamp> newest_;
  std::set<std::pair<std::string, std::optional<std::string>>> active_scopes_;
  std::vector<std::map<std::string, Timestamp>> ledger_;  // per policy: module -> ts
  std::deque<std::pair<Timestamp, PatternKind>> pattern_window_;
  std::vector<std::uint64_t> fired_count_;
};

/// Routes events to lazily created per-child checkers. Different children
/// are independent; one child's events must be ingested sequentially.
class Checker {
 public:
  /// Throws InputError when the policy set does not validate.
  Checker(PolicySet policies, CheckerConfig config = {});

  Checker(const Checker&) = delete;
  Checker& operator=(const Checker&) = delete;

  std::vector<CheckerOutput> ingest(const BehaviorEvent& event);

  const PolicySet& policies() const { return policies_; }
  const CheckerConfig& config() const { return config_; }
  /// Nullptr until the child's first event.
  const ChildChecker* state(const ChildId& child) const;

 private:
  PolicySet policies_;
  CheckerConfig config_;
  std::map<ChildId, ChildChecker> children_;
};

}  // namespace smarttoy
