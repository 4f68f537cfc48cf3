#include "smarttoy/checker.hpp"

#include <algorithm>

namespace smarttoy {

std::string transcript_line(const CheckerOutput& output) {
  if (const auto* d = std::get_if<AuthorizationDirective>(&output)) {
    std::string line = std::to_string(d->ts.millis) + " " + d->child.id + " DIRECTIVE " +
                       d->policy + " " + d->outcome + " ";
    for (std::size_t i = 0; i < d->args.size(); ++i) {
      if (i > 0) line += ",";
      line += d->args[i].alias + "=" + d->args[i].module;
    }
    return line;
  }
  const auto& p = std::get<AbnormalPattern>(output);
  std::string line = std::to_string(p.ts.millis) + " " + p.child.id + " PATTERN " +
                     std::string(to_string(p.kind)) + " count=" + std::to_string(p.count) +
                     " span_ms=" + std::to_string(p.span_ms) + " evidence=";
  for (std::size_t i = 0; i < p.evidence.size(); ++i) {
    if (i > 0) line += ",";
    line += std::to_string(p.evidence[i].millis);
  }
  return line;
}

ChildChecker::ChildChecker(ChildId child, const PolicySet* policies, CheckerConfig config)
    : child_(std::move(child)),
      policies_(policies),
      config_(config),
      ledger_(policies->size()),
      fired_count_(policies->size(), 0) {}

bool ChildChecker::scope_active(const std::string& scope,
                                const std::optional<std::string>& qualifier) const {
  if (qualifier) return active_scopes_.contains({scope, qualifier});
  auto it = active_scopes_.lower_bound({scope, std::nullopt});
  return it != active_scopes_.end() && it->first == scope;
}

std::optional<Timestamp> ChildChecker::ledger_entry(std::size_t policy_index,
                                                    const std::string& module) const {
  const auto& entries = ledger_.at(policy_index);
  auto it = entries.find(module);
  if (it == entries.end()) return std::nullopt;
  return it->second;
}

std::vector<CheckerOutput> ChildChecker::ingest(const BehaviorEvent& event) {
  if (auto violation = validate_event(event)) throw InputError("invalid event: " + *violation);
  if (event.child != child_) {
    throw InputError("event for child " + event.child.id + " routed to " + child_.id);
  }
  if (newest_ && event.ts < *newest_) {
    throw OrderingError("out-of-order event for child " + child_.id + ": ts " +
                        std::to_string(event.ts.millis) + " after " +
                        std::to_string(newest_->millis));
  }
  newest_ = event.ts;
  prune_window(event.ts);

  std::vector<CheckerOutput> outputs;
  std::optional<PatternKind> pattern_kind;

  if (const auto* scope = std::get_if<ScopeChange>(&event.payload)) {
    if (scope->active) {
      active_scopes_.insert({scope->scope, scope->qualifier});
    } else {
      active_scopes_.erase({scope->scope, scope->qualifier});
    }
  } else if (const auto* done = std::get_if<ModuleDone>(&event.payload)) {
    for (std::size_t p = 0; p < policies_->size(); ++p) {
      const PolicyAst& policy = (*policies_)[p];
      if (done->action != policy.done.action) continue;
      for (const auto& b : policy.bindings) {
        if (b.module == done->module) ledger_[p][b.module] = event.ts;
      }
    }
  } else if (const auto* pattern = std::get_if<PatternEvent>(&event.payload)) {
    pattern_window_.emplace_back(event.ts, pattern->kind);
    pattern_kind = pattern->kind;
  }

  for (std::size_t p = 0; p < policies_->size(); ++p) {
    if (auto directive = evaluate_policy(p, event.ts)) outputs.emplace_back(std::move(*directive));
  }
  if (pattern_kind) {
    if (auto found = detect_kind(*pattern_kind, event.ts)) outputs.emplace_back(std::move(*found));
  }
  return outputs;
}

std::optional<AuthorizationDirective> ChildChecker::evaluate_policy(std::size_t policy_index,
                                                                    Timestamp now) {
  const PolicyAst& policy = policies_->at(policy_index);
  for (const auto& token : policy.fin.tokens) {
    if (!scope_active(token, policy.fin.qualifier)) return std::nullopt;
  }
  auto& entries = ledger_[policy_index];
  for (const auto& b : policy.bindings) {
    auto it = entries.find(b.module);
    if (it == entries.end()) return std::nullopt;
    if (now.millis - it->second.millis > config_.bind_window_ms) return std::nullopt;
  }

  entries.clear();
  AuthorizationDirective d;
  d.ts = now;
  d.child = child_;
  d.policy = policy.name;
  d.outcome = policy.authorize.outcome;
  d.bound_tokens = policy.done.bound_tokens;
  for (const auto& alias : policy.authorize.args) {
    d.args.push_back(*policy.find_binding(alias));
  }
  d.fired_count = ++fired_count_[policy_index];
  return d;
}

void ChildChecker::prune_window(Timestamp now) {
  while (!pattern_window_.empty() &&
         now.millis - pattern_window_.front().first.millis > config_.pattern_window_ms) {
    pattern_window_.pop_front();
  }
}

std::optional<AbnormalPattern> ChildChecker::detect_kind(PatternKind kind, Timestamp now) const {
  AbnormalPattern found;
  for (const auto& [ts, k] : pattern_window_) {
    if (k != kind || ts > now || now.millis - ts.millis > config_.pattern_window_ms) continue;
    found.evidence.push_back(ts);
  }
  found.count = static_cast<std::int64_t>(found.evidence.size());
  if (found.count < config_.min_repeats || found.evidence.empty()) return std::nullopt;
  found.ts = now;
  found.child = child_;
  found.kind = kind;
  found.span_ms = found.evidence.back().millis - found.evidence.front().millis;
  return found;
}

std::vector<AbnormalPattern> ChildChecker::detect_patterns(Timestamp now) const {
  std::vector<AbnormalPattern> out;
  for (PatternKind kind : kAllPatternKinds) {
    if (auto found = detect_kind(kind, now)) out.push_back(std::move(*found));
  }
  return out;
}

Checker::Checker(PolicySet policies, CheckerConfig config)
    : policies_(std::move(policies)), config_(config) {
  auto violations = validate_policy_set(policies_);
  if (!violations.empty()) throw InputError("invalid policy set: " + violations.front());
  if (config_.bind_window_ms < 0 || config_.pattern_window_ms < 0 || config_.min_repeats < 1) {
    throw InputError("invalid checker config: windows must be >= 0 and min_repeats >= 1");
  }
}

std::vector<CheckerOutput> Checker::ingest(const BehaviorEvent& event) {
  if (event.child.id.empty()) throw InputError("invalid event: child: must be non-empty");
  auto it = children_.find(event.child);
  if (it == children_.end()) {
    if (auto violation = validate_event(event)) throw InputError("invalid event: " + *violation);
    it = children_.emplace(event.child, ChildChecker(event.child, &policies_, config_)).first;
  }
  return it->second.ingest(event);
}

const ChildChecker* Checker::state(const ChildId& child) const {
  auto it = children_.find(child);
  return it == children_.end() ? nullptr : &it->second;
}

}  // namespace smarttoy
