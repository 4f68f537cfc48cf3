#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "smarttoy/error.hpp"

namespace smarttoy {

// Concrete syntax (whitespace insignificant, `#` starts a line comment):
//
//   policyset = { policy } ;
//   policy    = "policy" IDENT "{" fin { bind } done then "}" ;
//   fin       = "fin" "(" IDENT { "," IDENT } [ ":" IDENT ] ")" ";" ;
//   bind      = "bind" IDENT "as" IDENT ";" ;
//   done      = "all" "i" "=" INT ".." "t" "=" IDENT { "," IDENT }
//               "done" "(" IDENT { "," IDENT } "," IDENT ")" ";" ;
//   then      = "authorize+" "(" IDENT { "," IDENT } "," IDENT ")" ";" ;
//
// Keywords are contextual: any keyword may also appear where an IDENT is
// expected.

struct FinScope {
  std::vector<std::string> tokens;
  std::optional<std::string> qualifier;
  friend bool operator==(const FinScope&, const FinScope&) = default;
};

struct Binding {
  std::string module;
  std::string alias;
  friend bool operator==(const Binding&, const Binding&) = default;
};

struct DoneClause {
  std::int64_t lower = 0;
  std::vector<std::string> bound_tokens;  // the `t=` list, stored verbatim
  std::vector<std::string> args;
  std::string action;
  friend bool operator==(const DoneClause&, const DoneClause&) = default;
};

struct AuthorizeClause {
  std::vector<std::string> args;
  std::string outcome;
  friend bool operator==(const AuthorizeClause&, const AuthorizeClause&) = default;
};

struct PolicyAst {
  std::string name;
  FinScope fin;
  std::vector<Binding> bindings;
  DoneClause done;
  AuthorizeClause authorize;

  /// Binding for `alias`, or nullptr.
  const Binding* find_binding(std::string_view alias) const;

  friend bool operator==(const PolicyAst&, const PolicyAst&) = default;
};

using PolicySet = std::vector<PolicyAst>;

struct SourcePos {
  std::size_t offset = 0;
  std::size_t line = 1;    // 1-based
  std::size_t column = 1;  // 1-based, in bytes
};

class PolicyParseError : public InputError {
 public:
  PolicyParseError(SourcePos pos, std::vector<std::string> expected, std::string found);

  const SourcePos& pos() const noexcept { return pos_; }
  const std::vector<std::string>& expected() const noexcept { return expected_; }
  const std::string& found() const noexcept { return found_; }

 private:
  SourcePos pos_;
  std::vector<std::string> expected_;
  std::string found_;
};

/// Parses exactly one policy; trailing input other than whitespace or
/// comments is an error.
PolicyAst parse_policy(std::string_view src);

PolicySet parse_policy_set(std::string_view src);

/// Empty iff the policy is valid.
std::vector<std::string> validate_policy(const PolicyAst& ast);

/// Per-policy violations (prefixed with the policy name) plus duplicate names.
std::vector<std::string> validate_policy_set(const PolicySet& set);

/// Canonical text: one clause per line, two-space indent, ", " separators.
std::string render_policy(const PolicyAst& ast);

/// Policies separated by a blank line.
std::string render_policy_set(const PolicySet& set);

/// Source text of the five shipped policies.
std::string_view builtin_policy_source();

PolicySet builtin_policies();

}  // namespace smarttoy
