#include "smarttoy/policy_lang.hpp"

#include <charconv>
#include <set>

namespace smarttoy {
namespace {

enum class Tok {
  Ident,
  Int,
  LBrace,
  RBrace,
  LParen,
  RParen,
  Comma,
  Semi,
  Colon,
  Equals,
  DotDot,
  AuthorizePlus,
  End
};

struct Token {
  Tok kind = Tok::End;
  std::string_view text;
  SourcePos pos;
};

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}
bool is_alpha(char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z'); }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::string describe(const Token& t) {
  if (t.kind == Tok::End) return "end of input";
  return "`" + std::string(t.text) + "`";
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    skip_trivia();
    Token t;
    t.pos = pos_;
    if (pos_.offset >= src_.size()) return t;

    const std::size_t start = pos_.offset;
    const char c = src_[start];
    if (is_alpha(c)) {
      std::size_t end = start + 1;
      while (end < src_.size() && (is_alpha(src_[end]) || is_digit(src_[end]) || src_[end] == '_')) {
        ++end;
      }
      t.kind = Tok::Ident;
      if (src_.substr(start, end - start) == "authorize" && end < src_.size() && src_[end] == '+') {
        t.kind = Tok::AuthorizePlus;
        ++end;
      }
      return finish(t, end);
    }
    if (is_digit(c)) {
      std::size_t end = start + 1;
      while (end < src_.size() && is_digit(src_[end])) ++end;
      t.kind = Tok::Int;
      return finish(t, end);
    }
    switch (c) {
      case '{': t.kind = Tok::LBrace; return finish(t, start + 1);
      case '}': t.kind = Tok::RBrace; return finish(t, start + 1);
      case '(': t.kind = Tok::LParen; return finish(t, start + 1);
      case ')': t.kind = Tok::RParen; return finish(t, start + 1);
      case ',': t.kind = Tok::Comma; return finish(t, start + 1);
      case ';': t.kind = Tok::Semi; return finish(t, start + 1);
      case ':': t.kind = Tok::Colon; return finish(t, start + 1);
      case '=': t.kind = Tok::Equals; return finish(t, start + 1);
      case '.':
        if (start + 1 < src_.size() && src_[start + 1] == '.') {
          t.kind = Tok::DotDot;
          return finish(t, start + 2);
        }
        break;
      default:
        break;
    }
    throw PolicyParseError(pos_, {"token"}, "character `" + std::string(1, c) + "`");
  }

 private:
  Token finish(Token t, std::size_t end) {
    t.text = src_.substr(t.pos.offset, end - t.pos.offset);
    advance_to(end);
    return t;
  }

  void advance_to(std::size_t end) {
    while (pos_.offset < end) {
      if (src_[pos_.offset] == '\n') {
        ++pos_.line;
        pos_.column = 1;
      } else {
        ++pos_.column;
      }
      ++pos_.offset;
    }
  }

  void skip_trivia() {
    while (pos_.offset < src_.size()) {
      const char c = src_[pos_.offset];
      if (is_space(c)) {
        advance_to(pos_.offset + 1);
      } else if (c == '#') {
        std::size_t end = src_.find('\n', pos_.offset);
        advance_to(end == std::string_view::npos ? src_.size() : end);
      } else {
        return;
      }
    }
  }

  std::string_view src_;
  SourcePos pos_;
};

// LL(1) recursive descent over a one-token lookahead.
class Parser {
 public:
  explicit Parser(std::string_view src) : lexer_(src) { advance(); }

  bool at_end() const { return cur_.kind == Tok::End; }

  void expect_end() {
    if (!at_end()) fail({"end of input"});
  }

  PolicyAst policy() {
    PolicyAst ast;
    keyword("policy", {"policy"});
    ast.name = ident();
    expect(Tok::LBrace, "{");
    ast.fin = fin();
    while (true) {
      if (is_keyword("bind")) {
        ast.bindings.push_back(bind());
      } else if (is_keyword("all")) {
        break;
      } else {
        fail({"bind", "all"});
      }
    }
    ast.done = done();
    ast.authorize = authorize();
    expect(Tok::RBrace, "}");
    return ast;
  }

 private:
  FinScope fin() {
    FinScope scope;
    keyword("fin", {"fin"});
    expect(Tok::LParen, "(");
    scope.tokens.push_back(ident());
    while (true) {
      if (cur_.kind == Tok::Comma) {
        advance();
        scope.tokens.push_back(ident());
      } else if (cur_.kind == Tok::Colon) {
        advance();
        scope.qualifier = ident();
        expect(Tok::RParen, ")");
        break;
      } else if (cur_.kind == Tok::RParen) {
        advance();
        break;
      } else {
        fail({",", ":", ")"});
      }
    }
    expect(Tok::Semi, ";");
    return scope;
  }

  Binding bind() {
    Binding b;
    keyword("bind", {"bind"});
    b.module = ident();
    keyword("as", {"as"});
    b.alias = ident();
    expect(Tok::Semi, ";");
    return b;
  }

  DoneClause done() {
    DoneClause clause;
    keyword("all", {"all"});
    keyword("i", {"i"});
    expect(Tok::Equals, "=");
    clause.lower = integer();
    expect(Tok::DotDot, "..");
    keyword("t", {"t"});
    expect(Tok::Equals, "=");
    clause.bound_tokens.push_back(ident());
    while (cur_.kind == Tok::Comma) {
      advance();
      clause.bound_tokens.push_back(ident());
    }
    if (!is_keyword("done")) fail({",", "done"});
    advance();
    auto [args, action] = call_args();
    clause.args = std::move(args);
    clause.action = std::move(action);
    expect(Tok::Semi, ";");
    return clause;
  }

  AuthorizeClause authorize() {
    AuthorizeClause clause;
    expect(Tok::AuthorizePlus, "authorize+");
    auto [args, outcome] = call_args();
    clause.args = std::move(args);
    clause.outcome = std::move(outcome);
    expect(Tok::Semi, ";");
    return clause;
  }

  // "(" IDENT { "," IDENT } "," IDENT ")": the last identifier is split off.
  std::pair<std::vector<std::string>, std::string> call_args() {
    expect(Tok::LParen, "(");
    std::vector<std::string> items;
    items.push_back(ident());
    while (true) {
      if (cur_.kind == Tok::Comma) {
        advance();
        items.push_back(ident());
      } else if (cur_.kind == Tok::RParen && items.size() >= 2) {
        advance();
        break;
      } else if (items.size() >= 2) {
        fail({",", ")"});
      } else {
        fail({","});
      }
    }
    std::string last = std::move(items.back());
    items.pop_back();
    return {std::move(items), std::move(last)};
  }

  std::string ident() {
    if (cur_.kind != Tok::Ident) fail({"identifier"});
    std::string s(cur_.text);
    advance();
    return s;
  }

  std::int64_t integer() {
    if (cur_.kind != Tok::Int) fail({"integer"});
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(cur_.text.data(), cur_.text.data() + cur_.text.size(), value);
    if (ec != std::errc{}) fail({"integer within 64-bit range"});
    advance();
    return value;
  }

  bool is_keyword(std::string_view word) const {
    return cur_.kind == Tok::Ident && cur_.text == word;
  }

  void keyword(std::string_view word, std::vector<std::string> expected) {
    if (!is_keyword(word)) fail(std::move(expected));
    advance();
  }

  void expect(Tok kind, std::string_view spelling) {
    if (cur_.kind != kind) fail({std::string(spelling)});
    advance();
  }

  [[noreturn]] void fail(std::vector<std::string> expected) const {
    throw PolicyParseError(cur_.pos, std::move(expected), describe(cur_));
  }

  void advance() { cur_ = lexer_.next(); }

  Lexer lexer_;
  Token cur_;
};

void join(std::string& out, const std::vector<std::string>& items) {
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += ", ";
    out += items[i];
  }
}

constexpr std::string_view kBuiltinSource = R"(# Behavioral authorization policies for the smart toy.
# Outcome names with spaces are written in CamelCase (Approve for S -> ApproveForS).

policy Policy1 {
  fin(SmartToy);
  bind FaceExpressions as FE;
  bind Emotions as E;
  all i=0..t=Expressions, Emotions done(FE, E, Submit);
  authorize+(FE, E, ApproveForS);
}

policy Policy2 {
  fin(SmartToy);
  bind WalkingBehaviour as WB;
  bind Database as DB;
  all i=0..t=WalkingBehaviour done(WB, DB, Submit);
  authorize+(WB, DB, ApproveForS);
}

policy Policy3 {
  fin(Energy, Maintain: Essential);
  bind Voice as V;
  bind Modulation as M;
  all i=0..t=Matching done(V, M, SuccessfulCommunication);
  authorize+(V, M, Communication);
}

policy Policy4 {
  fin(ChildBehaviour);
  bind MaleVoice as MV;
  bind FemaleVoice as FV;
  all i=0..t=MaleVoice, FemaleVoice done(MV, FV, Submit);
  authorize+(MV, FV, VoiceModulation);
}

policy Policy5 {
  fin(Learning, Training: SmartToyUpdates);
  bind Learning as L;
  bind Training as TR;
  all i=0..t=Fulfilled done(L, TR, UpdatedSmartToy);
  authorize+(L, TR, SmartToyUpdated);
}
)";

}  // namespace

PolicyParseError::PolicyParseError(SourcePos pos, std::vector<std::string> expected,
                                   std::string found)
    : InputError([&] {
        std::string msg = "policy parse error at " + std::to_string(pos.line) + ":" +
                          std::to_string(pos.column) + ": expected ";
        for (std::size_t i = 0; i < expected.size(); ++i) {
          if (i > 0) msg += i + 1 == expected.size() ? " or " : ", ";
          msg += "`" + expected[i] + "`";
        }
        return msg + ", found " + found;
      }()),
      pos_(pos),
      expected_(std::move(expected)),
      found_(std::move(found)) {}

const Binding* PolicyAst::find_binding(std::string_view alias) const {
  for (const auto& b : bindings) {
    if (b.alias == alias) return &b;
  }
  return nullptr;
}

PolicyAst parse_policy(std::string_view src) {
  Parser parser(src);
  PolicyAst ast = parser.policy();
  parser.expect_end();
  return ast;
}

PolicySet parse_policy_set(std::string_view src) {
  Parser parser(src);
  PolicySet set;
  while (!parser.at_end()) set.push_back(parser.policy());
  return set;
}

std::vector<std::string> validate_policy(const PolicyAst& ast) {
  std::vector<std::string> violations;
  if (ast.bindings.empty()) violations.emplace_back("no bindings");
  std::set<std::string> seen;
  for (const auto& b : ast.bindings) {
    if (!seen.insert(b.alias).second) violations.push_back("duplicate alias `" + b.alias + "`");
  }
  if (ast.done.lower != 0) {
    violations.push_back("done lower bound must be 0, got " + std::to_string(ast.done.lower));
  }
  for (const auto& a : ast.done.args) {
    if (!seen.contains(a)) violations.push_back("unbound alias in done: `" + a + "`");
  }
  for (const auto& a : ast.authorize.args) {
    if (!seen.contains(a)) violations.push_back("unbound alias in authorize: `" + a + "`");
  }
  return violations;
}

std::vector<std::string> validate_policy_set(const PolicySet& set) {
  std::vector<std::string> violations;
  std::set<std::string> names;
  for (const auto& p : set) {
    if (!names.insert(p.name).second) violations.push_back("duplicate policy name `" + p.name + "`");
    for (auto& v : validate_policy(p)) violations.push_back(p.name + ": " + v);
  }
  return violations;
}

std::string render_policy(const PolicyAst& ast) {
  std::string out = "policy " + ast.name + " {\n  fin(";
  join(out, ast.fin.tokens);
  if (ast.fin.qualifier) out += ": " + *ast.fin.qualifier;
  out += ");\n";
  for (const auto& b : ast.bindings) out += "  bind " + b.module + " as " + b.alias + ";\n";
  out += "  all i=" + std::to_string(ast.done.lower) + "..t=";
  join(out, ast.done.bound_tokens);
  out += " done(";
  join(out, ast.done.args);
  out += ", " + ast.done.action + ");\n  authorize+(";
  join(out, ast.authorize.args);
  out += ", " + ast.authorize.outcome + ");\n}\n";
  return out;
}

std::string render_policy_set(const PolicySet& set) {
  std::string out;
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (i > 0) out += "\n";
    out += render_policy(set[i]);
  }
  return out;
}

std::string_view builtin_policy_source() { return kBuiltinSource; }

PolicySet builtin_policies() { return parse_policy_set(kBuiltinSource); }

}  // namespace smarttoy
