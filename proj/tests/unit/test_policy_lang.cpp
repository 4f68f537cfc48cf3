#include <fstream>
#include <sstream>

#include "doctest.h"
#include "generators.hpp"
#include "smarttoy/policy_lang.hpp"

using namespace smarttoy;

namespace {

const PolicyAst& by_name(const PolicySet& set, const std::string& name) {
  for (const auto& p : set) {
    if (p.name == name) return p;
  }
  throw std::runtime_error("missing " + name);
}

SourcePos error_pos(std::string_view src) {
  try {
    parse_policy(src);
  } catch (const PolicyParseError& e) {
    return e.pos();
  }
  FAIL("expected a parse error");
  return {};
}

}  // namespace

TEST_SUITE("policy_lang") {

TEST_CASE("builtin set has five valid policies") {
  const PolicySet set = builtin_policies();
  REQUIRE(set.size() == 5);
  for (std::size_t i = 0; i < set.size(); ++i) {
    CHECK(set[i].name == "Policy" + std::to_string(i + 1));
    CHECK(validate_policy(set[i]).empty());
  }
  CHECK(validate_policy_set(set).empty());
}

TEST_CASE("Policy4 transcription") {
  const PolicySet set = builtin_policies();
  const PolicyAst& p = by_name(set, "Policy4");
  CHECK(p.bindings == std::vector<Binding>{{"MaleVoice", "MV"}, {"FemaleVoice", "FV"}});
  CHECK(p.done.action == "Submit");
  CHECK(p.authorize.outcome == "VoiceModulation");
  CHECK(p.fin.tokens == std::vector<std::string>{"ChildBehaviour"});
  CHECK(p.done.bound_tokens == std::vector<std::string>{"MaleVoice", "FemaleVoice"});
}

TEST_CASE("Policy3 transcription") {
  const PolicySet set = builtin_policies();
  const PolicyAst& p = by_name(set, "Policy3");
  CHECK(p.fin.tokens == std::vector<std::string>{"Energy", "Maintain"});
  CHECK(p.fin.qualifier == "Essential");
  CHECK(p.done.action == "SuccessfulCommunication");
  CHECK(p.authorize.outcome == "Communication");
}

TEST_CASE("Policy1, Policy2 and Policy5 transcription") {
  const PolicySet set = builtin_policies();
  const PolicyAst& p1 = by_name(set, "Policy1");
  CHECK(p1.authorize.outcome == "ApproveForS");
  CHECK(p1.bindings == std::vector<Binding>{{"FaceExpressions", "FE"}, {"Emotions", "E"}});
  const PolicyAst& p2 = by_name(set, "Policy2");
  CHECK(p2.done.args == std::vector<std::string>{"WB", "DB"});
  CHECK(p2.done.action == "Submit");
  const PolicyAst& p5 = by_name(set, "Policy5");
  CHECK(p5.bindings == std::vector<Binding>{{"Learning", "L"}, {"Training", "TR"}});
  CHECK(p5.authorize.outcome == "SmartToyUpdated");
  CHECK(p5.fin.qualifier == "SmartToyUpdates");
}

TEST_CASE("shipped policy file matches the built-in source") {
  std::ifstream in(testsupport::policy_dir() / "builtin.pol");
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str() == builtin_policy_source());
}

TEST_CASE("unbound alias is a validation error, not a parse error") {
  const PolicyAst p =
      parse_policy("policy P { fin(X); bind A as a; all i=0..t=A done(b, Act); authorize+(a, Out); }");
  CHECK(validate_policy(p) == std::vector<std::string>{"unbound alias in done: `b`"});
}

TEST_CASE("duplicate alias and unbound authorize arg") {
  const PolicyAst dup =
      parse_policy("policy P { fin(X); bind A as a; bind B as a; all i=0..t=A done(a, Act); authorize+(a, Out); }");
  CHECK(validate_policy(dup) == std::vector<std::string>{"duplicate alias `a`"});
  const PolicyAst unbound =
      parse_policy("policy P { fin(X); bind A as a; all i=0..t=A done(a, Act); authorize+(z, Out); }");
  CHECK(validate_policy(unbound) == std::vector<std::string>{"unbound alias in authorize: `z`"});
  const PolicyAst lower =
      parse_policy("policy P { fin(X); bind A as a; all i=2..t=A done(a, Act); authorize+(a, Out); }");
  CHECK(validate_policy(lower) == std::vector<std::string>{"done lower bound must be 0, got 2"});
}

TEST_CASE("duplicate policy names in a set") {
  PolicySet set = builtin_policies();
  set.push_back(set.front());
  auto v = validate_policy_set(set);
  REQUIRE(v.size() == 1);
  CHECK(v[0] == "duplicate policy name `Policy1`");
}

TEST_CASE("render is canonical and round-trips") {
  for (const auto& p : builtin_policies()) {
    const std::string text = render_policy(p);
    CHECK(parse_policy(text) == p);
    CHECK(render_policy(parse_policy(text)) == text);
  }
  const PolicySet set = builtin_policies();
  CHECK(parse_policy_set(render_policy_set(set)) == set);
  CHECK(render_policy(by_name(set, "Policy3")).find("  fin(Energy, Maintain: Essential);\n") != std::string::npos);
}

TEST_CASE("three bindings render in order") {
  PolicyAst p;
  p.name = "Three";
  p.fin.tokens = {"S"};
  p.bindings = {{"Alpha", "a"}, {"Beta", "b"}, {"Gamma", "c"}};
  p.done = {0, {"T"}, {"a", "b", "c"}, "Submit"};
  p.authorize = {{"c", "a"}, "Go"};
  const std::string text = render_policy(p);
  const auto a = text.find("bind Alpha as a;");
  const auto b = text.find("bind Beta as b;");
  const auto c = text.find("bind Gamma as c;");
  REQUIRE(a != std::string::npos);
  CHECK(a < b);
  CHECK(b < c);
  CHECK(parse_policy(text) == p);
}

TEST_CASE("whitespace and comments are insignificant") {
  const PolicyAst tight = parse_policy("policy P{fin(X:Q);bind A as a;all i=0..t=A,B done(a,Act);authorize+(a,Out);}");
  const PolicyAst loose = parse_policy(
      "# leading\npolicy   P  {\n fin ( X : Q ) ;  # scope\n\tbind A as a ;\n all i = 0 .. t = A , B\n"
      "  done ( a , Act ) ;\n authorize+ ( a , Out ) ;\n}\n# trailing");
  CHECK(tight == loose);
}

TEST_CASE("keywords are usable as identifiers") {
  const PolicyAst p = parse_policy(
      "policy policy { fin(fin); bind bind as as; all i=0..t=all done(as, done); authorize+(as, authorize); }");
  CHECK(p.name == "policy");
  CHECK(p.bindings == std::vector<Binding>{{"bind", "as"}});
  CHECK(p.authorize.outcome == "authorize");
  CHECK(validate_policy(p).empty());
  CHECK(parse_policy(render_policy(p)) == p);
}

TEST_CASE("parse errors report line, column and expected tokens") {
  const SourcePos pos = error_pos("policy P {\n  fin(X)\n  bind A as a;\n}");
  CHECK(pos.line == 3);
  CHECK(pos.column == 3);
  try {
    parse_policy("policy P { fin(X); bind A as a; all i=0..t=A done(a); authorize+(a, O); }");
    FAIL("expected a parse error");
  } catch (const PolicyParseError& e) {
    CHECK(e.pos().line == 1);
    CHECK(e.expected() == std::vector<std::string>{","});
    CHECK(e.found() == "`)`");
  }
  CHECK_THROWS_AS(parse_policy("policy P { fin(X); bind A as a; all i=0..t=A done(a, D); authorize + (a, O); }"),
                  PolicyParseError);
  CHECK_THROWS_AS(parse_policy("policy P { fin(X); bind A as a; all i=99999999999999999999..t=A done(a, D); authorize+(a, O); }"),
                  PolicyParseError);
  CHECK_THROWS_AS(parse_policy(""), PolicyParseError);
  CHECK_THROWS_AS(parse_policy("policy P { fin(); }"), PolicyParseError);
  CHECK_THROWS_AS(parse_policy("policy 1P { }"), PolicyParseError);
}

TEST_CASE("parse_policy takes exactly one policy, parse_policy_set any number") {
  const std::string one = render_policy(builtin_policies().front());
  CHECK_THROWS_AS(parse_policy(one + one), PolicyParseError);
  CHECK(parse_policy_set("").empty());
  CHECK(parse_policy_set("  # nothing here\n").empty());
  CHECK(parse_policy_set(one + one).size() == 2);
}

TEST_CASE("500 random valid ASTs round-trip") {
  Rng rng(2024);
  for (int i = 0; i < 500; ++i) {
    const PolicyAst p = testsupport::random_policy(rng);
    REQUIRE(validate_policy(p).empty());
    const std::string text = render_policy(p);
    const PolicyAst back = parse_policy(text);
    CHECK(back == p);
    CHECK(render_policy(back) == text);
  }
}

TEST_CASE("parsing is deterministic") {
  const std::string src(builtin_policy_source());
  CHECK(parse_policy_set(src) == parse_policy_set(src));
}

}
