#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "ptss/format.hpp"
#include "ptss/parser.hpp"

using namespace ptss;

namespace {

std::string slurp(const std::string& name) {
  std::ifstream in(std::string(PTSS_TEST_DATA) + "/" + name);
  REQUIRE(in);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

const RuleSchema& rule_named(const SpecAst& spec, const std::string& name) {
  for (const auto& r : spec.rules) {
    if (r.name == name) return r;
  }
  REQUIRE(false);
  return spec.rules.front();
}

RuleVerdict verdict_for(const FormatReport& report, const std::string& rule) {
  for (const auto& v : report.rules) {
    if (v.rule == rule) return v;
  }
  REQUIRE(false);
  return {};
}

// Brute-force cycle oracle: rebuilds the dependency edges from the rule and
// decides cycle-freeness by transitive closure.
bool acyclic_oracle(const RuleSchema& rule) {
  std::set<std::string> vars;
  std::map<std::string, std::set<std::string>> edge;
  auto link = [&](const std::set<std::string>& from, const std::string& to) {
    for (const auto& v : from) {
      edge[v].insert(to);
      vars.insert(v);
      vars.insert(to);
    }
  };
  for (const auto& p : rule.positives) link(p.source->all_vars(), p.target);
  for (const auto& fa : rule.foralls) {
    if (fa.positive) link(fa.source->all_vars(), fa.target);
  }
  for (const auto& q : rule.quants) {
    std::set<std::string> theta = q.dist->all_vars();
    if (q.dist->kind() == TermKind::CombineRef) {
      for (const auto& cb : rule.combines) {
        if (cb.sym == q.dist->name()) theta.insert(cb.family_var);
      }
    }
    std::set<std::string> ys;
    if (q.set.is_set_var) {
      for (const auto& fa : rule.foralls) {
        if (fa.set_var == q.set.set_var) ys.insert(fa.binder);
      }
    } else {
      for (const auto& e : q.set.elements) {
        auto vs = e->all_vars();
        ys.insert(vs.begin(), vs.end());
      }
    }
    for (const auto& y : ys) link(theta, y);
  }
  // reach[v] grows to a fixpoint; a cycle shows as v reaching itself.
  std::map<std::string, std::set<std::string>> reach = edge;
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& v : vars) {
      for (const auto& w : std::set<std::string>(reach[v])) {
        for (const auto& u : reach[w]) {
          if (reach[v].insert(u).second) changed = true;
        }
      }
    }
  }
  for (const auto& v : vars) {
    if (reach[v].count(v)) return false;
  }
  return true;
}

// Literal expansion of the linearity clauses, used as a differential oracle.
bool linear_oracle(const TermPtr& theta, const std::set<std::string>& vars) {
  if (theta->kind() == TermKind::DistVar || theta->kind() == TermKind::CombineRef) {
    return true;
  }
  if (theta->closed()) return true;
  if (theta->kind() == TermKind::Dirac) {
    return theta->args()[0]->kind() == TermKind::StateVar;
  }
  if (theta->kind() == TermKind::ConvexSum) {
    for (const auto& a : theta->args()) {
      if (!linear_oracle(a, vars)) return false;
    }
    return true;
  }
  if (theta->kind() == TermKind::LiftedApp) {
    for (const auto& a : theta->args()) {
      if (!linear_oracle(a, vars)) return false;
    }
    for (size_t i = 0; i < theta->args().size(); ++i) {
      for (size_t j = 0; j < theta->args().size(); ++j) {
        if (i == j) continue;
        for (const auto& v : theta->args()[i]->all_vars()) {
          if (vars.count(v) && theta->args()[j]->all_vars().count(v)) {
            return false;
          }
        }
      }
    }
    return true;
  }
  return false;
}

}  // namespace

TEST_CASE("well-foundedness") {
  SpecAst base = parse_spec(slurp("base_pa.ptss"));
  auto [ok, witness] = check_well_founded(rule_named(base, "plusl@a"));
  CHECK(ok);
  CHECK(check_well_founded(rule_named(base, "prefix@a")).first);

  // Three-edge cycle: mu2 -> mu (premise source), mu -> y (measured set),
  // y -> mu2 (per-element block).
  std::string text =
      "spec cyc actions a, b op 0 : -> S op f : S -> S op g3 : D -> S\n"
      "rule r:\n"
      "  g3(mu2) -a-> mu\n"
      "  mu(Y) > 0\n"
      "  forall y in Y: y -b-> mu2\n"
      "  => f(x) -a-> dirac(0)\n";
  SpecAst cyc = parse_spec(text);
  auto [bad, cycle] = check_well_founded(rule_named(cyc, "r"));
  CHECK_FALSE(bad);
  CHECK(!cycle.empty());
  CHECK_FALSE(acyclic_oracle(rule_named(cyc, "r")));
}

TEST_CASE("well-foundedness agrees with the closure oracle on the corpus") {
  for (const char* file :
       {"base_pa.ptss", "eq1.ptss", "eq2.ptss", "eq3.ptss", "eq4.ptss",
        "eq5.ptss", "eq6.ptss", "eq7.ptss", "conforming.ptss",
        "negcycle.ptss"}) {
    SpecAst spec = parse_spec_lenient(slurp(file));
    for (const auto& rule : spec.rules) {
      CHECK(check_well_founded(rule).first == acyclic_oracle(rule));
    }
  }
}

TEST_CASE("linearity") {
  std::set<std::string> v{"mu"};
  TermPtr mu = Term::dist_var("mu");
  TermPtr both = Term::lifted_app("g", {mu, mu});
  auto [bad, witness] = check_linear(both, v);
  CHECK_FALSE(bad);
  CHECK(witness == "mu");

  TermPtr c0 = Term::dirac(Term::state_app("c", {Term::dirac(Term::state_app("0", {}))}));
  TermPtr b0 = Term::dirac(Term::state_app("b", {Term::dirac(Term::state_app("0", {}))}));
  TermPtr split = Term::convex_sum(
      {Rational(1, 3), Rational(2, 3)},
      {Term::lifted_app("g", {mu, c0}), Term::lifted_app("g", {b0, mu})});
  CHECK(check_linear(split, v).first);

  CHECK(check_linear(Term::dirac(Term::state_var("x")), v).first);
}

TEST_CASE("linearity agrees with the literal-expansion oracle") {
  std::mt19937_64 rng(5);
  TermPtr mu = Term::dist_var("mu");
  TermPtr nu = Term::dist_var("nu");
  auto rand_theta = [&](auto&& self, int depth) -> TermPtr {
    switch (depth <= 0 ? rng() % 3 : rng() % 6) {
      case 0: return mu;
      case 1: return nu;
      case 2: return Term::dirac(Term::state_var("x"));
      case 3: {
        Rational w(1, 2);
        return Term::convex_sum({w, 1 - w},
                                {self(self, depth - 1), self(self, depth - 1)});
      }
      case 4:
        return Term::lifted_app("g", {self(self, depth - 1), self(self, depth - 1)});
      default:
        return Term::dirac(
            Term::state_app("a", {self(self, depth - 1)}));
    }
  };
  std::set<std::string> v{"mu"};
  std::set<std::string> both{"mu", "nu"};
  for (int i = 0; i < 400; ++i) {
    TermPtr theta = rand_theta(rand_theta, 3);
    CHECK(check_linear(theta, v).first == linear_oracle(theta, v));
    CHECK(check_linear(theta, both).first == linear_oracle(theta, both));
  }
}

TEST_CASE("plain format") {
  SpecAst base = parse_spec(slurp("base_pa.ptss"));
  FormatReport report = check_format(base, FormatKind::NtMuFXTheta);
  CHECK(report.all_conform());
  CHECK(report.well_founded);

  // Reused variable in the conclusion source.
  SpecAst dup = parse_spec_lenient(
      "spec d actions a op 0 : -> S op g2 : S S -> S\n"
      "rule bad: x -a-> mu => g2(x, x) -a-> dirac(0)\n");
  RuleVerdict v = check_ntmufxtheta(rule_named(dup, "bad"));
  CHECK_FALSE(v.conforms);
  CHECK(v.condition == "2");
  CHECK(v.witness == "x");

  // Forbidden comparator.
  SpecAst lt = parse_spec(
      "spec l actions a op 0 : -> S op f : S -> S\n"
      "rule bad: x -a-> mu  mu({y}) < 1  => f(x) -a-> dirac(0)\n");
  RuleVerdict w = check_ntmufxtheta(rule_named(lt, "bad"));
  CHECK_FALSE(w.conforms);
  CHECK(w.condition == "comparator");

  // Deep conclusion source falls outside both rule shapes.
  SpecAst deep = parse_spec(
      "spec s actions a op 0 : -> S op f : S -> S\n"
      "rule bad: => f(f(x)) -a-> dirac(0)\n");
  CHECK(check_ntmufxtheta(rule_named(deep, "bad")).condition == "form");
}

TEST_CASE("per-element variables cannot escape their block") {
  SpecAst esc = parse_spec(
      "spec e actions a, b op 0 : -> S op f : S -> S\n"
      "rule bad:\n"
      "  x -a-> mu\n"
      "  mu(Y) > 0\n"
      "  forall y in Y: y -b-> mu_y\n"
      "  => f(x) -a-> mu_y\n");
  RuleVerdict v = check_ntmufxtheta(rule_named(esc, "bad"));
  CHECK_FALSE(v.conforms);
  CHECK(v.condition == "5");
  CHECK(v.witness == "mu_y");

  SpecAst esc2 = parse_spec(
      "spec e2 actions a, b op 0 : -> S op f : S -> S\n"
      "rule bad:\n"
      "  x -a-> mu\n"
      "  mu(Y) > 0\n"
      "  forall y in Y: y -b-> mu_y\n"
      "  => f(x) -a-> dirac(y)\n");
  RuleVerdict v2 = check_ntmufxtheta(rule_named(esc2, "bad"));
  CHECK_FALSE(v2.conforms);
  CHECK(v2.condition == "6");
}

TEST_CASE("convex format goldens") {
  struct Row {
    const char* file;
    const char* rule;
    const char* condition;
  };
  for (const Row& row : {Row{"eq1.ptss", "r1", "7"}, Row{"eq2.ptss", "r2", "9"},
                         Row{"eq3.ptss", "r3", "9"}, Row{"eq4.ptss", "r4", "10"}}) {
    SpecAst spec = parse_spec_lenient(slurp(row.file));
    FormatReport report = check_convex_format(spec);
    RuleVerdict v = verdict_for(report, row.rule);
    CHECK_FALSE(v.conforms);
    CHECK(v.condition == row.condition);
    CHECK_FALSE(report.convex_closed);
  }
  SpecAst base = parse_spec(slurp("base_pa.ptss"));
  FormatReport ok = check_convex_format(base);
  CHECK(ok.all_conform());
  CHECK(ok.convex_closed);
}

TEST_CASE("a convex-combination rule conforms to the convex format") {
  std::string text =
      "spec cx actions a, b, c op 0 : -> S op f : S -> S\n"
      "rule prefix[A]: => A.mu -A-> mu\n"
      "rule rc:\n"
      "  x -a-> M\n"
      "  combine M as m\n"
      "  m(Y) >= 1/2\n"
      "  forall y in Y: y -b-> mu_y\n"
      "  m(Y2) >= 1/2\n"
      "  forall y2 in Y2: y2 -c-> mu_y2\n"
      "  => f(x) -a-> dirac(0)\n";
  SpecAst spec = parse_spec(text);
  FormatReport report = check_convex_format(spec);
  CHECK(verdict_for(report, "rc").conforms);
  CHECK(report.convex_closed);
}

TEST_CASE("abstracted format goldens") {
  SpecAst base = parse_spec(slurp("base_pa.ptss"));
  CHECK(check_abstracted_format(base).all_conform());

  SpecAst eq1 = parse_spec_lenient(slurp("eq1.ptss"));
  RuleVerdict v = verdict_for(check_abstracted_format(eq1), "r1");
  CHECK_FALSE(v.conforms);
  CHECK(v.condition == "p=0");

  SpecAst zero = parse_spec(
      "spec z actions a, b op 0 : -> S op f : S -> S\n"
      "rule r:\n"
      "  x -a-> mu\n"
      "  mu(Y) > 0\n"
      "  forall y in Y: y -b-> mu_y\n"
      "  => f(x) -a-> dirac(0)\n");
  CHECK(verdict_for(check_abstracted_format(zero), "r").conforms);
}

TEST_CASE("obliterated format goldens") {
  struct Row {
    const char* file;
    const char* rule;
    const char* condition;
  };
  for (const Row& row :
       {Row{"eq5.ptss", "r5", "2"}, Row{"eq6.ptss", "r6", "3"},
        Row{"eq7.ptss", "r7", "2"}, Row{"eq2.ptss", "r2", "3"},
        Row{"eq3.ptss", "r3", "1"}, Row{"eq4.ptss", "r4", "3"}}) {
    SpecAst spec = parse_spec_lenient(slurp(row.file));
    RuleVerdict v = verdict_for(check_obliterated_format(spec), row.rule);
    CHECK_FALSE(v.conforms);
    CHECK(v.condition == row.condition);
  }
  SpecAst base = parse_spec(slurp("base_pa.ptss"));
  CHECK(check_obliterated_format(base).all_conform());
}

TEST_CASE("stricter formats only remove rules") {
  for (const char* file :
       {"base_pa.ptss", "eq1.ptss", "eq2.ptss", "eq3.ptss", "eq4.ptss",
        "eq5.ptss", "eq6.ptss", "eq7.ptss", "conforming.ptss"}) {
    SpecAst spec = parse_spec_lenient(slurp(file));
    for (const auto& rule : spec.rules) {
      bool plain = check_ntmufxtheta(rule).conforms;
      if (check_convex_rule(rule, spec.sig).conforms) CHECK(plain);
      if (check_abstracted_rule(rule).conforms) CHECK(plain);
      if (check_obliterated_rule(rule, spec.sig).conforms) CHECK(plain);
    }
  }
}

TEST_CASE("report serialization carries stable fields") {
  SpecAst eq1 = parse_spec_lenient(slurp("eq1.ptss"));
  FormatReport report = check_convex_format(eq1);
  std::string json = report.json();
  CHECK(json.find("\"rule\"") != std::string::npos);
  CHECK(json.find("\"format\"") != std::string::npos);
  CHECK(json.find("\"verdict\"") != std::string::npos);
  CHECK(json.find("\"condition\"") != std::string::npos);
  CHECK(json.find("\"witness\"") != std::string::npos);
  CHECK(report.text().find("violates condition 7") != std::string::npos);
}
