#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "ptss/error.hpp"
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

std::string base_names(const SpecAst& spec) {
  std::set<std::string> names;
  for (const auto& r : spec.rules) {
    names.insert(r.name.substr(0, r.name.find('@')));
  }
  std::string out;
  for (const auto& n : names) out += n + " ";
  return out;
}

}  // namespace

TEST_CASE("base algebra parses") {
  SpecAst spec = parse_spec(slurp("base_pa.ptss"));
  CHECK(spec.actions.size() == 3);
  // Three rule schemas, expanded once per action.
  CHECK(base_names(spec) == "plusl plusr prefix ");
  CHECK(spec.rules.size() == 9);
  CHECK(spec.defs.size() == 6);
  CHECK(spec.defs.at("t3")->text() ==
        "a.(dirac(b.dirac(0)) (+) 1/2 dirac(c.dirac(0)))");
  // t1 and t6 name the same term, as do t3 and t5.
  CHECK(spec.defs.at("t1")->text() == spec.defs.at("t6")->text());
  CHECK(spec.defs.at("t3")->text() == spec.defs.at("t5")->text());
}

TEST_CASE("signature-only spec is valid") {
  SpecAst spec = parse_spec("spec empty actions a op 0 : -> S");
  CHECK(spec.rules.empty());
  CHECK(spec.sig.has_op("0"));
  CHECK(spec.sig.has_op("a"));  // implicit prefix operator
}

TEST_CASE("duplicate premise target is a rebinding error") {
  std::string text =
      "spec bad actions a, b op 0 : -> S op f : S S -> S\n"
      "rule r: x -a-> mu  y -b-> mu => f(x, y) -a-> mu\n";
  try {
    parse_spec(text);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RebindingError);
  }
  // The lenient path keeps the rule and records the defect.
  SpecAst spec = parse_spec_lenient(text);
  REQUIRE(spec.rules.size() == 1);
  REQUIRE(!spec.rules[0].binder_violations.empty());
  CHECK(spec.rules[0].binder_violations[0].condition == 3);
  CHECK(spec.rules[0].binder_violations[0].witness == "mu");
}

TEST_CASE("parse_term examples") {
  SpecAst spec = parse_spec(slurp("base_pa.ptss"));
  TermPtr t3 = parse_term("a.(dirac(b.0) (+) 1/2 dirac(c.0))", spec);
  CHECK(t3->text() == spec.defs.at("t3")->text());
  CHECK(parse_term("0", spec)->text() == "0");
  CHECK(parse_term("t5", spec)->text() == spec.defs.at("t5")->text());
  // After a prefix dot, a state term stands for its Dirac distribution.
  CHECK(parse_term("a.0", spec)->text() == parse_term("a.(dirac(0))", spec)->text());
  try {
    parse_term("0 + dirac(0)", spec);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SortError);
  }
  try {
    parse_term("h(0)", spec);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnresolvedName);
  }
}

TEST_CASE("parse_formula examples") {
  FormulaPtr f = parse_formula("<a>([<b>tt]_1/2 /\\ [<c>tt]_1/2)");
  CHECK(f->kind() == FormulaKind::Diamond);
  CHECK(f->action() == "a");
  CHECK(f->parts()[0]->kind() == FormulaKind::Meet);
  CHECK(f->parts()[0]->parts().size() == 2);
  CHECK(f->parts()[0]->parts()[0]->bound() == Rational(1, 2));

  CHECK(parse_formula("tt")->kind() == FormulaKind::Top);

  try {
    parse_formula("[tt]_1/2");
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LayerError);
  }

  FormulaPtr combined = parse_formula("<a>_c[<b>tt]_1/2");
  CHECK(combined->kind() == FormulaKind::CombinedDiamond);
}

TEST_CASE("render round trip") {
  SpecAst spec = parse_spec(slurp("base_pa.ptss"));
  std::string once = render(spec);
  SpecAst again = parse_spec(once);
  CHECK(render(again) == once);

  for (const auto& name : spec.def_order) {
    TermPtr t = spec.defs.at(name);
    CHECK(parse_term(render(t), spec)->text() == t->text());
  }

  for (const char* text :
       {"<a>([<b>tt]_1/2 /\\ [<c>tt]_1/2)", "tt", "!<a>[tt]_0",
        "<a>_c([<b>tt]_0 /\\ [<c>tt]_1)", "tt /\\ <b>[!tt]_1/4"}) {
    FormulaPtr f = parse_formula(text);
    CHECK(parse_formula(render(f))->text() == f->text());
  }
}

TEST_CASE("render round trip on random terms") {
  SpecAst spec = parse_spec(slurp("base_pa.ptss"));
  std::mt19937_64 rng(23);
  auto rand_state = [&](auto&& self, int depth) -> TermPtr {
    switch (depth <= 0 ? 0 : rng() % 4) {
      case 0: return Term::state_app("0", {});
      case 1:
        return Term::state_app("a", {Term::dirac(self(self, depth - 1))});
      case 2: {
        Rational w(1 + static_cast<int>(rng() % 7), 8);
        return Term::state_app(
            "b", {Term::convex_sum({w, 1 - w},
                                   {Term::dirac(self(self, depth - 1)),
                                    Term::dirac(self(self, depth - 1))})});
      }
      default:
        return Term::state_app("+", {self(self, depth - 1), self(self, depth - 1)});
    }
  };
  for (int i = 0; i < 200; ++i) {
    TermPtr t = rand_state(rand_state, 3);
    CHECK(parse_term(render(t), spec)->text() == t->text());
  }
}

TEST_CASE("parsing is deterministic") {
  std::string text = slurp("eq1.ptss");
  CHECK(render(parse_spec(text)) == render(parse_spec(text)));
}

TEST_CASE("rule premises parse into the right shapes") {
  SpecAst spec = parse_spec(slurp("eq1.ptss"));
  const RuleSchema* r1 = nullptr;
  for (const auto& r : spec.rules) {
    if (r.name == "r1") r1 = &r;
  }
  REQUIRE(r1);
  CHECK(r1->positives.size() == 1);
  CHECK(r1->quants.size() == 2);
  CHECK(r1->foralls.size() == 2);
  CHECK(r1->quants[0].set.is_set_var);
  CHECK(r1->quants[0].cmp == Cmp::Ge);
  CHECK(r1->quants[0].bound == Rational(1, 2));
  CHECK(r1->foralls[0].binder == "y");
  CHECK(r1->foralls[0].set_var == "Y");

  SpecAst eq5 = parse_spec(slurp("eq5.ptss"));
  const RuleSchema* r5 = nullptr;
  for (const auto& r : eq5.rules) {
    if (r.name == "r5") r5 = &r;
  }
  REQUIRE(r5);
  CHECK(r5->quants.size() == 2);
  CHECK_FALSE(r5->quants[0].set.is_set_var);
  CHECK(r5->quants[0].set.elements.size() == 1);
  CHECK(r5->quants[0].cmp == Cmp::Gt);
  CHECK(r5->quants[0].bound == 0);
}

TEST_CASE("combine blocks parse") {
  std::string text =
      "spec cx actions a, b op 0 : -> S op f : S -> S\n"
      "rule prefix[A]: => A.mu -A-> mu\n"
      "rule rc:\n"
      "  x -a-> M\n"
      "  combine M as m\n"
      "  m(Y) >= 1/2\n"
      "  forall y in Y: y -b-> mu_y\n"
      "  => f(x) -a-> dirac(0)\n";
  SpecAst spec = parse_spec(text);
  const RuleSchema* rc = nullptr;
  for (const auto& r : spec.rules) {
    if (r.name == "rc") rc = &r;
  }
  REQUIRE(rc);
  CHECK(rc->combines.size() == 1);
  CHECK(rc->combines[0].family_var == "M");
  CHECK(rc->combines[0].sym == "m");
  REQUIRE(rc->quants.size() == 1);
  CHECK(rc->quants[0].dist->kind() == TermKind::CombineRef);
  // Round trip keeps the block structure.
  SpecAst again = parse_spec(render(spec));
  CHECK(render(again) == render(spec));
}
