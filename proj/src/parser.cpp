#include "ptss/parser.hpp"

#include <cctype>
#include <map>
#include <optional>
#include <sstream>

#include "ptss/error.hpp"

namespace ptss {

namespace {

struct Token {
  enum Type { Ident, Number, Punct, End } type = End;
  std::string text;
  int line = 0;
  int col = 0;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) {
    size_t i = 0;
    int line = 1, col = 1;
    auto advance = [&](size_t n) {
      for (size_t k = 0; k < n; ++k) {
        if (src[i + k] == '\n') {
          ++line;
          col = 1;
        } else {
          ++col;
        }
      }
      i += n;
    };
    while (i < src.size()) {
      char c = src[i];
      if (c == '#') {
        while (i < src.size() && src[i] != '\n') advance(1);
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance(1);
        continue;
      }
      Token tok;
      tok.line = line;
      tok.col = col;
      if (std::isalpha(static_cast<unsigned char>(c))) {
        size_t j = i;
        while (j < src.size() &&
               (std::isalnum(static_cast<unsigned char>(src[j])) ||
                src[j] == '_' || src[j] == '\'' || src[j] == '@')) {
          ++j;
        }
        tok.type = Token::Ident;
        tok.text = src.substr(i, j - i);
        advance(j - i);
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        size_t j = i;
        while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
        tok.type = Token::Number;
        tok.text = src.substr(i, j - i);
        advance(j - i);
      } else {
        static const char* multi[] = {"(+)", "-/", "->", "=>", ">=", "<=", "/\\"};
        tok.type = Token::Punct;
        for (const char* m : multi) {
          size_t n = std::string(m).size();
          if (src.compare(i, n, m) == 0) {
            tok.text = m;
            break;
          }
        }
        if (tok.text.empty()) tok.text = std::string(1, c);
        advance(tok.text.size());
      }
      tokens_.push_back(tok);
    }
    Token end;
    end.line = line;
    end.col = col;
    tokens_.push_back(end);
  }

  const std::vector<Token>& tokens() const { return tokens_; }

 private:
  std::vector<Token> tokens_;
};

[[noreturn]] void fail(ErrorCode code, const Token& at, const std::string& msg) {
  throw Error(code, msg + " (line " + std::to_string(at.line) + ", column " +
                        std::to_string(at.col) + ")");
}

// Untyped surface syntax tree; sorts are resolved by the binder below.
struct Raw;
using RawPtr = std::shared_ptr<Raw>;
struct Raw {
  enum Kind { Name, App, Prefix, Plus, Dirac, Lifted, Convex } kind;
  std::string name;
  std::vector<RawPtr> args;
  Rational weight;  // Convex: weight of the left summand
  Token at;
};

RawPtr mk_raw(Raw::Kind k, Token at) {
  auto r = std::make_shared<Raw>();
  r->kind = k;
  r->at = at;
  return r;
}

struct RawPositive {
  RawPtr source;
  std::string action;
  std::string target;
  Token at;
};
struct RawNegative {
  RawPtr source;
  std::string action;
  Token at;
};
struct RawSet {
  bool is_set_var = false;
  std::string set_var;
  std::vector<RawPtr> elements;
};
struct RawQuant {
  RawPtr dist;
  RawSet set;
  Cmp cmp;
  Rational bound;
  Token at;
};
struct RawForall {
  std::string binder;
  std::string set_var;
  bool positive;
  RawPtr source;
  std::string action;
  std::string target;
  Token at;
};
struct RawRule {
  std::string name;
  std::optional<std::string> action_var;
  std::vector<RawPositive> positives;
  std::vector<RawNegative> negatives;
  std::vector<RawQuant> quants;
  std::vector<RawForall> foralls;
  std::vector<CombineBlock> combines;
  RawPtr conc_source;
  std::string conc_action;
  RawPtr conc_target;
  Token at;
};

class Parser {
 public:
  Parser(const std::string& src, bool lenient)
      : lexer_(src), lenient_(lenient) {}

  SpecAst parse_spec_file() {
    SpecAst spec;
    expect_ident("spec");
    spec.name = expect(Token::Ident).text;
    std::vector<RawRule> raw_rules;
    std::vector<std::pair<std::string, RawPtr>> raw_defs;
    while (!at_end()) {
      const Token& t = peek();
      if (t.type == Token::Ident && t.text == "actions") {
        next();
        spec.actions.push_back(expect(Token::Ident).text);
        while (accept_punct(",")) spec.actions.push_back(expect(Token::Ident).text);
      } else if (t.type == Token::Ident && t.text == "op") {
        next();
        Token name_tok = next();
        if (name_tok.type != Token::Ident && name_tok.type != Token::Number &&
            !(name_tok.type == Token::Punct && name_tok.text == "+")) {
          fail(ErrorCode::SyntaxError, name_tok, "expected operator name");
        }
        expect_punct(":");
        std::vector<Sort> arg_sorts;
        while (!(peek().type == Token::Punct && peek().text == "->")) {
          Token s = expect(Token::Ident);
          if (s.text == "S") arg_sorts.push_back(Sort::State);
          else if (s.text == "D") arg_sorts.push_back(Sort::Dist);
          else fail(ErrorCode::SyntaxError, s, "expected sort S or D");
        }
        expect_punct("->");
        Token res = expect(Token::Ident);
        if (res.text != "S") {
          fail(ErrorCode::SortError, res,
               "user operators must map to sort S; the distribution "
               "signature is derived");
        }
        spec.sig.declare(name_tok.text, std::move(arg_sorts));
      } else if (t.type == Token::Ident && t.text == "rule") {
        raw_rules.push_back(parse_rule());
      } else if (t.type == Token::Ident && t.text == "def") {
        next();
        std::string name = expect(Token::Ident).text;
        expect_punct("=");
        raw_defs.emplace_back(name, parse_raw_term());
      } else {
        fail(ErrorCode::SyntaxError, t, "expected actions, op, rule, or def");
      }
    }
    if (spec.actions.empty()) {
      throw Error(ErrorCode::SyntaxError, "spec declares no actions");
    }
    for (const auto& a : spec.actions) {
      if (!spec.sig.has_op(a)) spec.sig.declare(a, {Sort::Dist});
    }
    for (const auto& r : raw_rules) bind_rule(spec, r);
    for (const auto& [name, raw] : raw_defs) {
      if (spec.defs.count(name)) {
        fail(ErrorCode::RebindingError, raw->at, "duplicate def '" + name + "'");
      }
      Binder b(spec, {});
      TermPtr t = b.bind(raw, Sort::State, spec.defs);
      if (!t->closed()) {
        fail(ErrorCode::UnresolvedName, raw->at,
             "def '" + name + "' must be a closed term");
      }
      spec.defs[name] = t;
      spec.def_order.push_back(name);
    }
    return spec;
  }

  TermPtr parse_standalone_term(const SpecAst& spec) {
    RawPtr raw = parse_raw_term();
    if (!at_end()) fail(ErrorCode::SyntaxError, peek(), "trailing input");
    Binder b(spec, {});
    return b.bind(raw, std::nullopt, spec.defs);
  }

  FormulaPtr parse_standalone_formula() {
    FormulaPtr f = parse_state_formula();
    if (!at_end()) fail(ErrorCode::SyntaxError, peek(), "trailing input");
    return f;
  }

 private:
  // ---- token plumbing ----
  const Token& peek(size_t k = 0) const {
    size_t i = std::min(pos_ + k, lexer_.tokens().size() - 1);
    return lexer_.tokens()[i];
  }
  Token next() { return lexer_.tokens()[std::min(pos_++, lexer_.tokens().size() - 1)]; }
  bool at_end() const { return peek().type == Token::End; }
  Token expect(Token::Type ty) {
    Token t = next();
    if (t.type != ty) fail(ErrorCode::SyntaxError, t, "unexpected '" + t.text + "'");
    return t;
  }
  void expect_punct(const std::string& p) {
    Token t = next();
    if (t.type != Token::Punct || t.text != p) {
      fail(ErrorCode::SyntaxError, t, "expected '" + p + "', found '" + t.text + "'");
    }
  }
  void expect_ident(const std::string& word) {
    Token t = next();
    if (t.type != Token::Ident || t.text != word) {
      fail(ErrorCode::SyntaxError, t, "expected '" + word + "'");
    }
  }
  bool accept_punct(const std::string& p) {
    if (peek().type == Token::Punct && peek().text == p) {
      next();
      return true;
    }
    return false;
  }
  bool peek_punct(const std::string& p, size_t k = 0) const {
    return peek(k).type == Token::Punct && peek(k).text == p;
  }

  Rational parse_rational() {
    Token n = expect(Token::Number);
    Rational num(n.text);
    if (accept_punct("/")) {
      Token d = expect(Token::Number);
      Rational den(d.text);
      if (den == 0) fail(ErrorCode::SyntaxError, d, "zero denominator");
      return num / den;
    }
    return num;
  }

  // ---- raw terms ----
  // term   := summand ("+" summand)*
  // summand:= convex
  // convex := atom ("(+)" RATIONAL atom)*          (left-assoc)
  // atom   := "dirac" "(" term ")" | "$" NAME "(" args ")" | NAME "." atom
  //         | NAME "(" args ")" | NAME | "(" term ")"
  RawPtr parse_raw_term() {
    RawPtr t = parse_raw_convex();
    while (peek_punct("+")) {
      Token at = next();
      RawPtr rhs = parse_raw_convex();
      RawPtr p = mk_raw(Raw::Plus, at);
      p->args = {t, rhs};
      t = p;
    }
    return t;
  }

  RawPtr parse_raw_convex() {
    RawPtr t = parse_raw_atom();
    while (peek_punct("(+)")) {
      Token at = next();
      Rational w = parse_rational();
      RawPtr rhs = parse_raw_atom();
      RawPtr c = mk_raw(Raw::Convex, at);
      c->args = {t, rhs};
      c->weight = w;
      t = c;
    }
    return t;
  }

  RawPtr parse_raw_atom() {
    const Token& t = peek();
    if (t.type == Token::Punct && t.text == "(") {
      next();
      RawPtr inner = parse_raw_term();
      expect_punct(")");
      return inner;
    }
    if (t.type == Token::Punct && t.text == "$") {
      Token at = next();
      Token name = next();
      if (name.type != Token::Ident && name.type != Token::Number &&
          !(name.type == Token::Punct && name.text == "+")) {
        fail(ErrorCode::SyntaxError, name, "expected operator name after '$'");
      }
      RawPtr r = mk_raw(Raw::Lifted, at);
      r->name = name.text;
      expect_punct("(");
      if (!peek_punct(")")) {
        r->args.push_back(parse_raw_term());
        while (accept_punct(",")) r->args.push_back(parse_raw_term());
      }
      expect_punct(")");
      return r;
    }
    if (t.type == Token::Ident && t.text == "dirac") {
      Token at = next();
      expect_punct("(");
      RawPtr r = mk_raw(Raw::Dirac, at);
      r->args.push_back(parse_raw_term());
      expect_punct(")");
      return r;
    }
    if (t.type == Token::Ident || t.type == Token::Number) {
      Token at = next();
      if (peek_punct(".")) {
        next();
        RawPtr r = mk_raw(Raw::Prefix, at);
        r->name = at.text;
        r->args.push_back(parse_raw_atom());
        return r;
      }
      if (peek_punct("(")) {
        next();
        RawPtr r = mk_raw(Raw::App, at);
        r->name = at.text;
        if (!peek_punct(")")) {
          r->args.push_back(parse_raw_term());
          while (accept_punct(",")) r->args.push_back(parse_raw_term());
        }
        expect_punct(")");
        return r;
      }
      RawPtr r = mk_raw(Raw::Name, at);
      r->name = at.text;
      return r;
    }
    fail(ErrorCode::SyntaxError, t, "expected a term, found '" + t.text + "'");
  }

  // Distribution term in measured position: bare names are never treated as
  // applications, so "mu(Y) >= 1/2" keeps "(Y)" for the measured set.
  RawPtr parse_raw_dterm_tight() {
    RawPtr t = parse_raw_dterm_atom();
    while (peek_punct("(+)")) {
      Token at = next();
      Rational w = parse_rational();
      RawPtr rhs = parse_raw_dterm_atom();
      RawPtr c = mk_raw(Raw::Convex, at);
      c->args = {t, rhs};
      c->weight = w;
      t = c;
    }
    return t;
  }

  RawPtr parse_raw_dterm_atom() {
    const Token& t = peek();
    if (t.type == Token::Punct && (t.text == "$" || t.text == "(")) {
      if (t.text == "(") {
        next();
        RawPtr inner = parse_raw_dterm_tight();
        expect_punct(")");
        return inner;
      }
      return parse_raw_atom();
    }
    if (t.type == Token::Ident && t.text == "dirac") return parse_raw_atom();
    if (t.type == Token::Ident || t.type == Token::Number) {
      Token at = next();
      RawPtr r = mk_raw(Raw::Name, at);
      r->name = at.text;
      return r;
    }
    fail(ErrorCode::SyntaxError, t, "expected a distribution term");
  }

  // ---- rules ----
  RawRule parse_rule() {
    RawRule rule;
    rule.at = peek();
    expect_ident("rule");
    rule.name = expect(Token::Ident).text;
    if (accept_punct("[")) {
      rule.action_var = expect(Token::Ident).text;
      expect_punct("]");
    }
    expect_punct(":");
    while (!peek_punct("=>")) {
      parse_premise_into(rule);
    }
    expect_punct("=>");
    rule.conc_source = parse_raw_term();
    expect_punct("-");
    rule.conc_action = expect(Token::Ident).text;
    expect_punct("->");
    rule.conc_target = parse_raw_term();
    return rule;
  }

  void parse_premise_into(RawRule& rule) {
    const Token& t = peek();
    if (t.type == Token::Ident && t.text == "forall") {
      Token at = next();
      RawForall fa;
      fa.at = at;
      fa.binder = expect(Token::Ident).text;
      expect_ident("in");
      fa.set_var = expect(Token::Ident).text;
      expect_punct(":");
      RawPtr src = parse_raw_term();
      if (accept_punct("-")) {
        fa.positive = true;
        fa.action = expect(Token::Ident).text;
        expect_punct("->");
        Token tgt = expect(Token::Ident);
        fa.target = tgt.text;
      } else if (accept_punct("-/")) {
        fa.positive = false;
        fa.action = expect(Token::Ident).text;
        expect_punct("->");
      } else {
        fail(ErrorCode::SyntaxError, peek(),
             "forall block expects a positive or negative premise");
      }
      fa.source = src;
      rule.foralls.push_back(std::move(fa));
      return;
    }
    if (t.type == Token::Ident && t.text == "combine") {
      next();
      CombineBlock cb;
      cb.family_var = expect(Token::Ident).text;
      expect_ident("as");
      cb.sym = expect(Token::Ident).text;
      rule.combines.push_back(std::move(cb));
      return;
    }
    // Try the quantitative form first; measured terms use the tight
    // distribution grammar where bare names are never applications, so
    // "mu(Y) >= 1/2" keeps "(Y)" for the measured set.  On failure fall
    // back to a transition or negative premise.
    size_t save = pos_;
    try {
      RawQuant q;
      q.at = t;
      q.dist = parse_raw_dterm_tight();
      expect_punct("(");
      if (accept_punct("{")) {
        if (!peek_punct("}")) {
          q.set.elements.push_back(parse_raw_term());
          while (accept_punct(",")) q.set.elements.push_back(parse_raw_term());
        }
        expect_punct("}");
      } else {
        q.set.is_set_var = true;
        q.set.set_var = expect(Token::Ident).text;
      }
      expect_punct(")");
      Token cmp = next();
      if (cmp.type != Token::Punct) {
        fail(ErrorCode::SyntaxError, cmp, "expected comparator");
      }
      if (cmp.text == ">") q.cmp = Cmp::Gt;
      else if (cmp.text == ">=") q.cmp = Cmp::Ge;
      else if (cmp.text == "<") q.cmp = Cmp::Lt;
      else if (cmp.text == "<=") q.cmp = Cmp::Le;
      else fail(ErrorCode::SyntaxError, cmp, "expected comparator");
      q.bound = parse_rational();
      if (q.bound < 0 || q.bound > 1) {
        fail(ErrorCode::SyntaxError, cmp, "quantitative bound must lie in [0,1]");
      }
      rule.quants.push_back(std::move(q));
      return;
    } catch (const Error&) {
      pos_ = save;
    }
    RawPtr src = parse_raw_term();
    if (accept_punct("-")) {
      RawPositive p;
      p.at = t;
      p.source = src;
      p.action = expect(Token::Ident).text;
      expect_punct("->");
      Token tgt = next();
      if (tgt.type != Token::Ident) {
        fail(ErrorCode::SyntaxError, tgt,
             "premise target must be a distribution variable");
      }
      p.target = tgt.text;
      rule.positives.push_back(std::move(p));
      return;
    }
    if (accept_punct("-/")) {
      RawNegative n;
      n.at = t;
      n.source = src;
      n.action = expect(Token::Ident).text;
      expect_punct("->");
      rule.negatives.push_back(std::move(n));
      return;
    }
    fail(ErrorCode::SyntaxError, peek(), "expected a premise or '=>'");
  }

  // ---- binding: raw trees to sorted terms ----
  class Binder {
   public:
    Binder(const SpecAst& spec, std::set<std::string> combine_syms)
        : spec_(spec), combine_syms_(std::move(combine_syms)) {}

    TermPtr bind(const RawPtr& raw, std::optional<Sort> expected,
                 const std::map<std::string, TermPtr>& defs) {
      defs_ = &defs;
      return bind_raw(raw, expected);
    }

    /// Registers a binding-occurrence variable directly, bypassing operator
    /// and named-term resolution.
    TermPtr binder_var(const std::string& name, Sort s, const Token& at) {
      return bind_var(name, s, at);
    }

    const std::map<std::string, Sort>& var_sorts() const { return var_sorts_; }

   private:
    TermPtr sorted(TermPtr t, Sort got, std::optional<Sort> expected, const Token& at) {
      if (expected && *expected != got) {
        fail(ErrorCode::SortError, at,
             "term has sort " + std::string(sort_name(got)) + ", expected " +
                 sort_name(*expected));
      }
      return t;
    }

    TermPtr bind_var(const std::string& name, std::optional<Sort> expected,
                     const Token& at) {
      Sort s = expected.value_or(Sort::State);
      auto it = var_sorts_.find(name);
      if (it != var_sorts_.end()) {
        if (expected && it->second != *expected) {
          fail(ErrorCode::SortError, at,
               "variable '" + name + "' used at both sorts");
        }
        s = it->second;
      } else {
        var_sorts_[name] = s;
      }
      return s == Sort::State ? Term::state_var(name) : Term::dist_var(name);
    }

    TermPtr bind_raw(const RawPtr& raw, std::optional<Sort> expected) {
      switch (raw->kind) {
        case Raw::Name: {
          if (combine_syms_.count(raw->name)) {
            return sorted(Term::combine_ref(raw->name), Sort::Dist, expected, raw->at);
          }
          if (spec_.sig.has_op(raw->name)) {
            const OpDecl& d = spec_.sig.op(raw->name);
            if (d.arg_sorts.empty()) {
              return sorted(Term::state_app(raw->name, {}), Sort::State, expected, raw->at);
            }
            // A non-constant operator used bare is a variable of the same
            // name only if no operator interpretation fits; reject instead.
            fail(ErrorCode::UnresolvedName, raw->at,
                 "operator '" + raw->name + "' used without arguments");
          }
          if (auto it = defs_->find(raw->name); it != defs_->end()) {
            return sorted(it->second, Sort::State, expected, raw->at);
          }
          return bind_var(raw->name, expected, raw->at);
        }
        case Raw::App: {
          if (!spec_.sig.has_op(raw->name)) {
            fail(ErrorCode::UnresolvedName, raw->at,
                 "unknown operator '" + raw->name + "'");
          }
          const OpDecl& d = spec_.sig.op(raw->name);
          if (d.arg_sorts.size() != raw->args.size()) {
            fail(ErrorCode::SortError, raw->at,
                 "operator '" + raw->name + "' expects " +
                     std::to_string(d.arg_sorts.size()) + " arguments");
          }
          std::vector<TermPtr> args;
          for (size_t i = 0; i < raw->args.size(); ++i) {
            args.push_back(bind_raw(raw->args[i], d.arg_sorts[i]));
          }
          return sorted(Term::state_app(raw->name, std::move(args)), Sort::State,
                        expected, raw->at);
        }
        case Raw::Prefix: {
          if (!spec_.sig.has_op(raw->name)) {
            fail(ErrorCode::UnresolvedName, raw->at,
                 "unknown prefix operator '" + raw->name + "'");
          }
          const OpDecl& d = spec_.sig.op(raw->name);
          if (d.arg_sorts.size() != 1 || d.arg_sorts[0] != Sort::Dist) {
            fail(ErrorCode::SortError, raw->at,
                 "'" + raw->name + ".' needs a unary operator over a "
                 "distribution argument");
          }
          // A fresh variable after the dot takes the declared argument sort;
          // a state term there abbreviates its Dirac distribution, as in
          // b.0 for b.dirac(0).
          const RawPtr& arg_raw = raw->args[0];
          TermPtr arg;
          if (arg_raw->kind == Raw::Name && !spec_.sig.has_op(arg_raw->name) &&
              !defs_->count(arg_raw->name) &&
              !combine_syms_.count(arg_raw->name) &&
              !var_sorts_.count(arg_raw->name)) {
            arg = bind_var(arg_raw->name, Sort::Dist, arg_raw->at);
          } else {
            arg = bind_raw(arg_raw, std::nullopt);
          }
          if (arg->is_state_sorted()) arg = Term::dirac(arg);
          return sorted(Term::state_app(raw->name, {arg}), Sort::State, expected,
                        raw->at);
        }
        case Raw::Plus: {
          if (!spec_.sig.has_op("+")) {
            fail(ErrorCode::UnresolvedName, raw->at, "operator '+' not declared");
          }
          TermPtr l = bind_raw(raw->args[0], Sort::State);
          TermPtr r = bind_raw(raw->args[1], Sort::State);
          return sorted(Term::state_app("+", {l, r}), Sort::State, expected, raw->at);
        }
        case Raw::Dirac: {
          TermPtr arg = bind_raw(raw->args[0], Sort::State);
          return sorted(Term::dirac(arg), Sort::Dist, expected, raw->at);
        }
        case Raw::Lifted: {
          if (!spec_.sig.has_op(raw->name)) {
            fail(ErrorCode::UnresolvedName, raw->at,
                 "unknown operator '$" + raw->name + "'");
          }
          const OpDecl& d = spec_.sig.op(raw->name);
          if (d.arg_sorts.size() != raw->args.size()) {
            fail(ErrorCode::SortError, raw->at,
                 "lifted '$" + raw->name + "' expects " +
                     std::to_string(d.arg_sorts.size()) + " arguments");
          }
          std::vector<TermPtr> args;
          for (const auto& a : raw->args) args.push_back(bind_raw(a, Sort::Dist));
          return sorted(Term::lifted_app(raw->name, std::move(args)), Sort::Dist,
                        expected, raw->at);
        }
        case Raw::Convex: {
          if (raw->weight <= 0 || raw->weight >= 1) {
            fail(ErrorCode::SyntaxError, raw->at,
                 "convex weight must lie strictly between 0 and 1");
          }
          TermPtr l = bind_raw(raw->args[0], Sort::Dist);
          TermPtr r = bind_raw(raw->args[1], Sort::Dist);
          return sorted(Term::convex_sum({raw->weight, 1 - raw->weight}, {l, r}),
                        Sort::Dist, expected, raw->at);
        }
      }
      fail(ErrorCode::SyntaxError, raw->at, "unreachable");
    }

    const SpecAst& spec_;
    std::set<std::string> combine_syms_;
    const std::map<std::string, TermPtr>* defs_ = nullptr;
    std::map<std::string, Sort> var_sorts_;
  };

  void bind_rule(SpecAst& spec, const RawRule& raw) {
    if (raw.action_var) {
      for (const auto& act : spec.actions) {
        bind_rule_instance(spec, raw, raw.name + "@" + act, *raw.action_var, act);
      }
    } else {
      bind_rule_instance(spec, raw, raw.name, "", "");
    }
  }

  std::string subst_action(const std::string& name, const std::string& metavar,
                           const std::string& act) {
    return (!metavar.empty() && name == metavar) ? act : name;
  }

  RawPtr subst_action_term(const RawPtr& raw, const std::string& metavar,
                           const std::string& act) {
    if (metavar.empty()) return raw;
    auto copy = std::make_shared<Raw>(*raw);
    copy->name = subst_action(raw->name, metavar, act);
    copy->args.clear();
    for (const auto& a : raw->args) {
      copy->args.push_back(subst_action_term(a, metavar, act));
    }
    return copy;
  }

  void bind_rule_instance(SpecAst& spec, const RawRule& raw,
                          const std::string& name, const std::string& metavar,
                          const std::string& act) {
    RuleSchema rule;
    rule.name = name;
    std::set<std::string> syms;
    for (const auto& cb : raw.combines) syms.insert(cb.sym);
    rule.combines = raw.combines;
    Binder binder(spec, syms);

    auto check_action = [&](const std::string& a, const Token& at) {
      std::string resolved = subst_action(a, metavar, act);
      if (!spec.is_action(resolved)) {
        fail(ErrorCode::UnresolvedName, at, "unknown action '" + resolved + "'");
      }
      return resolved;
    };

    for (const auto& p : raw.positives) {
      PositivePremise out;
      out.source = binder.bind(subst_action_term(p.source, metavar, act),
                               Sort::State, spec.defs);
      out.action = check_action(p.action, p.at);
      out.target = p.target;
      binder.binder_var(p.target, Sort::Dist, p.at);
      rule.positives.push_back(std::move(out));
    }
    for (const auto& n : raw.negatives) {
      NegativePremise out;
      out.source = binder.bind(subst_action_term(n.source, metavar, act),
                               Sort::State, spec.defs);
      out.action = check_action(n.action, n.at);
      rule.negatives.push_back(std::move(out));
    }
    for (const auto& fa : raw.foralls) {
      ForallBlock out;
      out.binder = fa.binder;
      out.set_var = fa.set_var;
      out.positive = fa.positive;
      binder.binder_var(fa.binder, Sort::State, fa.at);
      out.source = binder.bind(subst_action_term(fa.source, metavar, act),
                               Sort::State, spec.defs);
      out.action = check_action(fa.action, fa.at);
      out.target = fa.target;
      if (fa.positive) binder.binder_var(fa.target, Sort::Dist, fa.at);
      rule.foralls.push_back(std::move(out));
    }
    for (const auto& q : raw.quants) {
      QuantPremise out;
      out.dist = binder.bind(q.dist, Sort::Dist, spec.defs);
      out.cmp = q.cmp;
      out.bound = q.bound;
      out.set.is_set_var = q.set.is_set_var;
      out.set.set_var = q.set.set_var;
      for (const auto& e : q.set.elements) {
        out.set.elements.push_back(binder.bind(e, Sort::State, spec.defs));
      }
      rule.quants.push_back(std::move(out));
    }
    for (const auto& cb : raw.combines) {
      binder.binder_var(cb.family_var, Sort::Dist, raw.at);
    }
    rule.conc_source = binder.bind(subst_action_term(raw.conc_source, metavar, act),
                                   Sort::State, spec.defs);
    rule.conc_action = check_action(raw.conc_action, raw.at);
    rule.conc_target = binder.bind(subst_action_term(raw.conc_target, metavar, act),
                                   Sort::Dist, spec.defs);

    check_binders(rule, raw.at);
    spec.rules.push_back(std::move(rule));
  }

  // Binder distinctness: conclusion-source variables, positive-premise
  // targets, and measured-set variables are binding occurrences and must be
  // pairwise distinct.
  void check_binders(RuleSchema& rule, const Token& at) {
    std::vector<BinderViolation> found;

    std::set<std::string> source_vars;
    count_duplicate_vars(rule.conc_source, source_vars, found);

    std::set<std::string> targets;
    auto add_target = [&](const std::string& v) {
      if (targets.count(v)) {
        found.push_back({3, v});
      } else if (source_vars.count(v)) {
        found.push_back({3, v});
      }
      targets.insert(v);
    };
    for (const auto& p : rule.positives) add_target(p.target);
    for (const auto& fa : rule.foralls) {
      if (fa.positive) add_target(fa.target);
    }
    for (const auto& cb : rule.combines) {
      if (targets.count(cb.sym) || source_vars.count(cb.sym)) {
        found.push_back({3, cb.sym});
      }
      targets.insert(cb.sym);
    }

    std::set<std::string> measure_vars;
    auto add_measure_var = [&](const std::string& v) {
      if (measure_vars.count(v) || source_vars.count(v)) found.push_back({4, v});
      measure_vars.insert(v);
    };
    std::set<std::string> set_vars_seen;
    for (const auto& q : rule.quants) {
      if (q.set.is_set_var) {
        // The same set variable may carry several bounds; it binds once.
        if (!set_vars_seen.count(q.set.set_var)) {
          set_vars_seen.insert(q.set.set_var);
          add_measure_var(q.set.set_var);
        }
      } else {
        for (const auto& e : q.set.elements) {
          for (const auto& v : e->all_vars()) add_measure_var(v);
        }
      }
    }
    for (const auto& fa : rule.foralls) add_measure_var(fa.binder);

    rule.binder_violations = found;
    if (!lenient_ && !found.empty()) {
      fail(ErrorCode::RebindingError, at,
           "rule '" + rule.name + "' rebinds variable '" + found[0].witness + "'");
    }
  }

  void count_duplicate_vars(const TermPtr& t, std::set<std::string>& seen,
                            std::vector<BinderViolation>& found) {
    if (t->kind() == TermKind::StateVar || t->kind() == TermKind::DistVar) {
      if (!seen.insert(t->name()).second) found.push_back({2, t->name()});
      return;
    }
    for (const auto& a : t->args()) count_duplicate_vars(a, seen, found);
  }

  // ---- formulas ----
  FormulaPtr parse_state_formula() {
    std::vector<FormulaPtr> parts{parse_state_atom()};
    while (accept_punct("/\\")) parts.push_back(parse_state_atom());
    return parts.size() == 1 ? parts[0] : Formula::conj(std::move(parts));
  }

  FormulaPtr parse_state_atom() {
    const Token& t = peek();
    if (t.type == Token::Ident && t.text == "tt") {
      next();
      return Formula::top();
    }
    if (t.type == Token::Punct && t.text == "!") {
      next();
      return Formula::negate(parse_state_atom());
    }
    if (t.type == Token::Punct && t.text == "<") {
      next();
      std::string action = expect(Token::Ident).text;
      expect_punct(">");
      bool combined = false;
      if (peek_punct("_") && peek(1).type == Token::Ident && peek(1).text == "c") {
        next();
        next();
        combined = true;
      }
      FormulaPtr psi = parse_dist_formula();
      return combined ? Formula::combined_diamond(action, psi)
                      : Formula::diamond(action, psi);
    }
    if (t.type == Token::Punct && t.text == "(") {
      next();
      FormulaPtr inner = parse_state_formula();
      expect_punct(")");
      return inner;
    }
    if (t.type == Token::Punct && t.text == "[") {
      fail(ErrorCode::LayerError, t,
           "[phi]_p is a distribution formula; it cannot appear at the state layer");
    }
    fail(ErrorCode::SyntaxError, t, "expected a state formula");
  }

  FormulaPtr parse_dist_formula() {
    std::vector<FormulaPtr> parts{parse_dist_atom()};
    while (accept_punct("/\\")) parts.push_back(parse_dist_atom());
    return parts.size() == 1 ? parts[0] : Formula::meet(std::move(parts));
  }

  FormulaPtr parse_dist_atom() {
    const Token& t = peek();
    if (t.type == Token::Punct && t.text == "[") {
      next();
      FormulaPtr phi = parse_state_formula();
      expect_punct("]");
      expect_punct("_");
      Rational p = parse_rational();
      if (p < 0 || p > 1) fail(ErrorCode::SyntaxError, t, "bound must lie in [0,1]");
      return Formula::atom(phi, p);
    }
    if (t.type == Token::Punct && t.text == "(") {
      next();
      FormulaPtr inner = parse_dist_formula();
      expect_punct(")");
      return inner;
    }
    // A state formula in distribution position abbreviates its positive-mass
    // test, as in <b>tt for <b>[tt]_0.
    if ((t.type == Token::Ident && t.text == "tt") ||
        (t.type == Token::Punct && (t.text == "<" || t.text == "!"))) {
      return Formula::atom(parse_state_atom(), 0);
    }
    fail(ErrorCode::SyntaxError, t, "expected a distribution formula");
  }

  Lexer lexer_;
  size_t pos_ = 0;
  bool lenient_;
};

}  // namespace

SpecAst parse_spec(const std::string& text) {
  Parser p(text, /*lenient=*/false);
  return p.parse_spec_file();
}

SpecAst parse_spec_lenient(const std::string& text) {
  Parser p(text, /*lenient=*/true);
  return p.parse_spec_file();
}

TermPtr parse_term(const std::string& text, const SpecAst& spec) {
  size_t a = text.find_first_not_of(" \t\n");
  size_t b = text.find_last_not_of(" \t\n");
  std::string trimmed =
      a == std::string::npos ? "" : text.substr(a, b - a + 1);
  if (auto t = spec.lookup_def(trimmed)) return t;
  Parser p(trimmed, false);
  return p.parse_standalone_term(spec);
}

FormulaPtr parse_formula(const std::string& text) {
  Parser p(text, false);
  return p.parse_standalone_formula();
}

std::string MeasureSet::text() const {
  if (is_set_var) return set_var;
  std::string out = "{";
  for (size_t i = 0; i < elements.size(); ++i) {
    if (i) out += ", ";
    out += elements[i]->text();
  }
  return out + "}";
}

std::string render(const RuleSchema& rule) {
  std::ostringstream out;
  out << "rule " << rule.name << ":";
  for (const auto& p : rule.positives) {
    out << "  " << p.source->text() << " -" << p.action << "-> " << p.target;
  }
  for (const auto& n : rule.negatives) {
    out << "  " << n.source->text() << " -/" << n.action << "->";
  }
  for (const auto& fa : rule.foralls) {
    out << "  forall " << fa.binder << " in " << fa.set_var << ": "
        << fa.source->text();
    if (fa.positive) {
      out << " -" << fa.action << "-> " << fa.target;
    } else {
      out << " -/" << fa.action << "->";
    }
  }
  for (const auto& cb : rule.combines) {
    out << "  combine " << cb.family_var << " as " << cb.sym;
  }
  for (const auto& q : rule.quants) {
    out << "  " << q.dist->text() << "(" << q.set.text() << ") "
        << cmp_text(q.cmp) << " " << rational_text(q.bound);
  }
  out << "  => " << rule.conc_source->text() << " -" << rule.conc_action
      << "-> " << rule.conc_target->text();
  return out.str();
}

std::string render(const SpecAst& spec) {
  std::ostringstream out;
  out << "spec " << spec.name << "\n";
  out << "actions";
  for (size_t i = 0; i < spec.actions.size(); ++i) {
    out << (i ? ", " : " ") << spec.actions[i];
  }
  out << "\n";
  for (const auto& [name, decl] : spec.sig.ops()) {
    bool implicit_prefix = spec.is_action(name) && decl.arg_sorts.size() == 1 &&
                           decl.arg_sorts[0] == Sort::Dist;
    if (implicit_prefix) continue;
    out << "op " << name << " :";
    for (Sort s : decl.arg_sorts) out << " " << sort_name(s);
    out << " -> S\n";
  }
  for (const auto& r : spec.rules) out << render(r) << "\n";
  for (const auto& name : spec.def_order) {
    out << "def " << name << " = " << spec.defs.at(name)->text() << "\n";
  }
  return out.str();
}

bool SpecAst::is_action(const std::string& a) const {
  for (const auto& x : actions) {
    if (x == a) return true;
  }
  return false;
}

TermPtr SpecAst::lookup_def(const std::string& n) const {
  auto it = defs.find(n);
  return it == defs.end() ? nullptr : it->second;
}

std::set<std::string> RuleSchema::premise_targets() const {
  std::set<std::string> out;
  for (const auto& p : positives) out.insert(p.target);
  for (const auto& fa : foralls) {
    if (fa.positive) out.insert(fa.target);
  }
  return out;
}

std::set<std::string> RuleSchema::source_binders() const {
  return conc_source->all_vars();
}

}  // namespace ptss
