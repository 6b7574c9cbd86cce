#include "ptss/pts.hpp"

#include <algorithm>
#include <sstream>

#include "ptss/error.hpp"
#include "ptss/parser.hpp"
#include "ptss/spec.hpp"

namespace ptss {

void Pts::add_state(const TermPtr& t) { states_.insert(t); }

void Pts::add_step(const TermPtr& source, const std::string& action,
                   const FiniteDistribution& pi) {
  states_.insert(source);
  for (const auto& [t, p] : pi.support()) states_.insert(t);
  auto& list = steps_[source][action];
  if (std::find(list.begin(), list.end(), pi) == list.end()) {
    list.push_back(pi);
    std::sort(list.begin(), list.end());
  }
}

std::vector<std::string> Pts::actions() const {
  std::set<std::string> acts;
  for (const auto& [t, by_action] : steps_) {
    for (const auto& [a, list] : by_action) acts.insert(a);
  }
  return {acts.begin(), acts.end()};
}

const std::vector<FiniteDistribution>& Pts::steps(const TermPtr& t,
                                                  const std::string& a) const {
  static const std::vector<FiniteDistribution> empty;
  auto it = steps_.find(t);
  if (it == steps_.end()) return empty;
  auto jt = it->second.find(a);
  return jt == it->second.end() ? empty : jt->second;
}

const std::map<std::string, std::vector<FiniteDistribution>>& Pts::steps_of(
    const TermPtr& t) const {
  static const std::map<std::string, std::vector<FiniteDistribution>> empty;
  auto it = steps_.find(t);
  return it == steps_.end() ? empty : it->second;
}

size_t Pts::num_steps() const {
  size_t n = 0;
  for (const auto& [t, by_action] : steps_) {
    for (const auto& [a, list] : by_action) n += list.size();
  }
  return n;
}

const TermSet& ObliteratedLts::successors(const TermPtr& t,
                                          const std::string& a) const {
  static const TermSet empty;
  auto it = edges.find(t);
  if (it == edges.end()) return empty;
  auto jt = it->second.find(a);
  return jt == it->second.end() ? empty : jt->second;
}

ObliteratedLts build_oblit_lts(const Pts& pts) {
  ObliteratedLts lts;
  lts.states = pts.states();
  for (const auto& t : pts.states()) {
    for (const auto& [a, list] : pts.steps_of(t)) {
      for (const auto& pi : list) {
        for (const auto& [u, p] : pi.support()) lts.edges[t][a].insert(u);
      }
    }
  }
  return lts;
}

std::string export_pts(const Pts& pts) {
  std::ostringstream out;
  for (const auto& t : pts.states()) {
    bool any = false;
    for (const auto& [a, list] : pts.steps_of(t)) {
      for (const auto& pi : list) {
        out << t->text() << " --" << a << "--> " << pi.text() << "\n";
        any = true;
      }
    }
    if (!any) out << t->text() << "\n";
  }
  return out.str();
}

Pts import_pts(const std::string& text, const SpecAst& spec) {
  Pts pts;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto nonblank = line.find_first_not_of(" \t");
    if (nonblank == std::string::npos || line[nonblank] == '#') continue;
    size_t arrow = line.find(" --");
    if (arrow == std::string::npos) {
      pts.add_state(parse_term(line, spec));
      continue;
    }
    size_t arrow_end = line.find("--> ", arrow + 3);
    if (arrow_end == std::string::npos) {
      throw Error(ErrorCode::SyntaxError,
                  "malformed transition on line " + std::to_string(lineno));
    }
    std::string source = line.substr(0, arrow);
    std::string action = line.substr(arrow + 3, arrow_end - arrow - 3);
    std::string dist = line.substr(arrow_end + 4);

    size_t open = dist.find('{');
    size_t close = dist.rfind('}');
    if (open == std::string::npos || close == std::string::npos) {
      throw Error(ErrorCode::SyntaxError,
                  "malformed distribution on line " + std::to_string(lineno));
    }
    std::vector<std::pair<TermPtr, Rational>> entries;
    std::string body = dist.substr(open + 1, close - open - 1);
    // Split on commas at depth zero; term texts may contain commas inside
    // parentheses.
    int depth = 0;
    size_t start = 0;
    auto flush = [&](size_t end) {
      std::string item = body.substr(start, end - start);
      size_t colon = item.rfind(':');
      if (colon == std::string::npos) {
        throw Error(ErrorCode::SyntaxError,
                    "expected 'term: probability' on line " + std::to_string(lineno));
      }
      std::string term_text = item.substr(0, colon);
      std::string prob_text = item.substr(colon + 1);
      auto trim = [](std::string s) {
        size_t a = s.find_first_not_of(" \t");
        size_t b = s.find_last_not_of(" \t");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
      };
      std::string pt = trim(prob_text);
      Rational p;
      size_t slash = pt.find('/');
      if (slash == std::string::npos) {
        p = Rational(pt);
      } else {
        p = Rational(pt.substr(0, slash)) / Rational(pt.substr(slash + 1));
      }
      entries.emplace_back(parse_term(trim(term_text), spec), p);
    };
    for (size_t i = 0; i < body.size(); ++i) {
      char c = body[i];
      if (c == '(' || c == '{' || c == '[') ++depth;
      if (c == ')' || c == '}' || c == ']') --depth;
      if (c == ',' && depth == 0) {
        flush(i);
        start = i + 1;
      }
    }
    if (start < body.size()) flush(body.size());
    pts.add_step(parse_term(source, spec), action,
                 FiniteDistribution::from_entries(std::move(entries)));
  }
  return pts;
}

}  // namespace ptss
