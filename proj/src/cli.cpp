#include "ptss/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ptss/derivation.hpp"
#include "ptss/error.hpp"
#include "ptss/format.hpp"
#include "ptss/logic.hpp"
#include "ptss/parser.hpp"

namespace ptss {

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::SyntaxError, "cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

bool color_enabled() {
  const char* v = std::getenv("PTSS_COLOR");
  return v && std::string(v) == "1";
}

std::string paint(const std::string& text, const char* code) {
  if (!color_enabled()) return text;
  return std::string("\033[") + code + "m" + text + "\033[0m";
}

std::string good(const std::string& s) { return paint(s, "32"); }
std::string bad(const std::string& s) { return paint(s, "31"); }

char fragment_char(BisimKind kind) {
  switch (kind) {
    case BisimKind::Strong: return 'b';
    case BisimKind::Convex: return 'c';
    case BisimKind::Abstracted: return 'a';
    case BisimKind::Obliterated: return 'o';
  }
  return 'b';
}

struct Common {
  std::string spec_path;
  std::string output = "text";
  size_t fuel = 10000;

  bool machine() const { return output == "machine"; }
};

int cmd_check(const Common& common, const std::string& format,
              std::ostream& out) {
  SpecAst spec = parse_spec_lenient(slurp(common.spec_path));
  std::vector<FormatKind> kinds;
  if (format == "all") {
    kinds = {FormatKind::NtMuFXTheta, FormatKind::Convex,
             FormatKind::Abstracted, FormatKind::Obliterated};
  } else {
    kinds = {format_kind_from(format)};
  }
  bool ok = true;
  nlohmann::json doc;
  doc["command"] = "check";
  doc["reports"] = nlohmann::json::array();
  for (FormatKind k : kinds) {
    FormatReport report = check_format(spec, k);
    ok = ok && report.all_conform();
    if (common.machine()) {
      doc["reports"].push_back(nlohmann::json::parse(report.json()));
    } else {
      for (const auto& v : report.rules) {
        out << v.rule << " [" << format_kind_name(v.format) << "] "
            << (v.conforms ? good("conforms")
                           : bad("violates condition " + v.condition) +
                                 " (witness: " + v.witness + ")")
            << "\n";
      }
      out << "well-founded: " << (report.well_founded ? "yes" : "no") << "\n";
      if (k == FormatKind::Convex) {
        out << "convex-closed: " << (report.convex_closed ? "yes" : "no")
            << "\n";
      }
    }
  }
  if (common.machine()) {
    doc["verdict"] = ok ? "conforms" : "violates";
    out << doc.dump(2) << "\n";
  }
  return ok ? 0 : 1;
}

int cmd_derive(const Common& common, const std::string& term_text,
               bool require_complete, std::ostream& out) {
  SpecAst spec = parse_spec(slurp(common.spec_path));
  TermPtr root = parse_term(term_text, spec);
  TransitionTable table = stable_model(spec, {root}, common.fuel);
  bool complete = is_complete(table);

  nlohmann::json doc;
  doc["command"] = "derive";
  doc["complete"] = complete;
  doc["budget_exhausted"] = table.budget_exhausted;
  doc["iterations"] = table.iterations;
  doc["transitions"] = nlohmann::json::array();
  for (const Transition& tr : table.ct) {
    FiniteDistribution pi = eval_dist(tr.target, spec.sig);
    if (common.machine()) {
      nlohmann::json entry;
      entry["source"] = tr.source->text();
      entry["action"] = tr.action;
      nlohmann::json dist = nlohmann::json::object();
      for (const auto& [u, p] : pi.support()) {
        dist[u->text()] = rational_text(p);
      }
      entry["distribution"] = dist;
      doc["transitions"].push_back(entry);
    } else {
      out << tr.source->text() << " --" << tr.action << "--> " << pi.text()
          << "\n";
    }
  }
  if (common.machine()) {
    out << doc.dump(2) << "\n";
  } else if (!complete) {
    out << bad(table.budget_exhausted ? "warning: state budget exhausted"
                                      : "warning: model incomplete (CT != PT)")
        << "\n";
  }
  return (require_complete && !complete) ? 1 : 0;
}

int cmd_bisim(const Common& common, const std::string& rel,
              const std::string& t1_text, const std::string& t2_text,
              bool explain, const std::string& pts_path, std::ostream& out) {
  SpecAst spec = parse_spec(slurp(common.spec_path));
  BisimKind kind = bisim_kind_from(rel);
  TermPtr t1 = parse_term(t1_text, spec);
  TermPtr t2 = parse_term(t2_text, spec);

  Pts pts;
  if (!pts_path.empty()) {
    pts = import_pts(slurp(pts_path), spec);
  } else {
    TransitionTable table = stable_model(spec, {t1, t2}, common.fuel);
    if (!is_complete(table)) {
      throw Error(ErrorCode::IncompleteModel,
                  table.budget_exhausted ? "state budget exhausted"
                                         : "least stable model is 3-valued");
    }
    pts = build_pts(table, spec.sig);
  }
  bool verdict = equivalent(pts, t1, t2, kind);
  std::string formula_text;
  if (!verdict && explain) {
    if (auto f = distinguishing_formula(pts, t1, t2, fragment_char(kind))) {
      formula_text = (*f)->text();
    } else {
      formula_text = "(no separating formula exists in this fragment)";
    }
  }
  if (common.machine()) {
    nlohmann::json doc;
    doc["command"] = "bisim";
    doc["relation"] = rel;
    doc["verdict"] = verdict;
    if (!formula_text.empty()) doc["distinguishing_formula"] = formula_text;
    out << doc.dump(2) << "\n";
  } else {
    out << (verdict ? good("true") : bad("false")) << "\n";
    if (!formula_text.empty()) out << formula_text << "\n";
  }
  return verdict ? 0 : 1;
}

int cmd_mc(const Common& common, const std::string& term_text,
           const std::string& formula_text, const std::string& logic,
           std::ostream& out) {
  SpecAst spec = parse_spec(slurp(common.spec_path));
  TermPtr t = parse_term(term_text, spec);
  FormulaPtr f = parse_formula(formula_text);
  char frag = logic.empty() ? 'b' : logic[0];
  if (std::string("bcao").find(frag) == std::string::npos) {
    throw Error(ErrorCode::FragmentMismatch, "logic must be b, c, a, or o");
  }
  if (!in_fragment(f, frag)) {
    std::set<char> have = fragment_of(f);
    std::string fragments(have.begin(), have.end());
    throw Error(ErrorCode::FragmentMismatch,
                "formula lies in fragments {" + fragments + "}, not in '" +
                    std::string(1, frag) + "'");
  }
  TransitionTable table = stable_model(spec, {t}, common.fuel);
  if (!is_complete(table)) {
    throw Error(ErrorCode::IncompleteModel, "cannot model-check a 3-valued model");
  }
  Pts pts = build_pts(table, spec.sig);
  bool verdict = sat_state(pts, t, f);
  if (common.machine()) {
    nlohmann::json doc;
    doc["command"] = "mc";
    doc["verdict"] = verdict;
    out << doc.dump(2) << "\n";
  } else {
    out << (verdict ? good("satisfied") : bad("not satisfied")) << "\n";
  }
  return verdict ? 0 : 1;
}

int cmd_distinguish(const Common& common, const std::string& rel,
                    const std::string& t1_text, const std::string& t2_text,
                    std::ostream& out) {
  SpecAst spec = parse_spec(slurp(common.spec_path));
  BisimKind kind = bisim_kind_from(rel);
  TermPtr t1 = parse_term(t1_text, spec);
  TermPtr t2 = parse_term(t2_text, spec);
  TransitionTable table = stable_model(spec, {t1, t2}, common.fuel);
  if (!is_complete(table)) {
    throw Error(ErrorCode::IncompleteModel, "least stable model is 3-valued");
  }
  Pts pts = build_pts(table, spec.sig);
  auto f = distinguishing_formula(pts, t1, t2, fragment_char(kind));
  bool eq = equivalent(pts, t1, t2, kind);
  if (common.machine()) {
    nlohmann::json doc;
    doc["command"] = "distinguish";
    doc["equivalent"] = eq;
    if (f) doc["formula"] = (*f)->text();
    out << doc.dump(2) << "\n";
  } else if (f) {
    out << (*f)->text() << "\n";
  } else {
    out << (eq ? "equivalent"
               : "inequivalent, but no separating formula exists in this fragment")
        << "\n";
  }
  return f ? 0 : 1;
}

int cmd_probe(const Common& common, const std::string& rel, int trials,
              std::uint64_t seed, std::ostream& out) {
  SpecAst spec = parse_spec(slurp(common.spec_path));
  BisimKind kind = bisim_kind_from(rel);
  ProbeReport report = congruence_probe(spec, kind, trials, seed, common.fuel);
  if (common.machine()) {
    nlohmann::json doc;
    doc["command"] = "probe";
    doc["trials"] = report.trials;
    doc["equivalent_pairs"] = report.equivalent_pairs;
    doc["skipped_incomplete"] = report.skipped_incomplete;
    doc["violations"] = nlohmann::json::array();
    for (const auto& v : report.violations) {
      nlohmann::json entry;
      entry["context"] = v.context;
      entry["left"] = v.left->text();
      entry["right"] = v.right->text();
      doc["violations"].push_back(entry);
    }
    doc["verdict"] = report.violations.empty() ? "no-violations" : "violations";
    out << doc.dump(2) << "\n";
  } else {
    if (report.violations.empty()) {
      out << good("no violations") << " in " << report.trials << " trials ("
          << report.equivalent_pairs << " equivalent pairs probed, "
          << report.skipped_incomplete << " skipped)\n";
    } else {
      for (const auto& v : report.violations) {
        out << bad("violation") << ": context " << v.context << " separates "
            << v.left->text() << " and " << v.right->text() << "\n";
      }
    }
  }
  return report.violations.empty() ? 0 : 1;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"workbench for probabilistic transition system specifications"};
  app.require_subcommand(1);

  Common common;
  std::string format = "all";
  std::string rel = "strong";
  std::string term_text, formula_text, logic = "b";
  std::string t1_text, t2_text, pts_path;
  bool require_complete = false, explain = false;
  int trials = 200;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("spec", common.spec_path, "specification file (.ptss)")
        ->required();
    cmd->add_option("--output", common.output, "text or machine")
        ->check(CLI::IsMember({"text", "machine"}));
    cmd->add_option("--fuel", common.fuel, "state exploration budget");
  };

  CLI::App* check = app.add_subcommand("check", "static rule format analysis");
  add_common(check);
  check->add_option("--format", format,
                    "ntmufxtheta, convex, abstracted, obliterated, or all");

  CLI::App* derive = app.add_subcommand("derive", "derive the transition system");
  add_common(derive);
  derive->add_option("--term", term_text, "root term or named definition")
      ->required();
  derive->add_flag("--require-complete", require_complete,
                   "fail when the model is 3-valued");

  CLI::App* bisim = app.add_subcommand("bisim", "decide a bisimulation");
  add_common(bisim);
  bisim->add_option("--rel", rel, "strong, convex, abstracted, obliterated");
  bisim->add_option("t1", t1_text, "first term")->required();
  bisim->add_option("t2", t2_text, "second term")->required();
  bisim->add_flag("--explain", explain, "print a distinguishing formula");
  bisim->add_option("--pts", pts_path, "use a transition listing instead of deriving");

  CLI::App* mc = app.add_subcommand("mc", "model-check a formula");
  add_common(mc);
  mc->add_option("--term", term_text, "state term")->required();
  mc->add_option("--formula", formula_text, "formula text")->required();
  mc->add_option("--logic", logic, "b, c, a, or o");

  CLI::App* distinguish =
      app.add_subcommand("distinguish", "synthesize a separating formula");
  add_common(distinguish);
  distinguish->add_option("--rel", rel, "strong, convex, abstracted, obliterated");
  distinguish->add_option("t1", t1_text, "first term")->required();
  distinguish->add_option("t2", t2_text, "second term")->required();

  CLI::App* probe = app.add_subcommand("probe", "empirical congruence probe");
  add_common(probe);
  probe->add_option("--rel", rel, "strong, convex, abstracted, obliterated");
  probe->add_option("--trials", trials, "number of term pairs to try");
  probe->add_option("--seed", seed, "random seed");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (check->parsed()) return cmd_check(common, format, out);
    if (derive->parsed()) return cmd_derive(common, term_text, require_complete, out);
    if (bisim->parsed()) {
      return cmd_bisim(common, rel, t1_text, t2_text, explain, pts_path, out);
    }
    if (mc->parsed()) return cmd_mc(common, term_text, formula_text, logic, out);
    if (distinguish->parsed()) {
      return cmd_distinguish(common, rel, t1_text, t2_text, out);
    }
    if (probe->parsed()) return cmd_probe(common, rel, trials, seed, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  err << "error: no command\n";
  return 2;
}

}  // namespace ptss
