#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ptss/cli.hpp"

using namespace ptss;

namespace {

std::string data(const std::string& name) {
  return std::string(PTSS_TEST_DATA) + "/" + name;
}

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("check exit codes") {
  CHECK(run({"check", data("base_pa.ptss")}).code == 0);
  CHECK(run({"check", data("eq1.ptss"), "--format=convex"}).code == 1);
  CHECK(run({"check", data("eq1.ptss"), "--format=ntmufxtheta"}).code == 0);

  Run broken = run({"check", data("nosuch.ptss")});
  CHECK(broken.code == 2);
  CHECK(broken.err.find("error") != std::string::npos);
}

TEST_CASE("check reports the violated condition") {
  Run r = run({"check", data("eq1.ptss"), "--format=convex"});
  CHECK(r.out.find("violates condition 7") != std::string::npos);
}

TEST_CASE("malformed input exits 2") {
  std::string path = std::string(PTSS_TEST_DATA) + "/malformed_tmp.ptss";
  {
    std::ofstream f(path);
    f << "spec broken actions a rule r: => x -nosucharrow\n";
  }
  CHECK(run({"check", path}).code == 2);
  std::remove(path.c_str());
}

TEST_CASE("derive lists evaluated transitions") {
  Run r = run({"derive", data("base_pa.ptss"), "--term", "t5"});
  CHECK(r.code == 0);
  CHECK(r.out.find("--a--> {b.dirac(0): 1/2, c.dirac(0): 1/2}") != std::string::npos);

  Run empty = run({"derive", data("base_pa.ptss"), "--term", "0"});
  CHECK(empty.code == 0);
  CHECK(empty.out.empty());

  Run incomplete = run({"derive", data("negcycle.ptss"), "--term", "root"});
  CHECK(incomplete.code == 0);
  CHECK(incomplete.out.find("model incomplete") != std::string::npos);
  CHECK(run({"derive", data("negcycle.ptss"), "--term", "root",
             "--require-complete"}).code == 1);
}

TEST_CASE("bisim verdicts and exit codes") {
  CHECK(run({"bisim", data("base_pa.ptss"), "--rel", "convex", "t1", "t2"}).code == 0);
  CHECK(run({"bisim", data("base_pa.ptss"), "--rel", "strong", "t1", "t1"}).code == 0);
  Run r = run({"bisim", data("base_pa.ptss"), "--rel", "abstracted", "t5", "t6",
               "--explain"});
  CHECK(r.code == 1);
  CHECK(r.out.find("false") != std::string::npos);
  CHECK(r.out.find("<a>") != std::string::npos);  // a distinguishing formula

  // Incomplete model is a model error, not a negative verdict.
  CHECK(run({"bisim", data("negcycle.ptss"), "--rel", "strong", "root", "0"}).code == 2);
}

TEST_CASE("bisim accepts a transition listing") {
  Run exported = run({"derive", data("base_pa.ptss"), "--term", "t1"});
  Run exported2 = run({"derive", data("base_pa.ptss"), "--term", "t2"});
  std::string path = std::string(PTSS_TEST_DATA) + "/listing_tmp.pts";
  {
    std::ofstream f(path);
    f << exported.out << exported2.out;
  }
  Run r = run({"bisim", data("base_pa.ptss"), "--rel", "convex", "t1", "t2",
               "--pts", path});
  CHECK(r.code == 0);
  Run s = run({"bisim", data("base_pa.ptss"), "--rel", "strong", "t1", "t2",
               "--pts", path});
  CHECK(s.code == 1);
  std::remove(path.c_str());
}

TEST_CASE("mc verdicts") {
  CHECK(run({"mc", data("base_pa.ptss"), "--term", "t2", "--formula",
             "<a>([<b>tt]_1/2 /\\ [<c>tt]_1/2)"}).code == 0);
  CHECK(run({"mc", data("base_pa.ptss"), "--term", "t1", "--formula",
             "<a>([<b>tt]_1/2 /\\ [<c>tt]_1/2)"}).code == 1);
  CHECK(run({"mc", data("base_pa.ptss"), "--term", "t1", "--formula", "tt"}).code == 0);
  // Meets are outside the single-test fragment.
  Run frag = run({"mc", data("base_pa.ptss"), "--term", "t5", "--formula",
                  "<a>([<b>tt]_0 /\\ [<c>tt]_0)", "--logic", "o"});
  CHECK(frag.code == 2);
  CHECK(frag.err.find("FragmentMismatch") != std::string::npos);
}

TEST_CASE("probe reports violations deterministically") {
  Run r = run({"probe", data("eq1.ptss"), "--rel", "convex", "--trials", "10",
               "--seed", "0"});
  CHECK(r.code == 1);
  CHECK(r.out.find("violation") != std::string::npos);
  CHECK(r.out.find("f(_)") != std::string::npos);
  Run again = run({"probe", data("eq1.ptss"), "--rel", "convex", "--trials",
                   "10", "--seed", "0"});
  CHECK(again.out == r.out);

  Run clean = run({"probe", data("conforming.ptss"), "--rel", "strong",
                   "--trials", "10", "--seed", "0"});
  CHECK(clean.code == 0);
  CHECK(clean.out.find("no violations") != std::string::npos);
}

TEST_CASE("machine output agrees with text verdicts") {
  Run text = run({"bisim", data("base_pa.ptss"), "--rel", "convex", "t1", "t2"});
  Run machine = run({"bisim", data("base_pa.ptss"), "--rel", "convex", "t1",
                     "t2", "--output", "machine"});
  CHECK(machine.code == text.code);
  nlohmann::json doc = nlohmann::json::parse(machine.out);
  CHECK(doc["command"] == "bisim");
  CHECK(doc["verdict"] == true);

  Run mc_machine = run({"mc", data("base_pa.ptss"), "--term", "t1",
                        "--formula", "tt", "--output", "machine"});
  CHECK(nlohmann::json::parse(mc_machine.out)["verdict"] == true);

  Run check_machine =
      run({"check", data("eq1.ptss"), "--format=convex", "--output", "machine"});
  nlohmann::json report = nlohmann::json::parse(check_machine.out);
  CHECK(report["verdict"] == "violates");
  CHECK(check_machine.code == 1);

  Run probe_machine = run({"probe", data("eq4.ptss"), "--rel", "convex",
                           "--trials", "10", "--output", "machine"});
  nlohmann::json probe = nlohmann::json::parse(probe_machine.out);
  CHECK(probe["verdict"] == "violations");
  CHECK(probe["violations"].size() > 0);
}

TEST_CASE("distinguish prints a formula or reports equivalence") {
  Run r = run({"distinguish", data("base_pa.ptss"), "--rel", "strong", "t1", "t2"});
  CHECK(r.code == 0);
  CHECK(!r.out.empty());
  Run eq = run({"distinguish", data("base_pa.ptss"), "--rel", "obliterated",
                "t5", "t6"});
  CHECK(eq.code == 1);
  CHECK(eq.out.find("equivalent") != std::string::npos);
}

TEST_CASE("color toggle wraps verdicts") {
  setenv("PTSS_COLOR", "1", 1);
  Run colored = run({"bisim", data("base_pa.ptss"), "--rel", "convex", "t1", "t2"});
  CHECK(colored.out.find("\033[32m") != std::string::npos);
  setenv("PTSS_COLOR", "0", 1);
  Run plain = run({"bisim", data("base_pa.ptss"), "--rel", "convex", "t1", "t2"});
  CHECK(plain.out.find("\033[") == std::string::npos);
  unsetenv("PTSS_COLOR");
}

TEST_CASE("usage errors exit 2") {
  CHECK(run({"bisim", data("base_pa.ptss"), "--rel", "nosuch", "t1", "t2"}).code == 2);
  CHECK(run({"wat"}).code == 2);
  CHECK(run({}).code == 2);
}
