// End-to-end runs of the command-line tool: report lines, exit codes and
// manifest replay.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace {

struct CliRun {
  std::string out, err;
  int code = -1;
};

std::string temp_path(const std::string& name) { return ::testing::TempDir() + "lll_cli_" + name; }

CliRun cli(const std::string& args) {
  const std::string err_file = temp_path("stderr.txt");
  const std::string cmd = std::string(LLL_CLI_PATH) + " " + args + " 2>" + err_file;
  CliRun r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(err_file);
  std::stringstream ss;
  ss << in.rdbuf();
  r.err = ss.str();
  return r;
}

const std::string data = std::string(LLL_DATA_DIR) + "/";

TEST(Cli, CheckTriangleGolden) {
  CliRun r = cli("check " + data + "triangle.sys");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out,
            "tool=lll version=0.1.0 subcommand=check\n"
            "event=0 lhs=1/8~0.125 rhs=81/640~0.1265625 holds=1\n"
            "event=1 lhs=1/8~0.125 rhs=81/640~0.1265625 holds=1\n"
            "event=2 lhs=1/8~0.125 rhs=81/640~0.1265625 holds=1\n"
            "alpha=9/10~0.9 avoid_bound=27/64~0.421875\n"
            "equality_rows=0 all_hold=1\n"
            "fixed_m=3 fixed_rhs=9/80~0.1125 max_neighbors=2 fixed_holds=0\n"
            "exit=0\n");
  EXPECT_EQ(r.err, "");
}

TEST(Cli, CheckReportsEqualityRows) {
  CliRun r = cli("check " + data + "chain3.cnf --z 1/2 --alpha 1");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("event=1 lhs=1/8~0.125 rhs=1/8~0.125 holds=1\n"), std::string::npos);
  EXPECT_NE(r.out.find("equality_rows=2 all_hold=1\n"), std::string::npos);
  EXPECT_NE(r.out.find("fixed_holds=1"), std::string::npos);
  // Just below the threshold the condition fails.
  CliRun below = cli("check " + data + "chain3.cnf --z 1/2 --alpha 99/100");
  EXPECT_EQ(below.code, 1);
  EXPECT_NE(below.out.find("all_hold=0"), std::string::npos);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli("").code, 2);
  EXPECT_EQ(cli("bogus").code, 2);
  CliRun no_z = cli("check " + data + "no_z.sys");
  EXPECT_EQ(no_z.code, 2);
  EXPECT_EQ(no_z.err.rfind("error=", 0), 0u);
  EXPECT_EQ(cli("check /nonexistent/file.sys").code, 2);
  EXPECT_EQ(cli("solve " + data + "shared.sys --tape xyz").code, 2);
}

TEST(Cli, SubcommandHelp) {
  CliRun r = cli("avoid --help");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("--forbidden"), std::string::npos);
  EXPECT_EQ(cli("--help").code, 0);
}

TEST(Cli, ParseErrorCarriesLineNumber) {
  const std::string path = temp_path("bad.sys");
  std::ofstream(path) << "var 0 2 1/2 1/2\nevent 0 vbl 0 forbid 1\nevent 1 vbl 7 forbid 1\n";
  CliRun r = cli("check " + path);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
  EXPECT_EQ(r.out, "");
}

TEST(Cli, BudgetRefusals) {
  CliRun gw = cli("gw " + data + "shared.sys --bits 40");
  EXPECT_EQ(gw.code, 3);
  EXPECT_EQ(gw.err.rfind("budget_refused=", 0), 0u);
  // Six bits run out one draw before the hand-traced run ends.
  CliRun short_tape = cli("solve " + data + "shared.sys --tape 6:c4");
  EXPECT_EQ(short_tape.code, 3);
  EXPECT_NE(short_tape.out.find("status=tape_exhausted"), std::string::npos);
}

TEST(Cli, SolveAndWitnessOnExplicitTape) {
  CliRun r = cli("solve " + data + "shared.sys --tape 7:c4");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("status=satisfied resamples=2 verified=1\nassignment=010\n"), std::string::npos);
  CliRun w = cli("witness " + data + "shared.sys --tape 7:c4 --all");
  EXPECT_EQ(w.code, 0);
  EXPECT_NE(w.out.find("step=2 tree=1(0) size=2 valid=1 positions_match=1 bound=1/16~0.0625\n"), std::string::npos);
}

TEST(Cli, TrialsIndependentOfWorkers) {
  CliRun one = cli("solve " + data + "chain3.cnf --z 1/2 --trials 200 --seed 4 --workers 1");
  CliRun three = cli("solve " + data + "chain3.cnf --z 1/2 --trials 200 --seed 4 --workers 3");
  EXPECT_EQ(one.code, 0);
  EXPECT_EQ(one.out, three.out);
  EXPECT_NE(one.out.find("trials=200 satisfied=200 verified=200"), std::string::npos);
}

TEST(Cli, ExtractAndFireworks) {
  CliRun ex = cli("extract --atom '1(0)=1/2' --atom '0(1)=1/2' --arity 2 --r 2/5 --w 1 --cells 3");
  EXPECT_EQ(ex.code, 0);
  EXPECT_NE(ex.out.find("mode=threshold values=000\n"), std::string::npos);
  CliRun bad = cli("extract --atom '1(0)=1' --arity 2 --r 1/2 --cells 3");
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.out.find("contract_violation="), std::string::npos);
  CliRun fw = cli("fireworks --n 4 --oracle diverge-at:3 --k 2 --budget 100");
  EXPECT_EQ(fw.code, 0);
  EXPECT_NE(fw.out.find("n=4 win_probability_exact=3/4~0.75\n"), std::string::npos);
  EXPECT_NE(fw.out.find("status=taking"), std::string::npos);
  EXPECT_NE(fw.out.find("success_probability=3/4~0.75\n"), std::string::npos);
}

TEST(Cli, AvoidLongRuns) {
  CliRun r = cli("avoid --forbidden " + data + "long_factors.txt --length 300");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("beta=3/4~0.75 M_certified=22 M=22 fails_below=1\n"), std::string::npos);
  EXPECT_NE(r.out.find("length=300 scan=pass\n"), std::string::npos);
}

TEST(Cli, Selftest) {
  CliRun r = cli("selftest --bits 12");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("all_certified=1\n"), std::string::npos);
}

TEST(Cli, ManifestReplay) {
  const std::string m = temp_path("manifest.json");
  CliRun first = cli("--manifest " + m + " stream --family chain --m 4 --stride 2 --z 1/4 --alpha 1/2 --events 6");
  EXPECT_EQ(first.code, 0);
  CliRun again = cli("replay " + m);
  EXPECT_EQ(again.code, 0);
  EXPECT_EQ(again.out, "replay=match exit=0\n");

  // Failing runs replay as well, including their error line.
  const std::string failed = temp_path("failed.json");
  EXPECT_EQ(cli("--manifest " + failed + " check " + data + "no_z.sys").code, 2);
  EXPECT_EQ(cli("replay " + failed).out, "replay=match exit=2\n");

  // A tampered record no longer matches.
  std::ifstream in(m);
  std::stringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  auto pos = text.find("exit=0");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 6, "exit=5");
  std::ofstream(m) << text;
  CliRun tampered = cli("replay " + m);
  EXPECT_EQ(tampered.code, 1);
  EXPECT_EQ(tampered.out, "replay=mismatch exit=0\n");
  EXPECT_EQ(cli("replay " + temp_path("missing.json")).code, 2);
}

}  // namespace
