#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include <substspec/cli.hpp>

#include "support/catalog.hpp"

using namespace substspec;
namespace cli = substspec::cli;
namespace fs = std::filesystem;

namespace {

const fs::path kSpecs = SUBSTSPEC_SPECS_DIR;

struct Run {
  int code = -1;
  std::string out;
};

Run run_tool(const std::string& args) {
  const std::string cmd = std::string(SUBSTSPEC_TOOL) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path temp_file(const std::string& name, const std::string& content) {
  const fs::path p = fs::temp_directory_path() / ("substspec_test_" + name);
  std::ofstream(p) << content;
  return p;
}

}  // namespace

TEST(SpecFiles, EveryExampleParses) {
  int count = 0;
  for (const auto& entry : fs::directory_iterator(kSpecs)) {
    if (entry.path().extension() != ".json") continue;
    EXPECT_NO_THROW(cli::parse_spec(entry.path())) << entry.path();
    ++count;
  }
  EXPECT_GE(count, 10);
}

TEST(SpecFiles, RoundTripIsBitExact) {
  for (const auto& entry : fs::directory_iterator(kSpecs)) {
    if (entry.path().extension() != ".json") continue;
    const auto s = cli::parse_spec(entry.path());
    const std::string once = cli::emit_spec(s);
    const auto back = cli::parse_spec_text(once);
    EXPECT_EQ(cli::emit_spec(back), once) << entry.path();
    EXPECT_EQ(back.names, s.names);
    for (std::size_t a = 0; a < s.size(); ++a)
      for (std::size_t j = 0; j < s.rules[a].size(); ++j) {
        EXPECT_EQ(back.rules[a][j].word, s.rules[a][j].word);
        EXPECT_EQ(back.rules[a][j].prob, s.rules[a][j].prob);
      }
  }
}

TEST(SpecFiles, MatchesCatalog) {
  const auto s = cli::parse_spec(kSpecs / "recog_p02.json");
  const auto c = catalog::recog(0.2);
  ASSERT_EQ(s.size(), c.size());
  for (std::size_t a = 0; a < s.size(); ++a) {
    ASSERT_EQ(s.rules[a].size(), c.rules[a].size());
    for (std::size_t j = 0; j < s.rules[a].size(); ++j) {
      EXPECT_EQ(s.rules[a][j].word, c.rules[a][j].word);
      EXPECT_EQ(s.rules[a][j].prob, c.rules[a][j].prob);
    }
  }
}

TEST(SpecFiles, MalformedJsonReportsLine) {
  try {
    cli::parse_spec_text("{\n  \"alphabet\": [\"a\",\n  ]\n}", "bad.json");
    FAIL() << "no exception";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(SpecFiles, FieldErrorsNameThePath) {
  try {
    cli::parse_spec_text(R"({"alphabet":["a"],"rules":{"a":[{"word":"aa"}]}})");
    FAIL() << "no exception";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("rules.a[0]"), std::string::npos) << e.what();
  }
  EXPECT_THROW(cli::parse_spec_text(R"({"alphabet":["a","b"],"rules":{"a":[{"word":"ab","prob":1}]}})"),
               ValidationError);
  EXPECT_THROW(cli::parse_spec_text(
                   R"({"alphabet":["a"],"rules":{"a":[{"word":"ac","prob":1}]}})"),
               ValidationError);
  EXPECT_THROW(cli::parse_spec_text(
                   R"({"alphabet":["a","b"],"rules":{"a":[{"word":"ab","prob":0.4},{"word":"ba","prob":0.5}],"b":[{"word":"a","prob":1}]}})"),
               ValidationError);
  EXPECT_THROW(cli::parse_spec("/nonexistent/spec.json"), ParseError);
}

TEST(Analyze, Regimes) {
  const auto rec = cli::analysis_report(catalog::recog(0.2));
  EXPECT_EQ(rec["regime"], "recognisable");
  EXPECT_EQ(rec["conditions"]["recognisability"]["radius"], 11);
  EXPECT_FALSE(rec["alpha_range"].is_null());
  EXPECT_EQ(rec["schema_version"], 1);
  EXPECT_EQ(cli::analysis_report(catalog::period_doubling())["regime"], "dsc");
  EXPECT_EQ(cli::analysis_report(catalog::isc())["regime"], "isc-ipp");
  const auto fib = cli::analysis_report(catalog::fibonacci(), {3, 4});
  EXPECT_EQ(fib["regime"], "bounds-only");
  EXPECT_EQ(fib["conditions"]["dsc"]["verdict"], "refuted");
  EXPECT_TRUE(fib["entropy"]["topological"].contains("lower"));
  const auto det = cli::analysis_report(catalog::fibonacci_deterministic());
  EXPECT_TRUE(det.contains("note"));
}

TEST(Spectrum, DeterministicAndClosedFormZeroAtOne) {
  cli::SpectrumOptions opt;
  opt.q_min = -1;
  opt.q_max = 2;
  opt.q_step = 0.5;
  opt.ks = {1, 3};
  const auto a = cli::spectrum_csv(catalog::recog(0.2), opt);
  const auto b = cli::spectrum_csv(catalog::recog(0.2), opt);
  EXPECT_EQ(a.text, b.text);
  EXPECT_TRUE(a.notes.empty());
  EXPECT_EQ(a.text.substr(0, a.text.find('\n')), "q,lower_k1,upper_k1,lower_k3,upper_k3,closed_form");
  const auto row = a.text.find("\n1,");
  ASSERT_NE(row, std::string::npos);
  const auto line = a.text.substr(row + 1, a.text.find('\n', row + 1) - row - 1);
  const auto last = line.substr(line.rfind(',') + 1);
  EXPECT_NEAR(std::stod(last), 0.0, 1e-12) << line;
}

TEST(Spectrum, CapProducesNotes) {
  cli::SpectrumOptions opt;
  opt.q_min = 0;
  opt.q_max = 1;
  opt.q_step = 0.5;
  opt.ks = {2, 12};
  opt.analyze.recog_max = 4;
  const auto out = cli::spectrum_csv(catalog::fibonacci(), opt);
  EXPECT_FALSE(out.notes.empty());
  EXPECT_NE(out.text.find("# "), std::string::npos);
}

TEST(Conjugate, EqualProbabilitiesGiveOnePoint) {
  const auto out = cli::conjugate_csv(catalog::recog(0.5), {});
  std::size_t rows = 0;
  std::istringstream in(out.text);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#' && line != "alpha,f") ++rows;
  EXPECT_EQ(rows, 1u);
}

TEST(Conjugate, NeedsRecognisability) {
  cli::ConjugateOptions opt;
  opt.analyze.recog_max = 4;
  EXPECT_THROW(cli::conjugate_csv(catalog::period_doubling(), opt), ConditionNotEstablished);
}

TEST(Oracle, SmallRunIsConsistent) {
  cli::OracleOptions opt;
  opt.n = 5;
  opt.bound_k = 3;
  const auto out = cli::run_oracle(catalog::recog(0.3), opt);
  EXPECT_TRUE(out.invariants_ok);
  EXPECT_EQ(out.comparison.substr(0, 2), "q,");
  EXPECT_NE(out.table.find('\n'), std::string::npos);
}

TEST(Tool, ExitCodes) {
  const std::string rec = (kSpecs / "recog_p02.json").string();
  auto r = run_tool("analyze " + rec);
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(cli::json::parse(r.out)["regime"], "recognisable");

  const auto bad = temp_file("bad.json", "{ not json");
  r = run_tool("analyze " + bad.string());
  EXPECT_EQ(r.code, 3);
  EXPECT_EQ(cli::json::parse(r.out)["error"]["type"], "ParseError");

  const auto invalid = temp_file(
      "invalid.json",
      R"({"alphabet":["a","b"],"rules":{"a":[{"word":"ab","prob":0.4},{"word":"ba","prob":0.5}],"b":[{"word":"a","prob":1}]}})");
  r = run_tool("analyze " + invalid.string());
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(cli::json::parse(r.out)["error"]["type"], "ValidationError");

  r = run_tool("spectrum " + (kSpecs / "fibonacci.json").string() +
               " --q-min 0 --q-max 1 --q-step 0.5 --k 2,12 --recog-max 4");
  EXPECT_EQ(r.code, 2);

  r = run_tool("conjugate " + (kSpecs / "period_doubling.json").string() + " --recog-max 4");
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(cli::json::parse(r.out)["error"]["type"], "ConditionNotEstablished");

  r = run_tool("oracle " + rec + " --n 6 --min-bound 0.5");
  EXPECT_EQ(r.code, 1);
  fs::remove(bad);
  fs::remove(invalid);
}

TEST(Tool, AtomicOutputFile) {
  const fs::path out = fs::temp_directory_path() / "substspec_test_conj.csv";
  fs::remove(out);
  const auto r = run_tool("conjugate " + (kSpecs / "recog_p04.json").string() + " --out " + out.string());
  EXPECT_EQ(r.code, 0);
  std::ifstream in(out);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "alpha,f");
  const auto direct = cli::conjugate_csv(cli::parse_spec(kSpecs / "recog_p04.json"), {});
  std::stringstream all;
  all << std::ifstream(out).rdbuf();
  EXPECT_EQ(all.str(), direct.text);
  fs::remove(out);
}
