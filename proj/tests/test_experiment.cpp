#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "pdmp/error.hpp"
#include "pdmp/experiment.hpp"

using namespace pdmp;

namespace {

std::string parse_error_text(const std::string& text) {
  try {
    (void)parse_config(text);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::parse_error);
    return e.what();
  }
  FAIL("config was accepted");
  return {};
}

bool contains(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

const ReportRow* find_row(const ExperimentReport& r, const std::string& prefix) {
  for (const auto& row : r.rows)
    if (row.name.rfind(prefix, 0) == 0) return &row;
  return nullptr;
}

}  // namespace

TEST_CASE("minimal tcp config is valid") {
  const ExperimentConfig c =
      parse_config("kind=simulate\nvariant=tcp\nlambda=1\nhorizon=10\nsamples=1000\nseed=42\n");
  CHECK(c.kind == ExperimentKind::simulate);
  CHECK(c.seed == 42);
  CHECK(c.samples == 1000);
  REQUIRE(c.times.size() == 1);
  CHECK(c.times[0] == 10.0);
}

TEST_CASE("config errors are all listed with line numbers") {
  const std::string telegraph = parse_error_text(
      "kind = simulate\nvariant = telegraph\na = 2\nb = 1\nhorizon = 5\nsamples = 10\nseed = 1\n");
  CHECK(contains(telegraph, "requires a < b"));
  CHECK(contains(telegraph, "line 2"));

  const std::string no_seed = parse_error_text("kind = simulate\nvariant = tcp\nlambda = 1\nhorizon = 10\nsamples = 5\n");
  CHECK(contains(no_seed, "`seed`"));

  const std::string many = parse_error_text(
      "kind = gcurve\nseed = 1\nr = 3, 1\nbogus = 4\n# comment\nsearch_lo = x\n");
  CHECK(contains(many, "line 4"));
  CHECK(contains(many, "bogus"));
  CHECK(contains(many, "sorted"));
  CHECK(contains(many, "line 6"));

  CHECK(contains(parse_error_text("kind = simulate\nseed = 1\nseed = 2\n"), "line 3"));
  CHECK(contains(parse_error_text("kind = wobble\nseed = 1\n"), "wobble"));
  CHECK(contains(parse_error_text("kind = simulate\nvariant = tcp\nlambda = 1\nhorizon = 1\nsamples = 0\nseed = 1\n"),
                 "samples"));
}

TEST_CASE("coupling from equal starts reports exact coalescence") {
  const ExperimentConfig c = parse_config(
      "kind = couple\nseed = 3\nvariant = storage\nalpha = 1\nbeta = 1\ncoupling = tv-storage\n"
      "x = 1\ny = 1\ntimes = 2\nsamples = 2000\n");
  const ExperimentReport r = run_experiment(c, 1);
  const ReportRow* row = find_row(r, "P(not coalesced | N_t >= 1)");
  REQUIRE(row != nullptr);
  CHECK(*row->estimate == 0.0);
  CHECK(row->verdict == Verdict::pass);
}

TEST_CASE("gcurve and stability tables") {
  const ExperimentReport g = run_experiment(parse_config("kind = gcurve\nseed = 1\nr = 0.5, 1, 4.6, 20\n"), 1);
  REQUIRE(g.files.size() == 1);
  std::istringstream lines(g.files[0].content);
  std::string header, first;
  std::getline(lines, header);
  std::getline(lines, first);
  CHECK(header == "r,G");
  CHECK(first.rfind("0.5,", 0) == 0);
  CHECK(first.size() > 16);  // 17 significant digits

  const ExperimentReport s =
      run_experiment(parse_config("kind = stability\nseed = 1\nalpha = 0.2, 0.3, 0.4\nrandom_checks = 5\n"), 1);
  const std::string table = s.files[0].content;
  CHECK(table.rfind("alpha,R,class\n", 0) == 0);
  CHECK(contains(table, "0.29999999999999999,"));
  CHECK(contains(table, "unstable"));
  CHECK(contains(table, ",stable"));
  CHECK(s.passed());
}

TEST_CASE("reports do not depend on the worker count") {
  const ExperimentConfig c = parse_config(
      "kind = couple\nseed = 9\nvariant = tcp\nlambda = 1\ncoupling = shared-noise\nx = 3\ny = 1\n"
      "times = 0.5, 1\npowers = 1, 2\nsamples = 5000\n");
  const ExperimentReport a = run_experiment(c, 1), b = run_experiment(c, 3), again = run_experiment(c, 1);
  CHECK(a.to_json() == b.to_json());
  CHECK(a.to_json() == again.to_json());
  REQUIRE(a.files.size() == b.files.size());
  for (std::size_t k = 0; k < a.files.size(); ++k) CHECK(a.files[k].content == b.files[k].content);
}

TEST_CASE("every row with an estimate and an oracle carries a tolerance") {
  for (const char* text : {"kind = eigen\nseed = 1\n", "kind = stability\nseed = 1\nalpha = 0.3, 0.4\nrandom_checks = 3\n",
                           "kind = moments\nseed = 2\nvariant = tcp\nlambda = 1\nx0 = 1\ntimes = 1\norders = 1, 2\nsamples = 500\n"}) {
    const ExperimentReport r = run_experiment(parse_config(text), 1);
    for (const auto& row : r.rows)
      if (row.estimate && row.oracle) CHECK_MESSAGE(row.tolerance.has_value(), row.name);
  }
}

TEST_CASE("report files are written under the output prefix") {
  const auto dir = std::filesystem::temp_directory_path() / "pdmp_report_test";
  std::filesystem::remove_all(dir);
  const ExperimentReport r = run_experiment(parse_config("kind = eigen\nseed = 1\noutput = eig\n"), 1);
  write_report(r, dir.string());
  CHECK(std::filesystem::exists(dir / "eig.json"));
  CHECK(std::filesystem::exists(dir / "eig.csv"));
  CHECK(std::filesystem::exists(dir / "eig.meta.json"));
  std::ifstream in(dir / "eig.json");
  const std::string json((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(json == r.to_json());
  CHECK_FALSE(contains(json, "wall"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("unwritable output directory names the path") {
  const ExperimentReport r = run_experiment(parse_config("kind = eigen\nseed = 1\n"), 1);
  try {
    write_report(r, "/proc/no/such/dir");
    FAIL("write succeeded");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::io_error);
    CHECK(contains(e.what(), "/proc/no/such/dir"));
  }
}
