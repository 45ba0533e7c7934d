// CSV reading/writing and command-line tool contract tests. The CLI binary
// path is injected by the build as SGND_CLI_PATH.
#include <catch2/catch_amalgamated.hpp>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sgnd/csv.hpp"

namespace fs = std::filesystem;

namespace {

fs::path tmp_file(const std::string& name) {
  return fs::temp_directory_path() / name;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  f << text;
}

std::string read_text(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args, const fs::path& stdout_file = {}) {
  std::string cmd = std::string(SGND_CLI_PATH) + " " + args;
  if (!stdout_file.empty()) cmd += " > " + stdout_file.string();
  const int rc = std::system(cmd.c_str());
  return rc == -1 ? -1 : WEXITSTATUS(rc);
}

std::vector<std::vector<std::string>> parse_csv_text(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("csv round trip preserves header and values") {
  const fs::path p = tmp_file("sgnd_roundtrip.csv");
  Eigen::MatrixXd m(3, 2);
  m << 1.5, -2.25, 0.0, 1e-7, 12345.678, 3.0;
  sgnd::write_csv(p.string(), {"a", "b"}, m);
  const sgnd::CsvTable t = sgnd::read_csv(p.string());
  REQUIRE(t.header == std::vector<std::string>{"a", "b"});
  REQUIRE(t.values.rows() == 3);
  CHECK(t.values.isApprox(m, 1e-10));
  CHECK(t.col("b") == 1);
  CHECK_THROWS_AS(t.col("c"), sgnd::MissingColumn);
}

TEST_CASE("malformed input produces specific errors") {
  const fs::path p = tmp_file("sgnd_bad.csv");

  write_text(p, "a,b\n1,2\n3\n");
  CHECK_THROWS_AS(sgnd::read_csv(p.string()), sgnd::CsvError);

  write_text(p, "a,b\n1,fish\n");
  CHECK_THROWS_AS(sgnd::read_csv(p.string()), sgnd::NonNumericCell);

  write_text(p, "a,b\n1,\n");
  CHECK_THROWS_AS(sgnd::read_csv(p.string()), sgnd::MissingValue);

  write_text(p, "a,b\n1,NA\n");
  CHECK_THROWS_AS(sgnd::read_csv(p.string()), sgnd::MissingValue);

  CHECK_THROWS_AS(sgnd::read_csv("/nonexistent/nope.csv"), sgnd::CsvError);
}

TEST_CASE("dataset assembly adds an intercept and honors covariate choice") {
  const fs::path p = tmp_file("sgnd_ds.csv");
  write_text(p, "y,u,v\n1,2,3\n4,5,6\n7,8,9\n");
  const sgnd::CsvTable t = sgnd::read_csv(p.string());

  const sgnd::Dataset all = sgnd::make_dataset(t, "y");
  REQUIRE(all.names == std::vector<std::string>{"u", "v"});
  CHECK(all.X.col(0).isOnes());
  CHECK(all.X(1, 1) == 5.0);
  CHECK(all.y[2] == 7.0);

  const sgnd::Dataset sub = sgnd::make_dataset(t, "y", {"v"});
  REQUIRE(sub.names == std::vector<std::string>{"v"});
  CHECK(sub.X(0, 1) == 3.0);
  CHECK_THROWS_AS(sgnd::make_dataset(t, "zz"), sgnd::MissingColumn);
}

TEST_CASE("cli fit is byte-for-byte reproducible on a shipped fixture") {
  const std::string base =
      "fit --data data/bostonhouseprice2.csv --response lcmedv --seed 3 ";
  const std::string p1 = (fs::temp_directory_path() / "io1_").string();
  const std::string p2 = (fs::temp_directory_path() / "io2_").string();
  REQUIRE(run_cli(base + "--out-prefix " + p1, tmp_file("io1_stdout")) == 0);
  REQUIRE(run_cli(base + "--out-prefix " + p2, tmp_file("io2_stdout")) == 0);
  for (const char* f : {"estimates.csv", "path.csv", "residuals.csv"}) {
    INFO(f);
    const std::string a = read_text(p1 + f);
    REQUIRE_FALSE(a.empty());
    CHECK(a == read_text(p2 + f));
  }
}

TEST_CASE("cli fit outputs satisfy the published invariants") {
  const std::string prefix = (fs::temp_directory_path() / "io3_").string();
  REQUIRE(run_cli("fit --data data/diabetes.csv --response Y --out-prefix " +
                      prefix,
                  tmp_file("io3_stdout")) == 0);

  const auto est = parse_csv_text(read_text(prefix + "estimates.csv"));
  REQUIRE(est.size() > 1);
  REQUIRE(est[0] ==
          std::vector<std::string>{"component", "variable",
                                   "estimate_original_scale",
                                   "estimate_standardized", "se", "ci_lo",
                                   "ci_hi", "selected"});
  // selected flag agrees with exact zeros in the standardized estimate.
  std::vector<double> standardized;
  for (std::size_t i = 1; i < est.size(); ++i) {
    const double std_est = std::stod(est[i][3]);
    standardized.push_back(std_est);
    const bool selected = est[i][7] == "1";
    const bool intercept = est[i][1] == "intercept" || est[i][1] == "nu_0";
    if (!intercept) CHECK(selected == (std_est != 0.0));
  }

  // path.csv: final row equals the standardized estimates column.
  const auto path = parse_csv_text(read_text(prefix + "path.csv"));
  REQUIRE(path.size() >= 2);
  const auto& last = path.back();
  REQUIRE(last.size() == standardized.size() + 1);  // leading epsilon column
  for (std::size_t j = 0; j < standardized.size(); ++j)
    CHECK(std::stod(last[j + 1]) == standardized[j]);

  // summary.json carries the fit-level diagnostics.
  const nlohmann::json summary =
      nlohmann::json::parse(read_text(prefix + "summary.json"));
  CHECK(summary.contains("bic"));
  CHECK(summary.contains("df"));
  CHECK(summary.contains("kappa_hat"));
  CHECK(summary.contains("breakdown_flag"));
  CHECK(summary["df"].get<int>() > 0);

  // residuals.csv: one standardized residual per observation.
  const auto resid = parse_csv_text(read_text(prefix + "residuals.csv"));
  CHECK(resid.size() == 442 + 1);
}

TEST_CASE("cli reports fatal errors as machine-readable JSON") {
  const fs::path out = tmp_file("io_err_stdout");
  const int rc = run_cli(
      "fit --data /nonexistent/nope.csv --response y --out-prefix /tmp/ioe_",
      out);
  CHECK(rc != 0);
  const nlohmann::json err = nlohmann::json::parse(read_text(out));
  CHECK(err.contains("error"));
  CHECK(err.contains("message"));
}
