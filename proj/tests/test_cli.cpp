#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "latfact/cli.hpp"
#include "latfact/types.hpp"

using namespace latfact;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path fresh_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() / ("latfact_cli_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("factor 77 prints the factors and exits 0") {
  auto r = run_cli({"factor", "77", "--seed", "1"});
  CHECK(r.code == cli::exit_ok);
  CHECK(r.out.find("p = 7") != std::string::npos);
  CHECK(r.out.find("q = 11") != std::string::npos);
}

TEST_CASE("factor diagnostics map to exit code 2") {
  auto prime = run_cli({"factor", "13"});
  CHECK(prime.code == cli::exit_invalid_input);
  CHECK(prime.err.find("input is prime") != std::string::npos);

  auto even = run_cli({"factor", "1024"});
  CHECK(even.code == cli::exit_invalid_input);
  CHECK(even.err.find("even") != std::string::npos);

  auto power = run_cli({"factor", "28561"});
  CHECK(power.code == cli::exit_invalid_input);
  CHECK(power.err.find("perfect power") != std::string::npos);

  auto garbage = run_cli({"factor", "12x34"});
  CHECK(garbage.code == cli::exit_invalid_input);

  auto budget = run_cli({"factor", "968665573", "--budget", "1", "--seed", "1"});
  CHECK(budget.code == cli::exit_budget_exhausted);
}

TEST_CASE("factor --json emits a parsable report") {
  auto r = run_cli({"factor", "923587807", "--seed", "7", "--json"});
  CHECK(r.code == cli::exit_ok);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["status"] == "success");
  CHECK(j["n"] == "923587807");
  BigInt p = parse_decimal(j["p"].get<std::string>());
  BigInt q = parse_decimal(j["q"].get<std::string>());
  CHECK(p * q == BigInt("923587807"));
}

TEST_CASE("refine reports improvement and oracle MATCH") {
  auto r = run_cli({"refine", "--bits", "21", "--seed", "5", "--oracle"});
  CHECK(r.code == cli::exit_ok);
  CHECK(r.out.find("improvement") != std::string::npos);
  CHECK(r.out.find("MATCH") != std::string::npos);
}

TEST_CASE("refine with --sweeps 0 reports b_op unchanged") {
  auto r = run_cli({"refine", "--bits", "20", "--seed", "3", "--sweeps", "0", "--json"});
  CHECK(r.code == cli::exit_ok);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["initial_distance_sq"] == j["best_distance_sq"]);
  CHECK(j["improvement_pct"].get<double>() == doctest::Approx(0.0));
  CHECK(j["sweeps_run"] == 0);
}

TEST_CASE("refine --json validates against the documented fields") {
  auto r = run_cli({"refine", "--bits", "18", "--seed", "2", "--json", "--oracle"});
  CHECK(r.code == cli::exit_ok);
  auto j = nlohmann::json::parse(r.out);
  for (const char* key : {"schema_version", "n", "m", "seed", "initial_distance_sq",
                          "best_distance_sq", "improvement_pct", "sweeps_to_best",
                          "oracle_distance_sq", "oracle_match"}) {
    CHECK(j.contains(key));
  }
}

TEST_CASE("refine trace CSV is written") {
  auto dir = fresh_dir("trace");
  auto trace = (dir / "trace.csv").string();
  auto r = run_cli({"refine", "--bits", "18", "--seed", "2", "--trace", trace});
  CHECK(r.code == cli::exit_ok);
  std::string text = slurp(trace);
  CHECK(text.rfind("sweep_index,best_energy,current_energy,beta\n", 0) == 0);
}

TEST_CASE("enumerate writes a census CSV and can dump the lattice JSON") {
  auto dir = fresh_dir("census");
  auto out = (dir / "census.csv").string();
  auto lj = (dir / "lattice.json").string();
  auto r = run_cli({"enumerate", "--n", "968665573", "--seed", "2", "--out", out,
                    "--lattice-json", lj});
  CHECK(r.code == cli::exit_ok);
  std::string text = slurp(out);
  CHECK(text.rfind("state,distance_sq,is_sr_pair,u,v\n", 0) == 0);
  CHECK(r.out.find("sr-pairs found") != std::string::npos);
  auto j = nlohmann::json::parse(slurp(lj));
  CHECK(j["n"] == "968665573");
  CHECK(j.contains("basis_rows"));
}

TEST_CASE("factor dumps the relation set as JSON lines") {
  auto dir = fresh_dir("rels");
  auto rels = (dir / "relations.jsonl").string();
  auto r = run_cli({"factor", "923587807", "--seed", "7", "--relations", rels});
  CHECK(r.code == cli::exit_ok);
  std::istringstream is(slurp(rels));
  std::string line;
  int rows = 0;
  while (std::getline(is, line)) {
    auto j = nlohmann::json::parse(line);
    CHECK(j.contains("u"));
    CHECK(j.contains("e_prime"));
    ++rows;
  }
  CHECK(rows >= 2);
}

TEST_CASE("factor accepts --paper-scale for interface parity") {
  auto r = run_cli({"factor", "923587807", "--seed", "7", "--paper-scale"});
  CHECK(r.code == cli::exit_ok);
}

TEST_CASE("experiment runs are idempotent for identical config and seed") {
  auto dir1 = fresh_dir("exp1");
  auto r1 = run_cli({"experiment", "fig3", "--bits", "18:18", "--lattices", "4", "--seed", "7",
                     "--output", dir1.string()});
  CHECK(r1.code == cli::exit_ok);
  auto dir2 = fresh_dir("exp2");
  auto r2 = run_cli({"experiment", "fig3", "--bits", "18:18", "--lattices", "4", "--seed", "7",
                     "--output", dir2.string()});
  CHECK(r2.code == cli::exit_ok);
  CHECK(slurp(dir1 / "fig3.csv") == slurp(dir2 / "fig3.csv"));
  CHECK(!slurp(dir1 / "fig3.csv").empty());
}

TEST_CASE("experiment fig2a emits the documented columns") {
  auto dir = fresh_dir("fig2a");
  auto r = run_cli({"experiment", "fig2a", "--dims", "8:9", "--lattices", "3", "--seed", "3",
                    "--output", dir.string()});
  CHECK(r.code == cli::exit_ok);
  std::string csv = slurp(dir / "fig2a.csv");
  CHECK(csv.rfind("dimension,collision_rate,ci_low,ci_high", 0) == 0);
}

TEST_CASE("unknown experiment id and bad flags exit 2") {
  CHECK(run_cli({"experiment", "fig9"}).code == cli::exit_invalid_input);
  CHECK(run_cli({"bogus-subcommand"}).code == cli::exit_invalid_input);
  CHECK(run_cli({}).code == cli::exit_invalid_input);
  CHECK(run_cli({"factor"}).code == cli::exit_invalid_input);
}

TEST_CASE("--help succeeds") {
  auto r = run_cli({"--help"});
  CHECK(r.code == cli::exit_ok);
  CHECK(r.out.find("factor") != std::string::npos);
}

TEST_CASE("config file supplies defaults, flags win") {
  auto dir = fresh_dir("cfg");
  auto cfg = dir / "latfact.ini";
  {
    std::ofstream f(cfg);
    f << "seed=99\n";
  }
  auto r = run_cli({"refine", "--bits", "18", "--config", cfg.string(), "--json"});
  CHECK(r.code == cli::exit_ok);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["seed"] == 99);

  auto r2 = run_cli({"refine", "--bits", "18", "--config", cfg.string(), "--seed", "5", "--json"});
  auto j2 = nlohmann::json::parse(r2.out);
  CHECK(j2["seed"] == 5);
}
