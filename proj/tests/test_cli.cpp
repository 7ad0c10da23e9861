#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ccopf/cli.hpp"

using namespace ccopf;

namespace {

struct Result {
  int status;
  std::string out, err;
};

Result exec(const RunConfig& cfg) {
  std::ostringstream o, e;
  const int s = run(cfg, o, e);
  return {s, o.str(), e.str()};
}

Result exec_argv(std::vector<std::string> args) {
  args.insert(args.begin(), "ccopf");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream o, e;
  const int s = cli_main(static_cast<int>(argv.size()), argv.data(), o, e);
  return {s, o.str(), e.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

const std::string kCaseFile = std::string(CCOPF_SOURCE_DIR) + "/data/case14.json";

}  // namespace

TEST_CASE("default run prints every table") {
  const auto r = exec(RunConfig{});
  REQUIRE(r.status == 0);
  CHECK(r.err.empty());
  CHECK(r.out.find("332.40") != std::string::npos);
  CHECK(r.out.find("44.27") != std::string::npos);
  CHECK(r.out.find("27.35") != std::string::npos);
  CHECK(r.out.find("Congestion rent") != std::string::npos);
}

TEST_CASE("epsilon out of range exits 2") {
  RunConfig cfg;
  cfg.epsilon_a = 0.7;
  const auto r = exec(cfg);
  CHECK(r.status == 2);
  CHECK(r.err.find("epsilon out of range") != std::string::npos);
  CHECK(r.out.empty());
  CHECK(exec_argv({"--epsilon-a", "0.7"}).status == 2);
}

TEST_CASE("identical runs are byte-identical") {
  for (auto f : {OutputFormat::table, OutputFormat::csv, OutputFormat::json}) {
    RunConfig cfg;
    cfg.format = f;
    const auto a = exec(cfg), b = exec(cfg);
    CHECK(a.status == 0);
    CHECK(a.out == b.out);
  }
}

TEST_CASE("json output is a document with metadata") {
  RunConfig cfg;
  cfg.command = Command::prices;
  cfg.format = OutputFormat::json;
  const auto r = exec(cfg);
  REQUIRE(r.status == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["metadata"]["variant"] == "with-reserves");
  CHECK(j["metadata"]["variance_mode"] == "covariance");
  CHECK(j["buses"].size() == 14);
}

TEST_CASE("csv output has a header and one row per bus") {
  RunConfig cfg;
  cfg.command = Command::prices;
  cfg.format = OutputFormat::csv;
  const auto r = exec(cfg);
  REQUIRE(r.status == 0);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 15);
}

TEST_CASE("subcommands through argv") {
  CHECK(exec_argv({"solve"}).out.find("14463") != std::string::npos);
  CHECK(exec_argv({"prices", "--variant", "without-reserves"}).out.find("45.16") != std::string::npos);
  const auto s = exec_argv({"settle", "--bus", "14"});
  CHECK(s.status == 0);
  CHECK(s.out.find("energy revenue") != std::string::npos);
  CHECK(exec_argv({"solve", "--variant", "sideways"}).status == 2);
  CHECK(exec_argv({"no-such-command"}).status == 2);
}

TEST_CASE("validate-case on the shipped case file") {
  const auto r = exec_argv({"validate-case", "--case", kCaseFile});
  CHECK(r.status == 0);
  CHECK(r.out.find("14") != std::string::npos);
  const auto missing = exec_argv({"validate-case", "--case", "/nonexistent/case.json"});
  CHECK(missing.status == 2);
  CHECK_FALSE(missing.err.empty());
}

TEST_CASE("case file and builtin give the same report") {
  RunConfig a, b;
  b.case_source = kCaseFile;
  CHECK(exec(a).out == exec(b).out);
}

TEST_CASE("compare-modes reports four columns") {
  RunConfig cfg;
  cfg.command = Command::compare_modes;
  const auto c = compare_modes(cfg);
  CHECK(c.columns.size() == 4);
  CHECK(c.lpv.size() == 4);
  CHECK(c.max_abs_delta.maxCoeff() > 0.0);
  const auto r = exec(cfg);
  CHECK(r.status == 0);
  CHECK(r.out.find("max relative delta, paper-literal vs covariance") != std::string::npos);
}

TEST_CASE("compare-modes without variability shows zero deltas") {
  const auto dir = std::filesystem::temp_directory_path() / "ccopf_cli_test";
  std::filesystem::create_directories(dir);
  auto net = load_case("builtin-14");
  for (auto& b : net.buses) b.sigma = 0.0;
  std::ofstream(dir / "flat.json") << serialize_case(net);
  RunConfig cfg;
  cfg.command = Command::compare_modes;
  cfg.case_source = (dir / "flat.json").string();
  const auto c = compare_modes(cfg);
  CHECK(c.max_abs_delta.cwiseAbs().maxCoeff() == 0.0);
  CHECK(c.max_rel_delta == 0.0);
  CHECK(c.clamp_events.empty());
}

TEST_CASE("paper-literal clamps are listed in the footer") {
  RunConfig cfg;
  cfg.command = Command::compare_modes;
  const auto c = compare_modes(cfg);
  const auto text = exec(cfg).out;
  for (const auto& label : c.clamped_labels) CHECK(text.find(label) != std::string::npos);
  CHECK(text.find("clamp") != std::string::npos);
}

TEST_CASE("report and side files go to disk") {
  const auto dir = std::filesystem::temp_directory_path() / "ccopf_cli_test";
  std::filesystem::create_directories(dir);
  RunConfig cfg;
  cfg.command = Command::solve;
  cfg.out = (dir / "out.txt").string();
  cfg.trace_path = (dir / "trace.txt").string();
  cfg.dump_problem_path = (dir / "problem.txt").string();
  cfg.dump_gamma_path = (dir / "gamma.csv").string();
  const auto r = exec(cfg);
  CHECK(r.status == 0);
  CHECK(r.out.empty());
  CHECK(slurp(cfg.out).find("332.40") != std::string::npos);
  CHECK(slurp(cfg.trace_path).find("converged") != std::string::npos);
  CHECK(slurp(cfg.dump_problem_path).find("flow_upper") != std::string::npos);
  CHECK(slurp(cfg.dump_gamma_path).rfind("branch,", 0) == 0);
}

TEST_CASE("infeasible case exits 1") {
  const auto dir = std::filesystem::temp_directory_path() / "ccopf_cli_test";
  std::filesystem::create_directories(dir);
  auto net = load_case("builtin-14");
  for (auto& b : net.branches) b.rating = 5.0;
  std::ofstream(dir / "tight.json") << serialize_case(net);
  RunConfig cfg;
  cfg.case_source = (dir / "tight.json").string();
  const auto r = exec(cfg);
  CHECK(r.status == 1);
  CHECK(r.err.find("error:") != std::string::npos);
}

TEST_CASE("oracle table") {
  RunConfig cfg;
  cfg.command = Command::oracle;
  cfg.variant = Variant::without_reserves;
  const auto r = exec(cfg);
  CHECK(r.status == 0);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') >= 14);
}
