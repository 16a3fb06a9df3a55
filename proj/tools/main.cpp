// tokensim — run, validate, and benchmark access-control scenarios.
//
// Exit status: 0 on success (for `run`, success means every expectation in
// the scenario held), 1 on expectation failure or structural error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "sim/error.hpp"
#include "sim/log.hpp"
#include "sim/scenario.hpp"

namespace {

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw sim::SimError("cannot write " + path);
  out << content;
}

int cmd_run(const std::string& scenario_path, const std::string& report_path,
            const std::string& log_path, bool echo) {
  sim::EventLog log;
  log.set_echo(echo);
  int rc = 0;
  std::string failure_note;
  try {
    sim::scenario::Scenario scenario = sim::scenario::load_scenario(scenario_path);
    sim::scenario::RunReport report = sim::scenario::run(scenario, log);
    std::vector<std::string> failures =
        sim::scenario::evaluate_expect(scenario, report, log);
    if (!report_path.empty())
      write_file(report_path, sim::scenario::run_report_to_json(report));
    else
      std::cout << sim::scenario::run_report_to_json(report);
    if (failures.empty()) {
      std::cout << "ok: " << scenario.name << "\n";
    } else {
      rc = 1;
      std::cerr << "expectation failures in " << scenario.name << ":\n";
      for (const auto& f : failures) std::cerr << "  - " << f << "\n";
    }
  } catch (const sim::SimError& e) {
    rc = 1;
    failure_note = e.what();
  }
  // The log is flushed even when the run aborted mid-timeline: the partial
  // record is exactly what you want for debugging a broken scenario.
  if (!log_path.empty()) write_file(log_path, log.to_jsonl());
  if (!failure_note.empty()) std::cerr << "error: " << failure_note << "\n";
  return rc;
}

int cmd_validate(const std::string& scenario_path) {
  try {
    sim::scenario::Scenario scenario = sim::scenario::load_scenario(scenario_path);
    std::cout << "valid: " << scenario.name << " (" << scenario.timeline.size()
              << " events)\n";
    return 0;
  } catch (const sim::SimError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_bench(uint64_t iterations, const std::string& report_path) {
  sim::scenario::BenchConfig config;
  config.iterations = iterations;
  sim::scenario::BenchReport report = sim::scenario::run_bench(config);
  std::string json = sim::scenario::bench_report_to_json(report);
  if (!report_path.empty())
    write_file(report_path, json);
  else
    std::cout << json;
  return 0;
}

int cmd_matrix(const std::string& dir, bool echo) {
  const std::vector<std::string> names = {
      "baseline", "il-patch-only", "full-kernel-attack", "nerf-token",
      "ranger-armed"};
  int failures = 0;
  for (const auto& name : names) {
    const std::string path = dir + "/" + name + ".json";
    std::string verdict;
    try {
      sim::EventLog log;
      log.set_echo(echo);
      sim::scenario::Scenario scenario = sim::scenario::load_scenario(path);
      sim::scenario::RunReport report = sim::scenario::run(scenario, log);
      std::vector<std::string> unmet =
          sim::scenario::evaluate_expect(scenario, report, log);
      if (unmet.empty()) {
        verdict = "pass";
      } else {
        verdict = "FAIL (" + unmet.front() + ")";
        ++failures;
      }
    } catch (const sim::SimError& e) {
      verdict = std::string("ERROR (") + e.what() + ")";
      ++failures;
    }
    std::cout << name << ": " << verdict << "\n";
  }
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "tokensim — deterministic simulator of token-based access control,\n"
      "a token-patching kernel driver, and the memory monitor that stops it"};
  app.require_subcommand(1);

  bool echo = std::getenv("TOKENSIM_ECHO_LOG") != nullptr;

  std::string scenario_path, report_path, log_path;
  CLI::App* run = app.add_subcommand("run", "run one scenario file");
  run->add_option("scenario", scenario_path, "scenario JSON file")->required();
  run->add_option("--report", report_path, "write the run report here");
  run->add_option("--log", log_path, "write the JSONL event log here");

  std::string validate_path;
  CLI::App* validate =
      app.add_subcommand("validate", "parse and check a scenario file");
  validate->add_option("scenario", validate_path, "scenario JSON file")
      ->required();

  uint64_t iterations = 1'000'000;
  std::string bench_report_path;
  CLI::App* bench = app.add_subcommand(
      "bench", "measure interposition cost (monitor disarmed vs armed)");
  bench->add_option("--iters", iterations, "memory operations per leg");
  bench->add_option("--report", bench_report_path, "write the JSON report here");

  std::string matrix_dir = "scenarios";
  CLI::App* matrix = app.add_subcommand(
      "matrix", "run the five shipped scenarios and print a verdict table");
  matrix->add_option("--dir", matrix_dir, "directory holding the scenario files");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(scenario_path, report_path, log_path, echo);
    if (validate->parsed()) return cmd_validate(validate_path);
    if (bench->parsed()) return cmd_bench(iterations, bench_report_path);
    if (matrix->parsed()) return cmd_matrix(matrix_dir, echo);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
