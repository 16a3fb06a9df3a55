#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sim/attack.hpp"
#include "sim/kobj.hpp"
#include "sim/log.hpp"
#include "sim/ranger.hpp"
#include "sim/world.hpp"

namespace sim::scenario {

// ---------------------------------------------------------------------------
// Scenario description (parsed from JSON; all addresses/masks/hashes are hex
// strings in the file)
// ---------------------------------------------------------------------------

struct MemoryRegionSpec {
  uint64_t addr = 0;
  uint64_t len = 0;
  std::string label;
};

struct ProcessSpec {
  uint32_t pid = 0;
  std::string name;
  std::string image_path;
  kobj::Protection protection = kobj::Protection::None;
  kobj::IntegrityLevel object_il = kobj::IntegrityLevel::Medium;
  uint64_t token_addr = 0;
  kobj::TokenImage token;
  std::vector<kobj::Ace> dacl;  // empty -> permissive default
};

struct RangerSpec {
  bool armed = false;
  ranger::ViolationPolicy policy = ranger::ViolationPolicy::DenySkip;
  std::vector<MemoryRegionSpec> extra_regions;
  bool protect_whole_token = false;
};

struct CreateFileEvent {
  std::string path;
  std::string content;
  kobj::IntegrityLevel il = kobj::IntegrityLevel::Medium;
  uint32_t open_handles = 0;  // handles the creator keeps open
};
struct LoadDriverEvent {
  std::string name;
};
struct RunDriverEvent {
  std::string name;
};
struct SetTokenInformationEvent {
  std::string caller;
  std::string target;
  kobj::IntegrityLevel new_level = kobj::IntegrityLevel::Untrusted;
};
struct AdjustTokenPrivilegesEvent {
  std::string caller;
  std::string target;
  uint64_t disable_mask = 0;
};
struct LaunchProcessEvent {
  std::string image_path;
};
struct CloseHandlesEvent {
  std::string path;
};

using Event =
    std::variant<CreateFileEvent, LoadDriverEvent, RunDriverEvent,
                 SetTokenInformationEvent, AdjustTokenPrivilegesEvent,
                 LaunchProcessEvent, CloseHandlesEvent>;

struct ExpectSpec {
  std::optional<bool> malware_file_exists;
  std::optional<bool> malware_process_running;
  std::optional<bool> defender_running;
  std::optional<uint64_t> min_violations;
  std::optional<uint32_t> launch_status;
  std::optional<uint32_t> delete_status;
  std::optional<uint32_t> final_integrity_index;
  std::optional<std::vector<uint32_t>> syscall_statuses;
};

struct Scenario {
  std::string name;
  std::vector<MemoryRegionSpec> memory;
  std::optional<MemoryRegionSpec> token_arena;
  std::vector<ProcessSpec> processes;
  SignatureDb signature_db;
  bool trust_labels = false;
  RangerSpec ranger;
  std::vector<attack::DriverProgram> drivers;
  std::vector<Event> timeline;
  std::optional<ExpectSpec> expect;
};

// Strict parser: unknown keys, malformed hex, dangling references, and
// run-before-load orderings are all rejected with the offending location.
Scenario parse_scenario(const std::string& json_text,
                        const std::string& source_name);
Scenario load_scenario(const std::string& path);

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

struct RunReport {
  std::string scenario;
  bool malware_file_exists = false;
  bool malware_process_running = false;
  bool defender_running = false;
  uint64_t violations = 0;
  uint64_t final_token_addr = 0;
  kobj::TokenImage final_token;
};

// Executes the timeline against a fresh world. The log is filled as events
// happen, so on a structural error the caller still holds the partial log.
RunReport run(const Scenario& scenario, EventLog& log);

// Empty vector means every expectation held (or none were declared).
std::vector<std::string> evaluate_expect(const Scenario& scenario,
                                         const RunReport& report,
                                         const EventLog& log);

std::string run_report_to_json(const RunReport& report);

// ---------------------------------------------------------------------------
// Interposition benchmark
// ---------------------------------------------------------------------------

struct BenchConfig {
  uint64_t iterations = 1'000'000;
};

// Drives identical read/write traffic against unprotected pages with the
// monitor disarmed, then armed. Reported numbers are the wall-clock cost of
// this simulator's interposition layer — not a hardware or hypervisor
// overhead claim. Armed traffic that stays off protected pages must take
// zero trap paths.
struct BenchReport {
  uint64_t iterations = 0;
  uint64_t ops_disarmed = 0;
  uint64_t ops_armed = 0;
  uint64_t traps_disarmed = 0;
  uint64_t traps_armed = 0;
  uint64_t violations_disarmed = 0;
  uint64_t violations_armed = 0;
  double disarmed_ns = 0;
  double armed_ns = 0;
  double ratio = 0;  // armed / disarmed wall time
};

BenchReport run_bench(const BenchConfig& config);
std::string bench_report_to_json(const BenchReport& report);

}  // namespace sim::scenario
