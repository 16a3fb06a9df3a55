#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "sim/world.hpp"

namespace sim::attack {

// Driver programs are data: a short list of steps over write-once
// registers. Address registers come from find_process_token; data registers
// from read_mem.

struct FindProcessToken {
  std::string process;  // image name; lowest pid wins on duplicates
  std::string out;      // fresh address register
};

struct WriteMem {
  std::string base;  // address register
  uint64_t offset = 0;
  std::vector<uint8_t> bytes;
};

struct ReadMem {
  std::string base;
  uint64_t offset = 0;
  uint64_t len = 0;
  std::string out;  // fresh data register
};

struct ClearBit {
  std::string base;
  uint64_t offset = 0;
  uint32_t bit = 0;  // bit index within a 64-bit little-endian word
};

using Step = std::variant<FindProcessToken, WriteMem, ReadMem, ClearBit>;

struct DriverProgram {
  std::string driver;  // actor name the steps run under
  std::vector<Step> steps;
};

enum class StepStatus { Ok, Skipped, Faulted };

struct StepOutcome {
  size_t index = 0;
  std::string op;
  StepStatus status = StepStatus::Ok;
  std::string detail;
};

struct ExecutionReport {
  std::string driver;
  std::vector<StepOutcome> steps;
};

// Static checks before any step runs: register bindings are write-once and
// used-after-bound, write_mem/read_mem/clear_bit bases are address
// registers, referenced process names exist, byte/length operands are sane.
// Throws SimError; a failed validation leaves the world untouched.
void validate_program(const DriverProgram& program, const World& world);

// Runs the program under the driver's actor identity. All memory traffic
// goes through the instrumented path, so an armed monitor sees (and may
// suppress) every step; denied writes are recorded in the outcome and
// execution continues — the driver has no idea it was defeated.
ExecutionReport run_driver(World& world, const DriverProgram& program);

// The canonical two-patch program: point the integrity index at 0xFFFFFFFF
// and clear the debug-privilege bit in Privileges.Enabled.
DriverProgram make_token_patch_program(std::string driver_name,
                                       std::string target_process);

// Token-mutating syscalls. These run in the kernel on the caller's behalf:
// they use the raw memory path (the enclave monitor does not interpose on
// kernel-core writes) and are gated only by the trust-label policy.
// Self-modification is always permitted.
kobj::NtStatus set_token_information(World& world,
                                     kobj::ProcessObject& caller,
                                     kobj::ProcessObject& target,
                                     kobj::IntegrityLevel new_level);

kobj::NtStatus adjust_token_privileges(World& world,
                                       kobj::ProcessObject& caller,
                                       kobj::ProcessObject& target,
                                       uint64_t disable_mask);

}  // namespace sim::attack
