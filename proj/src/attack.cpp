#include "sim/attack.hpp"

#include <map>

#include "sim/error.hpp"
#include "sim/hex.hpp"

namespace sim::attack {

namespace {

enum class RegisterKind { Address, Data };

std::string step_name(const Step& step) {
  if (std::holds_alternative<FindProcessToken>(step)) return "find_process_token";
  if (std::holds_alternative<WriteMem>(step)) return "write_mem";
  if (std::holds_alternative<ReadMem>(step)) return "read_mem";
  return "clear_bit";
}

}  // namespace

void validate_program(const DriverProgram& program, const World& world) {
  if (program.driver.empty())
    throw SimError("driver program has no driver name");

  std::map<std::string, RegisterKind> bound;
  auto bind = [&](const std::string& reg, RegisterKind kind, size_t index) {
    if (reg.empty())
      throw SimError("step " + std::to_string(index) + ": empty output register");
    if (bound.count(reg))
      throw SimError("step " + std::to_string(index) + ": register " + reg +
                     " is already bound (registers are write-once)");
    bound.emplace(reg, kind);
  };
  auto require_address = [&](const std::string& reg, size_t index) {
    auto it = bound.find(reg);
    if (it == bound.end())
      throw SimError("step " + std::to_string(index) + ": unbound register " + reg);
    if (it->second != RegisterKind::Address)
      throw SimError("step " + std::to_string(index) + ": register " + reg +
                     " does not hold an address");
  };

  for (size_t i = 0; i < program.steps.size(); ++i) {
    const Step& step = program.steps[i];
    if (const auto* find = std::get_if<FindProcessToken>(&step)) {
      if (!world.find_process(find->process))
        throw SimError("step " + std::to_string(i) + ": unknown process \"" +
                       find->process + "\"");
      bind(find->out, RegisterKind::Address, i);
    } else if (const auto* write = std::get_if<WriteMem>(&step)) {
      require_address(write->base, i);
      if (write->bytes.empty())
        throw SimError("step " + std::to_string(i) + ": write_mem with no bytes");
      if (write->bytes.size() > mem::kPageSize)
        throw SimError("step " + std::to_string(i) + ": write_mem larger than a page");
    } else if (const auto* read = std::get_if<ReadMem>(&step)) {
      require_address(read->base, i);
      if (read->len == 0 || read->len > mem::kPageSize)
        throw SimError("step " + std::to_string(i) + ": read_mem length out of range");
      bind(read->out, RegisterKind::Data, i);
    } else if (const auto* clear = std::get_if<ClearBit>(&step)) {
      require_address(clear->base, i);
      if (clear->bit >= 64)
        throw SimError("step " + std::to_string(i) + ": bit index out of range");
    }
  }
}

ExecutionReport run_driver(World& world, const DriverProgram& program) {
  validate_program(program, world);

  const mem::ActorId actor = mem::ActorId::driver(program.driver);
  ExecutionReport report;
  report.driver = program.driver;

  std::map<std::string, uint64_t> address_regs;
  std::map<std::string, std::vector<uint8_t>> data_regs;

  auto disposition_status = [](const mem::Violation& v) {
    return v.disposition == mem::Disposition::Faulted ? StepStatus::Faulted
                                                      : StepStatus::Skipped;
  };

  for (size_t i = 0; i < program.steps.size(); ++i) {
    const Step& step = program.steps[i];
    StepOutcome outcome;
    outcome.index = i;
    outcome.op = step_name(step);

    if (const auto* find = std::get_if<FindProcessToken>(&step)) {
      // Service lookup, not memory traffic: the driver asks the kernel for
      // the token address of a process by image name.
      const kobj::ProcessObject* proc = world.find_process(find->process);
      address_regs[find->out] = proc->token_addr;
      outcome.detail = find->process + " -> " + find->out + "=" +
                       hex64(proc->token_addr);
    } else if (const auto* write = std::get_if<WriteMem>(&step)) {
      uint64_t addr = address_regs.at(write->base) + write->offset;
      mem::WriteResult r = world.bus.actor_write(actor, addr, write->bytes);
      outcome.status = r.ok() ? StepStatus::Ok : disposition_status(*r.violation);
      outcome.detail = "[" + hex64(addr) + ", +" +
                       std::to_string(write->bytes.size()) + ") <= " +
                       hex_bytes(write->bytes);
    } else if (const auto* read = std::get_if<ReadMem>(&step)) {
      uint64_t addr = address_regs.at(read->base) + read->offset;
      mem::ReadResult r = world.bus.actor_read(actor, addr, read->len);
      data_regs[read->out] = r.bytes;
      outcome.status =
          r.violation ? disposition_status(*r.violation) : StepStatus::Ok;
      outcome.detail = read->out + " = [" + hex64(addr) + ", +" +
                       std::to_string(read->len) + ") = " + hex_bytes(r.bytes);
    } else if (const auto* clear = std::get_if<ClearBit>(&step)) {
      // Read-modify-write of one 64-bit word, both halves through the
      // instrumented path.
      uint64_t addr = address_regs.at(clear->base) + clear->offset;
      mem::ReadResult r = world.bus.actor_read(actor, addr, 8);
      uint64_t word = 0;
      for (int b = 7; b >= 0; --b) word = (word << 8) | r.bytes[static_cast<size_t>(b)];
      word &= ~kobj::privilege_mask(clear->bit);
      std::vector<uint8_t> bytes(8);
      for (int b = 0; b < 8; ++b)
        bytes[static_cast<size_t>(b)] = static_cast<uint8_t>(word >> (8 * b));
      mem::WriteResult w = world.bus.actor_write(actor, addr, bytes);
      if (w.ok() && !r.violation)
        outcome.status = StepStatus::Ok;
      else if (w.violation)
        outcome.status = disposition_status(*w.violation);
      else
        outcome.status = disposition_status(*r.violation);
      outcome.detail = "bit " + std::to_string(clear->bit) + " at [" +
                       hex64(addr) + ", +8)";
    }

    report.steps.push_back(std::move(outcome));
    // Silent-failure semantics: a suppressed step never aborts the program.
  }
  return report;
}

DriverProgram make_token_patch_program(std::string driver_name,
                                       std::string target_process) {
  DriverProgram program;
  program.driver = std::move(driver_name);
  program.steps.push_back(
      FindProcessToken{std::move(target_process), "r0"});
  program.steps.push_back(WriteMem{
      "r0", kobj::kTokenIntegrityIndexOffset, {0xFF, 0xFF, 0xFF, 0xFF}});
  program.steps.push_back(
      ClearBit{"r0", kobj::kTokenPrivilegesEnabledOffset,
               kobj::kSeDebugPrivilegeBit});
  return program;
}

namespace {

// Trust-label gate shared by both syscalls. Denies a cross-process mutation
// of an antimalware-light-protected target unless the caller carries the
// same protection.
bool trust_gate_denies(const World& world, const kobj::ProcessObject& caller,
                       const kobj::ProcessObject& target) {
  if (!world.trust_labels.enforced) return false;
  if (caller.pid == target.pid) return false;  // self-modification
  return target.protection == kobj::Protection::PplAntimalwareLight &&
         caller.protection != kobj::Protection::PplAntimalwareLight;
}

}  // namespace

kobj::NtStatus set_token_information(World& world,
                                     kobj::ProcessObject& caller,
                                     kobj::ProcessObject& target,
                                     kobj::IntegrityLevel new_level) {
  kobj::NtStatus status = kobj::NtStatus::Success;
  if (trust_gate_denies(world, caller, target)) {
    status = kobj::NtStatus::AccessDenied;
  } else {
    // Kernel-side token update: rewrite the RID of the integrity group the
    // index points at, in place. Raw path by design — this is the kernel
    // acting on a syscall, not a driver poking memory.
    uint64_t token = target.token_addr;
    uint32_t index =
        world.memory.raw_read_u32(token + kobj::kTokenIntegrityIndexOffset);
    if (index == kobj::kNoIntegrityIndex)
      throw SimError("set_token_information: target token has no integrity group");
    uint64_t array_addr =
        world.memory.raw_read_u64(token + kobj::kTokenGroupsOffset);
    uint64_t entry_addr =
        array_addr + kobj::kTokenGroupEntrySize * static_cast<uint64_t>(index);
    uint64_t sid_addr = world.memory.raw_read_u64(entry_addr);
    if (sid_addr == 0)
      throw SimError("set_token_information: target integrity SID is dangling");
    // Serialized SID: count(1), authority(1), then RIDs. Integrity SIDs
    // have exactly one RID at +2.
    world.memory.raw_write_u32(
        sid_addr + 2,
        static_cast<uint32_t>(new_level) * kobj::kIntegrityRidStep);
    world.memory.raw_write_u32(token + kobj::kTokenIntegrityIndexOffset, index);
  }
  world.log.append(caller.name, logkind::kSyscall,
                   "set_token_information target=" + target.name +
                       " new_level=" + kobj::integrity_level_name(new_level),
                   status);
  return status;
}

kobj::NtStatus adjust_token_privileges(World& world,
                                       kobj::ProcessObject& caller,
                                       kobj::ProcessObject& target,
                                       uint64_t disable_mask) {
  kobj::NtStatus status = kobj::NtStatus::Success;
  if (trust_gate_denies(world, caller, target)) {
    status = kobj::NtStatus::AccessDenied;
  } else {
    uint64_t addr = target.token_addr + kobj::kTokenPrivilegesEnabledOffset;
    uint64_t enabled = world.memory.raw_read_u64(addr);
    world.memory.raw_write_u64(addr, enabled & ~disable_mask);
  }
  world.log.append(caller.name, logkind::kSyscall,
                   "adjust_token_privileges target=" + target.name +
                       " disable_mask=" + hex64(disable_mask),
                   status);
  return status;
}

}  // namespace sim::attack
