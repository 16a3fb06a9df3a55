#include <cstdint>
#include <string>
#include <vector>

#include "doctest.h"

#include "sim/attack.hpp"
#include "sim/error.hpp"
#include "sim/kobj.hpp"
#include "sim/log.hpp"
#include "sim/world.hpp"

using namespace sim;
using namespace sim::kobj;
using namespace sim::attack;

namespace {

constexpr uint64_t kEngineTokenAddr = 0x10000;

TokenImage engine_token() {
  std::vector<GroupEntry> groups;
  groups.push_back(GroupEntry{local_system_sid(), 0});
  groups.push_back(GroupEntry{everyone_sid(), 0});
  groups.push_back(GroupEntry{integrity_sid(IntegrityLevel::System), 0x20});
  PrivilegeSet privileges;
  privileges.present = privileges.enabled = privileges.enabled_by_default =
      privilege_mask(kSeDebugPrivilegeBit);
  return TokenImage::make_valid(local_system_sid(), std::move(groups), 2,
                                privileges);
}

TokenImage user_token() {
  std::vector<GroupEntry> groups;
  groups.push_back(GroupEntry{everyone_sid(), 0});
  groups.push_back(GroupEntry{integrity_sid(IntegrityLevel::Medium), 0x20});
  return TokenImage::make_valid(Sid{kNtAuthority, {21, 1001}},
                                std::move(groups), 1, {});
}

struct Fixture {
  EventLog log;
  World world{log};

  Fixture() {
    ProcessObject engine;
    engine.pid = 2824;
    engine.name = "MsMpEng.exe";
    engine.protection = Protection::PplAntimalwareLight;
    engine.security = make_process_security(IntegrityLevel::System);
    world.add_process(std::move(engine), engine_token(), kEngineTokenAddr);

    ProcessObject user;
    user.pid = 4100;
    user.name = "NerfToken.exe";
    user.security = make_process_security(IntegrityLevel::Medium);
    world.add_process(std::move(user), user_token(), 0x11000);
  }

  ProcessObject& engine() { return *world.find_process("MsMpEng.exe"); }
  ProcessObject& user() { return *world.find_process("NerfToken.exe"); }
};

}  // namespace

TEST_SUITE("attack") {

TEST_CASE("program validation rejects malformed programs before execution") {
  Fixture fx;
  DriverProgram p;

  SUBCASE("empty driver name") {
    p.steps.push_back(FindProcessToken{"MsMpEng.exe", "r0"});
    CHECK_THROWS_AS(validate_program(p, fx.world), SimError);
  }

  p.driver = "evil.sys";

  SUBCASE("unknown process") {
    p.steps.push_back(FindProcessToken{"nosuch.exe", "r0"});
    CHECK_THROWS_AS(validate_program(p, fx.world), SimError);
  }
  SUBCASE("registers are write-once") {
    p.steps.push_back(FindProcessToken{"MsMpEng.exe", "r0"});
    p.steps.push_back(FindProcessToken{"MsMpEng.exe", "r0"});
    CHECK_THROWS_AS(validate_program(p, fx.world), SimError);
  }
  SUBCASE("write base must be a bound register") {
    p.steps.push_back(WriteMem{"r0", 0, {1}});
    CHECK_THROWS_AS(validate_program(p, fx.world), SimError);
  }
  SUBCASE("write base must be an address register") {
    p.steps.push_back(FindProcessToken{"MsMpEng.exe", "r0"});
    p.steps.push_back(ReadMem{"r0", 0, 8, "d0"});
    p.steps.push_back(WriteMem{"d0", 0, {1}});
    CHECK_THROWS_AS(validate_program(p, fx.world), SimError);
  }
  SUBCASE("empty and oversized writes") {
    p.steps.push_back(FindProcessToken{"MsMpEng.exe", "r0"});
    p.steps.push_back(WriteMem{"r0", 0, {}});
    CHECK_THROWS_AS(validate_program(p, fx.world), SimError);
    p.steps.back() = WriteMem{"r0", 0, std::vector<uint8_t>(4097, 0)};
    CHECK_THROWS_AS(validate_program(p, fx.world), SimError);
  }
  SUBCASE("read length bounds") {
    p.steps.push_back(FindProcessToken{"MsMpEng.exe", "r0"});
    p.steps.push_back(ReadMem{"r0", 0, 0, "d0"});
    CHECK_THROWS_AS(validate_program(p, fx.world), SimError);
  }
  SUBCASE("bit index bounds") {
    p.steps.push_back(FindProcessToken{"MsMpEng.exe", "r0"});
    p.steps.push_back(ClearBit{"r0", 0x48, 64});
    CHECK_THROWS_AS(validate_program(p, fx.world), SimError);
  }
  SUBCASE("a failed validation leaves memory untouched") {
    uint32_t index_before = fx.world.memory.raw_read_u32(kEngineTokenAddr + 0xD0);
    p.steps.push_back(FindProcessToken{"MsMpEng.exe", "r0"});
    p.steps.push_back(WriteMem{"r0", 0xD0, {0xFF, 0xFF, 0xFF, 0xFF}});
    p.steps.push_back(ClearBit{"r0", 0x48, 99});  // invalid trailing step
    CHECK_THROWS_AS(run_driver(fx.world, p), SimError);
    CHECK(fx.world.memory.raw_read_u32(kEngineTokenAddr + 0xD0) == index_before);
  }
}

TEST_CASE("the canonical patch program hits both fields when unmonitored") {
  Fixture fx;
  fx.world.monitor.on_driver_load(mem::ActorId::driver("evil.sys"));
  DriverProgram p = make_token_patch_program("evil.sys", "MsMpEng.exe");

  ExecutionReport report = run_driver(fx.world, p);
  REQUIRE(report.steps.size() == 3);
  CHECK(report.steps[0].status == StepStatus::Ok);
  CHECK(report.steps[1].status == StepStatus::Ok);
  CHECK(report.steps[2].status == StepStatus::Ok);

  CHECK(fx.world.memory.raw_read_u32(kEngineTokenAddr + 0xD0) == 0xFFFFFFFFu);
  CHECK((fx.world.memory.raw_read_u64(kEngineTokenAddr + 0x48) &
         privilege_mask(kSeDebugPrivilegeBit)) == 0);
  // Present and EnabledByDefault are untouched: the patch is surgical.
  CHECK(fx.world.memory.raw_read_u64(kEngineTokenAddr + 0x40) ==
        privilege_mask(kSeDebugPrivilegeBit));
  CHECK(fx.world.memory.raw_read_u64(kEngineTokenAddr + 0x50) ==
        privilege_mask(kSeDebugPrivilegeBit));
}

TEST_CASE("the canonical patch program changes nothing outside its two fields") {
  // Byte-exact minimality over the whole serialized token: afterwards the
  // index word reads 0xFFFFFFFF, the one byte holding the debug-privilege
  // bit has exactly that bit cleared, and every other byte is untouched.
  Fixture fx;
  fx.world.monitor.on_driver_load(mem::ActorId::driver("evil.sys"));
  const TokenLayout& layout = fx.world.layout_of(kEngineTokenAddr);
  const std::vector<uint8_t> before =
      fx.world.memory.raw_read(layout.base_addr, layout.total_size);

  run_driver(fx.world,
             make_token_patch_program("evil.sys", "MsMpEng.exe"));

  const std::vector<uint8_t> after =
      fx.world.memory.raw_read(layout.base_addr, layout.total_size);
  REQUIRE(after.size() == before.size());

  // Bit 20 of the little-endian word at +0x48 lives in bit 4 of byte +0x4A.
  constexpr uint64_t kDebugBitByte =
      kTokenPrivilegesEnabledOffset + kSeDebugPrivilegeBit / 8;
  constexpr uint8_t kDebugBitInByte = 1u << (kSeDebugPrivilegeBit % 8);

  size_t unexpected = 0;
  for (size_t i = 0; i < after.size(); ++i) {
    uint8_t want;
    if (i >= kTokenIntegrityIndexOffset && i < kTokenIntegrityIndexOffset + 4)
      want = 0xFF;
    else if (i == kDebugBitByte)
      want = static_cast<uint8_t>(before[i] & ~kDebugBitInByte);
    else
      want = before[i];
    if (after[i] != want) ++unexpected;
  }
  CHECK(unexpected == 0);
}

TEST_CASE("clear_bit touches only the addressed bit") {
  Fixture fx;
  fx.world.monitor.on_driver_load(mem::ActorId::driver("evil.sys"));
  fx.world.memory.raw_write_u64(kEngineTokenAddr + 0x48, 0xFFFFFFFFFFFFFFFFull);
  DriverProgram p;
  p.driver = "evil.sys";
  p.steps.push_back(FindProcessToken{"MsMpEng.exe", "r0"});
  p.steps.push_back(ClearBit{"r0", 0x48, 20});
  run_driver(fx.world, p);
  CHECK(fx.world.memory.raw_read_u64(kEngineTokenAddr + 0x48) ==
        ~privilege_mask(20));
}

TEST_CASE("read_mem returns live bytes to the driver") {
  Fixture fx;
  fx.world.monitor.on_driver_load(mem::ActorId::driver("spy.sys"));
  DriverProgram p;
  p.driver = "spy.sys";
  p.steps.push_back(FindProcessToken{"MsMpEng.exe", "r0"});
  p.steps.push_back(ReadMem{"r0", 0xD0, 4, "d0"});
  ExecutionReport report = run_driver(fx.world, p);
  CHECK(report.steps[1].status == StepStatus::Ok);
  CHECK(report.steps[1].detail.find("02 00 00 00") != std::string::npos);
}

TEST_CASE("an armed monitor silently defeats the patch program") {
  Fixture fx;
  fx.world.monitor.protect_token(fx.world.layout_of(kEngineTokenAddr));
  fx.world.monitor.arm(true);
  fx.world.monitor.on_driver_load(mem::ActorId::driver("evil.sys"));

  DriverProgram p = make_token_patch_program("evil.sys", "MsMpEng.exe");
  ExecutionReport report = run_driver(fx.world, p);

  // The program runs to completion — the driver is never told it failed
  // beyond the per-step write results.
  REQUIRE(report.steps.size() == 3);
  CHECK(report.steps[0].status == StepStatus::Ok);
  CHECK(report.steps[1].status == StepStatus::Skipped);
  CHECK(report.steps[2].status == StepStatus::Skipped);

  // Both fields are bit-identical to their encoded values.
  CHECK(fx.world.memory.raw_read_u32(kEngineTokenAddr + 0xD0) == 2);
  CHECK(fx.world.memory.raw_read_u64(kEngineTokenAddr + 0x48) ==
        privilege_mask(kSeDebugPrivilegeBit));
  CHECK(fx.world.violation_count() == 2);
  CHECK(fx.log.count_kind(logkind::kViolation) == 2);
}

TEST_CASE("under the fault policy suppressed steps report as faulted") {
  Fixture fx;
  fx.world.monitor.set_policy(ranger::ViolationPolicy::DenyFault);
  fx.world.monitor.protect_token(fx.world.layout_of(kEngineTokenAddr));
  fx.world.monitor.arm(true);
  fx.world.monitor.on_driver_load(mem::ActorId::driver("evil.sys"));

  DriverProgram p = make_token_patch_program("evil.sys", "MsMpEng.exe");
  ExecutionReport report = run_driver(fx.world, p);
  CHECK(report.steps[1].status == StepStatus::Faulted);
  CHECK(report.steps[2].status == StepStatus::Faulted);
}

TEST_CASE("shadow policy blinds reads of the protected fields") {
  Fixture fx;
  fx.world.monitor.set_policy(ranger::ViolationPolicy::RedirectToShadow);
  fx.world.monitor.protect_token(fx.world.layout_of(kEngineTokenAddr));
  fx.world.monitor.arm(true);
  fx.world.monitor.on_driver_load(mem::ActorId::driver("spy.sys"));

  DriverProgram p;
  p.driver = "spy.sys";
  p.steps.push_back(FindProcessToken{"MsMpEng.exe", "r0"});
  p.steps.push_back(ReadMem{"r0", 0xD0, 4, "d0"});
  ExecutionReport report = run_driver(fx.world, p);
  CHECK(report.steps[1].status == StepStatus::Skipped);
  CHECK(report.steps[1].detail.find("00 00 00 00") != std::string::npos);
  // The real bytes never changed; only the driver's view is degraded.
  CHECK(fx.world.memory.raw_read_u32(kEngineTokenAddr + 0xD0) == 2);
}

TEST_CASE("same-page traffic off the protected fields is emulated, not denied") {
  Fixture fx;
  fx.world.monitor.protect_token(fx.world.layout_of(kEngineTokenAddr));
  fx.world.monitor.arm(true);
  fx.world.monitor.on_driver_load(mem::ActorId::driver("evil.sys"));

  DriverProgram p;
  p.driver = "evil.sys";
  p.steps.push_back(FindProcessToken{"MsMpEng.exe", "r0"});
  p.steps.push_back(WriteMem{"r0", 0x60, {0xAA}});  // header scratch area
  ExecutionReport report = run_driver(fx.world, p);
  CHECK(report.steps[1].status == StepStatus::Ok);
  CHECK(fx.world.memory.raw_read_u8(kEngineTokenAddr + 0x60) == 0xAA);
  CHECK(fx.world.violation_count() == 0);
  CHECK(fx.log.count_kind(logkind::kEmulate) == 1);
}

TEST_CASE("token syscalls respect the trust-label gate") {
  Fixture fx;
  fx.world.trust_labels.enforced = true;

  SUBCASE("cross-protection mutation is denied and changes nothing") {
    NtStatus s1 = set_token_information(fx.world, fx.user(), fx.engine(),
                                        IntegrityLevel::Untrusted);
    CHECK(s1 == NtStatus::AccessDenied);
    NtStatus s2 = adjust_token_privileges(fx.world, fx.user(), fx.engine(),
                                          ~0ull);
    CHECK(s2 == NtStatus::AccessDenied);
    CHECK(fx.world.memory.raw_read_u32(kEngineTokenAddr + 0xD0) == 2);
    CHECK(fx.world.memory.raw_read_u64(kEngineTokenAddr + 0x48) ==
          privilege_mask(20));
    auto syscalls = fx.log.all_of_kind(logkind::kSyscall);
    REQUIRE(syscalls.size() == 2);
    CHECK(syscalls[0]->status == 0xC0000022u);
    CHECK(syscalls[1]->status == 0xC0000022u);
    CHECK(syscalls[0]->actor == "NerfToken.exe");
  }
  SUBCASE("self-modification is always allowed") {
    NtStatus s = set_token_information(fx.world, fx.user(), fx.user(),
                                       IntegrityLevel::Low);
    CHECK(s == NtStatus::Success);
    TokenImage t = fx.world.decode_token_at(0x11000);
    REQUIRE(t.integrity_level_index < t.groups.size());
    REQUIRE(t.groups[t.integrity_level_index].sid.has_value());
    CHECK(*t.groups[t.integrity_level_index].sid ==
          integrity_sid(IntegrityLevel::Low));
  }
  SUBCASE("a protected caller may modify a protected target") {
    NtStatus s = adjust_token_privileges(fx.world, fx.engine(), fx.engine(),
                                         privilege_mask(20));
    CHECK(s == NtStatus::Success);
    CHECK(fx.world.memory.raw_read_u64(kEngineTokenAddr + 0x48) == 0);
  }
}

TEST_CASE("with labels off the same syscalls strip the engine token") {
  Fixture fx;
  CHECK(!fx.world.trust_labels.enforced);

  NtStatus s1 = set_token_information(fx.world, fx.user(), fx.engine(),
                                      IntegrityLevel::Untrusted);
  NtStatus s2 =
      adjust_token_privileges(fx.world, fx.user(), fx.engine(), ~0ull);
  CHECK(s1 == NtStatus::Success);
  CHECK(s2 == NtStatus::Success);

  TokenImage t = fx.world.decode_token_at(kEngineTokenAddr);
  REQUIRE(t.integrity_level_index == 2);
  REQUIRE(t.groups[2].sid.has_value());
  CHECK(*t.groups[2].sid == integrity_sid(IntegrityLevel::Untrusted));
  CHECK(t.privileges.enabled == 0);
  // Present survives: only Enabled is the enforcement input.
  CHECK(t.privileges.present == privilege_mask(20));
}

TEST_CASE("integrity rewrite targets the group the index points at") {
  Fixture fx;
  // The engine's integrity group sits at index 2; rewriting must not touch
  // the other groups' SIDs.
  set_token_information(fx.world, fx.engine(), fx.engine(),
                        IntegrityLevel::High);
  TokenImage t = fx.world.decode_token_at(kEngineTokenAddr);
  CHECK(*t.groups[0].sid == local_system_sid());
  CHECK(*t.groups[1].sid == everyone_sid());
  CHECK(*t.groups[2].sid == integrity_sid(IntegrityLevel::High));
  CHECK(t.user == local_system_sid());
}

TEST_CASE("rewriting a token without an integrity group is a structural error") {
  Fixture fx;
  fx.world.memory.raw_write_u32(kEngineTokenAddr + 0xD0, kNoIntegrityIndex);
  CHECK_THROWS_AS(set_token_information(fx.world, fx.engine(), fx.engine(),
                                        IntegrityLevel::Low),
                  SimError);
}

}  // TEST_SUITE
