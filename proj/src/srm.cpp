#include "sim/srm.hpp"

namespace sim::srm {

namespace {

thread_local uint64_t g_dacl_evaluations = 0;

// Parses the serialized SID at `addr`; nullopt on null pointer or
// implausible bytes. Duplicated shape with the token decoder on purpose:
// this is the integrity checker's own walk over raw bytes.
std::optional<kobj::Sid> read_sid_at(const mem::GuestMemory& memory,
                                     uint64_t addr) {
  if (addr == 0) return std::nullopt;
  uint8_t count = memory.raw_read_u8(addr);
  if (count == 0 || count > kobj::kMaxSidRids) return std::nullopt;
  kobj::Sid sid;
  sid.authority = memory.raw_read_u8(addr + 1);
  for (uint8_t i = 0; i < count; ++i)
    sid.rids.push_back(memory.raw_read_u32(addr + 2 + 4ull * i));
  return sid;
}

}  // namespace

uint64_t dacl_evaluation_count() { return g_dacl_evaluations; }

MicResult sep_mandatory_integrity_check(uint64_t token_addr,
                                        const kobj::SecurityDescriptor& object,
                                        const mem::GuestMemory& memory) {
  using kobj::IntegrityLevel;

  uint32_t index =
      memory.raw_read_u32(token_addr + kobj::kTokenIntegrityIndexOffset);

  kobj::Sid subject_sid = kobj::se_untrusted_mandatory_sid();
  if (index != kobj::kNoIntegrityIndex) {
    uint64_t array_addr =
        memory.raw_read_u64(token_addr + kobj::kTokenGroupsOffset);
    if (array_addr != 0) {
      uint64_t entry_addr =
          array_addr + kobj::kTokenGroupEntrySize * static_cast<uint64_t>(index);
      uint64_t sid_addr = memory.raw_read_u64(entry_addr);
      if (auto sid = read_sid_at(memory, sid_addr);
          sid && kobj::is_integrity_sid(*sid)) {
        subject_sid = *sid;
      }
    }
  }

  IntegrityLevel subject_il = *kobj::integrity_level_of(subject_sid);

  kobj::AccessMask allowed = kobj::access::kFullAccess;
  if (subject_il < object.object_il) {
    if (object.policy.no_write_up) allowed = allowed.without(kobj::access::kWriteClass);
    if (object.policy.no_read_up) allowed = allowed.without(kobj::access::kReadClass);
  }
  return MicResult{allowed, subject_sid};
}

bool sep_access_check(const kobj::TokenImage& token,
                      const kobj::SecurityDescriptor& object,
                      kobj::AccessMask desired) {
  ++g_dacl_evaluations;
  if (desired.empty()) return true;  // vacuous request
  if (object.dacl.empty()) return false;  // deny-by-default

  auto subject_holds = [&](const kobj::Sid& sid) {
    if (token.user && *token.user == sid) return true;
    for (const auto& g : token.groups)
      if (g.sid && *g.sid == sid) return true;
    return false;
  };

  kobj::AccessMask accumulated;
  for (const auto& ace : object.dacl) {
    if (!subject_holds(ace.sid)) continue;
    if (ace.kind == kobj::AceKind::Deny && ace.mask.intersects(desired))
      return false;
    if (ace.kind == kobj::AceKind::Allow)
      accumulated = accumulated | ace.mask;
    // The walk stops as soon as everything asked for has been granted; a
    // deny ACE further down the list no longer matters.
    if (accumulated.contains(desired)) return true;
  }
  return accumulated.contains(desired);
}

AccessDecision se_access_check(uint64_t token_addr,
                               const kobj::TokenImage& token,
                               const kobj::SecurityDescriptor& object,
                               kobj::AccessMask desired,
                               const mem::GuestMemory& memory) {
  MicResult mic = sep_mandatory_integrity_check(token_addr, object, memory);
  // Any desired bit above the integrity ceiling denies before the DACL is
  // looked at.
  if (!desired.without(mic.allowed_access_by_mic).empty())
    return AccessDecision{false, kobj::NtStatus::AccessDenied, {}};
  if (!sep_access_check(token, object, desired))
    return AccessDecision{false, kobj::NtStatus::AccessDenied, {}};
  return AccessDecision{true, kobj::NtStatus::Success, desired};
}

bool sep_privilege_check(uint64_t token_addr, uint32_t privilege_bit,
                         const mem::GuestMemory& memory) {
  uint64_t enabled =
      memory.raw_read_u64(token_addr + kobj::kTokenPrivilegesEnabledOffset);
  return (enabled & kobj::privilege_mask(privilege_bit)) != 0;
}

AccessDecision open_process(uint64_t subject_token_addr,
                            const kobj::TokenImage& subject_token,
                            const kobj::ProcessObject& target,
                            kobj::AccessMask desired,
                            const mem::GuestMemory& memory) {
  if (!target.running)
    return AccessDecision{false, kobj::NtStatus::NameNotFound, {}};
  // An enabled debug privilege grants any process access outright,
  // regardless of integrity or the target's DACL.
  if (sep_privilege_check(subject_token_addr, kobj::kSeDebugPrivilegeBit, memory))
    return AccessDecision{true, kobj::NtStatus::Success, desired};
  return se_access_check(subject_token_addr, subject_token, target.security,
                         desired, memory);
}

}  // namespace sim::srm
