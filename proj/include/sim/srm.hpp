#pragma once

#include <cstdint>

#include "sim/kobj.hpp"
#include "sim/mem.hpp"

namespace sim::srm {

// Outcome of the mandatory-integrity stage: the ceiling the discretionary
// stage may grant, plus the integrity SID the subject resolved to.
struct MicResult {
  kobj::AccessMask allowed_access_by_mic;
  kobj::Sid process_sid_from_mic;
};

struct AccessDecision {
  bool granted = false;
  kobj::NtStatus status = kobj::NtStatus::AccessDenied;
  kobj::AccessMask granted_mask;
};

// Resolves the subject's integrity SID straight from serialized token
// bytes: the 4-byte index at token+0xD0, then the groups array behind the
// 8-byte pointer at token+0x98, 16 bytes per entry. An index of 0xFFFFFFFF,
// a null array or SID pointer, or malformed SID bytes all resolve to the
// untrusted mandatory SID. The allowed mask starts at full access and loses
// the write class under no-write-up (and the read class under no-read-up)
// whenever the subject sits below the object.
MicResult sep_mandatory_integrity_check(uint64_t token_addr,
                                        const kobj::SecurityDescriptor& object,
                                        const mem::GuestMemory& memory);

// Discretionary stage: first-match walk of the DACL in list order against
// the token's user and group SIDs. A matching deny ACE intersecting the
// desired bits fails immediately; allow bits accumulate; the request
// succeeds iff every desired bit was accumulated. An empty desired mask is
// vacuously granted; an empty DACL denies everything else.
bool sep_access_check(const kobj::TokenImage& token,
                      const kobj::SecurityDescriptor& object,
                      kobj::AccessMask desired);

// Full check: mandatory stage first — any desired bit outside the MIC
// ceiling denies without consulting the DACL — then the discretionary walk.
// The caller supplies both the token address (integrity stage reads live
// memory) and the decoded image (discretionary stage uses the logical view).
AccessDecision se_access_check(uint64_t token_addr,
                               const kobj::TokenImage& token,
                               const kobj::SecurityDescriptor& object,
                               kobj::AccessMask desired,
                               const mem::GuestMemory& memory);

// Tests a single bit of Privileges.Enabled, read from serialized bytes at
// token+0x48 so raw patches take effect immediately.
bool sep_privilege_check(uint64_t token_addr, uint32_t privilege_bit,
                         const mem::GuestMemory& memory);

// Process-open path: a dead target is NAME_NOT_FOUND; an enabled debug
// privilege bypasses the access check entirely; otherwise the full check
// against the target's security descriptor decides.
AccessDecision open_process(uint64_t subject_token_addr,
                            const kobj::TokenImage& subject_token,
                            const kobj::ProcessObject& target,
                            kobj::AccessMask desired,
                            const mem::GuestMemory& memory);

// Instrumentation: number of discretionary (DACL) evaluations performed on
// this thread. Lets tests observe that integrity denials happen before the
// DACL is ever consulted.
uint64_t dacl_evaluation_count();

}  // namespace sim::srm
