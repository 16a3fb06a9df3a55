#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sim/mem.hpp"

namespace sim::kobj {

// ---------------------------------------------------------------------------
// Statuses
// ---------------------------------------------------------------------------

enum class NtStatus : uint32_t {
  Success = 0x00000000,
  AccessDenied = 0xC0000022,
  NameNotFound = 0xC0000034,
  DeletePending = 0xC0000056,
  VirusInfected = 0xC0000906,
};

inline constexpr uint32_t status_code(NtStatus s) {
  return static_cast<uint32_t>(s);
}

std::string status_text(NtStatus s);

// ---------------------------------------------------------------------------
// Access masks
// ---------------------------------------------------------------------------

struct AccessMask {
  uint32_t bits = 0;

  constexpr bool contains(AccessMask other) const {
    return (bits & other.bits) == other.bits;
  }
  constexpr bool intersects(AccessMask other) const {
    return (bits & other.bits) != 0;
  }
  constexpr AccessMask without(AccessMask other) const {
    return AccessMask{bits & ~other.bits};
  }
  constexpr bool empty() const { return bits == 0; }

  friend constexpr AccessMask operator|(AccessMask a, AccessMask b) {
    return AccessMask{a.bits | b.bits};
  }
  friend constexpr AccessMask operator&(AccessMask a, AccessMask b) {
    return AccessMask{a.bits & b.bits};
  }
  friend constexpr bool operator==(AccessMask a, AccessMask b) {
    return a.bits == b.bits;
  }
};

namespace access {
inline constexpr AccessMask kFileReadData{0x0001};
inline constexpr AccessMask kFileWriteData{0x0002};
inline constexpr AccessMask kDelete{0x0004};
inline constexpr AccessMask kFileExecute{0x0008};
inline constexpr AccessMask kFileReadAttributes{0x0010};
inline constexpr AccessMask kFileWriteAttributes{0x0020};
inline constexpr AccessMask kProcessVmRead{0x0100};
inline constexpr AccessMask kProcessVmWrite{0x0200};
inline constexpr AccessMask kProcessTerminate{0x0400};
inline constexpr AccessMask kProcessQueryInformation{0x0800};

// Mask classes the mandatory-integrity layer strips when the subject sits
// below the object: write-class under no-write-up, read-class under
// no-read-up (process memory introspection only).
inline constexpr AccessMask kWriteClass =
    kFileWriteData | kFileWriteAttributes | kDelete | kProcessVmWrite |
    kProcessTerminate;
inline constexpr AccessMask kReadClass = kProcessVmRead | kProcessQueryInformation;

inline constexpr AccessMask kAllDefined =
    kFileReadData | kFileWriteData | kDelete | kFileExecute |
    kFileReadAttributes | kFileWriteAttributes | kProcessVmRead |
    kProcessVmWrite | kProcessTerminate | kProcessQueryInformation;

inline constexpr AccessMask kFullAccess{0xFFFFFFFF};
}  // namespace access

// ---------------------------------------------------------------------------
// Integrity levels and SIDs
// ---------------------------------------------------------------------------

enum class IntegrityLevel : uint32_t {
  Untrusted = 0,
  Low = 1,
  Medium = 2,
  High = 3,
  System = 4,
  Protected = 5,
};

inline constexpr uint32_t kIntegrityLevelCount = 6;

// Security identifier. `authority` is the identifier-authority byte;
// integrity SIDs use authority 16 with a single RID of level * 0x1000.
struct Sid {
  uint8_t authority = 0;
  std::vector<uint32_t> rids;

  bool operator==(const Sid& other) const = default;
};

inline constexpr uint8_t kNtAuthority = 5;
inline constexpr uint8_t kWorldAuthority = 1;
inline constexpr uint8_t kIntegrityAuthority = 16;
inline constexpr uint32_t kIntegrityRidStep = 0x1000;

Sid integrity_sid(IntegrityLevel level);
bool is_integrity_sid(const Sid& sid);
std::optional<IntegrityLevel> integrity_level_of(const Sid& sid);

Sid local_system_sid();              // S-1-5-18
Sid everyone_sid();                  // S-1-1-0
Sid se_untrusted_mandatory_sid();    // S-1-16-0

std::string format_sid(const Sid& sid);      // "S-1-5-18"
Sid parse_sid(const std::string& text);      // throws SimError on garbage

std::string integrity_level_name(IntegrityLevel level);
IntegrityLevel parse_integrity_level(const std::string& name);

// ---------------------------------------------------------------------------
// Privileges
// ---------------------------------------------------------------------------

inline constexpr uint32_t kSeDebugPrivilegeBit = 20;

inline constexpr uint64_t privilege_mask(uint32_t bit) { return 1ull << bit; }

// Three 64-bit bitmaps. A well-formed token keeps Enabled and
// EnabledByDefault subsets of Present; raw memory patches may break that
// deliberately, so the check lives in valid(), not the type.
struct PrivilegeSet {
  uint64_t present = 0;
  uint64_t enabled = 0;
  uint64_t enabled_by_default = 0;

  bool valid() const {
    return (enabled & ~present) == 0 && (enabled_by_default & ~present) == 0;
  }
  bool operator==(const PrivilegeSet& other) const = default;
};

// ---------------------------------------------------------------------------
// Tokens
// ---------------------------------------------------------------------------

inline constexpr uint32_t kNoIntegrityIndex = 0xFFFFFFFFu;

// Group SIDs decode to nullopt when the serialized bytes are dangling or
// malformed; the integrity check treats such entries as untrusted.
struct GroupEntry {
  std::optional<Sid> sid;
  uint64_t attributes = 0;

  bool operator==(const GroupEntry& other) const = default;
};

struct TokenImage {
  std::optional<Sid> user;
  std::vector<GroupEntry> groups;
  uint32_t integrity_level_index = kNoIntegrityIndex;
  PrivilegeSet privileges;

  bool operator==(const TokenImage& other) const = default;

  // Validating constructor for tokens built from scenario data or syscalls.
  // Throws SimError unless: user and all group SIDs present, privileges
  // well-formed, and the index is kNoIntegrityIndex or names an integrity
  // SID inside groups.
  static TokenImage make_valid(Sid user, std::vector<GroupEntry> groups,
                               uint32_t integrity_level_index,
                               PrivilegeSet privileges);
};

// Serialized token layout (all fields little-endian):
//
//   +0x40  8  Privileges.Present
//   +0x48  8  Privileges.Enabled
//   +0x50  8  Privileges.EnabledByDefault
//   +0x78  4  group count
//   +0x90  8  guest address of the user's serialized SID
//   +0x98  8  guest address of the UserAndGroups array
//   +0xD0  4  integrity_level_index
//   +0xE0     UserAndGroups array, 16 bytes per entry:
//               8  guest address of the entry's serialized SID
//               8  attributes
//          then the serialized SID blobs (user first, then groups in order):
//               1  RID count      1  authority      4*count  RIDs
struct TokenLayout {
  uint64_t base_addr = 0;
  uint64_t total_size = 0;

  bool operator==(const TokenLayout& other) const = default;
};

inline constexpr uint64_t kTokenPrivilegesPresentOffset = 0x40;
inline constexpr uint64_t kTokenPrivilegesEnabledOffset = 0x48;
inline constexpr uint64_t kTokenPrivilegesEnabledByDefaultOffset = 0x50;
inline constexpr uint64_t kTokenGroupCountOffset = 0x78;
inline constexpr uint64_t kTokenUserSidOffset = 0x90;
inline constexpr uint64_t kTokenGroupsOffset = 0x98;
inline constexpr uint64_t kTokenIntegrityIndexOffset = 0xD0;
inline constexpr uint64_t kTokenHeaderSize = 0xE0;
inline constexpr uint64_t kTokenGroupEntrySize = 16;

// Defensive caps when parsing serialized bytes that raw patches may have
// corrupted: SID rid counts and token group counts are clamped, never
// trusted.
inline constexpr uint8_t kMaxSidRids = 15;
inline constexpr uint32_t kMaxDecodedGroups = 4096;

uint64_t serialized_sid_size(const Sid& sid);
uint64_t token_image_size(const TokenImage& token);

// Serializes the token at base_addr, reserving the range against other
// object placements and mapping pages as needed. Throws SimError on
// placement collision or a token with null SID markers.
TokenLayout encode_token(const TokenImage& token, uint64_t base_addr,
                         mem::GuestMemory& memory);

// Total inverse: reads whatever bytes are there now (including raw patches
// applied since encoding) and never throws; unreadable SIDs become nullopt.
TokenImage decode_token(const TokenLayout& layout,
                        const mem::GuestMemory& memory);

// ---------------------------------------------------------------------------
// Securable objects
// ---------------------------------------------------------------------------

enum class AceKind { Allow, Deny };

struct Ace {
  AceKind kind = AceKind::Allow;
  Sid sid;
  AccessMask mask;
};

struct MandatoryPolicy {
  bool no_write_up = false;
  bool no_read_up = false;
};

struct SecurityDescriptor {
  Sid owner;
  std::vector<Ace> dacl;  // ordered; empty DACL denies everything
  IntegrityLevel object_il = IntegrityLevel::Medium;
  MandatoryPolicy policy;
};

// Files label no-write-up; processes additionally no-read-up (memory
// introspection is the read that matters here).
SecurityDescriptor make_file_security(IntegrityLevel object_il,
                                      std::vector<Ace> dacl = {});
SecurityDescriptor make_process_security(IntegrityLevel object_il,
                                         std::vector<Ace> dacl = {});

struct FileObject {
  std::string path;
  uint64_t content_hash = 0;
  SecurityDescriptor security;
  uint32_t open_handles = 0;
  bool delete_pending = false;
  bool exists = true;
};

enum class Protection { None, PplAntimalwareLight };

std::string protection_name(Protection p);
Protection parse_protection(const std::string& name);

struct ProcessObject {
  uint32_t pid = 0;
  std::string name;
  uint64_t token_addr = 0;
  std::string image_path;
  uint64_t image_hash = 0;
  SecurityDescriptor security;
  Protection protection = Protection::None;
  bool running = true;
};

// ---------------------------------------------------------------------------
// Content hashing (FNV-1a, 64-bit)
// ---------------------------------------------------------------------------

inline constexpr uint64_t kFnvOffsetBasis = 0xCBF29CE484222325ull;
inline constexpr uint64_t kFnvPrime = 0x100000001B3ull;

uint64_t hash_content(std::string_view bytes);

}  // namespace sim::kobj
