#include "sim/kobj.hpp"

#include "sim/error.hpp"
#include "sim/hex.hpp"

namespace sim::kobj {

std::string status_text(NtStatus s) {
  switch (s) {
    case NtStatus::Success: return "SUCCESS";
    case NtStatus::AccessDenied: return "ACCESS_DENIED";
    case NtStatus::NameNotFound: return "NAME_NOT_FOUND";
    case NtStatus::DeletePending: return "DELETE_PENDING";
    case NtStatus::VirusInfected: return "VIRUS_INFECTED";
  }
  return hex32(status_code(s));
}

// -------------------------------------------------------------------------
// SIDs
// -------------------------------------------------------------------------

Sid integrity_sid(IntegrityLevel level) {
  return Sid{kIntegrityAuthority,
             {static_cast<uint32_t>(level) * kIntegrityRidStep}};
}

bool is_integrity_sid(const Sid& sid) {
  return integrity_level_of(sid).has_value();
}

std::optional<IntegrityLevel> integrity_level_of(const Sid& sid) {
  if (sid.authority != kIntegrityAuthority || sid.rids.size() != 1)
    return std::nullopt;
  uint32_t rid = sid.rids[0];
  if (rid % kIntegrityRidStep != 0) return std::nullopt;
  uint32_t level = rid / kIntegrityRidStep;
  if (level >= kIntegrityLevelCount) return std::nullopt;
  return static_cast<IntegrityLevel>(level);
}

Sid local_system_sid() { return Sid{kNtAuthority, {18}}; }
Sid everyone_sid() { return Sid{kWorldAuthority, {0}}; }
Sid se_untrusted_mandatory_sid() { return integrity_sid(IntegrityLevel::Untrusted); }

std::string format_sid(const Sid& sid) {
  std::string out = "S-1-" + std::to_string(sid.authority);
  for (uint32_t rid : sid.rids) out += "-" + std::to_string(rid);
  return out;
}

Sid parse_sid(const std::string& text) {
  // S-1-<authority>-<rid>[-<rid>...]
  auto fail = [&]() -> SimError {
    return SimError("malformed SID \"" + text + "\"");
  };
  std::vector<std::string> parts;
  size_t start = 0;
  while (start <= text.size()) {
    size_t dash = text.find('-', start);
    if (dash == std::string::npos) {
      parts.push_back(text.substr(start));
      break;
    }
    parts.push_back(text.substr(start, dash - start));
    start = dash + 1;
  }
  if (parts.size() < 4 || parts[0] != "S" || parts[1] != "1") throw fail();
  uint64_t authority = parse_u64(parts[2], "SID authority");
  if (authority > 0xFF) throw fail();
  Sid sid;
  sid.authority = static_cast<uint8_t>(authority);
  for (size_t i = 3; i < parts.size(); ++i) {
    uint64_t rid = parse_u64(parts[i], "SID rid");
    if (rid > 0xFFFFFFFFull) throw fail();
    sid.rids.push_back(static_cast<uint32_t>(rid));
  }
  return sid;
}

std::string integrity_level_name(IntegrityLevel level) {
  switch (level) {
    case IntegrityLevel::Untrusted: return "Untrusted";
    case IntegrityLevel::Low: return "Low";
    case IntegrityLevel::Medium: return "Medium";
    case IntegrityLevel::High: return "High";
    case IntegrityLevel::System: return "System";
    case IntegrityLevel::Protected: return "Protected";
  }
  return "Unknown";
}

IntegrityLevel parse_integrity_level(const std::string& name) {
  for (uint32_t i = 0; i < kIntegrityLevelCount; ++i) {
    auto level = static_cast<IntegrityLevel>(i);
    if (integrity_level_name(level) == name) return level;
  }
  throw SimError("unknown integrity level \"" + name + "\"");
}

std::string protection_name(Protection p) {
  return p == Protection::PplAntimalwareLight ? "PPL_AntimalwareLight" : "None";
}

Protection parse_protection(const std::string& name) {
  if (name == "None") return Protection::None;
  if (name == "PPL_AntimalwareLight") return Protection::PplAntimalwareLight;
  throw SimError("unknown protection \"" + name + "\"");
}

// -------------------------------------------------------------------------
// Tokens
// -------------------------------------------------------------------------

TokenImage TokenImage::make_valid(Sid user, std::vector<GroupEntry> groups,
                                  uint32_t integrity_level_index,
                                  PrivilegeSet privileges) {
  if (user.rids.empty()) throw SimError("token user SID has no RIDs");
  if (user.rids.size() > kMaxSidRids)
    throw SimError("token user SID has " + std::to_string(user.rids.size()) +
                   " RIDs; the serialized form caps at " +
                   std::to_string(kMaxSidRids));
  for (size_t i = 0; i < groups.size(); ++i) {
    if (!groups[i].sid.has_value())
      throw SimError("token group " + std::to_string(i) + " has a null SID");
    if (groups[i].sid->rids.empty())
      throw SimError("token group " + std::to_string(i) + " SID has no RIDs");
    if (groups[i].sid->rids.size() > kMaxSidRids)
      throw SimError("token group " + std::to_string(i) + " SID has " +
                     std::to_string(groups[i].sid->rids.size()) +
                     " RIDs; the serialized form caps at " +
                     std::to_string(kMaxSidRids));
  }
  if (!privileges.valid())
    throw SimError("token privileges: Enabled/EnabledByDefault must be subsets of Present");
  if (integrity_level_index != kNoIntegrityIndex) {
    if (integrity_level_index >= groups.size())
      throw SimError("token integrity_level_index " +
                     std::to_string(integrity_level_index) + " out of range (" +
                     std::to_string(groups.size()) + " groups)");
    if (!is_integrity_sid(*groups[integrity_level_index].sid))
      throw SimError("token integrity_level_index names " +
                     format_sid(*groups[integrity_level_index].sid) +
                     ", which is not an integrity SID");
  }
  TokenImage t;
  t.user = std::move(user);
  t.groups = std::move(groups);
  t.integrity_level_index = integrity_level_index;
  t.privileges = privileges;
  return t;
}

uint64_t serialized_sid_size(const Sid& sid) {
  return 2 + 4ull * sid.rids.size();
}

uint64_t token_image_size(const TokenImage& token) {
  uint64_t size = kTokenHeaderSize + kTokenGroupEntrySize * token.groups.size();
  if (token.user) size += serialized_sid_size(*token.user);
  for (const auto& g : token.groups)
    if (g.sid) size += serialized_sid_size(*g.sid);
  return size;
}

namespace {

void append_sid_blob(std::vector<uint8_t>& buf, const Sid& sid) {
  buf.push_back(static_cast<uint8_t>(sid.rids.size()));
  buf.push_back(sid.authority);
  for (uint32_t rid : sid.rids)
    for (int i = 0; i < 4; ++i)
      buf.push_back(static_cast<uint8_t>(rid >> (8 * i)));
}

void put_u32(std::vector<uint8_t>& buf, uint64_t offset, uint32_t value) {
  for (int i = 0; i < 4; ++i)
    buf[offset + static_cast<uint64_t>(i)] = static_cast<uint8_t>(value >> (8 * i));
}

void put_u64(std::vector<uint8_t>& buf, uint64_t offset, uint64_t value) {
  for (int i = 0; i < 8; ++i)
    buf[offset + static_cast<uint64_t>(i)] = static_cast<uint8_t>(value >> (8 * i));
}

// Reads one serialized SID; nullopt on anything implausible so decoding a
// patched or dangling token stays total.
std::optional<Sid> read_sid_blob(const mem::GuestMemory& memory, uint64_t addr) {
  if (addr == 0) return std::nullopt;
  uint8_t count = memory.raw_read_u8(addr);
  if (count == 0 || count > kMaxSidRids) return std::nullopt;
  Sid sid;
  sid.authority = memory.raw_read_u8(addr + 1);
  for (uint8_t i = 0; i < count; ++i)
    sid.rids.push_back(memory.raw_read_u32(addr + 2 + 4ull * i));
  return sid;
}

}  // namespace

TokenLayout encode_token(const TokenImage& token, uint64_t base_addr,
                         mem::GuestMemory& memory) {
  if (!token.user)
    throw SimError("cannot encode token with a null user SID");
  for (size_t i = 0; i < token.groups.size(); ++i)
    if (!token.groups[i].sid)
      throw SimError("cannot encode token: group " + std::to_string(i) +
                     " has a null SID");

  uint64_t total = token_image_size(token);
  memory.reserve_range(base_addr, total, "token@" + hex64(base_addr));
  memory.map_region(base_addr, total);

  std::vector<uint8_t> buf(total, 0);
  put_u64(buf, kTokenPrivilegesPresentOffset, token.privileges.present);
  put_u64(buf, kTokenPrivilegesEnabledOffset, token.privileges.enabled);
  put_u64(buf, kTokenPrivilegesEnabledByDefaultOffset,
          token.privileges.enabled_by_default);
  put_u32(buf, kTokenGroupCountOffset,
          static_cast<uint32_t>(token.groups.size()));
  put_u32(buf, kTokenIntegrityIndexOffset, token.integrity_level_index);

  const uint64_t array_addr = base_addr + kTokenHeaderSize;
  uint64_t blob_cursor =
      array_addr + kTokenGroupEntrySize * token.groups.size();
  put_u64(buf, kTokenGroupsOffset, array_addr);
  put_u64(buf, kTokenUserSidOffset, blob_cursor);

  auto place_blob = [&](const Sid& sid) {
    std::vector<uint8_t> blob;
    append_sid_blob(blob, sid);
    uint64_t off = blob_cursor - base_addr;
    for (size_t i = 0; i < blob.size(); ++i) buf[off + i] = blob[i];
    blob_cursor += blob.size();
  };

  place_blob(*token.user);
  for (size_t g = 0; g < token.groups.size(); ++g) {
    uint64_t entry_off =
        kTokenHeaderSize + kTokenGroupEntrySize * static_cast<uint64_t>(g);
    put_u64(buf, entry_off, blob_cursor);
    put_u64(buf, entry_off + 8, token.groups[g].attributes);
    place_blob(*token.groups[g].sid);
  }

  memory.raw_write(base_addr, buf);
  return TokenLayout{base_addr, total};
}

TokenImage decode_token(const TokenLayout& layout,
                        const mem::GuestMemory& memory) {
  const uint64_t base = layout.base_addr;
  TokenImage token;
  token.privileges.present =
      memory.raw_read_u64(base + kTokenPrivilegesPresentOffset);
  token.privileges.enabled =
      memory.raw_read_u64(base + kTokenPrivilegesEnabledOffset);
  token.privileges.enabled_by_default =
      memory.raw_read_u64(base + kTokenPrivilegesEnabledByDefaultOffset);
  token.integrity_level_index =
      memory.raw_read_u32(base + kTokenIntegrityIndexOffset);
  token.user = read_sid_blob(memory, memory.raw_read_u64(base + kTokenUserSidOffset));

  uint32_t count = memory.raw_read_u32(base + kTokenGroupCountOffset);
  if (count > kMaxDecodedGroups) count = kMaxDecodedGroups;
  uint64_t array_addr = memory.raw_read_u64(base + kTokenGroupsOffset);
  for (uint32_t i = 0; i < count; ++i) {
    GroupEntry entry;
    if (array_addr != 0) {
      uint64_t entry_addr = array_addr + kTokenGroupEntrySize * static_cast<uint64_t>(i);
      entry.sid = read_sid_blob(memory, memory.raw_read_u64(entry_addr));
      entry.attributes = memory.raw_read_u64(entry_addr + 8);
    }
    token.groups.push_back(std::move(entry));
  }
  return token;
}

// -------------------------------------------------------------------------
// Securable objects
// -------------------------------------------------------------------------

SecurityDescriptor make_file_security(IntegrityLevel object_il,
                                      std::vector<Ace> dacl) {
  SecurityDescriptor sd;
  sd.owner = local_system_sid();
  sd.dacl = dacl.empty()
                ? std::vector<Ace>{Ace{AceKind::Allow, everyone_sid(),
                                       access::kFullAccess}}
                : std::move(dacl);
  sd.object_il = object_il;
  sd.policy = MandatoryPolicy{/*no_write_up=*/true, /*no_read_up=*/false};
  return sd;
}

SecurityDescriptor make_process_security(IntegrityLevel object_il,
                                         std::vector<Ace> dacl) {
  SecurityDescriptor sd;
  sd.owner = local_system_sid();
  sd.dacl = dacl.empty()
                ? std::vector<Ace>{Ace{AceKind::Allow, everyone_sid(),
                                       access::kFullAccess}}
                : std::move(dacl);
  sd.object_il = object_il;
  sd.policy = MandatoryPolicy{/*no_write_up=*/true, /*no_read_up=*/true};
  return sd;
}

// -------------------------------------------------------------------------
// Hashing
// -------------------------------------------------------------------------

uint64_t hash_content(std::string_view bytes) {
  uint64_t h = kFnvOffsetBasis;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

}  // namespace sim::kobj
