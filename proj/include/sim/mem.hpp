#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace sim::mem {

inline constexpr uint64_t kPageSize = 4096;

inline constexpr uint64_t page_of(uint64_t addr) { return addr / kPageSize; }

// Sparse byte-addressable guest physical memory. Pages are allocated on
// demand and zero-filled. The raw API below is the setup/oracle channel:
// it bypasses all views and is never logged. Instrumented traffic goes
// through Bus::actor_read / Bus::actor_write.
class GuestMemory {
 public:
  // Zero-fills every page covering [addr, addr+len). Idempotent: remapping
  // an existing page leaves its contents alone.
  void map_region(uint64_t addr, uint64_t len);

  bool is_range_mapped(uint64_t addr, uint64_t len) const;

  // Reads of unmapped pages return zeros; never fails for a valid range.
  std::vector<uint8_t> raw_read(uint64_t addr, uint64_t len) const;

  // Writes map missing pages implicitly.
  void raw_write(uint64_t addr, const std::vector<uint8_t>& bytes);

  uint8_t raw_read_u8(uint64_t addr) const;
  uint32_t raw_read_u32(uint64_t addr) const;   // little-endian
  uint64_t raw_read_u64(uint64_t addr) const;   // little-endian
  void raw_write_u32(uint64_t addr, uint32_t value);
  void raw_write_u64(uint64_t addr, uint64_t value);

  // Object placement registry. Serialized kernel objects reserve their byte
  // ranges so overlapping placements surface as authoring errors instead of
  // silent corruption.
  void reserve_range(uint64_t addr, uint64_t len, const std::string& label);

  size_t page_count() const { return pages_.size(); }

 private:
  struct Reservation {
    uint64_t addr;
    uint64_t len;
    std::string label;
  };

  std::vector<uint8_t>& page_for(uint64_t page);

  std::map<uint64_t, std::vector<uint8_t>> pages_;
  std::vector<Reservation> reservations_;
};

// Who is touching memory. Kernel core (and the access checks it performs)
// is never restricted; drivers are the interposition targets.
struct ActorId {
  enum class Kind { KernelCore, Driver };

  Kind kind = Kind::KernelCore;
  std::string driver_name;  // empty unless kind == Driver

  static ActorId kernel() { return ActorId{Kind::KernelCore, ""}; }
  static ActorId driver(std::string name) {
    return ActorId{Kind::Driver, std::move(name)};
  }

  // Stable string form, used as the enclave-membership key and the log
  // actor column.
  std::string key() const {
    return kind == Kind::KernelCore ? "kernel" : "driver:" + driver_name;
  }

  bool operator==(const ActorId& other) const {
    return kind == other.kind && driver_name == other.driver_name;
  }
};

// Page permissions as seen through one enclave's view (EPT-style).
inline constexpr uint8_t kPermRead = 0x1;
inline constexpr uint8_t kPermWrite = 0x2;
inline constexpr uint8_t kPermRw = kPermRead | kPermWrite;

struct SlatView {
  uint8_t default_perms = kPermRw;
  // Pages absent from the map carry default_perms.
  std::unordered_map<uint64_t, uint8_t> page_perms;

  uint8_t perms_for(uint64_t page) const {
    auto it = page_perms.find(page);
    return it == page_perms.end() ? default_perms : it->second;
  }
};

enum class AccessKind { Read, Write };

enum class Disposition {
  Skipped,  // access suppressed, execution continues
  Faulted,  // access suppressed, recorded as a fault (strict mode)
};

struct Violation {
  ActorId actor;
  uint64_t addr = 0;
  uint64_t len = 0;
  AccessKind kind = AccessKind::Write;
  Disposition disposition = Disposition::Skipped;
};

// Sub-page arbitration verdict, produced by the monitor when a page-level
// permission check fails.
struct Arbitration {
  enum class Kind {
    Emulate,  // range is disjoint from every protected region: perform it
    Deny,     // range overlaps a protected region: suppress it
  };
  Kind kind = Kind::Deny;
  Disposition disposition = Disposition::Skipped;
};

// Implemented by the enclave monitor. view_for is consulted exactly once
// per actor access; arbitrate only when the page-level check denies.
class AccessArbiter {
 public:
  virtual ~AccessArbiter() = default;
  virtual const SlatView& view_for(const ActorId& actor) = 0;
  virtual Arbitration arbitrate(const ActorId& actor, uint64_t addr,
                                uint64_t len, AccessKind kind) = 0;
};

// Receives every violation exactly once, plus bookkeeping notices for
// emulated (same-page but disjoint) accesses.
class AccessSink {
 public:
  virtual ~AccessSink() = default;
  virtual void on_violation(const Violation& v) = 0;
  virtual void on_emulated(const ActorId& actor, uint64_t addr, uint64_t len,
                           AccessKind kind) = 0;
};

struct ReadResult {
  std::vector<uint8_t> bytes;
  std::optional<Violation> violation;  // set => bytes are zeros
  bool emulated = false;
};

struct WriteResult {
  std::optional<Violation> violation;  // set => memory untouched
  bool emulated = false;

  bool ok() const { return !violation.has_value(); }
};

// The actor-facing access path. Every call resolves the actor's view once;
// denied accesses are all-or-nothing even when the range spans a permitted
// and a denied page.
class Bus {
 public:
  Bus(GuestMemory& memory, AccessArbiter& arbiter, AccessSink* sink = nullptr)
      : memory_(memory), arbiter_(arbiter), sink_(sink) {}

  // Throws SimError if the range is unmapped (scenario authoring bug).
  ReadResult actor_read(const ActorId& actor, uint64_t addr, uint64_t len);
  WriteResult actor_write(const ActorId& actor, uint64_t addr,
                          const std::vector<uint8_t>& bytes);

  uint64_t read_ops() const { return read_ops_; }
  uint64_t write_ops() const { return write_ops_; }

 private:
  bool pages_grant(const SlatView& view, uint64_t addr, uint64_t len,
                   uint8_t needed) const;

  GuestMemory& memory_;
  AccessArbiter& arbiter_;
  AccessSink* sink_;
  uint64_t read_ops_ = 0;
  uint64_t write_ops_ = 0;
};

}  // namespace sim::mem
