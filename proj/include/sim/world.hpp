#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>

#include "sim/kobj.hpp"
#include "sim/log.hpp"
#include "sim/mem.hpp"
#include "sim/ranger.hpp"

namespace sim {

// Known-malware content hashes (FNV-1a of file bytes).
using SignatureDb = std::set<uint64_t>;

// Kernel-side gate for token-mutating syscalls: when enforced, a caller may
// only touch the token of an antimalware-light-protected process if it holds
// the same protection itself (self-modification is always permitted).
struct TrustLabelPolicy {
  bool enforced = false;
};

inline constexpr const char* kKernelActor = "kernel";

// Everything one simulation run owns: guest memory behind the monitor, the
// object tables, the event log, and the policy toggles. Also the violation
// sink — instrumented memory traffic logs through here exactly once.
class World : public mem::AccessSink {
 public:
  explicit World(EventLog& log);

  // Encodes the token, records its layout, and registers the process.
  // Duplicate pids are authoring errors.
  kobj::ProcessObject& add_process(kobj::ProcessObject proc,
                                   const kobj::TokenImage& token,
                                   uint64_t token_addr);

  // Registers a process whose token was already placed by the caller.
  kobj::ProcessObject& add_process_with_layout(kobj::ProcessObject proc,
                                               const kobj::TokenLayout& layout);

  kobj::FileObject& add_file(kobj::FileObject file);

  // Lowest-pid process with this image name; nullptr when absent.
  kobj::ProcessObject* find_process(const std::string& name);
  const kobj::ProcessObject* find_process(const std::string& name) const;

  kobj::ProcessObject* defender_process();

  kobj::FileObject* find_file(const std::string& path);

  // Bump allocator for tokens created mid-run (launched processes).
  uint64_t place_token(const kobj::TokenImage& token);

  uint32_t next_pid();

  const kobj::TokenLayout& layout_of(uint64_t token_addr) const;

  kobj::TokenImage decode_token_at(uint64_t token_addr) const;

  // Closes up to `count` handles. Applying a pending delete emits the
  // removal entry plus one verification probe by the process that marked
  // the file for deletion.
  void close_handles(kobj::FileObject& file, uint32_t count,
                     const std::string& closer);

  // Status a directory probe of this file would return right now; logs it.
  kobj::NtStatus probe_file(kobj::FileObject& file, const std::string& prober);

  // mem::AccessSink — every violation becomes exactly one log entry.
  void on_violation(const mem::Violation& v) override;
  void on_emulated(const mem::ActorId& actor, uint64_t addr, uint64_t len,
                   mem::AccessKind kind) override;

  uint64_t violation_count() const { return violations_; }

  EventLog& log;
  mem::GuestMemory memory;
  ranger::Monitor monitor;
  mem::Bus bus;

  std::map<uint32_t, kobj::ProcessObject> processes;  // pid-ordered
  std::map<std::string, kobj::FileObject> files;      // path-ordered
  std::map<uint64_t, kobj::TokenLayout> token_layouts;

  SignatureDb signature_db;
  TrustLabelPolicy trust_labels;

  uint64_t token_arena_cursor = 0x200000;
  uint64_t token_arena_end = 0x210000;

 private:
  void apply_pending_delete(kobj::FileObject& file);

  uint64_t violations_ = 0;
  uint32_t next_pid_ = 1000;
};

}  // namespace sim
