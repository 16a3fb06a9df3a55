#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "sim/kobj.hpp"
#include "sim/mem.hpp"

namespace sim::ranger {

// A byte range the monitor refuses to let isolated drivers touch.
struct ProtectedRegion {
  uint64_t addr = 0;
  uint64_t len = 0;
  std::string label;

  bool overlaps(uint64_t other_addr, uint64_t other_len) const {
    if (len == 0 || other_len == 0) return false;
    return addr < other_addr + other_len && other_addr < addr + len;
  }
};

enum class ViolationPolicy {
  DenySkip,          // suppress writes, allow reads (default)
  DenyFault,         // suppress writes, record them as faults
  RedirectToShadow,  // additionally deny reads of protected bytes (zeros)
};

std::string violation_policy_name(ViolationPolicy p);
ViolationPolicy parse_violation_policy(const std::string& name);

// One isolation domain. Members share a single view of guest memory.
struct Enclave {
  uint32_t id = 0;
  std::vector<std::string> members;  // actor keys
  mem::SlatView view;
};

// Region labels for the two token fields the kernel attack patches.
inline constexpr const char* kRegionIntegrityIndex = "Token.IntegrityLevelIndex";
inline constexpr const char* kRegionPrivilegesEnabled = "Token.Privileges.Enabled";

// The image name whose token the monitor guards.
inline constexpr const char* kDefenderImageName = "MsMpEng.exe";

// Token address of the antimalware engine: lowest-pid process named
// MsMpEng.exe. Throws SimError when no such process exists.
uint64_t locate_defender_token(
    const std::map<uint32_t, kobj::ProcessObject>& processes);

// Enclave-per-driver monitor over second-level page permissions.
//
// The kernel core and every driver loaded before arming live in the default
// enclave, whose view is never restricted. A driver loaded while the monitor
// is armed gets a fresh enclave whose view drops write (and, under
// RedirectToShadow, read) permission on every page covering a protected
// region. Page-granular denials then go through sub-page arbitration: an
// access overlapping a protected region is suppressed per policy; an access
// that merely shares a page with one is emulated against real memory and
// allowed.
class Monitor : public mem::AccessArbiter {
 public:
  Monitor();

  // Toggles whether on_driver_load installs restrictions. Disarming also
  // makes every existing enclave behave as unrestricted.
  void arm(bool protect) { armed_ = protect; }
  bool armed() const { return armed_; }

  void set_policy(ViolationPolicy policy) { policy_ = policy; }
  ViolationPolicy policy() const { return policy_; }

  // Installs the two protected token fields (index + enabled privileges),
  // optionally widening to the token's whole serialized extent.
  void protect_token(const kobj::TokenLayout& layout, bool whole_token = false);

  void add_region(ProtectedRegion region);
  const std::vector<ProtectedRegion>& regions() const { return regions_; }

  // Registers a driver. Armed: fresh enclave with a restricted view.
  // Disarmed: joins the default enclave. Duplicate names are authoring
  // errors (actor identities must stay unambiguous in the log).
  const Enclave& on_driver_load(const mem::ActorId& driver);

  const Enclave& default_enclave() const { return *enclaves_.front(); }
  const Enclave* enclave_of(const mem::ActorId& actor) const;

  // mem::AccessArbiter
  const mem::SlatView& view_for(const mem::ActorId& actor) override;
  mem::Arbitration arbitrate(const mem::ActorId& actor, uint64_t addr,
                             uint64_t len, mem::AccessKind kind) override;

  // Number of sub-page arbitrations taken (the trap path). Zero for traffic
  // that never touches a protected page.
  uint64_t arbitration_count() const { return arbitration_count_; }

 private:
  mem::SlatView restricted_view() const;

  bool armed_ = false;
  ViolationPolicy policy_ = ViolationPolicy::DenySkip;
  std::vector<ProtectedRegion> regions_;
  std::vector<std::unique_ptr<Enclave>> enclaves_;  // [0] is the default
  std::map<std::string, uint32_t> member_to_enclave_;
  mem::SlatView unrestricted_;
  uint64_t arbitration_count_ = 0;
  uint32_t next_enclave_id_ = 1;
};

}  // namespace sim::ranger
