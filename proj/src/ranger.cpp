#include "sim/ranger.hpp"

#include "sim/error.hpp"
#include "sim/hex.hpp"

namespace sim::ranger {

std::string violation_policy_name(ViolationPolicy p) {
  switch (p) {
    case ViolationPolicy::DenySkip: return "DenySkip";
    case ViolationPolicy::DenyFault: return "DenyFault";
    case ViolationPolicy::RedirectToShadow: return "RedirectToShadow";
  }
  return "DenySkip";
}

ViolationPolicy parse_violation_policy(const std::string& name) {
  if (name == "DenySkip") return ViolationPolicy::DenySkip;
  if (name == "DenyFault") return ViolationPolicy::DenyFault;
  if (name == "RedirectToShadow") return ViolationPolicy::RedirectToShadow;
  throw SimError("unknown violation policy \"" + name + "\"");
}

uint64_t locate_defender_token(
    const std::map<uint32_t, kobj::ProcessObject>& processes) {
  // Map iteration is pid-ascending, so the first name match is the lowest
  // pid — the deterministic choice when several engine instances exist.
  for (const auto& [pid, proc] : processes)
    if (proc.name == kDefenderImageName) return proc.token_addr;
  throw SimError(std::string("no process named ") + kDefenderImageName +
                 " to protect");
}

Monitor::Monitor() {
  auto def = std::make_unique<Enclave>();
  def->id = 0;
  def->members.push_back(mem::ActorId::kernel().key());
  def->view = unrestricted_;
  member_to_enclave_[mem::ActorId::kernel().key()] = 0;
  enclaves_.push_back(std::move(def));
}

void Monitor::protect_token(const kobj::TokenLayout& layout, bool whole_token) {
  add_region(ProtectedRegion{
      layout.base_addr + kobj::kTokenIntegrityIndexOffset, 4,
      kRegionIntegrityIndex});
  add_region(ProtectedRegion{
      layout.base_addr + kobj::kTokenPrivilegesEnabledOffset, 8,
      kRegionPrivilegesEnabled});
  if (whole_token)
    add_region(ProtectedRegion{layout.base_addr, layout.total_size,
                               "Token.WholeImage"});
}

void Monitor::add_region(ProtectedRegion region) {
  if (region.len == 0)
    throw SimError("protected region \"" + region.label + "\" has zero length");
  regions_.push_back(std::move(region));
}

mem::SlatView Monitor::restricted_view() const {
  mem::SlatView view;
  view.default_perms = mem::kPermRw;
  uint8_t guarded_perms =
      policy_ == ViolationPolicy::RedirectToShadow ? 0 : mem::kPermRead;
  for (const auto& r : regions_) {
    for (uint64_t page = mem::page_of(r.addr);
         page <= mem::page_of(r.addr + r.len - 1); ++page)
      view.page_perms[page] = guarded_perms;
  }
  return view;
}

const Enclave& Monitor::on_driver_load(const mem::ActorId& driver) {
  if (driver.kind != mem::ActorId::Kind::Driver)
    throw SimError("only drivers can be loaded into enclaves");
  if (member_to_enclave_.count(driver.key()))
    throw SimError("driver name already loaded: " + driver.driver_name);

  if (!armed_) {
    enclaves_.front()->members.push_back(driver.key());
    member_to_enclave_[driver.key()] = 0;
    return *enclaves_.front();
  }
  auto enclave = std::make_unique<Enclave>();
  enclave->id = next_enclave_id_++;
  enclave->members.push_back(driver.key());
  enclave->view = restricted_view();
  member_to_enclave_[driver.key()] = enclave->id;
  enclaves_.push_back(std::move(enclave));
  return *enclaves_.back();
}

const Enclave* Monitor::enclave_of(const mem::ActorId& actor) const {
  auto it = member_to_enclave_.find(actor.key());
  if (it == member_to_enclave_.end()) return nullptr;
  for (const auto& e : enclaves_)
    if (e->id == it->second) return e.get();
  return nullptr;
}

const mem::SlatView& Monitor::view_for(const mem::ActorId& actor) {
  if (!armed_) return unrestricted_;
  auto it = member_to_enclave_.find(actor.key());
  // Actors never registered (the kernel core, pre-monitor drivers) resolve
  // to the default enclave, which is never restricted.
  if (it == member_to_enclave_.end() || it->second == 0) return unrestricted_;
  for (const auto& e : enclaves_)
    if (e->id == it->second) return e->view;
  return unrestricted_;
}

mem::Arbitration Monitor::arbitrate(const mem::ActorId& /*actor*/,
                                    uint64_t addr, uint64_t len,
                                    mem::AccessKind /*kind*/) {
  ++arbitration_count_;
  for (const auto& r : regions_) {
    if (r.overlaps(addr, len)) {
      mem::Disposition d = policy_ == ViolationPolicy::DenyFault
                               ? mem::Disposition::Faulted
                               : mem::Disposition::Skipped;
      return mem::Arbitration{mem::Arbitration::Kind::Deny, d};
    }
  }
  // Same page as a protected region but disjoint from all of them: perform
  // the access on the driver's behalf.
  return mem::Arbitration{mem::Arbitration::Kind::Emulate,
                          mem::Disposition::Skipped};
}

}  // namespace sim::ranger
