#include "sim/mem.hpp"

#include <cstring>

#include "sim/error.hpp"
#include "sim/hex.hpp"

namespace sim::mem {

namespace {

void check_range(uint64_t addr, uint64_t len, const char* what) {
  if (len != 0 && addr + len < addr)
    throw SimError(std::string(what) + ": address range wraps at " + hex64(addr));
}

bool ranges_overlap(uint64_t a, uint64_t alen, uint64_t b, uint64_t blen) {
  if (alen == 0 || blen == 0) return false;
  return a < b + blen && b < a + alen;
}

}  // namespace

std::vector<uint8_t>& GuestMemory::page_for(uint64_t page) {
  auto it = pages_.find(page);
  if (it == pages_.end())
    it = pages_.emplace(page, std::vector<uint8_t>(kPageSize, 0)).first;
  return it->second;
}

void GuestMemory::map_region(uint64_t addr, uint64_t len) {
  check_range(addr, len, "map_region");
  if (len == 0) return;
  for (uint64_t page = page_of(addr); page <= page_of(addr + len - 1); ++page)
    page_for(page);
}

bool GuestMemory::is_range_mapped(uint64_t addr, uint64_t len) const {
  check_range(addr, len, "is_range_mapped");
  if (len == 0) return true;
  for (uint64_t page = page_of(addr); page <= page_of(addr + len - 1); ++page)
    if (!pages_.count(page)) return false;
  return true;
}

std::vector<uint8_t> GuestMemory::raw_read(uint64_t addr, uint64_t len) const {
  check_range(addr, len, "raw_read");
  std::vector<uint8_t> out(len, 0);
  uint64_t done = 0;
  while (done < len) {
    uint64_t cur = addr + done;
    uint64_t off = cur % kPageSize;
    uint64_t chunk = std::min(kPageSize - off, len - done);
    auto it = pages_.find(page_of(cur));
    if (it != pages_.end())
      std::memcpy(out.data() + done, it->second.data() + off, chunk);
    done += chunk;
  }
  return out;
}

void GuestMemory::raw_write(uint64_t addr, const std::vector<uint8_t>& bytes) {
  check_range(addr, bytes.size(), "raw_write");
  uint64_t done = 0;
  while (done < bytes.size()) {
    uint64_t cur = addr + done;
    uint64_t off = cur % kPageSize;
    uint64_t chunk = std::min(kPageSize - off, bytes.size() - done);
    std::memcpy(page_for(page_of(cur)).data() + off, bytes.data() + done, chunk);
    done += chunk;
  }
}

uint8_t GuestMemory::raw_read_u8(uint64_t addr) const {
  return raw_read(addr, 1)[0];
}

uint32_t GuestMemory::raw_read_u32(uint64_t addr) const {
  auto b = raw_read(addr, 4);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

uint64_t GuestMemory::raw_read_u64(uint64_t addr) const {
  auto b = raw_read(addr, 8);
  uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[static_cast<size_t>(i)];
  return v;
}

void GuestMemory::raw_write_u32(uint64_t addr, uint32_t value) {
  std::vector<uint8_t> b(4);
  for (int i = 0; i < 4; ++i) b[static_cast<size_t>(i)] = static_cast<uint8_t>(value >> (8 * i));
  raw_write(addr, b);
}

void GuestMemory::raw_write_u64(uint64_t addr, uint64_t value) {
  std::vector<uint8_t> b(8);
  for (int i = 0; i < 8; ++i) b[static_cast<size_t>(i)] = static_cast<uint8_t>(value >> (8 * i));
  raw_write(addr, b);
}

void GuestMemory::reserve_range(uint64_t addr, uint64_t len, const std::string& label) {
  check_range(addr, len, "reserve_range");
  for (const auto& r : reservations_) {
    if (ranges_overlap(addr, len, r.addr, r.len))
      throw SimError("object placement collision: " + label + " at [" + hex64(addr) +
                     ", +" + hex64(len) + ") overlaps " + r.label + " at [" +
                     hex64(r.addr) + ", +" + hex64(r.len) + ")");
  }
  reservations_.push_back(Reservation{addr, len, label});
}

bool Bus::pages_grant(const SlatView& view, uint64_t addr, uint64_t len,
                      uint8_t needed) const {
  for (uint64_t page = page_of(addr); page <= page_of(addr + len - 1); ++page)
    if ((view.perms_for(page) & needed) != needed) return false;
  return true;
}

ReadResult Bus::actor_read(const ActorId& actor, uint64_t addr, uint64_t len) {
  ++read_ops_;
  if (len == 0) return ReadResult{};
  if (!memory_.is_range_mapped(addr, len))
    throw SimError("actor read of unmapped range [" + hex64(addr) + ", +" +
                   hex64(len) + ") by " + actor.key());
  const SlatView& view = arbiter_.view_for(actor);
  if (pages_grant(view, addr, len, kPermRead))
    return ReadResult{memory_.raw_read(addr, len), std::nullopt, false};

  Arbitration arb = arbiter_.arbitrate(actor, addr, len, AccessKind::Read);
  if (arb.kind == Arbitration::Kind::Emulate) {
    if (sink_) sink_->on_emulated(actor, addr, len, AccessKind::Read);
    return ReadResult{memory_.raw_read(addr, len), std::nullopt, true};
  }
  Violation v{actor, addr, len, AccessKind::Read, arb.disposition};
  if (sink_) sink_->on_violation(v);
  // Degraded read: the caller sees zeros instead of the protected bytes.
  return ReadResult{std::vector<uint8_t>(len, 0), v, false};
}

WriteResult Bus::actor_write(const ActorId& actor, uint64_t addr,
                             const std::vector<uint8_t>& bytes) {
  ++write_ops_;
  if (bytes.empty()) return WriteResult{};
  if (!memory_.is_range_mapped(addr, bytes.size()))
    throw SimError("actor write of unmapped range [" + hex64(addr) + ", +" +
                   hex64(bytes.size()) + ") by " + actor.key());
  const SlatView& view = arbiter_.view_for(actor);
  if (pages_grant(view, addr, bytes.size(), kPermWrite)) {
    memory_.raw_write(addr, bytes);
    return WriteResult{};
  }

  Arbitration arb = arbiter_.arbitrate(actor, addr, bytes.size(), AccessKind::Write);
  if (arb.kind == Arbitration::Kind::Emulate) {
    memory_.raw_write(addr, bytes);
    if (sink_) sink_->on_emulated(actor, addr, bytes.size(), AccessKind::Write);
    return WriteResult{std::nullopt, true};
  }
  // Denied writes are all-or-nothing: no byte lands, even on pages the view
  // would otherwise permit.
  Violation v{actor, addr, bytes.size(), AccessKind::Write, arb.disposition};
  if (sink_) sink_->on_violation(v);
  return WriteResult{v, false};
}

}  // namespace sim::mem
