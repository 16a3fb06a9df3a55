#include "sim/world.hpp"

#include "sim/error.hpp"
#include "sim/hex.hpp"

namespace sim {

World::World(EventLog& log_ref)
    : log(log_ref), bus(memory, monitor, this) {}

kobj::ProcessObject& World::add_process(kobj::ProcessObject proc,
                                        const kobj::TokenImage& token,
                                        uint64_t token_addr) {
  kobj::TokenLayout layout = kobj::encode_token(token, token_addr, memory);
  proc.token_addr = token_addr;
  return add_process_with_layout(std::move(proc), layout);
}

kobj::ProcessObject& World::add_process_with_layout(
    kobj::ProcessObject proc, const kobj::TokenLayout& layout) {
  if (processes.count(proc.pid))
    throw SimError("duplicate pid " + std::to_string(proc.pid));
  proc.token_addr = layout.base_addr;
  token_layouts[layout.base_addr] = layout;
  auto [it, inserted] = processes.emplace(proc.pid, std::move(proc));
  (void)inserted;
  if (it->first >= next_pid_) next_pid_ = it->first + 1;
  return it->second;
}

kobj::FileObject& World::add_file(kobj::FileObject file) {
  if (files.count(file.path))
    throw SimError("duplicate file path " + file.path);
  auto [it, inserted] = files.emplace(file.path, std::move(file));
  (void)inserted;
  return it->second;
}

kobj::ProcessObject* World::find_process(const std::string& name) {
  for (auto& [pid, proc] : processes)
    if (proc.name == name) return &proc;
  return nullptr;
}

const kobj::ProcessObject* World::find_process(const std::string& name) const {
  for (const auto& [pid, proc] : processes)
    if (proc.name == name) return &proc;
  return nullptr;
}

kobj::ProcessObject* World::defender_process() {
  return find_process(ranger::kDefenderImageName);
}

kobj::FileObject* World::find_file(const std::string& path) {
  auto it = files.find(path);
  return it == files.end() ? nullptr : &it->second;
}

uint64_t World::place_token(const kobj::TokenImage& token) {
  // 16-byte aligned bump allocation inside the arena.
  uint64_t addr = (token_arena_cursor + 15) & ~15ull;
  uint64_t size = kobj::token_image_size(token);
  if (addr + size > token_arena_end)
    throw SimError("token arena exhausted at " + hex64(addr));
  token_arena_cursor = addr + size;
  return addr;
}

uint32_t World::next_pid() {
  while (processes.count(next_pid_)) ++next_pid_;
  return next_pid_++;
}

const kobj::TokenLayout& World::layout_of(uint64_t token_addr) const {
  auto it = token_layouts.find(token_addr);
  if (it == token_layouts.end())
    throw SimError("no token layout recorded at " + hex64(token_addr));
  return it->second;
}

kobj::TokenImage World::decode_token_at(uint64_t token_addr) const {
  return kobj::decode_token(layout_of(token_addr), memory);
}

void World::apply_pending_delete(kobj::FileObject& file) {
  if (!file.exists || !file.delete_pending || file.open_handles != 0) return;
  file.exists = false;
  log.append(kKernelActor, logkind::kFileRemoved, file.path);
  // The process that marked the file verifies the removal with one final
  // directory probe.
  if (auto* defender = defender_process(); defender && defender->running)
    probe_file(file, defender->name);
}

void World::close_handles(kobj::FileObject& file, uint32_t count,
                          const std::string& closer) {
  if (count == 0 || file.open_handles == 0) return;
  uint32_t closed = std::min(count, file.open_handles);
  file.open_handles -= closed;
  log.append(closer, logkind::kCloseFile,
             file.path + " handles_closed=" + std::to_string(closed) +
                 " remaining=" + std::to_string(file.open_handles));
  apply_pending_delete(file);
}

kobj::NtStatus World::probe_file(kobj::FileObject& file,
                                 const std::string& prober) {
  kobj::NtStatus status = kobj::NtStatus::Success;
  if (!file.exists)
    status = kobj::NtStatus::NameNotFound;
  else if (file.delete_pending)
    status = kobj::NtStatus::DeletePending;
  log.append(prober, logkind::kProbe, file.path, status);
  return status;
}

void World::on_violation(const mem::Violation& v) {
  ++violations_;
  std::string detail =
      std::string(v.kind == mem::AccessKind::Write ? "write" : "read") + " [" +
      hex64(v.addr) + ", +" + std::to_string(v.len) + ") disposition=" +
      (v.disposition == mem::Disposition::Faulted ? "Faulted" : "Skipped");
  log.append(v.actor.key(), logkind::kViolation, detail);
}

void World::on_emulated(const mem::ActorId& actor, uint64_t addr, uint64_t len,
                        mem::AccessKind kind) {
  std::string detail =
      std::string(kind == mem::AccessKind::Write ? "write" : "read") + " [" +
      hex64(addr) + ", +" + std::to_string(len) + ") emulated";
  log.append(actor.key(), logkind::kEmulate, detail);
}

}  // namespace sim
