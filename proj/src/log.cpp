#include "sim/log.hpp"

#include <iostream>

#include "json.hpp"

#include "sim/hex.hpp"

namespace sim {

const LogEntry& EventLog::append(std::string actor, std::string kind,
                                 std::string detail, kobj::NtStatus status) {
  LogEntry entry;
  entry.seq = entries_.size() + 1;
  entry.actor = std::move(actor);
  entry.kind = std::move(kind);
  entry.detail = std::move(detail);
  entry.status = kobj::status_code(status);
  entries_.push_back(std::move(entry));
  if (echo_) std::cerr << log_entry_to_json(entries_.back()) << "\n";
  return entries_.back();
}

size_t EventLog::count_kind(const std::string& kind) const {
  size_t n = 0;
  for (const auto& e : entries_)
    if (e.kind == kind) ++n;
  return n;
}

const LogEntry* EventLog::last_of_kind(const std::string& kind) const {
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it)
    if (it->kind == kind) return &*it;
  return nullptr;
}

std::vector<const LogEntry*> EventLog::all_of_kind(const std::string& kind) const {
  std::vector<const LogEntry*> out;
  for (const auto& e : entries_)
    if (e.kind == kind) out.push_back(&e);
  return out;
}

std::string log_entry_to_json(const LogEntry& entry) {
  nlohmann::ordered_json j;
  j["seq"] = entry.seq;
  j["actor"] = entry.actor;
  j["kind"] = entry.kind;
  j["detail"] = entry.detail;
  j["status"] = hex32(entry.status);
  return j.dump();
}

std::string EventLog::to_jsonl() const {
  std::string out;
  for (const auto& e : entries_) {
    out += log_entry_to_json(e);
    out += "\n";
  }
  return out;
}

}  // namespace sim
