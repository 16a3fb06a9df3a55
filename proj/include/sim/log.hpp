#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sim/kobj.hpp"

namespace sim {

// Log entry kinds, kept as stable strings because serialized logs are
// diffed byte-for-byte across runs.
namespace logkind {
inline constexpr const char* kArm = "arm";
inline constexpr const char* kFileCreate = "file_create";
inline constexpr const char* kFileReadCheck = "file_read_check";
inline constexpr const char* kVerdict = "verdict";
inline constexpr const char* kFileDeleteCheck = "file_delete_check";
inline constexpr const char* kSetDisposition = "set_disposition";
inline constexpr const char* kProbe = "probe";
inline constexpr const char* kCloseFile = "close_file";
inline constexpr const char* kFileRemoved = "file_removed";
inline constexpr const char* kDriverLoad = "driver_load";
inline constexpr const char* kDriverRun = "driver_run";
inline constexpr const char* kViolation = "violation";
inline constexpr const char* kEmulate = "emulate";
inline constexpr const char* kOpenProcessCheck = "open_process_check";
inline constexpr const char* kLaunch = "launch";
inline constexpr const char* kLaunchResult = "launch_result";
inline constexpr const char* kSyscall = "syscall";
}  // namespace logkind

struct LogEntry {
  uint64_t seq = 0;
  std::string actor;
  std::string kind;
  std::string detail;
  uint32_t status = 0;
};

// Append-only run record. Serialization is line-delimited JSON with a fixed
// key order; two runs of the same scenario must serialize identically.
class EventLog {
 public:
  const LogEntry& append(std::string actor, std::string kind,
                         std::string detail,
                         kobj::NtStatus status = kobj::NtStatus::Success);

  const std::vector<LogEntry>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }

  size_t count_kind(const std::string& kind) const;
  const LogEntry* last_of_kind(const std::string& kind) const;
  std::vector<const LogEntry*> all_of_kind(const std::string& kind) const;

  std::string to_jsonl() const;

  // When set, every appended entry is echoed to stderr as it happens.
  void set_echo(bool echo) { echo_ = echo; }

 private:
  std::vector<LogEntry> entries_;
  bool echo_ = false;
};

std::string log_entry_to_json(const LogEntry& entry);

}  // namespace sim
