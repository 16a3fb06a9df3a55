#pragma once

#include <vector>

#include "sim/world.hpp"

namespace sim::defender {

enum class ScanVerdict { Clean, Malware };

// Pure verdict function: content hash against the signature database.
// Enforcement may be blinded by token patches; the verdict never is.
ScanVerdict classify(uint64_t content_hash, const SignatureDb& db);

// Stage I, file creation: the engine opens the new file for read (full
// access check), hashes it, and — on a malware verdict — drives the removal
// flow below. Returns the statuses of the file operations performed, in
// order. No-op when no engine process is running.
std::vector<kobj::NtStatus> on_file_created(World& world,
                                            kobj::FileObject& file);

// Removal flow: request DELETE via the access check; when granted, set the
// delete disposition and verify with directory probes — DELETE_PENDING
// while handles remain open, NAME_NOT_FOUND once the last one closes.
// `defender_holds_handle` says whether one of file.open_handles belongs to
// the engine's own scan and should be closed here. A denied DELETE returns
// just the denial status and leaves the file untouched.
std::vector<kobj::NtStatus> remove_file(World& world, kobj::FileObject& file,
                                        bool defender_holds_handle = false);

// Stage II, process launch: the engine opens the new process for memory
// reading. If the open succeeds and the image hash is known malware, the
// launch is cancelled (VIRUS_INFECTED). If the open is denied, no verdict
// is possible and the launch proceeds. Emits only SUCCESS or
// VIRUS_INFECTED.
kobj::NtStatus post_create_callback(World& world, kobj::ProcessObject& proc);

}  // namespace sim::defender
