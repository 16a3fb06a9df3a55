#include "sim/defender.hpp"

#include "sim/hex.hpp"
#include "sim/srm.hpp"

namespace sim::defender {

namespace {

const char* verdict_name(ScanVerdict v) {
  return v == ScanVerdict::Malware ? "malware" : "clean";
}

}  // namespace

ScanVerdict classify(uint64_t content_hash, const SignatureDb& db) {
  return db.count(content_hash) ? ScanVerdict::Malware : ScanVerdict::Clean;
}

std::vector<kobj::NtStatus> on_file_created(World& world,
                                            kobj::FileObject& file) {
  std::vector<kobj::NtStatus> statuses;
  kobj::ProcessObject* engine = world.defender_process();
  if (!engine || !engine->running) return statuses;

  // Open for read. The token is decoded fresh per check so raw patches to
  // its serialized bytes take effect immediately.
  kobj::TokenImage token = world.decode_token_at(engine->token_addr);
  srm::AccessDecision read_decision =
      srm::se_access_check(engine->token_addr, token, file.security,
                           kobj::access::kFileReadData, world.memory);
  world.log.append(engine->name, logkind::kFileReadCheck,
                   file.path + " desired=" +
                       hex32(kobj::access::kFileReadData.bits),
                   read_decision.status);
  statuses.push_back(read_decision.status);
  if (!read_decision.granted) return statuses;

  file.open_handles += 1;  // the engine's own scan handle

  ScanVerdict verdict = classify(file.content_hash, world.signature_db);
  world.log.append(engine->name, logkind::kVerdict,
                   "stage=file path=" + file.path + " hash=" +
                       hex64(file.content_hash) + " verdict=" +
                       verdict_name(verdict));

  if (verdict == ScanVerdict::Malware) {
    auto removal = remove_file(world, file, /*defender_holds_handle=*/true);
    statuses.insert(statuses.end(), removal.begin(), removal.end());
  } else {
    world.close_handles(file, 1, engine->name);
  }
  return statuses;
}

std::vector<kobj::NtStatus> remove_file(World& world, kobj::FileObject& file,
                                        bool defender_holds_handle) {
  std::vector<kobj::NtStatus> statuses;
  kobj::ProcessObject* engine = world.defender_process();
  if (!engine || !engine->running) return statuses;

  kobj::TokenImage token = world.decode_token_at(engine->token_addr);
  srm::AccessDecision delete_decision =
      srm::se_access_check(engine->token_addr, token, file.security,
                           kobj::access::kDelete, world.memory);
  world.log.append(engine->name, logkind::kFileDeleteCheck,
                   file.path + " desired=" + hex32(kobj::access::kDelete.bits),
                   delete_decision.status);

  if (!delete_decision.granted) {
    // Blinded: the mandatory layer stripped DELETE. The file stays, and so
    // does the engine's handle if it holds one.
    statuses.push_back(delete_decision.status);
    if (defender_holds_handle) world.close_handles(file, 1, engine->name);
    return statuses;
  }

  file.delete_pending = true;
  world.log.append(engine->name, logkind::kSetDisposition,
                   file.path + " delete=true");
  statuses.push_back(kobj::NtStatus::Success);

  if (file.open_handles == 0) {
    // No pending window: the file is gone at once; close_handles cannot
    // fire, so apply and verify here.
    file.exists = false;
    world.log.append(kKernelActor, logkind::kFileRemoved, file.path);
    statuses.push_back(world.probe_file(file, engine->name));
    return statuses;
  }

  statuses.push_back(world.probe_file(file, engine->name));  // DELETE_PENDING
  if (defender_holds_handle) {
    world.close_handles(file, 1, engine->name);
    if (!file.exists) {
      // Ours was the last handle; close_handles already logged the removal
      // and the verification probe. Mirror the probe status here.
      statuses.push_back(kobj::NtStatus::NameNotFound);
    }
  }
  return statuses;
}

kobj::NtStatus post_create_callback(World& world, kobj::ProcessObject& proc) {
  kobj::ProcessObject* engine = world.defender_process();
  if (!engine || !engine->running) return kobj::NtStatus::Success;

  kobj::TokenImage token = world.decode_token_at(engine->token_addr);
  srm::AccessDecision open_decision =
      srm::open_process(engine->token_addr, token, proc,
                        kobj::access::kProcessVmRead, world.memory);
  world.log.append(engine->name, logkind::kOpenProcessCheck,
                   proc.name + " pid=" + std::to_string(proc.pid) +
                       " desired=" + hex32(kobj::access::kProcessVmRead.bits),
                   open_decision.status);
  if (!open_decision.granted) {
    // Cannot inspect the process: no verdict, launch proceeds.
    return kobj::NtStatus::Success;
  }

  ScanVerdict verdict = classify(proc.image_hash, world.signature_db);
  world.log.append(engine->name, logkind::kVerdict,
                   "stage=process name=" + proc.name + " hash=" +
                       hex64(proc.image_hash) + " verdict=" +
                       verdict_name(verdict));
  if (verdict == ScanVerdict::Malware) {
    proc.running = false;  // launch cancelled
    return kobj::NtStatus::VirusInfected;
  }
  return kobj::NtStatus::Success;
}

}  // namespace sim::defender
