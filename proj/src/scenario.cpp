#include "sim/scenario.hpp"

#include <chrono>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

#include "json.hpp"

#include "sim/defender.hpp"
#include "sim/error.hpp"
#include "sim/hex.hpp"
#include "sim/srm.hpp"

namespace sim::scenario {

using nlohmann::json;
using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& message) {
  throw SimError(where + ": " + message);
}

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& where) {
  if (!obj.is_object()) fail(where, "expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key())) fail(where, "unknown key \"" + it.key() + "\"");
}

const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(where, std::string("missing key \"") + key + "\"");
  return *it;
}

std::string require_string(const json& obj, const char* key,
                           const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_string()) fail(where + "." + key, "expected a string");
  return v.get<std::string>();
}

uint64_t require_hex(const json& obj, const char* key, const std::string& where) {
  return parse_u64(require_string(obj, key, where), where + "." + key);
}

uint64_t require_number(const json& obj, const char* key,
                        const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_number_unsigned()) fail(where + "." + key, "expected a non-negative number");
  return v.get<uint64_t>();
}

bool optional_bool(const json& obj, const char* key, bool fallback,
                   const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_boolean()) fail(where + "." + key, "expected a boolean");
  return it->get<bool>();
}

MemoryRegionSpec parse_region(const json& j, const std::string& where) {
  check_keys(j, {"addr", "len", "label"}, where);
  MemoryRegionSpec region;
  region.addr = require_hex(j, "addr", where);
  region.len = require_hex(j, "len", where);
  if (region.len == 0) fail(where, "zero-length region");
  region.label = j.count("label") ? require_string(j, "label", where) : "";
  return region;
}

std::vector<kobj::Ace> parse_dacl(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array of ACEs");
  std::vector<kobj::Ace> dacl;
  for (size_t i = 0; i < j.size(); ++i) {
    const std::string ace_where = where + "[" + std::to_string(i) + "]";
    const json& a = j[i];
    check_keys(a, {"kind", "sid", "mask"}, ace_where);
    kobj::Ace ace;
    std::string kind = require_string(a, "kind", ace_where);
    if (kind == "allow") ace.kind = kobj::AceKind::Allow;
    else if (kind == "deny") ace.kind = kobj::AceKind::Deny;
    else fail(ace_where + ".kind", "expected \"allow\" or \"deny\"");
    ace.sid = kobj::parse_sid(require_string(a, "sid", ace_where));
    ace.mask = kobj::AccessMask{
        static_cast<uint32_t>(require_hex(a, "mask", ace_where))};
    dacl.push_back(std::move(ace));
  }
  return dacl;
}

ProcessSpec parse_process(const json& j, const std::string& where) {
  check_keys(j,
             {"pid", "name", "image_path", "protection", "il", "token", "dacl"},
             where);
  ProcessSpec spec;
  uint64_t pid = require_number(j, "pid", where);
  if (pid == 0 || pid > 0xFFFFFFFFull) fail(where + ".pid", "out of range");
  spec.pid = static_cast<uint32_t>(pid);
  spec.name = require_string(j, "name", where);
  if (spec.name.empty()) fail(where + ".name", "empty process name");
  if (j.count("image_path")) spec.image_path = require_string(j, "image_path", where);
  if (j.count("protection"))
    spec.protection = kobj::parse_protection(require_string(j, "protection", where));
  spec.object_il = kobj::parse_integrity_level(require_string(j, "il", where));
  if (j.count("dacl")) spec.dacl = parse_dacl(j.at("dacl"), where + ".dacl");

  const json& t = require(j, "token", where);
  const std::string token_where = where + ".token";
  check_keys(t,
             {"addr", "user", "groups", "integrity_level_index", "privileges"},
             token_where);
  spec.token_addr = require_hex(t, "addr", token_where);

  kobj::Sid user = kobj::parse_sid(require_string(t, "user", token_where));
  std::vector<kobj::GroupEntry> groups;
  const json& groups_json = require(t, "groups", token_where);
  if (!groups_json.is_array()) fail(token_where + ".groups", "expected an array");
  for (size_t i = 0; i < groups_json.size(); ++i) {
    const std::string g_where =
        token_where + ".groups[" + std::to_string(i) + "]";
    const json& g = groups_json[i];
    check_keys(g, {"sid", "attributes"}, g_where);
    kobj::GroupEntry entry;
    entry.sid = kobj::parse_sid(require_string(g, "sid", g_where));
    if (g.count("attributes")) entry.attributes = require_hex(g, "attributes", g_where);
    groups.push_back(std::move(entry));
  }

  const json& idx = require(t, "integrity_level_index", token_where);
  uint32_t index;
  if (idx.is_string())
    index = static_cast<uint32_t>(
        parse_u64(idx.get<std::string>(), token_where + ".integrity_level_index"));
  else if (idx.is_number_unsigned())
    index = static_cast<uint32_t>(idx.get<uint64_t>());
  else
    fail(token_where + ".integrity_level_index", "expected a number or hex string");

  const json& p = require(t, "privileges", token_where);
  const std::string p_where = token_where + ".privileges";
  check_keys(p, {"present", "enabled", "enabled_by_default"}, p_where);
  kobj::PrivilegeSet privileges;
  privileges.present = require_hex(p, "present", p_where);
  privileges.enabled = require_hex(p, "enabled", p_where);
  privileges.enabled_by_default = require_hex(p, "enabled_by_default", p_where);

  try {
    spec.token = kobj::TokenImage::make_valid(std::move(user), std::move(groups),
                                              index, privileges);
  } catch (const SimError& e) {
    fail(token_where, e.what());
  }
  return spec;
}

attack::Step parse_step(const json& j, const std::string& where) {
  std::string op = require_string(j, "op", where);
  if (op == "find_process_token") {
    check_keys(j, {"op", "process", "out"}, where);
    return attack::FindProcessToken{require_string(j, "process", where),
                                    require_string(j, "out", where)};
  }
  if (op == "write_mem") {
    check_keys(j, {"op", "base", "offset", "bytes"}, where);
    attack::WriteMem step;
    step.base = require_string(j, "base", where);
    step.offset = require_hex(j, "offset", where);
    step.bytes = parse_byte_string(require_string(j, "bytes", where),
                                   where + ".bytes");
    return step;
  }
  if (op == "read_mem") {
    check_keys(j, {"op", "base", "offset", "len", "out"}, where);
    attack::ReadMem step;
    step.base = require_string(j, "base", where);
    step.offset = require_hex(j, "offset", where);
    step.len = require_number(j, "len", where);
    step.out = require_string(j, "out", where);
    return step;
  }
  if (op == "clear_bit") {
    check_keys(j, {"op", "base", "offset", "bit"}, where);
    attack::ClearBit step;
    step.base = require_string(j, "base", where);
    step.offset = require_hex(j, "offset", where);
    step.bit = static_cast<uint32_t>(require_number(j, "bit", where));
    return step;
  }
  fail(where + ".op", "unknown step kind \"" + op + "\"");
}

Event parse_event(const json& j, const std::string& where) {
  std::string kind = require_string(j, "event", where);
  if (kind == "create_file") {
    check_keys(j, {"event", "path", "content", "il", "open_handles"}, where);
    CreateFileEvent ev;
    ev.path = require_string(j, "path", where);
    ev.content = require_string(j, "content", where);
    ev.il = kobj::parse_integrity_level(require_string(j, "il", where));
    if (j.count("open_handles"))
      ev.open_handles = static_cast<uint32_t>(require_number(j, "open_handles", where));
    return ev;
  }
  if (kind == "load_driver") {
    check_keys(j, {"event", "name"}, where);
    return LoadDriverEvent{require_string(j, "name", where)};
  }
  if (kind == "run_driver") {
    check_keys(j, {"event", "name"}, where);
    return RunDriverEvent{require_string(j, "name", where)};
  }
  if (kind == "syscall") {
    std::string call = require_string(j, "call", where);
    if (call == "set_token_information") {
      check_keys(j, {"event", "call", "caller", "target", "new_level"}, where);
      SetTokenInformationEvent ev;
      ev.caller = require_string(j, "caller", where);
      ev.target = require_string(j, "target", where);
      ev.new_level = kobj::parse_integrity_level(require_string(j, "new_level", where));
      return ev;
    }
    if (call == "adjust_token_privileges") {
      check_keys(j, {"event", "call", "caller", "target", "disable_mask"}, where);
      AdjustTokenPrivilegesEvent ev;
      ev.caller = require_string(j, "caller", where);
      ev.target = require_string(j, "target", where);
      ev.disable_mask = require_hex(j, "disable_mask", where);
      return ev;
    }
    fail(where + ".call", "unknown syscall \"" + call + "\"");
  }
  if (kind == "launch_process") {
    check_keys(j, {"event", "image_path"}, where);
    return LaunchProcessEvent{require_string(j, "image_path", where)};
  }
  if (kind == "close_handles") {
    check_keys(j, {"event", "path"}, where);
    return CloseHandlesEvent{require_string(j, "path", where)};
  }
  fail(where + ".event", "unknown event kind \"" + kind + "\"");
}

ExpectSpec parse_expect(const json& j, const std::string& where) {
  check_keys(j,
             {"malware_file_exists", "malware_process_running",
              "defender_running", "min_violations", "launch_status",
              "delete_status", "final_integrity_index", "syscall_statuses"},
             where);
  ExpectSpec expect;
  if (j.count("malware_file_exists"))
    expect.malware_file_exists = optional_bool(j, "malware_file_exists", false, where);
  if (j.count("malware_process_running"))
    expect.malware_process_running =
        optional_bool(j, "malware_process_running", false, where);
  if (j.count("defender_running"))
    expect.defender_running = optional_bool(j, "defender_running", false, where);
  if (j.count("min_violations"))
    expect.min_violations = require_number(j, "min_violations", where);
  if (j.count("launch_status"))
    expect.launch_status = static_cast<uint32_t>(require_hex(j, "launch_status", where));
  if (j.count("delete_status"))
    expect.delete_status = static_cast<uint32_t>(require_hex(j, "delete_status", where));
  if (j.count("final_integrity_index"))
    expect.final_integrity_index =
        static_cast<uint32_t>(require_hex(j, "final_integrity_index", where));
  if (j.count("syscall_statuses")) {
    const json& arr = j.at("syscall_statuses");
    if (!arr.is_array()) fail(where + ".syscall_statuses", "expected an array");
    std::vector<uint32_t> statuses;
    for (size_t i = 0; i < arr.size(); ++i) {
      if (!arr[i].is_string())
        fail(where + ".syscall_statuses[" + std::to_string(i) + "]",
             "expected a hex string");
      statuses.push_back(static_cast<uint32_t>(parse_u64(
          arr[i].get<std::string>(),
          where + ".syscall_statuses[" + std::to_string(i) + "]")));
    }
    expect.syscall_statuses = std::move(statuses);
  }
  return expect;
}

// Cross-references that can be checked without running anything.
void validate_static(const Scenario& scenario, const std::string& source) {
  std::set<std::string> driver_names;
  for (const auto& d : scenario.drivers) {
    if (d.driver.empty()) fail(source, "driver with empty name");
    if (!driver_names.insert(d.driver).second)
      fail(source, "duplicate driver name \"" + d.driver + "\"");
  }
  std::set<uint32_t> pids;
  std::set<std::string> process_names;
  for (const auto& p : scenario.processes) {
    if (!pids.insert(p.pid).second)
      fail(source, "duplicate pid " + std::to_string(p.pid));
    process_names.insert(p.name);
  }
  for (const auto& d : scenario.drivers)
    for (size_t i = 0; i < d.steps.size(); ++i)
      if (const auto* find =
              std::get_if<attack::FindProcessToken>(&d.steps[i]))
        if (!process_names.count(find->process))
          fail(source, "driver \"" + d.driver + "\" step " + std::to_string(i) +
                           ": unknown process \"" + find->process + "\"");

  std::set<std::string> loaded, created;
  size_t index = 0;
  for (const auto& event : scenario.timeline) {
    const std::string where = source + ".timeline[" + std::to_string(index++) + "]";
    if (const auto* load = std::get_if<LoadDriverEvent>(&event)) {
      if (!driver_names.count(load->name))
        fail(where, "unknown driver \"" + load->name + "\"");
      if (!loaded.insert(load->name).second)
        fail(where, "driver \"" + load->name + "\" loaded twice");
    } else if (const auto* runev = std::get_if<RunDriverEvent>(&event)) {
      if (!driver_names.count(runev->name))
        fail(where, "unknown driver \"" + runev->name + "\"");
      if (!loaded.count(runev->name))
        fail(where, "driver \"" + runev->name + "\" runs before it is loaded");
    } else if (const auto* create = std::get_if<CreateFileEvent>(&event)) {
      if (!created.insert(create->path).second)
        fail(where, "file \"" + create->path + "\" created twice");
    } else if (const auto* launch = std::get_if<LaunchProcessEvent>(&event)) {
      if (!created.count(launch->image_path))
        fail(where, "launch references \"" + launch->image_path +
                        "\", which no create_file event produced");
    } else if (const auto* close = std::get_if<CloseHandlesEvent>(&event)) {
      if (!created.count(close->path))
        fail(where, "close_handles references \"" + close->path +
                        "\", which no create_file event produced");
    } else if (const auto* sti = std::get_if<SetTokenInformationEvent>(&event)) {
      if (!process_names.count(sti->caller))
        fail(where, "unknown caller \"" + sti->caller + "\"");
      if (!process_names.count(sti->target))
        fail(where, "unknown target \"" + sti->target + "\"");
    } else if (const auto* atp = std::get_if<AdjustTokenPrivilegesEvent>(&event)) {
      if (!process_names.count(atp->caller))
        fail(where, "unknown caller \"" + atp->caller + "\"");
      if (!process_names.count(atp->target))
        fail(where, "unknown target \"" + atp->target + "\"");
    }
  }
}

}  // namespace

Scenario parse_scenario(const std::string& json_text,
                        const std::string& source_name) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(source_name, std::string("invalid JSON: ") + e.what());
  }

  const std::string where = source_name;
  check_keys(root,
             {"name", "memory", "token_arena", "processes", "signature_db",
              "trust_labels", "ranger", "drivers", "timeline", "expect"},
             where);

  Scenario scenario;
  scenario.name = require_string(root, "name", where);
  if (scenario.name.empty()) fail(where + ".name", "empty scenario name");

  if (root.count("memory")) {
    const json& arr = root.at("memory");
    if (!arr.is_array()) fail(where + ".memory", "expected an array");
    for (size_t i = 0; i < arr.size(); ++i)
      scenario.memory.push_back(
          parse_region(arr[i], where + ".memory[" + std::to_string(i) + "]"));
  }
  if (root.count("token_arena"))
    scenario.token_arena =
        parse_region(root.at("token_arena"), where + ".token_arena");

  const json& procs = require(root, "processes", where);
  if (!procs.is_array()) fail(where + ".processes", "expected an array");
  for (size_t i = 0; i < procs.size(); ++i)
    scenario.processes.push_back(
        parse_process(procs[i], where + ".processes[" + std::to_string(i) + "]"));

  if (root.count("signature_db")) {
    const json& arr = root.at("signature_db");
    if (!arr.is_array()) fail(where + ".signature_db", "expected an array");
    for (size_t i = 0; i < arr.size(); ++i) {
      if (!arr[i].is_string())
        fail(where + ".signature_db[" + std::to_string(i) + "]",
             "expected a hex hash string");
      scenario.signature_db.insert(parse_u64(
          arr[i].get<std::string>(),
          where + ".signature_db[" + std::to_string(i) + "]"));
    }
  }

  scenario.trust_labels = optional_bool(root, "trust_labels", false, where);

  if (root.count("ranger")) {
    const json& r = root.at("ranger");
    const std::string r_where = where + ".ranger";
    check_keys(r, {"armed", "policy", "extra_regions", "protect_whole_token"},
               r_where);
    scenario.ranger.armed = optional_bool(r, "armed", false, r_where);
    if (r.count("policy"))
      scenario.ranger.policy =
          ranger::parse_violation_policy(require_string(r, "policy", r_where));
    scenario.ranger.protect_whole_token =
        optional_bool(r, "protect_whole_token", false, r_where);
    if (r.count("extra_regions")) {
      const json& arr = r.at("extra_regions");
      if (!arr.is_array()) fail(r_where + ".extra_regions", "expected an array");
      for (size_t i = 0; i < arr.size(); ++i)
        scenario.ranger.extra_regions.push_back(parse_region(
            arr[i], r_where + ".extra_regions[" + std::to_string(i) + "]"));
    }
  }

  if (root.count("drivers")) {
    const json& arr = root.at("drivers");
    if (!arr.is_array()) fail(where + ".drivers", "expected an array");
    for (size_t i = 0; i < arr.size(); ++i) {
      const std::string d_where = where + ".drivers[" + std::to_string(i) + "]";
      const json& d = arr[i];
      check_keys(d, {"name", "program"}, d_where);
      attack::DriverProgram program;
      program.driver = require_string(d, "name", d_where);
      const json& steps = require(d, "program", d_where);
      if (!steps.is_array()) fail(d_where + ".program", "expected an array");
      for (size_t s = 0; s < steps.size(); ++s)
        program.steps.push_back(parse_step(
            steps[s], d_where + ".program[" + std::to_string(s) + "]"));
      scenario.drivers.push_back(std::move(program));
    }
  }

  const json& timeline = require(root, "timeline", where);
  if (!timeline.is_array()) fail(where + ".timeline", "expected an array");
  for (size_t i = 0; i < timeline.size(); ++i)
    scenario.timeline.push_back(
        parse_event(timeline[i], where + ".timeline[" + std::to_string(i) + "]"));

  if (root.count("expect"))
    scenario.expect = parse_expect(root.at("expect"), where + ".expect");

  validate_static(scenario, source_name);
  return scenario;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SimError("cannot open scenario file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path);
}

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

namespace {

std::string image_basename(const std::string& path) {
  size_t pos = path.find_last_of("\\/");
  return pos == std::string::npos ? path : path.substr(pos + 1);
}

// Token handed to processes launched mid-run: an ordinary user at the
// file's integrity level, no privileges.
kobj::TokenImage make_launched_token(kobj::IntegrityLevel il) {
  std::vector<kobj::GroupEntry> groups;
  groups.push_back(kobj::GroupEntry{kobj::everyone_sid(), 0});
  groups.push_back(kobj::GroupEntry{kobj::integrity_sid(il), 0x20});
  return kobj::TokenImage::make_valid(kobj::Sid{kobj::kNtAuthority, {21, 1000}},
                                      std::move(groups), 1, kobj::PrivilegeSet{});
}

void resolve_process(World& world, const std::string& name,
                     kobj::ProcessObject*& out, const std::string& what) {
  out = world.find_process(name);
  if (!out) throw SimError(what + ": no process named \"" + name + "\"");
}

}  // namespace

RunReport run(const Scenario& scenario, EventLog& log) {
  World world(log);

  if (scenario.token_arena) {
    world.token_arena_cursor = scenario.token_arena->addr;
    world.token_arena_end = scenario.token_arena->addr + scenario.token_arena->len;
  }
  for (const auto& region : scenario.memory)
    world.memory.map_region(region.addr, region.len);

  world.signature_db = scenario.signature_db;
  world.trust_labels.enforced = scenario.trust_labels;

  for (const auto& spec : scenario.processes) {
    kobj::ProcessObject proc;
    proc.pid = spec.pid;
    proc.name = spec.name;
    proc.image_path = spec.image_path;
    proc.protection = spec.protection;
    proc.security = kobj::make_process_security(spec.object_il, spec.dacl);
    world.add_process(std::move(proc), spec.token, spec.token_addr);
  }

  world.monitor.set_policy(scenario.ranger.policy);
  for (const auto& region : scenario.ranger.extra_regions)
    world.monitor.add_region(
        ranger::ProtectedRegion{region.addr, region.len, region.label});
  if (scenario.ranger.armed) {
    uint64_t token_addr = ranger::locate_defender_token(world.processes);
    world.monitor.protect_token(world.layout_of(token_addr),
                                scenario.ranger.protect_whole_token);
    world.monitor.arm(true);
    log.append(kKernelActor, logkind::kArm,
               "monitor armed policy=" +
                   ranger::violation_policy_name(scenario.ranger.policy) +
                   " regions=" + std::to_string(world.monitor.regions().size()));
  }

  for (const auto& event : scenario.timeline) {
    if (const auto* create = std::get_if<CreateFileEvent>(&event)) {
      kobj::FileObject file;
      file.path = create->path;
      file.content_hash = kobj::hash_content(create->content);
      file.security = kobj::make_file_security(create->il);
      file.open_handles = create->open_handles;
      kobj::FileObject& ref = world.add_file(std::move(file));
      log.append(kKernelActor, logkind::kFileCreate,
                 ref.path + " il=" + kobj::integrity_level_name(create->il) +
                     " hash=" + hex64(ref.content_hash) +
                     " handles=" + std::to_string(ref.open_handles));
      defender::on_file_created(world, ref);
    } else if (const auto* load = std::get_if<LoadDriverEvent>(&event)) {
      world.monitor.on_driver_load(mem::ActorId::driver(load->name));
      log.append(kKernelActor, logkind::kDriverLoad, load->name);
    } else if (const auto* runev = std::get_if<RunDriverEvent>(&event)) {
      const attack::DriverProgram* program = nullptr;
      for (const auto& d : scenario.drivers)
        if (d.driver == runev->name) program = &d;
      if (!program) throw SimError("run_driver: unknown driver " + runev->name);
      if (!world.monitor.enclave_of(mem::ActorId::driver(runev->name)))
        throw SimError("run_driver: driver " + runev->name + " was never loaded");
      log.append("driver:" + runev->name, logkind::kDriverRun,
                 "steps=" + std::to_string(program->steps.size()));
      attack::run_driver(world, *program);
    } else if (const auto* sti = std::get_if<SetTokenInformationEvent>(&event)) {
      kobj::ProcessObject *caller, *target;
      resolve_process(world, sti->caller, caller, "set_token_information");
      resolve_process(world, sti->target, target, "set_token_information");
      attack::set_token_information(world, *caller, *target, sti->new_level);
    } else if (const auto* atp = std::get_if<AdjustTokenPrivilegesEvent>(&event)) {
      kobj::ProcessObject *caller, *target;
      resolve_process(world, atp->caller, caller, "adjust_token_privileges");
      resolve_process(world, atp->target, target, "adjust_token_privileges");
      attack::adjust_token_privileges(world, *caller, *target, atp->disable_mask);
    } else if (const auto* launch = std::get_if<LaunchProcessEvent>(&event)) {
      log.append(kKernelActor, logkind::kLaunch, launch->image_path);
      kobj::FileObject* file = world.find_file(launch->image_path);
      if (!file || !file->exists) {
        log.append(kKernelActor, logkind::kLaunchResult,
                   launch->image_path + " no_such_file",
                   kobj::NtStatus::NameNotFound);
        continue;
      }
      kobj::IntegrityLevel il = file->security.object_il;
      kobj::TokenImage token = make_launched_token(il);
      uint64_t token_addr = world.place_token(token);
      kobj::ProcessObject proc;
      proc.pid = world.next_pid();
      proc.name = image_basename(launch->image_path);
      proc.image_path = launch->image_path;
      proc.image_hash = file->content_hash;
      proc.security = kobj::make_process_security(il);
      kobj::ProcessObject& ref = world.add_process(std::move(proc), token, token_addr);
      kobj::NtStatus status = defender::post_create_callback(world, ref);
      log.append(kKernelActor, logkind::kLaunchResult,
                 launch->image_path + " pid=" + std::to_string(ref.pid) +
                     " running=" + (ref.running ? "true" : "false"),
                 status);
    } else if (const auto* close = std::get_if<CloseHandlesEvent>(&event)) {
      kobj::FileObject* file = world.find_file(close->path);
      if (!file) throw SimError("close_handles: unknown file " + close->path);
      world.close_handles(*file, file->open_handles, kKernelActor);
    }
  }

  RunReport report;
  report.scenario = scenario.name;
  for (const auto& [path, file] : world.files)
    if (world.signature_db.count(file.content_hash) && file.exists)
      report.malware_file_exists = true;
  for (const auto& [pid, proc] : world.processes)
    if (world.signature_db.count(proc.image_hash) && proc.running)
      report.malware_process_running = true;
  if (kobj::ProcessObject* engine = world.defender_process()) {
    report.defender_running = engine->running;
    report.final_token_addr = engine->token_addr;
    report.final_token = world.decode_token_at(engine->token_addr);
  }
  report.violations = world.violation_count();
  return report;
}

// ---------------------------------------------------------------------------
// Expectations
// ---------------------------------------------------------------------------

namespace {

std::string bool_name(bool v) { return v ? "true" : "false"; }

}  // namespace

std::vector<std::string> evaluate_expect(const Scenario& scenario,
                                         const RunReport& report,
                                         const EventLog& log) {
  std::vector<std::string> failures;
  if (!scenario.expect) return failures;
  const ExpectSpec& expect = *scenario.expect;

  auto check_bool = [&](const char* field, std::optional<bool> want, bool got) {
    if (want && *want != got)
      failures.push_back(std::string(field) + ": expected " + bool_name(*want) +
                         ", got " + bool_name(got));
  };
  check_bool("malware_file_exists", expect.malware_file_exists,
             report.malware_file_exists);
  check_bool("malware_process_running", expect.malware_process_running,
             report.malware_process_running);
  check_bool("defender_running", expect.defender_running, report.defender_running);

  if (expect.min_violations && report.violations < *expect.min_violations)
    failures.push_back("min_violations: expected at least " +
                       std::to_string(*expect.min_violations) + ", got " +
                       std::to_string(report.violations));

  if (expect.launch_status) {
    const LogEntry* entry = log.last_of_kind(logkind::kLaunchResult);
    if (!entry)
      failures.push_back("launch_status: no launch happened");
    else if (entry->status != *expect.launch_status)
      failures.push_back("launch_status: expected " + hex32(*expect.launch_status) +
                         ", got " + hex32(entry->status));
  }
  if (expect.delete_status) {
    const LogEntry* entry = log.last_of_kind(logkind::kFileDeleteCheck);
    if (!entry)
      failures.push_back("delete_status: no delete was attempted");
    else if (entry->status != *expect.delete_status)
      failures.push_back("delete_status: expected " + hex32(*expect.delete_status) +
                         ", got " + hex32(entry->status));
  }
  if (expect.final_integrity_index &&
      report.final_token.integrity_level_index != *expect.final_integrity_index)
    failures.push_back(
        "final_integrity_index: expected " + hex32(*expect.final_integrity_index) +
        ", got " + hex32(report.final_token.integrity_level_index));

  if (expect.syscall_statuses) {
    auto entries = log.all_of_kind(logkind::kSyscall);
    if (entries.size() != expect.syscall_statuses->size()) {
      failures.push_back("syscall_statuses: expected " +
                         std::to_string(expect.syscall_statuses->size()) +
                         " syscalls, got " + std::to_string(entries.size()));
    } else {
      for (size_t i = 0; i < entries.size(); ++i)
        if (entries[i]->status != (*expect.syscall_statuses)[i])
          failures.push_back("syscall_statuses[" + std::to_string(i) +
                             "]: expected " + hex32((*expect.syscall_statuses)[i]) +
                             ", got " + hex32(entries[i]->status));
    }
  }
  return failures;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

namespace {

ordered_json token_to_json(const kobj::TokenImage& token) {
  ordered_json t;
  t["user"] = token.user ? kobj::format_sid(*token.user) : "null";
  ordered_json groups = ordered_json::array();
  for (const auto& g : token.groups) {
    ordered_json entry;
    entry["sid"] = g.sid ? kobj::format_sid(*g.sid) : "null";
    entry["attributes"] = hex64(g.attributes);
    groups.push_back(std::move(entry));
  }
  t["groups"] = std::move(groups);
  t["integrity_level_index"] = hex32(token.integrity_level_index);
  ordered_json privileges;
  privileges["present"] = hex64(token.privileges.present);
  privileges["enabled"] = hex64(token.privileges.enabled);
  privileges["enabled_by_default"] = hex64(token.privileges.enabled_by_default);
  t["privileges"] = std::move(privileges);
  return t;
}

}  // namespace

std::string run_report_to_json(const RunReport& report) {
  ordered_json j;
  j["scenario"] = report.scenario;
  j["malware_file_exists"] = report.malware_file_exists;
  j["malware_process_running"] = report.malware_process_running;
  j["defender_running"] = report.defender_running;
  j["violations"] = report.violations;
  j["final_token_addr"] = hex64(report.final_token_addr);
  j["final_token"] = token_to_json(report.final_token);
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Benchmark
// ---------------------------------------------------------------------------

namespace {

constexpr uint64_t kBenchScratchBase = 0x400000;
constexpr uint64_t kBenchScratchPages = 16;

struct BenchWorld {
  EventLog log;
  std::unique_ptr<World> world;
  mem::ActorId actor = mem::ActorId::driver("bench.sys");
};

std::unique_ptr<BenchWorld> make_bench_world(bool armed) {
  auto bw = std::make_unique<BenchWorld>();
  bw->world = std::make_unique<World>(bw->log);
  World& world = *bw->world;
  world.memory.map_region(kBenchScratchBase,
                          kBenchScratchPages * mem::kPageSize);

  std::vector<kobj::GroupEntry> groups;
  groups.push_back(kobj::GroupEntry{kobj::local_system_sid(), 0});
  groups.push_back(kobj::GroupEntry{kobj::everyone_sid(), 0});
  groups.push_back(
      kobj::GroupEntry{kobj::integrity_sid(kobj::IntegrityLevel::System), 0x20});
  kobj::PrivilegeSet privileges;
  privileges.present = privileges.enabled = privileges.enabled_by_default =
      kobj::privilege_mask(kobj::kSeDebugPrivilegeBit);
  kobj::TokenImage token = kobj::TokenImage::make_valid(
      kobj::local_system_sid(), std::move(groups), 2, privileges);

  kobj::ProcessObject proc;
  proc.pid = 2824;
  proc.name = ranger::kDefenderImageName;
  proc.protection = kobj::Protection::PplAntimalwareLight;
  proc.security = kobj::make_process_security(kobj::IntegrityLevel::System);
  world.add_process(std::move(proc), token, 0x10000);

  if (armed) {
    uint64_t token_addr = ranger::locate_defender_token(world.processes);
    world.monitor.protect_token(world.layout_of(token_addr));
    world.monitor.arm(true);
  }
  world.monitor.on_driver_load(bw->actor);
  return bw;
}

double run_bench_loop(BenchWorld& bw, uint64_t iterations) {
  World& world = *bw.world;
  std::vector<uint8_t> payload(8, 0xA5);
  const uint64_t span = kBenchScratchPages * mem::kPageSize - 8;
  auto start = std::chrono::steady_clock::now();
  for (uint64_t i = 0; i < iterations; ++i) {
    uint64_t addr = kBenchScratchBase + (i * 8) % span;
    world.bus.actor_write(bw.actor, addr, payload);
    volatile uint8_t sink = world.bus.actor_read(bw.actor, addr, 8).bytes[0];
    (void)sink;
  }
  auto end = std::chrono::steady_clock::now();
  return static_cast<double>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(end - start).count());
}

}  // namespace

BenchReport run_bench(const BenchConfig& config) {
  BenchReport report;
  report.iterations = config.iterations;

  auto disarmed = make_bench_world(false);
  report.disarmed_ns = run_bench_loop(*disarmed, config.iterations);
  report.ops_disarmed =
      disarmed->world->bus.read_ops() + disarmed->world->bus.write_ops();
  report.traps_disarmed = disarmed->world->monitor.arbitration_count();
  report.violations_disarmed = disarmed->world->violation_count();

  auto armed = make_bench_world(true);
  report.armed_ns = run_bench_loop(*armed, config.iterations);
  report.ops_armed = armed->world->bus.read_ops() + armed->world->bus.write_ops();
  report.traps_armed = armed->world->monitor.arbitration_count();
  report.violations_armed = armed->world->violation_count();

  report.ratio =
      report.disarmed_ns > 0 ? report.armed_ns / report.disarmed_ns : 0.0;
  return report;
}

std::string bench_report_to_json(const BenchReport& report) {
  ordered_json j;
  j["note"] =
      "wall-clock cost of this simulator's interposition layer; "
      "not a hardware or hypervisor overhead measurement";
  j["iterations"] = report.iterations;
  j["ops_disarmed"] = report.ops_disarmed;
  j["ops_armed"] = report.ops_armed;
  j["traps_disarmed"] = report.traps_disarmed;
  j["traps_armed"] = report.traps_armed;
  j["violations_disarmed"] = report.violations_disarmed;
  j["violations_armed"] = report.violations_armed;
  j["disarmed_ns"] = report.disarmed_ns;
  j["armed_ns"] = report.armed_ns;
  j["ratio"] = report.ratio;
  return j.dump(2) + "\n";
}

}  // namespace sim::scenario
