#include "sockscope/host_info.hpp"

#include <ifaddrs.h>
#include <sys/socket.h>
#include <sys/utsname.h>

#include <ctime>
#include <filesystem>
#include <map>
#include <set>

namespace sockscope {

std::string network_config_summary() {
  ifaddrs* list = nullptr;
  if (getifaddrs(&list) != 0) return {};
  std::map<std::string, std::set<std::string>> ifs;
  for (ifaddrs* p = list; p != nullptr; p = p->ifa_next) {
    if (p->ifa_name == nullptr) continue;
    auto& fams = ifs[p->ifa_name];
    if (p->ifa_addr == nullptr) continue;
    if (p->ifa_addr->sa_family == AF_INET) fams.insert("inet");
    if (p->ifa_addr->sa_family == AF_INET6) fams.insert("inet6");
  }
  freeifaddrs(list);
  std::string out;
  for (const auto& [name, fams] : ifs) {
    if (fams.empty()) continue;
    if (!out.empty()) out += ';';
    out += name;
    out += ':';
    bool first = true;
    for (const auto& f : fams) {
      if (!first) out += ',';
      out += f;
      first = false;
    }
  }
  return out;
}

std::string utc_now_rfc3339() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::int64_t monotonic_ns() {
  timespec ts{};
  clock_gettime(CLOCK_MONOTONIC, &ts);
  return std::int64_t{ts.tv_sec} * 1'000'000'000 + ts.tv_nsec;
}

TraceMeta describe_host(const std::vector<std::string>& argv, const Salt& salt, bool opt_out) {
  TraceMeta m;
  if (!argv.empty()) m.app_name = std::filesystem::path(argv.front()).filename().string();
  if (m.app_name.empty()) m.app_name = "unknown";
  for (std::size_t i = 0; i < argv.size(); ++i) {
    if (i) m.command_line += ' ';
    m.command_line += argv[i];
  }
  utsname u{};
  if (uname(&u) == 0) {
    m.os_name = u.sysname;
    m.kernel_version = u.release;
  } else {
    m.os_name = "unknown";
  }
  m.network_config_summary = network_config_summary();
  m.tracer_version = std::string(kTracerVersion);
  m.started_at = utc_now_rfc3339();
  m.salt_fingerprint = salt.fingerprint();
  m.metadata_opt_out = opt_out;
  return opt_out ? scrub_meta(std::move(m)) : m;
}

}  // namespace sockscope
