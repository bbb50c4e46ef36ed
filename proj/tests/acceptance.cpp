// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <csignal>
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "anon_oracle.hpp"
#include "chaos.hpp"
#include "flat_oracle.hpp"
#include "harness.hpp"
#include "httplib.h"
#include "json.hpp"
#include "mining_oracle.hpp"
#include "sockscope/archive.hpp"
#include "sockscope/corpus_gen.hpp"
#include "sockscope/patterns.hpp"
#include "sockscope/service.hpp"
#include "sockscope/trace_io.hpp"

using namespace sockscope;
using nlohmann::json;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Pinned limits.
constexpr double kScriptSeconds = 5.0;
constexpr std::size_t kScriptEvents = 25;
constexpr long kTransferBytes = 1 << 20;
constexpr long kOverheadCalls = 10'000;
constexpr double kOverheadMicros = 50.0;
constexpr std::size_t kAnonSamples = 1'000;
constexpr double kReplicaSeconds = 30.0;
constexpr std::uint64_t kReplicaSockets = 10'000;
constexpr int kPatternSockets = 20;
constexpr int kMiningCorpora = 200;
constexpr std::size_t kMiningMaxEvents = 8;
constexpr int kMiningAlphabet = 5;
constexpr int kChaosCorpora = 50;
constexpr std::size_t kChaosMaxEvents = 10'000;
constexpr int kKillRounds = 20;
constexpr double kTcpInfoSeconds = 32.0;
constexpr std::uint64_t kTcpInfoReads = 3'000;
constexpr double kUniformKsBelow = 0.08;
constexpr double kBurstKsAbove = 0.4;

const std::string kSaltHex = "00112233445566778899aabbccddeeff00112233445566778899aabbccddeeff";

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (ok) return;
    if (pass) detail.clear();
    pass = false;
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
  void note(const std::string& s) {
    if (pass) detail += (detail.empty() ? "" : ", ") + s;
  }
};

std::string fmt(double v, int digits = 3) {
  std::ostringstream o;
  o.precision(digits);
  o << std::fixed << v;
  return o.str();
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

test::ProcessResult traced(const fs::path& out, std::vector<std::string> args) {
  std::vector<std::string> argv = {SOCKSCOPE_TEST_CLI, "run", "--out", out.string(), "--salt", kSaltHex, "--",
                                   SOCKSCOPE_TEST_FIXTURE};
  argv.insert(argv.end(), args.begin(), args.end());
  return test::run_process(argv);
}

// num/den == per_10k / 10000 exactly.
bool share_is(std::uint64_t num, std::uint64_t den, std::uint64_t per_10k) {
  return den > 0 && num * 10'000 == per_10k * den;
}

template <class Map, class Key>
std::uint64_t count_of(const Map& m, const Key& k) {
  auto it = m.find(k);
  return it == m.end() ? 0 : it->second;
}

Verdict interception() {
  Verdict v;
  test::EchoServer server;
  test::TempDir tmp;
  auto t0 = Clock::now();
  auto r = traced(tmp / "t", {"script25", std::to_string(server.port()), (tmp / "manifest.json").string()});
  double took = seconds_since(t0);
  v.require(r.exit_code == 0, "fixture exit " + std::to_string(r.exit_code));
  if (!v.pass) return v;

  auto manifest = json::parse(test::read_file(tmp / "manifest.json"));
  auto events = read_events_file(test::only_events_file(tmp / "t"));
  std::map<std::int64_t, std::vector<TraceEvent>> by_tid;
  for (const auto& e : events) by_tid[e.tid].push_back(e);

  std::size_t expected = 0;
  std::size_t matched = 0;
  for (const auto& th : manifest["threads"]) {
    const auto& got = by_tid[th["tid"].get<std::int64_t>()];
    const auto& steps = th["steps"];
    expected += steps.size();
    v.require(got.size() == steps.size(), "thread event count");
    for (std::size_t i = 0; i < std::min(got.size(), steps.size()); ++i) {
      const auto& s = steps[i];
      bool ok = to_string(got[i].fn) == s["fn"].get<std::string>() && got[i].ret == s["ret"].get<std::int64_t>();
      if (s["fd"].get<int>() >= 0) ok = ok && got[i].subject_fd() == s["fd"].get<int>();
      if (const auto* io = std::get_if<IoArgs>(&got[i].args)) ok = ok && io->buf_size == s["size"].get<std::uint64_t>();
      if (i) ok = ok && got[i - 1].ts_us <= got[i].ts_us;
      if (ok) ++matched;
    }
  }
  v.require(expected == kScriptEvents, "manifest has " + std::to_string(expected) + " steps");
  v.require(events.size() == kScriptEvents, "trace has " + std::to_string(events.size()) + " events");
  v.require(matched == kScriptEvents, std::to_string(matched) + " steps matched");
  v.require(took < kScriptSeconds, "took " + fmt(took) + " s");
  v.note(std::to_string(matched) + "/" + std::to_string(kScriptEvents) + " events matched in " + fmt(took) + " s");
  return v;
}

long median_ns(const std::string& out) {
  auto pos = out.find("median_ns ");
  if (pos == std::string::npos) throw std::runtime_error("sendloop printed no median");
  return std::stol(out.substr(pos + 10));
}

Verdict transparency() {
  Verdict v;
  test::EchoServer server;
  test::TempDir tmp;
  const auto bytes = std::to_string(kTransferBytes);
  auto plain = test::run_process({SOCKSCOPE_TEST_FIXTURE, "transfer", std::to_string(server.port()), bytes});
  auto echoed_plain = server.echoed();
  auto with = traced(tmp / "transfer", {"transfer", std::to_string(server.port()), bytes});
  auto echoed_traced = server.echoed() - echoed_plain;
  const std::string expect = "sent " + bytes + " received " + bytes + " match 1\n";
  v.require(plain.exit_code == 0 && plain.out == expect, "plain transfer: " + plain.out);
  v.require(with.exit_code == plain.exit_code, "exit codes differ");
  v.require(with.out.starts_with(plain.out), "traced transfer: " + with.out);
  v.require(echoed_plain == static_cast<std::uint64_t>(kTransferBytes) && echoed_traced == echoed_plain,
            "echoed " + std::to_string(echoed_plain) + " vs " + std::to_string(echoed_traced));

  auto calls = std::to_string(kOverheadCalls);
  auto base = test::run_process({SOCKSCOPE_TEST_FIXTURE, "sendloop", calls});
  auto loop = traced(tmp / "sendloop", {"sendloop", calls});
  v.require(base.exit_code == 0 && loop.exit_code == 0, "sendloop failed");
  if (!v.pass) return v;
  double overhead_us = static_cast<double>(median_ns(loop.out) - median_ns(base.out)) / 1000.0;
  auto sends = read_events_file(test::only_events_file(tmp / "sendloop"));
  auto traced_sends = std::count_if(sends.begin(), sends.end(), [](const TraceEvent& e) { return e.fn == ApiFunction::send; });
  v.require(traced_sends == kOverheadCalls, std::to_string(traced_sends) + " sends traced");
  v.require(overhead_us < kOverheadMicros, "median overhead " + fmt(overhead_us) + " us");
  v.note("1 MiB identical, median overhead " + fmt(overhead_us) + " us/call");
  return v;
}

Salt salt_from(std::mt19937_64& rng) {
  Salt s;
  for (auto& b : s.bytes) b = static_cast<std::uint8_t>(rng());
  return s;
}

Verdict anonymization() {
  Verdict v;
  std::mt19937_64 rng(2024);
  Salt a = salt_from(rng);
  Salt b = salt_from(rng);
  auto addrs = test::random_global_addresses(rng(), kAnonSamples);
  std::size_t exact = 0;
  std::size_t disagree = 0;
  for (const auto& addr : addrs) {
    auto x = anonymize_addr(addr, a);
    if (x.bits == test::oracle_anonymized_bits(addr, a) && x.port == addr.port && x.family == addr.family) ++exact;
    if (anonymize_addr(addr, b).bits != x.bits) ++disagree;
  }
  std::size_t kept = 0;
  auto local = test::local_addresses();
  for (const auto& addr : local) kept += anonymize_addr(addr, a) == addr;
  v.require(exact == kAnonSamples, std::to_string(exact) + " match the oracle");
  v.require(disagree == kAnonSamples, std::to_string(disagree) + " differ across salts");
  v.require(kept == local.size(), "local address rewritten");
  v.note(std::to_string(exact) + "/" + std::to_string(kAnonSamples) + " oracle matches, " + std::to_string(disagree) +
         " salt disagreements, " + std::to_string(kept) + " local kept");
  return v;
}

Verdict replica_tables() {
  Verdict v;
  test::TempDir tmp;
  auto t0 = Clock::now();
  auto traces = generate_corpus(load_gen_spec(SOCKSCOPE_TEST_DATA "/specs/android_replica.json"));
  write_corpus(tmp.path(), traces);
  auto r = compute_report(load_corpus(tmp.path()));
  double took = seconds_since(t0);

  v.require(r.sockets == kReplicaSockets, std::to_string(r.sockets) + " sockets");
  const std::pair<const char*, std::uint64_t> ioctl[] = {{"SIOCGIFADDR", 4400}, {"SIOCGIFNAME", 2500},
                                                         {"SIOCGIFFLAGS", 2000}, {"SIOCGIFNETMASK", 500},
                                                         {"SIOCGIFBRDADDR", 500}, {"other", 100}};
  for (auto [req, bp] : ioctl) v.require(share_is(count_of(r.ioctl_requests, std::string(req)), r.ioctl_total(), bp), req);
  const std::pair<UdpClass, std::uint64_t> udp[] = {{UdpClass::netinfo_ioctl, 8500}, {UdpClass::connect_no_data, 800},
                                                    {UdpClass::data, 600}, {UdpClass::other, 100}};
  for (auto [c, bp] : udp) v.require(share_is(count_of(r.udp_classes, c), r.udp_total(), bp), std::string(to_string(c)));
  const std::pair<TcpClass, std::uint64_t> tcp[] = {
      {TcpClass::local_rcvtimeo_only, 2700}, {TcpClass::local_immediate_close, 600},
      {TcpClass::local_wireless_check, 300}, {TcpClass::local_other, 100},
      {TcpClass::remote_data, 5900},         {TcpClass::remote_no_data, 400}};
  std::uint64_t local = 0;
  for (auto [c, bp] : tcp) {
    v.require(share_is(count_of(r.tcp_classes, c), r.tcp_total(), bp), std::string(to_string(c)));
    if (is_local(c)) local += count_of(r.tcp_classes, c);
  }
  v.require(share_is(local, r.tcp_total(), 3700) && share_is(r.tcp_total() - local, r.tcp_total(), 6300),
            "local/remote split");
  const std::tuple<FlagDirection, const char*, std::uint64_t> flags[] = {
      {FlagDirection::send, "MSG_NOSIGNAL", 6000}, {FlagDirection::send, "MSG_DONTWAIT", 1300},
      {FlagDirection::send, "MSG_MORE", 200},      {FlagDirection::recv, "MSG_DONTWAIT", 1800},
      {FlagDirection::recv, "MSG_PEEK", 1600},     {FlagDirection::recv, "MSG_WAITALL", 4}};
  for (auto [dir, flag, bp] : flags) {
    auto f = r.flags.fraction(dir, flag);
    v.require(share_is(f.num, f.den, bp), std::string(to_string(dir)) + " " + flag);
  }
  auto cdf = r.recv_cdfs.find(ApiFunction::recv);
  v.require(cdf != r.recv_cdfs.end(), "no recv CDF");
  if (cdf != r.recv_cdfs.end()) {
    auto c1 = cdf->second.at(1);
    auto c5 = cdf->second.at(5);
    v.require(share_is(c1.num, c1.den, 3400), "recv CDF(1)");
    v.require(c5.den > 0 && 2 * c5.num >= c5.den, "recv CDF(5)");
  }
  v.require(took < kReplicaSeconds, "took " + fmt(took) + " s");
  v.note("ioctl, UDP, TCP, flag and recv CDF tables exact over " + std::to_string(r.sockets) + " sockets in " +
         fmt(took) + " s");
  return v;
}

std::vector<std::vector<std::string>> random_sequences(std::mt19937_64& rng) {
  const char* alphabet[] = {"socket", "connect", "send", "recv", "close"};
  int letters = 1 + static_cast<int>(rng() % kMiningAlphabet);
  std::size_t lifecycles = 1 + rng() % 12;
  std::vector<std::vector<std::string>> out(lifecycles);
  for (auto& seq : out) {
    std::size_t n = rng() % (kMiningMaxEvents + 1);
    for (std::size_t i = 0; i < n; ++i) seq.emplace_back(alphabet[rng() % static_cast<unsigned>(letters)]);
  }
  return out;
}

Verdict patterns() {
  Verdict v;
  test::EchoServer server;
  test::TempDir tmp;
  auto r = traced(tmp / "t", {"patterns", std::to_string(server.port()), std::to_string(kPatternSockets)});
  v.require(r.exit_code == 0, "fixture exit " + std::to_string(r.exit_code));
  if (!v.pass) return v;
  auto corpus = load_corpus(tmp / "t");
  auto opening = load_template(SOCKSCOPE_TEST_DATA "/templates/opening.json");
  auto closing = load_template(SOCKSCOPE_TEST_DATA "/templates/closing.json");
  std::size_t sockets = 0, prefix = 0, suffix = 0;
  for (const auto& trace : corpus.traces()) {
    for (const auto& lc : trace.lifecycles) {
      ++sockets;
      prefix += match_template(lc, opening).has_value();
      suffix += match_template(lc, closing).has_value();
    }
  }
  v.require(opening.anchor == Anchor::prefix && closing.anchor == Anchor::suffix, "template anchors");
  v.require(sockets == static_cast<std::size_t>(kPatternSockets), std::to_string(sockets) + " sockets traced");
  v.require(prefix == sockets && suffix == sockets,
            "prefix " + std::to_string(prefix) + ", suffix " + std::to_string(suffix));

  std::mt19937_64 rng(5150);
  int equal = 0;
  for (int i = 0; i < kMiningCorpora; ++i) {
    auto seqs = random_sequences(rng);
    std::uint64_t min_support = 1 + rng() % 3;
    std::size_t max_len = 1 + rng() % kMiningMaxEvents;
    auto want = test::brute_force_mine(seqs, min_support, max_len);
    equal += mine_frequent(seqs, min_support, max_len, Execution::serial) == want &&
             mine_frequent(seqs, min_support, max_len, Execution::parallel) == want;
  }
  v.require(equal == kMiningCorpora, std::to_string(equal) + " mined corpora equal the oracle");
  v.note(std::to_string(prefix) + "/" + std::to_string(sockets) + " prefix, " + std::to_string(suffix) + "/" +
         std::to_string(sockets) + " suffix, " + std::to_string(equal) + "/" + std::to_string(kMiningCorpora) +
         " mined corpora equal");
  return v;
}

Verdict oracle_equivalence() {
  Verdict v;
  int equal = 0;
  std::uint64_t events = 0;
  for (int seed = 0; seed < kChaosCorpora; ++seed) {
    auto corpus = test::chaos_corpus(1000 + static_cast<std::uint64_t>(seed), {.max_events = kChaosMaxEvents});
    auto want = test::flat_scan_report(corpus);
    auto par = test::report_differences(compute_report(corpus, {}, Execution::parallel), want);
    auto ser = test::report_differences(compute_report(corpus, {}, Execution::serial), want);
    events += want.events;
    if (par.empty() && ser.empty()) {
      ++equal;
    } else {
      std::string names;
      for (const auto& d : par.empty() ? ser : par) names += " " + d;
      v.require(false, "seed " + std::to_string(seed) + ":" + names);
    }
  }
  v.note(std::to_string(equal) + "/" + std::to_string(kChaosCorpora) + " corpora equal (" + std::to_string(events) +
         " events)");
  return v;
}

std::string post(httplib::Client& c, const std::string& body, int* status = nullptr) {
  auto res = c.Post("/api/traces", body, "application/gzip");
  if (!res) return {};
  if (status) *status = res->status;
  if (res->status >= 300) return {};
  return json::parse(res->body).at("trace_id").get<std::string>();
}

int read_port(test::ChildProcess& server) {
  auto line = server.read_line();
  if (!line.starts_with("listening on 127.0.0.1:")) throw std::runtime_error("serve printed: " + line);
  return std::stoi(line.substr(line.rfind(':') + 1));
}

Verdict service() {
  Verdict v;
  test::TempDir data, corpus;
  CorpusGenSpec spec;
  spec.seed = 9;
  spec.apps = 3;
  spec.sockets = 200;
  auto traces = generate_corpus(spec);
  write_corpus(corpus.path(), traces);
  {
    test::ChildProcess server({SOCKSCOPE_TEST_CLI, "serve", "--listen", "127.0.0.1:0", "--data", data.path().string()});
    httplib::Client c("127.0.0.1", read_port(server));
    const auto dir = corpus.path() / traces[0].dir;
    auto body = bundle_trace_dir(dir);
    int first = 0, second = 0;
    auto id = post(c, body, &first);
    auto again = post(c, body, &second);
    v.require(!id.empty() && first == 201, "first upload status " + std::to_string(first));
    v.require(again == id && second == 200, "duplicate upload status " + std::to_string(second));
    v.require(TraceStore(data.path()).list().size() == 1, "duplicate stored twice");
    auto remote = c.Get("/api/traces/" + id + "/report");
    auto local = test::run_process({SOCKSCOPE_TEST_CLI, "analyze", dir.string(), "--json"});
    v.require(remote && remote->status == 200 && local.exit_code == 0 && remote->body == local.out,
              "HTTP report differs from local analyze");
    server.signal(SIGTERM);
    v.require(server.wait() == 0, "serve did not exit cleanly");
  }

  test::TempDir store_dir;
  std::mt19937_64 rng(77);
  std::set<std::string> acknowledged;
  std::uint64_t seq = 0;
  int clean_rounds = 0;
  for (int round = 0; round < kKillRounds; ++round) {
    test::ChildProcess server(
        {SOCKSCOPE_TEST_CLI, "serve", "--listen", "127.0.0.1:0", "--data", store_dir.path().string()});
    int port = read_port(server);
    std::atomic<bool> done{false};
    std::mutex mu;
    std::vector<std::thread> clients;
    for (int t = 0; t < 3; ++t) {
      std::uint64_t base = seq + static_cast<std::uint64_t>(t) * 1000;
      clients.emplace_back([&, base] {
        httplib::Client c("127.0.0.1", port);
        c.set_connection_timeout(1);
        c.set_read_timeout(2);
        for (std::uint64_t i = base; !done; ++i) {
          CorpusGenSpec s;
          s.seed = i;
          s.sockets = 40;
          auto gen = generate_corpus(s);
          std::vector<ArchiveEntry> files = {{"meta.json", meta_to_json(gen[0].meta)},
                                             {events_file_name(gen[0].pid), serialize_events(gen[0].events)}};
          auto id = post(c, gzip_compress(make_tar(files)));
          if (id.empty()) return;
          std::lock_guard lock(mu);
          acknowledged.insert(id);
        }
      });
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20 + rng() % 80));
    server.signal(SIGKILL);
    server.wait();
    done = true;
    for (auto& c : clients) c.join();
    seq += 10'000;

    TraceStore store(store_dir.path());
    auto listed = store.list();
    std::set<std::string> ids;
    bool ok = true;
    for (const auto& t : listed) {
      ids.insert(t.trace_id);
      ok = ok && store.load(t.trace_id).event_count() == t.event_count &&
           sha256_hex(store.archive(t.trace_id)) == t.trace_id;
    }
    ok = ok && ids.size() == listed.size();
    for (const auto& id : acknowledged) ok = ok && ids.count(id);
    std::size_t dirs = 0;
    if (fs::exists(store_dir.path() / "store")) {
      for (const auto& shard : fs::directory_iterator(store_dir.path() / "store")) {
        for ([[maybe_unused]] const auto& d : fs::directory_iterator(shard.path())) ++dirs;
      }
    }
    ok = ok && dirs == listed.size();
    clean_rounds += ok;
    v.require(ok, "round " + std::to_string(round) + " left a partial or lost trace");
  }
  v.require(!acknowledged.empty(), "no upload acknowledged during the kill loop");
  v.note("report byte-equal, duplicate idempotent, " + std::to_string(clean_rounds) + "/" +
         std::to_string(kKillRounds) + " kill rounds clean (" + std::to_string(acknowledged.size()) + " uploads)");
  return v;
}

Verdict tcpinfo_timing() {
  Verdict v;
  auto ks = [&](ReadPlacement placement) {
    auto r = compute_report(to_corpus({make_tcpinfo_connection(kTcpInfoSeconds, kTcpInfoReads, placement, 1)}));
    v.require(r.tcpinfo.sockets_with_tcpinfo == 1 && r.tcpinfo.per_socket_counts.count(kTcpInfoReads) == 1,
              "expected one socket with 3000 reads");
    return r.tcpinfo.ks_uniform.value_or(1.0);
  };
  double uniform = ks(ReadPlacement::uniform);
  double burst = ks(ReadPlacement::burst);
  v.require(uniform < kUniformKsBelow, "uniform ks " + fmt(uniform, 4));
  v.require(burst > kBurstKsAbove, "burst ks " + fmt(burst, 4));
  v.note("uniform ks " + fmt(uniform, 4) + ", burst ks " + fmt(burst, 4));
  return v;
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Verdict()>> criteria[] = {
      {"interception completeness", interception},
      {"transparency", transparency},
      {"anonymization", anonymization},
      {"replica table closed loops", replica_tables},
      {"pattern detection", patterns},
      {"analyzer oracle equivalence", oracle_equivalence},
      {"service round trip", service},
      {"tcp_info timing", tcpinfo_timing},
  };
  int failed = 0;
  int n = 0;
  for (const auto& [name, run] : criteria) {
    ++n;
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("%s %d %s: %s\n", v.pass ? "PASS" : "FAIL", n, name, v.detail.c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
