#include <pthread.h>
#include <signal.h>

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "httplib.h"
#include "json.hpp"
#include "sockscope/analysis.hpp"
#include "sockscope/archive.hpp"
#include "sockscope/corpus.hpp"
#include "sockscope/corpus_gen.hpp"
#include "sockscope/launcher.hpp"
#include "sockscope/patterns.hpp"
#include "sockscope/service.hpp"

namespace fs = std::filesystem;
using namespace sockscope;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kFail = 1;
constexpr int kUsage = 2;
constexpr int kLaunch = 127;

void print_text(const StatsReport& r) {
  std::cout << "traces " << r.traces << "  apps " << r.apps << "  sockets " << r.sockets
            << "  events " << r.events << "\n";
  std::cout << "\nsocket types\n";
  for (const auto& [t, n] : r.socket_types)
    std::cout << "  " << std::setw(8) << to_string(t) << "  " << n << "  "
              << r.socket_type_share(t).value() * 100 << "%\n";
  std::cout << "\nudp sockets (" << r.udp_total() << ")\n";
  for (const auto& [c, n] : r.udp_classes)
    std::cout << "  " << std::setw(16) << to_string(c) << "  " << r.udp_share(c).value() * 100 << "%\n";
  std::cout << "\ntcp sockets (" << r.tcp_total() << ")\n";
  for (const auto& [c, n] : r.tcp_classes)
    std::cout << "  " << std::setw(16) << to_string(c) << "  " << r.tcp_share(c).value() * 100 << "%\n";
  std::cout << "\nioctl requests (" << r.ioctl_total() << ")\n";
  for (const auto& [name, n] : r.ioctl_requests)
    std::cout << "  " << std::setw(16) << name << "  " << r.ioctl_share(name).value() * 100 << "%\n";
  std::cout << "\nfunction usage\n";
  for (const auto& [fn, u] : r.function_usage)
    std::cout << "  " << std::setw(14) << to_string(fn) << "  apps " << u.apps << "  calls " << u.calls << "\n";
}

int cmd_run(const std::vector<std::string>& opts, const std::vector<std::string>& command) {
  CLI::App app{"run a command under the tracer", "sockscope run"};
  std::string out, salt_hex;
  bool opt_out = false;
  app.add_option("--out", out, "trace directory");
  app.add_option("--salt", salt_hex, "64 hex digit salt");
  app.add_flag("--opt-out", opt_out, "omit kernel and network metadata");
  std::vector<std::string> args(opts.rbegin(), opts.rend());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }
  if (command.empty()) {
    std::cerr << "sockscope run: no command after --\n";
    return kUsage;
  }
  LaunchOptions lo;
  if (!out.empty()) lo.out_dir = out;
  if (!salt_hex.empty()) {
    lo.salt = Salt::from_hex(salt_hex);
    if (!lo.salt) {
      std::cerr << "sockscope run: --salt needs 64 hex digits\n";
      return kUsage;
    }
  }
  lo.opt_out = opt_out;
  try {
    auto r = run_traced(command, lo);
    std::cout << r.trace_dir.string() << std::endl;
    return r.exit_code;
  } catch (const LaunchError& e) {
    std::cerr << "sockscope run: " << e.what() << "\n";
    return kLaunch;
  }
}

int cmd_analyze(const std::string& dir, bool text, bool collapse) {
  LoadOptions lo;
  lo.collapse_twins = collapse;
  auto corpus = load_corpus(dir, lo);
  ReportOptions ro;
  ro.collapse_twins = collapse;
  auto report = compute_report(corpus, ro);
  if (text) print_text(report);
  else std::cout << report_to_json(report);
  return kOk;
}

int cmd_mine(const std::string& dir, std::uint64_t min_support, std::size_t max_len) {
  auto corpus = load_corpus(dir);
  std::cout << mined_to_json(mine_frequent(corpus, min_support, max_len));
  return kOk;
}

int cmd_match(const std::string& dir, const std::string& template_file) {
  auto t = load_template(template_file);
  auto corpus = load_corpus(dir);
  std::cout << prevalence_to_json(t, pattern_prevalence(corpus, t));
  return kOk;
}

int cmd_gen(const std::string& spec_file, const std::string& out) {
  auto spec = load_gen_spec(spec_file);
  auto traces = generate_corpus(spec);
  write_corpus(out, traces);
  std::size_t events = 0;
  for (const auto& t : traces) events += t.events.size();
  std::cerr << "wrote " << traces.size() << " traces, " << events << " events to " << out << "\n";
  return kOk;
}

int cmd_upload(const std::string& dir, const std::string& url) {
  if (!fs::exists(fs::path(dir) / "meta.json")) {
    std::cerr << "sockscope upload: " << dir << " has no meta.json\n";
    return kFail;
  }
  std::string body = bundle_trace_dir(dir);
  httplib::Client client(url);
  client.set_connection_timeout(5);
  client.set_read_timeout(120);
  auto res = client.Post("/api/traces", body, "application/gzip");
  if (!res) {
    std::cerr << "sockscope upload: " << httplib::to_string(res.error()) << "\n";
    return kFail;
  }
  if (res->status != 200 && res->status != 201) {
    std::cerr << "sockscope upload: server said " << res->status << ": " << res->body;
    return kFail;
  }
  std::cout << json::parse(res->body).at("trace_id").get<std::string>() << std::endl;
  return kOk;
}

int cmd_serve(const std::string& listen, const std::string& data, std::size_t max_upload) {
  auto colon = listen.rfind(':');
  if (colon == std::string::npos) {
    std::cerr << "sockscope serve: --listen wants HOST:PORT\n";
    return kUsage;
  }
  std::string host = listen.substr(0, colon);
  int port = std::stoi(listen.substr(colon + 1));

  sigset_t stop_set;
  sigemptyset(&stop_set);
  sigaddset(&stop_set, SIGINT);
  sigaddset(&stop_set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &stop_set, nullptr);

  IngestService svc(ServiceConfig{data, max_upload});
  int bound = svc.bind(host, port);
  std::cout << "listening on " << host << ":" << bound << std::endl;

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&stop_set, &sig);
    svc.stop();
  });
  svc.serve();
  // serve() may also end on its own; wake the waiter either way.
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> raw(argv + 1, argv + argc);

  // `run` owns everything after `--`, which CLI11 must never see.
  if (!raw.empty() && raw.front() == "run") {
    auto sep = std::find(raw.begin(), raw.end(), "--");
    if (sep == raw.end()) {
      std::cerr << "usage: sockscope run [--out DIR] [--salt HEX] [--opt-out] -- CMD ARGS...\n";
      return kUsage;
    }
    try {
      return cmd_run({raw.begin() + 1, sep}, {sep + 1, raw.end()});
    } catch (const std::exception& e) {
      std::cerr << "sockscope run: " << e.what() << "\n";
      return kFail;
    }
  }

  CLI::App app{"socket API tracer and trace analyzer", "sockscope"};
  app.require_subcommand(1);
  app.add_subcommand("run", "run CMD under the tracer: run [--out DIR] [--salt HEX] [--opt-out] -- CMD ARGS...");

  std::string dir;
  bool as_json = false, as_text = false, collapse = false;
  auto* analyze = app.add_subcommand("analyze", "print statistics for a trace directory tree");
  analyze->add_option("DIR", dir)->required();
  auto* json_flag = analyze->add_flag("--json", as_json, "JSON output (default)");
  analyze->add_flag("--text", as_text, "human-readable output")->excludes(json_flag);
  analyze->add_flag("--collapse-twins", collapse, "merge simple/complex twin calls");

  std::uint64_t min_support = 1;
  std::size_t max_len = 16;
  auto* mine = app.add_subcommand("mine", "frequent contiguous call sequences");
  mine->add_option("DIR", dir)->required();
  mine->add_option("--min-support", min_support)->required();
  mine->add_option("--max-len", max_len)->required()->check(CLI::PositiveNumber);

  std::string template_file;
  auto* match = app.add_subcommand("match", "prevalence of a call-sequence template");
  match->add_option("DIR", dir)->required();
  match->add_option("--template", template_file)->required();

  std::string spec_file, out;
  auto* gen = app.add_subcommand("gen", "generate a synthetic corpus");
  gen->add_option("SPEC", spec_file)->required();
  gen->add_option("--out", out)->required();

  std::string url;
  auto* upload = app.add_subcommand("upload", "send a trace directory to a server");
  upload->add_option("DIR", dir)->required();
  upload->add_option("--url", url)->required();

  std::string listen = "127.0.0.1:8080", data;
  std::size_t max_upload = 64u << 20;
  auto* serve = app.add_subcommand("serve", "run the ingest server");
  serve->add_option("--listen", listen, "HOST:PORT")->capture_default_str();
  serve->add_option("--data", data)->required();
  serve->add_option("--max-upload", max_upload, "bytes")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*analyze) return cmd_analyze(dir, as_text, collapse);
    if (*mine) return cmd_mine(dir, min_support, max_len);
    if (*match) return cmd_match(dir, template_file);
    if (*gen) return cmd_gen(spec_file, out);
    if (*upload) return cmd_upload(dir, url);
    if (*serve) return cmd_serve(listen, data, max_upload);
  } catch (const std::exception& e) {
    std::cerr << "sockscope " << app.get_subcommands().front()->get_name() << ": " << e.what() << "\n";
    return kFail;
  }
  return kUsage;
}
