#include <gtest/gtest.h>

#include <sys/socket.h>

#include <fstream>
#include <thread>

#include "harness.hpp"
#include "sockscope/archive.hpp"
#include "sockscope/ingest.hpp"
#include "sockscope/trace_io.hpp"

using namespace sockscope;

namespace {

TraceMeta meta(const std::string& app, bool salted = true) {
  TraceMeta m;
  m.app_name = app;
  m.command_line = app;
  m.os_name = "Linux";
  m.tracer_version = std::string(kTracerVersion);
  m.started_at = "2026-01-01T00:00:00Z";
  if (salted) m.salt_fingerprint = "0a1b2c3d";
  return m;
}

std::vector<TraceEvent> events_to(NetAddress peer, int n = 3) {
  std::vector<TraceEvent> out;
  TraceEvent s;
  s.ts_us = 1;
  s.tid = 1;
  s.fn = ApiFunction::socket;
  s.args = SocketArgs{AF_INET, SOCK_STREAM, 0, 0, std::nullopt};
  s.ret = 3;
  out.push_back(s);
  for (int i = 0; i < n; ++i) {
    TraceEvent c;
    c.ts_us = 2 + i;
    c.tid = 1;
    c.fn = ApiFunction::connect;
    c.args = AddrArgs{3, peer, std::nullopt};
    out.push_back(c);
  }
  return out;
}

std::string upload(const TraceMeta& m, const std::vector<TraceEvent>& events,
                   std::vector<ArchiveEntry> extra = {}) {
  extra.push_back({"meta.json", meta_to_json(m)});
  extra.push_back({"events.42.jsonl", serialize_events(events)});
  return gzip_compress(make_tar(std::move(extra)));
}

const NetAddress kLoop = NetAddress::ipv4(0x7f000001, 80);
const NetAddress kGlobal = NetAddress::ipv4(0x08080808, 53);

}  // namespace

TEST(Archive, TarRoundTripIsDeterministic) {
  std::vector<ArchiveEntry> files = {{"b.txt", "bee"}, {"a.txt", std::string(1000, 'x')}, {"empty", ""}};
  auto tar = make_tar(files);
  EXPECT_EQ(tar, make_tar({files[2], files[0], files[1]}));
  EXPECT_EQ(tar.size() % 512, 0u);
  auto back = read_tar(tar);
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back[0].name, "a.txt");
  EXPECT_EQ(back[0].data, files[1].data);
  EXPECT_EQ(back[2].data, "");
}

TEST(Archive, RejectsNestedPathsAndGarbage) {
  EXPECT_THROW(read_tar(make_tar({{"dir/file", "x"}})), ArchiveError);
  EXPECT_THROW(read_tar(make_tar({{"../evil", "x"}})), ArchiveError);
  EXPECT_THROW(read_tar(std::string(700, 'z')), ArchiveError);
}

TEST(Archive, Gzip) {
  std::string data(200000, 'q');
  auto gz = gzip_compress(data);
  EXPECT_LT(gz.size(), data.size());
  EXPECT_EQ(gzip_decompress(gz, data.size()), data);
  EXPECT_THROW(gzip_decompress(gz, data.size() - 1), ArchiveError);
  EXPECT_THROW(gzip_decompress("not gzip at all", 1000), ArchiveError);
  EXPECT_THROW(gzip_decompress(gz.substr(0, gz.size() / 2), data.size()), ArchiveError);
}

TEST(Ingest, Sha256) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Ingest, ValidateAcceptsAnonymizedTrace) {
  auto v = validate_upload(upload(meta("a"), events_to(kLoop)), 1 << 20);
  EXPECT_EQ(v.meta.app_name, "a");
  EXPECT_EQ(v.event_count, 4u);
}

TEST(Ingest, RawGlobalAddressRequiresSalt) {
  EXPECT_THROW(validate_upload(upload(meta("a", false), events_to(kGlobal)), 1 << 20), UploadRejected);
  EXPECT_NO_THROW(validate_upload(upload(meta("a", false), events_to(kLoop)), 1 << 20));
  EXPECT_NO_THROW(validate_upload(upload(meta("a", true), events_to(kGlobal)), 1 << 20));
  EXPECT_TRUE(has_raw_global_address(events_to(kGlobal)));
  EXPECT_FALSE(has_raw_global_address(events_to(kLoop)));
}

TEST(Ingest, ValidateRejections) {
  auto m = meta("a");
  auto ev = events_to(kLoop);
  EXPECT_THROW(validate_upload("junk", 1 << 20), UploadRejected);
  EXPECT_THROW(validate_upload(gzip_compress(make_tar({{"events.1.jsonl", serialize_events(ev)}})), 1 << 20),
               UploadRejected);
  EXPECT_THROW(validate_upload(upload(m, ev, {{"notes.txt", "hi"}}), 1 << 20), UploadRejected);
  EXPECT_THROW(validate_upload(upload(m, ev, {{"events.7.jsonl", "{broken\n"}}), 1 << 20), UploadRejected);
  EXPECT_THROW(validate_upload(gzip_compress(make_tar({{"meta.json", "{}"}})), 1 << 20), UploadRejected);
  auto bad_fp = m;
  bad_fp.salt_fingerprint = "XYZ";
  EXPECT_THROW(validate_upload(upload(bad_fp, ev), 1 << 20), UploadRejected);
  EXPECT_THROW(validate_upload(upload(m, events_to(kLoop, 5000)), 1000), UploadRejected);
}

TEST(Store, PutIsContentAddressedAndIdempotent) {
  test::TempDir dir;
  TraceStore store(dir.path());
  auto body = upload(meta("a"), events_to(kLoop));
  auto v0 = store.version();
  auto r1 = store.put(body);
  EXPECT_TRUE(r1.created);
  EXPECT_EQ(r1.trace_id, sha256_hex(body));
  EXPECT_GT(store.version(), v0);
  auto v1 = store.version();
  auto r2 = store.put(body);
  EXPECT_FALSE(r2.created);
  EXPECT_EQ(r2.trace_id, r1.trace_id);
  EXPECT_EQ(store.version(), v1);
  EXPECT_EQ(store.list().size(), 1u);
  EXPECT_EQ(store.archive(r1.trace_id), body);
  auto t = store.load(r1.trace_id);
  EXPECT_EQ(t.meta, meta("a"));
  EXPECT_EQ(t.event_count(), 4u);
  ASSERT_TRUE(store.find(r1.trace_id));
  EXPECT_EQ(store.find(r1.trace_id)->event_count, 4u);
  EXPECT_FALSE(store.find(std::string(64, '0')));
  EXPECT_THROW(store.put("junk"), UploadRejected);
  EXPECT_EQ(store.list().size(), 1u);
}

TEST(Store, ListByAppNewestFirst) {
  test::TempDir dir;
  TraceStore store(dir.path());
  for (int i = 0; i < 6; ++i) store.put(upload(meta(i % 2 ? "odd" : "even"), events_to(kLoop, i + 1)));
  auto all = store.list();
  ASSERT_EQ(all.size(), 6u);
  for (std::size_t i = 1; i < all.size(); ++i) EXPECT_GT(all[i - 1].received_at, all[i].received_at);
  EXPECT_EQ(store.list(std::string("odd")).size(), 3u);
  EXPECT_TRUE(store.has_app("even"));
  EXPECT_FALSE(store.has_app("none"));
  for (const auto& t : all) EXPECT_EQ(stored_trace_from_json(stored_trace_to_json(t)), t);
}

TEST(Store, RecoversTornIndexAndUnindexedDirs) {
  test::TempDir dir;
  std::vector<StoredTrace> before;
  {
    TraceStore store(dir.path());
    for (int i = 0; i < 3; ++i) store.put(upload(meta("a"), events_to(kLoop, i + 1)));
    before = store.list();
  }
  auto index = dir.path() / "index.jsonl";
  std::string text;
  {
    std::ifstream in(index);
    text.assign(std::istreambuf_iterator<char>(in), {});
  }
  // Drop the last record and leave half of it, as a crash mid-append would.
  auto cut = text.rfind('\n', text.size() - 2);
  {
    std::ofstream out(index, std::ios::trunc);
    out << text.substr(0, cut + 1) << text.substr(cut + 1, 20);
  }
  std::filesystem::create_directories(dir.path() / "tmp" / "stale-stage");
  TraceStore reopened(dir.path());
  auto after = reopened.list();
  ASSERT_EQ(after.size(), 3u);
  std::set<std::string> a, b;
  for (const auto& t : before) a.insert(t.trace_id);
  for (const auto& t : after) b.insert(t.trace_id);
  EXPECT_EQ(a, b);
  EXPECT_FALSE(std::filesystem::exists(dir.path() / "tmp" / "stale-stage"));
  TraceStore again(dir.path());
  EXPECT_EQ(again.list().size(), 3u);
}

TEST(Store, ConcurrentPuts) {
  test::TempDir dir;
  TraceStore store(dir.path());
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 5; ++i) store.put(upload(meta("app" + std::to_string(t)), events_to(kLoop, i + 1)));
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(store.list().size(), 40u);
  TraceStore reopened(dir.path());
  EXPECT_EQ(reopened.list().size(), 40u);
}
