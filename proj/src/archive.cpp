#include "sockscope/archive.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "sockscope/trace_io.hpp"

namespace sockscope {

namespace {

constexpr std::size_t kBlock = 512;

void put_octal(char* field, std::size_t width, std::uint64_t value) {
  // width includes the terminating NUL.
  std::snprintf(field, width, "%0*llo", static_cast<int>(width - 1), static_cast<unsigned long long>(value));
}

std::uint64_t get_octal(const char* field, std::size_t width) {
  std::uint64_t v = 0;
  std::size_t i = 0;
  while (i < width && (field[i] == ' ' || field[i] == '\0')) ++i;
  for (; i < width && field[i] >= '0' && field[i] <= '7'; ++i) v = v * 8 + static_cast<std::uint64_t>(field[i] - '0');
  return v;
}

std::uint32_t header_checksum(const char* h) {
  std::uint32_t sum = 0;
  for (std::size_t i = 0; i < kBlock; ++i) {
    bool in_field = i >= 148 && i < 156;
    sum += in_field ? ' ' : static_cast<unsigned char>(h[i]);
  }
  return sum;
}

}  // namespace

std::string make_tar(std::vector<ArchiveEntry> entries) {
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  std::string out;
  for (const auto& e : entries) {
    if (e.name.empty() || e.name.size() > 99) throw ArchiveError("unsupported entry name '" + e.name + "'");
    std::array<char, kBlock> h{};
    std::memcpy(h.data(), e.name.data(), e.name.size());
    put_octal(h.data() + 100, 8, 0644);
    put_octal(h.data() + 108, 8, 0);
    put_octal(h.data() + 116, 8, 0);
    put_octal(h.data() + 124, 12, e.data.size());
    put_octal(h.data() + 136, 12, 0);
    h[156] = '0';
    std::memcpy(h.data() + 257, "ustar", 6);
    std::memcpy(h.data() + 263, "00", 2);
    std::snprintf(h.data() + 148, 8, "%06o", header_checksum(h.data()));
    h[155] = ' ';
    out.append(h.data(), kBlock);
    out += e.data;
    out.append((kBlock - e.data.size() % kBlock) % kBlock, '\0');
  }
  out.append(2 * kBlock, '\0');
  return out;
}

std::vector<ArchiveEntry> read_tar(std::string_view tar) {
  std::vector<ArchiveEntry> out;
  std::size_t pos = 0;
  while (pos + kBlock <= tar.size()) {
    const char* h = tar.data() + pos;
    if (std::all_of(h, h + kBlock, [](char c) { return c == '\0'; })) return out;
    if (get_octal(h + 148, 8) != header_checksum(h)) throw ArchiveError("tar header checksum mismatch");
    std::string name(h, strnlen(h, 100));
    std::string prefix(h + 345, strnlen(h + 345, 155));
    if (!prefix.empty()) name = prefix + "/" + name;
    const std::uint64_t size = get_octal(h + 124, 12);
    const char type = h[156];
    pos += kBlock;
    if (size > tar.size() - pos) throw ArchiveError("truncated tar entry '" + name + "'");
    if (name.rfind("./", 0) == 0) name.erase(0, 2);
    if (type == '5' || name.empty()) {
      pos += (size + kBlock - 1) / kBlock * kBlock;
      continue;
    }
    if (type != '0' && type != '\0') throw ArchiveError("unsupported tar entry type for '" + name + "'");
    if (name.find('/') != std::string::npos || name == "..") {
      throw ArchiveError("nested path '" + name + "' in archive");
    }
    out.push_back({name, std::string(tar.substr(pos, size))});
    pos += (size + kBlock - 1) / kBlock * kBlock;
  }
  if (pos != tar.size()) throw ArchiveError("truncated tar archive");
  return out;
}

std::string gzip_compress(std::string_view data) {
  z_stream z{};
  if (deflateInit2(&z, Z_BEST_COMPRESSION, Z_DEFLATED, 15 + 16, 9, Z_DEFAULT_STRATEGY) != Z_OK) {
    throw ArchiveError("deflateInit failed");
  }
  std::string out(deflateBound(&z, data.size()) + 32, '\0');
  z.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
  z.avail_in = static_cast<uInt>(data.size());
  z.next_out = reinterpret_cast<Bytef*>(out.data());
  z.avail_out = static_cast<uInt>(out.size());
  int rc = deflate(&z, Z_FINISH);
  out.resize(z.total_out);
  deflateEnd(&z);
  if (rc != Z_STREAM_END) throw ArchiveError("deflate failed");
  return out;
}

std::string gzip_decompress(std::string_view gz, std::size_t max_size) {
  z_stream z{};
  if (inflateInit2(&z, 15 + 16) != Z_OK) throw ArchiveError("inflateInit failed");
  z.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(gz.data()));
  z.avail_in = static_cast<uInt>(gz.size());
  std::string out;
  std::array<char, 64 * 1024> chunk;
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    z.next_out = reinterpret_cast<Bytef*>(chunk.data());
    z.avail_out = static_cast<uInt>(chunk.size());
    rc = inflate(&z, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&z);
      throw ArchiveError(rc == Z_BUF_ERROR ? "truncated gzip stream" : "corrupt gzip stream");
    }
    out.append(chunk.data(), chunk.size() - z.avail_out);
    if (out.size() > max_size) {
      inflateEnd(&z);
      throw ArchiveError("archive inflates beyond " + std::to_string(max_size) + " bytes");
    }
  }
  inflateEnd(&z);
  return out;
}

std::string bundle_trace_dir(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_regular_file(dir / "meta.json")) throw ArchiveError(dir.string() + ": missing meta.json");
  std::vector<ArchiveEntry> entries;
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ArchiveError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  for (const auto& de : fs::directory_iterator(dir)) {
    if (!de.is_regular_file()) continue;
    auto name = de.path().filename().string();
    if (name == "meta.json" || events_file_pid(de.path()) >= 0) entries.push_back({name, slurp(de.path())});
  }
  return gzip_compress(make_tar(std::move(entries)));
}

}  // namespace sockscope
