#include "shellforge/util/zipfile.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstdint>
#include <cstring>

#include "shellforge/util/error.hpp"

namespace shellforge::util {

namespace {

constexpr uint32_t local_header_sig = 0x04034b50;
constexpr uint32_t central_header_sig = 0x02014b50;
constexpr uint32_t eocd_sig = 0x06054b50;
// DOS date 1980-01-01, time 00:00:00.
constexpr uint16_t dos_time = 0;
constexpr uint16_t dos_date = (0 << 9) | (1 << 5) | 1;

void put16(std::string& out, uint16_t v) {
  out.push_back(char(v & 0xff));
  out.push_back(char((v >> 8) & 0xff));
}

void put32(std::string& out, uint32_t v) {
  put16(out, uint16_t(v & 0xffff));
  put16(out, uint16_t((v >> 16) & 0xffff));
}

uint32_t entry_crc(const std::string& data) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(data.data()),
              static_cast<uInt>(data.size()));
  return static_cast<uint32_t>(crc);
}

class Reader {
public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  uint16_t u16(size_t off) const {
    check(off, 2);
    return uint16_t(uint8_t(bytes_[off])) |
           uint16_t(uint8_t(bytes_[off + 1])) << 8;
  }
  uint32_t u32(size_t off) const {
    check(off, 4);
    return uint32_t(u16(off)) | uint32_t(u16(off + 2)) << 16;
  }
  std::string_view slice(size_t off, size_t len) const {
    check(off, len);
    return bytes_.substr(off, len);
  }
  size_t size() const { return bytes_.size(); }

private:
  void check(size_t off, size_t len) const {
    if (off + len > bytes_.size() || off + len < off) {
      throw Error(ErrorCode::MalformedArchive, "truncated archive");
    }
  }
  std::string_view bytes_;
};

}  // namespace

std::string write_zip(std::vector<ZipEntry> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const ZipEntry& a, const ZipEntry& b) { return a.path < b.path; });
  for (size_t i = 1; i < entries.size(); ++i) {
    if (entries[i].path == entries[i - 1].path) {
      throw Error(ErrorCode::MalformedArchive,
                  "duplicate entry path: " + entries[i].path);
    }
  }

  std::string out;
  std::vector<uint32_t> offsets(entries.size());
  std::vector<uint32_t> crcs(entries.size());

  for (size_t i = 0; i < entries.size(); ++i) {
    const ZipEntry& e = entries[i];
    if (e.data.size() > 0xfffffffful || e.path.size() > 0xffff) {
      throw Error(ErrorCode::MalformedArchive, "entry too large: " + e.path);
    }
    offsets[i] = uint32_t(out.size());
    crcs[i] = entry_crc(e.data);
    put32(out, local_header_sig);
    put16(out, 20);        // version needed
    put16(out, 0);         // flags
    put16(out, 0);         // method: store
    put16(out, dos_time);
    put16(out, dos_date);
    put32(out, crcs[i]);
    put32(out, uint32_t(e.data.size()));  // compressed
    put32(out, uint32_t(e.data.size()));  // uncompressed
    put16(out, uint16_t(e.path.size()));
    put16(out, 0);         // extra length
    out += e.path;
    out += e.data;
  }

  size_t central_start = out.size();
  for (size_t i = 0; i < entries.size(); ++i) {
    const ZipEntry& e = entries[i];
    put32(out, central_header_sig);
    put16(out, 20);        // version made by
    put16(out, 20);        // version needed
    put16(out, 0);         // flags
    put16(out, 0);         // method
    put16(out, dos_time);
    put16(out, dos_date);
    put32(out, crcs[i]);
    put32(out, uint32_t(e.data.size()));
    put32(out, uint32_t(e.data.size()));
    put16(out, uint16_t(e.path.size()));
    put16(out, 0);         // extra
    put16(out, 0);         // comment
    put16(out, 0);         // disk number
    put16(out, 0);         // internal attrs
    put32(out, 0);         // external attrs
    put32(out, offsets[i]);
    out += e.path;
  }
  size_t central_size = out.size() - central_start;

  put32(out, eocd_sig);
  put16(out, 0);  // disk
  put16(out, 0);  // central dir disk
  put16(out, uint16_t(entries.size()));
  put16(out, uint16_t(entries.size()));
  put32(out, uint32_t(central_size));
  put32(out, uint32_t(central_start));
  put16(out, 0);  // comment length
  return out;
}

std::vector<ZipEntry> read_zip(std::string_view bytes) {
  Reader r(bytes);
  if (r.size() < 22) {
    throw Error(ErrorCode::MalformedArchive, "shorter than EOCD record");
  }
  // Scan backwards for the EOCD signature; comments make it non-fixed.
  size_t eocd = std::string_view::npos;
  size_t limit = r.size() >= 22 + 0xffff ? r.size() - 22 - 0xffff : 0;
  for (size_t pos = r.size() - 22; ; --pos) {
    if (r.u32(pos) == eocd_sig) {
      eocd = pos;
      break;
    }
    if (pos == limit) break;
  }
  if (eocd == std::string_view::npos) {
    throw Error(ErrorCode::MalformedArchive, "missing end-of-central-directory");
  }

  uint16_t count = r.u16(eocd + 10);
  uint32_t central_size = r.u32(eocd + 12);
  uint32_t central_off = r.u32(eocd + 16);
  if (central_off + central_size > bytes.size()) {
    throw Error(ErrorCode::MalformedArchive, "central directory out of range");
  }

  std::vector<ZipEntry> entries;
  entries.reserve(count);
  size_t pos = central_off;
  for (uint16_t i = 0; i < count; ++i) {
    if (r.u32(pos) != central_header_sig) {
      throw Error(ErrorCode::MalformedArchive, "bad central directory entry");
    }
    uint16_t method = r.u16(pos + 10);
    uint32_t crc = r.u32(pos + 16);
    uint32_t csize = r.u32(pos + 20);
    uint32_t usize = r.u32(pos + 24);
    uint16_t name_len = r.u16(pos + 28);
    uint16_t extra_len = r.u16(pos + 30);
    uint16_t comment_len = r.u16(pos + 32);
    uint32_t local_off = r.u32(pos + 42);
    std::string name(r.slice(pos + 46, name_len));
    pos += 46 + name_len + extra_len + comment_len;

    if (method != 0 || csize != usize) {
      throw Error(ErrorCode::MalformedArchive,
                  "unsupported compression method for " + name);
    }
    if (r.u32(local_off) != local_header_sig) {
      throw Error(ErrorCode::MalformedArchive, "bad local header for " + name);
    }
    uint16_t lname_len = r.u16(local_off + 26);
    uint16_t lextra_len = r.u16(local_off + 28);
    size_t data_off = local_off + 30 + lname_len + lextra_len;
    ZipEntry e;
    e.path = std::move(name);
    e.data = std::string(r.slice(data_off, usize));
    if (entry_crc(e.data) != crc) {
      throw Error(ErrorCode::MalformedArchive, "CRC mismatch for " + e.path);
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

}  // namespace shellforge::util
