#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace shellforge::util {

struct ZipEntry {
  std::string path;
  std::string data;
};

// Deterministic ZIP writer: entries sorted by path, STORE method only,
// timestamps pinned to the DOS epoch (1980-01-01), no extra fields or
// comments. Two calls with the same entries produce identical bytes.
std::string write_zip(std::vector<ZipEntry> entries);

// Reads an archive produced by write_zip (or any STORE-method ZIP).
// Throws Error{MalformedArchive} on structural damage, CRC mismatch,
// or unsupported compression.
std::vector<ZipEntry> read_zip(std::string_view bytes);

}  // namespace shellforge::util
