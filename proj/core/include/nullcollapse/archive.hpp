#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "nullcollapse/bondi.hpp"

namespace nullcollapse::archive {

// Binary layout (all integers and doubles little-endian):
//   header : "NCARCH01" | u32 version | u32 field count
//   record : "SLCE" | f64 u | u64 n | field arrays, each n f64, in field_names() order
//            | u64 FNV-1a checksum of everything from the tag to the last array
// The index file (<archive>.json) lists every record's u, byte offset and size.

inline constexpr std::uint32_t kFormatVersion = 1;

const std::vector<std::string>& field_names();

struct RecordInfo {
  double u = 0.0;
  std::uint64_t offset = 0;
  std::uint64_t points = 0;
};

struct Index {
  std::uint32_t version = kFormatVersion;
  std::vector<RecordInfo> records;
  std::map<std::string, std::string> metadata;
};

std::filesystem::path index_path(const std::filesystem::path& archive);

// Writes the archive and its index next to it.
Index write_archive(const std::filesystem::path& path, const std::vector<bondi::SliceState>& slices,
                    const std::map<std::string, std::string>& metadata = {});

// Reads every record, checking framing and checksums. Throws MalformedData on
// any inconsistency and IoError when the file cannot be opened.
std::vector<bondi::SliceState> read_archive(const std::filesystem::path& path);

// Reads the JSON index (see index_path).
Index read_index(const std::filesystem::path& index_file);

// Encoded image of the archive, as written to disk.
std::vector<unsigned char> encode(const std::vector<bondi::SliceState>& slices,
                                  std::vector<RecordInfo>* records = nullptr);
std::vector<bondi::SliceState> decode(const std::vector<unsigned char>& bytes);

// 64-bit FNV-1a, the record checksum; also used for output manifests.
std::uint64_t fnv1a(const unsigned char* data, std::size_t size);
std::uint64_t file_checksum(const std::filesystem::path& path);

}  // namespace nullcollapse::archive
