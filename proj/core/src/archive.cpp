#include "nullcollapse/archive.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "json.hpp"
#include "nullcollapse/errors.hpp"

namespace nullcollapse::archive {

namespace {

constexpr std::array<char, 8> kMagic{'N', 'C', 'A', 'R', 'C', 'H', '0', '1'};
constexpr std::array<char, 4> kTag{'S', 'L', 'C', 'E'};
constexpr std::size_t kHeaderBytes = 16;

using Member = std::vector<double> bondi::SliceState::*;

const std::array<Member, 8>& members() {
  static const std::array<Member, 8> m{
      &bondi::SliceState::label, &bondi::SliceState::r,    &bondi::SliceState::phi,
      &bondi::SliceState::theta, &bondi::SliceState::zeta, &bondi::SliceState::m,
      &bondi::SliceState::lambda, &bondi::SliceState::nu};
  return m;
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void put_f64(std::vector<unsigned char>& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class Reader {
 public:
  explicit Reader(const std::vector<unsigned char>& b) : b_(b) {}
  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == b_.size(); }
  void need(std::size_t n, const char* what) const {
    if (b_.size() - pos_ < n) throw MalformedData(std::string("archive truncated in ") + what);
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }
  bool match(const char* p, std::size_t n) {
    need(n, "tag");
    const bool ok = std::memcmp(b_.data() + pos_, p, n) == 0;
    pos_ += n;
    return ok;
  }
  const unsigned char* data() const { return b_.data(); }

 private:
  const std::vector<unsigned char>& b_;
  std::size_t pos_ = 0;
};

}  // namespace

std::uint64_t fnv1a(const unsigned char* p, std::size_t n) {
  std::uint64_t h = 14695981039346656037ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t file_checksum(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return fnv1a(bytes.data(), bytes.size());
}

const std::vector<std::string>& field_names() {
  static const std::vector<std::string> names{"label", "r",    "phi",    "theta",
                                              "zeta",  "m",    "lambda", "nu"};
  return names;
}

std::filesystem::path index_path(const std::filesystem::path& archive) {
  auto p = archive;
  p += ".json";
  return p;
}

std::vector<unsigned char> encode(const std::vector<bondi::SliceState>& slices,
                                  std::vector<RecordInfo>* records) {
  std::vector<unsigned char> out(kMagic.begin(), kMagic.end());
  put_u32(out, kFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(members().size()));
  for (const auto& s : slices) {
    const std::size_t n = s.size();
    for (auto mp : members()) {
      if ((s.*mp).size() != n) throw MalformedData("archive: slice fields have unequal lengths");
    }
    const std::size_t start = out.size();
    out.insert(out.end(), kTag.begin(), kTag.end());
    put_f64(out, s.u);
    put_u64(out, n);
    for (auto mp : members()) {
      for (double v : s.*mp) put_f64(out, v);
    }
    put_u64(out, fnv1a(out.data() + start, out.size() - start));
    if (records) records->push_back({s.u, start, n});
  }
  return out;
}

std::vector<bondi::SliceState> decode(const std::vector<unsigned char>& bytes) {
  Reader rd(bytes);
  if (!rd.match(kMagic.data(), kMagic.size())) throw MalformedData("archive: bad magic");
  const auto version = rd.u32("header");
  if (version != kFormatVersion) {
    throw MalformedData("archive: unsupported version " + std::to_string(version));
  }
  const auto nfields = rd.u32("header");
  if (nfields != members().size()) throw MalformedData("archive: unexpected field count");

  std::vector<bondi::SliceState> slices;
  while (!rd.done()) {
    const std::size_t start = rd.pos();
    if (!rd.match(kTag.data(), kTag.size())) {
      throw MalformedData("archive: bad record tag at byte " + std::to_string(start));
    }
    bondi::SliceState s;
    s.u = rd.f64("record header");
    const auto n = rd.u64("record header");
    if (n > bytes.size() / 8) throw MalformedData("archive truncated in record body");
    rd.need(n * 8 * nfields + 8, "record body");
    s.resize(static_cast<std::size_t>(n));
    for (auto mp : members()) {
      for (auto& v : s.*mp) v = rd.f64("record body");
    }
    const std::uint64_t expect = fnv1a(rd.data() + start, rd.pos() - start);
    if (rd.u64("checksum") != expect) {
      throw MalformedData("archive: checksum mismatch in record at byte " + std::to_string(start));
    }
    slices.push_back(std::move(s));
  }
  return slices;
}

Index write_archive(const std::filesystem::path& path, const std::vector<bondi::SliceState>& slices,
                    const std::map<std::string, std::string>& metadata) {
  Index idx;
  idx.metadata = metadata;
  const auto bytes = encode(slices, &idx.records);
  {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write archive " + path.string());
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("short write on " + path.string());
  }
  nlohmann::ordered_json j;
  j["format"] = "nullcollapse-archive";
  j["version"] = idx.version;
  j["fields"] = field_names();
  j["header_bytes"] = kHeaderBytes;
  j["metadata"] = idx.metadata;
  auto& recs = j["records"] = nlohmann::ordered_json::array();
  for (const auto& r : idx.records) recs.push_back({{"u", r.u}, {"offset", r.offset}, {"points", r.points}});
  std::ofstream f(index_path(path), std::ios::trunc);
  if (!f) throw IoError("cannot write index " + index_path(path).string());
  f << j.dump(2) << '\n';
  return idx;
}

std::vector<bondi::SliceState> read_archive(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open archive " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode(bytes);
}

Index read_index(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open index " + path.string());
  Index idx;
  try {
    const auto j = nlohmann::json::parse(f);
    if (j.at("format").get<std::string>() != "nullcollapse-archive") {
      throw MalformedData("index: wrong format tag in " + path.string());
    }
    idx.version = j.at("version").get<std::uint32_t>();
    for (const auto& r : j.at("records")) {
      idx.records.push_back({r.at("u").get<double>(), r.at("offset").get<std::uint64_t>(),
                             r.at("points").get<std::uint64_t>()});
    }
    if (j.contains("metadata")) idx.metadata = j["metadata"].get<std::map<std::string, std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw MalformedData("index " + path.string() + ": " + e.what());
  }
  return idx;
}

}  // namespace nullcollapse::archive
