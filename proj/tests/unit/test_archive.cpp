#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "nullcollapse/archive.hpp"
#include "nullcollapse/errors.hpp"
#include "nullcollapse/initial_data.hpp"

using namespace nullcollapse;
namespace fs = std::filesystem;

namespace {

std::vector<bondi::SliceState> sample_run() {
  bondi::RunConfig c;
  c.resolution = 32;
  c.u_max = 0.2;
  c.stop_on_dispersal = false;
  return bondi::run(gaussian_pulse(Domain::r_half_line, 0.2, 0.5, 0.1, 1.0), c).archive;
}

fs::path temp_file(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "nullcollapse_archive_test";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("archive round trip is bit exact") {
  const auto slices = sample_run();
  const auto path = temp_file("round.ncar");
  const auto index = archive::write_archive(path, slices, {{"resolution", "32"}});
  CHECK(index.records.size() == slices.size());
  const auto back = archive::read_archive(path);
  REQUIRE(back.size() == slices.size());
  for (std::size_t k = 0; k < slices.size(); ++k) {
    CHECK(back[k].u == slices[k].u);
    CHECK(back[k].r == slices[k].r);
    CHECK(back[k].theta == slices[k].theta);
    CHECK(back[k].label == slices[k].label);
  }
  const auto idx = archive::read_index(archive::index_path(path));
  CHECK(idx.metadata.at("resolution") == "32");
  CHECK(idx.records.back().u == slices.back().u);
}

TEST_CASE("corrupted and truncated archives are rejected") {
  auto bytes = archive::encode(sample_run());
  SUBCASE("flipped byte") {
    bytes[bytes.size() / 2] ^= 0x5a;
    CHECK_THROWS_AS(archive::decode(bytes), MalformedData);
  }
  SUBCASE("truncated") {
    bytes.resize(bytes.size() - 9);
    CHECK_THROWS_AS(archive::decode(bytes), MalformedData);
  }
  SUBCASE("bad magic") {
    bytes[0] = 'X';
    CHECK_THROWS_AS(archive::decode(bytes), MalformedData);
  }
  CHECK_THROWS_AS(archive::read_archive("/nonexistent/run.ncar"), IoError);
}

TEST_CASE("checksums") {
  const unsigned char empty = 0;
  CHECK(archive::fnv1a(&empty, 0) == 0xcbf29ce484222325ULL);
  const unsigned char a = 'a';
  CHECK(archive::fnv1a(&a, 1) == 0xaf63dc4c8601ec8cULL);
  const auto path = temp_file("sum.txt");
  std::ofstream(path) << "a";
  CHECK(archive::file_checksum(path) == 0xaf63dc4c8601ec8cULL);
}
