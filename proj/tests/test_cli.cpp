// Subprocess tests of the CLI surface: command wiring, file metadata, exit
// codes and thread-count independence.

#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include "nip/descriptor.hpp"
#include "nip/orbit_store.hpp"
#include "test_util.hpp"

#ifndef NIP_CLI_PATH
#define NIP_CLI_PATH "nip"
#endif

using namespace nip;

namespace {

int run_cli(const std::string& dir, const std::string& args) {
  std::string cmd = "cd '" + dir + "' && '" + NIP_CLI_PATH + "' " + args +
                    " >> cli_log.txt 2>&1";
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f << content;
}

void write_raw_f32(const std::string& path, const std::vector<float>& values) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f.write(reinterpret_cast<const char*>(values.data()),
          static_cast<std::streamsize>(values.size() * 4));
}

}  // namespace

TEST_CASE("convert builds a store from raw float32 files") {
  TempDir tmp;
  // shape [1][1][2][1][2]: 4 floats per orbit
  write_raw_f32(tmp.file("a.f32"), {1.0f, 2.0f, 3.0f, 4.0f});
  write_raw_f32(tmp.file("b.f32"), {5.0f, 6.0f, 7.0f, 8.0f});
  write_file(tmp.file("manifest.tsv"), "imgA\ta.f32\nimgB\tb.f32\n");

  CHECK(run_cli(tmp.path(),
                "convert --manifest manifest.tsv --out s.nipo --rot 1 "
                "--scale 1 --channels 2 --height 1 --width 2") == 0);
  OrbitStore store(tmp.file("s.nipo"));
  CHECK(store.size() == 2);
  CHECK(store.read_orbit("imgA").data == std::vector<float>{1, 2, 3, 4});
  CHECK(store.read_orbit("imgB").data == std::vector<float>{5, 6, 7, 8});

  // raw file of the wrong size is a validation failure (exit 1)
  write_raw_f32(tmp.file("short.f32"), {1.0f, 2.0f});
  write_file(tmp.file("bad.tsv"), "imgC\tshort.f32\n");
  CHECK(run_cli(tmp.path(),
                "convert --manifest bad.tsv --out t.nipo --rot 1 --scale 1 "
                "--channels 2 --height 1 --width 2") == 1);
}

TEST_CASE("validate exit code reflects store health") {
  TempDir tmp;
  CHECK(run_cli(tmp.path(),
                "synth --out-store s.nipo --out-gt gt.tsv --clusters 2 "
                "--items-per-cluster 2 --rot 2 --scale 1 --channels 4 "
                "--height 2 --width 2 --noise 0.1 --seed 3") == 0);
  CHECK(run_cli(tmp.path(), "validate --store s.nipo") == 0);

  // corrupt one payload float to a negative value
  std::fstream f(tmp.file("s.nipo"),
                 std::ios::binary | std::ios::in | std::ios::out);
  f.seekp(-4, std::ios::end);
  float bad = -2.0f;
  f.write(reinterpret_cast<const char*>(&bad), 4);
  f.close();
  CHECK(run_cli(tmp.path(), "validate --store s.nipo") == 1);
}

TEST_CASE("numeric failures exit with code 2") {
  TempDir tmp;
  REQUIRE(run_cli(tmp.path(),
                  "synth --out-store s.nipo --out-gt gt.tsv --clusters 3 "
                  "--items-per-cluster 2 --rot 2 --scale 1 --channels 8 "
                  "--height 2 --width 2 --noise 0.1 --seed 4") == 0);
  REQUIRE(run_cli(tmp.path(),
                  "pool --store s.nipo --out d.nipd --threads 1") == 0);
  CHECK(run_cli(tmp.path(),
                "fit-hash --in d.nipd --out-model m.nipr --method rbmh "
                "--bits 8 --batch 3 --epochs 50 --learning-rate 1e300 "
                "--seed 1") == 2);
}

TEST_CASE("pool output carries re-run metadata and ignores thread count") {
  TempDir tmp;
  REQUIRE(run_cli(tmp.path(),
                  "synth --out-store s.nipo --out-gt gt.tsv --clusters 4 "
                  "--items-per-cluster 3 --rot 4 --scale 2 --channels 8 "
                  "--height 3 --width 3 --noise 0.2 --seed 5") == 0);
  REQUIRE(run_cli(tmp.path(),
                  "pool --store s.nipo --out one.nipd --sequence A_S,S_T,M_R "
                  "--threads 1") == 0);
  REQUIRE(run_cli(tmp.path(),
                  "pool --store s.nipo --out four.nipd --sequence A_S,S_T,M_R "
                  "--threads 4") == 0);

  DescriptorTable one = DescriptorTable::load(tmp.file("one.nipd"));
  DescriptorTable four = DescriptorTable::load(tmp.file("four.nipd"));
  REQUIRE(one.size() == four.size());
  CHECK(one.ids() == four.ids());
  for (size_t i = 0; i < one.size(); ++i) {
    auto a = one.row(i), b = four.row(i);
    for (size_t k = 0; k < a.size(); ++k) CHECK(a[k] == b[k]);
  }

  const Metadata& meta = one.metadata();
  REQUIRE(meta.find("cmd") != nullptr);
  CHECK(*meta.find("cmd") == "pool");
  CHECK(meta.find("args") != nullptr);
  CHECK(meta.find("input.store.digest") != nullptr);
  CHECK(*meta.find("sequence") == "A_S,S_T,M_R");

  // NIP_THREADS fallback drives the worker count without changing results
  std::string env_cmd = "cd '" + std::string(tmp.path()) +
                        "' && NIP_THREADS=2 '" + NIP_CLI_PATH +
                        "' pool --store s.nipo --out env.nipd --sequence "
                        "A_S,S_T,M_R >> cli_log.txt 2>&1";
  REQUIRE(std::system(env_cmd.c_str()) == 0);
  DescriptorTable env_out = DescriptorTable::load(tmp.file("env.nipd"));
  REQUIRE(env_out.size() == one.size());
  for (size_t i = 0; i < one.size(); ++i) {
    auto a = one.row(i), b = env_out.row(i);
    for (size_t k = 0; k < a.size(); ++k) CHECK(a[k] == b[k]);
  }
}

TEST_CASE("every hasher method runs through fit-hash, hash and eval") {
  TempDir tmp;
  REQUIRE(run_cli(tmp.path(),
                  "synth --out-store s.nipo --out-gt gt.tsv --clusters 6 "
                  "--items-per-cluster 4 --rot 4 --scale 2 --channels 32 "
                  "--height 3 --width 3 --noise 0.1 --seed 6") == 0);
  REQUIRE(run_cli(tmp.path(), "pool --store s.nipo --out d.nipd --threads 1") == 0);

  struct Case {
    const char* method;
    const char* extra;
    uint32_t bits;
  };
  for (const Case& c :
       {Case{"rbmh", "--batch 8 --epochs 10 --learning-rate 0.1", 16},
        Case{"lsh", "", 16},
        Case{"pcahash", "", 8},
        Case{"itq", "--itq-iterations 10", 8},
        Case{"threshold", "--threshold-mode median", 32}}) {
    std::string model = std::string("m_") + c.method + ".bin";
    std::string hashes = std::string("h_") + c.method + ".niph";
    std::string cmd = "fit-hash --in d.nipd --out-model " + model +
                      " --method " + c.method + " --bits " +
                      std::to_string(c.bits) + " --seed 2 " + c.extra;
    CAPTURE(c.method);
    REQUIRE(run_cli(tmp.path(), cmd) == 0);
    REQUIRE(run_cli(tmp.path(), "hash --in d.nipd --model " + model + " --out " +
                                    hashes + " --threads 1") == 0);
    HashIndex idx = HashIndex::load(tmp.file(hashes));
    CHECK(idx.size() == 24);
    CHECK(idx.n_bits() == c.bits);
    CHECK(run_cli(tmp.path(), "eval --in " + hashes + " --gt gt.tsv --ukb") == 0);
    CHECK(run_cli(tmp.path(), "stats --in " + hashes + " --out bits.csv") == 0);
  }
  // threshold hashing keeps the descriptor dimensionality as its code size
  HashIndex thr = HashIndex::load(tmp.file("h_threshold.niph"));
  CHECK(thr.n_bits() == 32);
}

TEST_CASE("128-bit rbmh codes flow through the pipeline") {
  TempDir tmp;
  REQUIRE(run_cli(tmp.path(),
                  "synth --out-store s.nipo --out-gt gt.tsv --clusters 8 "
                  "--items-per-cluster 2 --rot 2 --scale 1 --channels 512 "
                  "--height 2 --width 2 --noise 0.1 --seed 8") == 0);
  REQUIRE(run_cli(tmp.path(), "pool --store s.nipo --out d.nipd --threads 1") == 0);
  DescriptorTable d = DescriptorTable::load(tmp.file("d.nipd"));
  CHECK(d.dim() == 512);
  REQUIRE(run_cli(tmp.path(),
                  "fit-hash --in d.nipd --out-model m.nipr --method rbmh "
                  "--bits 128 --batch 8 --epochs 5 --seed 9") == 0);
  REQUIRE(run_cli(tmp.path(),
                  "hash --in d.nipd --model m.nipr --out h.niph --threads 1") == 0);
  CHECK(HashIndex::load(tmp.file("h.niph")).n_bits() == 128);
  CHECK(run_cli(tmp.path(), "eval --in h.niph --gt gt.tsv --out rep.tsv") == 0);
}

TEST_CASE("fit-pca can apply a previously fitted model") {
  TempDir tmp;
  REQUIRE(run_cli(tmp.path(),
                  "synth --out-store s.nipo --out-gt gt.tsv --clusters 5 "
                  "--items-per-cluster 4 --rot 3 --scale 2 --channels 24 "
                  "--height 2 --width 2 --noise 0.15 --seed 10") == 0);
  REQUIRE(run_cli(tmp.path(), "pool --store s.nipo --out d.nipd --threads 1") == 0);
  REQUIRE(run_cli(tmp.path(),
                  "fit-pca --in d.nipd --out-model pca.nipm --out-dim 8 "
                  "--out-desc direct.nipd") == 0);
  REQUIRE(run_cli(tmp.path(),
                  "fit-pca --in d.nipd --model-in pca.nipm "
                  "--out-desc reapplied.nipd") == 0);
  DescriptorTable direct = DescriptorTable::load(tmp.file("direct.nipd"));
  DescriptorTable reapplied = DescriptorTable::load(tmp.file("reapplied.nipd"));
  REQUIRE(direct.size() == reapplied.size());
  CHECK(direct.dim() == 8);
  for (size_t i = 0; i < direct.size(); ++i) {
    auto a = direct.row(i), b = reapplied.row(i);
    for (size_t k = 0; k < a.size(); ++k) CHECK(a[k] == b[k]);
  }
}

TEST_CASE("eval rejects files that are neither descriptors nor hashes") {
  TempDir tmp;
  write_file(tmp.file("junk.bin"), "not a container");
  write_file(tmp.file("gt.tsv"), "q\ta\n");
  CHECK(run_cli(tmp.path(), "eval --in junk.bin --gt gt.tsv") == 1);
}
