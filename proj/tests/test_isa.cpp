#include "doctest.h"

#include "ganax/isa.hpp"
#include "ganax/rng.hpp"

using namespace ganax;
using namespace ganax::isa;

namespace {

GlobalUop random_uop(SplitMix64& rng) {
  switch (rng.below(4)) {
    case 0:
      return SimdExec{static_cast<ExecOp>(rng.below(kNumExecOps))};
    case 1: {
      AccessUop a;
      a.kind = static_cast<AccessKind>(rng.range(1, 3));
      a.pv.broadcast = rng.below(4) == 0;
      a.pv.idx = a.pv.broadcast ? 0 : static_cast<std::uint8_t>(rng.below(kNumPvs));
      a.gen = static_cast<std::uint8_t>(rng.below(3));
      if (a.kind == AccessKind::Cfg) {
        a.reg = static_cast<CfgReg>(rng.below(5));
        a.imm = static_cast<std::uint16_t>(rng.below(0x10000));
      }
      return a;
    }
    case 2: {
      MimdLd ld;
      ld.pv.broadcast = rng.below(4) == 0;
      ld.pv.idx = ld.pv.broadcast ? 0 : static_cast<std::uint8_t>(rng.below(kNumPvs));
      ld.imm = static_cast<std::uint16_t>(rng.below(0x10000));
      return ld;
    }
    default: {
      MimdExe m;
      for (auto& i : m.idx)
        i = static_cast<std::uint8_t>(rng.below(kNumExecOps));
      return m;
    }
  }
}

UopProgram random_program(SplitMix64& rng, int max_len = 64) {
  auto p = make_program_with_canonical_image();
  const int n = rng.range(0, max_len);
  for (int i = 0; i < n; ++i) p.global_stream.push_back(random_uop(rng));
  return p;
}

}  // namespace

TEST_CASE("word encoding matches the documented packing") {
  SUBCASE("mimd.exe with all indices 3") {
    MimdExe m;
    m.idx.fill(3);
    auto w = encode(m);
    CHECK(w.mode == 1);
    CHECK(w.payload == 0x3333333333333333ull);
  }
  SUBCASE("simd broadcast of mac puts the opcode in the payload") {
    auto w = encode(SimdExec{ExecOp::Mac});
    CHECK(w.mode == 0);
    CHECK(((w.payload >> 4) & 0xf) == 3);
  }
  SUBCASE("all-zero mimd.exe") {
    MimdExe m;
    auto w = encode(m);
    CHECK(w.mode == 1);
    CHECK(w.payload == 0);
  }
}

TEST_CASE("decode(encode(u)) == u over randomized uops") {
  SplitMix64 rng(101);
  for (int i = 0; i < 2000; ++i) {
    auto u = random_uop(rng);
    CHECK(decode(encode(u)) == u);
  }
}

TEST_CASE("decode rejects reserved encodings") {
  CHECK_THROWS_AS(decode({0, 0xfull}), ParseError);          // reserved kind
  CHECK_THROWS_AS(decode({0, (15ull << 4)}), ParseError);    // reserved opcode
  CHECK_THROWS_AS(decode({0, 1ull | (1ull << 40)}), ParseError);
  CHECK_THROWS_AS(decode({2, 0}), ParseError);               // bad mode
  CHECK_NOTHROW(decode({1, 0xffffffffffffffffull}));         // any indices ok
}

TEST_CASE("assembly round-trips") {
  SUBCASE("spec'd mnemonic forms parse") {
    auto p = assemble(".slot * 3 mac\n"
                      "access.cfg %pv0, %ag1, %step, 2\n"
                      "mimd.exe 3,3,3,3,3,3,3,3,3,3,3,3,3,3,3,3\n");
    REQUIRE(p.global_stream.size() == 2);
    auto a = std::get<AccessUop>(p.global_stream[0]);
    CHECK(a.kind == AccessKind::Cfg);
    CHECK(a.pv.idx == 0);
    CHECK(a.gen == 1);
    CHECK(a.reg == CfgReg::Step);
    CHECK(a.imm == 2);
  }
  SUBCASE("split-index mimd.exe") {
    auto p = assemble(".slot * 1 add\n.slot * 2 mul\n"
                      "mimd.exe 1,1,1,1,1,1,1,1,2,2,2,2,2,2,2,2\n");
    auto m = std::get<MimdExe>(p.global_stream[0]);
    CHECK(m.idx[0] == 1);
    CHECK(m.idx[15] == 2);
  }
  SUBCASE("empty program is valid") {
    auto p = assemble("# nothing here\n\n");
    CHECK(p.global_stream.empty());
  }
  SUBCASE("assemble(disassemble(p)) == p on random programs") {
    SplitMix64 rng(202);
    for (int i = 0; i < 200; ++i) {
      auto p = random_program(rng);
      CHECK(assemble(disassemble(p)) == p);
    }
  }
}

TEST_CASE("assembly errors carry line numbers") {
  CHECK_THROWS_WITH_AS(assemble("frobnicate\n"), doctest::Contains("line 1"),
                       ParseError);
  CHECK_THROWS_WITH_AS(assemble("mac\nmimd.ld %pv99, %repeat, 1\n"),
                       doctest::Contains("line 2"), ParseError);
  // Immediate overflow.
  CHECK_THROWS_AS(assemble("access.cfg %pv0, %ag0, %end, 65536\n"), ParseError);
  // Local index >= 16.
  CHECK_THROWS_AS(assemble("mimd.exe 16,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0\n"),
                  ParseError);
  // MIMD index referencing an empty slot.
  CHECK_THROWS_AS(assemble("mimd.exe 9,9,9,9,9,9,9,9,9,9,9,9,9,9,9,9\n"),
                  UsageError);
}

TEST_CASE("binary image round-trips with page alignment") {
  SplitMix64 rng(303);
  for (int i = 0; i < 100; ++i) {
    auto p = random_program(rng, 100);
    auto bytes = to_image(p);
    // Header 12 + local table 256 + page-aligned words.
    CHECK((bytes.size() - 12 - 256) % (kGlobalPageWords * 9) == 0);
    CHECK(from_image(bytes) == p);
  }
}

TEST_CASE("corrupt images fail with an offset") {
  auto p = make_program_with_canonical_image();
  p.global_stream.push_back(SimdExec{ExecOp::Mac});
  auto bytes = to_image(p);

  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_WITH_AS(from_image(bad), doctest::Contains("offset 0"), ParseError);

  bad = bytes;
  bad.pop_back();
  CHECK_THROWS_AS(from_image(bad), ParseError);

  bad = bytes;
  bad[12 + 256] = 7;  // mode byte of word 0
  CHECK_THROWS_WITH_AS(from_image(bad), doctest::Contains("offset 268"), ParseError);
}

TEST_CASE("program helpers") {
  auto p = make_program_with_canonical_image();
  CHECK(p.local_images_identical());
  CHECK(p.max_local_slots_used() == kNumExecOps);
  CHECK(p.pages() == 0);
  for (int i = 0; i < 33; ++i) p.global_stream.push_back(SimdExec{ExecOp::Mac});
  CHECK(p.pages() == 2);
  p.local_images[3][9] = ExecOp::Act;
  CHECK(!p.local_images_identical());
}
