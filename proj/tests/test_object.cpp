#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <set>

#include "nearv/object.hpp"

using namespace nearv;

namespace {

ObjectUnit random_unit(u32 seed) {
  std::mt19937 g(seed);
  auto pick = [&](u32 n) { return g() % n; };

  ObjectUnit u;
  const char* names[] = {".text", ".data", ".rodata", ".bss", ".data2"};
  u32 nsec = 1 + pick(5);
  for (u32 i = 0; i < nsec; i++) {
    Section s;
    s.name = names[i];
    s.kind = static_cast<SectionKind>(pick(4));
    if (s.name == ".text") s.kind = SectionKind::Code;
    s.align = 1u << pick(4);
    if (s.kind == SectionKind::BSS) {
      s.bss_size = pick(64);
    } else {
      u32 len = s.kind == SectionKind::Code ? 4 * pick(8) : pick(24);
      for (u32 b = 0; b < len; b++) s.bytes.push_back(static_cast<u8>(g()));
    }
    u.sections.push_back(std::move(s));
  }
  u32 nsym = pick(6);
  for (u32 i = 0; i < nsym; i++) {
    const Section& sec = u.sections[pick(nsec)];
    Symbol s;
    s.name = "sym" + std::to_string(i);
    s.section = sec.name;
    if (sec.size() > 0) {
      s.offset = pick(sec.size());
      s.size = pick(sec.size() - s.offset + 1);
    }
    s.scope = pick(2) ? SymScope::Global : SymScope::Local;
    u.symbols.push_back(std::move(s));
  }
  u.symbols.push_back(Symbol{"ext", kUndefSection, 0, 0, SymScope::Global});
  u32 nrel = pick(10);
  std::set<std::pair<std::string, u32>> used_sites;
  for (u32 i = 0; i < nrel; i++) {
    const Section& rsec = u.sections[pick(nsec)];
    Relocation r;
    r.section = rsec.name;
    r.offset = rsec.kind == SectionKind::Code ? pick(16) * 4 : pick(64);
    if (!used_sites.insert({r.section, r.offset}).second) continue;  // one patch per site
    r.kind = static_cast<RelocKind>(pick(8));
    r.symbol = u.symbols[pick(static_cast<u32>(u.symbols.size()))].name;
    r.addend = static_cast<i32>(g()) % 1000;
    if (pick(3) == 0) r.pair_id = pick(100);
    u.relocations.push_back(std::move(r));
  }
  u.canonicalize();
  return u;
}

}  // namespace

TEST_CASE("empty unit serializes to the header line only") {
  CHECK(write_object(ObjectUnit{}) == "NEAROBJ 1\n");
}

TEST_CASE("serialization is deterministic") {
  ObjectUnit u = random_unit(7);
  CHECK(write_object(u) == write_object(u));

  // field order in memory must not matter
  ObjectUnit shuffled = u;
  std::reverse(shuffled.sections.begin(), shuffled.sections.end());
  std::reverse(shuffled.symbols.begin(), shuffled.symbols.end());
  std::reverse(shuffled.relocations.begin(), shuffled.relocations.end());
  CHECK(write_object(shuffled) == write_object(u));
}

TEST_CASE("round-trip equality over randomized units") {
  for (u32 seed = 0; seed < 200; seed++) {
    CAPTURE(seed);
    ObjectUnit u = random_unit(seed);
    ObjectUnit back = read_object(write_object(u));
    REQUIRE(back == u);
    REQUIRE(write_object(back) == write_object(u));
  }
}

TEST_CASE("round-trip covers all eight relocation kinds") {
  ObjectUnit u;
  Section s;
  s.name = ".text";
  s.kind = SectionKind::Code;
  s.bytes.assign(32, 0);
  u.sections.push_back(s);
  u.symbols.push_back(Symbol{"g", kUndefSection, 0, 0, SymScope::Global});
  for (int k = 0; k < 8; k++)
    u.relocations.push_back(
        Relocation{".text", static_cast<u32>(4 * k), static_cast<RelocKind>(k), "g", -3, {}});
  u.relocations[0].pair_id = 42;
  u.relocations[1].pair_id = 42;
  u.canonicalize();
  CHECK(read_object(write_object(u)) == u);
}

TEST_CASE("version gate") {
  CHECK_NOTHROW(read_object("NEAROBJ 1\n"));
  try {
    read_object("NEAROBJ 2\n");
    FAIL("expected VersionMismatch");
  } catch (const ToolError& e) {
    CHECK(e.code() == Errc::VersionMismatch);
  }
}

TEST_CASE("malformed input reports the line") {
  const char* text =
      "NEAROBJ 1\n"
      "section .text Code 4 -\n"
      "reloc .text 0 FOO g 0\n";
  try {
    read_object(text);
    FAIL("expected ParseError");
  } catch (const ToolError& e) {
    CHECK(e.code() == Errc::ParseError);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }

  CHECK_THROWS_AS(read_object("bogus\n"), ToolError);
  CHECK_THROWS_AS(read_object(""), ToolError);
  CHECK_THROWS_AS(read_object("NEAROBJ 1\nsection .x Data 3 -\n"), ToolError);   // align not pow2
  CHECK_THROWS_AS(read_object("NEAROBJ 1\nsection .x Data 4 abc\n"), ToolError); // odd hex
  CHECK_THROWS_AS(read_object("NEAROBJ 1\nsymbol a .gone 0 0 Local\n"), ToolError);
}

TEST_CASE("code sections must stay word-granular") {
  CHECK_THROWS_AS(read_object("NEAROBJ 1\nsection .text Code 4 1234567890\n"), ToolError);
  CHECK_THROWS_AS(
      read_object("NEAROBJ 1\nsection .text Code 4 00000013\nsymbol f .text 0 4 Local\n"
                  "reloc .text 2 BR13 f 0\n"),
      ToolError);
}
