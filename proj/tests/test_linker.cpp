#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "nearv/assembler.hpp"
#include "nearv/emulator.hpp"
#include "nearv/linker.hpp"
#include "oracle.hpp"

using namespace nearv;

namespace {

MemoryMap fragmented_map() {
  return MemoryMap{0x08000000, 0x100000, 0x20000000, 0x100000, false};
}

MemoryMap contiguous_map() {
  return MemoryMap{0x10000000, 0x100000, 0x10100000, 0x100000, true};
}

NearPolicy single_policy(u32 threshold, bool near_ram = true, bool near_rom = false) {
  return NearPolicy{Variant::SingleRange128K, threshold, near_ram, near_rom};
}

u32 sym(const Image& img, const std::string& name) {
  auto it = img.symbols.find(name);
  REQUIRE(it != img.symbols.end());
  return it->second;
}

u32 reg_of(const Image& img, const std::string& name) {
  for (const auto& [n, v] : img.reg_init)
    if (n == name) return v;
  FAIL("register ", name, " not initialized");
  return 0;
}

std::vector<ObjectUnit> asm1(const char* src, Variant v = Variant::SingleRange128K) {
  return {assemble(src, v)};
}

}  // namespace

TEST_CASE("threshold splits small symbols near, large symbols far") {
  const char* src =
      ".data\n"
      "small4: .word 1\n"
      "small8: .word 2, 3\n"
      "big: .space 200\n"
      ".text\n"
      "ebreak\n";
  auto r = link(asm1(src), fragmented_map(), single_policy(64), RelaxMode::Near);
  u32 gp = reg_of(r.image, "gp");
  // near symbols pack at the RAM base, smallest first
  CHECK(sym(r.image, "small4") == 0x20000000);
  CHECK(sym(r.image, "small8") == 0x20000004);
  CHECK(sym(r.image, "big") >= 0x2000000c);
  CHECK(gp == 0x20000000 + 65536);
  CHECK(r.stats.near_ram_used == 12);
  CHECK(is_near_reachable(sym(r.image, "small4"), gp, Variant::SingleRange128K));
}

TEST_CASE("near window capacity: 40000 4-byte symbols fill exactly 32768 slots") {
  // built directly as a unit; an assembly source this size would be slow to parse
  ObjectUnit u;
  Section data;
  data.name = ".data";
  data.kind = SectionKind::Data;
  data.align = 4;
  data.bytes.assign(160000, 0);
  u.sections.push_back(data);
  Section text;
  text.name = ".text";
  text.kind = SectionKind::Code;
  text.bytes = {0x73, 0x00, 0x10, 0x00};  // ebreak
  u.sections.push_back(text);
  for (int i = 0; i < 40000; i++) {
    char name[16];
    std::snprintf(name, sizeof name, "v%05d", i);
    u.symbols.push_back(Symbol{name, ".data", static_cast<u32>(4 * i), 4, SymScope::Local});
  }
  u.canonicalize();

  ImagePlan plan = layout({u}, fragmented_map(), single_policy(16), RelaxMode::Near);
  int near_count = 0;
  for (const auto& ps : plan.symbols)
    if (ps.near_base) near_count++;
  // independent capacity oracle: uniform 4-byte atoms, no padding
  int expect = 0;
  u32 used = 0;
  while (used + 4 <= 131072) {
    used += 4;
    expect++;
  }
  CHECK(expect == 32768);
  CHECK(near_count == expect);
  CHECK(plan.near_ram_used == 131072);
}

TEST_CASE("policy gates: near_rom off keeps rodata far") {
  const char* src =
      ".rodata\n"
      "c: .word 5\n"
      ".data\n"
      "v: .word 6\n"
      ".text\n"
      "ebreak\n";
  auto r = link(asm1(src), fragmented_map(), single_policy(64, true, false), RelaxMode::Near);
  ImagePlan plan = layout(asm1(src), fragmented_map(), single_policy(64, true, false));
  for (const auto& ps : plan.symbols)
    if (ps.name == "c") CHECK(!ps.near_base.has_value());
  CHECK(r.stats.near_rom_used == 0);
}

TEST_CASE("single-variant RAM&ROM needs a contiguous map") {
  const char* src =
      ".rodata\n"
      "c: .word 5\n"
      ".data\n"
      "v: .word 6\n"
      ".text\n"
      "lw a0, c\n"
      "lw a1, v\n"
      "ebreak\n";

  // fragmented: diagnostic, rodata pair stays
  auto frag = link(asm1(src), fragmented_map(), single_policy(64, true, true), RelaxMode::Near);
  CHECK(frag.stats.relax_count == 1);
  CHECK(!frag.stats.diagnostics.empty());

  // contiguous: rodata packs at the top of ROM, both pairs relax
  auto cont = link(asm1(src), contiguous_map(), single_policy(64, true, true), RelaxMode::Near);
  CHECK(cont.stats.relax_count == 2);
  CHECK(cont.stats.diagnostics.empty());
  u32 c_addr = sym(cont.image, "c");
  CHECK(c_addr < 0x10100000);
  CHECK(c_addr >= 0x10100000 - 64);
  u32 gp = reg_of(cont.image, "gp");
  CHECK(gp == c_addr + 65536);
}

TEST_CASE("dual variant anchors t0 and t1 and leaves gp alone") {
  const char* src =
      ".rodata\n"
      "c: .word 5\n"
      ".data\n"
      "v: .word 6\n"
      ".text\n"
      "lw a0, c\n"
      "lw a1, v\n"
      "ebreak\n";
  NearPolicy pol{Variant::DualRange64K, 64, true, true};
  auto r = link(asm1(src), fragmented_map(), pol, RelaxMode::Near);
  CHECK(r.stats.relax_count == 2);
  CHECK(reg_of(r.image, "t0") == 0x20000000 + 32768);
  u32 t1 = reg_of(r.image, "t1");
  CHECK(t1 == sym(r.image, "c") + 32768);
  for (const auto& [n, v] : r.image.reg_init) CHECK(n != "gp");

  // the rewritten rodata load selects the t1 window in bit 15
  MachineState st = load_image(r.image);
  RunResult res = run(st, 100);
  CHECK(res.outcome == RunOutcome::Halted);
  CHECK(st.x[10] == 5);
  CHECK(st.x[11] == 6);
}

TEST_CASE("relaxation deletes one word per in-window pair") {
  const char* src =
      ".data\n"
      "g: .word 7\n"
      ".text\n"
      "lw a0, g\n"
      "ebreak\n";
  auto base = link(asm1(src), fragmented_map(), single_policy(64), RelaxMode::Off);
  auto rel = link(asm1(src), fragmented_map(), single_policy(64), RelaxMode::Near);
  CHECK(base.stats.relax_count == 0);
  CHECK(rel.stats.relax_count == 1);
  CHECK(rel.image.code_size_bytes == base.image.code_size_bytes - 4);

  // the near word decodes to nlw a0 with the right offset
  const Blob* code = nullptr;
  for (const auto& b : rel.image.blobs)
    if (b.addr == 0x08000000) code = &b;
  REQUIRE(code != nullptr);
  u32 w = code->bytes[0] | code->bytes[1] << 8 | code->bytes[2] << 16 | code->bytes[3] << 24;
  Instruction in = decode(w, Variant::SingleRange128K);
  CHECK(in.mnemonic == Mnemonic::Nlw);
  CHECK(in.rd == Reg{10});
  CHECK(in.imm == static_cast<i32>(sym(rel.image, "g") - reg_of(rel.image, "gp")));
}

TEST_CASE("out-of-window symbols keep their two-instruction sequence") {
  // symbol bigger than the threshold stays far and sits past the window end
  const char* src =
      ".data\n"
      "pad: .space 140000\n"
      "g: .word 7\n"
      "tail: .space 96\n"
      ".size g, 100\n"
      ".text\n"
      "lw a0, g\n"
      "ebreak\n";
  auto r = link(asm1(src), fragmented_map(), single_policy(64), RelaxMode::Near);
  CHECK(r.stats.relax_count == 0);
  CHECK(!is_near_reachable(sym(r.image, "g"), reg_of(r.image, "gp"), Variant::SingleRange128K));

  // and the image still runs correctly
  MachineState st = load_image(r.image);
  CHECK(run(st, 100).outcome == RunOutcome::Halted);
  CHECK(st.x[10] == 7);
}

TEST_CASE("la address formation is never rewritten") {
  const char* src =
      ".data\n"
      "g: .word 7\n"
      ".text\n"
      "la a0, g\n"
      "lw a1, 0(a0)\n"
      "ebreak\n";
  auto r = link(asm1(src), fragmented_map(), single_policy(64), RelaxMode::Near);
  CHECK(r.stats.relax_count == 0);
  CHECK(r.image.code_size_bytes == 16);
  MachineState st = load_image(r.image);
  CHECK(run(st, 100).outcome == RunOutcome::Halted);
  CHECK(st.x[10] == sym(r.image, "g"));
  CHECK(st.x[11] == 7);
}

TEST_CASE("hi/lo resolution uses +0x800 rounding") {
  // oracle route: random addresses, lui+addi reconstruction must be exact
  std::mt19937 g(99);
  for (int i = 0; i < 2000; i++) {
    u32 addr = g();
    u32 hi;
    i32 lo;
    oracle::hi_lo_split(addr, &hi, &lo);
    CHECK(static_cast<u32>((hi << 12) + lo) == addr);
  }

  // end-to-end: a far symbol at ram_base+0x800 resolves through lui 0x20001, lo -2048
  const char* src =
      ".data\n"
      "pad: .space 2048\n"
      "g: .word 0x12345678\n"
      ".text\n"
      "lw a0, g\n"
      "ebreak\n";
  auto r = link(asm1(src), fragmented_map(), single_policy(0), RelaxMode::Near);
  CHECK(sym(r.image, "g") == 0x20000800);
  MachineState st = load_image(r.image);
  CHECK(run(st, 100).outcome == RunOutcome::Halted);
  CHECK(st.x[10] == 0x12345678);

  const Blob* code = nullptr;
  for (const auto& b : r.image.blobs)
    if (b.addr == 0x08000000) code = &b;
  REQUIRE(code != nullptr);
  u32 lui = code->bytes[0] | code->bytes[1] << 8 | code->bytes[2] << 16 | code->bytes[3] << 24;
  CHECK(decode(lui, Variant::SingleRange128K).imm == 0x20001);
}

TEST_CASE("branches re-resolve after code shifts") {
  const char* src =
      ".data\n"
      "a: .word 1\n"
      "b: .word 2\n"
      ".text\n"
      "_start:\n"
      ".global _start\n"
      "lw a0, a\n"
      "lw a1, b\n"
      "beq a0, a1, skip\n"
      "lw a2, a\n"
      "sw a2, b, t2\n"
      "skip:\n"
      "bne a0, a1, done\n"
      "ebreak\n"
      "done:\n"
      "addi a3, x0, 3\n"
      "ebreak\n";
  for (RelaxMode mode : {RelaxMode::Off, RelaxMode::Near}) {
    auto r = link(asm1(src), fragmented_map(), single_policy(64), mode);
    MachineState st = load_image(r.image);
    RunResult res = run(st, 1000);
    CHECK(res.outcome == RunOutcome::Halted);
    CHECK(st.x[13] == 3);  // both branches behaved the same after relaxation
    CHECK(st.x[12] == 1);
  }
}

TEST_CASE("relaxed and baseline images agree on memory and traces") {
  const char* src =
      ".data\n"
      "x: .word 10\n"
      "y: .word 20\n"
      "z: .word 0\n"
      ".text\n"
      "lw a0, x\n"
      "lw a1, y\n"
      "add a2, a0, a1\n"
      "sw a2, z, t2\n"
      "nlw a3, z\n"
      "nsw a3, x\n"
      "ebreak\n";
  auto base = link(asm1(src), fragmented_map(), single_policy(64), RelaxMode::Off);
  auto rel = link(asm1(src), fragmented_map(), single_policy(64), RelaxMode::Near);
  CHECK(rel.stats.relax_count == 3);
  CHECK(rel.image.code_size_bytes == base.image.code_size_bytes - 4 * 3);

  MachineState sb = load_image(base.image);
  MachineState sr = load_image(rel.image);
  RunResult rb = run(sb, 10000);
  RunResult rr = run(sr, 10000);
  REQUIRE(rb.outcome == RunOutcome::Halted);
  REQUIRE(rr.outcome == RunOutcome::Halted);
  CHECK(sb.store_trace == sr.store_trace);
  CHECK(rr.instret == rb.instret - 3);

  // final data memory: every byte outside the code ranges matches
  auto data_bytes = [](const MachineState& st, const Image& img) {
    std::vector<std::pair<u32, u8>> out;
    for (auto [addr, byte] : st.mem.contents()) {
      bool in_code = false;
      for (const auto& c : img.code_ranges)
        if (addr >= c.addr && addr < c.addr + c.size) in_code = true;
      if (!in_code) out.emplace_back(addr, byte);
    }
    return out;
  };
  CHECK(data_bytes(sb, base.image) == data_bytes(sr, rel.image));
}

TEST_CASE("threshold zero relaxed link is bit-identical to the unrelaxed link") {
  const char* src =
      ".data\n"
      "g: .word 7\n"
      ".text\n"
      "lw a0, g\n"
      "sw a0, g, t2\n"
      "ebreak\n";
  auto a = link(asm1(src), fragmented_map(), single_policy(0), RelaxMode::Near);
  auto b = link(asm1(src), fragmented_map(), single_policy(0), RelaxMode::Off);
  CHECK(a.stats.relax_count == 0);
  CHECK(write_image(a.image) == write_image(b.image));
}

TEST_CASE("gp12 relaxation collapses pairs into gp-relative base forms") {
  const char* src =
      ".data\n"
      "g: .word 7\n"
      "h: .word 0\n"
      ".text\n"
      "lw a0, g\n"
      "sw a0, h, t2\n"
      "ebreak\n";
  auto r = link(asm1(src), fragmented_map(), single_policy(64), RelaxMode::Gp12);
  CHECK(r.stats.relax_count == 2);
  CHECK(reg_of(r.image, "gp") == 0x20000000 + 2048);

  const Blob* code = nullptr;
  for (const auto& b : r.image.blobs)
    if (b.addr == 0x08000000) code = &b;
  REQUIRE(code != nullptr);
  u32 w0 = code->bytes[0] | code->bytes[1] << 8 | code->bytes[2] << 16 | code->bytes[3] << 24;
  Instruction in = decode(w0, Variant::SingleRange128K);
  CHECK(in.mnemonic == Mnemonic::Lw);  // still a base lw, through gp
  CHECK(in.rs1 == REG_GP);
  CHECK(in.imm == -2048);

  MachineState st = load_image(r.image);
  CHECK(run(st, 100).outcome == RunOutcome::Halted);
  CHECK(st.x[10] == 7);

  // symbols past the 4 KB window stay two-instruction under gp12
  const char* far_src =
      ".data\n"
      "pad: .space 8192\n"
      "far: .word 9\n"
      ".text\n"
      "lw a0, far\n"
      "ebreak\n";
  auto far = link(asm1(far_src), fragmented_map(), single_policy(2), RelaxMode::Gp12);
  CHECK(far.stats.relax_count == 0);
  CHECK(reg_of(far.image, "gp") == 0x20000000 + 2048);
}

TEST_CASE("monotonicity: adding near_rom never hurts") {
  const char* src =
      ".rodata\n"
      "c1: .word 1\n"
      "c2: .word 2\n"
      ".data\n"
      "v1: .word 3\n"
      ".text\n"
      "lw a0, c1\n"
      "lw a1, c2\n"
      "lw a2, v1\n"
      "ebreak\n";
  auto ram_only = link(asm1(src), contiguous_map(), single_policy(64, true, false), RelaxMode::Near);
  auto ram_rom = link(asm1(src), contiguous_map(), single_policy(64, true, true), RelaxMode::Near);
  CHECK(ram_rom.stats.relax_count >= ram_only.stats.relax_count);
  CHECK(ram_rom.image.code_size_bytes <= ram_only.image.code_size_bytes);
}

TEST_CASE("layout errors") {
  // duplicate global definitions collide
  ObjectUnit a = assemble(".data\n.global g\ng: .word 1\n", Variant::SingleRange128K);
  ObjectUnit b = assemble(".data\n.global g\ng: .word 2\n", Variant::SingleRange128K);
  CHECK_THROWS_AS(layout({a, b}, fragmented_map(), single_policy(0)), ToolError);

  // undefined import
  ObjectUnit c = assemble(".global missing\n.text\nlw a0, missing\n", Variant::SingleRange128K);
  try {
    layout({c}, fragmented_map(), single_policy(0));
    FAIL("expected UndefinedSymbol");
  } catch (const ToolError& e) {
    CHECK(e.code() == Errc::UndefinedSymbol);
  }

  // region too small
  MemoryMap tiny{0x1000, 0x40, 0x2000, 0x10, false};
  ObjectUnit d = assemble(".data\nbuf: .space 64\n.text\nebreak\n", Variant::SingleRange128K);
  CHECK_THROWS_AS(layout({d}, tiny, single_policy(0)), ToolError);

  // overlapping regions
  MemoryMap bad{0x1000, 0x1000, 0x1800, 0x1000, false};
  CHECK_THROWS_AS(layout({d}, bad, single_policy(0)), ToolError);
}

TEST_CASE("cross-unit references link through globals") {
  ObjectUnit lib = assemble(
      ".data\n"
      ".global counter\n"
      "counter: .word 40\n",
      Variant::SingleRange128K);
  ObjectUnit main_unit = assemble(
      ".global counter\n"
      ".global _start\n"
      ".text\n"
      "_start:\n"
      "lw a0, counter\n"
      "addi a0, a0, 2\n"
      "sw a0, counter, t2\n"
      "ebreak\n",
      Variant::SingleRange128K);
  auto r = link({main_unit, lib}, fragmented_map(), single_policy(64), RelaxMode::Near);
  CHECK(r.stats.relax_count == 2);
  MachineState st = load_image(r.image);
  CHECK(run(st, 100).outcome == RunOutcome::Halted);
  CHECK(st.x[10] == 42);
  REQUIRE(st.store_trace.size() == 1);
  CHECK(st.store_trace[0].value == 42);
}

TEST_CASE("near relocation immediates always land inside the window domain") {
  // randomized thresholds and paddings; decode every near word in the image
  // and check the immediate domain independently
  std::mt19937 g(5);
  for (int iter = 0; iter < 30; iter++) {
    u32 pad = (g() % 3000) * 4;
    u32 threshold = (g() % 3) * 32;
    std::string src = ".data\npad: .space " + std::to_string(pad) + "\n";
    for (int i = 0; i < 8; i++)
      src += "v" + std::to_string(i) + ": .word " + std::to_string(i) + "\n";
    src += ".text\n";
    for (int i = 0; i < 8; i++) src += "lw a0, v" + std::to_string(i) + "\n";
    src += "ebreak\n";
    Variant v = iter % 2 ? Variant::DualRange64K : Variant::SingleRange128K;
    NearPolicy pol{v, threshold, true, false};
    auto r = link({assemble(src, v)}, fragmented_map(), pol, RelaxMode::Near);
    auto [lo_dom, hi_dom] = near_offset_domain(v);
    for (const auto& blob : r.image.blobs) {
      for (const auto& c : r.image.code_ranges) {
        if (c.addr < blob.addr || c.addr >= blob.addr + blob.bytes.size()) continue;
        for (u32 off = c.addr - blob.addr; off + 4 <= c.addr - blob.addr + c.size; off += 4) {
          u32 w = blob.bytes[off] | blob.bytes[off + 1] << 8 | blob.bytes[off + 2] << 16 |
                  blob.bytes[off + 3] << 24;
          Instruction in = decode(w, v);
          if (!is_near(in.mnemonic)) continue;
          CHECK(in.imm >= lo_dom);
          CHECK(in.imm <= hi_dom);
        }
      }
    }
  }
}

TEST_CASE("object files are transparent: on-disk and in-memory units link identically") {
  const char* src =
      ".data\n"
      "g: .word 7\n"
      "h: .word 8\n"
      ".text\n"
      ".global _start\n"
      "_start:\n"
      "lw a0, g\n"
      "sw a0, h, t2\n"
      "nlw a1, g\n"
      "beq a0, a1, end\n"
      "addi a2, x0, 1\n"
      "end: ebreak\n";
  ObjectUnit direct = assemble(src, Variant::SingleRange128K);
  ObjectUnit reloaded = read_object(write_object(direct));
  auto a = link({direct}, fragmented_map(), single_policy(64), RelaxMode::Near);
  auto b = link({reloaded}, fragmented_map(), single_policy(64), RelaxMode::Near);
  CHECK(write_image(a.image) == write_image(b.image));
  CHECK(a.stats.relax_count == b.stats.relax_count);
}

TEST_CASE("empty sections and zero-size symbols place cleanly") {
  const char* src =
      ".data\n"
      "marker:\n"
      ".text\n"
      "la a0, marker\n"
      "ebreak\n";
  auto r = link(asm1(src), fragmented_map(), single_policy(64), RelaxMode::Near);
  CHECK(sym(r.image, "marker") == 0x20000000);
  MachineState st = load_image(r.image);
  CHECK(run(st, 100).outcome == RunOutcome::Halted);
  CHECK(st.x[10] == 0x20000000);
}
