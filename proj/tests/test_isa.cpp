#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <random>
#include <set>
#include <vector>

#include "nearv/isa.hpp"
#include "oracle.hpp"

using namespace nearv;

namespace {

Instruction make(Mnemonic m, Reg rd = {}, Reg rs1 = {}, Reg rs2 = {}, i32 imm = 0,
                 BaseSelect bs = BaseSelect::B0) {
  return Instruction{m, rd, rs1, rs2, imm, bs};
}

Instruction make_near(Mnemonic m, Variant v, Reg reg, i32 imm, BaseSelect bs = BaseSelect::B0) {
  Instruction i;
  i.mnemonic = m;
  i.imm = imm;
  i.base_select = v == Variant::DualRange64K ? bs : BaseSelect::B0;
  i.rs1 = near_base_reg(v, i.base_select);
  if (is_load(m)) i.rd = reg;
  else i.rs2 = reg;
  return i;
}

// Golden RV32I subset encodings, derived with the bit-string oracle and
// hand-checked against the published base ISA listings.
struct Golden {
  const char* mnemonic;
  Instruction instr;
  u32 word;
};

const std::vector<Golden>& golden_table() {
  using M = Mnemonic;
  static const std::vector<Golden> t = {
      {"lui", make(M::Lui, Reg{5}, {}, {}, 0x12345), 0x123452B7u},
      {"auipc", make(M::Auipc, Reg{6}, {}, {}, 0xFFFFF), 0xFFFFF317u},
      {"jal", make(M::Jal, Reg{1}, {}, {}, 2048), 0x001000EFu},
      {"jal", make(M::Jal, Reg{0}, {}, {}, -4), 0xFFDFF06Fu},
      {"jalr", make(M::Jalr, Reg{1}, Reg{5}, {}, -4), 0xFFC280E7u},
      {"beq", make(M::Beq, {}, Reg{1}, Reg{2}, 16), 0x00208863u},
      {"bne", make(M::Bne, {}, Reg{3}, Reg{4}, -16), 0xFE4198E3u},
      {"blt", make(M::Blt, {}, Reg{5}, Reg{6}, 4094), 0x7E62CFE3u},
      {"bge", make(M::Bge, {}, Reg{7}, Reg{8}, -4096), 0x8083D063u},
      {"bltu", make(M::Bltu, {}, Reg{9}, Reg{10}, 2), 0x00A4E163u},
      {"bgeu", make(M::Bgeu, {}, Reg{11}, Reg{12}, -2), 0xFEC5FFE3u},
      {"lb", make(M::Lb, Reg{1}, Reg{2}, {}, -1), 0xFFF10083u},
      {"lh", make(M::Lh, Reg{3}, Reg{4}, {}, 2), 0x00221183u},
      {"lw", make(M::Lw, Reg{5}, Reg{6}, {}, 4), 0x00432283u},
      {"lbu", make(M::Lbu, Reg{7}, Reg{8}, {}, 255), 0x0FF44383u},
      {"lhu", make(M::Lhu, Reg{9}, Reg{10}, {}, -2048), 0x80055483u},
      {"sb", make(M::Sb, {}, Reg{12}, Reg{11}, 7), 0x00B603A3u},
      {"sh", make(M::Sh, {}, Reg{14}, Reg{13}, -8), 0xFED71C23u},
      {"sw", make(M::Sw, {}, Reg{16}, Reg{15}, 2047), 0x7EF82FA3u},
      {"addi", make(M::Addi, Reg{17}, Reg{18}, {}, -2048), 0x80090893u},
      {"slti", make(M::Slti, Reg{19}, Reg{20}, {}, 2047), 0x7FFA2993u},
      {"sltiu", make(M::Sltiu, Reg{21}, Reg{22}, {}, 1), 0x001B3A93u},
      {"xori", make(M::Xori, Reg{23}, Reg{24}, {}, -1), 0xFFFC4B93u},
      {"ori", make(M::Ori, Reg{25}, Reg{26}, {}, 0x55), 0x055D6C93u},
      {"andi", make(M::Andi, Reg{27}, Reg{28}, {}, -256), 0xF00E7D93u},
      {"slli", make(M::Slli, Reg{29}, Reg{30}, {}, 1), 0x001F1E93u},
      {"srli", make(M::Srli, Reg{31}, Reg{1}, {}, 31), 0x01F0DF93u},
      {"srai", make(M::Srai, Reg{2}, Reg{3}, {}, 16), 0x4101D113u},
      {"add", make(M::Add, Reg{4}, Reg{5}, Reg{6}), 0x00628233u},
      {"sub", make(M::Sub, Reg{7}, Reg{8}, Reg{9}), 0x409403B3u},
      {"sll", make(M::Sll, Reg{10}, Reg{11}, Reg{12}), 0x00C59533u},
      {"slt", make(M::Slt, Reg{13}, Reg{14}, Reg{15}), 0x00F726B3u},
      {"sltu", make(M::Sltu, Reg{16}, Reg{17}, Reg{18}), 0x0128B833u},
      {"xor", make(M::Xor, Reg{19}, Reg{20}, Reg{21}), 0x015A49B3u},
      {"srl", make(M::Srl, Reg{22}, Reg{23}, Reg{24}), 0x018BDB33u},
      {"sra", make(M::Sra, Reg{25}, Reg{26}, Reg{27}), 0x41BD5CB3u},
      {"or", make(M::Or, Reg{28}, Reg{29}, Reg{30}), 0x01EEEE33u},
      {"and", make(M::And, Reg{31}, Reg{1}, Reg{2}), 0x0020FFB3u},
      {"flw", make(M::Flw, Reg{1}, Reg{2}, {}, 4), 0x00412087u},
      {"fsw", make(M::Fsw, {}, Reg{4}, Reg{3}, -4), 0xFE322E27u},
      {"ebreak", make(M::Ebreak), 0x00100073u},
  };
  return t;
}

std::mt19937 rng_for(const char* tag) {
  std::seed_seq seq(tag, tag + std::char_traits<char>::length(tag));
  return std::mt19937(seq);
}

u8 rand_reg(std::mt19937& g) { return static_cast<u8>(g() % 32); }

// Uniform draw from [lo, hi] without std::uniform_int_distribution, so the
// sequence is stable across standard libraries.
i32 rand_in(std::mt19937& g, i64 lo, i64 hi) {
  u64 span = static_cast<u64>(hi - lo + 1);
  return static_cast<i32>(lo + static_cast<i64>(g() % span));
}

Instruction random_legal(std::mt19937& g, Variant v) {
  auto table = encoding_table();
  const EncodingInfo& info = table[g() % table.size()];
  Mnemonic m = info.mnemonic;
  if (m == Mnemonic::Ebreak) return make(m);
  switch (info.format) {
    case Format::U:
      return make(m, Reg{rand_reg(g)}, {}, {}, rand_in(g, 0, 0xFFFFF));
    case Format::J:
      return make(m, Reg{rand_reg(g)}, {}, {}, rand_in(g, -524288, 524287) * 2);
    case Format::B:
      return make(m, {}, Reg{rand_reg(g)}, Reg{rand_reg(g)}, rand_in(g, -2048, 2047) * 2);
    case Format::R:
      return make(m, Reg{rand_reg(g)}, Reg{rand_reg(g)}, Reg{rand_reg(g)});
    case Format::I: {
      bool shift = m == Mnemonic::Slli || m == Mnemonic::Srli || m == Mnemonic::Srai;
      i32 imm = shift ? rand_in(g, 0, 31) : rand_in(g, -2048, 2047);
      return make(m, Reg{rand_reg(g)}, Reg{rand_reg(g)}, {}, imm);
    }
    case Format::S:
      return make(m, {}, Reg{rand_reg(g)}, Reg{rand_reg(g)}, rand_in(g, -2048, 2047));
    case Format::NI:
    case Format::NS: {
      auto [lo, hi] = near_offset_domain(v);
      BaseSelect bs = (g() & 1) ? BaseSelect::B1 : BaseSelect::B0;
      return make_near(m, v, Reg{rand_reg(g)}, rand_in(g, lo, hi), bs);
    }
  }
  return make(Mnemonic::Ebreak);
}

}  // namespace

TEST_CASE("base subset encodes bit-identically to the golden table") {
  for (const auto& g : golden_table()) {
    CAPTURE(g.mnemonic);
    CHECK(encode(g.instr, Variant::SingleRange128K) == g.word);
    CHECK(encode(g.instr, Variant::DualRange64K) == g.word);
    CHECK(decode(g.word, Variant::SingleRange128K) == g.instr);
  }
}

TEST_CASE("near encodings match the frozen reference words and the bit-string oracle") {
  Instruction nlw = make_near(Mnemonic::Nlw, Variant::SingleRange128K, Reg{10}, 0);
  CHECK(encode(nlw, Variant::SingleRange128K) == 0x0000250Bu);
  CHECK(decode(0x0000250Bu, Variant::SingleRange128K) == nlw);
  CHECK(nlw.rs1 == REG_GP);

  Instruction nsw = make_near(Mnemonic::Nsw, Variant::SingleRange128K, Reg{11}, 8);
  CHECK(encode(nsw, Variant::SingleRange128K) == 0x00B06423u);

  // oracle cross-checks over a spread of immediates
  for (i32 imm : {-65536, -4, -1, 0, 1, 4, 4096, 65535}) {
    CHECK(encode(make_near(Mnemonic::Nlw, Variant::SingleRange128K, Reg{10}, imm),
                 Variant::SingleRange128K) == oracle::ni_single(imm, 2, 10, 0x0B));
    CHECK(encode(make_near(Mnemonic::Nsb, Variant::SingleRange128K, Reg{9}, imm),
                 Variant::SingleRange128K) == oracle::ns_single(imm, 9, 4, 0x23));
  }
  for (i32 imm : {-32768, -4, 0, 3, 32767}) {
    for (auto bs : {BaseSelect::B0, BaseSelect::B1}) {
      u32 sel = bs == BaseSelect::B1 ? 1 : 0;
      CHECK(encode(make_near(Mnemonic::Nlhu, Variant::DualRange64K, Reg{8}, imm, bs),
                   Variant::DualRange64K) == oracle::ni_dual(imm, sel, 5, 8, 0x0B));
      CHECK(encode(make_near(Mnemonic::Nfsw, Variant::DualRange64K, Reg{7}, imm, bs),
                   Variant::DualRange64K) == oracle::ns_dual(imm, 7, sel, 6, 0x27));
    }
  }
}

TEST_CASE("near immediate range errors") {
  CHECK_THROWS_WITH_AS(encode(make_near(Mnemonic::Nlw, Variant::SingleRange128K, Reg{10}, 65536),
                              Variant::SingleRange128K),
                       doctest::Contains("ImmediateOutOfRange"), ToolError);
  CHECK_THROWS_AS(encode(make_near(Mnemonic::Nlw, Variant::DualRange64K, Reg{10}, 32768),
                         Variant::DualRange64K),
                  ToolError);

  // base_select under the single variant is meaningless
  Instruction bad = make_near(Mnemonic::Nlw, Variant::SingleRange128K, Reg{10}, 0);
  bad.base_select = BaseSelect::B1;
  try {
    encode(bad, Variant::SingleRange128K);
    FAIL("expected VariantMismatch");
  } catch (const ToolError& e) {
    CHECK(e.code() == Errc::VariantMismatch);
  }
}

TEST_CASE("decode rejects unassigned slots") {
  // LOAD funct3=011 is unassigned in the base ISA
  u32 w = oracle::i_type(0, 1, 3, 2, 0x03);
  CHECK_THROWS_AS(decode(w, Variant::SingleRange128K), ToolError);
  // custom-0 funct3=011 and 111 are not used by the near loads
  CHECK_THROWS_AS(decode(oracle::ni_single(0, 3, 1, 0x0B), Variant::SingleRange128K), ToolError);
  CHECK_THROWS_AS(decode(oracle::ni_single(0, 7, 1, 0x0B), Variant::SingleRange128K), ToolError);
  // STORE funct3=111 stays free
  CHECK_THROWS_AS(decode(oracle::s_type(0, 1, 2, 7, 0x23), Variant::SingleRange128K), ToolError);
  try {
    decode(w, Variant::DualRange64K);
    FAIL("expected IllegalInstruction");
  } catch (const ToolError& e) {
    CHECK(e.code() == Errc::IllegalInstruction);
  }
}

TEST_CASE("near immediate sign bit is encoding bit 19") {
  // imm[16:2] all ones, imm[1:0] = 0 -> -4 under the single variant
  i32 imm = -4;
  u32 w = encode(make_near(Mnemonic::Nlw, Variant::SingleRange128K, Reg{9}, imm),
                 Variant::SingleRange128K);
  CHECK(((w >> 19) & 1) == 1);
  CHECK(decode(w, Variant::SingleRange128K).imm == -4);

  // positive immediates leave bit 19 clear
  u32 wp = encode(make_near(Mnemonic::Nlw, Variant::SingleRange128K, Reg{9}, 65535),
                  Variant::SingleRange128K);
  CHECK(((wp >> 19) & 1) == 0);

  // dual variant: sign bit still at 19, base select at 15
  u32 wd = encode(make_near(Mnemonic::Nlw, Variant::DualRange64K, Reg{9}, -4, BaseSelect::B1),
                  Variant::DualRange64K);
  CHECK(((wd >> 19) & 1) == 1);
  CHECK(((wd >> 15) & 1) == 1);
  Instruction di = decode(wd, Variant::DualRange64K);
  CHECK(di.imm == -4);
  CHECK(di.base_select == BaseSelect::B1);
  CHECK(di.rs1 == REG_T1);
}

TEST_CASE("near low 12 immediate bits sit in the base I/S positions") {
  for (i32 imm : {-65536, -2048, -5, 0, 7, 2047, 65535}) {
    u32 ni = encode(make_near(Mnemonic::Nlw, Variant::SingleRange128K, Reg{10}, imm),
                    Variant::SingleRange128K);
    u32 i = encode(make(Mnemonic::Lw, Reg{10}, Reg{3}, {}, sign_extend(imm & 0xFFF, 12)),
                   Variant::SingleRange128K);
    CHECK((ni >> 20) == (i >> 20));

    u32 ns = encode(make_near(Mnemonic::Nsw, Variant::SingleRange128K, Reg{10}, imm),
                    Variant::SingleRange128K);
    u32 s = encode(make(Mnemonic::Sw, {}, Reg{3}, Reg{10}, sign_extend(imm & 0xFFF, 12)),
                   Variant::SingleRange128K);
    CHECK((ns >> 25) == (s >> 25));
    CHECK(((ns >> 7) & 0x1F) == ((s >> 7) & 0x1F));
  }
}

TEST_CASE("no (opcode, funct3, funct7, format) assignment collides") {
  std::set<std::tuple<u8, u8, u8, bool>> seen;  // bool: near-format flag
  for (const auto& e : encoding_table()) {
    u8 f3 = (e.format == Format::U || e.format == Format::J) ? 0xFF : e.funct3;
    bool nearfmt = e.format == Format::NI || e.format == Format::NS;
    auto key = std::make_tuple(e.opcode, f3, e.funct7, nearfmt);
    CAPTURE(mnemonic_name(e.mnemonic));
    CHECK(!seen.count(key));
    seen.insert(key);
  }
  // near stores share the store opcodes but not funct3 slots; near loads get
  // a dedicated major opcode
  CHECK(encoding_info(Mnemonic::Nlw).opcode == 0x0B);
  CHECK(encoding_info(Mnemonic::Nlw).opcode != encoding_info(Mnemonic::Lw).opcode);
  CHECK(encoding_info(Mnemonic::Nsw).opcode == encoding_info(Mnemonic::Sw).opcode);
  CHECK(encoding_info(Mnemonic::Nsw).funct3 != encoding_info(Mnemonic::Sw).funct3);
  CHECK(encoding_info(Mnemonic::Nflw).funct3 == 6);
  CHECK(encoding_info(Mnemonic::Nfsw).funct3 == 6);
}

TEST_CASE("near offset domains") {
  CHECK(near_offset_domain(Variant::SingleRange128K) == std::pair<i32, i32>{-65536, 65535});
  CHECK(near_offset_domain(Variant::DualRange64K) == std::pair<i32, i32>{-32768, 32767});
  auto [lo, hi] = near_offset_domain(Variant::SingleRange128K);
  CHECK(hi - lo + 1 == 131072);
  auto [dlo, dhi] = near_offset_domain(Variant::DualRange64K);
  CHECK(dhi - dlo + 1 == 65536);
}

TEST_CASE("near reachability") {
  CHECK(is_near_reachable(0x8001FFFF, 0x80010000, Variant::SingleRange128K));
  CHECK(!is_near_reachable(0x80020000, 0x80010000, Variant::SingleRange128K));
  CHECK(is_near_reachable(0x80010000, 0x80010000, Variant::SingleRange128K));
  CHECK(is_near_reachable(0x80010000, 0x80010000, Variant::DualRange64K));
  CHECK(is_near_reachable(0x80010000 - 65536, 0x80010000, Variant::SingleRange128K));
  CHECK(!is_near_reachable(0x80010000 - 65537, 0x80010000, Variant::SingleRange128K));
  CHECK(is_near_reachable(0x80017FFF, 0x80010000, Variant::DualRange64K));
  CHECK(!is_near_reachable(0x80018000, 0x80010000, Variant::DualRange64K));
  // differences are taken as signed 33-bit values, no wraparound
  CHECK(!is_near_reachable(0x00000010, 0xFFFFFFF0, Variant::SingleRange128K));
}

TEST_CASE("round-trip and injectivity over randomized legal instructions") {
  for (Variant v : {Variant::SingleRange128K, Variant::DualRange64K}) {
    auto g = rng_for(v == Variant::SingleRange128K ? "rt-single" : "rt-dual");
    std::map<u32, Instruction> by_word;
    for (int n = 0; n < 20000; n++) {
      Instruction i = random_legal(g, v);
      CAPTURE(mnemonic_name(i.mnemonic));
      u32 w = encode(i, v);
      Instruction back = decode(w, v);
      REQUIRE(back == i);
      auto [it, fresh] = by_word.emplace(w, i);
      if (!fresh) REQUIRE(it->second == i);  // same word must mean same instruction
    }
  }
}

TEST_CASE("exhaustive mnemonic coverage round-trips") {
  for (Variant v : {Variant::SingleRange128K, Variant::DualRange64K}) {
    auto g = rng_for("coverage");
    for (const auto& e : encoding_table()) {
      for (int n = 0; n < 64; n++) {
        Instruction i;
        // draw until the generator lands on this mnemonic
        do {
          i = random_legal(g, v);
        } while (i.mnemonic != e.mnemonic);
        CHECK(decode(encode(i, v), v) == i);
      }
    }
  }
}
