#include "nearv/isa.hpp"

#include <array>

namespace nearv {

namespace {

// Major opcodes (bits 6:0).
constexpr u8 OPC_LOAD = 0x03;
constexpr u8 OPC_LOAD_FP = 0x07;
constexpr u8 OPC_NEAR_LOAD = 0x0B;  // custom-0, dedicated to the near loads
constexpr u8 OPC_OP_IMM = 0x13;
constexpr u8 OPC_AUIPC = 0x17;
constexpr u8 OPC_STORE = 0x23;
constexpr u8 OPC_STORE_FP = 0x27;
constexpr u8 OPC_OP = 0x33;
constexpr u8 OPC_LUI = 0x37;
constexpr u8 OPC_BRANCH = 0x63;
constexpr u8 OPC_JALR = 0x67;
constexpr u8 OPC_JAL = 0x6F;
constexpr u8 OPC_SYSTEM = 0x73;

constexpr EncodingInfo kTable[] = {
    {Mnemonic::Lui,    OPC_LUI,    0, 0x00, Format::U},
    {Mnemonic::Auipc,  OPC_AUIPC,  0, 0x00, Format::U},
    {Mnemonic::Jal,    OPC_JAL,    0, 0x00, Format::J},
    {Mnemonic::Jalr,   OPC_JALR,   0, 0x00, Format::I},
    {Mnemonic::Beq,    OPC_BRANCH, 0, 0x00, Format::B},
    {Mnemonic::Bne,    OPC_BRANCH, 1, 0x00, Format::B},
    {Mnemonic::Blt,    OPC_BRANCH, 4, 0x00, Format::B},
    {Mnemonic::Bge,    OPC_BRANCH, 5, 0x00, Format::B},
    {Mnemonic::Bltu,   OPC_BRANCH, 6, 0x00, Format::B},
    {Mnemonic::Bgeu,   OPC_BRANCH, 7, 0x00, Format::B},
    {Mnemonic::Lb,     OPC_LOAD,   0, 0x00, Format::I},
    {Mnemonic::Lh,     OPC_LOAD,   1, 0x00, Format::I},
    {Mnemonic::Lw,     OPC_LOAD,   2, 0x00, Format::I},
    {Mnemonic::Lbu,    OPC_LOAD,   4, 0x00, Format::I},
    {Mnemonic::Lhu,    OPC_LOAD,   5, 0x00, Format::I},
    {Mnemonic::Sb,     OPC_STORE,  0, 0x00, Format::S},
    {Mnemonic::Sh,     OPC_STORE,  1, 0x00, Format::S},
    {Mnemonic::Sw,     OPC_STORE,  2, 0x00, Format::S},
    {Mnemonic::Addi,   OPC_OP_IMM, 0, 0x00, Format::I},
    {Mnemonic::Slti,   OPC_OP_IMM, 2, 0x00, Format::I},
    {Mnemonic::Sltiu,  OPC_OP_IMM, 3, 0x00, Format::I},
    {Mnemonic::Xori,   OPC_OP_IMM, 4, 0x00, Format::I},
    {Mnemonic::Ori,    OPC_OP_IMM, 6, 0x00, Format::I},
    {Mnemonic::Andi,   OPC_OP_IMM, 7, 0x00, Format::I},
    {Mnemonic::Slli,   OPC_OP_IMM, 1, 0x00, Format::I},
    {Mnemonic::Srli,   OPC_OP_IMM, 5, 0x00, Format::I},
    {Mnemonic::Srai,   OPC_OP_IMM, 5, 0x20, Format::I},
    {Mnemonic::Add,    OPC_OP,     0, 0x00, Format::R},
    {Mnemonic::Sub,    OPC_OP,     0, 0x20, Format::R},
    {Mnemonic::Sll,    OPC_OP,     1, 0x00, Format::R},
    {Mnemonic::Slt,    OPC_OP,     2, 0x00, Format::R},
    {Mnemonic::Sltu,   OPC_OP,     3, 0x00, Format::R},
    {Mnemonic::Xor,    OPC_OP,     4, 0x00, Format::R},
    {Mnemonic::Srl,    OPC_OP,     5, 0x00, Format::R},
    {Mnemonic::Sra,    OPC_OP,     5, 0x20, Format::R},
    {Mnemonic::Or,     OPC_OP,     6, 0x00, Format::R},
    {Mnemonic::And,    OPC_OP,     7, 0x00, Format::R},
    {Mnemonic::Flw,    OPC_LOAD_FP,  2, 0x00, Format::I},
    {Mnemonic::Fsw,    OPC_STORE_FP, 2, 0x00, Format::S},
    {Mnemonic::Ebreak, OPC_SYSTEM, 0, 0x00, Format::I},
    // Near loads need signed and unsigned forms; five funct3 slots do not fit
    // next to the base loads, so they get their own major opcode.
    {Mnemonic::Nlb,    OPC_NEAR_LOAD, 0, 0x00, Format::NI},
    {Mnemonic::Nlh,    OPC_NEAR_LOAD, 1, 0x00, Format::NI},
    {Mnemonic::Nlw,    OPC_NEAR_LOAD, 2, 0x00, Format::NI},
    {Mnemonic::Nlbu,   OPC_NEAR_LOAD, 4, 0x00, Format::NI},
    {Mnemonic::Nlhu,   OPC_NEAR_LOAD, 5, 0x00, Format::NI},
    // Near stores reuse free funct3 slots of the existing store opcodes.
    {Mnemonic::Nsb,    OPC_STORE,  4, 0x00, Format::NS},
    {Mnemonic::Nsh,    OPC_STORE,  5, 0x00, Format::NS},
    {Mnemonic::Nsw,    OPC_STORE,  6, 0x00, Format::NS},
    {Mnemonic::Nflw,   OPC_LOAD_FP,  6, 0x00, Format::NI},
    {Mnemonic::Nfsw,   OPC_STORE_FP, 6, 0x00, Format::NS},
};

constexpr const char* kNames[kMnemonicCount] = {
    "lui", "auipc", "jal", "jalr",
    "beq", "bne", "blt", "bge", "bltu", "bgeu",
    "lb", "lh", "lw", "lbu", "lhu",
    "sb", "sh", "sw",
    "addi", "slti", "sltiu", "xori", "ori", "andi", "slli", "srli", "srai",
    "add", "sub", "sll", "slt", "sltu", "xor", "srl", "sra", "or", "and",
    "flw", "fsw",
    "ebreak",
    "nlb", "nlh", "nlw", "nlbu", "nlhu",
    "nsb", "nsh", "nsw",
    "nflw", "nfsw",
};

void check_reg(Reg r, const char* what) {
  if (r.index > 31) fail(Errc::FieldOutOfRange, std::string(what) + " index " + std::to_string(r.index));
}

void check_zero(Reg r, const char* what, Mnemonic m) {
  if (r.index != 0)
    fail(Errc::FieldOutOfRange,
         std::string(what) + " must be x0 for " + std::string(mnemonic_name(m)));
}

void check_imm(i64 imm, i64 lo, i64 hi, Mnemonic m) {
  if (imm < lo || imm > hi)
    fail(Errc::ImmediateOutOfRange, std::string(mnemonic_name(m)) + " immediate " +
                                        std::to_string(imm) + " outside [" + std::to_string(lo) +
                                        ", " + std::to_string(hi) + "]");
}

bool is_shift(Mnemonic m) {
  return m == Mnemonic::Slli || m == Mnemonic::Srli || m == Mnemonic::Srai;
}

// Near immediate split shared by NI and NS: returns the value of encoding
// bits 19:15 plus the low-12 immediate bits.
struct NearImmFields {
  u32 hi5;    // bits 19:15
  u32 lo12;   // imm[11:0]
};

NearImmFields near_imm_fields(i32 imm, Variant variant, BaseSelect bs) {
  u32 v = static_cast<u32>(imm);
  if (variant == Variant::SingleRange128K)
    return {(v >> 12) & 0x1F, v & 0xFFF};
  u32 sel = bs == BaseSelect::B1 ? 1u : 0u;
  return {(((v >> 12) & 0xF) << 1) | sel, v & 0xFFF};
}

Instruction canonical_near(Mnemonic m, Reg rd, Reg rs2, i32 imm, Variant variant, BaseSelect bs) {
  Instruction out;
  out.mnemonic = m;
  out.rd = rd;
  out.rs2 = rs2;
  out.imm = imm;
  out.base_select = variant == Variant::DualRange64K ? bs : BaseSelect::B0;
  out.rs1 = near_base_reg(variant, out.base_select);
  return out;
}

}  // namespace

std::string_view variant_name(Variant v) {
  return v == Variant::SingleRange128K ? "single" : "dual";
}

std::optional<Variant> variant_from_name(std::string_view s) {
  if (s == "single") return Variant::SingleRange128K;
  if (s == "dual") return Variant::DualRange64K;
  return std::nullopt;
}

std::span<const EncodingInfo> encoding_table() { return kTable; }

const EncodingInfo& encoding_info(Mnemonic m) {
  for (const auto& e : kTable)
    if (e.mnemonic == m) return e;
  fail(Errc::InternalError, "mnemonic missing from encoding table");
}

std::string_view mnemonic_name(Mnemonic m) { return kNames[static_cast<int>(m)]; }

std::optional<Mnemonic> mnemonic_from_name(std::string_view s) {
  for (int i = 0; i < kMnemonicCount; i++)
    if (s == kNames[i]) return static_cast<Mnemonic>(i);
  return std::nullopt;
}

bool is_near(Mnemonic m) { return m >= Mnemonic::Nlb; }

bool is_load(Mnemonic m) {
  switch (m) {
    case Mnemonic::Lb: case Mnemonic::Lh: case Mnemonic::Lw:
    case Mnemonic::Lbu: case Mnemonic::Lhu: case Mnemonic::Flw:
    case Mnemonic::Nlb: case Mnemonic::Nlh: case Mnemonic::Nlw:
    case Mnemonic::Nlbu: case Mnemonic::Nlhu: case Mnemonic::Nflw:
      return true;
    default:
      return false;
  }
}

bool is_store(Mnemonic m) {
  switch (m) {
    case Mnemonic::Sb: case Mnemonic::Sh: case Mnemonic::Sw: case Mnemonic::Fsw:
    case Mnemonic::Nsb: case Mnemonic::Nsh: case Mnemonic::Nsw: case Mnemonic::Nfsw:
      return true;
    default:
      return false;
  }
}

bool is_fp(Mnemonic m) {
  return m == Mnemonic::Flw || m == Mnemonic::Fsw || m == Mnemonic::Nflw || m == Mnemonic::Nfsw;
}

std::optional<Mnemonic> near_form(Mnemonic base) {
  switch (base) {
    case Mnemonic::Lb:  return Mnemonic::Nlb;
    case Mnemonic::Lh:  return Mnemonic::Nlh;
    case Mnemonic::Lw:  return Mnemonic::Nlw;
    case Mnemonic::Lbu: return Mnemonic::Nlbu;
    case Mnemonic::Lhu: return Mnemonic::Nlhu;
    case Mnemonic::Sb:  return Mnemonic::Nsb;
    case Mnemonic::Sh:  return Mnemonic::Nsh;
    case Mnemonic::Sw:  return Mnemonic::Nsw;
    case Mnemonic::Flw: return Mnemonic::Nflw;
    case Mnemonic::Fsw: return Mnemonic::Nfsw;
    default:            return std::nullopt;
  }
}

Reg near_base_reg(Variant v, BaseSelect bs) {
  if (v == Variant::SingleRange128K) return REG_GP;
  return bs == BaseSelect::B0 ? REG_T0 : REG_T1;
}

std::pair<i32, i32> near_offset_domain(Variant variant) {
  if (variant == Variant::SingleRange128K) return {-65536, 65535};
  return {-32768, 32767};
}

bool is_near_reachable(u32 sym_addr, u32 base_addr, Variant variant) {
  i64 diff = static_cast<i64>(sym_addr) - static_cast<i64>(base_addr);
  auto [lo, hi] = near_offset_domain(variant);
  return diff >= lo && diff <= hi;
}

u32 encode(const Instruction& instr, Variant variant) {
  const EncodingInfo& info = encoding_info(instr.mnemonic);
  check_reg(instr.rd, "rd");
  check_reg(instr.rs1, "rs1");
  check_reg(instr.rs2, "rs2");
  if (!is_near(instr.mnemonic) && instr.base_select != BaseSelect::B0)
    fail(Errc::FieldOutOfRange,
         "base_select set on non-near " + std::string(mnemonic_name(instr.mnemonic)));

  const u32 opc = info.opcode;
  const u32 f3 = info.funct3;
  const u32 rd = instr.rd.index;
  const u32 rs1 = instr.rs1.index;
  const u32 rs2 = instr.rs2.index;
  const i32 imm = instr.imm;

  switch (info.format) {
    case Format::U:
      check_zero(instr.rs1, "rs1", instr.mnemonic);
      check_zero(instr.rs2, "rs2", instr.mnemonic);
      check_imm(imm, 0, 0xFFFFF, instr.mnemonic);
      return (static_cast<u32>(imm) << 12) | (rd << 7) | opc;

    case Format::J:
      check_zero(instr.rs1, "rs1", instr.mnemonic);
      check_zero(instr.rs2, "rs2", instr.mnemonic);
      check_imm(imm, -1048576, 1048574, instr.mnemonic);
      if (imm & 1) fail(Errc::ImmediateOutOfRange, "jal target offset must be even");
      {
        u32 v = static_cast<u32>(imm);
        u32 w = ((v >> 20) & 1) << 31;
        w |= ((v >> 1) & 0x3FF) << 21;
        w |= ((v >> 11) & 1) << 20;
        w |= ((v >> 12) & 0xFF) << 12;
        return w | (rd << 7) | opc;
      }

    case Format::B:
      check_zero(instr.rd, "rd", instr.mnemonic);
      check_imm(imm, -4096, 4094, instr.mnemonic);
      if (imm & 1) fail(Errc::ImmediateOutOfRange, "branch target offset must be even");
      {
        u32 v = static_cast<u32>(imm);
        u32 w = ((v >> 12) & 1) << 31;
        w |= ((v >> 5) & 0x3F) << 25;
        w |= ((v >> 1) & 0xF) << 8;
        w |= ((v >> 11) & 1) << 7;
        return w | (rs2 << 20) | (rs1 << 15) | (f3 << 12) | opc;
      }

    case Format::R:
      if (imm != 0)
        fail(Errc::ImmediateOutOfRange,
             "immediate set on " + std::string(mnemonic_name(instr.mnemonic)));
      return (static_cast<u32>(info.funct7) << 25) | (rs2 << 20) | (rs1 << 15) | (f3 << 12) |
             (rd << 7) | opc;

    case Format::I:
      check_zero(instr.rs2, "rs2", instr.mnemonic);
      if (instr.mnemonic == Mnemonic::Ebreak) {
        check_zero(instr.rd, "rd", instr.mnemonic);
        check_zero(instr.rs1, "rs1", instr.mnemonic);
        if (imm != 0) fail(Errc::ImmediateOutOfRange, "ebreak takes no immediate");
        return (1u << 20) | opc;
      }
      if (is_shift(instr.mnemonic)) {
        check_imm(imm, 0, 31, instr.mnemonic);
        return (static_cast<u32>(info.funct7) << 25) | (static_cast<u32>(imm) << 20) |
               (rs1 << 15) | (f3 << 12) | (rd << 7) | opc;
      }
      check_imm(imm, -2048, 2047, instr.mnemonic);
      return ((static_cast<u32>(imm) & 0xFFF) << 20) | (rs1 << 15) | (f3 << 12) | (rd << 7) | opc;

    case Format::S:
      check_zero(instr.rd, "rd", instr.mnemonic);
      check_imm(imm, -2048, 2047, instr.mnemonic);
      {
        u32 v = static_cast<u32>(imm) & 0xFFF;
        return ((v >> 5) << 25) | (rs2 << 20) | (rs1 << 15) | (f3 << 12) | ((v & 0x1F) << 7) | opc;
      }

    case Format::NI:
    case Format::NS: {
      if (variant == Variant::SingleRange128K && instr.base_select != BaseSelect::B0)
        fail(Errc::VariantMismatch,
             "base_select has no meaning under the single-range variant");
      auto [lo, hi] = near_offset_domain(variant);
      check_imm(imm, lo, hi, instr.mnemonic);
      Reg base = near_base_reg(variant, instr.base_select);
      if (instr.rs1 != base)
        fail(Errc::FieldOutOfRange, "near rs1 must be " +
                                        std::to_string(base.index) + " (implied window base)");
      NearImmFields f = near_imm_fields(imm, variant, instr.base_select);
      if (info.format == Format::NI) {
        check_zero(instr.rs2, "rs2", instr.mnemonic);
        return (f.lo12 << 20) | (f.hi5 << 15) | (f3 << 12) | (rd << 7) | opc;
      }
      check_zero(instr.rd, "rd", instr.mnemonic);
      return ((f.lo12 >> 5) << 25) | (rs2 << 20) | (f.hi5 << 15) | (f3 << 12) |
             ((f.lo12 & 0x1F) << 7) | opc;
    }
  }
  fail(Errc::InternalError, "unhandled format");
}

namespace {

Mnemonic pick(u32 word, std::initializer_list<std::pair<u32, Mnemonic>> by_funct3) {
  u32 f3 = (word >> 12) & 7;
  for (auto& [f, m] : by_funct3)
    if (f == f3) return m;
  fail(Errc::IllegalInstruction, "unassigned funct3 " + std::to_string(f3) + " in word " + to_hex(word));
}

i32 decode_near_imm(u32 word, Variant variant, BaseSelect* bs, bool store_form) {
  u32 lo12 = store_form ? ((word >> 25) << 5) | ((word >> 7) & 0x1F) : word >> 20;
  u32 hi5 = (word >> 15) & 0x1F;
  if (variant == Variant::SingleRange128K) {
    *bs = BaseSelect::B0;
    return sign_extend((hi5 << 12) | (lo12 & 0xFFF), 17);
  }
  *bs = (hi5 & 1) ? BaseSelect::B1 : BaseSelect::B0;
  return sign_extend(((hi5 >> 1) << 12) | (lo12 & 0xFFF), 16);
}

}  // namespace

Instruction decode(u32 word, Variant variant) {
  const u32 opc = word & 0x7F;
  const u32 rd = (word >> 7) & 0x1F;
  const u32 f3 = (word >> 12) & 7;
  const u32 rs1 = (word >> 15) & 0x1F;
  const u32 rs2 = (word >> 20) & 0x1F;
  const u32 f7 = word >> 25;

  Instruction out;

  auto imm_i = [&] { return sign_extend(word >> 20, 12); };
  auto imm_s = [&] { return sign_extend(((word >> 25) << 5) | ((word >> 7) & 0x1F), 12); };
  auto imm_b = [&] {
    u32 v = (((word >> 31) & 1) << 12) | (((word >> 7) & 1) << 11) |
            (((word >> 25) & 0x3F) << 5) | (((word >> 8) & 0xF) << 1);
    return sign_extend(v, 13);
  };
  auto imm_j = [&] {
    u32 v = (((word >> 31) & 1) << 20) | (((word >> 12) & 0xFF) << 12) |
            (((word >> 20) & 1) << 11) | (((word >> 21) & 0x3FF) << 1);
    return sign_extend(v, 21);
  };

  switch (opc) {
    case OPC_LUI:
    case OPC_AUIPC:
      out.mnemonic = opc == OPC_LUI ? Mnemonic::Lui : Mnemonic::Auipc;
      out.rd = Reg{static_cast<u8>(rd)};
      out.imm = static_cast<i32>((word >> 12) & 0xFFFFF);
      return out;

    case OPC_JAL:
      out.mnemonic = Mnemonic::Jal;
      out.rd = Reg{static_cast<u8>(rd)};
      out.imm = imm_j();
      return out;

    case OPC_JALR:
      if (f3 != 0) fail(Errc::IllegalInstruction, "jalr funct3 must be 0");
      out.mnemonic = Mnemonic::Jalr;
      out.rd = Reg{static_cast<u8>(rd)};
      out.rs1 = Reg{static_cast<u8>(rs1)};
      out.imm = imm_i();
      return out;

    case OPC_BRANCH:
      out.mnemonic = pick(word, {{0, Mnemonic::Beq}, {1, Mnemonic::Bne}, {4, Mnemonic::Blt},
                                 {5, Mnemonic::Bge}, {6, Mnemonic::Bltu}, {7, Mnemonic::Bgeu}});
      out.rs1 = Reg{static_cast<u8>(rs1)};
      out.rs2 = Reg{static_cast<u8>(rs2)};
      out.imm = imm_b();
      return out;

    case OPC_LOAD:
      out.mnemonic = pick(word, {{0, Mnemonic::Lb}, {1, Mnemonic::Lh}, {2, Mnemonic::Lw},
                                 {4, Mnemonic::Lbu}, {5, Mnemonic::Lhu}});
      out.rd = Reg{static_cast<u8>(rd)};
      out.rs1 = Reg{static_cast<u8>(rs1)};
      out.imm = imm_i();
      return out;

    case OPC_STORE: {
      Mnemonic m = pick(word, {{0, Mnemonic::Sb}, {1, Mnemonic::Sh}, {2, Mnemonic::Sw},
                               {4, Mnemonic::Nsb}, {5, Mnemonic::Nsh}, {6, Mnemonic::Nsw}});
      if (!is_near(m)) {
        out.mnemonic = m;
        out.rs1 = Reg{static_cast<u8>(rs1)};
        out.rs2 = Reg{static_cast<u8>(rs2)};
        out.imm = imm_s();
        return out;
      }
      BaseSelect bs;
      i32 imm = decode_near_imm(word, variant, &bs, /*store_form=*/true);
      return canonical_near(m, REG_ZERO, Reg{static_cast<u8>(rs2)}, imm, variant, bs);
    }

    case OPC_OP_IMM: {
      if (f3 == 1) {
        if (f7 != 0) fail(Errc::IllegalInstruction, "slli funct7 must be 0");
        out.mnemonic = Mnemonic::Slli;
      } else if (f3 == 5) {
        if (f7 == 0x00) out.mnemonic = Mnemonic::Srli;
        else if (f7 == 0x20) out.mnemonic = Mnemonic::Srai;
        else fail(Errc::IllegalInstruction, "bad shift funct7 in word " + to_hex(word));
      } else {
        out.mnemonic = pick(word, {{0, Mnemonic::Addi}, {2, Mnemonic::Slti}, {3, Mnemonic::Sltiu},
                                   {4, Mnemonic::Xori}, {6, Mnemonic::Ori}, {7, Mnemonic::Andi}});
      }
      out.rd = Reg{static_cast<u8>(rd)};
      out.rs1 = Reg{static_cast<u8>(rs1)};
      out.imm = (f3 == 1 || f3 == 5) ? static_cast<i32>(rs2) : imm_i();
      return out;
    }

    case OPC_OP: {
      if (f7 != 0x00 && f7 != 0x20)
        fail(Errc::IllegalInstruction, "bad funct7 in word " + to_hex(word));
      bool alt = f7 == 0x20;
      switch (f3) {
        case 0: out.mnemonic = alt ? Mnemonic::Sub : Mnemonic::Add; break;
        case 1: out.mnemonic = Mnemonic::Sll; break;
        case 2: out.mnemonic = Mnemonic::Slt; break;
        case 3: out.mnemonic = Mnemonic::Sltu; break;
        case 4: out.mnemonic = Mnemonic::Xor; break;
        case 5: out.mnemonic = alt ? Mnemonic::Sra : Mnemonic::Srl; break;
        case 6: out.mnemonic = Mnemonic::Or; break;
        case 7: out.mnemonic = Mnemonic::And; break;
      }
      if (alt && f3 != 0 && f3 != 5)
        fail(Errc::IllegalInstruction, "bad funct7 in word " + to_hex(word));
      out.rd = Reg{static_cast<u8>(rd)};
      out.rs1 = Reg{static_cast<u8>(rs1)};
      out.rs2 = Reg{static_cast<u8>(rs2)};
      return out;
    }

    case OPC_LOAD_FP: {
      if (f3 == 2) {
        out.mnemonic = Mnemonic::Flw;
        out.rd = Reg{static_cast<u8>(rd)};
        out.rs1 = Reg{static_cast<u8>(rs1)};
        out.imm = imm_i();
        return out;
      }
      if (f3 == 6) {
        BaseSelect bs;
        i32 imm = decode_near_imm(word, variant, &bs, /*store_form=*/false);
        Instruction n = canonical_near(Mnemonic::Nflw, Reg{static_cast<u8>(rd)}, REG_ZERO, imm,
                                       variant, bs);
        return n;
      }
      fail(Errc::IllegalInstruction, "unassigned LOAD-FP funct3 " + std::to_string(f3));
    }

    case OPC_STORE_FP: {
      if (f3 == 2) {
        out.mnemonic = Mnemonic::Fsw;
        out.rs1 = Reg{static_cast<u8>(rs1)};
        out.rs2 = Reg{static_cast<u8>(rs2)};
        out.imm = imm_s();
        return out;
      }
      if (f3 == 6) {
        BaseSelect bs;
        i32 imm = decode_near_imm(word, variant, &bs, /*store_form=*/true);
        return canonical_near(Mnemonic::Nfsw, REG_ZERO, Reg{static_cast<u8>(rs2)}, imm, variant, bs);
      }
      fail(Errc::IllegalInstruction, "unassigned STORE-FP funct3 " + std::to_string(f3));
    }

    case OPC_NEAR_LOAD: {
      Mnemonic m = pick(word, {{0, Mnemonic::Nlb}, {1, Mnemonic::Nlh}, {2, Mnemonic::Nlw},
                               {4, Mnemonic::Nlbu}, {5, Mnemonic::Nlhu}});
      BaseSelect bs;
      i32 imm = decode_near_imm(word, variant, &bs, /*store_form=*/false);
      return canonical_near(m, Reg{static_cast<u8>(rd)}, REG_ZERO, imm, variant, bs);
    }

    case OPC_SYSTEM:
      if (f3 == 0 && rd == 0 && rs1 == 0 && (word >> 20) == 1) {
        out.mnemonic = Mnemonic::Ebreak;
        return out;
      }
      fail(Errc::IllegalInstruction, "unsupported SYSTEM word " + to_hex(word));

    default:
      fail(Errc::IllegalInstruction, "unassigned opcode in word " + to_hex(word));
  }
}

}  // namespace nearv
