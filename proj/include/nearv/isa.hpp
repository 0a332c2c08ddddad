#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <utility>

#include "nearv/common.hpp"

namespace nearv {

/// Near-addressing proposal variant: one gp-anchored 128 KB window, or two
/// 64 KB windows anchored by t0/t1.
enum class Variant : u8 { SingleRange128K, DualRange64K };

std::string_view variant_name(Variant v);
std::optional<Variant> variant_from_name(std::string_view s);

/// Window selector for the dual variant. B0 = t0, B1 = t1.
enum class BaseSelect : u8 { B0 = 0, B1 = 1 };

struct Reg {
  u8 index = 0;
  constexpr auto operator<=>(const Reg&) const = default;
};

inline constexpr Reg REG_ZERO{0};
inline constexpr Reg REG_RA{1};
inline constexpr Reg REG_GP{3};
inline constexpr Reg REG_T0{5};
inline constexpr Reg REG_T1{6};

enum class Mnemonic : u8 {
  // RV32I subset
  Lui, Auipc, Jal, Jalr,
  Beq, Bne, Blt, Bge, Bltu, Bgeu,
  Lb, Lh, Lw, Lbu, Lhu,
  Sb, Sh, Sw,
  Addi, Slti, Sltiu, Xori, Ori, Andi, Slli, Srli, Srai,
  Add, Sub, Sll, Slt, Sltu, Xor, Srl, Sra, Or, And,
  Flw, Fsw,
  Ebreak,
  // Xnear extension
  Nlb, Nlh, Nlw, Nlbu, Nlhu,
  Nsb, Nsh, Nsw,
  Nflw, Nfsw,
};

inline constexpr int kMnemonicCount = static_cast<int>(Mnemonic::Nfsw) + 1;

enum class Format : u8 { R, I, S, B, U, J, NI, NS };

struct Instruction {
  Mnemonic mnemonic{};
  Reg rd{};
  Reg rs1{};
  Reg rs2{};
  i32 imm = 0;
  BaseSelect base_select = BaseSelect::B0;  // near mnemonics under Dual only
  bool operator==(const Instruction&) const = default;
};

/// One row of the encoding table. funct7 applies to R-format rows and the
/// immediate shifts; it is zero elsewhere.
struct EncodingInfo {
  Mnemonic mnemonic;
  u8 opcode;
  u8 funct3;
  u8 funct7;
  Format format;
};

std::span<const EncodingInfo> encoding_table();
const EncodingInfo& encoding_info(Mnemonic m);

std::string_view mnemonic_name(Mnemonic m);
std::optional<Mnemonic> mnemonic_from_name(std::string_view s);

bool is_near(Mnemonic m);
bool is_load(Mnemonic m);   // integer or FP load, base or near
bool is_store(Mnemonic m);  // integer or FP store, base or near
bool is_fp(Mnemonic m);

/// Near counterpart of a base load/store (lw -> nlw, fsw -> nfsw, ...).
std::optional<Mnemonic> near_form(Mnemonic base);

/// Register implied by a near instruction's window under the given variant.
Reg near_base_reg(Variant v, BaseSelect bs);

u32 encode(const Instruction& instr, Variant variant);
Instruction decode(u32 word, Variant variant);

/// Signed immediate domain of the near instructions: (min, max) inclusive.
std::pair<i32, i32> near_offset_domain(Variant variant);

/// True iff sym_addr - base_addr (as a signed 33-bit difference) lies inside
/// the near offset domain.
bool is_near_reachable(u32 sym_addr, u32 base_addr, Variant variant);

}  // namespace nearv
