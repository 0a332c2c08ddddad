#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nearv/isa.hpp"
#include "nearv/object.hpp"

namespace nearv {

/// Immediate operand of a parsed instruction. Symbolic immediates carry the
/// relocation intent they will be emitted with.
struct AsmImm {
  enum class Kind : u8 {
    Literal,  // plain number
    Sym,      // un-lowered symbol +/- addend (pseudo forms, branches keep PcRel)
    Hi,       // %hi(sym+addend), HI20 relocation
    LoI,      // %lo(sym+addend) in an I-format slot, LO12_I
    LoS,      // %lo(sym+addend) in an S-format slot, LO12_S
    Near,     // near-extended immediate, NEAR_I / NEAR_S
    PcRel,    // branch/jal target, BR13 / JAL21
    Abs,      // 32-bit data word, ABS32 (directives only)
  };
  Kind kind = Kind::Literal;
  i64 value = 0;      // literal, or addend for symbolic kinds
  std::string sym;
  std::optional<u32> pair_id;
};

/// One machine instruction after parsing (and, for pseudo forms, before
/// expansion).
struct InstrStmt {
  enum class Pseudo : u8 { None, AccessSym, La };

  Mnemonic mnemonic{};
  Reg rd{};
  Reg rs1{};
  Reg rs2{};
  BaseSelect bs = BaseSelect::B0;
  bool has_base = false;  // near register form: explicit (gp|t0|t1) base
  Reg scratch{};          // store/FP-load pseudo scratch register
  AsmImm imm;
  Pseudo pseudo = Pseudo::None;
};

struct Stmt {
  int lineno = 0;
  std::vector<std::string> labels;
  std::string op;                  // directive (leading '.') or mnemonic; empty if label-only
  std::vector<std::string> args;   // raw operand strings (directives use these)
  std::optional<InstrStmt> instr;  // set when op is an instruction
};

std::vector<Stmt> parse_asm(std::string_view text);

/// Lowers global-access pseudo instructions: `lw rd, sym` becomes a
/// lui/load pair sharing a fresh pair id, `sw rs, sym, rt` likewise with the
/// scratch as base, `la rd, sym` becomes lui+addi with no pair id. Already
/// expanded input passes through unchanged.
std::vector<Stmt> expand_pseudos(std::vector<Stmt> stmts);

ObjectUnit assemble(std::string_view text, Variant variant);

}  // namespace nearv
