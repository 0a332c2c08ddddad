#include "nearv/assembler.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace nearv {

namespace {

[[noreturn]] void err(Errc c, int lineno, const std::string& msg) {
  fail(c, "line " + std::to_string(lineno) + ": " + msg);
}

bool is_ident(std::string_view s) {
  if (s.empty()) return false;
  if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  for (char c : s.substr(1))
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.')) return false;
  return true;
}

std::optional<Reg> parse_xreg(std::string_view s) {
  static const std::map<std::string_view, u8> abi = {
      {"zero", 0}, {"ra", 1},  {"sp", 2},  {"gp", 3},  {"tp", 4},  {"t0", 5},  {"t1", 6},
      {"t2", 7},   {"s0", 8},  {"fp", 8},  {"s1", 9},  {"a0", 10}, {"a1", 11}, {"a2", 12},
      {"a3", 13},  {"a4", 14}, {"a5", 15}, {"a6", 16}, {"a7", 17}, {"s2", 18}, {"s3", 19},
      {"s4", 20},  {"s5", 21}, {"s6", 22}, {"s7", 23}, {"s8", 24}, {"s9", 25}, {"s10", 26},
      {"s11", 27}, {"t3", 28}, {"t4", 29}, {"t5", 30}, {"t6", 31}};
  if (auto it = abi.find(s); it != abi.end()) return Reg{it->second};
  if (s.size() >= 2 && s[0] == 'x') {
    auto n = parse_int(s.substr(1));
    if (n && *n >= 0 && *n <= 31) return Reg{static_cast<u8>(*n)};
  }
  return std::nullopt;
}

std::optional<Reg> parse_freg(std::string_view s) {
  static const std::map<std::string_view, u8> abi = {
      {"ft0", 0},  {"ft1", 1},  {"ft2", 2},  {"ft3", 3},  {"ft4", 4},  {"ft5", 5},  {"ft6", 6},
      {"ft7", 7},  {"fs0", 8},  {"fs1", 9},  {"fa0", 10}, {"fa1", 11}, {"fa2", 12}, {"fa3", 13},
      {"fa4", 14}, {"fa5", 15}, {"fa6", 16}, {"fa7", 17}, {"fs2", 18}, {"fs3", 19}, {"fs4", 20},
      {"fs5", 21}, {"fs6", 22}, {"fs7", 23}, {"fs8", 24}, {"fs9", 25}, {"fs10", 26}, {"fs11", 27},
      {"ft8", 28}, {"ft9", 29}, {"ft10", 30}, {"ft11", 31}};
  if (auto it = abi.find(s); it != abi.end()) return Reg{it->second};
  if (s.size() >= 2 && s[0] == 'f' && std::isdigit(static_cast<unsigned char>(s[1]))) {
    auto n = parse_int(s.substr(1));
    if (n && *n >= 0 && *n <= 31) return Reg{static_cast<u8>(*n)};
  }
  return std::nullopt;
}

// symbol with optional +/- constant
bool parse_sym_ref(std::string_view s, std::string* name, i64* addend) {
  size_t pos = s.find_first_of("+-", 1);
  std::string_view base = pos == std::string_view::npos ? s : s.substr(0, pos);
  base = trim(base);
  if (!is_ident(base)) return false;
  *name = std::string(base);
  *addend = 0;
  if (pos != std::string_view::npos) {
    auto v = parse_int(trim(s.substr(pos)));
    if (!v) return false;
    *addend = *v;
  }
  return true;
}

// `imm(reg)` or `(reg)`
bool parse_mem(std::string_view s, i64* disp, Reg* base) {
  size_t open = s.rfind('(');
  if (open == std::string_view::npos || s.back() != ')') return false;
  auto reg = parse_xreg(trim(s.substr(open + 1, s.size() - open - 2)));
  if (!reg) return false;
  auto pre = trim(s.substr(0, open));
  *disp = 0;
  if (!pre.empty()) {
    auto v = parse_int(pre);
    if (!v) return false;
    *disp = *v;
  }
  *base = *reg;
  return true;
}

std::vector<std::string> split_operands(std::string_view s) {
  std::vector<std::string> out;
  int depth = 0;
  std::string cur;
  for (char c : s) {
    if (c == '(') depth++;
    if (c == ')') depth--;
    if (c == ',' && depth == 0) {
      out.emplace_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  auto last = trim(cur);
  if (!last.empty()) out.emplace_back(last);
  return out;
}

Reg want_xreg(const std::string& s, int lineno) {
  auto r = parse_xreg(s);
  if (!r) err(Errc::SyntaxError, lineno, "expected register, got '" + s + "'");
  return *r;
}

Reg want_freg(const std::string& s, int lineno) {
  auto r = parse_freg(s);
  if (!r) err(Errc::SyntaxError, lineno, "expected FP register, got '" + s + "'");
  return *r;
}

i64 want_int(const std::string& s, int lineno) {
  auto v = parse_int(s);
  if (!v) err(Errc::SyntaxError, lineno, "expected number, got '" + s + "'");
  return *v;
}

void want_args(const std::vector<std::string>& args, size_t n, int lineno, const char* what) {
  if (args.size() != n)
    err(Errc::SyntaxError, lineno,
        std::string(what) + " expects " + std::to_string(n) + " operands");
}

InstrStmt parse_instr(Mnemonic m, const std::vector<std::string>& a, int lineno) {
  using M = Mnemonic;
  InstrStmt out;
  out.mnemonic = m;

  auto sym_imm = [&](const std::string& s, AsmImm::Kind kind) {
    AsmImm imm;
    imm.kind = kind;
    if (!parse_sym_ref(s, &imm.sym, &imm.value))
      err(Errc::SyntaxError, lineno, "expected symbol reference, got '" + s + "'");
    return imm;
  };

  switch (m) {
    case M::Ebreak:
      want_args(a, 0, lineno, "ebreak");
      return out;

    case M::Lui:
    case M::Auipc:
      want_args(a, 2, lineno, mnemonic_name(m).data());
      out.rd = want_xreg(a[0], lineno);
      out.imm.value = want_int(a[1], lineno);
      return out;

    case M::Jal: {
      // `jal target` implies rd = ra
      std::vector<std::string> args = a;
      if (args.size() == 1) args.insert(args.begin(), "ra");
      want_args(args, 2, lineno, "jal");
      out.rd = want_xreg(args[0], lineno);
      if (auto v = parse_int(args[1])) {
        out.imm.value = *v;
      } else {
        out.imm = sym_imm(args[1], AsmImm::Kind::PcRel);
      }
      return out;
    }

    case M::Jalr:
      want_args(a, 3, lineno, "jalr");
      out.rd = want_xreg(a[0], lineno);
      out.rs1 = want_xreg(a[1], lineno);
      out.imm.value = want_int(a[2], lineno);
      return out;

    case M::Beq: case M::Bne: case M::Blt: case M::Bge: case M::Bltu: case M::Bgeu:
      want_args(a, 3, lineno, "branch");
      out.rs1 = want_xreg(a[0], lineno);
      out.rs2 = want_xreg(a[1], lineno);
      if (auto v = parse_int(a[2])) {
        out.imm.value = *v;
      } else {
        out.imm = sym_imm(a[2], AsmImm::Kind::PcRel);
      }
      return out;

    case M::Addi: case M::Slti: case M::Sltiu: case M::Xori: case M::Ori: case M::Andi:
    case M::Slli: case M::Srli: case M::Srai:
      want_args(a, 3, lineno, mnemonic_name(m).data());
      out.rd = want_xreg(a[0], lineno);
      out.rs1 = want_xreg(a[1], lineno);
      out.imm.value = want_int(a[2], lineno);
      return out;

    case M::Add: case M::Sub: case M::Sll: case M::Slt: case M::Sltu: case M::Xor:
    case M::Srl: case M::Sra: case M::Or: case M::And:
      want_args(a, 3, lineno, mnemonic_name(m).data());
      out.rd = want_xreg(a[0], lineno);
      out.rs1 = want_xreg(a[1], lineno);
      out.rs2 = want_xreg(a[2], lineno);
      return out;

    case M::Lb: case M::Lh: case M::Lw: case M::Lbu: case M::Lhu: {
      want_args(a, 2, lineno, "load");
      out.rd = want_xreg(a[0], lineno);
      i64 disp;
      Reg base;
      if (parse_mem(a[1], &disp, &base)) {
        out.rs1 = base;
        out.imm.value = disp;
      } else {
        if (out.rd == REG_ZERO)
          err(Errc::SyntaxError, lineno, "global load needs a writable rd (x0 given)");
        out.imm = sym_imm(a[1], AsmImm::Kind::Sym);
        out.pseudo = InstrStmt::Pseudo::AccessSym;
      }
      return out;
    }

    case M::Flw: {
      // `flw fd, imm(rs1)` or `flw fd, sym, rt`
      out.rd = want_freg(a.empty() ? "" : a[0], lineno);
      i64 disp;
      Reg base;
      if (a.size() == 2 && parse_mem(a[1], &disp, &base)) {
        out.rs1 = base;
        out.imm.value = disp;
        return out;
      }
      want_args(a, 3, lineno, "flw with symbol");
      out.scratch = want_xreg(a[2], lineno);
      if (out.scratch == REG_ZERO)
        err(Errc::SyntaxError, lineno, "address scratch register cannot be x0");
      out.imm = sym_imm(a[1], AsmImm::Kind::Sym);
      out.pseudo = InstrStmt::Pseudo::AccessSym;
      return out;
    }

    case M::Sb: case M::Sh: case M::Sw: case M::Fsw: {
      bool fp = m == M::Fsw;
      if (a.empty()) err(Errc::SyntaxError, lineno, "store expects operands");
      out.rs2 = fp ? want_freg(a[0], lineno) : want_xreg(a[0], lineno);
      i64 disp;
      Reg base;
      if (a.size() == 2 && parse_mem(a[1], &disp, &base)) {
        out.rs1 = base;
        out.imm.value = disp;
        return out;
      }
      want_args(a, 3, lineno, "store with symbol");
      out.scratch = want_xreg(a[2], lineno);
      if (out.scratch == REG_ZERO)
        err(Errc::SyntaxError, lineno, "address scratch register cannot be x0");
      if (!fp && out.scratch == out.rs2)
        err(Errc::SyntaxError, lineno, "store scratch register must differ from the source");
      out.imm = sym_imm(a[1], AsmImm::Kind::Sym);
      out.pseudo = InstrStmt::Pseudo::AccessSym;
      return out;
    }

    case M::Nlb: case M::Nlh: case M::Nlw: case M::Nlbu: case M::Nlhu: case M::Nflw:
    case M::Nsb: case M::Nsh: case M::Nsw: case M::Nfsw: {
      want_args(a, 2, lineno, "near access");
      bool load = is_load(m);
      bool fp = is_fp(m);
      Reg value = fp ? want_freg(a[0], lineno) : want_xreg(a[0], lineno);
      (load ? out.rd : out.rs2) = value;
      i64 disp;
      Reg base;
      if (parse_mem(a[1], &disp, &base)) {
        if (base != REG_GP && base != REG_T0 && base != REG_T1)
          err(Errc::SyntaxError, lineno, "near base register must be gp, t0 or t1");
        out.has_base = true;
        out.rs1 = base;
        out.bs = base == REG_T1 ? BaseSelect::B1 : BaseSelect::B0;
        out.imm.value = disp;
      } else {
        out.imm = sym_imm(a[1], AsmImm::Kind::Near);
      }
      return out;
    }
  }
  err(Errc::InternalError, lineno, "unhandled mnemonic");
}

struct SecState {
  std::string name;
  SectionKind kind{};
  u32 align = 4;
  u32 cur_off = 0;       // working cursor, reset between passes
  u32 size = 0;          // fixed after pass 1
  std::vector<u8> bytes; // filled in pass 2
};

struct LabelDef {
  std::string section;
  u32 offset = 0;
  int lineno = 0;
};

constexpr u32 kNopWord = 0x00000013;

class Assembler {
public:
  Assembler(Variant variant) : variant_(variant) {}

  ObjectUnit run(const std::vector<Stmt>& stmts) {
    pass1(stmts);
    pass2(stmts);
    return finish();
  }

private:
  Variant variant_;
  std::vector<SecState> secs_;
  int cur_ = -1;
  std::map<std::string, LabelDef> labels_;
  std::set<std::string> globals_;
  std::vector<std::pair<std::string, std::pair<u32, int>>> size_overrides_;  // name -> (size, line)
  std::vector<Relocation> relocs_;
  bool emitting_ = false;

  SecState& sec(int lineno) {
    if (cur_ < 0) err(Errc::SyntaxError, lineno, "no active section (missing .text/.data?)");
    return secs_[cur_];
  }

  void switch_section(const std::string& name, SectionKind kind, int) {
    for (size_t i = 0; i < secs_.size(); i++)
      if (secs_[i].name == name) {
        cur_ = static_cast<int>(i);
        return;
      }
    secs_.push_back(SecState{name, kind, 4, 0, 0, {}});
    cur_ = static_cast<int>(secs_.size()) - 1;
  }

  u32 here() const { return secs_[cur_].cur_off; }

  void advance(u32 n) { secs_[cur_].cur_off += n; }

  void emit_bytes(std::initializer_list<u8> bs) {
    SecState& s = secs_[cur_];
    if (emitting_ && s.kind != SectionKind::BSS)
      for (u8 b : bs) s.bytes.push_back(b);
    advance(static_cast<u32>(bs.size()));
  }

  void emit_word(u32 w) {
    emit_bytes({static_cast<u8>(w), static_cast<u8>(w >> 8), static_cast<u8>(w >> 16),
                static_cast<u8>(w >> 24)});
  }

  void define_label(const std::string& name, int lineno) {
    if (emitting_) return;
    if (labels_.count(name))
      err(Errc::DuplicateLabel, lineno, "label '" + name + "' already defined");
    labels_[name] = LabelDef{sec(lineno).name, here(), lineno};
  }

  void pass1(const std::vector<Stmt>& stmts) {
    emitting_ = false;
    for (const auto& st : stmts) handle(st);
    for (auto& s : secs_) {
      s.size = s.cur_off;
      s.cur_off = 0;
    }
    cur_ = -1;
  }

  void pass2(const std::vector<Stmt>& stmts) {
    emitting_ = true;
    for (const auto& st : stmts) handle(st);
  }

  void handle(const Stmt& st) {
    if (!st.labels.empty() && cur_ < 0)
      err(Errc::SyntaxError, st.lineno, "label outside any section");
    for (const auto& l : st.labels) define_label(l, st.lineno);
    if (st.op.empty()) return;
    if (st.op[0] == '.') directive(st);
    else instruction(st);
  }

  void directive(const Stmt& st) {
    const std::string& d = st.op;
    int ln = st.lineno;

    if (d == ".text") return switch_section(".text", SectionKind::Code, ln);
    if (d == ".data") return switch_section(".data", SectionKind::Data, ln);
    if (d == ".rodata") return switch_section(".rodata", SectionKind::ROData, ln);
    if (d == ".bss") return switch_section(".bss", SectionKind::BSS, ln);

    if (d == ".global") {
      want_args(st.args, 1, ln, ".global");
      if (!is_ident(st.args[0])) err(Errc::SyntaxError, ln, "bad symbol name");
      globals_.insert(st.args[0]);
      return;
    }

    if (d == ".size") {
      want_args(st.args, 2, ln, ".size");
      i64 v = want_int(st.args[1], ln);
      if (v < 0) err(Errc::SyntaxError, ln, ".size must be non-negative");
      if (!emitting_) size_overrides_.emplace_back(st.args[0], std::make_pair(static_cast<u32>(v), ln));
      return;
    }

    SecState& s = sec(ln);

    if (d == ".align") {
      want_args(st.args, 1, ln, ".align");
      i64 n = want_int(st.args[0], ln);
      if (n <= 0 || !is_pow2(static_cast<u32>(n)))
        err(Errc::SyntaxError, ln, ".align needs a positive power of two");
      u32 a = static_cast<u32>(n);
      if (s.kind == SectionKind::Code && a % 4)
        err(Errc::SyntaxError, ln, ".align in code must be a multiple of 4");
      s.align = std::max(s.align, a);
      u32 target = align_up(here(), a);
      while (here() < target) {
        if (s.kind == SectionKind::Code) emit_word(kNopWord);
        else emit_bytes({0});
      }
      return;
    }

    if (d == ".word" || d == ".half" || d == ".byte") {
      if (s.kind == SectionKind::BSS)
        err(Errc::SyntaxError, ln, d + " not allowed in .bss");
      if (st.args.empty()) err(Errc::SyntaxError, ln, d + " needs at least one value");
      u32 width = d == ".word" ? 4 : d == ".half" ? 2 : 1;
      for (const auto& arg : st.args) {
        if (auto v = parse_int(arg)) {
          i64 lo = -(i64(1) << (width * 8 - 1)), hi = (i64(1) << (width * 8)) - 1;
          if (*v < lo || *v > hi) err(Errc::SyntaxError, ln, "value out of range for " + d);
          u64 uv = static_cast<u64>(*v);
          for (u32 i = 0; i < width; i++) emit_bytes({static_cast<u8>(uv >> (8 * i))});
        } else {
          std::string name;
          i64 addend;
          if (width != 4 || !parse_sym_ref(arg, &name, &addend))
            err(Errc::SyntaxError, ln, "bad value '" + arg + "' for " + d);
          if (emitting_) {
            relocs_.push_back(Relocation{s.name, here(), RelocKind::ABS32, name,
                                         static_cast<i32>(addend), {}});
            note_symbol_use(name, ln);
          }
          emit_bytes({0, 0, 0, 0});
        }
      }
      return;
    }

    if (d == ".space") {
      want_args(st.args, 1, ln, ".space");
      i64 n = want_int(st.args[0], ln);
      if (n < 0) err(Errc::SyntaxError, ln, ".space must be non-negative");
      if (s.kind == SectionKind::Code) err(Errc::SyntaxError, ln, ".space not allowed in code");
      for (i64 i = 0; i < n; i++) emit_bytes({0});
      return;
    }

    err(Errc::SyntaxError, ln, "unknown directive " + d);
  }

  void note_symbol_use(const std::string& name, int lineno) {
    if (labels_.count(name) || globals_.count(name)) return;
    err(Errc::UndefinedLocalLabel, lineno,
        "'" + name + "' is not defined and not declared .global");
  }

  void instruction(const Stmt& st) {
    int ln = st.lineno;
    if (sec(ln).kind != SectionKind::Code)
      err(Errc::SyntaxError, ln, "instruction outside a code section");
    if (!st.instr) err(Errc::InternalError, ln, "instruction without payload");
    const InstrStmt& is = *st.instr;
    if (is.pseudo != InstrStmt::Pseudo::None)
      err(Errc::InternalError, ln, "unexpanded pseudo reached encoding");

    if (!emitting_) {
      emit_word(0);
      return;
    }

    Instruction ins;
    ins.mnemonic = is.mnemonic;
    ins.rd = is.rd;
    ins.rs1 = is.rs1;
    ins.rs2 = is.rs2;

    const AsmImm& imm = is.imm;
    std::optional<Relocation> reloc;
    u32 off = here();
    SecState& s = sec(ln);

    switch (imm.kind) {
      case AsmImm::Kind::Literal:
        if (imm.value < INT32_MIN || imm.value > INT32_MAX)
          err(Errc::ImmediateOutOfRange, ln, "immediate does not fit in 32 bits");
        ins.imm = static_cast<i32>(imm.value);
        break;
      case AsmImm::Kind::Hi:
        reloc = Relocation{s.name, off, RelocKind::HI20, imm.sym, static_cast<i32>(imm.value),
                           imm.pair_id};
        break;
      case AsmImm::Kind::LoI:
        reloc = Relocation{s.name, off, RelocKind::LO12_I, imm.sym, static_cast<i32>(imm.value),
                           imm.pair_id};
        break;
      case AsmImm::Kind::LoS:
        reloc = Relocation{s.name, off, RelocKind::LO12_S, imm.sym, static_cast<i32>(imm.value),
                           imm.pair_id};
        break;
      case AsmImm::Kind::Near:
        reloc = Relocation{s.name, off, is_load(is.mnemonic) ? RelocKind::NEAR_I : RelocKind::NEAR_S,
                           imm.sym, static_cast<i32>(imm.value), {}};
        break;
      case AsmImm::Kind::PcRel:
        reloc = Relocation{s.name, off,
                           is.mnemonic == Mnemonic::Jal ? RelocKind::JAL21 : RelocKind::BR13,
                           imm.sym, static_cast<i32>(imm.value), {}};
        break;
      case AsmImm::Kind::Sym:
      case AsmImm::Kind::Abs:
        err(Errc::InternalError, ln, "unlowered symbolic immediate");
    }

    if (is_near(is.mnemonic)) {
      if (is.has_base) {
        Reg want = near_base_reg(variant_, is.bs);
        if (variant_ == Variant::SingleRange128K && is.rs1 != REG_GP)
          err(Errc::VariantMismatch, ln, "single-range near base must be gp");
        if (variant_ == Variant::DualRange64K && is.rs1 == REG_GP)
          err(Errc::VariantMismatch, ln, "dual-range near base must be t0 or t1");
        ins.rs1 = want;
        ins.base_select = variant_ == Variant::DualRange64K ? is.bs : BaseSelect::B0;
      } else {
        // window base is assigned at link time; bits patched by NEAR_* resolve
        ins.base_select = BaseSelect::B0;
        ins.rs1 = near_base_reg(variant_, BaseSelect::B0);
      }
    }

    u32 word;
    try {
      word = encode(ins, variant_);
    } catch (const ToolError& e) {
      std::string w = e.what();
      size_t p = w.find(": ");
      fail(e.code(),
           "line " + std::to_string(ln) + ": " + (p == std::string::npos ? w : w.substr(p + 2)));
    }
    if (reloc) {
      note_symbol_use(reloc->symbol, ln);
      relocs_.push_back(*reloc);
    }
    emit_word(word);
  }

  ObjectUnit finish() {
    ObjectUnit unit;
    for (auto& s : secs_) {
      Section out;
      out.name = s.name;
      out.kind = s.kind;
      out.align = s.align;
      if (s.kind == SectionKind::BSS) out.bss_size = s.size;
      else out.bytes = std::move(s.bytes);
      unit.sections.push_back(std::move(out));
    }

    // default symbol sizes: span to the next label in the section
    std::map<std::string, std::vector<std::pair<u32, std::string>>> by_sec;
    for (const auto& [name, def] : labels_) by_sec[def.section].emplace_back(def.offset, name);
    std::map<std::string, u32> sizes;
    for (auto& [sec_name, list] : by_sec) {
      std::sort(list.begin(), list.end());
      const Section* s = unit.find_section(sec_name);
      for (size_t i = 0; i < list.size(); i++) {
        u32 end = s->size();
        for (size_t j = i + 1; j < list.size(); j++) {
          if (list[j].first > list[i].first) {
            end = list[j].first;
            break;
          }
        }
        sizes[list[i].second] = end - list[i].first;
      }
    }
    for (const auto& [name, ov] : size_overrides_) {
      if (!labels_.count(name))
        err(Errc::SyntaxError, ov.second, ".size names unknown label '" + name + "'");
      sizes[name] = ov.first;
    }

    for (const auto& [name, def] : labels_) {
      unit.symbols.push_back(Symbol{name, def.section, def.offset, sizes[name],
                                    globals_.count(name) ? SymScope::Global : SymScope::Local});
    }
    // referenced globals with no local definition become undefined imports
    std::set<std::string> undef;
    for (const auto& r : relocs_)
      if (!labels_.count(r.symbol)) undef.insert(r.symbol);
    for (const auto& name : undef)
      unit.symbols.push_back(Symbol{name, kUndefSection, 0, 0, SymScope::Global});

    unit.relocations = std::move(relocs_);
    unit.canonicalize();
    return unit;
  }
};

}  // namespace

std::vector<Stmt> parse_asm(std::string_view text) {
  std::vector<Stmt> out;
  int lineno = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    lineno++;

    if (size_t hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    Stmt st;
    st.lineno = lineno;

    // peel leading labels
    while (true) {
      size_t colon = line.find(':');
      if (colon == std::string_view::npos) break;
      auto head = trim(line.substr(0, colon));
      if (!is_ident(head)) break;
      // a ':' inside an operand never follows a bare identifier at the start
      st.labels.emplace_back(head);
      line = trim(line.substr(colon + 1));
    }
    if (line.empty()) {
      out.push_back(std::move(st));
      continue;
    }

    size_t sp = line.find_first_of(" \t");
    st.op = std::string(sp == std::string_view::npos ? line : line.substr(0, sp));
    std::string_view rest = sp == std::string_view::npos ? "" : trim(line.substr(sp));
    st.args = split_operands(rest);

    if (st.op[0] != '.' && st.op != "la") {
      auto m = mnemonic_from_name(st.op);
      if (!m) fail(Errc::UnknownMnemonic, "line " + std::to_string(lineno) + ": '" + st.op + "'");
      st.instr = parse_instr(*m, st.args, lineno);
    } else if (st.op == "la") {
      want_args(st.args, 2, lineno, "la");
      InstrStmt is;
      is.pseudo = InstrStmt::Pseudo::La;
      is.rd = want_xreg(st.args[0], lineno);
      is.imm.kind = AsmImm::Kind::Sym;
      if (!parse_sym_ref(st.args[1], &is.imm.sym, &is.imm.value))
        err(Errc::SyntaxError, lineno, "la expects a symbol operand");
      st.instr = is;
    }
    out.push_back(std::move(st));
  }
  return out;
}

std::vector<Stmt> expand_pseudos(std::vector<Stmt> stmts) {
  u32 next_pair = 1;
  for (const auto& st : stmts)
    if (st.instr && st.instr->imm.pair_id) next_pair = std::max(next_pair, *st.instr->imm.pair_id + 1);

  std::vector<Stmt> out;
  out.reserve(stmts.size());
  for (auto& st : stmts) {
    if (!st.instr || st.instr->pseudo == InstrStmt::Pseudo::None) {
      out.push_back(std::move(st));
      continue;
    }
    const InstrStmt is = *st.instr;

    Stmt first = st;
    Stmt second;
    second.lineno = st.lineno;

    InstrStmt lui;
    lui.mnemonic = Mnemonic::Lui;
    lui.imm.sym = is.imm.sym;
    lui.imm.value = is.imm.value;
    lui.imm.kind = AsmImm::Kind::Hi;

    InstrStmt op = is;
    op.pseudo = InstrStmt::Pseudo::None;
    op.imm.sym = is.imm.sym;
    op.imm.value = is.imm.value;

    if (is.pseudo == InstrStmt::Pseudo::La) {
      lui.rd = is.rd;
      op.mnemonic = Mnemonic::Addi;
      op.rs1 = is.rd;
      op.imm.kind = AsmImm::Kind::LoI;  // address formation, never paired
    } else if (is_load(is.mnemonic) && !is_fp(is.mnemonic)) {
      lui.rd = is.rd;
      op.rs1 = is.rd;
      op.imm.kind = AsmImm::Kind::LoI;
      lui.imm.pair_id = op.imm.pair_id = next_pair++;
    } else if (is.mnemonic == Mnemonic::Flw) {
      lui.rd = is.scratch;
      op.rs1 = is.scratch;
      op.imm.kind = AsmImm::Kind::LoI;
      lui.imm.pair_id = op.imm.pair_id = next_pair++;
    } else {  // integer or FP store
      lui.rd = is.scratch;
      op.rs1 = is.scratch;
      op.imm.kind = AsmImm::Kind::LoS;
      lui.imm.pair_id = op.imm.pair_id = next_pair++;
    }

    first.op = "lui";
    first.args.clear();
    first.instr = lui;
    second.op = std::string(mnemonic_name(op.mnemonic));
    second.instr = op;
    out.push_back(std::move(first));
    out.push_back(std::move(second));
  }
  return out;
}

ObjectUnit assemble(std::string_view text, Variant variant) {
  auto stmts = expand_pseudos(parse_asm(text));
  Assembler as(variant);
  return as.run(stmts);
}

}  // namespace nearv
