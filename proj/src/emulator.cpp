#include "nearv/emulator.hpp"

#include <cstdio>

namespace nearv {

std::string_view trap_name(Trap t) {
  switch (t) {
    case Trap::IllegalInstruction: return "IllegalInstruction";
    case Trap::UnmappedAccess:     return "UnmappedAccess";
    case Trap::MisalignedAccess:   return "MisalignedAccess";
  }
  return "?";
}

bool SparseMemory::is_mapped(u32 addr) const {
  auto it = pages_.find(addr >> kPageBits);
  return it != pages_.end() && it->second.mapped[addr & (kPageSize - 1)];
}

u8 SparseMemory::peek(u32 addr) const {
  auto it = pages_.find(addr >> kPageBits);
  return it == pages_.end() ? 0 : it->second.data[addr & (kPageSize - 1)];
}

void SparseMemory::poke(u32 addr, u8 value) {
  Page& p = pages_[addr >> kPageBits];
  p.data[addr & (kPageSize - 1)] = value;
  p.mapped[addr & (kPageSize - 1)] = true;
}

void SparseMemory::map_zero(u32 addr, u32 len) {
  for (u32 i = 0; i < len; i++) poke(addr + i, 0);
}

std::vector<std::pair<u32, u8>> SparseMemory::contents() const {
  std::vector<std::pair<u32, u8>> out;
  for (const auto& [page_no, page] : pages_) {
    for (u32 i = 0; i < kPageSize; i++)
      if (page.mapped[i]) out.emplace_back((page_no << kPageBits) + i, page.data[i]);
  }
  return out;
}

MachineState load_image(const Image& image) {
  MachineState st;
  st.variant = image.variant;
  st.pc = image.entry;

  auto claim = [&](u32 addr, u32 len) {
    for (u32 i = 0; i < len; i++)
      if (st.mem.is_mapped(addr + i))
        fail(Errc::OverlapError, "image ranges overlap at " + to_hex(addr + i));
  };
  for (const auto& b : image.blobs) {
    claim(b.addr, static_cast<u32>(b.bytes.size()));
    for (u32 i = 0; i < b.bytes.size(); i++) st.mem.poke(b.addr + i, b.bytes[i]);
  }
  for (const auto& z : image.zeros) {
    claim(z.addr, z.size);
    st.mem.map_zero(z.addr, z.size);
  }
  for (const auto& [name, value] : image.reg_init) {
    if (name == "gp") st.x[REG_GP.index] = value;
    else if (name == "t0") st.x[REG_T0.index] = value;
    else if (name == "t1") st.x[REG_T1.index] = value;
    else fail(Errc::ParseError, "unknown base register '" + name + "' in image");
  }
  return st;
}

namespace {

bool range_mapped(const SparseMemory& m, u32 addr, u32 len) {
  for (u32 i = 0; i < len; i++)
    if (!m.is_mapped(addr + i)) return false;
  return true;
}

u32 read_mem(const SparseMemory& m, u32 addr, u32 len) {
  u32 v = 0;
  for (u32 i = 0; i < len; i++) v |= static_cast<u32>(m.peek(addr + i)) << (8 * i);
  return v;
}

struct Access {
  u32 width;
  bool sign;
};

std::optional<Access> load_access(Mnemonic m) {
  switch (m) {
    case Mnemonic::Lb:  case Mnemonic::Nlb:  return Access{1, true};
    case Mnemonic::Lh:  case Mnemonic::Nlh:  return Access{2, true};
    case Mnemonic::Lw:  case Mnemonic::Nlw:  return Access{4, true};
    case Mnemonic::Lbu: case Mnemonic::Nlbu: return Access{1, false};
    case Mnemonic::Lhu: case Mnemonic::Nlhu: return Access{2, false};
    case Mnemonic::Flw: case Mnemonic::Nflw: return Access{4, false};
    default: return std::nullopt;
  }
}

std::optional<u32> store_width(Mnemonic m) {
  switch (m) {
    case Mnemonic::Sb: case Mnemonic::Nsb: return 1;
    case Mnemonic::Sh: case Mnemonic::Nsh: return 2;
    case Mnemonic::Sw: case Mnemonic::Nsw: return 4;
    case Mnemonic::Fsw: case Mnemonic::Nfsw: return 4;
    default: return std::nullopt;
  }
}

}  // namespace

StepResult step(MachineState& st) {
  if (st.pc & 3) return StepResult{false, Trap::MisalignedAccess};
  if (!range_mapped(st.mem, st.pc, 4)) return StepResult{false, Trap::UnmappedAccess};
  u32 word = read_mem(st.mem, st.pc, 4);

  Instruction in;
  try {
    in = decode(word, st.variant);
  } catch (const ToolError&) {
    return StepResult{false, Trap::IllegalInstruction};
  }

  using M = Mnemonic;
  u32 next_pc = st.pc + 4;
  const u32 a = st.reg(in.rs1);
  const u32 b = st.reg(in.rs2);
  const i32 imm = in.imm;

  // loads and stores, base and near alike: decode already folded the window
  // base register into rs1
  if (auto acc = load_access(in.mnemonic)) {
    u32 ea = a + static_cast<u32>(imm);
    if (ea % acc->width) return StepResult{false, Trap::MisalignedAccess};
    if (!range_mapped(st.mem, ea, acc->width)) return StepResult{false, Trap::UnmappedAccess};
    u32 v = read_mem(st.mem, ea, acc->width);
    if (acc->sign && acc->width < 4) v = static_cast<u32>(sign_extend(v, acc->width * 8));
    if (is_fp(in.mnemonic)) st.f[in.rd.index] = v;
    else st.set_reg(in.rd, v);
    st.pc = next_pc;
    st.instret++;
    return {};
  }

  if (auto width = store_width(in.mnemonic)) {
    u32 ea = a + static_cast<u32>(imm);
    u32 w = *width;
    if (ea % w) return StepResult{false, Trap::MisalignedAccess};
    if (!range_mapped(st.mem, ea, w)) return StepResult{false, Trap::UnmappedAccess};
    u32 v = is_fp(in.mnemonic) ? st.f[in.rs2.index] : b;
    if (w < 4) v &= (1u << (8 * w)) - 1;
    for (u32 i = 0; i < w; i++) st.mem.poke(ea + i, static_cast<u8>(v >> (8 * i)));
    st.store_trace.push_back(StoreEvent{ea, static_cast<u8>(w), v});
    st.pc = next_pc;
    st.instret++;
    return {};
  }

  switch (in.mnemonic) {
    case M::Lui: st.set_reg(in.rd, static_cast<u32>(imm) << 12); break;
    case M::Auipc: st.set_reg(in.rd, st.pc + (static_cast<u32>(imm) << 12)); break;

    case M::Jal: {
      u32 target = st.pc + static_cast<u32>(imm);
      if (target & 3) return StepResult{false, Trap::MisalignedAccess};
      st.set_reg(in.rd, st.pc + 4);
      next_pc = target;
      break;
    }
    case M::Jalr: {
      u32 target = (a + static_cast<u32>(imm)) & ~1u;
      if (target & 3) return StepResult{false, Trap::MisalignedAccess};
      st.set_reg(in.rd, st.pc + 4);
      next_pc = target;
      break;
    }

    case M::Beq: case M::Bne: case M::Blt: case M::Bge: case M::Bltu: case M::Bgeu: {
      bool taken = false;
      switch (in.mnemonic) {
        case M::Beq:  taken = a == b; break;
        case M::Bne:  taken = a != b; break;
        case M::Blt:  taken = static_cast<i32>(a) < static_cast<i32>(b); break;
        case M::Bge:  taken = static_cast<i32>(a) >= static_cast<i32>(b); break;
        case M::Bltu: taken = a < b; break;
        case M::Bgeu: taken = a >= b; break;
        default: break;
      }
      if (taken) {
        u32 target = st.pc + static_cast<u32>(imm);
        if (target & 3) return StepResult{false, Trap::MisalignedAccess};
        next_pc = target;
      }
      break;
    }

    case M::Addi:  st.set_reg(in.rd, a + static_cast<u32>(imm)); break;
    case M::Slti:  st.set_reg(in.rd, static_cast<i32>(a) < imm ? 1 : 0); break;
    case M::Sltiu: st.set_reg(in.rd, a < static_cast<u32>(imm) ? 1 : 0); break;
    case M::Xori:  st.set_reg(in.rd, a ^ static_cast<u32>(imm)); break;
    case M::Ori:   st.set_reg(in.rd, a | static_cast<u32>(imm)); break;
    case M::Andi:  st.set_reg(in.rd, a & static_cast<u32>(imm)); break;
    case M::Slli:  st.set_reg(in.rd, a << (imm & 31)); break;
    case M::Srli:  st.set_reg(in.rd, a >> (imm & 31)); break;
    case M::Srai:  st.set_reg(in.rd, static_cast<u32>(static_cast<i32>(a) >> (imm & 31))); break;

    case M::Add:  st.set_reg(in.rd, a + b); break;
    case M::Sub:  st.set_reg(in.rd, a - b); break;
    case M::Sll:  st.set_reg(in.rd, a << (b & 31)); break;
    case M::Slt:  st.set_reg(in.rd, static_cast<i32>(a) < static_cast<i32>(b) ? 1 : 0); break;
    case M::Sltu: st.set_reg(in.rd, a < b ? 1 : 0); break;
    case M::Xor:  st.set_reg(in.rd, a ^ b); break;
    case M::Srl:  st.set_reg(in.rd, a >> (b & 31)); break;
    case M::Sra:  st.set_reg(in.rd, static_cast<u32>(static_cast<i32>(a) >> (b & 31))); break;
    case M::Or:   st.set_reg(in.rd, a | b); break;
    case M::And:  st.set_reg(in.rd, a & b); break;

    case M::Ebreak:
      st.instret++;
      return StepResult{true, {}};

    default:
      return StepResult{false, Trap::IllegalInstruction};
  }

  st.pc = next_pc;
  st.instret++;
  return {};
}

RunResult run(MachineState& st, u64 max_steps) {
  for (u64 n = 0; n < max_steps; n++) {
    StepResult r = step(st);
    if (r.halted) return RunResult{RunOutcome::Halted, {}, st.instret};
    if (r.trap) return RunResult{RunOutcome::Trapped, r.trap, st.instret};
  }
  return RunResult{RunOutcome::StepLimit, {}, st.instret};
}

std::string dump_final_state(const MachineState& st) {
  char buf[64];
  std::string out;
  std::snprintf(buf, sizeof buf, "pc 0x%08x instret %llu\n", st.pc,
                static_cast<unsigned long long>(st.instret));
  out += buf;
  for (int i = 0; i < 32; i++) {
    std::snprintf(buf, sizeof buf, "x%-2d 0x%08x%s", i, st.x[i], (i % 4 == 3) ? "\n" : "  ");
    out += buf;
  }
  for (int i = 0; i < 32; i++) {
    if (!st.f[i]) continue;
    std::snprintf(buf, sizeof buf, "f%-2d 0x%08x\n", i, st.f[i]);
    out += buf;
  }
  out += "stores " + std::to_string(st.store_trace.size()) + "\n";
  for (const auto& e : st.store_trace) {
    std::snprintf(buf, sizeof buf, "store 0x%08x %u 0x%08x\n", e.addr, e.width, e.value);
    out += buf;
  }
  return out;
}

}  // namespace nearv
