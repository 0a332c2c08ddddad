#include "nearv/disasm.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

namespace nearv {

namespace {

const char* kXNames[32] = {"zero", "ra", "sp", "gp", "tp", "t0", "t1", "t2", "s0", "s1", "a0",
                           "a1",   "a2", "a3", "a4", "a5", "a6", "a7", "s2", "s3", "s4", "s5",
                           "s6",   "s7", "s8", "s9", "s10", "s11", "t3", "t4", "t5", "t6"};
const char* kFNames[32] = {"ft0", "ft1", "ft2", "ft3", "ft4", "ft5", "ft6",  "ft7",
                           "fs0", "fs1", "fa0", "fa1", "fa2", "fa3", "fa4",  "fa5",
                           "fa6", "fa7", "fs2", "fs3", "fs4", "fs5", "fs6",  "fs7",
                           "fs8", "fs9", "fs10", "fs11", "ft8", "ft9", "ft10", "ft11"};

std::string imm_str(i32 v) { return std::to_string(v); }

}  // namespace

std::string reg_name(Reg r) { return r.index < 32 ? kXNames[r.index] : "x?"; }
std::string freg_name(Reg r) { return r.index < 32 ? kFNames[r.index] : "f?"; }

std::string disassemble(const Instruction& in) {
  using M = Mnemonic;
  const std::string m{mnemonic_name(in.mnemonic)};
  const std::string rd = reg_name(in.rd), rs1 = reg_name(in.rs1), rs2 = reg_name(in.rs2);

  switch (in.mnemonic) {
    case M::Ebreak:
      return m;
    case M::Lui:
    case M::Auipc:
      return m + " " + rd + ", " + to_hex(static_cast<u32>(in.imm));
    case M::Jal:
      return m + " " + rd + ", " + imm_str(in.imm);
    case M::Jalr:
      return m + " " + rd + ", " + rs1 + ", " + imm_str(in.imm);
    case M::Beq: case M::Bne: case M::Blt: case M::Bge: case M::Bltu: case M::Bgeu:
      return m + " " + rs1 + ", " + rs2 + ", " + imm_str(in.imm);
    default:
      break;
  }

  if (is_load(in.mnemonic)) {
    const std::string dst = is_fp(in.mnemonic) ? freg_name(in.rd) : rd;
    return m + " " + dst + ", " + imm_str(in.imm) + "(" + rs1 + ")";
  }
  if (is_store(in.mnemonic)) {
    const std::string src = is_fp(in.mnemonic) ? freg_name(in.rs2) : rs2;
    return m + " " + src + ", " + imm_str(in.imm) + "(" + rs1 + ")";
  }
  if (encoding_info(in.mnemonic).format == Format::R)
    return m + " " + rd + ", " + rs1 + ", " + rs2;
  return m + " " + rd + ", " + rs1 + ", " + imm_str(in.imm);  // OP-IMM
}

std::string disassemble_word(u32 word, Variant variant) {
  try {
    return disassemble(decode(word, variant));
  } catch (const ToolError&) {
    char buf[32];
    std::snprintf(buf, sizeof buf, ".word 0x%08x", word);
    return buf;
  }
}

std::string disassemble_object(const ObjectUnit& unit, Variant variant) {
  std::string out;
  char buf[64];
  for (const Section& sec : unit.sections) {
    if (sec.kind != SectionKind::Code) continue;
    out += "section " + sec.name + "\n";

    std::map<u32, std::string> notes;
    for (const auto& r : unit.relocations) {
      if (r.section != sec.name) continue;
      std::string n = std::string(reloc_kind_name(r.kind)) + " " + r.symbol;
      if (r.addend) n += (r.addend > 0 ? "+" : "") + std::to_string(r.addend);
      if (r.pair_id) n += " pair " + std::to_string(*r.pair_id);
      notes[r.offset] = std::move(n);
    }
    std::map<u32, std::string> labels;
    for (const auto& s : unit.symbols)
      if (s.section == sec.name) labels[s.offset] += s.name + ":\n";

    for (u32 off = 0; off + 4 <= sec.bytes.size(); off += 4) {
      if (auto it = labels.find(off); it != labels.end()) out += it->second;
      u32 w = sec.bytes[off] | sec.bytes[off + 1] << 8 | sec.bytes[off + 2] << 16 |
              sec.bytes[off + 3] << 24;
      std::snprintf(buf, sizeof buf, "%6u:  %08x  ", off, w);
      out += buf;
      out += disassemble_word(w, variant);
      if (auto it = notes.find(off); it != notes.end()) out += "    ; " + it->second;
      out += "\n";
    }
  }
  return out;
}

std::string disassemble_image(const Image& img) {
  std::string out;
  char buf[64];
  std::map<u32, std::string> labels;
  for (const auto& [name, addr] : img.symbols) labels[addr] += "<" + name + ">:\n";

  std::vector<CodeRange> ranges = img.code_ranges;
  std::sort(ranges.begin(), ranges.end(),
            [](const CodeRange& a, const CodeRange& b) { return a.addr < b.addr; });

  for (const CodeRange& c : ranges) {
    for (u32 addr = c.addr; addr + 4 <= c.addr + c.size; addr += 4) {
      u32 w = 0;
      bool have = false;
      for (const Blob& b : img.blobs) {
        if (addr >= b.addr && addr + 4 <= b.addr + b.bytes.size()) {
          u32 off = addr - b.addr;
          w = b.bytes[off] | b.bytes[off + 1] << 8 | b.bytes[off + 2] << 16 | b.bytes[off + 3] << 24;
          have = true;
          break;
        }
      }
      if (!have) continue;
      if (auto it = labels.find(addr); it != labels.end()) out += it->second;
      std::snprintf(buf, sizeof buf, "%08x:  %08x  ", addr, w);
      out += buf;
      out += disassemble_word(w, img.variant);
      out += "\n";
    }
  }
  return out;
}

}  // namespace nearv
