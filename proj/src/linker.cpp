#include "nearv/linker.hpp"

#include <algorithm>
#include <set>

namespace nearv {

namespace {

u32 natural_align(u32 sec_align, u32 off) {
  if (off == 0) return sec_align;
  return std::min(sec_align, off & (~off + 1));
}

// smallest address >= cursor congruent to src_off modulo align
u32 place_congruent(u32 cursor, u32 align, u32 src_off) {
  u32 rem = src_off & (align - 1);
  u32 delta = (rem + align - (cursor & (align - 1))) & (align - 1);
  return cursor + delta;
}

u32 read_word(const std::vector<u8>& b, u32 off) {
  return b[off] | b[off + 1] << 8 | b[off + 2] << 16 | b[off + 3] << 24;
}

void write_word(std::vector<u8>& b, u32 off, u32 w) {
  b[off] = static_cast<u8>(w);
  b[off + 1] = static_cast<u8>(w >> 8);
  b[off + 2] = static_cast<u8>(w >> 16);
  b[off + 3] = static_cast<u8>(w >> 24);
}

bool ram_side(SectionKind k) { return k == SectionKind::Data || k == SectionKind::BSS; }

}  // namespace

void ImagePlan::rebuild_atom_index() {
  atom_index.clear();
  for (size_t i = 0; i < atoms.size(); i++)
    atom_index[{atoms[i].unit, atoms[i].section}].push_back(static_cast<int>(i));
  for (auto& [k, v] : atom_index)
    std::sort(v.begin(), v.end(),
              [this](int a, int b) { return atoms[a].src_offset < atoms[b].src_offset; });
}

u32 ImagePlan::addr_of(int unit, const std::string& section, u32 offset) const {
  auto it = atom_index.find({unit, section});
  if (it == atom_index.end())
    fail(Errc::InternalError, "no placement covers " + section + "+" + std::to_string(offset));
  const std::vector<int>& ids = it->second;

  size_t lo = 0, hi = ids.size();
  while (lo < hi) {
    size_t mid = (lo + hi) / 2;
    if (atoms[ids[mid]].src_offset <= offset) lo = mid + 1;
    else hi = mid;
  }
  for (size_t k = lo; k-- > 0;) {
    const PlacedAtom& a = atoms[ids[k]];
    if (offset < a.src_offset + a.size) return a.addr + (offset - a.src_offset);
    if (a.size > 0 && a.src_offset + a.size < offset) break;
  }
  // boundary positions: zero-size labels at atom starts or the section end
  for (size_t k = lo; k-- > 0;) {
    const PlacedAtom& a = atoms[ids[k]];
    if (offset == a.src_offset + a.size) return a.addr + a.size;
    if (a.src_offset + a.size < offset) break;
  }
  fail(Errc::InternalError,
       "no placement covers " + section + "+" + std::to_string(offset));
}

int ImagePlan::resolve_symbol(int unit, const std::string& name) const {
  if (unit >= 0 && unit < static_cast<int>(unit_syms.size())) {
    auto it = unit_syms[unit].find(name);
    if (it != unit_syms[unit].end()) return it->second;
  }
  auto it = global_syms.find(name);
  return it == global_syms.end() ? -1 : it->second;
}

u32 ImagePlan::symbol_addr(int plan_sym, const std::vector<ObjectUnit>& units) const {
  const PlanSymbol& ps = symbols[plan_sym];
  const Symbol& s = units[ps.unit].symbols[ps.sym_index];
  return addr_of(ps.unit, s.section, s.offset);
}

std::optional<u32> ImagePlan::try_reg_value(Reg r) const {
  const char* name = r == REG_GP ? "gp" : r == REG_T0 ? "t0" : r == REG_T1 ? "t1" : nullptr;
  if (name)
    for (const auto& [n, v] : reg_init)
      if (n == name) return v;
  return std::nullopt;
}

u32 ImagePlan::reg_value(Reg r) const {
  if (auto v = try_reg_value(r)) return *v;
  fail(Errc::InternalError, "window base register has no initialization");
}

ImagePlan layout(const std::vector<ObjectUnit>& units, const MemoryMap& map,
                 const NearPolicy& policy, RelaxMode mode) {
  map.validate();

  ImagePlan plan;
  plan.map = map;
  plan.policy = policy;
  plan.mode = mode;
  plan.unit_syms.resize(units.size());

  // symbol collection and global resolution
  for (size_t u = 0; u < units.size(); u++) {
    for (size_t si = 0; si < units[u].symbols.size(); si++) {
      const Symbol& s = units[u].symbols[si];
      if (!s.defined()) continue;
      PlanSymbol ps;
      ps.name = s.name;
      ps.unit = static_cast<int>(u);
      ps.sym_index = static_cast<int>(si);
      ps.scope = s.scope;
      int idx = static_cast<int>(plan.symbols.size());
      plan.symbols.push_back(ps);
      plan.unit_syms[u][s.name] = idx;
      if (s.scope == SymScope::Global) {
        if (plan.global_syms.count(s.name))
          fail(Errc::ConflictError, "duplicate global definition of '" + s.name + "'");
        plan.global_syms[s.name] = idx;
      }
    }
  }
  for (size_t u = 0; u < units.size(); u++) {
    for (const Symbol& s : units[u].symbols)
      if (!s.defined() && !plan.global_syms.count(s.name))
        fail(Errc::UndefinedSymbol, "'" + s.name + "' is not defined by any unit");
    for (const Relocation& r : units[u].relocations)
      if (plan.resolve_symbol(static_cast<int>(u), r.symbol) < 0)
        fail(Errc::UndefinedSymbol, "'" + r.symbol + "' is not defined by any unit");
  }

  // policy gates
  bool near_ram = policy.near_ram;
  bool near_rom = policy.near_rom;
  bool single_window = mode == RelaxMode::Gp12 || policy.variant == Variant::SingleRange128K;
  if (single_window && near_ram && near_rom && !map.contiguous) {
    near_rom = false;
    plan.diagnostics.push_back(
        "near-rom disabled: single shared window needs a contiguous ROM/RAM map; "
        "rodata accesses stay two-instruction");
  }
  const u32 window_cap = mode == RelaxMode::Gp12 ? 4096
                         : policy.variant == Variant::SingleRange128K ? 131072
                                                                      : 65536;
  const u32 anchor_off = window_cap / 2;
  bool shared_window = single_window && near_ram && near_rom;

  // near candidates: defined, non-overlapping data-like symbols within the
  // size threshold
  struct Cand {
    u32 size;
    std::string name;
    int plan_sym;
    u32 align;
    bool rom;  // ROData side
  };
  std::vector<Cand> cands;
  std::set<int> ineligible;  // plan symbols overlapping another symbol
  for (size_t u = 0; u < units.size(); u++) {
    std::map<std::string, std::vector<std::pair<u32, int>>> spans;  // section -> (offset, plan idx)
    for (const auto& [name, idx] : plan.unit_syms[u]) {
      const Symbol& s = units[u].symbols[plan.symbols[idx].sym_index];
      spans[s.section].emplace_back(s.offset, idx);
    }
    for (auto& [sec_name, list] : spans) {
      std::sort(list.begin(), list.end());
      for (size_t i = 0; i + 1 < list.size(); i++) {
        const Symbol& a = units[u].symbols[plan.symbols[list[i].second].sym_index];
        const Symbol& b = units[u].symbols[plan.symbols[list[i + 1].second].sym_index];
        if (a.offset + a.size > b.offset && a.size && b.size) {
          ineligible.insert(list[i].second);
          ineligible.insert(list[i + 1].second);
        }
      }
    }
  }
  for (size_t i = 0; i < plan.symbols.size(); i++) {
    const PlanSymbol& ps = plan.symbols[i];
    const Symbol& s = units[ps.unit].symbols[ps.sym_index];
    const Section* sec = units[ps.unit].find_section(s.section);
    if (!sec) fail(Errc::InternalError, "symbol section vanished");
    bool rom = sec->kind == SectionKind::ROData;
    bool eligible = s.size > 0 && s.size <= policy.threshold && !ineligible.count(static_cast<int>(i));
    if (sec->kind == SectionKind::Code) eligible = false;
    if (ram_side(sec->kind) && !near_ram) eligible = false;
    if (rom && !near_rom) eligible = false;
    if (!eligible) continue;
    cands.push_back(Cand{s.size, s.name, static_cast<int>(i),
                         natural_align(sec->align, s.offset), rom});
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    return std::tie(a.size, a.name, a.plan_sym) < std::tie(b.size, b.name, b.plan_sym);
  });

  // greedy fill, smallest first, until the window (or both windows) is full
  struct NearPick {
    int plan_sym;
    u32 rel;  // offset inside the near pack of its side
    bool rom;
  };
  std::vector<NearPick> picks;
  u32 ram_used = 0, rom_pack = 0, rom_align = 4;
  bool ram_open = near_ram, rom_open = near_rom;
  for (const Cand& c : cands) {
    if (c.rom ? !rom_open : !ram_open) continue;
    if (c.rom) {
      u32 rel = align_up(rom_pack, c.align);
      u32 new_pack = rel + c.size;
      u32 new_align = std::max(rom_align, c.align);
      u32 span;
      if (shared_window) {
        u32 base = align_down(map.ram_base - new_pack, new_align);
        span = (map.ram_base + ram_used) - base;
      } else {
        span = new_pack;
      }
      if (span > window_cap) {
        rom_open = false;
        if (shared_window) ram_open = false;
        continue;
      }
      picks.push_back(NearPick{c.plan_sym, rel, true});
      rom_pack = new_pack;
      rom_align = new_align;
    } else {
      u32 addr = align_up(map.ram_base + ram_used, c.align);
      u32 new_used = addr + c.size - map.ram_base;
      u32 span = new_used;
      if (shared_window && rom_pack) {
        u32 base = align_down(map.ram_base - rom_pack, rom_align);
        span = (map.ram_base + new_used) - base;
      }
      if (span > window_cap) {
        ram_open = false;
        if (shared_window) rom_open = false;
        continue;
      }
      picks.push_back(NearPick{c.plan_sym, addr - map.ram_base, false});
      ram_used = new_used;
    }
  }
  plan.near_ram_used = ram_used;
  plan.near_rom_used = rom_pack;

  std::map<int, NearPick> moved;  // plan symbol -> pick
  for (const auto& p : picks) moved[p.plan_sym] = p;

  // ROM: code first
  u32 rom_cursor = map.rom_base;
  for (size_t u = 0; u < units.size(); u++) {
    for (const Section& sec : units[u].sections) {
      if (sec.kind != SectionKind::Code) continue;
      u32 addr = align_up(rom_cursor, sec.align);
      plan.atoms.push_back(PlacedAtom{addr, sec.size(), SectionKind::Code, static_cast<int>(u),
                                      sec.name, 0, {}});
      rom_cursor = addr + sec.size();
    }
  }

  // far runs of a split section: everything not claimed by a moved symbol
  auto far_runs = [&](int u, const Section& sec, u32 cursor,
                      std::vector<PlacedAtom>& out) -> u32 {
    std::vector<std::pair<u32, u32>> holes;  // (offset, size) of moved spans
    for (const auto& [name, idx] : plan.unit_syms[u]) {
      auto it = moved.find(idx);
      if (it == moved.end()) continue;
      const Symbol& s = units[u].symbols[plan.symbols[idx].sym_index];
      if (s.section == sec.name) holes.emplace_back(s.offset, s.size);
    }
    std::sort(holes.begin(), holes.end());
    u32 pos = 0;
    auto emit = [&](u32 from, u32 to) {
      if (from >= to) return;
      u32 addr = place_congruent(cursor, sec.align, from);
      out.push_back(
          PlacedAtom{addr, to - from, sec.kind, u, sec.name, from, {}});
      cursor = addr + (to - from);
    };
    for (const auto& [off, size] : holes) {
      emit(pos, off);
      pos = off + size;
    }
    emit(pos, sec.size());
    if (sec.size() == 0)
      out.push_back(PlacedAtom{place_congruent(cursor, sec.align, 0), 0, sec.kind, u, sec.name, 0, {}});
    return cursor;
  };

  // far rodata after code
  for (size_t u = 0; u < units.size(); u++)
    for (const Section& sec : units[u].sections)
      if (sec.kind == SectionKind::ROData)
        rom_cursor = far_runs(static_cast<int>(u), sec, rom_cursor, plan.atoms);

  // near rodata: top of ROM when the window is shared with RAM, otherwise
  // right after the far rodata
  u32 rom_near_base = 0;
  if (near_rom) {
    if (shared_window) {
      rom_near_base = align_down(map.ram_base - rom_pack, rom_align);
      if (rom_near_base < rom_cursor)
        fail(Errc::OverflowError, "near rodata at the top of ROM collides with code/rodata");
      if (rom_near_base < map.rom_base)
        fail(Errc::OverflowError, "ROM region too small for the near rodata pack");
    } else {
      rom_near_base = align_up(rom_cursor, rom_align);
      rom_cursor = rom_near_base + rom_pack;
    }
  }
  for (const auto& p : picks) {
    if (!p.rom) continue;
    const PlanSymbol& ps = plan.symbols[p.plan_sym];
    const Symbol& s = units[ps.unit].symbols[ps.sym_index];
    const Section* sec = units[ps.unit].find_section(s.section);
    plan.atoms.push_back(PlacedAtom{rom_near_base + p.rel, s.size, sec->kind, ps.unit, s.section,
                                    s.offset, p.plan_sym});
  }
  if (rom_cursor > map.rom_end()) fail(Errc::OverflowError, "ROM region too small");

  // RAM: near data/bss pack at the base, far runs after
  u32 ram_cursor = map.ram_base + ram_used;
  for (const auto& p : picks) {
    if (p.rom) continue;
    const PlanSymbol& ps = plan.symbols[p.plan_sym];
    const Symbol& s = units[ps.unit].symbols[ps.sym_index];
    const Section* sec = units[ps.unit].find_section(s.section);
    plan.atoms.push_back(PlacedAtom{map.ram_base + p.rel, s.size, sec->kind, ps.unit, s.section,
                                    s.offset, p.plan_sym});
  }
  for (size_t u = 0; u < units.size(); u++)
    for (const Section& sec : units[u].sections)
      if (ram_side(sec.kind))
        ram_cursor = far_runs(static_cast<int>(u), sec, ram_cursor, plan.atoms);
  if (ram_cursor > map.ram_end()) fail(Errc::OverflowError, "RAM region too small");

  // window anchors
  Reg ram_base_reg = REG_GP, rom_base_reg = REG_GP;
  if (single_window) {
    u32 win_base = shared_window && rom_pack ? rom_near_base
                   : near_ram               ? map.ram_base
                   : near_rom               ? rom_near_base
                                            : 0;
    if (near_ram || near_rom)
      plan.reg_init.emplace_back("gp", win_base + anchor_off);
  } else {
    if (near_ram) plan.reg_init.emplace_back("t0", map.ram_base + anchor_off);
    if (near_rom) plan.reg_init.emplace_back("t1", rom_near_base + anchor_off);
    ram_base_reg = REG_T0;
    rom_base_reg = REG_T1;
  }
  for (const auto& p : picks)
    plan.symbols[p.plan_sym].near_base = p.rom ? rom_base_reg : ram_base_reg;

  plan.rebuild_atom_index();
  return plan;
}

namespace {

struct PairSite {
  int hi_reloc = -1;  // indices into unit.relocations
  int lo_reloc = -1;
};

Mnemonic base_mnemonic_of_word(u32 word) {
  // pair lo words are always base-format loads/stores
  return decode(word, Variant::SingleRange128K).mnemonic;
}

}  // namespace

int relax(ImagePlan& plan, std::vector<ObjectUnit>& units) {
  if (plan.mode == RelaxMode::Off) return 0;
  const Variant variant = plan.policy.variant;
  int count = 0;

  for (size_t u = 0; u < units.size(); u++) {
    ObjectUnit& unit = units[u];
    for (Section& sec : unit.sections) {
      if (sec.kind != SectionKind::Code || sec.bytes.empty()) continue;

      // collect marked pairs in this section
      std::map<u32, PairSite> pairs;
      for (size_t ri = 0; ri < unit.relocations.size(); ri++) {
        const Relocation& r = unit.relocations[ri];
        if (r.section != sec.name || !r.pair_id) continue;
        PairSite& site = pairs[*r.pair_id];
        if (r.kind == RelocKind::HI20) site.hi_reloc = static_cast<int>(ri);
        else if (r.kind == RelocKind::LO12_I || r.kind == RelocKind::LO12_S)
          site.lo_reloc = static_cast<int>(ri);
        else
          fail(Errc::InternalError, "pair id on non-relaxable relocation kind");
      }

      std::vector<u32> deleted;  // offsets of lui words to drop
      std::set<size_t> dead_relocs;

      for (auto& [id, site] : pairs) {
        if (site.hi_reloc < 0 || site.lo_reloc < 0)
          fail(Errc::InternalError, "pair " + std::to_string(id) + " is incomplete");
        Relocation& hi = unit.relocations[site.hi_reloc];
        Relocation& lo = unit.relocations[site.lo_reloc];
        if (lo.offset != hi.offset + 4 || hi.symbol != lo.symbol)
          fail(Errc::InternalError, "pair " + std::to_string(id) + " is not an adjacent sequence");

        int sym = plan.resolve_symbol(static_cast<int>(u), hi.symbol);
        const PlanSymbol& ps = plan.symbols[sym];
        if (!ps.near_base) continue;  // symbol not in any near window
        u32 target = plan.symbol_addr(sym, units) + static_cast<u32>(hi.addend);
        u32 base_value = plan.reg_value(*ps.near_base);
        if (plan.mode == RelaxMode::Near) {
          if (!is_near_reachable(target, base_value, variant)) continue;
        } else {
          i64 diff = static_cast<i64>(target) - static_cast<i64>(base_value);
          if (diff < -2048 || diff > 2047) continue;
        }

        // rewrite the access word in place; the lui dies
        u32 old_word = read_word(sec.bytes, lo.offset);
        Mnemonic m = base_mnemonic_of_word(old_word);
        Instruction rewritten = decode(old_word, variant);
        if (plan.mode == RelaxMode::Near) {
          auto nm = near_form(m);
          if (!nm) fail(Errc::InternalError, "pair access word is not a load/store");
          BaseSelect bs = *ps.near_base == REG_T1 ? BaseSelect::B1 : BaseSelect::B0;
          rewritten.mnemonic = *nm;
          rewritten.base_select = variant == Variant::DualRange64K ? bs : BaseSelect::B0;
          rewritten.rs1 = near_base_reg(variant, rewritten.base_select);
          lo.kind = lo.kind == RelocKind::LO12_I ? RelocKind::NEAR_I : RelocKind::NEAR_S;
        } else {
          rewritten.rs1 = REG_GP;
          lo.kind = lo.kind == RelocKind::LO12_I ? RelocKind::NEAR_I : RelocKind::NEAR_S;
        }
        rewritten.imm = 0;
        write_word(sec.bytes, lo.offset, encode(rewritten, variant));

        deleted.push_back(hi.offset);
        dead_relocs.insert(static_cast<size_t>(site.hi_reloc));
        lo.pair_id.reset();
        count++;
      }

      if (deleted.empty()) continue;
      std::sort(deleted.begin(), deleted.end());
      auto shift = [&](u32 off) {
        size_t n = std::upper_bound(deleted.begin(), deleted.end(), off) - deleted.begin();
        // offsets equal to a deleted word (the lui itself) keep their place
        if (n && deleted[n - 1] == off) n--;
        return off - 4 * static_cast<u32>(n);
      };

      std::vector<u8> packed;
      packed.reserve(sec.bytes.size() - 4 * deleted.size());
      size_t di = 0;
      for (u32 off = 0; off < sec.bytes.size(); off += 4) {
        if (di < deleted.size() && deleted[di] == off) {
          di++;
          continue;
        }
        for (int b = 0; b < 4; b++) packed.push_back(sec.bytes[off + b]);
      }
      sec.bytes = std::move(packed);

      for (Symbol& s : unit.symbols) {
        if (s.section != sec.name) continue;
        u32 begin = s.offset, end = s.offset + s.size;
        u32 dropped_inside = 0;
        for (u32 d : deleted)
          if (d >= begin && d < end) dropped_inside += 4;
        s.offset = shift(s.offset);
        s.size -= dropped_inside;
      }
      std::vector<Relocation> kept;
      kept.reserve(unit.relocations.size());
      for (size_t ri = 0; ri < unit.relocations.size(); ri++) {
        if (dead_relocs.count(ri)) continue;
        Relocation r = unit.relocations[ri];
        if (r.section == sec.name) r.offset = shift(r.offset);
        kept.push_back(std::move(r));
      }
      unit.relocations = std::move(kept);
    }
  }

  // code shrank: repack code atoms from the ROM base, data stays put
  u32 cursor = plan.map.rom_base;
  for (PlacedAtom& a : plan.atoms) {
    if (a.kind != SectionKind::Code) continue;
    const Section* sec = units[a.unit].find_section(a.section);
    a.addr = align_up(cursor, sec->align);
    a.size = sec->size();
    cursor = a.addr + a.size;
  }
  plan.rebuild_atom_index();
  return count;
}

Image resolve(const ImagePlan& plan, const std::vector<ObjectUnit>& units) {
  // materialize the bytes of every non-BSS atom
  std::vector<std::vector<u8>> buffers(plan.atoms.size());
  for (size_t i = 0; i < plan.atoms.size(); i++) {
    const PlacedAtom& a = plan.atoms[i];
    if (a.kind == SectionKind::BSS || a.size == 0) continue;
    const Section* sec = units[a.unit].find_section(a.section);
    buffers[i].assign(sec->bytes.begin() + a.src_offset,
                      sec->bytes.begin() + a.src_offset + a.size);
  }

  auto covering_atom = [&](int unit, const std::string& section, u32 offset) -> int {
    auto it = plan.atom_index.find({unit, section});
    if (it != plan.atom_index.end())
      for (int ai : it->second) {
        const PlacedAtom& a = plan.atoms[ai];
        if (a.src_offset <= offset && offset + 4 <= a.src_offset + a.size) return ai;
      }
    fail(Errc::InternalError, "relocation site not covered by any placement");
  };

  const Variant variant = plan.policy.variant;

  for (size_t u = 0; u < units.size(); u++) {
    for (const Relocation& r : units[u].relocations) {
      int sym = plan.resolve_symbol(static_cast<int>(u), r.symbol);
      if (sym < 0) fail(Errc::UndefinedSymbol, "'" + r.symbol + "' is not defined by any unit");
      const u32 s_addr = plan.symbol_addr(sym, units) + static_cast<u32>(r.addend);

      int ai = covering_atom(static_cast<int>(u), r.section, r.offset);
      const PlacedAtom& atom = plan.atoms[ai];
      if (atom.kind == SectionKind::BSS)
        fail(Errc::InternalError, "relocation inside zero-initialized data");
      std::vector<u8>& buf = buffers[ai];
      const u32 in_buf = r.offset - atom.src_offset;
      const u32 p_addr = atom.addr + in_buf;
      u32 w = read_word(buf, in_buf);

      switch (r.kind) {
        case RelocKind::ABS32:
          w = s_addr;
          break;
        case RelocKind::HI20:
          w = (w & 0xFFFu) | (((s_addr + 0x800u) >> 12) << 12);
          break;
        case RelocKind::LO12_I:
          w = (w & 0x000FFFFFu) | ((s_addr & 0xFFFu) << 20);
          break;
        case RelocKind::LO12_S: {
          u32 lo = s_addr & 0xFFFu;
          w = (w & 0x01FFF07Fu) | ((lo >> 5) << 25) | ((lo & 0x1Fu) << 7);
          break;
        }
        case RelocKind::BR13: {
          i64 d = static_cast<i64>(s_addr) - p_addr;
          if (d & 1)
            fail(Errc::RelocOutOfRange, "branch target '" + r.symbol + "' is not 2-aligned");
          if (d < -4096 || d > 4094)
            fail(Errc::RelocOutOfRange, "branch to '" + r.symbol + "' spans " + std::to_string(d) +
                                            " bytes, outside +-4 KB");
          u32 v = static_cast<u32>(d);
          w = (w & 0x01FFF07Fu) | (((v >> 12) & 1) << 31) | (((v >> 5) & 0x3F) << 25) |
              (((v >> 1) & 0xF) << 8) | (((v >> 11) & 1) << 7);
          break;
        }
        case RelocKind::JAL21: {
          i64 d = static_cast<i64>(s_addr) - p_addr;
          if (d & 1) fail(Errc::RelocOutOfRange, "jump target '" + r.symbol + "' is not 2-aligned");
          if (d < -1048576 || d > 1048574)
            fail(Errc::RelocOutOfRange, "jump to '" + r.symbol + "' outside +-1 MB");
          u32 v = static_cast<u32>(d);
          w = (w & 0x00000FFFu) | (((v >> 20) & 1) << 31) | (((v >> 1) & 0x3FF) << 21) |
              (((v >> 11) & 1) << 20) | (((v >> 12) & 0xFF) << 12);
          break;
        }
        case RelocKind::NEAR_I:
        case RelocKind::NEAR_S: {
          const u32 opc = w & 0x7F;
          const u32 f3 = (w >> 12) & 7;
          const bool near_word = opc == 0x0B || ((opc == 0x23 || opc == 0x27) && f3 >= 4) ||
                                 (opc == 0x07 && f3 == 6);
          if (!near_word) {
            // gp-relative rewrite of a base-format access
            i64 d = static_cast<i64>(s_addr) - plan.reg_value(REG_GP);
            if (d < -2048 || d > 2047)
              fail(Errc::RelocOutOfRange, "gp-relative offset to '" + r.symbol + "' exceeds 12 bits");
            u32 lo = static_cast<u32>(d) & 0xFFFu;
            if (r.kind == RelocKind::NEAR_I) w = (w & 0x000FFFFFu) | (lo << 20);
            else w = (w & 0x01FFF07Fu) | ((lo >> 5) << 25) | ((lo & 0x1Fu) << 7);
            break;
          }

          Reg base;
          const PlanSymbol& ps = plan.symbols[sym];
          if (ps.near_base) {
            base = *ps.near_base;
          } else if (variant == Variant::SingleRange128K) {
            base = REG_GP;
          } else {
            // explicit near access to a far symbol: pick a reachable window
            base = REG_T0;
            auto t0 = plan.try_reg_value(REG_T0);
            if (!t0 || !is_near_reachable(s_addr, *t0, variant)) base = REG_T1;
          }
          auto base_value = plan.try_reg_value(base);
          if (!base_value)
            fail(Errc::RelocOutOfRange,
                 "near access to '" + r.symbol + "' but no near window is configured");
          i64 d = static_cast<i64>(s_addr) - *base_value;
          auto [lo_dom, hi_dom] = near_offset_domain(variant);
          if (d < lo_dom || d > hi_dom)
            fail(Errc::RelocOutOfRange,
                 "near offset " + std::to_string(d) + " to '" + r.symbol + "' outside [" +
                     std::to_string(lo_dom) + ", " + std::to_string(hi_dom) + "]");
          u32 v = static_cast<u32>(d);
          u32 sel = base == REG_T1 ? 1u : 0u;
          u32 hi5 = variant == Variant::SingleRange128K ? (v >> 12) & 0x1F
                                                        : (((v >> 12) & 0xF) << 1) | sel;
          if (r.kind == RelocKind::NEAR_I)
            w = (w & 0x00007FFFu) | ((v & 0xFFFu) << 20) | (hi5 << 15);
          else
            w = (w & 0x01F0707Fu) | (((v >> 5) & 0x7Fu) << 25) | (hi5 << 15) |
                ((v & 0x1Fu) << 7);
          break;
        }
      }
      write_word(buf, in_buf, w);
    }
  }

  // assemble the image
  Image img;
  img.variant = variant;
  img.reg_init = plan.reg_init;

  struct Placed {
    u32 addr;
    size_t atom;
  };
  std::vector<Placed> order;
  for (size_t i = 0; i < plan.atoms.size(); i++)
    if (plan.atoms[i].size > 0) order.push_back({plan.atoms[i].addr, i});
  std::sort(order.begin(), order.end(),
            [](const Placed& a, const Placed& b) { return a.addr < b.addr; });

  for (const Placed& p : order) {
    const PlacedAtom& a = plan.atoms[p.atom];
    if (a.kind == SectionKind::BSS) {
      if (!img.zeros.empty() && img.zeros.back().addr + img.zeros.back().size == a.addr)
        img.zeros.back().size += a.size;
      else
        img.zeros.push_back(ZeroRange{a.addr, a.size});
    } else {
      if (!img.blobs.empty() &&
          img.blobs.back().addr + img.blobs.back().bytes.size() == a.addr) {
        auto& dst = img.blobs.back().bytes;
        dst.insert(dst.end(), buffers[p.atom].begin(), buffers[p.atom].end());
      } else {
        img.blobs.push_back(Blob{a.addr, std::move(buffers[p.atom])});
      }
    }
    if (a.kind == SectionKind::Code) {
      if (!img.code_ranges.empty() &&
          img.code_ranges.back().addr + img.code_ranges.back().size == a.addr)
        img.code_ranges.back().size += a.size;
      else
        img.code_ranges.push_back(CodeRange{a.addr, a.size});
      img.code_size_bytes += a.size;
    }
  }

  // symbol map: plain names, qualified by unit when a local name repeats
  std::map<std::string, int> name_count;
  for (const PlanSymbol& ps : plan.symbols) name_count[ps.name]++;
  for (size_t i = 0; i < plan.symbols.size(); i++) {
    const PlanSymbol& ps = plan.symbols[i];
    std::string name = ps.name;
    if (name_count[name] > 1) name += "@u" + std::to_string(ps.unit);
    img.symbols[name] = plan.symbol_addr(static_cast<int>(i), units);
  }

  if (int start = plan.resolve_symbol(-1, "_start"); start >= 0) {
    img.entry = plan.symbol_addr(start, units);
  } else {
    u32 entry = 0;
    bool found = false;
    for (const PlacedAtom& a : plan.atoms)
      if (a.kind == SectionKind::Code && a.size > 0 && (!found || a.addr < entry)) {
        entry = a.addr;
        found = true;
      }
    img.entry = entry;
  }
  return img;
}

LinkResult link(std::vector<ObjectUnit> units, const MemoryMap& map, const NearPolicy& policy,
                RelaxMode mode) {
  ImagePlan plan = layout(units, map, policy, mode);
  int relaxed = relax(plan, units);
  Image image = resolve(plan, units);

  LinkStats stats;
  stats.code_size_bytes = image.code_size_bytes;
  stats.relax_count = relaxed;
  stats.near_ram_used = plan.near_ram_used;
  stats.near_rom_used = plan.near_rom_used;
  stats.diagnostics = plan.diagnostics;
  return LinkResult{std::move(image), std::move(stats)};
}

}  // namespace nearv
