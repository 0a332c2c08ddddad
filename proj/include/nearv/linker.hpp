#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nearv/image.hpp"
#include "nearv/object.hpp"

namespace nearv {

/// Unit of placement. Code sections are placed whole; data-like sections are
/// split into individually moved near symbols and the remainder runs left in
/// their far section.
struct PlacedAtom {
  u32 addr = 0;
  u32 size = 0;
  SectionKind kind = SectionKind::Data;
  int unit = -1;
  std::string section;
  u32 src_offset = 0;           // first input-section byte this atom covers
  std::optional<int> moved_sym; // plan symbol index when the atom is a moved near symbol
};

struct PlanSymbol {
  std::string name;
  int unit = -1;
  int sym_index = -1;           // into units[unit].symbols
  SymScope scope = SymScope::Local;
  std::optional<Reg> near_base; // window base register when placed near
};

struct ImagePlan {
  MemoryMap map;
  NearPolicy policy;
  RelaxMode mode = RelaxMode::Near;

  std::vector<PlacedAtom> atoms;
  std::vector<PlanSymbol> symbols;
  std::vector<std::map<std::string, int>> unit_syms;  // per unit: name -> symbols index
  std::map<std::string, int> global_syms;

  std::vector<std::pair<std::string, u32>> reg_init;
  u32 near_ram_used = 0;
  u32 near_rom_used = 0;
  std::vector<std::string> diagnostics;

  // atom ids per (unit, section), sorted by src_offset; kept fresh by
  // layout() and relax()
  std::map<std::pair<int, std::string>, std::vector<int>> atom_index;
  void rebuild_atom_index();

  /// Final address of an input-section byte.
  u32 addr_of(int unit, const std::string& section, u32 offset) const;

  /// Plan symbol visible from `unit` under local-then-global scoping; -1 if
  /// the name does not resolve.
  int resolve_symbol(int unit, const std::string& name) const;

  u32 symbol_addr(int plan_sym, const std::vector<ObjectUnit>& units) const;
  u32 reg_value(Reg r) const;
  std::optional<u32> try_reg_value(Reg r) const;
};

struct LinkStats {
  u32 code_size_bytes = 0;
  int relax_count = 0;
  u32 near_ram_used = 0;
  u32 near_rom_used = 0;
  std::vector<std::string> diagnostics;
};

/// Assigns addresses: code ascending in ROM, then far ROData, near ROData at
/// the top of ROM; near Data/BSS at the RAM base, far Data/BSS after. Near
/// membership follows the size threshold, smallest symbols first.
ImagePlan layout(const std::vector<ObjectUnit>& units, const MemoryMap& map,
                 const NearPolicy& policy, RelaxMode mode = RelaxMode::Near);

/// Rewrites every marked lui+access pair whose symbol sits in a near window:
/// the lui is deleted, the access becomes a near (or gp-relative) form, and
/// later code shifts down by 4 bytes per deletion. Returns the rewrite count.
int relax(ImagePlan& plan, std::vector<ObjectUnit>& units);

/// Patches all remaining relocations and materializes the image.
Image resolve(const ImagePlan& plan, const std::vector<ObjectUnit>& units);

struct LinkResult {
  Image image;
  LinkStats stats;
};

LinkResult link(std::vector<ObjectUnit> units, const MemoryMap& map, const NearPolicy& policy,
                RelaxMode mode);

}  // namespace nearv
