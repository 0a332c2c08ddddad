#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nearv/common.hpp"

namespace nearv {

enum class SectionKind : u8 { Code, Data, ROData, BSS };

std::string_view section_kind_name(SectionKind k);
std::optional<SectionKind> section_kind_from_name(std::string_view s);

struct Section {
  std::string name;
  SectionKind kind = SectionKind::Data;
  u32 align = 4;
  std::vector<u8> bytes;  // empty for BSS
  u32 bss_size = 0;       // BSS only

  u32 size() const { return kind == SectionKind::BSS ? bss_size : static_cast<u32>(bytes.size()); }
};

enum class SymScope : u8 { Local, Global };

/// Marker section name for symbols referenced but defined elsewhere.
inline constexpr const char* kUndefSection = "*undef*";

struct Symbol {
  std::string name;
  std::string section;
  u32 offset = 0;
  u32 size = 0;
  SymScope scope = SymScope::Local;

  bool defined() const { return section != kUndefSection; }
  bool operator==(const Symbol&) const = default;
};

enum class RelocKind : u8 { HI20, LO12_I, LO12_S, NEAR_I, NEAR_S, BR13, JAL21, ABS32 };

std::string_view reloc_kind_name(RelocKind k);
std::optional<RelocKind> reloc_kind_from_name(std::string_view s);

struct Relocation {
  std::string section;
  u32 offset = 0;
  RelocKind kind = RelocKind::ABS32;
  std::string symbol;
  i32 addend = 0;
  std::optional<u32> pair_id;  // marks relaxable hi/lo sequences

  bool operator==(const Relocation&) const = default;
};

struct ObjectUnit {
  std::vector<Section> sections;
  std::vector<Symbol> symbols;
  std::vector<Relocation> relocations;

  const Section* find_section(std::string_view name) const;
  Section* find_section(std::string_view name);
  const Symbol* find_symbol(std::string_view name) const;

  /// Sorts into the canonical on-disk order: sections by name, symbols by
  /// (section, offset, name), relocations by (section, offset).
  void canonicalize();

  bool operator==(const ObjectUnit&) const;
};

bool operator==(const Section& a, const Section& b);

/// Serializes in the NEAROBJ 1 text format. The unit is written in canonical
/// order, so identical units produce byte-identical streams.
std::string write_object(const ObjectUnit& unit);

/// Parses a NEAROBJ 1 stream. Errors carry the offending line number.
ObjectUnit read_object(std::string_view text);

ObjectUnit load_object_file(const std::string& path);
void save_object_file(const ObjectUnit& unit, const std::string& path);

}  // namespace nearv
