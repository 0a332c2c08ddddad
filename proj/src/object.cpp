#include "nearv/object.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace nearv {

namespace {

const char* kSectionKindNames[] = {"Code", "Data", "ROData", "BSS"};
const char* kRelocKindNames[] = {"HI20", "LO12_I", "LO12_S", "NEAR_I",
                                 "NEAR_S", "BR13", "JAL21", "ABS32"};

[[noreturn]] void parse_fail(int line, const std::string& msg) {
  fail(Errc::ParseError, "line " + std::to_string(line) + ": " + msg);
}

u32 want_u32(const std::string& tok, int line, const char* what) {
  auto v = parse_int(tok);
  if (!v || *v < 0 || *v > 0xFFFFFFFFll) parse_fail(line, std::string("bad ") + what + " '" + tok + "'");
  return static_cast<u32>(*v);
}

i32 want_i32(const std::string& tok, int line, const char* what) {
  auto v = parse_int(tok);
  if (!v || *v < INT32_MIN || *v > INT32_MAX)
    parse_fail(line, std::string("bad ") + what + " '" + tok + "'");
  return static_cast<i32>(*v);
}

char hex_digit(u8 v) { return v < 10 ? char('0' + v) : char('a' + v - 10); }

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

std::string_view section_kind_name(SectionKind k) { return kSectionKindNames[static_cast<int>(k)]; }

std::optional<SectionKind> section_kind_from_name(std::string_view s) {
  for (int i = 0; i < 4; i++)
    if (s == kSectionKindNames[i]) return static_cast<SectionKind>(i);
  return std::nullopt;
}

std::string_view reloc_kind_name(RelocKind k) { return kRelocKindNames[static_cast<int>(k)]; }

std::optional<RelocKind> reloc_kind_from_name(std::string_view s) {
  for (int i = 0; i < 8; i++)
    if (s == kRelocKindNames[i]) return static_cast<RelocKind>(i);
  return std::nullopt;
}

bool operator==(const Section& a, const Section& b) {
  return a.name == b.name && a.kind == b.kind && a.align == b.align && a.bytes == b.bytes &&
         a.bss_size == b.bss_size;
}

const Section* ObjectUnit::find_section(std::string_view name) const {
  for (const auto& s : sections)
    if (s.name == name) return &s;
  return nullptr;
}

Section* ObjectUnit::find_section(std::string_view name) {
  for (auto& s : sections)
    if (s.name == name) return &s;
  return nullptr;
}

const Symbol* ObjectUnit::find_symbol(std::string_view name) const {
  for (const auto& s : symbols)
    if (s.name == name) return &s;
  return nullptr;
}

void ObjectUnit::canonicalize() {
  std::sort(sections.begin(), sections.end(),
            [](const Section& a, const Section& b) { return a.name < b.name; });
  std::sort(symbols.begin(), symbols.end(), [](const Symbol& a, const Symbol& b) {
    return std::tie(a.section, a.offset, a.name) < std::tie(b.section, b.offset, b.name);
  });
  std::sort(relocations.begin(), relocations.end(), [](const Relocation& a, const Relocation& b) {
    return std::tie(a.section, a.offset, a.kind, a.symbol, a.addend) <
           std::tie(b.section, b.offset, b.kind, b.symbol, b.addend);
  });
}

bool ObjectUnit::operator==(const ObjectUnit& o) const {
  return sections == o.sections && symbols == o.symbols && relocations == o.relocations;
}

std::string write_object(const ObjectUnit& unit) {
  ObjectUnit u = unit;
  u.canonicalize();

  std::string out = "NEAROBJ 1\n";
  for (const auto& s : u.sections) {
    out += "section " + s.name + " " + std::string(section_kind_name(s.kind)) + " " +
           std::to_string(s.align) + " ";
    if (s.kind == SectionKind::BSS) {
      out += std::to_string(s.bss_size);
    } else if (s.bytes.empty()) {
      out += "-";
    } else {
      out.reserve(out.size() + s.bytes.size() * 2);
      for (u8 b : s.bytes) {
        out += hex_digit(b >> 4);
        out += hex_digit(b & 0xF);
      }
    }
    out += "\n";
  }
  for (const auto& s : u.symbols) {
    out += "symbol " + s.name + " " + s.section + " " + std::to_string(s.offset) + " " +
           std::to_string(s.size) + " " + (s.scope == SymScope::Global ? "Global" : "Local") + "\n";
  }
  for (const auto& r : u.relocations) {
    out += "reloc " + r.section + " " + std::to_string(r.offset) + " " +
           std::string(reloc_kind_name(r.kind)) + " " + r.symbol + " " + std::to_string(r.addend);
    if (r.pair_id) out += " pair " + std::to_string(*r.pair_id);
    out += "\n";
  }
  return out;
}

ObjectUnit read_object(std::string_view text) {
  ObjectUnit unit;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  bool saw_header = false;

  while (std::getline(in, line)) {
    lineno++;
    auto body = trim(line);
    if (body.empty() || body[0] == '#') continue;

    if (!saw_header) {
      auto toks = split_ws(body);
      if (toks.size() != 2 || toks[0] != "NEAROBJ") parse_fail(lineno, "expected 'NEAROBJ 1' header");
      if (toks[1] != "1")
        fail(Errc::VersionMismatch, "object version " + toks[1] + " not supported (want 1)");
      saw_header = true;
      continue;
    }

    auto toks = split_ws(body);
    const std::string& kw = toks[0];

    if (kw == "section") {
      if (toks.size() != 5) parse_fail(lineno, "section needs: name kind align bytes");
      Section s;
      s.name = toks[1];
      auto kind = section_kind_from_name(toks[2]);
      if (!kind) parse_fail(lineno, "bad section kind '" + toks[2] + "'");
      s.kind = *kind;
      s.align = want_u32(toks[3], lineno, "align");
      if (!is_pow2(s.align)) parse_fail(lineno, "align must be a power of two");
      if (s.kind == SectionKind::BSS) {
        s.bss_size = want_u32(toks[4], lineno, "bss length");
      } else if (toks[4] != "-") {
        const std::string& hex = toks[4];
        if (hex.size() % 2) parse_fail(lineno, "odd hex byte string");
        for (size_t i = 0; i < hex.size(); i += 2) {
          int hi = hex_value(hex[i]), lo = hex_value(hex[i + 1]);
          if (hi < 0 || lo < 0) parse_fail(lineno, "bad hex byte string");
          s.bytes.push_back(static_cast<u8>(hi << 4 | lo));
        }
      }
      if (unit.find_section(s.name)) parse_fail(lineno, "duplicate section '" + s.name + "'");
      unit.sections.push_back(std::move(s));
    } else if (kw == "symbol") {
      if (toks.size() != 6) parse_fail(lineno, "symbol needs: name section offset size scope");
      Symbol s;
      s.name = toks[1];
      s.section = toks[2];
      s.offset = want_u32(toks[3], lineno, "offset");
      s.size = want_u32(toks[4], lineno, "size");
      if (toks[5] == "Global") s.scope = SymScope::Global;
      else if (toks[5] == "Local") s.scope = SymScope::Local;
      else parse_fail(lineno, "bad scope '" + toks[5] + "'");
      unit.symbols.push_back(std::move(s));
    } else if (kw == "reloc") {
      if (toks.size() != 6 && toks.size() != 8)
        parse_fail(lineno, "reloc needs: section offset kind symbol addend [pair id]");
      Relocation r;
      r.section = toks[1];
      r.offset = want_u32(toks[2], lineno, "offset");
      auto kind = reloc_kind_from_name(toks[3]);
      if (!kind) parse_fail(lineno, "bad relocation kind '" + toks[3] + "'");
      r.kind = *kind;
      r.symbol = toks[4];
      r.addend = want_i32(toks[5], lineno, "addend");
      if (toks.size() == 8) {
        if (toks[6] != "pair") parse_fail(lineno, "expected 'pair <id>'");
        r.pair_id = want_u32(toks[7], lineno, "pair id");
      }
      unit.relocations.push_back(std::move(r));
    } else {
      parse_fail(lineno, "unknown record '" + kw + "'");
    }
  }

  if (!saw_header) fail(Errc::ParseError, "empty stream: missing NEAROBJ header");

  // validate relocation targets, symbol spans and code-section shape
  for (const auto& s : unit.sections) {
    if (s.kind == SectionKind::Code && s.bytes.size() % 4)
      fail(Errc::ParseError, "code section " + s.name + " is not a whole number of words");
  }
  for (const auto& s : unit.symbols) {
    if (!s.defined()) continue;
    const Section* sec = unit.find_section(s.section);
    if (!sec) fail(Errc::ParseError, "symbol '" + s.name + "' names missing section " + s.section);
    if (static_cast<u64>(s.offset) + s.size > sec->size())
      fail(Errc::ParseError, "symbol '" + s.name + "' extends past section end");
  }
  for (const auto& r : unit.relocations) {
    const Section* sec = unit.find_section(r.section);
    if (!sec) fail(Errc::ParseError, "relocation names missing section " + r.section);
    if (sec->kind == SectionKind::Code && r.offset % 4)
      fail(Errc::ParseError, "relocation at misaligned code offset " + std::to_string(r.offset));
  }
  return unit;
}

ObjectUnit load_object_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::IoError, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return read_object(ss.str());
}

void save_object_file(const ObjectUnit& unit, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::IoError, "cannot write " + path);
  out << write_object(unit);
}

}  // namespace nearv
