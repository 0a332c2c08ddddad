#include "nearv/image.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace nearv {

namespace {

[[noreturn]] void parse_fail(int line, const std::string& msg) {
  fail(Errc::ParseError, "line " + std::to_string(line) + ": " + msg);
}

u32 want_u32(const std::string& tok, int line, const char* what) {
  auto v = parse_int(tok);
  if (!v || *v < 0 || *v > 0xFFFFFFFFll) parse_fail(line, std::string("bad ") + what + " '" + tok + "'");
  return static_cast<u32>(*v);
}

char hex_digit(u8 v) { return v < 10 ? char('0' + v) : char('a' + v - 10); }

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::IoError, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

void MemoryMap::validate() const {
  if (rom_base % 4 || ram_base % 4) fail(Errc::ConflictError, "memory region bases must be 4-aligned");
  if (rom_size == 0 || ram_size == 0) fail(Errc::ConflictError, "memory regions must be non-empty");
  u64 re = static_cast<u64>(rom_base) + rom_size;
  u64 de = static_cast<u64>(ram_base) + ram_size;
  if (re > 0x100000000ull || de > 0x100000000ull)
    fail(Errc::ConflictError, "memory region exceeds the 32-bit address space");
  bool disjoint = re <= ram_base || de <= rom_base;
  if (!disjoint) fail(Errc::ConflictError, "ROM and RAM regions overlap");
  if (contiguous && rom_base + rom_size != ram_base)
    fail(Errc::ConflictError, "contiguous map requires ROM to end exactly at RAM base");
}

std::string write_image(const Image& img) {
  Image s = img;
  std::sort(s.code_ranges.begin(), s.code_ranges.end(),
            [](const CodeRange& a, const CodeRange& b) { return a.addr < b.addr; });
  std::sort(s.blobs.begin(), s.blobs.end(),
            [](const Blob& a, const Blob& b) { return a.addr < b.addr; });
  std::sort(s.zeros.begin(), s.zeros.end(),
            [](const ZeroRange& a, const ZeroRange& b) { return a.addr < b.addr; });

  std::string out = "IMAGE 1\n";
  out += "entry " + to_hex(s.entry) + "\n";
  out += "variant " + std::string(variant_name(s.variant)) + "\n";
  out += "codesize " + std::to_string(s.code_size_bytes) + "\n";
  for (const auto& [name, value] : s.reg_init) out += "reg " + name + " " + to_hex(value) + "\n";
  for (const auto& c : s.code_ranges)
    out += "code " + to_hex(c.addr) + " " + std::to_string(c.size) + "\n";
  for (const auto& [name, addr] : s.symbols) out += "sym " + name + " " + to_hex(addr) + "\n";
  for (const auto& z : s.zeros) out += "zero " + to_hex(z.addr) + " " + std::to_string(z.size) + "\n";
  for (const auto& b : s.blobs) {
    out += "blob " + to_hex(b.addr) + " ";
    if (b.bytes.empty()) {
      out += "-";
    } else {
      out.reserve(out.size() + b.bytes.size() * 2);
      for (u8 byte : b.bytes) {
        out += hex_digit(byte >> 4);
        out += hex_digit(byte & 0xF);
      }
    }
    out += "\n";
  }
  return out;
}

Image read_image(std::string_view text) {
  Image img;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  bool saw_header = false;

  while (std::getline(in, line)) {
    lineno++;
    auto body = trim(line);
    if (body.empty() || body[0] == '#') continue;
    auto toks = split_ws(body);

    if (!saw_header) {
      if (toks.size() != 2 || toks[0] != "IMAGE") parse_fail(lineno, "expected 'IMAGE 1' header");
      if (toks[1] != "1")
        fail(Errc::VersionMismatch, "image version " + toks[1] + " not supported (want 1)");
      saw_header = true;
      continue;
    }

    const std::string& kw = toks[0];
    if (kw == "entry" && toks.size() == 2) {
      img.entry = want_u32(toks[1], lineno, "entry");
    } else if (kw == "variant" && toks.size() == 2) {
      auto v = variant_from_name(toks[1]);
      if (!v) parse_fail(lineno, "bad variant '" + toks[1] + "'");
      img.variant = *v;
    } else if (kw == "codesize" && toks.size() == 2) {
      img.code_size_bytes = want_u32(toks[1], lineno, "codesize");
    } else if (kw == "reg" && toks.size() == 3) {
      img.reg_init.emplace_back(toks[1], want_u32(toks[2], lineno, "register value"));
    } else if (kw == "code" && toks.size() == 3) {
      img.code_ranges.push_back(
          CodeRange{want_u32(toks[1], lineno, "addr"), want_u32(toks[2], lineno, "size")});
    } else if (kw == "sym" && toks.size() == 3) {
      img.symbols[toks[1]] = want_u32(toks[2], lineno, "addr");
    } else if (kw == "zero" && toks.size() == 3) {
      img.zeros.push_back(
          ZeroRange{want_u32(toks[1], lineno, "addr"), want_u32(toks[2], lineno, "size")});
    } else if (kw == "blob" && toks.size() == 3) {
      Blob b;
      b.addr = want_u32(toks[1], lineno, "addr");
      if (toks[2] != "-") {
        const std::string& hex = toks[2];
        if (hex.size() % 2) parse_fail(lineno, "odd hex byte string");
        for (size_t i = 0; i < hex.size(); i += 2) {
          int hi = hex_value(hex[i]), lo = hex_value(hex[i + 1]);
          if (hi < 0 || lo < 0) parse_fail(lineno, "bad hex byte string");
          b.bytes.push_back(static_cast<u8>(hi << 4 | lo));
        }
      }
      img.blobs.push_back(std::move(b));
    } else {
      parse_fail(lineno, "unknown record '" + kw + "'");
    }
  }
  if (!saw_header) fail(Errc::ParseError, "empty stream: missing IMAGE header");
  return img;
}

Image load_image_file(const std::string& path) { return read_image(read_file(path)); }

void save_image_file(const Image& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::IoError, "cannot write " + path);
  out << write_image(img);
}

LinkConfig parse_link_config(std::string_view text) {
  LinkConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;

  auto as_bool = [&](const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    parse_fail(lineno, "bad boolean '" + v + "'");
  };

  while (std::getline(in, line)) {
    lineno++;
    auto body = trim(line);
    if (body.empty() || body[0] == '#') continue;
    size_t eq = body.find('=');
    if (eq == std::string_view::npos) parse_fail(lineno, "expected key=value");
    std::string key{trim(body.substr(0, eq))};
    std::string value{trim(body.substr(eq + 1))};

    if (key == "rom_base") cfg.map.rom_base = want_u32(value, lineno, "rom_base");
    else if (key == "rom_size") cfg.map.rom_size = want_u32(value, lineno, "rom_size");
    else if (key == "ram_base") cfg.map.ram_base = want_u32(value, lineno, "ram_base");
    else if (key == "ram_size") cfg.map.ram_size = want_u32(value, lineno, "ram_size");
    else if (key == "contiguous") cfg.map.contiguous = as_bool(value);
    else if (key == "variant") {
      auto v = variant_from_name(value);
      if (!v) parse_fail(lineno, "bad variant '" + value + "'");
      cfg.policy.variant = *v;
    } else if (key == "threshold") cfg.policy.threshold = want_u32(value, lineno, "threshold");
    else if (key == "near_ram") cfg.policy.near_ram = as_bool(value);
    else if (key == "near_rom") cfg.policy.near_rom = as_bool(value);
    else parse_fail(lineno, "unknown key '" + key + "'");
  }
  cfg.map.validate();
  return cfg;
}

LinkConfig load_link_config(const std::string& path) { return parse_link_config(read_file(path)); }

}  // namespace nearv
