#pragma once

#include <map>
#include <string>
#include <vector>

#include "nearv/isa.hpp"

namespace nearv {

struct MemoryMap {
  u32 rom_base = 0;
  u32 rom_size = 0;
  u32 ram_base = 0;
  u32 ram_size = 0;
  bool contiguous = false;  // ROM top touches RAM base; one window may span both

  u32 rom_end() const { return rom_base + rom_size; }
  u32 ram_end() const { return ram_base + ram_size; }
  void validate() const;
};

struct NearPolicy {
  Variant variant = Variant::SingleRange128K;
  u32 threshold = 0;  // symbols at most this many bytes are near candidates
  bool near_ram = true;
  bool near_rom = false;
};

/// Which rewriting the linker applies to marked lui+access pairs.
enum class RelaxMode : u8 {
  Off,
  Gp12,  // classic +-2 KB gp window, pairs collapse to base forms
  Near,  // proposed extension, pairs collapse to near forms
};

struct Blob {
  u32 addr = 0;
  std::vector<u8> bytes;
  bool operator==(const Blob&) const = default;
};

struct ZeroRange {
  u32 addr = 0;
  u32 size = 0;
  bool operator==(const ZeroRange&) const = default;
};

struct CodeRange {
  u32 addr = 0;
  u32 size = 0;
  bool operator==(const CodeRange&) const = default;
};

struct Image {
  u32 entry = 0;
  Variant variant = Variant::SingleRange128K;
  u32 code_size_bytes = 0;
  std::vector<std::pair<std::string, u32>> reg_init;  // gp / t0 / t1
  std::vector<CodeRange> code_ranges;
  std::vector<Blob> blobs;
  std::vector<ZeroRange> zeros;
  std::map<std::string, u32> symbols;

  bool operator==(const Image&) const = default;
};

std::string write_image(const Image& img);
Image read_image(std::string_view text);
Image load_image_file(const std::string& path);
void save_image_file(const Image& img, const std::string& path);

/// Memory map plus policy defaults, as read from a key=value config file.
struct LinkConfig {
  MemoryMap map;
  NearPolicy policy;
};

LinkConfig parse_link_config(std::string_view text);
LinkConfig load_link_config(const std::string& path);

}  // namespace nearv
