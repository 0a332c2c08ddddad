#pragma once

#include <array>
#include <bitset>
#include <map>
#include <optional>

#include "nearv/image.hpp"
#include "nearv/isa.hpp"

namespace nearv {

enum class Trap : u8 { IllegalInstruction, UnmappedAccess, MisalignedAccess };

std::string_view trap_name(Trap t);

struct StoreEvent {
  u32 addr = 0;
  u8 width = 0;
  u32 value = 0;
  bool operator==(const StoreEvent&) const = default;
};

/// Sparse byte-granular memory. Unmapped bytes trap on access.
class SparseMemory {
public:
  bool is_mapped(u32 addr) const;
  u8 peek(u32 addr) const;           // caller must know the byte is mapped
  void poke(u32 addr, u8 value);     // maps the byte
  void map_zero(u32 addr, u32 len);

  /// All mapped (address, byte) pairs in address order.
  std::vector<std::pair<u32, u8>> contents() const;

private:
  static constexpr u32 kPageBits = 12;
  static constexpr u32 kPageSize = 1u << kPageBits;
  struct Page {
    std::array<u8, kPageSize> data{};
    std::bitset<kPageSize> mapped;
  };
  std::map<u32, Page> pages_;
};

struct MachineState {
  u32 pc = 0;
  std::array<u32, 32> x{};
  std::array<u32, 32> f{};  // raw bit containers
  SparseMemory mem;
  std::vector<StoreEvent> store_trace;
  u64 instret = 0;
  Variant variant = Variant::SingleRange128K;

  u32 reg(Reg r) const { return x[r.index]; }
  void set_reg(Reg r, u32 v) {
    if (r.index != 0) x[r.index] = v;
  }
};

struct StepResult {
  bool halted = false;
  std::optional<Trap> trap;
  bool ok() const { return !halted && !trap; }
};

enum class RunOutcome : u8 { Halted, Trapped, StepLimit };

struct RunResult {
  RunOutcome outcome = RunOutcome::Halted;
  std::optional<Trap> trap;
  u64 instret = 0;
};

/// Populates a fresh machine from an image: memory from blobs and zero
/// ranges, pc at entry, window base registers initialized.
MachineState load_image(const Image& image);

/// Executes one instruction. Traps leave the state untouched (pc still at
/// the faulting instruction) and do not count toward instret.
StepResult step(MachineState& state);

RunResult run(MachineState& state, u64 max_steps);

/// Deterministic text dump of registers, instret and the store trace.
std::string dump_final_state(const MachineState& state);

}  // namespace nearv
