#pragma once

#include <string>
#include <vector>

#include "nearv/image.hpp"
#include "nearv/linker.hpp"

namespace nearv {

/// Parameters of a synthetic real-time-control style workload: many global
/// scalars, plus aggregates that model struct-organized data.
struct WorkloadSpec {
  u32 scalar_count = 0;
  u32 aggregate_count = 0;
  u32 aggregate_fields = 0;
  std::vector<std::pair<u32, u32>> scalar_size_dist = {{4, 1}};  // (bytes, weight)
  double rodata_fraction = 0.0;
  u32 accesses_per_symbol = 1;
  enum class AggregateStyle : u8 { ViaBasePointer, DirectMember };
  AggregateStyle aggregate_access_style = AggregateStyle::ViaBasePointer;
  u64 seed = 0;

  void validate() const;
};

WorkloadSpec parse_workload_spec(std::string_view text);
WorkloadSpec load_workload_spec(const std::string& path);

/// Deterministic assembly program for the spec: seeded data declarations and
/// straight-line access code, ending in a checksum store and ebreak.
std::string gen_workload(const WorkloadSpec& spec);

enum class BaselineKind : u8 { NoRelax, Gp12Relax };

std::string_view baseline_name(BaselineKind k);

struct ReportRow {
  Variant variant = Variant::SingleRange128K;
  u32 threshold = 0;
  bool near_ram = false;
  bool near_rom = false;
  BaselineKind baseline = BaselineKind::NoRelax;
  u32 code_size_bytes = 0;       // near-relaxed build
  u32 baseline_code_size = 0;
  double relative_pct = 100.0;   // 100 * code_size / baseline size
  int relax_count = 0;
  u64 instret = 0;               // near-relaxed executed instructions
  u64 baseline_instret = 0;
};

struct SizeReport {
  std::vector<ReportRow> rows;
};

/// Assembles the workload once, links it per policy (plus the matching
/// baseline), runs every image to a halt and verifies that all of them
/// compute the same thing before filling in the size rows.
SizeReport run_experiment(const WorkloadSpec& spec, const MemoryMap& map,
                          const std::vector<NearPolicy>& matrix, BaselineKind baseline);

enum class ReportFormat : u8 { Table, Csv };

std::string emit_report(const SizeReport& report, ReportFormat format);

/// Three specs mirroring the qualitative spread of struct-heavy, mixed and
/// scalar-heavy real-time code bases.
std::vector<std::pair<std::string, WorkloadSpec>> table1_analog_presets();

}  // namespace nearv
