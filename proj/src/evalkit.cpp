#include "nearv/evalkit.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "nearv/assembler.hpp"
#include "nearv/emulator.hpp"

namespace nearv {

namespace {

// Hand-rolled generator so workload bytes do not depend on the standard
// library's distribution implementations.
struct Rng {
  u64 s;
  explicit Rng(u64 seed) : s(seed * 2862933555777941757ULL + 3037000493ULL) {}
  u32 next() {
    s = s * 6364136223846793005ULL + 1442695040888963407ULL;
    return static_cast<u32>(s >> 33);
  }
  u32 below(u32 n) { return n ? next() % n : 0; }
};

constexpr u64 kRunBudget = 50'000'000;

struct SymSpan {
  std::string name;
  u32 addr;
  u32 size;
};

// Layout-independent view of one finished run: per-symbol final bytes and the
// store trace rebased onto symbol-relative coordinates.
struct SymSpaceResult {
  std::vector<std::tuple<std::string, u32, u8, u32>> trace;
  std::vector<std::pair<std::string, std::vector<u8>>> data;
  u64 instret = 0;
};

SymSpaceResult run_symbol_space(const Image& img, const ObjectUnit& unit) {
  MachineState st = load_image(img);
  RunResult r = run(st, kRunBudget);
  if (r.outcome == RunOutcome::Trapped)
    fail(Errc::SemanticsMismatch,
         "image trapped with " + std::string(trap_name(*r.trap)) + " at pc " + to_hex(st.pc));
  if (r.outcome == RunOutcome::StepLimit)
    fail(Errc::SemanticsMismatch, "image exceeded the step budget");

  std::vector<SymSpan> spans;
  for (const Symbol& s : unit.symbols) {
    if (!s.defined() || s.size == 0) continue;
    const Section* sec = unit.find_section(s.section);
    if (!sec || sec->kind == SectionKind::Code) continue;
    auto it = img.symbols.find(s.name);
    if (it == img.symbols.end()) continue;
    spans.push_back(SymSpan{s.name, it->second, s.size});
  }
  std::sort(spans.begin(), spans.end(),
            [](const SymSpan& a, const SymSpan& b) { return a.addr < b.addr; });

  auto find_span = [&](u32 addr) -> const SymSpan* {
    size_t lo = 0, hi = spans.size();
    while (lo < hi) {
      size_t mid = (lo + hi) / 2;
      if (spans[mid].addr <= addr) lo = mid + 1;
      else hi = mid;
    }
    if (lo == 0) return nullptr;
    const SymSpan& s = spans[lo - 1];
    return addr < s.addr + s.size ? &s : nullptr;
  };

  SymSpaceResult out;
  out.instret = r.instret;
  for (const StoreEvent& e : st.store_trace) {
    const SymSpan* s = find_span(e.addr);
    if (s) out.trace.emplace_back(s->name, e.addr - s->addr, e.width, e.value);
    else out.trace.emplace_back("@" + to_hex(e.addr), 0, e.width, e.value);
  }
  for (const SymSpan& s : spans) {
    std::vector<u8> bytes(s.size);
    for (u32 i = 0; i < s.size; i++)
      bytes[i] = st.mem.is_mapped(s.addr + i) ? st.mem.peek(s.addr + i) : 0;
    out.data.emplace_back(s.name, std::move(bytes));
  }
  std::sort(out.data.begin(), out.data.end());
  return out;
}

u32 draw_size(Rng& rng, const std::vector<std::pair<u32, u32>>& dist) {
  u32 total = 0;
  for (const auto& [size, weight] : dist) total += weight;
  u32 pick = rng.below(total);
  for (const auto& [size, weight] : dist) {
    if (pick < weight) return size;
    pick -= weight;
  }
  return dist.back().first;
}

}  // namespace

void WorkloadSpec::validate() const {
  if (scalar_size_dist.empty()) fail(Errc::SpecError, "scalar_size_dist must not be empty");
  for (const auto& [size, weight] : scalar_size_dist) {
    if (size == 0 || size > 4096) fail(Errc::SpecError, "scalar size must be in [1, 4096]");
    if (weight == 0) fail(Errc::SpecError, "distribution weights must be positive");
  }
  if (rodata_fraction < 0.0 || rodata_fraction > 1.0)
    fail(Errc::SpecError, "rodata_fraction must lie in [0, 1]");
  if (aggregate_count > 0 && aggregate_fields == 0)
    fail(Errc::SpecError, "aggregates need at least one field");
  if (static_cast<u64>(scalar_count) + aggregate_count > 200000)
    fail(Errc::SpecError, "workload too large");
}

WorkloadSpec parse_workload_spec(std::string_view text) {
  WorkloadSpec spec;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    lineno++;
    auto body = trim(line);
    if (body.empty() || body[0] == '#') continue;
    size_t eq = body.find('=');
    if (eq == std::string_view::npos)
      fail(Errc::SpecError, "line " + std::to_string(lineno) + ": expected key=value");
    std::string key{trim(body.substr(0, eq))};
    std::string value{trim(body.substr(eq + 1))};
    auto as_u32 = [&](const std::string& v) {
      auto n = parse_int(v);
      if (!n || *n < 0) fail(Errc::SpecError, "bad value for " + key);
      return static_cast<u32>(*n);
    };

    if (key == "scalar_count") spec.scalar_count = as_u32(value);
    else if (key == "aggregate_count") spec.aggregate_count = as_u32(value);
    else if (key == "aggregate_fields") spec.aggregate_fields = as_u32(value);
    else if (key == "accesses_per_symbol") spec.accesses_per_symbol = as_u32(value);
    else if (key == "seed") spec.seed = as_u32(value);
    else if (key == "rodata_fraction") {
      try {
        spec.rodata_fraction = std::stod(value);
      } catch (...) {
        fail(Errc::SpecError, "bad rodata_fraction '" + value + "'");
      }
    } else if (key == "aggregate_access_style") {
      if (value == "via_base") spec.aggregate_access_style = WorkloadSpec::AggregateStyle::ViaBasePointer;
      else if (value == "direct") spec.aggregate_access_style = WorkloadSpec::AggregateStyle::DirectMember;
      else fail(Errc::SpecError, "bad aggregate_access_style '" + value + "'");
    } else if (key == "scalar_size_dist") {
      spec.scalar_size_dist.clear();
      size_t pos = 0;
      while (pos < value.size()) {
        size_t comma = value.find(',', pos);
        std::string item{trim(value.substr(pos, comma == std::string::npos ? comma : comma - pos))};
        pos = comma == std::string::npos ? value.size() : comma + 1;
        if (item.empty()) continue;
        size_t colon = item.find(':');
        if (colon == std::string::npos) fail(Errc::SpecError, "size dist entries are size:weight");
        auto s = parse_int(item.substr(0, colon));
        auto w = parse_int(item.substr(colon + 1));
        if (!s || !w) fail(Errc::SpecError, "bad size dist entry '" + item + "'");
        spec.scalar_size_dist.emplace_back(static_cast<u32>(*s), static_cast<u32>(*w));
      }
    } else {
      fail(Errc::SpecError, "unknown key '" + key + "'");
    }
  }
  spec.validate();
  return spec;
}

WorkloadSpec load_workload_spec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::IoError, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_workload_spec(ss.str());
}

std::string gen_workload(const WorkloadSpec& spec) {
  spec.validate();
  Rng rng(spec.seed ^ 0x6e656172);

  struct Scalar {
    u32 size;
    u32 value;
    bool rodata;
  };
  struct Aggregate {
    bool rodata;
    std::vector<u32> values;
  };
  std::vector<Scalar> scalars;
  std::vector<Aggregate> aggregates;
  for (u32 i = 0; i < spec.scalar_count; i++) {
    Scalar s;
    s.size = draw_size(rng, spec.scalar_size_dist);
    s.value = rng.next();
    s.rodata = rng.below(10000) < static_cast<u32>(spec.rodata_fraction * 10000.0);
    scalars.push_back(s);
  }
  for (u32 i = 0; i < spec.aggregate_count; i++) {
    Aggregate a;
    a.rodata = rng.below(10000) < static_cast<u32>(spec.rodata_fraction * 10000.0);
    for (u32 f = 0; f < spec.aggregate_fields; f++) a.values.push_back(rng.next());
    aggregates.push_back(a);
  }

  std::string out;
  out.reserve(1 << 16);
  out += "# seeded workload: scalars=" + std::to_string(spec.scalar_count) +
         " aggregates=" + std::to_string(spec.aggregate_count) + " seed=" +
         std::to_string(spec.seed) + "\n";

  auto decl_body = [&](const Scalar& s) {
    std::string body;
    u32 rest = s.size;
    u32 v = s.value;
    while (rest >= 4) {
      body += ".word " + std::to_string(v) + "\n";
      v = v * 2654435761u + 12345;
      rest -= 4;
    }
    if (rest >= 2) {
      body += ".half " + std::to_string(v & 0xFFFF) + "\n";
      rest -= 2;
    }
    if (rest >= 1) body += ".byte " + std::to_string(v & 0xFF) + "\n";
    return body;
  };

  out += ".data\n";
  out += ".align 4\n";
  out += ".global __checksum\n";
  out += "__checksum: .word 0\n";
  for (u32 i = 0; i < scalars.size(); i++) {
    if (scalars[i].rodata) continue;
    const Scalar& s = scalars[i];
    u32 align = s.size >= 4 ? 4 : s.size >= 2 ? 2 : 1;
    if (align > 1) out += ".align " + std::to_string(align) + "\n";
    out += "s" + std::to_string(i) + ":\n" + decl_body(s);
    out += ".size s" + std::to_string(i) + ", " + std::to_string(s.size) + "\n";
  }
  for (u32 i = 0; i < aggregates.size(); i++) {
    if (aggregates[i].rodata) continue;
    out += ".align 4\n";
    out += "a" + std::to_string(i) + ":\n";
    for (u32 v : aggregates[i].values) out += ".word " + std::to_string(v) + "\n";
    out += ".size a" + std::to_string(i) + ", " + std::to_string(4 * spec.aggregate_fields) + "\n";
  }

  bool any_rodata = false;
  for (const Scalar& s : scalars) any_rodata |= s.rodata;
  for (const Aggregate& a : aggregates) any_rodata |= a.rodata;
  if (any_rodata) {
    out += ".rodata\n";
    for (u32 i = 0; i < scalars.size(); i++) {
      if (!scalars[i].rodata) continue;
      const Scalar& s = scalars[i];
      u32 align = s.size >= 4 ? 4 : s.size >= 2 ? 2 : 1;
      if (align > 1) out += ".align " + std::to_string(align) + "\n";
      out += "s" + std::to_string(i) + ":\n" + decl_body(s);
      out += ".size s" + std::to_string(i) + ", " + std::to_string(s.size) + "\n";
    }
    for (u32 i = 0; i < aggregates.size(); i++) {
      if (!aggregates[i].rodata) continue;
      out += ".align 4\n";
      out += "a" + std::to_string(i) + ":\n";
      for (u32 v : aggregates[i].values) out += ".word " + std::to_string(v) + "\n";
      out += ".size a" + std::to_string(i) + ", " + std::to_string(4 * spec.aggregate_fields) +
             "\n";
    }
  }

  // access code: one access per symbol per round, reads and writes
  // alternating; rodata symbols only ever read
  out += ".text\n";
  out += ".global _start\n";
  out += "_start:\n";
  for (u32 round = 0; round < spec.accesses_per_symbol; round++) {
    bool write_round = round % 2 == 1;
    for (u32 i = 0; i < scalars.size(); i++) {
      const Scalar& s = scalars[i];
      const std::string name = "s" + std::to_string(i);
      const char* lw = s.size >= 4 ? "lw" : s.size >= 2 ? "lh" : "lb";
      const char* sw = s.size >= 4 ? "sw" : s.size >= 2 ? "sh" : "sb";
      if (write_round && !s.rodata) {
        out += std::string("addi a0, a0, 1\n");
        out += std::string(sw) + " a0, " + name + ", t2\n";
      } else {
        out += std::string(lw) + " a0, " + name + "\n";
        out += "add s1, s1, a0\n";
      }
    }
    for (u32 i = 0; i < aggregates.size(); i++) {
      const Aggregate& a = aggregates[i];
      const std::string name = "a" + std::to_string(i);
      bool writing = write_round && !a.rodata;
      if (spec.aggregate_access_style == WorkloadSpec::AggregateStyle::ViaBasePointer) {
        out += "la t2, " + name + "\n";
        for (u32 f = 0; f < spec.aggregate_fields; f++) {
          std::string off = std::to_string(4 * f);
          out += "lw a0, " + off + "(t2)\n";
          if (writing) {
            out += "addi a0, a0, 1\n";
            out += "sw a0, " + off + "(t2)\n";
          } else {
            out += "add s1, s1, a0\n";
          }
        }
      } else {
        for (u32 f = 0; f < spec.aggregate_fields; f++) {
          std::string member = name + "+" + std::to_string(4 * f);
          out += "lw a0, " + member + "\n";
          if (writing) {
            out += "addi a0, a0, 1\n";
            out += "sw a0, " + member + ", t2\n";
          } else {
            out += "add s1, s1, a0\n";
          }
        }
      }
    }
  }
  out += "la t2, __checksum\n";
  out += "sw s1, 0(t2)\n";
  out += "ebreak\n";
  return out;
}

std::string_view baseline_name(BaselineKind k) {
  return k == BaselineKind::NoRelax ? "none" : "gp12";
}

SizeReport run_experiment(const WorkloadSpec& spec, const MemoryMap& map,
                          const std::vector<NearPolicy>& matrix, BaselineKind baseline) {
  const std::string text = gen_workload(spec);
  const ObjectUnit unit = assemble(text, Variant::SingleRange128K);

  SizeReport report;
  std::optional<SymSpaceResult> reference;
  auto check_semantics = [&](const SymSpaceResult& r, const std::string& what) {
    if (!reference) {
      reference = r;
      return;
    }
    if (r.trace != reference->trace)
      fail(Errc::SemanticsMismatch, what + ": store traces diverge");
    if (r.data != reference->data)
      fail(Errc::SemanticsMismatch, what + ": final data memory diverges");
  };

  for (const NearPolicy& policy : matrix) {
    RelaxMode baseline_mode =
        baseline == BaselineKind::NoRelax ? RelaxMode::Off : RelaxMode::Gp12;
    LinkResult base = link({unit}, map, policy, baseline_mode);
    LinkResult near = link({unit}, map, policy, RelaxMode::Near);

    SymSpaceResult base_run = run_symbol_space(base.image, unit);
    SymSpaceResult near_run = run_symbol_space(near.image, unit);
    std::string tag = std::string(variant_name(policy.variant)) + "/t" +
                      std::to_string(policy.threshold);
    check_semantics(base_run, tag + " baseline");
    check_semantics(near_run, tag + " relaxed");

    ReportRow row;
    row.variant = policy.variant;
    row.threshold = policy.threshold;
    row.near_ram = policy.near_ram;
    row.near_rom = policy.near_rom;
    row.baseline = baseline;
    row.code_size_bytes = near.image.code_size_bytes;
    row.baseline_code_size = base.image.code_size_bytes;
    row.relative_pct = 100.0 * row.code_size_bytes / row.baseline_code_size;
    row.relax_count = near.stats.relax_count;
    row.instret = near_run.instret;
    row.baseline_instret = base_run.instret;
    report.rows.push_back(row);
  }
  return report;
}

std::string emit_report(const SizeReport& report, ReportFormat format) {
  char buf[160];
  std::string out;
  if (format == ReportFormat::Csv) {
    out += "variant,threshold,near_ram,near_rom,baseline,code_bytes,relative_pct,relax_count,instret\n";
    for (const ReportRow& r : report.rows) {
      std::snprintf(buf, sizeof buf, "%s,%u,%d,%d,%s,%u,%.1f,%d,%llu\n",
                    std::string(variant_name(r.variant)).c_str(), r.threshold, r.near_ram ? 1 : 0,
                    r.near_rom ? 1 : 0, std::string(baseline_name(r.baseline)).c_str(),
                    r.code_size_bytes, r.relative_pct, r.relax_count,
                    static_cast<unsigned long long>(r.instret));
      out += buf;
    }
    return out;
  }
  std::snprintf(buf, sizeof buf, "%-7s %9s %8s %8s %8s %10s %9s %7s %10s\n", "variant",
                "threshold", "near_ram", "near_rom", "baseline", "code_bytes", "relative",
                "relax", "instret");
  out += buf;
  for (const ReportRow& r : report.rows) {
    std::snprintf(buf, sizeof buf, "%-7s %9u %8s %8s %8s %10u %7.1f %% %7d %10llu\n",
                  std::string(variant_name(r.variant)).c_str(), r.threshold,
                  r.near_ram ? "yes" : "no", r.near_rom ? "yes" : "no",
                  std::string(baseline_name(r.baseline)).c_str(), r.code_size_bytes,
                  r.relative_pct, r.relax_count, static_cast<unsigned long long>(r.instret));
    out += buf;
  }
  return out;
}

std::vector<std::pair<std::string, WorkloadSpec>> table1_analog_presets() {
  WorkloadSpec aggregate_heavy;
  aggregate_heavy.scalar_count = 300;
  aggregate_heavy.aggregate_count = 60;
  aggregate_heavy.aggregate_fields = 64;
  aggregate_heavy.scalar_size_dist = {{4, 3}, {8, 1}};
  aggregate_heavy.rodata_fraction = 0.25;
  aggregate_heavy.accesses_per_symbol = 2;
  aggregate_heavy.seed = 1001;

  WorkloadSpec mixed = aggregate_heavy;
  mixed.scalar_count = 2000;
  mixed.aggregate_count = 30;
  mixed.seed = 1002;

  WorkloadSpec scalar_heavy = aggregate_heavy;
  scalar_heavy.scalar_count = 4000;
  scalar_heavy.aggregate_count = 2;
  scalar_heavy.seed = 1003;

  return {{"aggregate-heavy", aggregate_heavy}, {"mixed", mixed}, {"scalar-heavy", scalar_heavy}};
}

}  // namespace nearv
