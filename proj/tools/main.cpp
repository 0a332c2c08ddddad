// nearv: assembler, linker, emulator and size-measurement harness for the
// RV32 near-addressing load/store extension.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "nearv/assembler.hpp"
#include "nearv/disasm.hpp"
#include "nearv/emulator.hpp"
#include "nearv/evalkit.hpp"
#include "nearv/linker.hpp"

using namespace nearv;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::IoError, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::IoError, "cannot write " + path);
  out << text;
}

Variant want_variant(const std::string& name) {
  auto v = variant_from_name(name);
  if (!v) fail(Errc::UsageError, "variant must be 'single' or 'dual', got '" + name + "'");
  return *v;
}

void print_diagnostics(const LinkStats& stats) {
  for (const auto& d : stats.diagnostics) std::cerr << "nearv: " << d << "\n";
}

struct RunOpts {
  std::string image_path;
  u64 max_steps = 10'000'000;
  bool trace = false;
};

int do_run(const RunOpts& opts) {
  Image img = load_image_file(opts.image_path);
  MachineState st = load_image(img);

  RunResult result;
  if (opts.trace) {
    u64 n = 0;
    for (; n < opts.max_steps; n++) {
      bool fetchable = st.mem.is_mapped(st.pc) && !(st.pc & 3);
      u32 w = 0;
      if (fetchable)
        for (int i = 0; i < 4; i++) w |= static_cast<u32>(st.mem.peek(st.pc + i)) << (8 * i);
      StepResult r = step(st);
      if (r.ok() || r.halted) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%08x: ", st.pc);
        std::cout << (fetchable ? std::string(buf) + disassemble_word(w, img.variant) : "?") << "\n";
      }
      if (r.halted) {
        result = RunResult{RunOutcome::Halted, {}, st.instret};
        break;
      }
      if (r.trap) {
        result = RunResult{RunOutcome::Trapped, r.trap, st.instret};
        break;
      }
    }
    if (n == opts.max_steps) result = RunResult{RunOutcome::StepLimit, {}, st.instret};
  } else {
    result = run(st, opts.max_steps);
  }

  std::cout << dump_final_state(st);
  switch (result.outcome) {
    case RunOutcome::Halted:
      return 0;
    case RunOutcome::Trapped:
      std::cerr << "nearv: trap " << trap_name(*result.trap) << " at pc " << to_hex(st.pc) << "\n";
      return 3;
    case RunOutcome::StepLimit:
      std::cerr << "nearv: step limit of " << opts.max_steps << " reached\n";
      return 3;
  }
  return 3;
}

std::vector<NearPolicy> parse_matrix(const std::string& text, const NearPolicy& defaults) {
  std::vector<NearPolicy> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    lineno++;
    auto body = trim(line);
    if (body.empty() || body[0] == '#') continue;
    NearPolicy p = defaults;
    for (const std::string& tok : split_ws(body)) {
      size_t eq = tok.find('=');
      if (eq == std::string::npos)
        fail(Errc::ParseError, "matrix line " + std::to_string(lineno) + ": expected key=value");
      std::string key = tok.substr(0, eq), value = tok.substr(eq + 1);
      if (key == "variant") p.variant = want_variant(value);
      else if (key == "threshold") {
        auto v = parse_int(value);
        if (!v || *v < 0) fail(Errc::ParseError, "bad threshold '" + value + "'");
        p.threshold = static_cast<u32>(*v);
      } else if (key == "near_ram" || key == "near_rom") {
        bool b;
        if (value == "1" || value == "true") b = true;
        else if (value == "0" || value == "false") b = false;
        else fail(Errc::ParseError, "bad boolean '" + value + "'");
        (key == "near_ram" ? p.near_ram : p.near_rom) = b;
      } else {
        fail(Errc::ParseError, "matrix line " + std::to_string(lineno) + ": unknown key " + key);
      }
    }
    out.push_back(p);
  }
  if (out.empty()) fail(Errc::ParseError, "matrix file has no configurations");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RV32 near-addressing toolchain"};
  app.require_subcommand(1);

  // asm
  std::string asm_in, asm_out, asm_variant = "single";
  auto* casm = app.add_subcommand("asm", "assemble a source file into a relocatable object");
  casm->add_option("input", asm_in, "assembly source")->required();
  casm->add_option("-o,--output", asm_out, "object file")->required();
  casm->add_option("--variant", asm_variant, "single | dual");

  // link
  std::vector<std::string> link_in;
  std::string link_out, link_config, link_variant;
  i64 link_threshold = -1;
  bool relax_on = true, gp12 = false;
  bool near_ram_on = false, near_ram_off = false, near_rom_on = false, near_rom_off = false;
  auto* clink = app.add_subcommand("link", "link objects into an executable image");
  clink->add_option("inputs", link_in, "object files")->required();
  clink->add_option("-o,--output", link_out, "image file")->required();
  clink->add_option("--config", link_config, "memory map / policy file")->required();
  clink->add_option("--variant", link_variant, "override the config variant");
  clink->add_option("--threshold", link_threshold, "near placement size threshold in bytes");
  clink->add_flag("--relax,!--no-relax", relax_on, "rewrite marked pairs into near forms");
  clink->add_flag("--gp12", gp12, "use the 12-bit gp window relaxation (reference baseline)");
  clink->add_flag("--near-ram", near_ram_on, "move small RAM data near");
  clink->add_flag("--no-near-ram", near_ram_off, "keep all RAM data far");
  clink->add_flag("--near-rom", near_rom_on, "move small ROM data near");
  clink->add_flag("--no-near-rom", near_rom_off, "keep all ROM data far");

  // run
  RunOpts run_opts;
  auto* crun = app.add_subcommand("run", "execute an image until ebreak, trap or step limit");
  crun->add_option("image", run_opts.image_path, "image file")->required();
  crun->add_option("--max-steps", run_opts.max_steps, "instruction budget");
  crun->add_flag("--trace", run_opts.trace, "print one line per executed instruction");

  // dis
  std::string dis_in, dis_variant = "single";
  auto* cdis = app.add_subcommand("dis", "disassemble an object or an image");
  cdis->add_option("input", dis_in, "object or image file")->required();
  cdis->add_option("--variant", dis_variant, "decode variant for objects");

  // gen
  std::string gen_in, gen_out;
  i64 gen_seed = -1;
  auto* cgen = app.add_subcommand("gen", "generate a synthetic workload from a spec");
  cgen->add_option("spec", gen_in, "workload spec file")->required();
  cgen->add_option("-o,--output", gen_out, "assembly output")->required();
  cgen->add_option("--seed", gen_seed, "override the spec seed");

  // exp
  std::string exp_spec, exp_config, exp_matrix, exp_out, exp_baseline = "none",
              exp_format = "table";
  i64 exp_seed = -1;
  auto* cexp = app.add_subcommand("exp", "run the size experiment matrix");
  cexp->add_option("spec", exp_spec, "workload spec file")->required();
  cexp->add_option("--config", exp_config, "memory map / policy file")->required();
  cexp->add_option("--matrix", exp_matrix, "policy matrix file")->required();
  cexp->add_option("-o,--output", exp_out, "report file (- for stdout)")->required();
  cexp->add_option("--baseline", exp_baseline, "none | gp12");
  cexp->add_option("--format", exp_format, "table | csv");
  cexp->add_option("--seed", exp_seed, "override the spec seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 1;
  }

  try {
    if (*casm) {
      ObjectUnit unit = assemble(read_file(asm_in), want_variant(asm_variant));
      save_object_file(unit, asm_out);
      return 0;
    }

    if (*clink) {
      LinkConfig cfg = load_link_config(link_config);
      if (!link_variant.empty()) cfg.policy.variant = want_variant(link_variant);
      if (link_threshold >= 0) cfg.policy.threshold = static_cast<u32>(link_threshold);
      if (near_ram_on) cfg.policy.near_ram = true;
      if (near_ram_off) cfg.policy.near_ram = false;
      if (near_rom_on) cfg.policy.near_rom = true;
      if (near_rom_off) cfg.policy.near_rom = false;
      RelaxMode mode = !relax_on ? RelaxMode::Off : gp12 ? RelaxMode::Gp12 : RelaxMode::Near;

      std::vector<ObjectUnit> units;
      for (const auto& path : link_in) units.push_back(load_object_file(path));
      LinkResult result = link(std::move(units), cfg.map, cfg.policy, mode);
      print_diagnostics(result.stats);
      save_image_file(result.image, link_out);
      std::cerr << "nearv: code " << result.stats.code_size_bytes << " bytes, "
                << result.stats.relax_count << " pairs relaxed\n";
      return 0;
    }

    if (*crun) return do_run(run_opts);

    if (*cdis) {
      std::string text = read_file(dis_in);
      auto head = text.substr(0, text.find('\n'));
      if (head.rfind("IMAGE", 0) == 0) std::cout << disassemble_image(read_image(text));
      else std::cout << disassemble_object(read_object(text), want_variant(dis_variant));
      return 0;
    }

    if (*cgen) {
      WorkloadSpec spec = load_workload_spec(gen_in);
      if (gen_seed >= 0) spec.seed = static_cast<u64>(gen_seed);
      write_file(gen_out, gen_workload(spec));
      return 0;
    }

    if (*cexp) {
      WorkloadSpec spec = load_workload_spec(exp_spec);
      if (exp_seed >= 0) spec.seed = static_cast<u64>(exp_seed);
      LinkConfig cfg = load_link_config(exp_config);
      std::vector<NearPolicy> matrix = parse_matrix(read_file(exp_matrix), cfg.policy);
      BaselineKind baseline;
      if (exp_baseline == "none") baseline = BaselineKind::NoRelax;
      else if (exp_baseline == "gp12") baseline = BaselineKind::Gp12Relax;
      else fail(Errc::UsageError, "--baseline must be none or gp12");
      ReportFormat format;
      if (exp_format == "table") format = ReportFormat::Table;
      else if (exp_format == "csv") format = ReportFormat::Csv;
      else fail(Errc::UsageError, "--format must be table or csv");

      SizeReport report = run_experiment(spec, cfg.map, matrix, baseline);
      write_file(exp_out, emit_report(report, format));
      return 0;
    }
  } catch (const ToolError& e) {
    std::cerr << "nearv: " << e.what() << "\n";
    if (e.code() == Errc::UsageError) return 1;
    return e.code() == Errc::SemanticsMismatch ? 3 : 2;
  } catch (const std::exception& e) {
    std::cerr << "nearv: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
