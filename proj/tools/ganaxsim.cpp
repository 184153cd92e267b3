#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "ganax/array.hpp"
#include "ganax/golden.hpp"
#include "ganax/lower.hpp"
#include "ganax/planner.hpp"
#include "ganax/rng.hpp"
#include "ganax/runner.hpp"

namespace {

using namespace ganax;

constexpr int kExitVerifyFailed = 1;
constexpr int kExitUsage = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write file: " + path);
  out << text;
}

std::vector<SimMode> parse_modes(const std::string& arg) {
  std::vector<SimMode> modes;
  std::stringstream ss(arg);
  std::string m;
  while (std::getline(ss, m, ',')) {
    if (m == "ganax") modes.push_back(SimMode::Ganax);
    else if (m == "baseline") modes.push_back(SimMode::BaselineDense);
    else throw UsageError("unknown mode '" + m + "' (expected ganax|baseline)");
  }
  if (modes.empty()) throw UsageError("--modes needs at least one mode");
  return modes;
}

// Energy table resolution: --energy-table, then
// $GANAXSIM_CONFIG_DIR/costs/default.json, then built-in defaults.
metrics::EnergyCostTable resolve_energy_table(const std::string& flag) {
  if (!flag.empty()) return metrics::EnergyCostTable::load(flag);
  if (const char* dir = std::getenv("GANAXSIM_CONFIG_DIR")) {
    const std::string p = std::string(dir) + "/costs/default.json";
    if (std::ifstream(p).good()) return metrics::EnergyCostTable::load(p);
  }
  return metrics::EnergyCostTable::builtin_default();
}

struct CommonOpts {
  std::string workload;
  std::string energy_table;
  std::string config;
  std::string out;
  std::string format = "json";
  std::string modes = "ganax,baseline";
  std::string elem = "fixed";
  std::uint64_t seed = 1;
  bool chained = false;
  int threads = 1;
};

int cmd_run(const CommonOpts& o) {
  auto w = model::load_workload(o.workload);
  runner::RunSpec spec;
  spec.modes = parse_modes(o.modes);
  spec.seed = o.seed;
  spec.chained = o.chained;
  spec.threads = o.threads;
  if (o.elem == "fixed") spec.elem = runner::ElemMode::Fixed;
  else if (o.elem == "float") spec.elem = runner::ElemMode::Float32;
  else throw UsageError("--elem must be fixed|float");
  if (!o.config.empty()) spec.config = runner::load_array_config(o.config);
  spec.energy = resolve_energy_table(o.energy_table);

  auto res = runner::run_workload(w, spec);
  const std::string report =
      o.format == "csv" ? runner::report_csv(res) : runner::report_json(res);
  if (o.format != "csv" && o.format != "json")
    throw UsageError("--format must be json|csv");
  if (!o.out.empty()) write_file(o.out, report);
  std::cout << runner::summary_text(res);
  if (!res.all_verified) {
    for (const auto& e : res.verify_errors)
      std::cerr << "verification mismatch: " << e << "\n";
    return kExitVerifyFailed;
  }
  return 0;
}

int cmd_explain(const std::string& workload_path, const std::string& layer_id,
                int num_pvs) {
  auto w = model::load_workload(workload_path);
  bool found = false;
  for (const auto& l : w.layers) {
    if (!layer_id.empty() && l.layer_id != layer_id) continue;
    found = true;
    auto plan = planner::build_plan(l, num_pvs);
    std::cout << planner::dump_plan(plan, l);
    if (l.kind == model::LayerKind::TConv) {
      auto s = planner::count_inconsequential_macs(l);
      std::cout << "macs: total " << s.total_macs << ", consequential "
                << s.consequential_macs << ", inconsequential fraction "
                << s.inconsequential_fraction << "\n";
      std::cout << "naive interior idle fraction "
                << planner::naive_interior_idle_fraction(plan, l)
                << ", plan interior idle fraction 0\n";
    }
    auto ganax_cyc =
        planner::accumulation_schedule(plan, l, planner::ScheduleMode::Ganax);
    auto base_cyc = planner::accumulation_schedule(
        plan, l, planner::ScheduleMode::BaselineDense);
    std::cout << "accumulation cycles per row (ganax/baseline):";
    for (std::size_t r = 0; r < ganax_cyc.size(); ++r)
      std::cout << " " << ganax_cyc[r] << "/" << base_cyc[r];
    std::cout << "\n\n";
  }
  if (!found) throw UsageError("layer '" + layer_id + "' not found");
  return 0;
}

int cmd_asm(const std::string& in_path, const std::string& out_path) {
  auto program = isa::assemble(read_file(in_path));
  isa::store_program(program, out_path);
  std::cout << "assembled " << program.global_stream.size() << " words ("
            << program.pages() << " pages) to " << out_path << "\n";
  return 0;
}

int cmd_disasm(const std::string& in_path, const std::string& out_path) {
  auto program = isa::load_program(in_path);
  auto text = isa::disassemble(program);
  if (out_path.empty()) std::cout << text;
  else write_file(out_path, text);
  return 0;
}

class LineTrace : public array::TraceSink {
 public:
  LineTrace(std::ostream& os, int pv, int pe) : os_(os), pv_(pv), pe_(pe) {}
  void address(std::uint64_t cycle, int pv, int gen,
               std::uint16_t addr) override {
    if (pv_ >= 0 && pv != pv_) return;
    os_ << "cycle " << cycle << " pv" << pv << " pe" << (pe_ < 0 ? 0 : pe_)
        << " gen" << gen << " addr " << addr << "\n";
  }
  void op(std::uint64_t cycle, int pv, isa::ExecOp op, bool) override {
    if (pv_ >= 0 && pv != pv_) return;
    os_ << "cycle " << cycle << " pv" << pv << " pe" << (pe_ < 0 ? 0 : pe_)
        << " op " << isa::mnemonic(op) << "\n";
  }

 private:
  std::ostream& os_;
  int pv_;
  int pe_;
};

int cmd_trace(const CommonOpts& o, const std::string& layer_id,
              const std::string& mode_name, const std::string& trace_pe) {
  auto w = model::load_workload(o.workload);
  const model::LayerSpec* layer = nullptr;
  int layer_idx = 0;
  for (std::size_t i = 0; i < w.layers.size(); ++i)
    if (layer_id.empty() || w.layers[i].layer_id == layer_id) {
      layer = &w.layers[i];
      layer_idx = static_cast<int>(i);
      break;
    }
  if (!layer) throw UsageError("layer '" + layer_id + "' not found");

  ArrayConfig cfg;
  if (!o.config.empty()) cfg = runner::load_array_config(o.config);
  const SimMode mode = parse_modes(mode_name).at(0);

  int pv = -1, pe = -1;
  if (!trace_pe.empty()) {
    if (std::sscanf(trace_pe.c_str(), "%d,%d", &pv, &pe) != 2 || pv < 0 ||
        pe < 0 || pv >= cfg.num_pvs || pe >= cfg.pes_per_pv)
      throw UsageError("--trace-pe expects pv,pe within the array");
  }

  auto plan = planner::build_plan(*layer, cfg.num_pvs);
  auto low = isa::lower(plan, *layer, mode, cfg);
  auto input = runner::gen_input(*layer, o.seed, layer_idx);
  auto filters = runner::gen_filters(*layer, o.seed, layer_idx);

  std::ostringstream trace_text;
  LineTrace sink(trace_text, pv, pe);
  auto run = array::run_layer(low, input, filters, cfg, &sink);
  auto want = golden::golden_layer<FixedQ88>(input, filters, *layer);
  if (cfg.activation == Activation::Relu) golden::apply_relu<FixedQ88>(want);

  if (o.out.empty()) std::cout << trace_text.str();
  else write_file(o.out, trace_text.str());
  std::cout << "cycles " << run.cycles << " verified "
            << (run.output == want ? "yes" : "NO") << "\n";
  return run.output == want ? 0 : kExitVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cycle-level simulator for a unified MIMD-SIMD GAN accelerator"};
  app.require_subcommand(1);

  CommonOpts o;
  std::string layer_id, trace_pe, mode_name = "ganax";
  std::string asm_in, asm_out;
  int num_pvs = 16;

  auto* run = app.add_subcommand("run", "simulate a workload and report");
  run->add_option("--workload", o.workload, "workload json file")->required();
  run->add_option("--modes", o.modes, "comma list: ganax,baseline");
  run->add_option("--seed", o.seed, "tensor generation seed");
  run->add_option("--elem", o.elem, "element type: fixed|float");
  run->add_option("--energy-table", o.energy_table, "energy cost json");
  run->add_option("--config", o.config, "array config json");
  run->add_option("--out", o.out, "report output path");
  run->add_option("--format", o.format, "report format: json|csv");
  run->add_flag("--chained", o.chained, "feed each layer its predecessor's output");
  run->add_option("--threads", o.threads, "worker threads for layer sims");

  auto* explain = app.add_subcommand("explain", "print a layer's dataflow plan");
  explain->add_option("--workload", o.workload)->required();
  explain->add_option("--layer", layer_id, "layer id (default: all layers)");
  explain->add_option("--pvs", num_pvs, "processing vectors to plan for");

  auto* asmc = app.add_subcommand("asm", "assemble .guop text to a binary image");
  asmc->add_option("--in", asm_in)->required();
  asmc->add_option("--out", asm_out)->required();

  auto* disasm = app.add_subcommand("disasm", "disassemble a binary image");
  disasm->add_option("--in", asm_in)->required();
  disasm->add_option("--out", asm_out, "output path (default: stdout)");

  auto* trace = app.add_subcommand("trace", "per-PE trace of a tiny layer");
  trace->add_option("--workload", o.workload)->required();
  trace->add_option("--layer", layer_id, "layer id (default: first layer)");
  trace->add_option("--mode", mode_name, "ganax|baseline");
  trace->add_option("--seed", o.seed);
  trace->add_option("--config", o.config);
  trace->add_option("--out", o.out, "trace output path (default: stdout)");
  trace->add_option("--trace-pe", trace_pe, "pv,pe filter");

  try {
    app.parse(argc, argv);
    if (run->parsed()) return cmd_run(o);
    if (explain->parsed()) return cmd_explain(o.workload, layer_id, num_pvs);
    if (asmc->parsed()) return cmd_asm(asm_in, asm_out);
    if (disasm->parsed()) return cmd_disasm(asm_in, asm_out);
    if (trace->parsed()) return cmd_trace(o, layer_id, mode_name, trace_pe);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const ganax::UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ganax::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "fault: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
