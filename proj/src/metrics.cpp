#include "ganax/metrics.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace ganax::metrics {

Counters& Counters::operator+=(const Counters& o) {
  macs_executed += o.macs_executed;
  macs_consequential += o.macs_consequential;
  macs_skipped += o.macs_skipped;
  chain_hops += o.chain_hops;
  act_ops += o.act_ops;
  alu_ops += o.alu_ops;
  pool_ops += o.pool_ops;
  repeat_ops += o.repeat_ops;
  ld_ops += o.ld_ops;
  nop_ops += o.nop_ops;
  addresses_generated += o.addresses_generated;
  rf_reads += o.rf_reads;
  rf_writes += o.rf_writes;
  local_buffer_accesses += o.local_buffer_accesses;
  weight_store_reads += o.weight_store_reads;
  global_buffer_reads += o.global_buffer_reads;
  global_buffer_writes += o.global_buffer_writes;
  dram_bytes += o.dram_bytes;
  uop_fetch_global += o.uop_fetch_global;
  uop_fetch_local += o.uop_fetch_local;
  busy_pe_cycles += o.busy_pe_cycles;
  idle_pe_cycles += o.idle_pe_cycles;
  stall_pe_cycles += o.stall_pe_cycles;
  issue_stalls += o.issue_stalls;
  return *this;
}

namespace {
using nlohmann::json;

double require_cost(const json& j, const char* key) {
  if (!j.contains(key))
    throw UsageError(std::string("energy table: missing cost class '") + key +
                     "'");
  if (!j[key].is_number())
    throw UsageError(std::string("energy table: cost '") + key +
                     "' must be a number");
  const double v = j[key].get<double>();
  if (v < 0) throw UsageError(std::string("energy table: cost '") + key +
                              "' must be >= 0");
  return v;
}
}  // namespace

EnergyCostTable EnergyCostTable::parse(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what());
  }
  EnergyCostTable t;
  t.version = j.value("version", "unversioned");
  t.pe_op = require_cost(j, "pe_op");
  t.register_file = require_cost(j, "register_file");
  t.local_buffer = require_cost(j, "local_buffer");
  t.weight_store = require_cost(j, "weight_store");
  t.global_buffer = require_cost(j, "global_buffer");
  t.dram_byte = require_cost(j, "dram_byte");
  t.uop_fetch_global = require_cost(j, "uop_fetch_global");
  t.uop_fetch_local = require_cost(j, "uop_fetch_local");
  return t;
}

EnergyCostTable EnergyCostTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open energy table: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string EnergyCostTable::to_json() const {
  json j;
  j["version"] = version;
  j["pe_op"] = pe_op;
  j["register_file"] = register_file;
  j["local_buffer"] = local_buffer;
  j["weight_store"] = weight_store;
  j["global_buffer"] = global_buffer;
  j["dram_byte"] = dram_byte;
  j["uop_fetch_global"] = uop_fetch_global;
  j["uop_fetch_local"] = uop_fetch_local;
  return j.dump(2) + "\n";
}

std::map<std::string, double> compute_energy(const Counters& c,
                                             const EnergyCostTable& t) {
  // PE events: every data operation executed by a PE, index generation
  // included in the per-op cost.
  const std::uint64_t pe_events = c.macs_executed + c.chain_hops + c.act_ops +
                                  c.alu_ops + c.pool_ops + c.repeat_ops +
                                  c.ld_ops;
  std::map<std::string, double> by_unit;
  by_unit["pe"] = static_cast<double>(pe_events) * t.pe_op;
  by_unit["register_file"] =
      static_cast<double>(c.rf_reads + c.rf_writes) * t.register_file;
  by_unit["local_buffer"] =
      static_cast<double>(c.local_buffer_accesses) * t.local_buffer;
  by_unit["weight_store"] =
      static_cast<double>(c.weight_store_reads) * t.weight_store;
  by_unit["global_buffer"] =
      static_cast<double>(c.global_buffer_reads + c.global_buffer_writes) *
      t.global_buffer;
  by_unit["dram"] = static_cast<double>(c.dram_bytes) * t.dram_byte;
  by_unit["uop_global"] =
      static_cast<double>(c.uop_fetch_global) * t.uop_fetch_global;
  by_unit["uop_local"] =
      static_cast<double>(c.uop_fetch_local) * t.uop_fetch_local;
  return by_unit;
}

double total_energy(const Counters& c, const EnergyCostTable& t) {
  double sum = 0.0;
  for (const auto& [unit, e] : compute_energy(c, t)) sum += e;
  return sum;
}

RunMetrics finalize(const std::string& layer_id, SimMode mode,
                    model::ModelRole role, std::uint64_t cycles,
                    const Counters& counters, const EnergyCostTable& table) {
  RunMetrics m;
  m.layer_id = layer_id;
  m.mode = mode;
  m.role = role;
  m.cycles = cycles;
  m.counters = counters;
  const std::uint64_t pe_cycles = counters.busy_pe_cycles +
                                  counters.idle_pe_cycles +
                                  counters.stall_pe_cycles;
  if (pe_cycles > 0) {
    m.pe_utilization =
        static_cast<double>(counters.busy_pe_cycles) / pe_cycles;
    m.consequential_utilization =
        static_cast<double>(counters.macs_consequential) / pe_cycles;
  }
  m.energy_by_unit = compute_energy(counters, table);
  m.energy = 0.0;
  for (const auto& [unit, e] : m.energy_by_unit) m.energy += e;
  return m;
}

ComparisonReport compare_runs(const std::vector<RunMetrics>& ganax,
                              const std::vector<RunMetrics>& baseline) {
  if (ganax.size() != baseline.size())
    throw UsageError("compare_runs: mismatched workloads (layer counts differ)");
  ComparisonReport rep;
  std::uint64_t g_cycles = 0, b_cycles = 0;
  double g_energy = 0.0, b_energy = 0.0;
  for (std::size_t i = 0; i < ganax.size(); ++i) {
    const auto& g = ganax[i];
    const auto& b = baseline[i];
    if (g.layer_id != b.layer_id)
      throw UsageError("compare_runs: mismatched workloads (layer '" +
                       g.layer_id + "' vs '" + b.layer_id + "')");
    LayerComparison lc;
    lc.layer_id = g.layer_id;
    lc.role = g.role;
    lc.ganax_cycles = g.cycles;
    lc.baseline_cycles = b.cycles;
    lc.speedup = g.cycles ? static_cast<double>(b.cycles) / g.cycles : 0.0;
    lc.energy_reduction = g.energy > 0 ? b.energy / g.energy : 0.0;
    lc.ganax_utilization = g.pe_utilization;
    lc.baseline_utilization = b.pe_utilization;
    rep.layers.push_back(lc);

    g_cycles += g.cycles;
    b_cycles += b.cycles;
    g_energy += g.energy;
    b_energy += b.energy;

    auto& role = rep.by_role[model::to_string(g.role)];
    role.ganax_cycles += g.cycles;
    role.baseline_cycles += b.cycles;
    role.ganax_energy += g.energy;
    role.baseline_energy += b.energy;
  }
  rep.overall_speedup =
      g_cycles ? static_cast<double>(b_cycles) / g_cycles : 0.0;
  rep.overall_energy_reduction = g_energy > 0 ? b_energy / g_energy : 0.0;
  for (auto& [name, r] : rep.by_role) {
    r.speedup =
        r.ganax_cycles ? static_cast<double>(r.baseline_cycles) / r.ganax_cycles
                       : 0.0;
    r.energy_reduction =
        r.ganax_energy > 0 ? r.baseline_energy / r.ganax_energy : 0.0;
  }
  return rep;
}

}  // namespace ganax::metrics
