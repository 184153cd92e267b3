#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ganax/config.hpp"
#include "ganax/model.hpp"

namespace ganax::metrics {

// Raw event counters accumulated by one simulation run.
struct Counters {
  std::uint64_t macs_executed = 0;
  std::uint64_t macs_consequential = 0;
  std::uint64_t macs_skipped = 0;  // dense-equivalent MACs never issued
  std::uint64_t chain_hops = 0;
  std::uint64_t act_ops = 0;
  std::uint64_t alu_ops = 0;
  std::uint64_t pool_ops = 0;
  std::uint64_t repeat_ops = 0;
  std::uint64_t ld_ops = 0;
  std::uint64_t nop_ops = 0;
  std::uint64_t addresses_generated = 0;

  std::uint64_t rf_reads = 0;
  std::uint64_t rf_writes = 0;
  std::uint64_t local_buffer_accesses = 0;
  std::uint64_t weight_store_reads = 0;
  std::uint64_t global_buffer_reads = 0;
  std::uint64_t global_buffer_writes = 0;
  std::uint64_t dram_bytes = 0;
  std::uint64_t uop_fetch_global = 0;
  std::uint64_t uop_fetch_local = 0;

  std::uint64_t busy_pe_cycles = 0;
  std::uint64_t idle_pe_cycles = 0;
  std::uint64_t stall_pe_cycles = 0;
  std::uint64_t issue_stalls = 0;

  Counters& operator+=(const Counters& o);
};

// Normalized energy cost per event class. Absolute technology numbers are
// deliberately not baked in; the shipped costs/default.json carries
// plausible relative magnitudes (dram >> global buffer >> weight store >>
// local buffer >> register file ~ pe op). PE cost covers the ALU together
// with its strided index generators.
struct EnergyCostTable {
  std::string version = "builtin-1";
  double pe_op = 1.0;
  double register_file = 1.0;
  double local_buffer = 2.0;
  double weight_store = 6.0;
  double global_buffer = 12.0;
  double dram_byte = 100.0;
  double uop_fetch_global = 2.0;
  double uop_fetch_local = 0.5;

  static EnergyCostTable builtin_default() { return {}; }
  static EnergyCostTable parse(const std::string& json_text);
  static EnergyCostTable load(const std::string& path);
  std::string to_json() const;
};

// Linear energy accumulation: sum over classes of count * cost.
std::map<std::string, double> compute_energy(const Counters& c,
                                             const EnergyCostTable& t);
double total_energy(const Counters& c, const EnergyCostTable& t);

struct RunMetrics {
  std::string layer_id;
  SimMode mode = SimMode::Ganax;
  model::ModelRole role = model::ModelRole::Generative;
  std::uint64_t cycles = 0;
  Counters counters;
  double pe_utilization = 0.0;             // busy / (busy + idle + stall)
  double consequential_utilization = 0.0;  // consequential-mac share of PE cycles
  double energy = 0.0;
  std::map<std::string, double> energy_by_unit;
  bool verified = false;
};

// Fills in the derived fields (utilization, energy) from the counters.
RunMetrics finalize(const std::string& layer_id, SimMode mode,
                    model::ModelRole role, std::uint64_t cycles,
                    const Counters& counters, const EnergyCostTable& table);

struct LayerComparison {
  std::string layer_id;
  model::ModelRole role = model::ModelRole::Generative;
  double speedup = 0.0;
  double energy_reduction = 0.0;
  double ganax_utilization = 0.0;
  double baseline_utilization = 0.0;
  std::uint64_t ganax_cycles = 0;
  std::uint64_t baseline_cycles = 0;
};

struct RoleAggregate {
  std::uint64_t ganax_cycles = 0;
  std::uint64_t baseline_cycles = 0;
  double ganax_energy = 0.0;
  double baseline_energy = 0.0;
  double speedup = 0.0;
  double energy_reduction = 0.0;
};

struct ComparisonReport {
  std::vector<LayerComparison> layers;
  double overall_speedup = 0.0;
  double overall_energy_reduction = 0.0;
  std::map<std::string, RoleAggregate> by_role;
};

// Both runs must cover the same workload (same layer ids in order).
ComparisonReport compare_runs(const std::vector<RunMetrics>& ganax,
                              const std::vector<RunMetrics>& baseline);

}  // namespace ganax::metrics
