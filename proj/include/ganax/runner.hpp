#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ganax/array.hpp"
#include "ganax/config.hpp"
#include "ganax/metrics.hpp"
#include "ganax/model.hpp"

namespace ganax::runner {

enum class ElemMode { Fixed, Float32 };

struct RunSpec {
  std::vector<SimMode> modes = {SimMode::Ganax, SimMode::BaselineDense};
  std::uint64_t seed = 1;
  ElemMode elem = ElemMode::Fixed;
  ArrayConfig config;
  metrics::EnergyCostTable energy = metrics::EnergyCostTable::builtin_default();
  bool chained = false;
  int threads = 1;
};

struct WorkloadRunResult {
  model::Workload workload;
  RunSpec spec;
  // Layer-ordered metrics per executed mode.
  std::map<SimMode, std::vector<metrics::RunMetrics>> per_mode;
  std::optional<metrics::ComparisonReport> comparison;
  bool all_verified = true;
  std::vector<std::string> verify_errors;
};

// Seed-derived tensors: the pair (seed, layer index) fully determines them.
TensorQ gen_input(const model::LayerSpec& l, std::uint64_t seed, int layer_idx);
TensorQ gen_filters(const model::LayerSpec& l, std::uint64_t seed, int layer_idx);

// Simulates every layer in every requested mode, verifies each run against
// the golden kernels (bit-exact in fixed-point, 1e-5 relative in float),
// and compares modes when both ran. Layer/mode jobs may run on
// spec.threads workers; results are identical for any thread count.
WorkloadRunResult run_workload(const model::Workload& w, const RunSpec& spec);

// Report writers. Output is byte-deterministic for a given (workload, spec).
std::string report_json(const WorkloadRunResult& r);
std::string report_csv(const WorkloadRunResult& r);
std::string summary_text(const WorkloadRunResult& r);

// Array config overrides from a JSON file ({"num_pvs": 16, ...}); fields
// not present keep their defaults.
ArrayConfig parse_array_config(const std::string& json_text);
ArrayConfig load_array_config(const std::string& path);

}  // namespace ganax::runner
