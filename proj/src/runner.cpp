#include "ganax/runner.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "ganax/golden.hpp"
#include "ganax/lower.hpp"
#include "ganax/planner.hpp"
#include "ganax/rng.hpp"

namespace ganax::runner {

namespace {

std::uint64_t derive_seed(std::uint64_t seed, int layer_idx, int which) {
  SplitMix64 s(seed + 0x9e3779b97f4a7c15ull * (2 * layer_idx + which + 1));
  return s.next();
}

template <typename Num>
Tensor<typename Num::value_type> golden_with_act(
    const Tensor<typename Num::value_type>& in,
    const Tensor<typename Num::value_type>& f, const model::LayerSpec& l,
    Activation act) {
  auto out = golden::golden_layer<Num>(in, f, l);
  if (act == Activation::Relu) golden::apply_relu<Num>(out);
  return out;
}

std::string first_mismatch(const TensorQ& got, const TensorQ& want) {
  for (std::size_t i = 0; i < want.size(); ++i)
    if (got.data()[i] != want.data()[i])
      return "element " + std::to_string(i) + ": got " +
             std::to_string(got.data()[i]) + ", want " +
             std::to_string(want.data()[i]);
  return "";
}

std::string first_mismatch_f(const TensorF& got, const TensorF& want) {
  for (std::size_t i = 0; i < want.size(); ++i) {
    const float g = got.data()[i];
    const float w = want.data()[i];
    const float tol = 1e-5f * std::max(1.0f, std::abs(w));
    if (std::abs(g - w) > tol)
      return "element " + std::to_string(i) + ": got " + std::to_string(g) +
             ", want " + std::to_string(w);
  }
  return "";
}

struct Job {
  int layer_idx;
  SimMode mode;
};

}  // namespace

TensorQ gen_input(const model::LayerSpec& l, std::uint64_t seed, int layer_idx) {
  return random_tensor_q({l.in_c, l.in_h, l.in_w}, derive_seed(seed, layer_idx, 0));
}

TensorQ gen_filters(const model::LayerSpec& l, std::uint64_t seed, int layer_idx) {
  return random_tensor_q({l.out_c, l.in_c, l.k_h, l.k_w},
                         derive_seed(seed, layer_idx, 1));
}

WorkloadRunResult run_workload(const model::Workload& w, const RunSpec& spec) {
  WorkloadRunResult res;
  res.workload = w;
  res.spec = spec;
  if (w.layers.empty()) throw UsageError("workload has no layers");
  if (spec.chained) model::validate_chain(w);

  const int n = static_cast<int>(w.layers.size());

  // Inputs and filters first; chained mode feeds each layer the golden
  // output of its predecessor, so inputs are mode-independent.
  std::vector<TensorQ> inputs(n), filters(n);
  for (int i = 0; i < n; ++i) {
    filters[i] = gen_filters(w.layers[i], spec.seed, i);
    if (spec.chained && i > 0) {
      inputs[i] = golden_with_act<FixedQ88>(inputs[i - 1], filters[i - 1],
                                            w.layers[i - 1],
                                            spec.config.activation);
    } else {
      inputs[i] = gen_input(w.layers[i], spec.seed, i);
    }
  }

  std::vector<Job> jobs;
  for (SimMode mode : spec.modes)
    for (int i = 0; i < n; ++i) jobs.push_back({i, mode});

  std::vector<metrics::RunMetrics> results(jobs.size());
  std::vector<std::string> errors(jobs.size());

  auto run_job = [&](const Job& job, metrics::RunMetrics& out_metrics,
                     std::string& out_error) {
    const auto& layer = w.layers[job.layer_idx];
    auto plan = planner::build_plan(layer, spec.config.num_pvs);
    auto lowered = isa::lower(plan, layer, job.mode, spec.config);

    metrics::Counters counters;
    std::uint64_t cycles = 0;
    bool verified = false;
    if (spec.elem == ElemMode::Fixed) {
      auto run = array::run_layer(lowered, inputs[job.layer_idx],
                                  filters[job.layer_idx], spec.config);
      auto want = golden_with_act<FixedQ88>(inputs[job.layer_idx],
                                            filters[job.layer_idx], layer,
                                            spec.config.activation);
      auto err = first_mismatch(run.output, want);
      verified = err.empty();
      if (!verified)
        out_error = "layer '" + layer.layer_id + "' (" +
                    std::string(to_string(job.mode)) + "): " + err;
      counters = run.counters;
      cycles = run.cycles;
    } else {
      auto inf = to_float_tensor(inputs[job.layer_idx]);
      auto ff = to_float_tensor(filters[job.layer_idx]);
      auto run = array::run_layer(lowered, inf, ff, spec.config);
      auto want = golden_with_act<Float32>(inf, ff, layer,
                                           spec.config.activation);
      auto err = first_mismatch_f(run.output, want);
      verified = err.empty();
      if (!verified)
        out_error = "layer '" + layer.layer_id + "' (" +
                    std::string(to_string(job.mode)) + "): " + err;
      counters = run.counters;
      cycles = run.cycles;
    }
    out_metrics = metrics::finalize(layer.layer_id, job.mode, layer.model_role,
                                    cycles, counters, spec.energy);
    out_metrics.verified = verified;
  };

  const int workers = std::max(1, spec.threads);
  if (workers == 1 || jobs.size() <= 1) {
    for (std::size_t j = 0; j < jobs.size(); ++j)
      run_job(jobs[j], results[j], errors[j]);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::atomic<bool> failed{false};
    std::string fail_msg;
    std::mutex fail_mu;
    for (int t = 0; t < workers; ++t) {
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t j = next.fetch_add(1);
          if (j >= jobs.size()) return;
          try {
            run_job(jobs[j], results[j], errors[j]);
          } catch (const std::exception& e) {
            std::scoped_lock lk(fail_mu);
            failed = true;
            if (fail_msg.empty()) fail_msg = e.what();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failed) throw SimFault(fail_msg);
  }

  for (SimMode mode : spec.modes) res.per_mode[mode] = {};
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    res.per_mode[jobs[j].mode].push_back(results[j]);
    if (!errors[j].empty()) {
      res.all_verified = false;
      res.verify_errors.push_back(errors[j]);
    }
  }
  const bool both = res.per_mode.count(SimMode::Ganax) &&
                    res.per_mode.count(SimMode::BaselineDense);
  if (both)
    res.comparison = metrics::compare_runs(res.per_mode[SimMode::Ganax],
                                           res.per_mode[SimMode::BaselineDense]);
  return res;
}

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json counters_json(const metrics::Counters& c) {
  ordered_json j;
  j["macs_executed"] = c.macs_executed;
  j["macs_consequential"] = c.macs_consequential;
  j["macs_skipped"] = c.macs_skipped;
  j["chain_hops"] = c.chain_hops;
  j["act_ops"] = c.act_ops;
  j["alu_ops"] = c.alu_ops;
  j["pool_ops"] = c.pool_ops;
  j["repeat_ops"] = c.repeat_ops;
  j["ld_ops"] = c.ld_ops;
  j["nop_ops"] = c.nop_ops;
  j["addresses_generated"] = c.addresses_generated;
  j["rf_reads"] = c.rf_reads;
  j["rf_writes"] = c.rf_writes;
  j["local_buffer_accesses"] = c.local_buffer_accesses;
  j["weight_store_reads"] = c.weight_store_reads;
  j["global_buffer_reads"] = c.global_buffer_reads;
  j["global_buffer_writes"] = c.global_buffer_writes;
  j["dram_bytes"] = c.dram_bytes;
  j["uop_fetch_global"] = c.uop_fetch_global;
  j["uop_fetch_local"] = c.uop_fetch_local;
  j["busy_pe_cycles"] = c.busy_pe_cycles;
  j["idle_pe_cycles"] = c.idle_pe_cycles;
  j["stall_pe_cycles"] = c.stall_pe_cycles;
  j["issue_stalls"] = c.issue_stalls;
  return j;
}

ordered_json metrics_json(const metrics::RunMetrics& m, double clock_hz) {
  ordered_json j;
  j["layer_id"] = m.layer_id;
  j["mode"] = to_string(m.mode);
  j["role"] = model::to_string(m.role);
  j["cycles"] = m.cycles;
  j["runtime_s"] = static_cast<double>(m.cycles) / clock_hz;
  j["pe_utilization"] = m.pe_utilization;
  j["consequential_utilization"] = m.consequential_utilization;
  j["energy"] = m.energy;
  j["energy_by_unit"] = m.energy_by_unit;
  j["verified"] = m.verified;
  j["counters"] = counters_json(m.counters);
  return j;
}

}  // namespace

std::string report_json(const WorkloadRunResult& r) {
  ordered_json j;
  j["workload"] = r.workload.name;
  j["provenance"] = r.workload.provenance;
  j["seed"] = r.spec.seed;
  j["elem"] = r.spec.elem == ElemMode::Fixed ? "fixed" : "float";
  j["chained"] = r.spec.chained;
  j["energy_table_version"] = r.spec.energy.version;
  j["clock_hz"] = r.spec.config.clock_hz;
  j["all_verified"] = r.all_verified;
  j["verify_errors"] = r.verify_errors;
  j["modes"] = ordered_json::object();
  for (const auto& [mode, layers] : r.per_mode) {
    ordered_json arr = ordered_json::array();
    for (const auto& m : layers)
      arr.push_back(metrics_json(m, r.spec.config.clock_hz));
    j["modes"][to_string(mode)] = arr;
  }
  if (r.comparison) {
    const auto& c = *r.comparison;
    ordered_json cj;
    cj["overall_speedup"] = c.overall_speedup;
    cj["overall_energy_reduction"] = c.overall_energy_reduction;
    ordered_json layers = ordered_json::array();
    for (const auto& lc : c.layers) {
      ordered_json lj;
      lj["layer_id"] = lc.layer_id;
      lj["role"] = model::to_string(lc.role);
      lj["speedup"] = lc.speedup;
      lj["energy_reduction"] = lc.energy_reduction;
      lj["ganax_cycles"] = lc.ganax_cycles;
      lj["baseline_cycles"] = lc.baseline_cycles;
      lj["ganax_utilization"] = lc.ganax_utilization;
      lj["baseline_utilization"] = lc.baseline_utilization;
      layers.push_back(lj);
    }
    cj["layers"] = layers;
    ordered_json roles = ordered_json::object();
    for (const auto& [name, agg] : c.by_role) {
      ordered_json rj;
      rj["speedup"] = agg.speedup;
      rj["energy_reduction"] = agg.energy_reduction;
      rj["ganax_cycles"] = agg.ganax_cycles;
      rj["baseline_cycles"] = agg.baseline_cycles;
      roles[name] = rj;
    }
    cj["by_role"] = roles;
    j["comparison"] = cj;
  }
  return j.dump(2) + "\n";
}

std::string report_csv(const WorkloadRunResult& r) {
  std::ostringstream os;
  os << "workload,layer_id,mode,role,cycles,macs_executed,macs_consequential,"
        "macs_skipped,pe_utilization,consequential_utilization,energy,"
        "verified\n";
  for (const auto& [mode, layers] : r.per_mode) {
    for (const auto& m : layers) {
      os << r.workload.name << ',' << m.layer_id << ',' << to_string(mode)
         << ',' << model::to_string(m.role) << ',' << m.cycles << ','
         << m.counters.macs_executed << ',' << m.counters.macs_consequential
         << ',' << m.counters.macs_skipped << ',' << m.pe_utilization << ','
         << m.consequential_utilization << ',' << m.energy << ','
         << (m.verified ? 1 : 0) << '\n';
    }
  }
  return os.str();
}

std::string summary_text(const WorkloadRunResult& r) {
  std::ostringstream os;
  os << "workload " << r.workload.name << " seed " << r.spec.seed
     << (r.all_verified ? " [verified]" : " [VERIFICATION FAILED]") << "\n";
  for (const auto& [mode, layers] : r.per_mode) {
    os << "  mode " << to_string(mode) << ":\n";
    for (const auto& m : layers) {
      os << "    " << m.layer_id << ": cycles " << m.cycles << ", util "
         << m.pe_utilization << ", energy " << m.energy
         << (m.verified ? "" : " [mismatch]") << "\n";
    }
  }
  if (r.comparison) {
    os << "  speedup " << r.comparison->overall_speedup
       << "x, energy reduction " << r.comparison->overall_energy_reduction
       << "x\n";
    for (const auto& lc : r.comparison->layers)
      os << "    " << lc.layer_id << ": speedup " << lc.speedup
         << "x, energy " << lc.energy_reduction << "x\n";
  }
  return os.str();
}

ArrayConfig parse_array_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what());
  }
  ArrayConfig c;
  c.num_pvs = j.value("num_pvs", c.num_pvs);
  c.pes_per_pv = j.value("pes_per_pv", c.pes_per_pv);
  c.clock_hz = j.value("clock_hz", c.clock_hz);
  c.global_uop_entries = j.value("global_uop_entries", c.global_uop_entries);
  c.local_uop_entries = j.value("local_uop_entries", c.local_uop_entries);
  c.addr_fifo_capacity = j.value("addr_fifo_capacity", c.addr_fifo_capacity);
  c.uop_fifo_capacity = j.value("uop_fifo_capacity", c.uop_fifo_capacity);
  c.access_queue_capacity =
      j.value("access_queue_capacity", c.access_queue_capacity);
  c.input_spad_bytes = j.value("input_spad_bytes", c.input_spad_bytes);
  c.weight_spad_bytes = j.value("weight_spad_bytes", c.weight_spad_bytes);
  c.psum_spad_bytes = j.value("psum_spad_bytes", c.psum_spad_bytes);
  c.output_spad_bytes = j.value("output_spad_bytes", c.output_spad_bytes);
  c.global_buffer_bytes = j.value("global_buffer_bytes", c.global_buffer_bytes);
  c.weight_store_bytes = j.value("weight_store_bytes", c.weight_store_bytes);
  c.dram_bytes_per_cycle =
      j.value("dram_bytes_per_cycle", c.dram_bytes_per_cycle);
  c.dram_stall_model = j.value("dram_stall_model", c.dram_stall_model);
  c.deadlock_cycles = j.value("deadlock_cycles", c.deadlock_cycles);
  if (j.contains("activation")) {
    const std::string a = j["activation"].get<std::string>();
    if (a == "identity") c.activation = Activation::Identity;
    else if (a == "relu") c.activation = Activation::Relu;
    else throw UsageError("config: unknown activation '" + a + "'");
  }
  if (c.num_pvs < 1 || c.num_pvs > isa::kNumPvs)
    throw UsageError("config: num_pvs must be in [1, 16]");
  if (c.pes_per_pv < 1) throw UsageError("config: pes_per_pv must be >= 1");
  return c;
}

ArrayConfig load_array_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_array_config(ss.str());
}

}  // namespace ganax::runner
