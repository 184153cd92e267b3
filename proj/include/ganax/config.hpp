#pragma once

#include <cstdint>

namespace ganax {

enum class SimMode { Ganax, BaselineDense };

inline const char* to_string(SimMode m) {
  return m == SimMode::Ganax ? "ganax" : "baseline";
}

// Function applied by the act micro-op (and by the golden reference when
// verifying). One setting per run.
enum class Activation { Identity, Relu };

// Array geometry, buffer sizing and timing knobs. Defaults: 16 PVs of 16
// PEs at 500 MHz, 32-entry global / 16-entry local uop buffers.
struct ArrayConfig {
  int num_pvs = 16;
  int pes_per_pv = 16;
  double clock_hz = 500e6;
  int global_uop_entries = 32;
  int local_uop_entries = 16;

  int addr_fifo_capacity = 4;
  int uop_fifo_capacity = 8;
  int access_queue_capacity = 8;

  // Per-PE scratchpads, bytes. Input/weight/output hold 16-bit elements,
  // psum holds 32-bit accumulators.
  int input_spad_bytes = 16384;
  int weight_spad_bytes = 4096;
  int psum_spad_bytes = 8192;
  int output_spad_bytes = 4096;

  // Shared on-chip stores (accounting granularity only; timing is
  // idealized by default).
  std::uint64_t global_buffer_bytes = 108 * 1024;
  std::uint64_t weight_store_bytes = 512 * 1024;

  double dram_bytes_per_cycle = 16.0;
  bool dram_stall_model = false;  // add bulk-transfer cycles between layers

  int deadlock_cycles = 10000;
  Activation activation = Activation::Identity;

  int input_spad_entries() const { return input_spad_bytes / 2; }
  int weight_spad_entries() const { return weight_spad_bytes / 2; }
  int psum_spad_entries() const { return psum_spad_bytes / 4; }
  int output_spad_entries() const { return output_spad_bytes / 2; }
};

}  // namespace ganax
