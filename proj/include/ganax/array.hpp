#pragma once

#include <cstdint>

#include "ganax/config.hpp"
#include "ganax/lower.hpp"
#include "ganax/metrics.hpp"
#include "ganax/tensor.hpp"

namespace ganax::array {

// Optional per-PE trace hook. Within a PV all PEs see the same addresses
// and opcodes each cycle; the sink receives PV-granular events.
class TraceSink {
 public:
  virtual ~TraceSink() = default;
  virtual void address(std::uint64_t cycle, int pv, int gen,
                       std::uint16_t addr) = 0;
  virtual void op(std::uint64_t cycle, int pv, isa::ExecOp op,
                  bool stalled) = 0;
};

template <typename T>
struct LayerRunT {
  Tensor<T> output;
  metrics::Counters counters;
  std::uint64_t cycles = 0;
};

using LayerRunQ = LayerRunT<std::int16_t>;
using LayerRunF = LayerRunT<float>;

// Executes one lowered layer on the PV/PE array, cycle by cycle:
//   issue <= 1 global word per cycle (uop FIFO backpressure stalls it),
//   apply <= 1 pending access uop per PV (cfg waits for generator
//   quiescence), let every running generator emit into its address FIFO,
//   and tick every PV's execute engine.
// The output tensor matches the golden kernels bit-exactly in fixed-point
// mode. Faults: program/layer mismatch, and deadlock (no forward progress
// for cfg.deadlock_cycles) with a FIFO snapshot in the message.
LayerRunQ run_layer(const isa::LoweredLayer& lowered, const TensorQ& input,
                    const TensorQ& filters, const ArrayConfig& cfg,
                    TraceSink* trace = nullptr);
LayerRunF run_layer(const isa::LoweredLayer& lowered, const TensorF& input,
                    const TensorF& filters, const ArrayConfig& cfg,
                    TraceSink* trace = nullptr);

}  // namespace ganax::array
