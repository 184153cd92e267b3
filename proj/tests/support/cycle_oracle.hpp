#pragma once

#include <cstdint>

#include "ganax/config.hpp"
#include "ganax/lower.hpp"

namespace ganax::testing {

// Independent count-level model of the array timing contract: generators
// are replayed arithmetically, FIFOs are plain occupancy counters, and the
// same per-cycle phase order (execute, apply access uop, emit addresses,
// dual-kind issue) is stepped without any data, spads or operand values.
// For a given lowered layer it must report exactly the cycle count of the
// state-machine simulator.
std::uint64_t oracle_cycles(const isa::LoweredLayer& low,
                            const ArrayConfig& cfg);

}  // namespace ganax::testing
