#pragma once

#include "ganax/config.hpp"
#include "ganax/isa.hpp"
#include "ganax/model.hpp"
#include "ganax/planner.hpp"

namespace ganax::isa {

// One class of output columns sharing a consequential filter-column set.
// Member columns are x0, x0+xstep, ..., spaced by the fine-grain skip step.
struct ColClass {
  std::vector<int> cols;
  int x0 = 0;
  int count = 0;
  int xstep = 1;
};

// One output row computed for one filter, occupying |pattern| adjacent PE
// slots of a PV (one slot per consequential filter row).
struct UnitRef {
  int row = 0;
  int filter = 0;
  int pattern = 0;
};

struct PvWave {
  int pattern = -1;  // -1: this PV carries no work this wave
  std::vector<int> filter_rows;  // resident rows, one per slot of a unit
  std::vector<UnitRef> units;
  int unit_pes = 0;   // PE slots per unit
  int hops = 0;       // horizontal-accumulation hops (== unit_pes)
  int active_pes = 0;
};

struct WaveSpec {
  int batch = 0;  // psums persist across the waves of one batch
  int tile = 0;
  int tile_c0 = 0;
  int tile_cn = 0;
  bool last_tile = false;
  std::size_t word_begin = 0;
  std::size_t word_end = 0;
  std::vector<PvWave> pvs;
  int max_hops = 0;
};

// Everything the array needs to execute one layer in one mode: the uop
// program, the column structure, the wave schedule with per-PV unit
// assignments, and the staging geometry.
struct LoweredLayer {
  model::LayerSpec layer;
  SimMode mode = SimMode::Ganax;
  planner::DataflowPlan plan;
  UopProgram program;
  std::vector<ColClass> classes;
  std::vector<WaveSpec> waves;
  std::vector<int> word_wave;  // wave index per global word
  int mac_cols = 0;            // consequential (x, filter-col) pairs per row
  int wlen = 0;                // weight spad entries per channel
  int tile_channels = 0;
  int num_tiles = 1;
  std::uint64_t expected_macs = 0;  // across all PEs, whole layer
};

// Fixed tiling policy: output channels loop outermost (units are
// (row, filter) pairs), input channels are tiled to the scratchpad
// capacities and accumulated in place, filter rows stay resident per PE.
LoweredLayer lower(const planner::DataflowPlan& plan,
                   const model::LayerSpec& layer, SimMode mode,
                   const ArrayConfig& cfg);

// Column-axis analogue of the row classification.
std::vector<ColClass> column_classes(const model::LayerSpec& layer, SimMode mode);

}  // namespace ganax::isa
