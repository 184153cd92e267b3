#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ganax/model.hpp"

namespace ganax::planner {

// One class of output rows: the set of filter rows that contribute to every
// row in the class. Interior rows of a TConv layer fall into exactly
// min(stride, k_h) such classes; rows truncated by the borders form extra
// classes of their own.
struct RowPattern {
  int pattern_id = 0;
  std::vector<int> filter_rows;  // ascending, 0-indexed
  int accum_cycles = 0;          // == filter_rows.size()
  bool interior = false;
};

struct SparsityStats {
  std::uint64_t total_macs = 0;
  std::uint64_t consequential_macs = 0;
  double inconsequential_fraction = 0.0;
};

struct PvBlock {
  std::vector<int> rows;
  int pattern_id = 0;
};

struct DataflowPlan {
  std::string layer_id;
  model::LayerKind kind = model::LayerKind::Conv;
  std::vector<RowPattern> patterns;           // canonical order
  std::vector<int> row_assignment;            // per output row; -1 = zero row
  std::vector<int> group_order;               // reorganized output-row order
  std::vector<std::vector<int>> filter_order; // per pattern, packed ascending
  std::vector<std::vector<PvBlock>> pv_schedule;  // [pv] -> blocks
  std::vector<int> zero_rows;                 // rows with no contribution
  int col_stride = 1;                         // fine-grain column skip step
  int num_pvs = 0;
};

// Filter rows landing on nonzero expanded-input rows for output row r:
// { k in [0, k_h) : (r + k - p) mod s == 0 and 0 <= (r + k - p)/s < in_h }.
std::vector<int> consequential_filter_rows(int r, const model::LayerSpec& l);

struct Classification {
  std::vector<RowPattern> patterns;
  std::vector<int> row_assignment;  // -1 for rows with empty filter sets
  std::vector<int> zero_rows;
};

// Groups output rows by their exact filter-row set. Canonical pattern order:
// ascending by (first filter-row index, cardinality).
Classification classify_patterns(const model::LayerSpec& l);

DataflowPlan build_plan(const model::LayerSpec& l, int num_pvs);

// Dense vs consequential MAC counts over the expanded input. Exact, by
// separable row/column enumeration.
SparsityStats count_inconsequential_macs(const model::LayerSpec& l);

enum class ScheduleMode { Ganax, BaselineDense };

// Per output row, horizontal-accumulation cycle count: |filter_rows| in
// Ganax mode, k_h in baseline mode. Zero rows cost 0.
std::vector<int> accumulation_schedule(const DataflowPlan& plan,
                                       const model::LayerSpec& l,
                                       ScheduleMode mode);

// Idle fraction of the naive (unreorganized) interior schedule:
// (k_h - mean interior accum cycles) / k_h. The reorganized plan schedules
// no idle interior node by construction.
double naive_interior_idle_fraction(const DataflowPlan& plan,
                                    const model::LayerSpec& l);

// Text artifact for golden tests and `explain`. Filter rows are displayed
// 1-indexed.
std::string dump_plan(const DataflowPlan& plan, const model::LayerSpec& l);

}  // namespace ganax::planner
