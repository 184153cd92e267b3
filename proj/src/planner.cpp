#include "ganax/planner.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>

namespace ganax::planner {

namespace {

// Full residue class over [0, k_h) for output row r, ignoring input bounds.
std::vector<int> unbounded_filter_rows(int r, const model::LayerSpec& l) {
  std::vector<int> rows;
  for (int k = 0; k < l.k_h; ++k)
    if (((r + k - l.padding) % l.stride + l.stride) % l.stride == 0)
      rows.push_back(k);
  return rows;
}

}  // namespace

std::vector<int> consequential_filter_rows(int r, const model::LayerSpec& l) {
  if (l.kind != model::LayerKind::TConv)
    throw UsageError("consequential_filter_rows: layer '" + l.layer_id +
                     "' is not tconv");
  const int oh = model::out_h(l);
  if (r < 0 || r >= oh)
    throw UsageError("consequential_filter_rows: row " + std::to_string(r) +
                     " out of range [0, " + std::to_string(oh) + ")");
  std::vector<int> rows;
  for (int k = 0; k < l.k_h; ++k) {
    const int e = r + k - l.padding;
    if (e < 0) continue;
    if (e % l.stride != 0) continue;
    if (e / l.stride >= l.in_h) continue;
    rows.push_back(k);
  }
  return rows;
}

Classification classify_patterns(const model::LayerSpec& l) {
  Classification out;
  const int oh = model::out_h(l);
  out.row_assignment.assign(oh, -1);

  if (l.kind == model::LayerKind::Conv) {
    // Trivial single pattern: every filter row contributes to every row.
    RowPattern p;
    p.pattern_id = 0;
    p.filter_rows.resize(l.k_h);
    std::iota(p.filter_rows.begin(), p.filter_rows.end(), 0);
    p.accum_cycles = l.k_h;
    p.interior = true;
    out.patterns.push_back(std::move(p));
    std::fill(out.row_assignment.begin(), out.row_assignment.end(), 0);
    return out;
  }

  struct Info {
    std::vector<int> rows_using;
    bool interior = true;
  };
  std::map<std::vector<int>, Info> by_set;
  for (int r = 0; r < oh; ++r) {
    auto set = consequential_filter_rows(r, l);
    if (set.empty()) {
      out.zero_rows.push_back(r);
      continue;
    }
    auto& info = by_set[set];
    info.rows_using.push_back(r);
    if (set != unbounded_filter_rows(r, l)) info.interior = false;
  }

  std::vector<std::pair<std::vector<int>, Info>> ordered(by_set.begin(),
                                                         by_set.end());
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
    if (a.first.front() != b.first.front())
      return a.first.front() < b.first.front();
    if (a.first.size() != b.first.size())
      return a.first.size() < b.first.size();
    return a.first < b.first;
  });

  for (std::size_t i = 0; i < ordered.size(); ++i) {
    RowPattern p;
    p.pattern_id = static_cast<int>(i);
    p.filter_rows = ordered[i].first;
    p.accum_cycles = static_cast<int>(p.filter_rows.size());
    p.interior = ordered[i].second.interior;
    for (int r : ordered[i].second.rows_using) out.row_assignment[r] = p.pattern_id;
    out.patterns.push_back(std::move(p));
  }
  return out;
}

DataflowPlan build_plan(const model::LayerSpec& l, int num_pvs) {
  if (num_pvs < 1) throw UsageError("build_plan: num_pvs must be >= 1");
  model::validate(l);
  DataflowPlan plan;
  plan.layer_id = l.layer_id;
  plan.kind = l.kind;
  plan.num_pvs = num_pvs;
  plan.col_stride = l.kind == model::LayerKind::TConv ? l.stride : 1;

  auto cls = classify_patterns(l);
  plan.patterns = std::move(cls.patterns);
  plan.row_assignment = std::move(cls.row_assignment);
  plan.zero_rows = std::move(cls.zero_rows);

  // Output-row reorganization: rows of equal pattern adjacent, patterns in
  // canonical order, rows ascending within a pattern.
  std::vector<std::vector<int>> rows_of(plan.patterns.size());
  for (int r = 0; r < static_cast<int>(plan.row_assignment.size()); ++r)
    if (plan.row_assignment[r] >= 0) rows_of[plan.row_assignment[r]].push_back(r);
  for (const auto& rows : rows_of)
    plan.group_order.insert(plan.group_order.end(), rows.begin(), rows.end());

  // Filter-row reorganization: each pattern's consequential rows packed.
  for (const auto& p : plan.patterns) plan.filter_order.push_back(p.filter_rows);

  // Round-robin each pattern's rows across the PVs; each PV holds one
  // pattern at a time.
  plan.pv_schedule.assign(num_pvs, {});
  for (const auto& p : plan.patterns) {
    const auto& rows = rows_of[p.pattern_id];
    std::vector<PvBlock> blocks(std::min<std::size_t>(num_pvs, rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto& blk = blocks[i % num_pvs];
      blk.pattern_id = p.pattern_id;
      blk.rows.push_back(rows[i]);
    }
    for (std::size_t pv = 0; pv < blocks.size(); ++pv)
      plan.pv_schedule[pv].push_back(std::move(blocks[pv]));
  }
  return plan;
}

SparsityStats count_inconsequential_macs(const model::LayerSpec& l) {
  if (l.kind != model::LayerKind::TConv)
    throw UsageError("count_inconsequential_macs: layer '" + l.layer_id +
                     "' is not tconv");
  const int oh = model::out_h(l);
  const int ow = model::out_w(l);

  // Rows and columns separate: a MAC at (row k, col j) of the window at
  // output (r, x) is consequential iff both land on nonzero expanded
  // positions, so the count factors into (sum over rows) * (sum over cols).
  model::LayerSpec cols = l;
  std::swap(cols.in_h, cols.in_w);
  std::swap(cols.k_h, cols.k_w);
  std::uint64_t row_sum = 0, col_sum = 0;
  for (int r = 0; r < oh; ++r)
    row_sum += consequential_filter_rows(r, l).size();
  for (int x = 0; x < ow; ++x)
    col_sum += consequential_filter_rows(x, cols).size();

  SparsityStats s;
  s.total_macs = static_cast<std::uint64_t>(oh) * ow * l.k_h * l.k_w * l.in_c *
                 l.out_c;
  s.consequential_macs =
      row_sum * col_sum * static_cast<std::uint64_t>(l.in_c) * l.out_c;
  s.inconsequential_fraction =
      s.total_macs == 0
          ? 0.0
          : 1.0 - static_cast<double>(s.consequential_macs) /
                      static_cast<double>(s.total_macs);
  return s;
}

std::vector<int> accumulation_schedule(const DataflowPlan& plan,
                                       const model::LayerSpec& l,
                                       ScheduleMode mode) {
  std::vector<int> cycles(plan.row_assignment.size(), 0);
  for (std::size_t r = 0; r < plan.row_assignment.size(); ++r) {
    const int pid = plan.row_assignment[r];
    if (pid < 0) continue;
    cycles[r] = mode == ScheduleMode::BaselineDense
                    ? l.k_h
                    : plan.patterns[pid].accum_cycles;
  }
  return cycles;
}

double naive_interior_idle_fraction(const DataflowPlan& plan,
                                    const model::LayerSpec& l) {
  // Steady-state view: the naive schedule cycles through the interior
  // pattern classes, so the idle fraction uses the unweighted class mean of
  // accum cycles (2.5 of 5 for the s=2, k=5 case).
  int classes = 0;
  std::uint64_t cycles = 0;
  for (const auto& p : plan.patterns) {
    if (!p.interior) continue;
    ++classes;
    cycles += p.accum_cycles;
  }
  if (classes == 0) return 0.0;
  const double mean = static_cast<double>(cycles) / classes;
  return (l.k_h - mean) / l.k_h;
}

std::string dump_plan(const DataflowPlan& plan, const model::LayerSpec& l) {
  std::ostringstream os;
  os << "layer " << plan.layer_id << " (" << model::to_string(l.kind)
     << ") out " << model::out_h(l) << "x" << model::out_w(l)
     << " col_stride " << plan.col_stride << "\n";
  os << "patterns (" << plan.patterns.size() << "):\n";
  for (const auto& p : plan.patterns) {
    os << "  p" << p.pattern_id << (p.interior ? " interior" : " boundary")
       << " filter rows {";
    for (std::size_t i = 0; i < p.filter_rows.size(); ++i)
      os << (i ? "," : "") << p.filter_rows[i] + 1;
    os << "} accum " << p.accum_cycles << "\n";
  }
  os << "row order:";
  for (int r : plan.group_order) os << " " << r;
  os << "\n";
  if (!plan.zero_rows.empty()) {
    os << "zero rows:";
    for (int r : plan.zero_rows) os << " " << r;
    os << "\n";
  }
  os << "pv schedule:\n";
  for (std::size_t pv = 0; pv < plan.pv_schedule.size(); ++pv) {
    if (plan.pv_schedule[pv].empty()) continue;
    os << "  pv" << pv << ":";
    for (const auto& blk : plan.pv_schedule[pv]) {
      os << " [p" << blk.pattern_id << ":";
      for (std::size_t i = 0; i < blk.rows.size(); ++i)
        os << (i ? "," : "") << blk.rows[i];
      os << "]";
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace ganax::planner
