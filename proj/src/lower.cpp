#include "ganax/lower.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <utility>

#include "ganax/engines.hpp"

namespace ganax::isa {

namespace {

constexpr std::uint8_t kSlotNop = static_cast<std::uint8_t>(ExecOp::Nop);
constexpr std::uint8_t kSlotAdd = static_cast<std::uint8_t>(ExecOp::Add);
constexpr std::uint8_t kSlotMac = static_cast<std::uint8_t>(ExecOp::Mac);
constexpr std::uint8_t kSlotAct = static_cast<std::uint8_t>(ExecOp::Act);
constexpr std::uint8_t kSlotRepeat = static_cast<std::uint8_t>(ExecOp::Repeat);

struct Emitter {
  UopProgram& program;
  bool use_mimd;  // >= 2 concurrent patterns: exec words go through mimd.exe

  // Last value written per (generator, register) and the last repeat-count
  // load: unchanged offset/step/end writes are elided. addr and repeat are
  // always rewritten since they reload the live cur/remaining state.
  std::map<std::pair<int, int>, int> written;
  int last_ld = -1;

  void access_cfg(int gen, CfgReg reg, int imm) {
    if (imm < 0 || imm > 0xffff)
      throw UsageError("lowering: immediate " + std::to_string(imm) +
                       " exceeds 16 bits");
    if (reg == CfgReg::Offset || reg == CfgReg::Step || reg == CfgReg::End) {
      auto key = std::make_pair(gen, static_cast<int>(reg));
      auto it = written.find(key);
      if (it != written.end() && it->second == imm) return;
      written[key] = imm;
    }
    AccessUop a;
    a.kind = AccessKind::Cfg;
    a.pv.broadcast = true;
    a.gen = static_cast<std::uint8_t>(gen);
    a.reg = reg;
    a.imm = static_cast<std::uint16_t>(imm);
    program.global_stream.emplace_back(a);
  }

  void access_start(int gen) {
    AccessUop a;
    a.kind = AccessKind::Start;
    a.pv.broadcast = true;
    a.gen = static_cast<std::uint8_t>(gen);
    program.global_stream.emplace_back(a);
  }

  void cfg_run(int gen, int addr, int offset, int step, int end, int repeat) {
    access_cfg(gen, CfgReg::Addr, addr);
    access_cfg(gen, CfgReg::Offset, offset);
    access_cfg(gen, CfgReg::Step, step);
    access_cfg(gen, CfgReg::End, end);
    access_cfg(gen, CfgReg::Repeat, repeat);
    access_start(gen);
  }

  void load_repeat(int imm) {
    if (imm < 0 || imm > 0xffff)
      throw UsageError("lowering: repeat count exceeds 16 bits");
    if (imm == last_ld) return;  // repeat register persists across uops
    last_ld = imm;
    MimdLd ld;
    ld.pv.broadcast = true;
    ld.imm = static_cast<std::uint16_t>(imm);
    program.global_stream.emplace_back(ld);
  }

  void exec_all(std::uint8_t slot) {
    if (use_mimd) {
      MimdExe m;
      m.idx.fill(slot);
      program.global_stream.emplace_back(m);
    } else {
      program.global_stream.emplace_back(SimdExec{static_cast<ExecOp>(slot)});
    }
  }

  void exec_per_pv(const std::vector<std::uint8_t>& slots) {
    MimdExe m;
    for (std::size_t pv = 0; pv < slots.size() && pv < m.idx.size(); ++pv)
      m.idx[pv] = slots[pv];
    program.global_stream.emplace_back(m);
  }
};

}  // namespace

std::vector<ColClass> column_classes(const model::LayerSpec& layer,
                                     SimMode mode) {
  std::vector<ColClass> classes;
  const int ow = model::out_w(layer);
  if (layer.kind == model::LayerKind::Conv || mode == SimMode::BaselineDense) {
    ColClass c;
    c.cols.resize(layer.k_w);
    std::iota(c.cols.begin(), c.cols.end(), 0);
    c.x0 = 0;
    c.count = ow;
    c.xstep = 1;
    classes.push_back(std::move(c));
    return classes;
  }

  // Column-axis view of the layer: reuse the row classification machinery.
  // A class's columns sit stride apart, and the set only changes at run
  // boundaries, so the adjacency merge below recovers each class.
  model::LayerSpec t = layer;
  std::swap(t.in_h, t.in_w);
  std::swap(t.k_h, t.k_w);
  for (int x = 0; x < ow; ++x) {
    auto cols = planner::consequential_filter_rows(x, t);
    if (cols.empty()) continue;  // zero column, never scheduled
    bool merged = false;
    for (auto& c : classes) {
      if (c.cols == cols && x == c.x0 + c.xstep * c.count) {
        ++c.count;
        merged = true;
        break;
      }
    }
    if (merged) continue;
    ColClass c;
    c.cols = std::move(cols);
    c.x0 = x;
    c.count = 1;
    c.xstep = layer.stride;
    classes.push_back(std::move(c));
  }
  std::sort(classes.begin(), classes.end(),
            [](const ColClass& a, const ColClass& b) { return a.x0 < b.x0; });
  return classes;
}

LoweredLayer lower(const planner::DataflowPlan& plan,
                   const model::LayerSpec& layer, SimMode mode,
                   const ArrayConfig& cfg) {
  if (plan.layer_id != layer.layer_id)
    throw UsageError("lower: plan does not belong to layer '" + layer.layer_id +
                     "'");
  LoweredLayer out;
  out.layer = layer;
  out.mode = mode;
  out.plan = plan;
  out.program = make_program_with_canonical_image();
  out.classes = column_classes(layer, mode);

  const int ow = model::out_w(layer);
  const int oh = model::out_h(layer);
  if (ow > cfg.psum_spad_entries() || ow > cfg.output_spad_entries())
    throw UsageError("layer '" + layer.layer_id +
                     "': output row exceeds psum/output scratchpad");

  out.mac_cols = 0;
  out.wlen = 0;
  for (const auto& c : out.classes) {
    out.mac_cols += c.count * static_cast<int>(c.cols.size());
    out.wlen += static_cast<int>(c.cols.size());
  }

  // Input-channel tile width bounded by the input and weight scratchpads.
  int ct = layer.in_c;
  if (out.mac_cols > 0)
    ct = std::min(ct, cfg.input_spad_entries() / out.mac_cols);
  if (out.wlen > 0) ct = std::min(ct, cfg.weight_spad_entries() / out.wlen);
  if (ct < 1)
    throw UsageError("layer '" + layer.layer_id +
                     "': one input channel does not fit the scratchpads");
  out.tile_channels = ct;
  out.num_tiles = (layer.in_c + ct - 1) / ct;

  // The dense baseline runs every output row against all k_h filter rows;
  // the reorganized flow runs each pattern's rows against its packed
  // consequential rows only.
  struct Group {
    int pattern;
    std::vector<int> filter_rows;
    std::vector<int> rows;
  };
  std::vector<Group> groups;
  if (layer.kind == model::LayerKind::TConv && mode == SimMode::BaselineDense) {
    Group g;
    g.pattern = 0;
    g.filter_rows.resize(layer.k_h);
    std::iota(g.filter_rows.begin(), g.filter_rows.end(), 0);
    g.rows.resize(oh);
    std::iota(g.rows.begin(), g.rows.end(), 0);
    groups.push_back(std::move(g));
  } else {
    for (const auto& p : plan.patterns) {
      Group g;
      g.pattern = p.pattern_id;
      g.filter_rows = p.filter_rows;
      for (int r = 0; r < oh; ++r)
        if (plan.row_assignment[r] == p.pattern_id) g.rows.push_back(r);
      if (!g.rows.empty()) groups.push_back(std::move(g));
    }
  }

  const bool use_mimd = layer.kind == model::LayerKind::TConv &&
                        mode == SimMode::Ganax && groups.size() >= 2;

  // Pack (row, filter) units into PV waves: floor(pes_per_pv / m) units of
  // one pattern per PV, blocks dealt round-robin across PVs.
  std::vector<PvWave> blocks;
  for (const auto& g : groups) {
    const int m = static_cast<int>(g.filter_rows.size());
    if (m > cfg.pes_per_pv)
      throw UsageError("layer '" + layer.layer_id +
                       "': filter rows exceed PEs per PV");
    const int cap = cfg.pes_per_pv / m;
    PvWave cur;
    cur.pattern = g.pattern;
    cur.filter_rows = g.filter_rows;
    cur.unit_pes = m;
    cur.hops = m;
    for (int f = 0; f < layer.out_c; ++f) {
      for (int r : g.rows) {
        cur.units.push_back({r, f, g.pattern});
        if (static_cast<int>(cur.units.size()) == cap) {
          cur.active_pes = cap * m;
          blocks.push_back(cur);
          cur.units.clear();
        }
      }
    }
    if (!cur.units.empty()) {
      cur.active_pes = static_cast<int>(cur.units.size()) * m;
      blocks.push_back(cur);
    }
  }

  const int num_batches =
      static_cast<int>((blocks.size() + cfg.num_pvs - 1) / cfg.num_pvs);

  Emitter e{out.program, use_mimd};
  for (int b = 0; b < num_batches; ++b) {
    std::vector<PvWave> pvs(cfg.num_pvs);
    int max_hops = 0;
    for (int pv = 0; pv < cfg.num_pvs; ++pv) {
      const std::size_t bi = static_cast<std::size_t>(b) * cfg.num_pvs + pv;
      if (bi < blocks.size()) {
        pvs[pv] = blocks[bi];
        max_hops = std::max(max_hops, pvs[pv].hops);
      }
    }

    for (int t = 0; t < out.num_tiles; ++t) {
      WaveSpec w;
      w.batch = b;
      w.tile = t;
      w.tile_c0 = t * ct;
      w.tile_cn = std::min(layer.in_c - w.tile_c0, ct);
      w.last_tile = t == out.num_tiles - 1;
      w.pvs = pvs;
      w.max_hops = max_hops;
      w.word_begin = out.program.global_stream.size();

      const int cn = w.tile_cn;
      // Input stream: the whole wave's consumption order, sequential.
      e.cfg_run(engines::kGenInput, 0, 0, 1, out.mac_cols * cn, 1);

      int wbase = 0;
      for (const auto& c : out.classes) {
        const int m = static_cast<int>(c.cols.size());
        // Weight block for this class cycles once per output column.
        e.cfg_run(engines::kGenWeight, 0, wbase, 1, m * cn, c.count);
        // Psum destinations stride by the fine-grain column skip step.
        e.cfg_run(engines::kGenOutput, c.x0, 0, c.xstep,
                  c.x0 + c.xstep * c.count, 1);
        e.load_repeat(m * cn);
        for (int x = 0; x < c.count; ++x) {
          e.exec_all(kSlotRepeat);
          e.exec_all(kSlotMac);
        }
        wbase += m * cn;
      }

      if (w.last_tile) {
        // Horizontal accumulation: one hop per consequential filter row;
        // PVs with shorter chains pad with nop.
        for (int h = 0; h < max_hops; ++h) {
          if (use_mimd) {
            std::vector<std::uint8_t> slots(cfg.num_pvs, kSlotNop);
            for (int pv = 0; pv < cfg.num_pvs; ++pv)
              if (pvs[pv].pattern >= 0 && h < pvs[pv].hops)
                slots[pv] = kSlotAdd;
            e.exec_per_pv(slots);
          } else {
            e.exec_all(kSlotAdd);
          }
        }
        // Writeback: activation over the full output row.
        e.cfg_run(engines::kGenInput, 0, 0, 1, ow, 1);
        e.cfg_run(engines::kGenOutput, 0, 0, 1, ow, 1);
        e.load_repeat(ow);
        e.exec_all(kSlotRepeat);
        e.exec_all(kSlotAct);
      }

      w.word_end = out.program.global_stream.size();
      out.waves.push_back(std::move(w));
    }
  }

  out.word_wave.assign(out.program.global_stream.size(), -1);
  for (std::size_t wi = 0; wi < out.waves.size(); ++wi)
    for (std::size_t k = out.waves[wi].word_begin; k < out.waves[wi].word_end;
         ++k)
      out.word_wave[k] = static_cast<int>(wi);

  // Total MACs the array will execute: per wave, per active PE, every
  // consequential (x, col, channel) triple.
  for (const auto& w : out.waves) {
    const std::uint64_t per_pe =
        static_cast<std::uint64_t>(out.mac_cols) * w.tile_cn;
    for (const auto& pv : w.pvs) out.expected_macs += per_pe * pv.active_pes;
  }

  validate_program(out.program);
  return out;
}

}  // namespace ganax::isa
