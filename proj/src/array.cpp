#include "ganax/array.hpp"

#include <deque>
#include <sstream>

#include "ganax/engines.hpp"
#include "ganax/fixed.hpp"

namespace ganax::array {

namespace {

using engines::AccessEngine;
using engines::ExecEngine;
using engines::ExecStatus;
using engines::ExecToken;
using isa::ExecOp;
using isa::LoweredLayer;
using isa::PvWave;
using isa::WaveSpec;

// Per-PV machine: all PEs of a PV run in lockstep (same uops, same
// addresses), so one engine pair carries the timing and the spads carry the
// per-PE data lanes.
template <typename Num>
struct PvMachine : engines::DataPort {
  using Value = typename Num::value_type;
  using Accum = typename Num::accum_type;

  PvMachine(const ArrayConfig& cfg, int pv_idx)
      : access(engines::kDefaultGens, cfg.addr_fifo_capacity),
        exec(cfg.uop_fifo_capacity),
        pv(pv_idx),
        pes(cfg.pes_per_pv) {}

  AccessEngine access;
  ExecEngine exec;
  std::deque<isa::AccessUop> access_queue;
  int pv = 0;
  int pes = 0;

  int staged_wave = -1;
  const WaveSpec* wave = nullptr;  // staged wave
  int hops_done = 0;

  // Data lanes, one per PE slot.
  std::vector<std::vector<Value>> in_spad, w_spad, out_spad;
  std::vector<std::vector<std::uint8_t>> in_flag;
  std::vector<std::vector<Accum>> psum;

  // Wired up by run_layer before ticking.
  const LoweredLayer* low = nullptr;
  const Tensor<Value>* input = nullptr;
  const Tensor<Value>* filters = nullptr;
  Tensor<Value>* output = nullptr;
  metrics::Counters* counters = nullptr;
  Activation activation = Activation::Identity;
  std::uint64_t mac_conseq_this_tick = 0;

  const PvWave& pv_wave() const { return wave->pvs[pv]; }
  int active_pes() const { return wave ? pv_wave().active_pes : 0; }

  Value apply_act(Accum acc) const {
    Value v = Num::narrow(acc);
    if (activation == Activation::Relu) v = Num::relu(v);
    return v;
  }

  void mac(std::uint16_t a, std::uint16_t b, std::uint16_t dest,
           bool /*first*/) override {
    const auto& pw = pv_wave();
    mac_conseq_this_tick = 0;
    for (int pe = 0; pe < pw.active_pes; ++pe) {
      psum[pe][dest] =
          Num::add(psum[pe][dest], Num::mul(in_spad[pe][a], w_spad[pe][b]));
      mac_conseq_this_tick += in_flag[pe][a];
    }
  }

  void alu(ExecOp op, std::uint16_t a, std::uint16_t b,
           std::uint16_t dest) override {
    // Only mul is dispatched as a scalar ALU op by the array (add arrives
    // as a chain hop); keep both defined.
    for (int pe = 0; pe < pv_wave().active_pes; ++pe) {
      const Accum r = op == ExecOp::Mul
                          ? Num::mul(in_spad[pe][a], w_spad[pe][b])
                          : Num::add(static_cast<Accum>(in_spad[pe][a]),
                                     static_cast<Accum>(w_spad[pe][b]));
      out_spad[pe][dest] = Num::narrow(r);
    }
  }

  void act(std::uint16_t src, std::uint16_t dest) override {
    const auto& pw = pv_wave();
    for (int pe = 0; pe < pw.active_pes; ++pe)
      out_spad[pe][dest] = apply_act(psum[pe][src]);
    // Heads of complete units hold the accumulated row: collect them.
    const int m = pw.unit_pes;
    for (std::size_t u = 0; u < pw.units.size(); ++u) {
      const auto& unit = pw.units[u];
      output->at(unit.filter, unit.row, dest) = out_spad[u * m][dest];
      ++counters->global_buffer_writes;
    }
  }

  void pool(std::uint16_t src, std::uint16_t dest, bool first) override {
    for (int pe = 0; pe < pv_wave().active_pes; ++pe) {
      if (first || in_spad[pe][src] > out_spad[pe][dest])
        out_spad[pe][dest] = in_spad[pe][src];
    }
  }

  void chain_hop() override {
    const auto& pw = pv_wave();
    ++hops_done;
    if (pw.active_pes == 0) return;
    const int ow = static_cast<int>(psum[0].size());
    counters->rf_reads += static_cast<std::uint64_t>(pw.units.size()) * ow;
    counters->rf_writes += static_cast<std::uint64_t>(pw.units.size()) * ow;
    if (hops_done == pw.hops) {
      // Final hop: each unit's head slot now holds the horizontal sum.
      const int m = pw.unit_pes;
      for (std::size_t u = 0; u < pw.units.size(); ++u) {
        const int base = static_cast<int>(u) * m;
        for (int x = 0; x < ow; ++x) {
          Accum total = psum[base][x];
          for (int e = 1; e < m; ++e)
            total = Num::add(total, psum[base + e][x]);
          psum[base][x] = total;
        }
      }
    }
  }
};

template <typename Num>
struct Staged {
  typename Num::value_type value{};
  bool consequential = false;
};

// Value and provenance of the element a PE reads for (row r, filter row j,
// output col x, filter col l, channel ch), per mode.
template <typename Num>
Staged<Num> fetch_element(const LoweredLayer& low,
                          const Tensor<typename Num::value_type>& input, int ch,
                          int r, int j, int x, int l) {
  const auto& L = low.layer;
  Staged<Num> s;
  if (L.kind == model::LayerKind::Conv) {
    const int iy = r * L.stride + j - L.padding;
    const int ix = x * L.stride + l - L.padding;
    if (iy >= 0 && iy < L.in_h && ix >= 0 && ix < L.in_w) {
      s.value = input.at(ch, iy, ix);
      s.consequential = true;
    }
    return s;
  }
  const int ey = r + j;
  const int ex = x + l;
  const int ry = ey - L.padding;
  const int rx = ex - L.padding;
  if (ry >= 0 && rx >= 0 && ry % L.stride == 0 && rx % L.stride == 0 &&
      ry / L.stride < L.in_h && rx / L.stride < L.in_w) {
    s.value = input.at(ch, ry / L.stride, rx / L.stride);
    s.consequential = true;
  }
  return s;
}

template <typename Num>
void stage_wave(PvMachine<Num>& m, const WaveSpec& w) {
  const auto& low = *m.low;
  const auto& pw = w.pvs[m.pv];
  const int ow = model::out_w(low.layer);
  const int in_len = low.mac_cols * w.tile_cn;
  const int w_len = low.wlen * w.tile_cn;

  auto size_lane = [&](auto& lanes, int n, auto zero) {
    lanes.resize(m.pes);
    for (auto& lane : lanes) lane.assign(n, zero);
  };
  size_lane(m.in_spad, in_len, typename Num::value_type{});
  size_lane(m.w_spad, w_len, typename Num::value_type{});
  size_lane(m.out_spad, ow, typename Num::value_type{});
  m.in_flag.resize(m.pes);
  for (auto& lane : m.in_flag) lane.assign(in_len, 0);
  if (w.tile == 0) {
    size_lane(m.psum, ow, typename Num::accum_type{});
  } else if (m.psum.empty() || static_cast<int>(m.psum[0].size()) != ow) {
    throw SimFault("psum scratchpad lost between tiles");
  }
  m.hops_done = 0;

  const int mslots = pw.unit_pes;
  for (int slot = 0; slot < pw.active_pes; ++slot) {
    const auto& unit = pw.units[slot / mslots];
    const int j = pw.filter_rows[slot % mslots];
    int idx = 0;
    for (const auto& c : low.classes) {
      for (int xi = 0; xi < c.count; ++xi) {
        const int x = c.x0 + c.xstep * xi;
        for (int l : c.cols) {
          for (int ch = w.tile_c0; ch < w.tile_c0 + w.tile_cn; ++ch) {
            auto s = fetch_element<Num>(low, *m.input, ch, unit.row, j, x, l);
            m.in_spad[slot][idx] = s.value;
            m.in_flag[slot][idx] = s.consequential;
            ++idx;
          }
        }
      }
    }
    int widx = 0;
    for (const auto& c : low.classes)
      for (int l : c.cols)
        for (int ch = w.tile_c0; ch < w.tile_c0 + w.tile_cn; ++ch)
          m.w_spad[slot][widx++] = m.filters->at4(unit.filter, ch, j, l);

    m.counters->global_buffer_reads += idx;
    m.counters->weight_store_reads += widx;
    m.counters->local_buffer_accesses += idx + widx;
    m.counters->rf_writes += idx + widx;
  }
}

std::string fifo_snapshot(const std::vector<std::string>& lines) {
  std::ostringstream os;
  for (const auto& l : lines) os << "\n  " << l;
  return os.str();
}

template <typename Num>
LayerRunT<typename Num::value_type> run_layer_impl(
    const LoweredLayer& low, const Tensor<typename Num::value_type>& input,
    const Tensor<typename Num::value_type>& filters, const ArrayConfig& cfg,
    TraceSink* trace) {
  const auto& L = low.layer;
  if (input.dims() != std::vector<int>{L.in_c, L.in_h, L.in_w})
    throw SimFault("run_layer: input dims do not match program for layer '" +
                   L.layer_id + "'");
  if (filters.dims() != std::vector<int>{L.out_c, L.in_c, L.k_h, L.k_w})
    throw SimFault("run_layer: filter dims do not match program for layer '" +
                   L.layer_id + "'");
  for (const auto& w : low.waves)
    if (static_cast<int>(w.pvs.size()) != cfg.num_pvs)
      throw SimFault("run_layer: program lowered for a different PV count");
  if (low.program.pages() > 0 && cfg.global_uop_entries != isa::kGlobalPageWords)
    throw SimFault("run_layer: global uop page size mismatch");

  LayerRunT<typename Num::value_type> run;
  run.output = Tensor<typename Num::value_type>(
      {L.out_c, model::out_h(L), model::out_w(L)});
  metrics::Counters& ctr = run.counters;

  std::vector<PvMachine<Num>> pvs;
  pvs.reserve(cfg.num_pvs);
  for (int i = 0; i < cfg.num_pvs; ++i) pvs.emplace_back(cfg, i);
  for (auto& m : pvs) {
    m.low = &low;
    m.input = &input;
    m.filters = &filters;
    m.output = &run.output;
    m.counters = &ctr;
    m.activation = cfg.activation;
  }

  const auto& stream = low.program.global_stream;
  std::size_t pc = 0;
  std::uint64_t cycle = 0;
  std::uint64_t last_progress = 0;

  auto done = [&] {
    if (pc < stream.size()) return false;
    for (const auto& m : pvs)
      if (!m.exec.halted() || !m.access_queue.empty()) return false;
    return true;
  };

  const int total_pes = cfg.num_pvs * cfg.pes_per_pv;

  while (!done()) {
    bool progress = false;

    // Phase A: execute. Stage the next wave's operands when a PV is about
    // to enter it (all prior-wave uops have drained by FIFO order).
    for (auto& m : pvs) {
      if (auto tag = m.exec.next_tag()) {
        const int wv = static_cast<int>(*tag);
        if (wv != m.staged_wave) {
          m.staged_wave = wv;
          m.wave = &low.waves[wv];
          stage_wave<Num>(m, *m.wave);
          progress = true;
        }
      }
      m.mac_conseq_this_tick = 0;
      auto r = m.exec.tick(m.access, m);
      const int active = m.active_pes();
      const int masked = cfg.pes_per_pv - active;
      switch (r.status) {
        case ExecStatus::Idle:
          ctr.idle_pe_cycles += cfg.pes_per_pv;
          break;
        case ExecStatus::Stall:
          ctr.stall_pe_cycles += active;
          ctr.idle_pe_cycles += masked;
          break;
        case ExecStatus::Busy: {
          progress = true;
          if (trace) trace->op(cycle, m.pv, r.op, false);
          if (r.op == ExecOp::Nop && !r.was_set_repeat) {
            ctr.idle_pe_cycles += cfg.pes_per_pv;  // filler slot
            ++ctr.nop_ops;
            break;
          }
          ctr.busy_pe_cycles += active;
          ctr.idle_pe_cycles += masked;
          if (r.was_set_repeat) {
            ctr.ld_ops += active;
            break;
          }
          switch (r.op) {
            case ExecOp::Mac:
              ctr.macs_executed += active;
              ctr.macs_consequential += m.mac_conseq_this_tick;
              break;
            case ExecOp::Add:
              ctr.chain_hops += active;
              break;
            case ExecOp::Mul:
              ctr.alu_ops += active;
              break;
            case ExecOp::Pool:
              ctr.pool_ops += active;
              break;
            case ExecOp::Act:
              ctr.act_ops += active;
              ctr.rf_reads += active;
              ctr.rf_writes += active;
              break;
            case ExecOp::Repeat:
              ctr.repeat_ops += active;
              break;
            case ExecOp::Nop:
              break;
          }
          if (r.op == ExecOp::Mac) {
            ctr.rf_reads += static_cast<std::uint64_t>(active) * 3;
            ctr.rf_writes += active;
          }
          break;
        }
      }
    }

    // Phase B: apply at most one pending access uop per PV; cfg writes wait
    // until the target generator has gone quiet.
    for (auto& m : pvs) {
      if (m.access_queue.empty()) continue;
      const auto& op = m.access_queue.front();
      if (op.kind == isa::AccessKind::Cfg && m.access.gen(op.gen).can_emit())
        continue;  // reconfiguring a live generator would corrupt its pass
      m.access.apply(op);
      m.access_queue.pop_front();
      progress = true;
    }

    // Phase C: strided generators emit one address each into their FIFOs.
    for (auto& m : pvs) {
      if (trace) {
        for (int g = 0; g < m.access.num_gens(); ++g) {
          const auto& gen = m.access.gen(g);
          if (gen.can_emit() && !m.access.fifo(g).full())
            trace->address(cycle, m.pv, g,
                           static_cast<std::uint16_t>(
                               gen.config().offset + gen.cur()));
        }
      }
      if (m.access.tick() > 0) progress = true;
    }

    // Phase D: issue global words. Access-side and exec-side uop streams
    // are segregated, so one word of each kind may issue per cycle as long
    // as the head of the stream goes first (strict program order per side).
    int issued_access = 0, issued_exec = 0;
    while (pc < stream.size()) {
      const auto& word = stream[pc];
      const bool is_access = std::holds_alternative<isa::AccessUop>(word);
      if ((is_access ? issued_access : issued_exec) > 0) break;
      const int wave = low.word_wave[pc];
      bool ok = true;
      if (const auto* a = std::get_if<isa::AccessUop>(&word)) {
        for (auto& m : pvs) {
          if (!a->pv.broadcast && m.pv != a->pv.idx) continue;
          if (m.access_queue.size() >=
              static_cast<std::size_t>(cfg.access_queue_capacity)) {
            ok = false;
            break;
          }
        }
        if (ok) {
          for (auto& m : pvs) {
            if (!a->pv.broadcast && m.pv != a->pv.idx) continue;
            m.access_queue.push_back(*a);
          }
        }
      } else {
        // Exec-side word: build the per-PV tokens.
        std::vector<ExecToken> toks(cfg.num_pvs);
        std::vector<bool> targeted(cfg.num_pvs, true);
        if (const auto* e = std::get_if<isa::SimdExec>(&word)) {
          for (auto& t : toks) {
            t.op = e->op;
            t.chain = e->op == ExecOp::Add;
            t.tag = static_cast<std::uint32_t>(wave);
          }
        } else if (const auto* ld = std::get_if<isa::MimdLd>(&word)) {
          for (int pv = 0; pv < cfg.num_pvs; ++pv) {
            targeted[pv] = ld->pv.broadcast || pv == ld->pv.idx;
            toks[pv] = {ExecOp::Nop, true, false, ld->imm,
                        static_cast<std::uint32_t>(wave)};
          }
        } else {
          const auto& mi = std::get<isa::MimdExe>(word);
          for (int pv = 0; pv < cfg.num_pvs; ++pv) {
            const auto slot = mi.idx[pv];
            const auto& img = low.program.local_images[pv][slot];
            if (!img)
              throw SimFault("mimd.exe references empty local slot " +
                             std::to_string(slot) + " of pv" +
                             std::to_string(pv));
            toks[pv].op = *img;
            toks[pv].chain = *img == ExecOp::Add;
            toks[pv].tag = static_cast<std::uint32_t>(wave);
          }
        }
        for (int pv = 0; pv < cfg.num_pvs && ok; ++pv)
          if (targeted[pv] && pvs[pv].exec.fifo().full()) ok = false;
        if (ok) {
          for (int pv = 0; pv < cfg.num_pvs; ++pv)
            if (targeted[pv]) pvs[pv].exec.fifo().push(toks[pv]);
          if (std::holds_alternative<isa::MimdExe>(word))
            ctr.uop_fetch_local += cfg.num_pvs;
        }
      }
      if (!ok) {
        if (issued_access + issued_exec == 0) ++ctr.issue_stalls;
        break;  // head of the stream is blocked
      }
      ++pc;
      ++ctr.uop_fetch_global;
      progress = true;
      (is_access ? issued_access : issued_exec) = 1;
    }

    ++cycle;
    if (progress) last_progress = cycle;
    if (cycle - last_progress >
        static_cast<std::uint64_t>(cfg.deadlock_cycles)) {
      std::vector<std::string> snap;
      snap.push_back("pc=" + std::to_string(pc) + "/" +
                     std::to_string(stream.size()));
      for (const auto& m : pvs) {
        std::ostringstream os;
        os << "pv" << m.pv << ": uop_fifo=" << m.exec.fifo().size()
           << " access_queue=" << m.access_queue.size() << " addr_fifos=";
        for (int g = 0; g < m.access.num_gens(); ++g)
          os << (g ? "," : "") << m.access.fifo(g).size();
        snap.push_back(os.str());
      }
      throw SimFault("deadlock: no forward progress for " +
                     std::to_string(cfg.deadlock_cycles) + " cycles" +
                     fifo_snapshot(snap));
    }
  }

  run.cycles = cycle;

  // Dense-equivalent MAC census for the skip counter.
  const std::uint64_t dense =
      static_cast<std::uint64_t>(model::out_h(L)) * model::out_w(L) * L.k_h *
      L.k_w * L.in_c * L.out_c;
  ctr.macs_skipped = dense > ctr.macs_executed ? dense - ctr.macs_executed : 0;

  // DRAM bulk traffic: tensors in and out, once per layer. The optional
  // stall model serializes the transfer against compute; the array sits
  // idle for those cycles.
  ctr.dram_bytes =
      2 * (input.size() + filters.size() + run.output.size());
  if (cfg.dram_stall_model && cfg.dram_bytes_per_cycle > 0) {
    const auto transfer = static_cast<std::uint64_t>(
        (static_cast<double>(ctr.dram_bytes) + cfg.dram_bytes_per_cycle - 1) /
        cfg.dram_bytes_per_cycle);
    run.cycles += transfer;
    ctr.idle_pe_cycles += transfer * static_cast<std::uint64_t>(total_pes);
  }

  for (const auto& m : pvs) ctr.addresses_generated += m.access.addresses_emitted;

  const std::uint64_t pe_cycles = ctr.busy_pe_cycles + ctr.idle_pe_cycles +
                                  ctr.stall_pe_cycles;
  if (pe_cycles != run.cycles * static_cast<std::uint64_t>(total_pes))
    throw SimFault("internal: PE-cycle accounting identity violated");

  return run;
}

}  // namespace

LayerRunQ run_layer(const LoweredLayer& lowered, const TensorQ& input,
                    const TensorQ& filters, const ArrayConfig& cfg,
                    TraceSink* trace) {
  return run_layer_impl<FixedQ88>(lowered, input, filters, cfg, trace);
}

LayerRunF run_layer(const LoweredLayer& lowered, const TensorF& input,
                    const TensorF& filters, const ArrayConfig& cfg,
                    TraceSink* trace) {
  return run_layer_impl<Float32>(lowered, input, filters, cfg, trace);
}

}  // namespace ganax::array
