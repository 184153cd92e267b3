#include "ganax/engines.hpp"

namespace ganax::engines {

void AddressGen::write(isa::CfgReg reg, std::uint16_t value) {
  switch (reg) {
    case isa::CfgReg::Addr:
      cfg_.addr = value;
      cur_ = value;
      break;
    case isa::CfgReg::Offset:
      cfg_.offset = value;
      break;
    case isa::CfgReg::Step:
      cfg_.step = value;
      break;
    case isa::CfgReg::End:
      cfg_.end = value;
      break;
    case isa::CfgReg::Repeat:
      cfg_.repeat = value;
      remaining_ = value;
      break;
  }
}

void AddressGen::start() {
  if (cfg_.end == 0) throw SimFault("addrgen start: end must be > 0");
  if (cfg_.step == 0) throw SimFault("addrgen start: step must be >= 1");
  if (cfg_.step > cfg_.end)
    throw SimFault("addrgen start: step exceeds end (wrap undefined)");
  if (cfg_.addr >= cfg_.end)
    throw SimFault("addrgen start: addr must lie in [0, end)");
  if (static_cast<std::uint32_t>(cfg_.offset) + cfg_.end > 0x10000u)
    throw SimFault("addrgen start: offset + end overflows 16 bits");
  started_ = true;
  manual_stop_ = false;
}

void AddressGen::stop() { manual_stop_ = true; }

std::uint16_t AddressGen::emit() {
  if (!can_emit()) throw SimFault("addrgen emit while stopped");
  const std::uint32_t out = cfg_.offset + cur_;
  const std::uint32_t next = cur_ + cfg_.step;
  if (next < cfg_.end) {
    cur_ = next;
  } else {
    cur_ = next - cfg_.end;  // modulo wrap; Decrement asserted
    --remaining_;            // Stop asserts when this reaches zero
  }
  return static_cast<std::uint16_t>(out);
}

AccessEngine::AccessEngine(int num_gens, std::size_t fifo_capacity)
    : gens_(num_gens) {
  fifos_.reserve(num_gens);
  for (int i = 0; i < num_gens; ++i) fifos_.emplace_back(fifo_capacity);
}

AddressGen& AccessEngine::gen(int i) {
  if (i < 0 || i >= num_gens())
    throw SimFault("access engine: unknown generator index " + std::to_string(i));
  return gens_[i];
}

const AddressGen& AccessEngine::gen(int i) const {
  return const_cast<AccessEngine*>(this)->gen(i);
}

BoundedFifo<std::uint16_t>& AccessEngine::fifo(int i) {
  if (i < 0 || i >= num_gens())
    throw SimFault("access engine: unknown generator index " + std::to_string(i));
  return fifos_[i];
}

const BoundedFifo<std::uint16_t>& AccessEngine::fifo(int i) const {
  return const_cast<AccessEngine*>(this)->fifo(i);
}

void AccessEngine::apply(const isa::AccessUop& op) {
  auto& g = gen(op.gen);
  switch (op.kind) {
    case isa::AccessKind::Cfg:
      g.write(op.reg, op.imm);
      break;
    case isa::AccessKind::Start:
      g.start();
      break;
    case isa::AccessKind::Stop:
      g.stop();
      break;
  }
}

int AccessEngine::tick() {
  int emitted = 0;
  for (int i = 0; i < num_gens(); ++i) {
    if (!gens_[i].can_emit()) continue;
    if (fifos_[i].full()) continue;  // backpressure stalls the generator
    fifos_[i].push(gens_[i].emit());
    ++emitted;
  }
  addresses_emitted += emitted;
  return emitted;
}

bool AccessEngine::quiescent() const {
  for (int i = 0; i < num_gens(); ++i)
    if (gens_[i].can_emit() || !fifos_[i].empty()) return false;
  return true;
}

ExecResult ExecEngine::tick(AccessEngine& access, DataPort& port) {
  using isa::ExecOp;
  ExecResult r;

  if (!active_) {
    if (fifo_.empty()) return r;  // halted: no operation this cycle
    ExecToken tok = fifo_.pop();
    if (tok.set_repeat) {
      repeat_reg_ = tok.imm;
      r.status = ExecStatus::Busy;
      r.op = ExecOp::Nop;
      r.was_set_repeat = true;
      r.tag = tok.tag;
      ++ops_executed;
      return r;
    }
    if (tok.op == ExecOp::Repeat) {
      pending_repeat_ = repeat_reg_;
      r.status = ExecStatus::Busy;
      r.op = ExecOp::Repeat;
      r.tag = tok.tag;
      ++ops_executed;
      return r;
    }
    active_ = tok;
    reps_left_ = pending_repeat_ > 0 ? pending_repeat_ : 1;
    pending_repeat_ = 0;
    first_iter_ = true;
  }

  const ExecToken& tok = *active_;
  r.op = tok.op;
  r.tag = tok.tag;

  auto have = [&access](int g) { return !access.fifo(g).empty(); };
  auto take = [&access](int g) { return access.fifo(g).pop(); };

  switch (tok.op) {
    case ExecOp::Nop:
      break;
    case ExecOp::Add:
    case ExecOp::Mul:
      if (tok.chain) break;  // psum chain hop: link-fed, no address FIFOs
      if (!have(kGenInput) || !have(kGenWeight) || !have(kGenOutput)) {
        ++stall_cycles;
        r.status = ExecStatus::Stall;
        return r;
      }
      break;
    case ExecOp::Mac:
    case ExecOp::Pool: {
      const bool need_dest = first_iter_;
      if (!have(kGenInput) || (tok.op == ExecOp::Mac && !have(kGenWeight)) ||
          (need_dest && !have(kGenOutput))) {
        ++stall_cycles;
        r.status = ExecStatus::Stall;
        return r;
      }
      break;
    }
    case ExecOp::Act:
      if (!have(kGenInput) || !have(kGenOutput)) {
        ++stall_cycles;
        r.status = ExecStatus::Stall;
        return r;
      }
      break;
    case ExecOp::Repeat:
      throw SimFault("repeat cannot be an active op");
  }

  switch (tok.op) {
    case ExecOp::Nop:
      break;
    case ExecOp::Add:
    case ExecOp::Mul:
      if (tok.chain) {
        port.chain_hop();
      } else {
        const auto a = take(kGenInput);
        const auto b = take(kGenWeight);
        const auto d = take(kGenOutput);
        port.alu(tok.op, a, b, d);
      }
      break;
    case ExecOp::Mac: {
      const auto a = take(kGenInput);
      const auto b = take(kGenWeight);
      if (first_iter_) block_dest_ = take(kGenOutput);
      port.mac(a, b, block_dest_, first_iter_);
      break;
    }
    case ExecOp::Pool: {
      const auto a = take(kGenInput);
      if (first_iter_) block_dest_ = take(kGenOutput);
      port.pool(a, block_dest_, first_iter_);
      break;
    }
    case ExecOp::Act: {
      const auto a = take(kGenInput);
      const auto d = take(kGenOutput);
      port.act(a, d);
      break;
    }
    case ExecOp::Repeat:
      break;
  }

  ++ops_executed;
  first_iter_ = false;
  if (--reps_left_ == 0) {
    active_.reset();
    r.completed = true;
  }
  r.status = ExecStatus::Busy;
  return r;
}

}  // namespace ganax::engines
