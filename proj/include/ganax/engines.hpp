#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "ganax/errors.hpp"
#include "ganax/isa.hpp"

namespace ganax::engines {

// The five configuration registers that govern one strided generator.
struct AddressGenConfig {
  std::uint16_t addr = 0;
  std::uint16_t offset = 0;
  std::uint16_t step = 1;
  std::uint16_t end = 1;
  std::uint16_t repeat = 0;
};

// One strided micro-index generator. Emits offset + cur, then advances cur
// by step with a single-subtraction modulo wrap at end; each wrap decrements
// the remaining replay count, and the generator stops at zero. Stop
// preserves cur/remaining; Start resumes. A fresh pass needs addr/repeat to
// be rewritten (writing addr reloads cur, writing repeat reloads remaining).
class AddressGen {
 public:
  void write(isa::CfgReg reg, std::uint16_t value);
  void start();  // validates the configuration; throws SimFault if unusable
  void stop();

  bool can_emit() const { return started_ && !manual_stop_ && remaining_ > 0; }
  bool exhausted() const { return remaining_ == 0; }
  bool active() const { return can_emit(); }

  // Precondition: can_emit(). Returns offset + cur, always in
  // [offset, offset + end).
  std::uint16_t emit();

  const AddressGenConfig& config() const { return cfg_; }
  std::uint32_t cur() const { return cur_; }
  std::uint32_t remaining() const { return remaining_; }

 private:
  AddressGenConfig cfg_;
  std::uint32_t cur_ = 0;
  std::uint32_t remaining_ = 0;
  bool started_ = false;
  bool manual_stop_ = false;
};

template <typename T>
class BoundedFifo {
 public:
  explicit BoundedFifo(std::size_t capacity = 4) : capacity_(capacity) {}

  bool full() const { return q_.size() >= capacity_; }
  bool empty() const { return q_.empty(); }
  std::size_t size() const { return q_.size(); }
  std::size_t capacity() const { return capacity_; }

  void push(T v) {
    if (full()) throw SimFault("fifo overflow");
    q_.push_back(std::move(v));
  }
  T pop() {
    if (empty()) throw SimFault("fifo underflow");
    T v = std::move(q_.front());
    q_.pop_front();
    return v;
  }
  const T& front() const { return q_.front(); }

 private:
  std::size_t capacity_;
  std::deque<T> q_;
};

// Generator roles within one access engine.
inline constexpr int kGenInput = 0;
inline constexpr int kGenWeight = 1;
inline constexpr int kGenOutput = 2;
inline constexpr int kDefaultGens = 3;

// Per-PE access micro-engine: strided generators, one address FIFO each.
// Applies cfg/start/stop immediately; tick() lets every running generator
// with FIFO space emit one address.
class AccessEngine {
 public:
  explicit AccessEngine(int num_gens = kDefaultGens, std::size_t fifo_capacity = 4);

  void apply(const isa::AccessUop& op);  // unknown generator -> SimFault
  int tick();                            // returns number of addresses emitted

  AddressGen& gen(int i);
  const AddressGen& gen(int i) const;
  BoundedFifo<std::uint16_t>& fifo(int i);
  const BoundedFifo<std::uint16_t>& fifo(int i) const;
  int num_gens() const { return static_cast<int>(gens_.size()); }
  bool quiescent() const;  // no generator can emit, all FIFOs drained

  std::uint64_t addresses_emitted = 0;

 private:
  std::vector<AddressGen> gens_;
  std::vector<BoundedFifo<std::uint16_t>> fifos_;
};

// Execute-side data access, provided by whoever owns the operand storage
// (the array's PE spads, or a flat buffer in unit tests).
class DataPort {
 public:
  virtual ~DataPort() = default;
  // psum[dest] += in[a] * w[b]; first marks the first MAC of a repeat block.
  virtual void mac(std::uint16_t a, std::uint16_t b, std::uint16_t dest,
                   bool first) = 0;
  virtual void alu(isa::ExecOp op, std::uint16_t a, std::uint16_t b,
                   std::uint16_t dest) = 0;
  virtual void act(std::uint16_t src, std::uint16_t dest) = 0;
  // Running window comparison; first resets the window state.
  virtual void pool(std::uint16_t src, std::uint16_t dest, bool first) = 0;
  // Horizontal partial-sum hop (array-level accumulation); no addresses.
  virtual void chain_hop() {}
};

// One entry of the micro-op FIFO. set_repeat carries a mimd.ld immediate;
// chain marks an add dispatched as a partial-sum chain hop.
struct ExecToken {
  isa::ExecOp op = isa::ExecOp::Nop;
  bool set_repeat = false;
  bool chain = false;
  std::uint16_t imm = 0;
  std::uint32_t tag = 0;  // opaque to the engine (the array stores wave ids)
};

enum class ExecStatus { Idle, Busy, Stall };

struct ExecResult {
  ExecStatus status = ExecStatus::Idle;
  isa::ExecOp op = isa::ExecOp::Nop;  // valid when Busy
  bool completed = false;             // active op finished this cycle
  bool was_set_repeat = false;
  std::uint32_t tag = 0;
};

// Per-PE execute micro-engine: consumes one micro-op per cycle from the
// micro-op FIFO, pulling operand addresses from the access engine's FIFOs.
// A repeat micro-op makes the next fetched micro-op execute repeat_reg times
// without re-fetching. Halts when the FIFO is empty.
class ExecEngine {
 public:
  explicit ExecEngine(std::size_t uop_fifo_capacity = 8)
      : fifo_(uop_fifo_capacity) {}

  BoundedFifo<ExecToken>& fifo() { return fifo_; }
  const BoundedFifo<ExecToken>& fifo() const { return fifo_; }

  bool halted() const { return fifo_.empty() && !active_; }
  std::uint16_t repeat_reg() const { return repeat_reg_; }
  void write_repeat(std::uint16_t v) { repeat_reg_ = v; }

  // Tag of whatever will execute next: the active op, else the FIFO head.
  std::optional<std::uint32_t> next_tag() const {
    if (active_) return active_->tag;
    if (!fifo_.empty()) return fifo_.front().tag;
    return std::nullopt;
  }

  ExecResult tick(AccessEngine& access, DataPort& port);

  std::uint64_t stall_cycles = 0;
  std::uint64_t ops_executed = 0;

 private:
  BoundedFifo<ExecToken> fifo_;
  std::uint16_t repeat_reg_ = 0;
  std::uint32_t pending_repeat_ = 0;
  std::optional<ExecToken> active_;
  std::uint32_t reps_left_ = 0;
  bool first_iter_ = true;
  std::uint16_t block_dest_ = 0;
};

}  // namespace ganax::engines
