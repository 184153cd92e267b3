#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ganax/errors.hpp"

namespace ganax::isa {

inline constexpr int kNumPvs = 16;
inline constexpr int kLocalSlots = 16;
inline constexpr int kGlobalPageWords = 32;
inline constexpr int kNumAddrGens = 16;  // encodable; engines use fewer

// Execute micro-ops carry no operand fields: operand addresses come from the
// access engine's generators. nop is the MIMD filler for processing vectors
// whose phase is shorter than their neighbours'.
enum class ExecOp : std::uint8_t {
  Nop = 0,
  Add = 1,
  Mul = 2,
  Mac = 3,
  Pool = 4,
  Act = 5,
  Repeat = 6,
};
inline constexpr int kNumExecOps = 7;

enum class AccessKind : std::uint8_t { Cfg = 1, Start = 2, Stop = 3 };

enum class CfgReg : std::uint8_t { Addr = 0, Offset = 1, Step = 2, End = 3, Repeat = 4 };

// Target of a PV-scoped micro-op: one PV, or all of them ("%pv*").
struct PvTarget {
  bool broadcast = false;
  std::uint8_t idx = 0;

  bool operator==(const PvTarget&) const = default;
};

struct SimdExec {
  ExecOp op = ExecOp::Nop;
  bool operator==(const SimdExec&) const = default;
};

struct AccessUop {
  AccessKind kind = AccessKind::Cfg;
  PvTarget pv;
  std::uint8_t gen = 0;           // strided generator index
  CfgReg reg = CfgReg::Addr;      // Cfg only
  std::uint16_t imm = 0;          // Cfg only
  bool operator==(const AccessUop&) const = default;
};

// Loads a 16-bit immediate into the repeat register of every PE in a PV.
struct MimdLd {
  PvTarget pv;
  std::uint16_t imm = 0;
  bool operator==(const MimdLd&) const = default;
};

// Per-PV local-buffer indices, four bits each.
struct MimdExe {
  std::array<std::uint8_t, kNumPvs> idx{};
  bool operator==(const MimdExe&) const = default;
};

using GlobalUop = std::variant<SimdExec, AccessUop, MimdLd, MimdExe>;

inline bool is_mimd(const GlobalUop& u) {
  return std::holds_alternative<MimdExe>(u);
}

// Stored word: 64 payload bits plus the 1-bit SIMD/MIMD mode field.
struct GlobalUopWord {
  std::uint8_t mode = 0;      // 1 = MIMD-SIMD (mimd.exe)
  std::uint64_t payload = 0;
  bool operator==(const GlobalUopWord&) const = default;
};

GlobalUopWord encode(const GlobalUop& uop);
GlobalUop decode(const GlobalUopWord& word);  // throws ParseError on reserved bits

// A full program: the global stream (chunked into 32-entry pages when
// stored) plus the per-PV local micro-op tables, preloaded once per run.
struct UopProgram {
  std::vector<GlobalUop> global_stream;
  std::array<std::array<std::optional<ExecOp>, kLocalSlots>, kNumPvs> local_images{};

  void set_slot_all(int slot, ExecOp op);
  int pages() const {
    return static_cast<int>((global_stream.size() + kGlobalPageWords - 1) /
                            kGlobalPageWords);
  }
  bool local_images_identical() const;
  int max_local_slots_used() const;
  bool operator==(const UopProgram&) const = default;
};

// The canonical local image used by lowered programs: slot i holds opcode i.
UopProgram make_program_with_canonical_image();

// Every MIMD index must resolve to a populated slot of its PV.
void validate_program(const UopProgram& p);

const char* mnemonic(ExecOp op);

// Textual `.guop` form. One micro-op per line, `%`-prefixed operands,
// `#` comments, `.slot <pv|*> <idx> <mnemonic>` directives for the local
// images. assemble(disassemble(p)) == p for canonical programs.
UopProgram assemble(const std::string& text);
std::string disassemble(const UopProgram& p);

// Binary image: magic + version header, 16x16 local-image table, then the
// global stream padded to page-aligned 32-word pages (9 bytes per word).
std::vector<std::uint8_t> to_image(const UopProgram& p);
UopProgram from_image(const std::vector<std::uint8_t>& bytes);

void store_program(const UopProgram& p, const std::string& path);
UopProgram load_program(const std::string& path);

}  // namespace ganax::isa
