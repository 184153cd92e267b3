#include "ganax/isa.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace ganax::isa {

namespace {

// mode-0 payload layout (ours; the source material fixes only the MIMD
// 4-bit-per-PV packing and the 1-bit mode field):
//   bits [3:0]   kind: 0 exec broadcast, 1 access.cfg, 2 access.start,
//                3 access.stop, 4 mimd.ld
//   exec:        bits [7:4] opcode
//   access/ld:   bits [7:4] pv index, bit 8 pv broadcast,
//                bits [12:9] generator index (access only),
//                bits [15:13] cfg register (access.cfg only),
//                bits [31:16] imm (cfg / mimd.ld only)
// All other bits are reserved and must be zero.
constexpr std::uint64_t kKindExec = 0;
constexpr std::uint64_t kKindLd = 4;

std::uint64_t pack_pv(const PvTarget& pv) {
  return (static_cast<std::uint64_t>(pv.idx & 0xf) << 4) |
         (pv.broadcast ? (1ull << 8) : 0);
}

PvTarget unpack_pv(std::uint64_t payload) {
  PvTarget pv;
  pv.idx = static_cast<std::uint8_t>((payload >> 4) & 0xf);
  pv.broadcast = (payload >> 8) & 1;
  return pv;
}

[[noreturn]] void malformed(const std::string& why) {
  throw ParseError("malformed global uop word: " + why);
}

}  // namespace

GlobalUopWord encode(const GlobalUop& uop) {
  GlobalUopWord w;
  if (const auto* m = std::get_if<MimdExe>(&uop)) {
    w.mode = 1;
    for (int i = 0; i < kNumPvs; ++i)
      w.payload |= static_cast<std::uint64_t>(m->idx[i] & 0xf) << (4 * i);
    return w;
  }
  w.mode = 0;
  if (const auto* e = std::get_if<SimdExec>(&uop)) {
    w.payload = kKindExec |
                (static_cast<std::uint64_t>(e->op) << 4);
  } else if (const auto* a = std::get_if<AccessUop>(&uop)) {
    w.payload = static_cast<std::uint64_t>(a->kind) | pack_pv(a->pv) |
                (static_cast<std::uint64_t>(a->gen & 0xf) << 9);
    if (a->kind == AccessKind::Cfg) {
      w.payload |= static_cast<std::uint64_t>(a->reg) << 13;
      w.payload |= static_cast<std::uint64_t>(a->imm) << 16;
    }
  } else {
    const auto& ld = std::get<MimdLd>(uop);
    w.payload = kKindLd | pack_pv(ld.pv) |
                (static_cast<std::uint64_t>(ld.imm) << 16);
  }
  return w;
}

GlobalUop decode(const GlobalUopWord& word) {
  if (word.mode > 1) malformed("mode field must be 0 or 1");
  if (word.mode == 1) {
    MimdExe m;
    for (int i = 0; i < kNumPvs; ++i)
      m.idx[i] = static_cast<std::uint8_t>((word.payload >> (4 * i)) & 0xf);
    return m;
  }
  const std::uint64_t kind = word.payload & 0xf;
  switch (kind) {
    case kKindExec: {
      const std::uint64_t op = (word.payload >> 4) & 0xf;
      if (op >= kNumExecOps) malformed("reserved exec opcode");
      if (word.payload >> 8) malformed("reserved bits set in exec word");
      return SimdExec{static_cast<ExecOp>(op)};
    }
    case 1:
    case 2:
    case 3: {
      AccessUop a;
      a.kind = static_cast<AccessKind>(kind);
      a.pv = unpack_pv(word.payload);
      a.gen = static_cast<std::uint8_t>((word.payload >> 9) & 0xf);
      if (a.kind == AccessKind::Cfg) {
        const std::uint64_t reg = (word.payload >> 13) & 0x7;
        if (reg > 4) malformed("reserved cfg register");
        a.reg = static_cast<CfgReg>(reg);
        a.imm = static_cast<std::uint16_t>((word.payload >> 16) & 0xffff);
        if (word.payload >> 32) malformed("reserved bits set in cfg word");
      } else {
        if (word.payload >> 13) malformed("reserved bits set in access word");
      }
      return a;
    }
    case kKindLd: {
      MimdLd ld;
      ld.pv = unpack_pv(word.payload);
      ld.imm = static_cast<std::uint16_t>((word.payload >> 16) & 0xffff);
      if ((word.payload >> 9) & 0xf) malformed("reserved bits set in ld word");
      if (word.payload >> 32) malformed("reserved bits set in ld word");
      return ld;
    }
    default:
      malformed("reserved kind field");
  }
}

void UopProgram::set_slot_all(int slot, ExecOp op) {
  for (auto& image : local_images) image[slot] = op;
}

bool UopProgram::local_images_identical() const {
  for (int pv = 1; pv < kNumPvs; ++pv)
    if (local_images[pv] != local_images[0]) return false;
  return true;
}

int UopProgram::max_local_slots_used() const {
  int used = 0;
  for (const auto& image : local_images) {
    int n = 0;
    for (const auto& s : image) n += s.has_value();
    used = std::max(used, n);
  }
  return used;
}

UopProgram make_program_with_canonical_image() {
  UopProgram p;
  for (int op = 0; op < kNumExecOps; ++op)
    p.set_slot_all(op, static_cast<ExecOp>(op));
  return p;
}

void validate_program(const UopProgram& p) {
  for (std::size_t i = 0; i < p.global_stream.size(); ++i) {
    const auto* m = std::get_if<MimdExe>(&p.global_stream[i]);
    if (!m) continue;
    for (int pv = 0; pv < kNumPvs; ++pv) {
      if (!p.local_images[pv][m->idx[pv]].has_value())
        throw UsageError("word " + std::to_string(i) + ": mimd.exe index " +
                         std::to_string(m->idx[pv]) + " of pv" +
                         std::to_string(pv) + " references an empty slot");
    }
  }
}

const char* mnemonic(ExecOp op) {
  switch (op) {
    case ExecOp::Nop: return "nop";
    case ExecOp::Add: return "add";
    case ExecOp::Mul: return "mul";
    case ExecOp::Mac: return "mac";
    case ExecOp::Pool: return "pool";
    case ExecOp::Act: return "act";
    case ExecOp::Repeat: return "repeat";
  }
  return "?";
}

namespace {

const char* reg_name(CfgReg r) {
  switch (r) {
    case CfgReg::Addr: return "%addr";
    case CfgReg::Offset: return "%offset";
    case CfgReg::Step: return "%step";
    case CfgReg::End: return "%end";
    case CfgReg::Repeat: return "%repeat";
  }
  return "?";
}

std::string pv_name(const PvTarget& pv) {
  return pv.broadcast ? "%pv*" : "%pv" + std::to_string(pv.idx);
}

struct Cursor {
  const std::string& line;
  int lineno;
  std::size_t pos = 0;

  void skip_ws() {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
  }
  bool done() {
    skip_ws();
    return pos >= line.size() || line[pos] == '#';
  }
  [[noreturn]] void fail(const std::string& why) {
    throw ParseError(why, lineno, static_cast<int>(pos) + 1);
  }
  std::string token() {
    skip_ws();
    const std::size_t start = pos;
    while (pos < line.size() && line[pos] != ' ' && line[pos] != '\t' &&
           line[pos] != ',' && line[pos] != '#')
      ++pos;
    if (start == pos) fail("expected token");
    return line.substr(start, pos - start);
  }
  void expect_comma() {
    skip_ws();
    if (pos >= line.size() || line[pos] != ',') fail("expected ','");
    ++pos;
  }
};

int parse_uint(Cursor& c, const std::string& tok, int max, const char* what) {
  if (tok.empty()) c.fail(std::string("missing ") + what);
  long v = 0;
  for (char ch : tok) {
    if (ch < '0' || ch > '9') c.fail(std::string("bad ") + what + " '" + tok + "'");
    v = v * 10 + (ch - '0');
    if (v > max) c.fail(std::string(what) + " out of range (max " +
                        std::to_string(max) + ")");
  }
  return static_cast<int>(v);
}

PvTarget parse_pv(Cursor& c) {
  auto tok = c.token();
  if (tok.rfind("%pv", 0) != 0) c.fail("expected %pv operand");
  PvTarget pv;
  if (tok == "%pv*") {
    pv.broadcast = true;
    return pv;
  }
  pv.idx = static_cast<std::uint8_t>(
      parse_uint(c, tok.substr(3), kNumPvs - 1, "pv index"));
  return pv;
}

int parse_gen(Cursor& c) {
  auto tok = c.token();
  if (tok.rfind("%ag", 0) != 0) c.fail("expected %ag operand");
  return parse_uint(c, tok.substr(3), kNumAddrGens - 1, "generator index");
}

CfgReg parse_reg(Cursor& c) {
  auto tok = c.token();
  if (tok == "%addr") return CfgReg::Addr;
  if (tok == "%offset") return CfgReg::Offset;
  if (tok == "%step") return CfgReg::Step;
  if (tok == "%end") return CfgReg::End;
  if (tok == "%repeat") return CfgReg::Repeat;
  c.fail("unknown register '" + tok + "'");
}

std::optional<ExecOp> exec_from_mnemonic(const std::string& m) {
  for (int op = 0; op < kNumExecOps; ++op)
    if (m == mnemonic(static_cast<ExecOp>(op))) return static_cast<ExecOp>(op);
  return std::nullopt;
}

}  // namespace

UopProgram assemble(const std::string& text) {
  UopProgram p;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    Cursor c{line, lineno};
    if (c.done()) continue;
    auto head = c.token();

    if (head == ".slot") {
      auto pv_tok = c.token();
      const int slot = parse_uint(c, c.token(), kLocalSlots - 1, "slot index");
      auto op_tok = c.token();
      auto op = exec_from_mnemonic(op_tok);
      if (!op) c.fail("unknown exec mnemonic '" + op_tok + "'");
      if (pv_tok == "*") {
        p.set_slot_all(slot, *op);
      } else {
        const int pv = parse_uint(c, pv_tok, kNumPvs - 1, "pv index");
        p.local_images[pv][slot] = *op;
      }
      if (!c.done()) c.fail("trailing input");
      continue;
    }

    if (head == "access.cfg" || head == "access.start" || head == "access.stop") {
      AccessUop a;
      a.kind = head == "access.cfg" ? AccessKind::Cfg
               : head == "access.start" ? AccessKind::Start
                                        : AccessKind::Stop;
      a.pv = parse_pv(c);
      c.expect_comma();
      a.gen = static_cast<std::uint8_t>(parse_gen(c));
      if (a.kind == AccessKind::Cfg) {
        c.expect_comma();
        a.reg = parse_reg(c);
        c.expect_comma();
        a.imm = static_cast<std::uint16_t>(
            parse_uint(c, c.token(), 0xffff, "immediate"));
      }
      if (!c.done()) c.fail("trailing input");
      p.global_stream.emplace_back(a);
      continue;
    }

    if (head == "mimd.ld") {
      MimdLd ld;
      ld.pv = parse_pv(c);
      c.expect_comma();
      auto reg = parse_reg(c);
      if (reg != CfgReg::Repeat) c.fail("mimd.ld destination must be %repeat");
      c.expect_comma();
      ld.imm = static_cast<std::uint16_t>(
          parse_uint(c, c.token(), 0xffff, "immediate"));
      if (!c.done()) c.fail("trailing input");
      p.global_stream.emplace_back(ld);
      continue;
    }

    if (head == "mimd.exe") {
      MimdExe m;
      for (int i = 0; i < kNumPvs; ++i) {
        if (i) c.expect_comma();
        m.idx[i] = static_cast<std::uint8_t>(
            parse_uint(c, c.token(), kLocalSlots - 1, "local index"));
      }
      if (!c.done()) c.fail("trailing input");
      p.global_stream.emplace_back(m);
      continue;
    }

    if (auto op = exec_from_mnemonic(head)) {
      if (!c.done()) c.fail("trailing input");
      p.global_stream.emplace_back(SimdExec{*op});
      continue;
    }
    c.fail("unknown mnemonic '" + head + "'");
  }
  validate_program(p);
  return p;
}

std::string disassemble(const UopProgram& p) {
  std::ostringstream os;
  auto emit_image = [&os](const std::array<std::optional<ExecOp>, kLocalSlots>& img,
                          const std::string& pv) {
    for (int s = 0; s < kLocalSlots; ++s)
      if (img[s]) os << ".slot " << pv << " " << s << " " << mnemonic(*img[s]) << "\n";
  };
  if (p.local_images_identical()) {
    emit_image(p.local_images[0], "*");
  } else {
    for (int pv = 0; pv < kNumPvs; ++pv)
      emit_image(p.local_images[pv], std::to_string(pv));
  }
  for (const auto& u : p.global_stream) {
    if (const auto* e = std::get_if<SimdExec>(&u)) {
      os << mnemonic(e->op) << "\n";
    } else if (const auto* a = std::get_if<AccessUop>(&u)) {
      switch (a->kind) {
        case AccessKind::Cfg:
          os << "access.cfg " << pv_name(a->pv) << ", %ag" << int(a->gen) << ", "
             << reg_name(a->reg) << ", " << a->imm << "\n";
          break;
        case AccessKind::Start:
          os << "access.start " << pv_name(a->pv) << ", %ag" << int(a->gen) << "\n";
          break;
        case AccessKind::Stop:
          os << "access.stop " << pv_name(a->pv) << ", %ag" << int(a->gen) << "\n";
          break;
      }
    } else if (const auto* ld = std::get_if<MimdLd>(&u)) {
      os << "mimd.ld " << pv_name(ld->pv) << ", %repeat, " << ld->imm << "\n";
    } else {
      const auto& m = std::get<MimdExe>(u);
      os << "mimd.exe ";
      for (int i = 0; i < kNumPvs; ++i) os << (i ? "," : "") << int(m.idx[i]);
      os << "\n";
    }
  }
  return os.str();
}

namespace {

constexpr char kImageMagic[4] = {'G', 'U', 'O', 'P'};
constexpr std::uint16_t kImageVersion = 1;
constexpr std::uint8_t kEmptySlot = 0xff;
constexpr int kWordBytes = 9;

void put_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(v & 0xff);
  b.push_back(v >> 8);
}

void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back((v >> (8 * i)) & 0xff);
}

[[noreturn]] void image_error(std::size_t offset, const std::string& why) {
  throw ParseError("program image offset " + std::to_string(offset) + ": " + why);
}

}  // namespace

std::vector<std::uint8_t> to_image(const UopProgram& p) {
  std::vector<std::uint8_t> b;
  b.insert(b.end(), kImageMagic, kImageMagic + 4);
  put_u16(b, kImageVersion);
  put_u16(b, kNumPvs);
  put_u32(b, static_cast<std::uint32_t>(p.global_stream.size()));
  for (const auto& image : p.local_images)
    for (const auto& slot : image)
      b.push_back(slot ? static_cast<std::uint8_t>(*slot) : kEmptySlot);
  const std::size_t padded =
      static_cast<std::size_t>(p.pages()) * kGlobalPageWords;
  for (std::size_t i = 0; i < padded; ++i) {
    GlobalUopWord w;  // pad words are all-zero (SIMD nop broadcast)
    if (i < p.global_stream.size()) w = encode(p.global_stream[i]);
    b.push_back(w.mode);
    for (int byte = 0; byte < 8; ++byte)
      b.push_back((w.payload >> (8 * byte)) & 0xff);
  }
  return b;
}

UopProgram from_image(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kImageMagic, 4) != 0)
    image_error(0, "bad magic");
  const std::uint16_t version = bytes[4] | (bytes[5] << 8);
  if (version != kImageVersion) image_error(4, "unsupported version");
  const std::uint16_t pvs = bytes[6] | (bytes[7] << 8);
  if (pvs != kNumPvs) image_error(6, "unexpected pv count");
  std::size_t off = 8;
  if (bytes.size() < off + 4) image_error(off, "truncated header");
  std::uint32_t words = 0;
  for (int i = 0; i < 4; ++i) words |= std::uint32_t(bytes[off + i]) << (8 * i);
  off += 4;

  UopProgram p;
  for (int pv = 0; pv < kNumPvs; ++pv)
    for (int s = 0; s < kLocalSlots; ++s) {
      if (off >= bytes.size()) image_error(off, "truncated local image table");
      const std::uint8_t v = bytes[off++];
      if (v == kEmptySlot) continue;
      if (v >= kNumExecOps) image_error(off - 1, "reserved local opcode");
      p.local_images[pv][s] = static_cast<ExecOp>(v);
    }

  const std::size_t pages = (words + kGlobalPageWords - 1) / kGlobalPageWords;
  const std::size_t expect = off + pages * kGlobalPageWords * kWordBytes;
  if (bytes.size() != expect)
    image_error(bytes.size(), "image size does not match page-aligned stream");
  for (std::uint32_t i = 0; i < words; ++i) {
    GlobalUopWord w;
    w.mode = bytes[off];
    if (w.mode > 1) image_error(off, "bad mode bit");
    for (int byte = 0; byte < 8; ++byte)
      w.payload |= std::uint64_t(bytes[off + 1 + byte]) << (8 * byte);
    try {
      p.global_stream.push_back(decode(w));
    } catch (const ParseError& e) {
      image_error(off, e.what());
    }
    off += kWordBytes;
  }
  validate_program(p);
  return p;
}

void store_program(const UopProgram& p, const std::string& path) {
  auto bytes = to_image(p);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write program image: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

UopProgram load_program(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open program image: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return from_image(bytes);
}

}  // namespace ganax::isa
