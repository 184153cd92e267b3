#include "ganax/tensor.hpp"

#include <cstring>
#include <fstream>

namespace ganax {

namespace {

constexpr char kMagic[4] = {'G', 'T', 'N', 'S'};
constexpr std::uint16_t kVersion = 1;

void put_u16(std::ostream& os, std::uint16_t v) {
  char b[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
  os.write(b, 2);
}

void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 4);
}

std::uint16_t get_u16(std::istream& is) {
  unsigned char b[2];
  is.read(reinterpret_cast<char*>(b), 2);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

template <typename T>
void store_impl(const Tensor<T>& t, const std::string& path, std::uint8_t kind) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write tensor file: " + path);
  out.write(kMagic, 4);
  put_u16(out, kVersion);
  out.put(static_cast<char>(kind));
  out.put(static_cast<char>(t.dims().size()));
  for (int d : t.dims()) put_u32(out, static_cast<std::uint32_t>(d));
  for (const T& v : t.data()) {
    if constexpr (sizeof(T) == 2) {
      put_u16(out, static_cast<std::uint16_t>(v));
    } else {
      std::uint32_t bits;
      std::memcpy(&bits, &v, 4);
      put_u32(out, bits);
    }
  }
}

template <typename T>
Tensor<T> load_impl(const std::string& path, std::uint8_t want_kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open tensor file: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw ParseError("bad tensor magic in " + path);
  if (get_u16(in) != kVersion) throw ParseError("unsupported tensor version");
  int kind = in.get();
  int rank = in.get();
  if (kind != want_kind)
    throw UsageError("tensor element type mismatch in " + path);
  if (rank < 1 || rank > 8) throw ParseError("bad tensor rank");
  std::vector<int> dims(rank);
  for (int& d : dims) d = static_cast<int>(get_u32(in));
  Tensor<T> t(dims);
  for (T& v : t.data()) {
    if constexpr (sizeof(T) == 2) {
      v = static_cast<T>(get_u16(in));
    } else {
      std::uint32_t bits = get_u32(in);
      std::memcpy(&v, &bits, 4);
    }
  }
  if (!in) throw ParseError("truncated tensor payload in " + path);
  return t;
}

}  // namespace

void store_tensor(const TensorQ& t, const std::string& path) {
  store_impl(t, path, 0);
}

void store_tensor(const TensorF& t, const std::string& path) {
  store_impl(t, path, 1);
}

TensorQ load_tensor_q(const std::string& path) {
  return load_impl<std::int16_t>(path, 0);
}

TensorF load_tensor_f(const std::string& path) {
  return load_impl<float>(path, 1);
}

}  // namespace ganax
