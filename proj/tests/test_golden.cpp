#include "doctest.h"

#include <cmath>

#include "ganax/golden.hpp"
#include "ganax/rng.hpp"

using namespace ganax;
using namespace ganax::model;
using namespace ganax::golden;

namespace {

LayerSpec make_layer(LayerKind kind, int in, int k, int s, int p, int in_c,
                     int out_c) {
  LayerSpec l;
  l.layer_id = "g";
  l.kind = kind;
  l.in_h = l.in_w = in;
  l.in_c = in_c;
  l.out_c = out_c;
  l.k_h = l.k_w = k;
  l.stride = s;
  l.padding = p;
  return l;
}

// Independent second loop nest: scatter formulation of tconv. Each input
// element stamps the filter into the output at its expanded position. Kept
// deliberately different in structure from golden_tconv's gather loops.
TensorQ scatter_tconv(const TensorQ& input, const TensorQ& filters,
                      const LayerSpec& l) {
  const int oh = out_h(l);
  const int ow = out_w(l);
  std::vector<std::int32_t> acc(static_cast<std::size_t>(l.out_c) * oh * ow, 0);
  for (int f = 0; f < l.out_c; ++f)
    for (int c = 0; c < l.in_c; ++c)
      for (int i = 0; i < l.in_h; ++i)
        for (int j = 0; j < l.in_w; ++j) {
          const int ey = l.padding + l.stride * i;
          const int ex = l.padding + l.stride * j;
          for (int ky = 0; ky < l.k_h; ++ky)
            for (int kx = 0; kx < l.k_w; ++kx) {
              const int y = ey - ky;
              const int x = ex - kx;
              if (y < 0 || y >= oh || x < 0 || x >= ow) continue;
              auto& a = acc[(static_cast<std::size_t>(f) * oh + y) * ow + x];
              a = FixedQ88::add(
                  a, FixedQ88::mul(input.at(c, i, j), filters.at4(f, c, ky, kx)));
            }
        }
  TensorQ out({l.out_c, oh, ow});
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] = FixedQ88::narrow(acc[i]);
  return out;
}

// Second naive conv loop nest with a different loop order (channels outer).
TensorQ conv_reference2(const TensorQ& input, const TensorQ& filters,
                        const LayerSpec& l) {
  const int oh = out_h(l);
  const int ow = out_w(l);
  std::vector<std::int32_t> acc(static_cast<std::size_t>(l.out_c) * oh * ow, 0);
  for (int c = 0; c < l.in_c; ++c)
    for (int ky = 0; ky < l.k_h; ++ky)
      for (int kx = 0; kx < l.k_w; ++kx)
        for (int f = 0; f < l.out_c; ++f)
          for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x) {
              const int iy = y * l.stride + ky - l.padding;
              const int ix = x * l.stride + kx - l.padding;
              if (iy < 0 || iy >= l.in_h || ix < 0 || ix >= l.in_w) continue;
              auto& a = acc[(static_cast<std::size_t>(f) * oh + y) * ow + x];
              a = FixedQ88::add(
                  a, FixedQ88::mul(input.at(c, iy, ix), filters.at4(f, c, ky, kx)));
            }
  TensorQ out({l.out_c, oh, ow});
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] = FixedQ88::narrow(acc[i]);
  return out;
}

}  // namespace

TEST_CASE("expand_input geometry") {
  SUBCASE("4x4 with s=2 p=2 expands to 11x11") {
    auto l = make_layer(LayerKind::TConv, 4, 5, 2, 2, 1, 1);
    auto in = random_tensor_q({1, 4, 4}, 1);
    auto e = expand_input<FixedQ88>(in, l);
    CHECK(e.dim(1) == 11);
    CHECK(e.dim(2) == 11);
  }
  SUBCASE("s=1 p=0 is the identity") {
    auto l = make_layer(LayerKind::TConv, 5, 3, 1, 0, 2, 1);
    auto in = random_tensor_q({2, 5, 5}, 2);
    auto e = expand_input<FixedQ88>(in, l);
    CHECK(e == in);
  }
  SUBCASE("3x3 of ones with s=2 p=1 puts 9 ones at odd coordinates") {
    auto l = make_layer(LayerKind::TConv, 3, 3, 2, 1, 1, 1);
    TensorQ in({1, 3, 3});
    for (auto& v : in.data()) v = 256;
    auto e = expand_input<FixedQ88>(in, l);
    REQUIRE(e.dim(1) == 7);
    REQUIRE(e.dim(2) == 7);
    int ones = 0;
    for (int y = 0; y < 7; ++y)
      for (int x = 0; x < 7; ++x) {
        if (e.at(0, y, x) == 0) continue;
        CHECK(e.at(0, y, x) == 256);
        CHECK(y % 2 == 1);
        CHECK(x % 2 == 1);
        ++ones;
      }
    CHECK(ones == 9);
  }
  SUBCASE("nonzero count equals in_h*in_w") {
    SplitMix64 rng(77);
    for (int it = 0; it < 20; ++it) {
      auto l = make_layer(LayerKind::TConv, rng.range(2, 9), 3,
                          rng.range(1, 4), rng.range(0, 2), 1, 1);
      TensorQ in({1, l.in_h, l.in_w});
      for (auto& v : in.data()) v = static_cast<std::int16_t>(rng.range(1, 200));
      auto e = expand_input<FixedQ88>(in, l);
      int nonzeros = 0;
      for (auto v : e.data()) nonzeros += v != 0;
      CHECK(nonzeros == l.in_h * l.in_w);
    }
  }
  SUBCASE("rejects non-tconv layers") {
    auto l = make_layer(LayerKind::Conv, 4, 3, 1, 0, 1, 1);
    auto in = random_tensor_q({1, 4, 4}, 3);
    CHECK_THROWS_AS(expand_input<FixedQ88>(in, l), UsageError);
  }
}

TEST_CASE("golden_conv basics") {
  SUBCASE("1x1 unit filter is the identity") {
    auto l = make_layer(LayerKind::Conv, 6, 1, 1, 0, 1, 1);
    auto in = random_tensor_q({1, 6, 6}, 4);
    TensorQ f({1, 1, 1, 1}, {256});
    auto out = golden_conv<FixedQ88>(in, f, l);
    CHECK(out == in);
  }
  SUBCASE("3x3 all-ones over 3x3 all-ones gives 9") {
    auto l = make_layer(LayerKind::Conv, 3, 3, 1, 0, 1, 1);
    TensorQ in({1, 3, 3});
    TensorQ f({1, 1, 3, 3});
    for (auto& v : in.data()) v = 256;
    for (auto& v : f.data()) v = 256;
    auto out = golden_conv<FixedQ88>(in, f, l);
    REQUIRE(out.size() == 1);
    CHECK(out.data()[0] == 9 * 256);
  }
  SUBCASE("randomized against an independent loop nest") {
    SplitMix64 rng(5);
    for (int it = 0; it < 10; ++it) {
      auto l = make_layer(LayerKind::Conv, 8, 3, rng.range(1, 2),
                          rng.range(0, 1), 4, 2);
      auto in = random_tensor_q({4, 8, 8}, 100 + it);
      auto f = random_tensor_q({2, 4, 3, 3}, 200 + it);
      CHECK(golden_conv<FixedQ88>(in, f, l) == conv_reference2(in, f, l));
    }
  }
  SUBCASE("dim mismatch rejected") {
    auto l = make_layer(LayerKind::Conv, 6, 3, 1, 0, 2, 1);
    auto in = random_tensor_q({1, 6, 6}, 4);
    auto f = random_tensor_q({1, 2, 3, 3}, 5);
    CHECK_THROWS_AS(golden_conv<FixedQ88>(in, f, l), UsageError);
  }
}

TEST_CASE("golden_tconv") {
  SUBCASE("4x4 input 5x5 filter s=2 p=2 gives 7x7") {
    auto l = make_layer(LayerKind::TConv, 4, 5, 2, 2, 1, 1);
    auto in = random_tensor_q({1, 4, 4}, 6);
    auto f = random_tensor_q({1, 1, 5, 5}, 7);
    auto out = golden_tconv<FixedQ88>(in, f, l);
    CHECK(out.dim(1) == 7);
    CHECK(out.dim(2) == 7);
    CHECK(out == scatter_tconv(in, f, l));
  }
  SUBCASE("s=1 1x1 unit filter on 1x1 input is the identity") {
    auto l = make_layer(LayerKind::TConv, 1, 1, 1, 0, 1, 1);
    TensorQ in({1, 1, 1}, {123});
    TensorQ f({1, 1, 1, 1}, {256});
    auto out = golden_tconv<FixedQ88>(in, f, l);
    CHECK(out.data()[0] == 123);
  }
  SUBCASE("delta input stamps the filter") {
    auto l = make_layer(LayerKind::TConv, 5, 3, 2, 1, 1, 1);
    TensorQ in({1, 5, 5});
    in.at(0, 2, 2) = 256;  // 1.0 at center
    auto f = random_tensor_q({1, 1, 3, 3}, 8);
    auto out = golden_tconv<FixedQ88>(in, f, l);
    // Center maps to expanded (1 + 2*2) = 5; window at output (y, x) reads
    // expanded (y+ky, x+kx), so out(5-ky, 5-kx) = f(ky, kx).
    for (int ky = 0; ky < 3; ++ky)
      for (int kx = 0; kx < 3; ++kx)
        CHECK(out.at(0, 5 - ky, 5 - kx) == f.at4(0, 0, ky, kx));
  }
  SUBCASE("gather equals scatter on randomized layers") {
    SplitMix64 rng(9);
    for (int it = 0; it < 20; ++it) {
      const int k = rng.range(1, 5);
      auto l = make_layer(LayerKind::TConv, rng.range(2, 7), k, rng.range(1, 3),
                          rng.range(0, k - 1), rng.range(1, 3), rng.range(1, 3));
      if (model::expanded_extent(l.in_h, l.stride, l.padding) < l.k_h) continue;
      auto in = random_tensor_q({l.in_c, l.in_h, l.in_w}, 300 + it);
      auto f = random_tensor_q({l.out_c, l.in_c, l.k_h, l.k_w}, 400 + it);
      CHECK(golden_tconv<FixedQ88>(in, f, l) == scatter_tconv(in, f, l));
    }
  }
  SUBCASE("float mode tracks fixed point within quantization error") {
    auto l = make_layer(LayerKind::TConv, 4, 5, 2, 2, 2, 2);
    auto inq = random_tensor_q({2, 4, 4}, 11);
    auto fq = random_tensor_q({2, 2, 5, 5}, 12);
    auto outq = golden_tconv<FixedQ88>(inq, fq, l);
    auto outf = golden_tconv<Float32>(to_float_tensor(inq), to_float_tensor(fq), l);
    for (std::size_t i = 0; i < outq.size(); ++i) {
      const double q = FixedQ88::to_double(outq.data()[i]);
      CHECK(std::abs(q - outf.data()[i]) <= 0.5 / 256.0 + 1e-6);
    }
  }
}
