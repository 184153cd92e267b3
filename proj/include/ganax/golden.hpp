#pragma once

#include "ganax/fixed.hpp"
#include "ganax/model.hpp"
#include "ganax/tensor.hpp"

namespace ganax::golden {

// Reference kernels the simulator is verified against. Deliberately naive
// loop nests; no reorganization, no skipping.

// Zero-inserted, zero-padded TConv input. A nonzero source element (i, j)
// lands at (p + s*i, p + s*j); expanded extent is (in-1)*s + 1 + 2p.
template <typename Num>
Tensor<typename Num::value_type> expand_input(
    const Tensor<typename Num::value_type>& input, const model::LayerSpec& l) {
  if (l.kind != model::LayerKind::TConv)
    throw UsageError("expand_input: layer '" + l.layer_id + "' is not tconv");
  if (input.dims().size() != 3 || input.dim(0) != l.in_c ||
      input.dim(1) != l.in_h || input.dim(2) != l.in_w)
    throw UsageError("expand_input: input dims do not match layer '" +
                     l.layer_id + "'");
  const int eh = model::expanded_extent(l.in_h, l.stride, l.padding);
  const int ew = model::expanded_extent(l.in_w, l.stride, l.padding);
  Tensor<typename Num::value_type> out({l.in_c, eh, ew});
  for (int c = 0; c < l.in_c; ++c)
    for (int i = 0; i < l.in_h; ++i)
      for (int j = 0; j < l.in_w; ++j)
        out.at(c, l.padding + l.stride * i, l.padding + l.stride * j) =
            input.at(c, i, j);
  return out;
}

// Direct convolution. Filters are {out_c, in_c, k_h, k_w}; input window rows
// are taken from the zero-padded input. Accumulation runs in Num::accum_type
// and is narrowed once per output element.
template <typename Num>
Tensor<typename Num::value_type> golden_conv(
    const Tensor<typename Num::value_type>& input,
    const Tensor<typename Num::value_type>& filters,
    const model::LayerSpec& l) {
  if (input.dims().size() != 3 || input.dim(0) != l.in_c ||
      input.dim(1) != l.in_h || input.dim(2) != l.in_w)
    throw UsageError("golden_conv: input dims do not match layer '" +
                     l.layer_id + "'");
  if (filters.dims().size() != 4 || filters.dim(0) != l.out_c ||
      filters.dim(1) != l.in_c || filters.dim(2) != l.k_h ||
      filters.dim(3) != l.k_w)
    throw UsageError("golden_conv: filter dims do not match layer '" +
                     l.layer_id + "'");
  if (l.kind != model::LayerKind::Conv)
    throw UsageError("golden_conv: layer '" + l.layer_id + "' is not conv");
  const int oh = model::out_h(l);
  const int ow = model::out_w(l);
  Tensor<typename Num::value_type> out({l.out_c, oh, ow});
  for (int f = 0; f < l.out_c; ++f) {
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        typename Num::accum_type acc = Num::accum_zero();
        for (int c = 0; c < l.in_c; ++c) {
          for (int ky = 0; ky < l.k_h; ++ky) {
            const int iy = y * l.stride + ky - l.padding;
            if (iy < 0 || iy >= l.in_h) continue;
            for (int kx = 0; kx < l.k_w; ++kx) {
              const int ix = x * l.stride + kx - l.padding;
              if (ix < 0 || ix >= l.in_w) continue;
              acc = Num::add(acc,
                             Num::mul(input.at(c, iy, ix),
                                      filters.at4(f, c, ky, kx)));
            }
          }
        }
        out.at(f, y, x) = Num::narrow(acc);
      }
    }
  }
  return out;
}

// Transposed convolution: stride-1 convolution over the expanded input.
template <typename Num>
Tensor<typename Num::value_type> golden_tconv(
    const Tensor<typename Num::value_type>& input,
    const Tensor<typename Num::value_type>& filters,
    const model::LayerSpec& l) {
  if (l.kind != model::LayerKind::TConv)
    throw UsageError("golden_tconv: layer '" + l.layer_id + "' is not tconv");
  auto expanded = expand_input<Num>(input, l);
  model::LayerSpec conv = l;
  conv.kind = model::LayerKind::Conv;
  conv.in_h = expanded.dim(1);
  conv.in_w = expanded.dim(2);
  conv.stride = 1;
  conv.padding = 0;
  return golden_conv<Num>(expanded, filters, conv);
}

// Dispatches on layer kind.
template <typename Num>
Tensor<typename Num::value_type> golden_layer(
    const Tensor<typename Num::value_type>& input,
    const Tensor<typename Num::value_type>& filters,
    const model::LayerSpec& l) {
  if (l.kind == model::LayerKind::Conv)
    return golden_conv<Num>(input, filters, l);
  return golden_tconv<Num>(input, filters, l);
}

// Applies the run-level activation the same way the array's act step does.
template <typename Num>
void apply_relu(Tensor<typename Num::value_type>& t) {
  for (auto& v : t.data()) v = Num::relu(v);
}

}  // namespace ganax::golden
