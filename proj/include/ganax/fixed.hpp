#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace ganax {

// Q8.8 fixed-point arithmetic with 32-bit accumulators.
//
// Products of two Q8.8 values are Q16.16 held in int32. Accumulation is
// wrap-around (mod 2^32), so any summation order yields the same bits; the
// simulator and the golden kernels may therefore accumulate in different
// orders and still match exactly. narrow() converts an accumulator back to
// Q8.8 with round-half-up and saturation.
struct FixedQ88 {
  using value_type = std::int16_t;
  using accum_type = std::int32_t;

  static constexpr int kFracBits = 8;
  static constexpr const char* name() { return "q8.8"; }

  static accum_type mul(value_type a, value_type b) {
    return static_cast<accum_type>(a) * static_cast<accum_type>(b);
  }

  // Wrap-defined add: signed overflow is not UB this way.
  static accum_type add(accum_type a, accum_type b) {
    return static_cast<accum_type>(static_cast<std::uint32_t>(a) +
                                   static_cast<std::uint32_t>(b));
  }

  static value_type narrow(accum_type acc) {
    accum_type r = add(acc, 1 << (kFracBits - 1)) >> kFracBits;
    r = std::clamp<accum_type>(r, -32768, 32767);
    return static_cast<value_type>(r);
  }

  static value_type from_double(double x) {
    double scaled = std::nearbyint(x * 256.0);
    scaled = std::clamp(scaled, -32768.0, 32767.0);
    return static_cast<value_type>(scaled);
  }

  static double to_double(value_type v) { return static_cast<double>(v) / 256.0; }

  static value_type zero() { return 0; }
  static accum_type accum_zero() { return 0; }
  static value_type relu(value_type v) { return v < 0 ? value_type{0} : v; }
};

// 32-bit float mode, used for cross-checks against the fixed-point path.
struct Float32 {
  using value_type = float;
  using accum_type = float;

  static constexpr const char* name() { return "f32"; }

  static accum_type mul(value_type a, value_type b) { return a * b; }
  static accum_type add(accum_type a, accum_type b) { return a + b; }
  static value_type narrow(accum_type acc) { return acc; }
  static value_type from_double(double x) { return static_cast<float>(x); }
  static double to_double(value_type v) { return v; }
  static value_type zero() { return 0.0f; }
  static accum_type accum_zero() { return 0.0f; }
  static value_type relu(value_type v) { return v < 0.0f ? 0.0f : v; }
};

}  // namespace ganax
