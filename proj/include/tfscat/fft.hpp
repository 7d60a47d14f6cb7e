#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace tfs::fft {

using cplx = std::complex<double>;

// All transforms are in place. Forward transforms are unnormalized; inverse
// transforms carry the 1/n factor. Plans are cached per shape and execution
// is safe from several threads at once.

void forward(std::span<cplx> data);
void inverse(std::span<cplx> data);

/// `count` transforms of length `n`, element stride `stride`, consecutive
/// transforms `dist` apart.
void forward_many(cplx* data, std::size_t n, std::size_t count, std::size_t stride,
                  std::size_t dist);
void inverse_many(cplx* data, std::size_t n, std::size_t count, std::size_t stride,
                  std::size_t dist);

/// Row-major rows x cols array.
void forward_2d(std::span<cplx> data, std::size_t rows, std::size_t cols);
void inverse_2d(std::span<cplx> data, std::size_t rows, std::size_t cols);

constexpr bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

constexpr std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace tfs::fft
