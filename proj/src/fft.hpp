#pragma once
#include <complex>
#include <cstddef>

namespace popsim::detail {

enum class FftSign { forward = -1, backward = +1 };

/// In-place unnormalized DFT of `howmany` sequences of length n (FFTW advanced layout)
void fft_many(std::complex<double>* data, std::size_t n, std::size_t howmany, std::size_t stride,
              std::size_t dist, FftSign sign);

/// Centered physical transform: multiplies by (-1)^j before and (-1)^m after the DFT
/// and scales by `scale`; valid for even n with n/2 even.
void centered_dft_many(std::complex<double>* data, std::size_t n, std::size_t howmany,
                       std::size_t stride, std::size_t dist, FftSign sign, double scale);

}  // namespace popsim::detail
