#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace eepn {

/// In-place complex DFT of arbitrary length backed by FFTW.
///
/// Plans are created once per length with FFTW_ESTIMATE | FFTW_UNALIGNED,
/// so the chosen algorithm never depends on timing or buffer alignment and
/// results are bitwise reproducible across runs and threads. Plan creation
/// is serialized internally; execution is safe from any thread.
class Fft {
public:
    /// X[m] = sum_n x[n] exp(-j 2 pi m n / M)
    static void forward(std::span<std::complex<double>> data);
    /// x[n] = (1/M) sum_m X[m] exp(+j 2 pi m n / M)
    static void inverse(std::span<std::complex<double>> data);
};

}  // namespace eepn
