#pragma once

// Thin FFTW wrapper shared by the spectral operators. Plans are created once
// per grid size; execution uses the new-array interface and is reentrant.

#include <complex>
#include <span>
#include <vector>

namespace ckrf::detail {

using Spectrum = std::vector<std::complex<double>>;

/// Half-complex layout of an n x n real transform: n rows (ky) times n/2+1
/// columns (kx).
inline std::size_t half_width(int n) { return static_cast<std::size_t>(n / 2 + 1); }

/// Signed wavenumber for a row or column index.
inline int wavenumber(int idx, int n) { return idx <= n / 2 ? idx : idx - n; }

/// Unnormalised forward transform of a real n x n array.
Spectrum forward(int n, std::span<const double> values);

/// Inverse transform including the 1/n^2 normalisation. Consumes `coeffs`.
std::vector<double> inverse(int n, Spectrum coeffs);

/// Inverse transform without normalisation: values = sum_k c_k e^{2 pi i k x}.
std::vector<double> synthesize(int n, Spectrum coefficients);

} // namespace ckrf::detail
