#ifndef GREDP_SPECTRAL_HPP
#define GREDP_SPECTRAL_HPP

#include <complex>
#include <cstddef>
#include <vector>

namespace gredp {

using Complex = std::complex<double>;
using RealVec = std::vector<double>;
using ComplexVec = std::vector<Complex>;

// Row-major complex matrix. rows/cols >= 1 whenever data is non-empty.
struct ComplexMat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    ComplexVec data;

    ComplexMat() = default;
    ComplexMat(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c) {}

    Complex& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    const Complex& at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::size_t size() const { return rows * cols; }
};

struct RealMat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    RealVec data;

    RealMat() = default;
    RealMat(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    const double& at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::size_t size() const { return rows * cols; }
};

// Unitary discrete Fourier transforms: 1/sqrt(N) normalization in both
// directions, so every transform preserves the l2 norm. Power-of-two
// lengths take an iterative radix-2 path; everything else falls back to
// the direct O(N^2) sum, which is fine at the sizes this library sees.
//
// Non-finite entries are rejected with the offending index named.
ComplexVec fft1d(const ComplexVec& v);
ComplexVec ifft1d(const ComplexVec& v);

// Separable 2D transforms: fft1d over each row, then over each column.
// Overall normalization 1/sqrt(rows*cols).
ComplexMat fft2d(const ComplexMat& m);
ComplexMat ifft2d(const ComplexMat& m);

// Helpers shared across modules.
ComplexVec to_complex(const RealVec& v);
RealVec real_part(const ComplexVec& v);
ComplexMat to_complex(const RealMat& m);
RealMat real_part(const ComplexMat& m);

double l2_norm(const RealVec& v);
double l2_norm(const ComplexVec& v);
double l2_norm(const RealMat& m);
double l2_norm(const ComplexMat& m);

// Throws std::invalid_argument naming the first non-finite index.
void require_finite(const RealVec& v, const char* what);
void require_finite(const ComplexVec& v, const char* what);

}  // namespace gredp

#endif  // GREDP_SPECTRAL_HPP
