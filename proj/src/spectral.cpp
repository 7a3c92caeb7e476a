#include "gredp/spectral.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace gredp {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 Cooley-Tukey. sign = -1 forward, +1 inverse.
// No normalization here; the caller applies 1/sqrt(N).
void radix2(ComplexVec& a, int sign) {
    const std::size_t n = a.size();
    // Bit-reversal permutation.
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    // Twiddle table e^{sign * j*2*pi*k/n}, k < n/2, from exact angles.
    ComplexVec roots(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
        roots[k] = std::polar(1.0, sign * kTwoPi * static_cast<double>(k) / static_cast<double>(n));
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t stride = n / len;
        for (std::size_t start = 0; start < n; start += len) {
            for (std::size_t k = 0; k < len / 2; ++k) {
                const Complex w = roots[k * stride];
                const Complex u = a[start + k];
                const Complex t = w * a[start + k + len / 2];
                a[start + k] = u + t;
                a[start + k + len / 2] = u - t;
            }
        }
    }
}

// Direct O(N^2) evaluation of the transform sum for arbitrary lengths.
// Twiddles are indexed modulo N so angles stay in [0, 2*pi).
ComplexVec direct_dft(const ComplexVec& v, int sign) {
    const std::size_t n = v.size();
    ComplexVec roots(n);
    for (std::size_t k = 0; k < n; ++k) {
        roots[k] = std::polar(1.0, sign * kTwoPi * static_cast<double>(k) / static_cast<double>(n));
    }
    ComplexVec out(n);
    for (std::size_t i = 0; i < n; ++i) {
        Complex acc{0.0, 0.0};
        for (std::size_t m = 0; m < n; ++m) {
            acc += v[m] * roots[(i * m) % n];
        }
        out[i] = acc;
    }
    return out;
}

ComplexVec transform(const ComplexVec& v, int sign, const char* what) {
    if (v.empty()) throw std::invalid_argument(std::string(what) + ": empty input");
    require_finite(v, what);
    ComplexVec out;
    if (is_power_of_two(v.size())) {
        out = v;
        radix2(out, sign);
    } else {
        out = direct_dft(v, sign);
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(v.size()));
    for (auto& z : out) z *= scale;
    return out;
}

ComplexMat transform2d(const ComplexMat& m, ComplexVec (*t1d)(const ComplexVec&), const char* what) {
    if (m.rows == 0 || m.cols == 0) throw std::invalid_argument(std::string(what) + ": empty matrix");
    ComplexMat out = m;
    ComplexVec line;
    for (std::size_t r = 0; r < out.rows; ++r) {
        line.assign(out.data.begin() + static_cast<std::ptrdiff_t>(r * out.cols),
                    out.data.begin() + static_cast<std::ptrdiff_t>((r + 1) * out.cols));
        line = t1d(line);
        std::copy(line.begin(), line.end(), out.data.begin() + static_cast<std::ptrdiff_t>(r * out.cols));
    }
    for (std::size_t c = 0; c < out.cols; ++c) {
        line.resize(out.rows);
        for (std::size_t r = 0; r < out.rows; ++r) line[r] = out.at(r, c);
        line = t1d(line);
        for (std::size_t r = 0; r < out.rows; ++r) out.at(r, c) = line[r];
    }
    return out;
}

}  // namespace

ComplexVec fft1d(const ComplexVec& v) { return transform(v, -1, "fft1d"); }

ComplexVec ifft1d(const ComplexVec& v) { return transform(v, +1, "ifft1d"); }

ComplexMat fft2d(const ComplexMat& m) { return transform2d(m, &fft1d, "fft2d"); }

ComplexMat ifft2d(const ComplexMat& m) { return transform2d(m, &ifft1d, "ifft2d"); }

ComplexVec to_complex(const RealVec& v) {
    ComplexVec out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = Complex{v[i], 0.0};
    return out;
}

RealVec real_part(const ComplexVec& v) {
    RealVec out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i].real();
    return out;
}

ComplexMat to_complex(const RealMat& m) {
    ComplexMat out(m.rows, m.cols);
    for (std::size_t i = 0; i < m.data.size(); ++i) out.data[i] = Complex{m.data[i], 0.0};
    return out;
}

RealMat real_part(const ComplexMat& m) {
    RealMat out(m.rows, m.cols);
    for (std::size_t i = 0; i < m.data.size(); ++i) out.data[i] = m.data[i].real();
    return out;
}

double l2_norm(const RealVec& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double l2_norm(const ComplexVec& v) {
    double s = 0.0;
    for (const Complex& z : v) s += std::norm(z);
    return std::sqrt(s);
}

double l2_norm(const RealMat& m) { return l2_norm(m.data); }

double l2_norm(const ComplexMat& m) { return l2_norm(m.data); }

void require_finite(const RealVec& v, const char* what) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i])) {
            throw std::invalid_argument(std::string(what) + ": non-finite entry at index " + std::to_string(i));
        }
    }
}

void require_finite(const ComplexVec& v, const char* what) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i].real()) || !std::isfinite(v[i].imag())) {
            throw std::invalid_argument(std::string(what) + ": non-finite entry at index " + std::to_string(i));
        }
    }
}

}  // namespace gredp
