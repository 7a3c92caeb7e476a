#ifndef GREDP_MECHANISMS_HPP
#define GREDP_MECHANISMS_HPP

#include <cstddef>
#include <string>

#include "gredp/rng.hpp"
#include "gredp/spectral.hpp"

namespace gredp {

// Calibrated Gaussian noise parameters. clip_bound doubles as the l2
// sensitivity; (split_re, split_im) divide the noise power between the
// real and imaginary parts of each frequency-domain coefficient and must
// satisfy split_re^2 + split_im^2 = 1 within 1e-12.
struct NoiseSpec {
    double clip_bound = 1.0;
    double sigma = 0.0;
    double split_re = 0.70710678118654752440;  // 1/sqrt(2)
    double split_im = 0.70710678118654752440;

    NoiseSpec() = default;
    NoiseSpec(double clip, double noise_multiplier) : clip_bound(clip), sigma(noise_multiplier) {}

    NoiseSpec with_split(double a, double b) const {
        NoiseSpec s = *this;
        s.split_re = a;
        s.split_im = b;
        return s;
    }

    void validate() const;  // throws std::invalid_argument on violation
};

// Which perturbation path a gradient takes.
struct MechanismKind {
    enum class Variant { kDpsgd, kSpectralDp, kGredp };

    Variant variant = Variant::kGredp;
    double rho = 1.0;  // retained-coefficient ratio, SpectralDp only, in (0, 1]

    static MechanismKind dpsgd() { return {Variant::kDpsgd, 1.0}; }
    static MechanismKind spectral_dp(double rho) { return {Variant::kSpectralDp, rho}; }
    static MechanismKind gredp() { return {Variant::kGredp, 1.0}; }

    void validate() const;
    std::string name() const;  // "dpsgd" | "spectral-dp" | "gredp"
};

MechanismKind parse_mechanism(const std::string& name, double rho);

// l2-norm clipping: g / max{1, |g|_2 / c}. Inputs with norm <= c are
// returned unchanged. For complex inputs the norm is over magnitudes.
RealVec clip(const RealVec& g, double c);
ComplexVec clip(const ComplexVec& g, double c);
RealMat clip(const RealMat& g, double c);
ComplexMat clip(const ComplexMat& g, double c);

// n independent complex draws with Re ~ N(0, a^2 c^2 sigma^2) and
// Im ~ N(0, b^2 c^2 sigma^2). Deterministic under a fixed RngState.
ComplexVec sample_complex_noise(std::size_t n, const NoiseSpec& spec, RngState& rng);

// Frequency-domain stage shared by the spectral mechanisms: clip the
// spectrum to c, add split complex noise to every coefficient, then zero
// all coefficients at (flat) indices >= keep_count. keep_count == size
// means no filtering; the two spectral mechanisms differ only in that
// argument. 2D spectra are masked in row-major flat order.
ComplexVec perturb_spectrum(ComplexVec spectrum, const NoiseSpec& spec, RngState& rng,
                            std::size_t keep_count);
ComplexMat perturb_spectrum(ComplexMat spectrum, const NoiseSpec& spec, RngState& rng,
                            std::size_t keep_count);

// The gradient-preserving pipeline: Re(ifft(clip(fft(g)) + noise)).
RealVec fre(const RealVec& g_time, const NoiseSpec& spec, RngState& rng);

// 2D analogue over fft2d/ifft2d.
RealMat fre2d(const RealMat& g_time, const NoiseSpec& spec, RngState& rng);

// Baseline: clip in the time domain, add i.i.d. real N(0, c^2 sigma^2).
RealVec dpsgd_perturb(const RealVec& g_time, const NoiseSpec& spec, RngState& rng);

// Baseline: as fre but zeroing the trailing (1 - rho) fraction of
// coefficients before the inverse transform. rho must lie in (0, 1].
RealVec spectraldp_perturb(const RealVec& g_time, const NoiseSpec& spec, double rho, RngState& rng);

// Dispatch a time-domain gradient through the configured mechanism.
RealVec apply_mechanism(const RealVec& g_time, const NoiseSpec& spec, const MechanismKind& mech,
                        RngState& rng);

}  // namespace gredp

#endif  // GREDP_MECHANISMS_HPP
