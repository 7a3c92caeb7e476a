#include "gredp/mechanisms.hpp"

#include <cmath>
#include <stdexcept>

namespace gredp {

void NoiseSpec::validate() const {
    if (!(clip_bound > 0.0)) throw std::invalid_argument("NoiseSpec: clip_bound must be > 0");
    if (!(sigma >= 0.0)) throw std::invalid_argument("NoiseSpec: sigma must be >= 0");
    const double s = split_re * split_re + split_im * split_im;
    if (std::abs(s - 1.0) > 1e-12) {
        throw std::invalid_argument("NoiseSpec: split must satisfy a^2 + b^2 = 1");
    }
}

void MechanismKind::validate() const {
    if (variant == Variant::kSpectralDp && !(rho > 0.0 && rho <= 1.0)) {
        throw std::invalid_argument("MechanismKind: rho must lie in (0, 1]");
    }
}

std::string MechanismKind::name() const {
    switch (variant) {
        case Variant::kDpsgd: return "dpsgd";
        case Variant::kSpectralDp: return "spectral-dp";
        case Variant::kGredp: return "gredp";
    }
    return "unknown";
}

MechanismKind parse_mechanism(const std::string& name, double rho) {
    if (name == "dpsgd") return MechanismKind::dpsgd();
    if (name == "spectral-dp" || name == "spectraldp") return MechanismKind::spectral_dp(rho);
    if (name == "gredp") return MechanismKind::gredp();
    throw std::invalid_argument("unknown mechanism '" + name + "' (expected dpsgd|spectral-dp|gredp)");
}

namespace {

void require_clip_bound(double c) {
    if (!(c > 0.0)) throw std::invalid_argument("clip: bound must be > 0");
}

template <typename Vec>
Vec clip_impl(const Vec& g, double c, double norm) {
    require_clip_bound(c);
    if (norm <= c) return g;
    Vec out = g;
    const double scale = c / norm;
    for (auto& x : out) x *= scale;
    return out;
}

std::size_t keep_count_for(double rho, std::size_t n) {
    return static_cast<std::size_t>(std::ceil(rho * static_cast<double>(n)));
}

}  // namespace

RealVec clip(const RealVec& g, double c) {
    require_finite(g, "clip");
    return clip_impl(g, c, l2_norm(g));
}

ComplexVec clip(const ComplexVec& g, double c) {
    require_finite(g, "clip");
    return clip_impl(g, c, l2_norm(g));
}

RealMat clip(const RealMat& g, double c) {
    require_finite(g.data, "clip");
    RealMat out = g;
    out.data = clip_impl(g.data, c, l2_norm(g));
    return out;
}

ComplexMat clip(const ComplexMat& g, double c) {
    require_finite(g.data, "clip");
    ComplexMat out = g;
    out.data = clip_impl(g.data, c, l2_norm(g));
    return out;
}

ComplexVec sample_complex_noise(std::size_t n, const NoiseSpec& spec, RngState& rng) {
    if (n == 0) throw std::invalid_argument("sample_complex_noise: n must be >= 1");
    spec.validate();
    const double re_std = spec.split_re * spec.clip_bound * spec.sigma;
    const double im_std = spec.split_im * spec.clip_bound * spec.sigma;
    ComplexVec out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = Complex{re_std * rng.gaussian(), im_std * rng.gaussian()};
    }
    return out;
}

ComplexVec perturb_spectrum(ComplexVec spectrum, const NoiseSpec& spec, RngState& rng,
                            std::size_t keep_count) {
    spectrum = clip(spectrum, spec.clip_bound);
    const ComplexVec noise = sample_complex_noise(spectrum.size(), spec, rng);
    for (std::size_t i = 0; i < spectrum.size(); ++i) spectrum[i] += noise[i];
    for (std::size_t i = keep_count; i < spectrum.size(); ++i) spectrum[i] = Complex{0.0, 0.0};
    return spectrum;
}

ComplexMat perturb_spectrum(ComplexMat spectrum, const NoiseSpec& spec, RngState& rng,
                            std::size_t keep_count) {
    spectrum.data = perturb_spectrum(std::move(spectrum.data), spec, rng, keep_count);
    return spectrum;
}

RealVec fre(const RealVec& g_time, const NoiseSpec& spec, RngState& rng) {
    ComplexVec spectrum = fft1d(to_complex(g_time));
    spectrum = perturb_spectrum(std::move(spectrum), spec, rng, spectrum.size());
    return real_part(ifft1d(spectrum));
}

RealMat fre2d(const RealMat& g_time, const NoiseSpec& spec, RngState& rng) {
    ComplexMat spectrum = fft2d(to_complex(g_time));
    spectrum = perturb_spectrum(std::move(spectrum), spec, rng, spectrum.size());
    return real_part(ifft2d(spectrum));
}

RealVec dpsgd_perturb(const RealVec& g_time, const NoiseSpec& spec, RngState& rng) {
    spec.validate();
    RealVec out = clip(g_time, spec.clip_bound);
    const double noise_std = spec.clip_bound * spec.sigma;
    for (auto& x : out) x += noise_std * rng.gaussian();
    return out;
}

RealVec spectraldp_perturb(const RealVec& g_time, const NoiseSpec& spec, double rho,
                           RngState& rng) {
    if (!(rho > 0.0 && rho <= 1.0)) {
        throw std::invalid_argument("spectraldp_perturb: rho must lie in (0, 1]");
    }
    ComplexVec spectrum = fft1d(to_complex(g_time));
    spectrum = perturb_spectrum(std::move(spectrum), spec, rng, keep_count_for(rho, spectrum.size()));
    return real_part(ifft1d(spectrum));
}

RealVec apply_mechanism(const RealVec& g_time, const NoiseSpec& spec, const MechanismKind& mech,
                        RngState& rng) {
    mech.validate();
    switch (mech.variant) {
        case MechanismKind::Variant::kDpsgd: return dpsgd_perturb(g_time, spec, rng);
        case MechanismKind::Variant::kSpectralDp: return spectraldp_perturb(g_time, spec, mech.rho, rng);
        case MechanismKind::Variant::kGredp: return fre(g_time, spec, rng);
    }
    throw std::logic_error("apply_mechanism: unreachable");
}

}  // namespace gredp
