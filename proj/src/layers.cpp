#include "gredp/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gredp {

namespace {

std::string dims(std::size_t a, std::size_t b, std::size_t c) {
    return std::to_string(a) + "x" + std::to_string(b) + "x" + std::to_string(c);
}

void check_tensor(const Tensor3& t, std::size_t c, std::size_t h, std::size_t w, const char* what) {
    if (t.channels != c || t.height != h || t.width != w) {
        throw std::invalid_argument(std::string(what) + ": expected " + dims(c, h, w) + ", got " +
                                    dims(t.channels, t.height, t.width));
    }
}

// Crop the first-quadrant correlation out of a circular correlation map.
// The conjugated-spectrum product leaves the lag-(u, v) terms at the
// wrapped indices (-u mod H, -v mod W).
RealVec crop_reversed(const RealMat& full, std::size_t d) {
    RealVec out(d * d);
    for (std::size_t u = 0; u < d; ++u) {
        const std::size_t r = (full.rows - u) % full.rows;
        for (std::size_t v = 0; v < d; ++v) {
            const std::size_t c = (full.cols - v) % full.cols;
            out[u * d + v] = full.at(r, c);
        }
    }
    return out;
}

std::size_t spectral_keep_count(const MechanismKind& mech, std::size_t n) {
    if (mech.variant == MechanismKind::Variant::kSpectralDp) {
        return static_cast<std::size_t>(std::ceil(mech.rho * static_cast<double>(n)));
    }
    return n;
}

}  // namespace

void ConvLayerSpec::validate() const {
    if (in_channels == 0 || out_channels == 0 || kernel_size == 0 || in_height == 0 || in_width == 0) {
        throw std::invalid_argument("ConvLayerSpec: all dimensions must be positive");
    }
    if (kernel_size > in_height || kernel_size > in_width) {
        throw std::invalid_argument("ConvLayerSpec: kernel " + std::to_string(kernel_size) +
                                    " exceeds input " + std::to_string(in_height) + "x" +
                                    std::to_string(in_width));
    }
}

void CirculantFCSpec::validate() const {
    if (out_dim == 0 || in_dim == 0 || block_size == 0) {
        throw std::invalid_argument("CirculantFCSpec: all dimensions must be positive");
    }
    if (out_dim % block_size != 0 || in_dim % block_size != 0) {
        throw std::invalid_argument("CirculantFCSpec: block size " + std::to_string(block_size) +
                                    " must divide out_dim " + std::to_string(out_dim) +
                                    " and in_dim " + std::to_string(in_dim));
    }
}

Tensor3 conv2d_forward(const Tensor3& x, const RealVec& kernels, const ConvLayerSpec& spec) {
    spec.validate();
    check_tensor(x, spec.in_channels, spec.in_height, spec.in_width, "conv2d_forward input");
    if (kernels.size() != spec.weight_count()) {
        throw std::invalid_argument("conv2d_forward: expected " + std::to_string(spec.weight_count()) +
                                    " weights, got " + std::to_string(kernels.size()));
    }
    const std::size_t ho = spec.out_height(), wo = spec.out_width(), d = spec.kernel_size;
    Tensor3 out(spec.out_channels, ho, wo);
    for (std::size_t oc = 0; oc < spec.out_channels; ++oc) {
        for (std::size_t ic = 0; ic < spec.in_channels; ++ic) {
            const double* k = &kernels[spec.weight_index(oc, ic, 0, 0)];
            for (std::size_t r = 0; r < ho; ++r) {
                for (std::size_t s = 0; s < wo; ++s) {
                    double acc = 0.0;
                    for (std::size_t u = 0; u < d; ++u) {
                        for (std::size_t v = 0; v < d; ++v) {
                            acc += x.at(ic, r + u, s + v) * k[u * d + v];
                        }
                    }
                    out.at(oc, r, s) += acc;
                }
            }
        }
    }
    return out;
}

Tensor3 conv2d_input_grad(const Tensor3& upstream, const RealVec& kernels, const ConvLayerSpec& spec) {
    spec.validate();
    check_tensor(upstream, spec.out_channels, spec.out_height(), spec.out_width(), "conv2d_input_grad upstream");
    const std::size_t d = spec.kernel_size;
    Tensor3 dx(spec.in_channels, spec.in_height, spec.in_width);
    for (std::size_t oc = 0; oc < spec.out_channels; ++oc) {
        for (std::size_t ic = 0; ic < spec.in_channels; ++ic) {
            const double* k = &kernels[spec.weight_index(oc, ic, 0, 0)];
            for (std::size_t r = 0; r < spec.out_height(); ++r) {
                for (std::size_t s = 0; s < spec.out_width(); ++s) {
                    const double g = upstream.at(oc, r, s);
                    for (std::size_t u = 0; u < d; ++u) {
                        for (std::size_t v = 0; v < d; ++v) {
                            dx.at(ic, r + u, s + v) += g * k[u * d + v];
                        }
                    }
                }
            }
        }
    }
    return dx;
}

RealVec conv2d_weight_grad(const Tensor3& upstream, const Tensor3& x, const ConvLayerSpec& spec) {
    spec.validate();
    check_tensor(x, spec.in_channels, spec.in_height, spec.in_width, "conv2d_weight_grad input");
    check_tensor(upstream, spec.out_channels, spec.out_height(), spec.out_width(), "conv2d_weight_grad upstream");
    const std::size_t d = spec.kernel_size;
    RealVec grad(spec.weight_count(), 0.0);
    for (std::size_t oc = 0; oc < spec.out_channels; ++oc) {
        for (std::size_t ic = 0; ic < spec.in_channels; ++ic) {
            double* g = &grad[spec.weight_index(oc, ic, 0, 0)];
            for (std::size_t r = 0; r < spec.out_height(); ++r) {
                for (std::size_t s = 0; s < spec.out_width(); ++s) {
                    const double up = upstream.at(oc, r, s);
                    for (std::size_t u = 0; u < d; ++u) {
                        for (std::size_t v = 0; v < d; ++v) {
                            g[u * d + v] += up * x.at(ic, r + u, s + v);
                        }
                    }
                }
            }
        }
    }
    return grad;
}

RealVec conv2d_weight_grad_spectral(const Tensor3& upstream, const Tensor3& x,
                                    const ConvLayerSpec& spec, const NoiseSpec& noise,
                                    const MechanismKind& mech, RngState& rng) {
    spec.validate();
    mech.validate();
    check_tensor(x, spec.in_channels, spec.in_height, spec.in_width, "conv2d_weight_grad_spectral input");
    check_tensor(upstream, spec.out_channels, spec.out_height(), spec.out_width(),
                 "conv2d_weight_grad_spectral upstream");
    const std::size_t H = spec.in_height, W = spec.in_width, d = spec.kernel_size;
    const std::size_t n = H * W;
    const double scale = std::sqrt(static_cast<double>(n));

    // Spectra of the input channels and of the zero-padded upstream maps.
    std::vector<ComplexMat> fx(spec.in_channels);
    for (std::size_t ic = 0; ic < spec.in_channels; ++ic) {
        ComplexMat chan(H, W);
        for (std::size_t y = 0; y < H; ++y) {
            for (std::size_t xx = 0; xx < W; ++xx) chan.at(y, xx) = Complex{x.at(ic, y, xx), 0.0};
        }
        fx[ic] = fft2d(chan);
    }
    std::vector<ComplexMat> fup(spec.out_channels);
    for (std::size_t oc = 0; oc < spec.out_channels; ++oc) {
        ComplexMat padded(H, W);
        for (std::size_t r = 0; r < spec.out_height(); ++r) {
            for (std::size_t s = 0; s < spec.out_width(); ++s) {
                padded.at(r, s) = Complex{upstream.at(oc, r, s), 0.0};
            }
        }
        fup[oc] = fft2d(padded);
    }

    RealVec grad(spec.weight_count(), 0.0);
    for (std::size_t oc = 0; oc < spec.out_channels; ++oc) {
        for (std::size_t ic = 0; ic < spec.in_channels; ++ic) {
            // The frequency-domain gradient of this kernel: scaled so that
            // its inverse transform is the circular correlation map itself.
            ComplexMat spectrum(H, W);
            for (std::size_t i = 0; i < n; ++i) {
                spectrum.data[i] = scale * fup[oc].data[i] * std::conj(fx[ic].data[i]);
            }
            RealVec kernel_grad;
            if (mech.variant == MechanismKind::Variant::kDpsgd) {
                kernel_grad = crop_reversed(real_part(ifft2d(spectrum)), d);
                kernel_grad = dpsgd_perturb(kernel_grad, noise, rng);
            } else {
                spectrum = perturb_spectrum(std::move(spectrum), noise, rng,
                                            spectral_keep_count(mech, n));
                kernel_grad = crop_reversed(real_part(ifft2d(spectrum)), d);
            }
            std::copy(kernel_grad.begin(), kernel_grad.end(),
                      grad.begin() + static_cast<std::ptrdiff_t>(spec.weight_index(oc, ic, 0, 0)));
        }
    }
    return grad;
}

RealVec circfc_forward(const RealVec& x, const RealVec& weights, const CirculantFCSpec& spec) {
    spec.validate();
    if (x.size() != spec.in_dim) {
        throw std::invalid_argument("circfc_forward: expected input length " + std::to_string(spec.in_dim) +
                                    ", got " + std::to_string(x.size()));
    }
    if (weights.size() != spec.weight_count()) {
        throw std::invalid_argument("circfc_forward: expected " + std::to_string(spec.weight_count()) +
                                    " weights, got " + std::to_string(weights.size()));
    }
    const std::size_t d = spec.block_size, p = spec.block_rows(), q = spec.block_cols();
    const double scale = std::sqrt(static_cast<double>(d));

    std::vector<ComplexVec> fx(q);
    for (std::size_t j = 0; j < q; ++j) {
        fx[j] = fft1d(to_complex(RealVec(x.begin() + static_cast<std::ptrdiff_t>(j * d),
                                         x.begin() + static_cast<std::ptrdiff_t>((j + 1) * d))));
    }

    RealVec out(spec.out_dim, 0.0);
    ComplexVec acc(d);
    for (std::size_t i = 0; i < p; ++i) {
        std::fill(acc.begin(), acc.end(), Complex{0.0, 0.0});
        for (std::size_t j = 0; j < q; ++j) {
            const ComplexVec fw = fft1d(to_complex(
                RealVec(weights.begin() + static_cast<std::ptrdiff_t>(spec.weight_index(i, j, 0)),
                        weights.begin() + static_cast<std::ptrdiff_t>(spec.weight_index(i, j, 0) + d))));
            for (std::size_t t = 0; t < d; ++t) acc[t] += fx[j][t] * std::conj(fw[t]);
        }
        const ComplexVec seg = ifft1d(acc);
        for (std::size_t t = 0; t < d; ++t) out[i * d + t] = scale * seg[t].real();
    }
    return out;
}

RealVec circfc_input_grad(const RealVec& upstream, const RealVec& weights, const CirculantFCSpec& spec) {
    spec.validate();
    if (upstream.size() != spec.out_dim) {
        throw std::invalid_argument("circfc_input_grad: expected upstream length " +
                                    std::to_string(spec.out_dim) + ", got " + std::to_string(upstream.size()));
    }
    const std::size_t d = spec.block_size, p = spec.block_rows(), q = spec.block_cols();
    RealVec dx(spec.in_dim, 0.0);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < q; ++j) {
            const double* w = &weights[spec.weight_index(i, j, 0)];
            for (std::size_t c = 0; c < d; ++c) {
                double acc = 0.0;
                for (std::size_t t = 0; t < d; ++t) {
                    acc += w[t] * upstream[i * d + (c + d - t) % d];
                }
                dx[j * d + c] += acc;
            }
        }
    }
    return dx;
}

RealVec circfc_weight_grad(const RealVec& upstream, const RealVec& x, const CirculantFCSpec& spec) {
    spec.validate();
    if (upstream.size() != spec.out_dim || x.size() != spec.in_dim) {
        throw std::invalid_argument("circfc_weight_grad: shape mismatch");
    }
    const std::size_t d = spec.block_size, p = spec.block_rows(), q = spec.block_cols();
    RealVec grad(spec.weight_count(), 0.0);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < q; ++j) {
            double* g = &grad[spec.weight_index(i, j, 0)];
            for (std::size_t t = 0; t < d; ++t) {
                double acc = 0.0;
                for (std::size_t r = 0; r < d; ++r) {
                    acc += upstream[i * d + r] * x[j * d + (r + t) % d];
                }
                g[t] = acc;
            }
        }
    }
    return grad;
}

RealVec circfc_weight_grad_spectral(const RealVec& upstream, const RealVec& x,
                                    const CirculantFCSpec& spec, const NoiseSpec& noise,
                                    const MechanismKind& mech, RngState& rng) {
    spec.validate();
    mech.validate();
    if (upstream.size() != spec.out_dim || x.size() != spec.in_dim) {
        throw std::invalid_argument("circfc_weight_grad_spectral: shape mismatch");
    }
    const std::size_t d = spec.block_size, p = spec.block_rows(), q = spec.block_cols();
    const double scale = std::sqrt(static_cast<double>(d));

    std::vector<ComplexVec> fx(q), fup(p);
    for (std::size_t j = 0; j < q; ++j) {
        fx[j] = fft1d(to_complex(RealVec(x.begin() + static_cast<std::ptrdiff_t>(j * d),
                                         x.begin() + static_cast<std::ptrdiff_t>((j + 1) * d))));
    }
    for (std::size_t i = 0; i < p; ++i) {
        fup[i] = fft1d(to_complex(RealVec(upstream.begin() + static_cast<std::ptrdiff_t>(i * d),
                                          upstream.begin() + static_cast<std::ptrdiff_t>((i + 1) * d))));
    }

    RealVec grad(spec.weight_count(), 0.0);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < q; ++j) {
            ComplexVec spectrum(d);
            for (std::size_t t = 0; t < d; ++t) {
                spectrum[t] = scale * fx[j][t] * std::conj(fup[i][t]);
            }
            RealVec block_grad;
            if (mech.variant == MechanismKind::Variant::kDpsgd) {
                block_grad = real_part(ifft1d(spectrum));
                block_grad = dpsgd_perturb(block_grad, noise, rng);
            } else {
                spectrum = perturb_spectrum(std::move(spectrum), noise, rng,
                                            spectral_keep_count(mech, d));
                block_grad = real_part(ifft1d(spectrum));
            }
            std::copy(block_grad.begin(), block_grad.end(),
                      grad.begin() + static_cast<std::ptrdiff_t>(spec.weight_index(i, j, 0)));
        }
    }
    return grad;
}

RealVec relu(const RealVec& x) {
    RealVec out = x;
    for (auto& v : out) v = std::max(v, 0.0);
    return out;
}

RealVec relu_backward(const RealVec& upstream, const RealVec& x) {
    if (upstream.size() != x.size()) throw std::invalid_argument("relu_backward: shape mismatch");
    RealVec out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0 ? upstream[i] : 0.0;
    return out;
}

Tensor3 max_pool2d(const Tensor3& x, std::size_t k, std::vector<std::size_t>* argmax) {
    if (k == 0) throw std::invalid_argument("max_pool2d: kernel must be positive");
    const std::size_t ho = x.height / k, wo = x.width / k;
    Tensor3 out(x.channels, ho, wo);
    if (argmax) argmax->assign(out.size(), 0);
    for (std::size_t c = 0; c < x.channels; ++c) {
        for (std::size_t r = 0; r < ho; ++r) {
            for (std::size_t s = 0; s < wo; ++s) {
                double best = x.at(c, r * k, s * k);
                std::size_t best_idx = (c * x.height + r * k) * x.width + s * k;
                for (std::size_t u = 0; u < k; ++u) {
                    for (std::size_t v = 0; v < k; ++v) {
                        const std::size_t idx = (c * x.height + r * k + u) * x.width + s * k + v;
                        if (x.data[idx] > best) {
                            best = x.data[idx];
                            best_idx = idx;
                        }
                    }
                }
                out.at(c, r, s) = best;
                if (argmax) (*argmax)[(c * ho + r) * wo + s] = best_idx;
            }
        }
    }
    return out;
}

Tensor3 max_pool2d_backward(const Tensor3& upstream, const Tensor3& x, std::size_t k,
                            const std::vector<std::size_t>& argmax) {
    const std::size_t ho = x.height / k, wo = x.width / k;
    check_tensor(upstream, x.channels, ho, wo, "max_pool2d_backward upstream");
    if (argmax.size() != upstream.size()) throw std::invalid_argument("max_pool2d_backward: stale argmax");
    Tensor3 dx(x.channels, x.height, x.width);
    for (std::size_t i = 0; i < upstream.size(); ++i) dx.data[argmax[i]] += upstream.data[i];
    return dx;
}

Tensor3 avg_pool2d(const Tensor3& x, std::size_t k) {
    if (k == 0) throw std::invalid_argument("avg_pool2d: kernel must be positive");
    const std::size_t ho = x.height / k, wo = x.width / k;
    const double inv = 1.0 / static_cast<double>(k * k);
    Tensor3 out(x.channels, ho, wo);
    for (std::size_t c = 0; c < x.channels; ++c) {
        for (std::size_t r = 0; r < ho; ++r) {
            for (std::size_t s = 0; s < wo; ++s) {
                double acc = 0.0;
                for (std::size_t u = 0; u < k; ++u) {
                    for (std::size_t v = 0; v < k; ++v) acc += x.at(c, r * k + u, s * k + v);
                }
                out.at(c, r, s) = acc * inv;
            }
        }
    }
    return out;
}

Tensor3 avg_pool2d_backward(const Tensor3& upstream, const Tensor3& x, std::size_t k) {
    const std::size_t ho = x.height / k, wo = x.width / k;
    check_tensor(upstream, x.channels, ho, wo, "avg_pool2d_backward upstream");
    const double inv = 1.0 / static_cast<double>(k * k);
    Tensor3 dx(x.channels, x.height, x.width);
    for (std::size_t c = 0; c < x.channels; ++c) {
        for (std::size_t r = 0; r < ho; ++r) {
            for (std::size_t s = 0; s < wo; ++s) {
                const double g = upstream.at(c, r, s) * inv;
                for (std::size_t u = 0; u < k; ++u) {
                    for (std::size_t v = 0; v < k; ++v) dx.at(c, r * k + u, s * k + v) += g;
                }
            }
        }
    }
    return dx;
}

LossResult cross_entropy_loss(const RealVec& logits, std::size_t label) {
    if (logits.empty()) throw std::invalid_argument("cross_entropy_loss: empty logits");
    if (label >= logits.size()) {
        throw std::invalid_argument("cross_entropy_loss: label " + std::to_string(label) +
                                    " out of range for " + std::to_string(logits.size()) + " classes");
    }
    const double max_logit = *std::max_element(logits.begin(), logits.end());
    double denom = 0.0;
    for (double z : logits) denom += std::exp(z - max_logit);
    LossResult res;
    res.loss = -(logits[label] - max_logit - std::log(denom));
    res.logit_grad.resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        res.logit_grad[i] = std::exp(logits[i] - max_logit) / denom - (i == label ? 1.0 : 0.0);
    }
    return res;
}

}  // namespace gredp
