#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "choquard/fft.hpp"
#include "choquard/field.hpp"
#include "choquard/grid.hpp"

namespace choquard {

enum class KernelMode { truncated_kernel, spectral };

inline const char* to_string(KernelMode m) {
    return m == KernelMode::truncated_kernel ? "truncated" : "spectral";
}

/// Normalization of the Riesz potential I_alpha(x) = A_alpha |x|^{alpha-N}:
/// A_alpha = Gamma((N-alpha)/2) / (Gamma(alpha/2) pi^{N/2} 2^alpha).
inline double riesz_constant(int dim, double alpha) {
    return std::tgamma(0.5 * (dim - alpha)) /
           (std::tgamma(0.5 * alpha) * std::pow(M_PI, 0.5 * dim) * std::pow(2.0, alpha));
}

inline double unit_ball_volume(int dim) {
    switch (dim) {
        case 1: return 2.0;
        case 2: return M_PI;
        default: return 4.0 * M_PI / 3.0;
    }
}

/// Discrete convolution operator for I_alpha * f.
///
/// truncated_kernel: Hockney--Eastwood free-space convolution. The real-space
/// kernel is sampled on a zero-padded box (2n per axis); the origin cell takes
/// the analytic mean of I_alpha over the ball of equal cell volume,
/// A_alpha * (N/alpha) * r_eq^{alpha-N}, which is the closed-form O(h^2)
/// regularization. The multiplier is the DFT of those samples times h^N.
///
/// spectral: circular convolution on the unpadded box with the plain symbol
/// |k|^{-alpha} and a zeroed DC mode. Composing two alpha/2 kernels then
/// reproduces the alpha kernel exactly (up to rounding), since no padding or
/// cropping intervenes; this is the mode every factorization invariant uses.
struct RieszKernel {
    Grid grid;
    double alpha = 1.0;
    KernelMode mode = KernelMode::truncated_kernel;
    double a_alpha = 0.0;
    int mult_n = 0;                 // multiplier box points per axis (2n or n)
    std::vector<double> multiplier; // on the r2c half spectrum of the multiplier box
    double min_multiplier_raw = 0.0; // smallest DFT value before clamping to 0
};

inline RieszKernel build_kernel(const Grid& grid, double alpha, KernelMode mode) {
    grid.validate();
    if (!(alpha > 0.0) || !(alpha < grid.dim))
        throw std::invalid_argument("riesz: alpha must lie in (0, N)");

    RieszKernel k;
    k.grid = grid;
    k.alpha = alpha;
    k.mode = mode;
    k.a_alpha = riesz_constant(grid.dim, alpha);

    if (mode == KernelMode::spectral) {
        k.mult_n = grid.n;
        std::array<int, 3> dims{grid.n, grid.n, grid.n};
        k.multiplier.assign(fft::spectrum_size(dims, grid.dim), 0.0);
        const double k0 = 2.0 * M_PI / grid.extent;
        fft::for_each_mode(grid.n, grid.dim, [&](std::size_t idx, const std::array<int, 3>& m) {
            double k2 = 0.0;
            for (int d = 0; d < grid.dim; ++d) k2 += (k0 * m[d]) * (k0 * m[d]);
            k.multiplier[idx] = k2 > 0.0 ? std::pow(k2, -0.5 * alpha) : 0.0;
        });
        k.min_multiplier_raw = 0.0;
        return k;
    }

    const int np = 2 * grid.n;
    const double h = grid.spacing();
    k.mult_n = np;
    std::array<int, 3> pdims{np, np, np};
    std::size_t psize = 1;
    for (int d = 0; d < grid.dim; ++d) psize *= static_cast<std::size_t>(np);
    std::vector<double> samples(psize);

    // Equal-volume ball average for the origin cell.
    const double r_eq = h * std::pow(unit_ball_volume(grid.dim), -1.0 / grid.dim);
    const double origin = k.a_alpha * (grid.dim / alpha) * std::pow(r_eq, alpha - grid.dim);

    std::array<int, 3> i{0, 0, 0};
    for (std::size_t idx = 0; idx < psize; ++idx) {
        std::size_t rem = idx;
        for (int d = grid.dim - 1; d >= 0; --d) {
            i[d] = static_cast<int>(rem % static_cast<std::size_t>(np));
            rem /= static_cast<std::size_t>(np);
        }
        double r2 = 0.0;
        for (int d = 0; d < grid.dim; ++d) {
            int m = i[d] <= np / 2 ? i[d] : i[d] - np;
            r2 += (m * h) * (m * h);
        }
        samples[idx] = r2 > 0.0 ? k.a_alpha * std::pow(r2, 0.5 * (alpha - grid.dim)) : origin;
    }

    std::vector<std::complex<double>> spec(fft::spectrum_size(pdims, grid.dim));
    fft::r2c(pdims, grid.dim, samples.data(), spec.data());
    k.multiplier.resize(spec.size());
    double vol = grid.cell_volume();
    double mn = 0.0;
    for (std::size_t s = 0; s < spec.size(); ++s) {
        // kernel samples are even, so the DFT is real up to rounding;
        // stray negatives at high k are clamped to keep the operator PSD
        double val = spec[s].real() * vol;
        mn = std::min(mn, val);
        k.multiplier[s] = std::max(val, 0.0);
    }
    k.min_multiplier_raw = mn;
    return k;
}

/// I_alpha * f. Truncated mode returns the zero-padded linear convolution
/// restricted to the box; spectral mode the circular one. Linear in f.
inline Field riesz_convolve(const RieszKernel& kernel, const Field& f) {
    require_same_grid(kernel.grid, f.grid);
    const Grid& g = f.grid;

    if (kernel.mode == KernelMode::spectral) {
        std::array<int, 3> dims{g.n, g.n, g.n};
        std::vector<std::complex<double>> spec(fft::spectrum_size(dims, g.dim));
        fft::r2c(dims, g.dim, f.v.data(), spec.data());
        const double norm = 1.0 / static_cast<double>(g.size());
        for (std::size_t s = 0; s < spec.size(); ++s) spec[s] *= kernel.multiplier[s] * norm;
        Field r(g);
        fft::c2r(dims, g.dim, spec.data(), r.v.data());
        return r;
    }

    const int np = kernel.mult_n;
    std::array<int, 3> pdims{np, np, np};
    std::size_t psize = 1;
    for (int d = 0; d < g.dim; ++d) psize *= static_cast<std::size_t>(np);
    std::vector<double> padded(psize, 0.0);
    // embed the box in the corner [0, n)^N of the padded box
    for (std::size_t idx = 0; idx < f.size(); ++idx) {
        auto i = g.unindex(idx);
        std::size_t pidx = 0;
        for (int d = 0; d < g.dim; ++d)
            pidx = pidx * static_cast<std::size_t>(np) + static_cast<std::size_t>(i[d]);
        padded[pidx] = f[idx];
    }
    std::vector<std::complex<double>> spec(fft::spectrum_size(pdims, g.dim));
    fft::r2c(pdims, g.dim, padded.data(), spec.data());
    const double norm = 1.0 / static_cast<double>(psize);
    for (std::size_t s = 0; s < spec.size(); ++s) spec[s] *= kernel.multiplier[s] * norm;
    fft::c2r(pdims, g.dim, spec.data(), padded.data());
    Field r(g);
    for (std::size_t idx = 0; idx < r.size(); ++idx) {
        auto i = g.unindex(idx);
        std::size_t pidx = 0;
        for (int d = 0; d < g.dim; ++d)
            pidx = pidx * static_cast<std::size_t>(np) + static_cast<std::size_t>(i[d]);
        r[idx] = padded[pidx];
    }
    return r;
}

/// Pointwise |u|^p with sub-machine values flushed through std::pow directly.
inline Field abs_power(const Field& u, double p) {
    Field r(u.grid);
    for (std::size_t i = 0; i < u.size(); ++i) r[i] = u[i] == 0.0 ? 0.0 : std::pow(std::abs(u[i]), p);
    return r;
}

/// The bracket integral int (I_alpha * |u|^p) |w|^p, symmetric in (u, w)
/// by self-adjointness of the discrete kernel.
inline double choquard_term(const RieszKernel& kernel, double p, const Field& u, const Field& w) {
    require_same_grid(kernel.grid, u.grid);
    require_same_grid(kernel.grid, w.grid);
    Field conv = riesz_convolve(kernel, abs_power(u, p));
    Field wp = abs_power(w, p);
    return l2_inner(conv, wp);
}

} // namespace choquard
