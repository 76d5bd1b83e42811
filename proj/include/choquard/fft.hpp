#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <vector>

#include <fftw3.h>

#include "choquard/field.hpp"
#include "choquard/grid.hpp"

namespace choquard {
namespace fft {

// Plans are cached per (dims, direction) and created under a lock; execution
// through the new-array interface is thread safe. FFTW_ESTIMATE keeps the
// chosen plan, and therefore every computed bit, reproducible across runs.

struct PlanKey {
    std::array<int, 3> dims;
    int rank;
    bool forward;
    auto operator<=>(const PlanKey&) const = default;
};

inline fftw_plan get_plan(const std::array<int, 3>& dims, int rank, bool forward) {
    static std::map<PlanKey, fftw_plan> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    PlanKey key{dims, rank, forward};
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    std::size_t n_real = 1, n_cplx = 1;
    for (int d = 0; d < rank; ++d) {
        n_real *= static_cast<std::size_t>(dims[d]);
        n_cplx *= static_cast<std::size_t>(d == rank - 1 ? dims[d] / 2 + 1 : dims[d]);
    }
    double* rbuf = fftw_alloc_real(n_real);
    fftw_complex* cbuf = fftw_alloc_complex(n_cplx);
    fftw_plan plan;
    if (forward)
        plan = fftw_plan_dft_r2c(rank, dims.data(), rbuf, cbuf,
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
    else
        plan = fftw_plan_dft_c2r(rank, dims.data(), cbuf, rbuf,
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(rbuf);
    fftw_free(cbuf);
    cache.emplace(key, plan);
    return plan;
}

inline std::size_t spectrum_size(const std::array<int, 3>& dims, int rank) {
    std::size_t s = 1;
    for (int d = 0; d < rank; ++d)
        s *= static_cast<std::size_t>(d == rank - 1 ? dims[d] / 2 + 1 : dims[d]);
    return s;
}

/// Unnormalized forward transform; out must hold spectrum_size entries.
inline void r2c(const std::array<int, 3>& dims, int rank, const double* in,
                std::complex<double>* out) {
    fftw_plan plan = get_plan(dims, rank, true);
    fftw_execute_dft_r2c(plan, const_cast<double*>(in),
                         reinterpret_cast<fftw_complex*>(out));
}

/// Unnormalized inverse transform; clobbers the spectrum.
inline void c2r(const std::array<int, 3>& dims, int rank, std::complex<double>* in,
                double* out) {
    fftw_plan plan = get_plan(dims, rank, false);
    fftw_execute_dft_c2r(plan, reinterpret_cast<fftw_complex*>(in), out);
}

/// Signed integer frequency of index j on an axis of n points.
inline int signed_freq(int j, int n) { return j <= n / 2 ? j : j - n; }

/// Iterates over the half spectrum of a cubic rank-`rank` box of n points per
/// axis, calling f(flat_index, m) with m the signed integer frequency vector.
/// `weight(m)` for Hermitian sums is 2 unless the last-axis index is 0 or n/2.
template <class F>
inline void for_each_mode(int n, int rank, F&& f) {
    const int n_half = n / 2 + 1;
    std::array<int, 3> m{0, 0, 0};
    std::size_t count = 1;
    for (int d = 0; d < rank - 1; ++d) count *= static_cast<std::size_t>(n);
    count *= static_cast<std::size_t>(n_half);
    for (std::size_t idx = 0; idx < count; ++idx) {
        std::size_t rem = idx;
        int j_last = static_cast<int>(rem % static_cast<std::size_t>(n_half));
        rem /= static_cast<std::size_t>(n_half);
        for (int d = rank - 2; d >= 0; --d) {
            m[d] = signed_freq(static_cast<int>(rem % static_cast<std::size_t>(n)), n);
            rem /= static_cast<std::size_t>(n);
        }
        m[rank - 1] = j_last; // last axis runs over 0..n/2 only
        f(idx, m);
    }
}

inline double hermitian_weight(int j_last, int n) {
    return (j_last == 0 || j_last == n / 2) ? 1.0 : 2.0;
}

} // namespace fft

/// Applies a real symmetric Fourier multiplier s(k), k = 2*pi*m/L the angular
/// wavenumber vector of the periodic box. Normalization is handled here.
template <class S>
inline Field apply_symbol(const Field& u, S&& symbol) {
    const Grid& g = u.grid;
    std::array<int, 3> dims{g.n, g.n, g.n};
    std::vector<std::complex<double>> spec(fft::spectrum_size(dims, g.dim));
    fft::r2c(dims, g.dim, u.v.data(), spec.data());
    const double k0 = 2.0 * M_PI / g.extent;
    const double norm = 1.0 / static_cast<double>(g.size());
    fft::for_each_mode(g.n, g.dim, [&](std::size_t idx, const std::array<int, 3>& m) {
        double k2 = 0.0;
        for (int d = 0; d < g.dim; ++d) k2 += (k0 * m[d]) * (k0 * m[d]);
        spec[idx] *= symbol(k2) * norm;
    });
    Field r(g);
    fft::c2r(dims, g.dim, spec.data(), r.v.data());
    return r;
}

/// Spectral H^1 inner product: sum over modes of (1 + |k|^2) u_hat conj(v_hat),
/// equal to the trapezoid sum of grad(u).grad(v) + u v for band-limited fields.
inline double h1_inner(const Field& u, const Field& v) {
    require_same_grid(u.grid, v.grid);
    const Grid& g = u.grid;
    std::array<int, 3> dims{g.n, g.n, g.n};
    std::vector<std::complex<double>> su(fft::spectrum_size(dims, g.dim));
    std::vector<std::complex<double>> sv(fft::spectrum_size(dims, g.dim));
    fft::r2c(dims, g.dim, u.v.data(), su.data());
    fft::r2c(dims, g.dim, v.v.data(), sv.data());
    const double k0 = 2.0 * M_PI / g.extent;
    double acc = 0.0;
    fft::for_each_mode(g.n, g.dim, [&](std::size_t idx, const std::array<int, 3>& m) {
        double k2 = 0.0;
        for (int d = 0; d < g.dim; ++d) k2 += (k0 * m[d]) * (k0 * m[d]);
        double w = fft::hermitian_weight(m[g.dim - 1], g.n);
        acc += w * (1.0 + k2) * (su[idx].real() * sv[idx].real() + su[idx].imag() * sv[idx].imag());
    });
    // Parseval: trapezoid sum = (1/n^N) sum_k, times the cell volume.
    return acc * g.cell_volume() / static_cast<double>(g.size());
}

inline double h1_norm_sq(const Field& u) { return h1_inner(u, u); }

/// Spectral partial derivative along axis d (Nyquist mode zeroed).
inline Field derivative(const Field& u, int axis) {
    const Grid& g = u.grid;
    std::array<int, 3> dims{g.n, g.n, g.n};
    std::vector<std::complex<double>> spec(fft::spectrum_size(dims, g.dim));
    fft::r2c(dims, g.dim, u.v.data(), spec.data());
    const double k0 = 2.0 * M_PI / g.extent;
    const double norm = 1.0 / static_cast<double>(g.size());
    fft::for_each_mode(g.n, g.dim, [&](std::size_t idx, const std::array<int, 3>& m) {
        int mj = m[axis];
        if (axis == g.dim - 1 && mj == g.n / 2) mj = 0;
        if (axis != g.dim - 1 && mj == -g.n / 2) mj = 0;
        spec[idx] *= std::complex<double>(0.0, k0 * mj) * norm;
    });
    Field r(g);
    fft::c2r(dims, g.dim, spec.data(), r.v.data());
    return r;
}

/// Zero-padding Fourier interpolation onto a grid refined by `factor`
/// (same extent, factor * n nodes per axis). Spectrally accurate for
/// fields resolved on the coarse grid; coarse Nyquist modes are dropped.
inline Field fourier_upsample(const Field& u, int factor) {
    const Grid& g = u.grid;
    if (factor == 1) return u;
    Grid fine{g.dim, g.n * factor, g.extent};
    std::array<int, 3> cdims{g.n, g.n, g.n};
    std::array<int, 3> fdims{fine.n, fine.n, fine.n};
    std::vector<std::complex<double>> cs(fft::spectrum_size(cdims, g.dim));
    std::vector<std::complex<double>> fs(fft::spectrum_size(fdims, g.dim), {0.0, 0.0});
    fft::r2c(cdims, g.dim, u.v.data(), cs.data());
    const double scale = static_cast<double>(fine.size()) / static_cast<double>(g.size()) /
                         static_cast<double>(fine.size());
    const int fh = fine.n / 2 + 1;
    fft::for_each_mode(g.n, g.dim, [&](std::size_t idx, const std::array<int, 3>& m) {
        for (int d = 0; d < g.dim; ++d)
            if (m[d] == g.n / 2 || m[d] == -g.n / 2) return; // drop Nyquist
        std::size_t fidx = 0;
        for (int d = 0; d < g.dim - 1; ++d) {
            int j = m[d] >= 0 ? m[d] : m[d] + fine.n;
            fidx = fidx * static_cast<std::size_t>(fine.n) + static_cast<std::size_t>(j);
        }
        fidx = fidx * static_cast<std::size_t>(fh) + static_cast<std::size_t>(m[g.dim - 1]);
        fs[fidx] = cs[idx] * scale;
    });
    Field r(fine);
    fft::c2r(fdims, g.dim, fs.data(), r.v.data());
    return r;
}

} // namespace choquard
