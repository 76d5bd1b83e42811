#pragma once

#include <cmath>
#include <stdexcept>

#include "choquard/fft.hpp"
#include "choquard/field.hpp"
#include "choquard/grid_ops.hpp"
#include "choquard/params.hpp"
#include "choquard/riesz.hpp"

namespace choquard {

/// The five scalars driving all fiber-map algebra, plus the discrete H^1
/// interface term. In the continuum grad(u+).grad(u-) vanishes almost
/// everywhere; the spectral inner product of touching sign parts does not,
/// so h1_cross keeps the discrete fiber algebra an exact restatement of the
/// discrete action. It is O(h) for touching parts and ~0 for separated ones.
struct ChoquardBrackets {
    double q_plus = 0.0;   // ||u+||_{H^1}^2
    double q_minus = 0.0;  // ||u-||_{H^1}^2
    double d_pp = 0.0;     // int (I_a * |u+|^p) |u+|^p
    double d_mm = 0.0;     // int (I_a * |u-|^p) |u-|^p
    double d_pm = 0.0;     // int (I_a * |u+|^p) |u-|^p
    double h1_cross = 0.0; // <u+, u->_{H^1}

    double q_total() const { return q_plus + q_minus + 2.0 * h1_cross; }
    double d_total() const { return d_pp + 2.0 * d_pm + d_mm; }
};

namespace detail {

/// Sharp 2/3-rule spectral mask (optional aliasing control for the
/// non-integer powers).
inline Field dealias_mask(const Field& u) {
    const Grid& g = u.grid;
    const int cut = g.n / 3;
    std::array<int, 3> dims{g.n, g.n, g.n};
    std::vector<std::complex<double>> spec(fft::spectrum_size(dims, g.dim));
    fft::r2c(dims, g.dim, u.v.data(), spec.data());
    const double norm = 1.0 / static_cast<double>(g.size());
    fft::for_each_mode(g.n, g.dim, [&](std::size_t idx, const std::array<int, 3>& m) {
        bool keep = true;
        for (int d = 0; d < g.dim; ++d)
            if (std::abs(m[d]) > cut) keep = false;
        spec[idx] *= keep ? norm : 0.0;
    });
    Field r(g);
    fft::c2r(dims, g.dim, spec.data(), r.v.data());
    return r;
}

/// sign(u)|u|^{p-1}, continuous at 0 for p > 1.
inline Field signed_power(const Field& u, double pm1) {
    Field r(u.grid);
    for (std::size_t i = 0; i < u.size(); ++i) {
        double x = u[i];
        r[i] = x == 0.0 ? 0.0 : std::copysign(std::pow(std::abs(x), pm1), x);
    }
    return r;
}

} // namespace detail

/// D(u): the Choquard double integral, or int |u|^{2p} in local mode.
inline double bracket_d(const Params& params, const RieszKernel& kernel, const Field& u) {
    Field v = params.dealias ? detail::dealias_mask(u) : u;
    if (params.mode == Mode::local_nls) {
        Field w = abs_power(v, 2.0 * params.p);
        return integrate(w);
    }
    return choquard_term(kernel, params.p, v, v);
}

/// A(u) = 1/2 ||u||_{H^1}^2 - 1/(2p) D(u).
inline double action(const Params& params, const RieszKernel& kernel, const Field& u) {
    return 0.5 * h1_norm_sq(u) - bracket_d(params, kernel, u) / (2.0 * params.p);
}

/// L^2 representative of A'(u): (1 - Delta)u - (I_a * |u|^p)|u|^{p-2}u
/// (or - |u|^{2p-2}u in local mode).
inline Field action_gradient(const Params& params, const RieszKernel& kernel, const Field& u) {
    Field linear = apply_symbol(u, [](double k2) { return 1.0 + k2; });
    Field v = params.dealias ? detail::dealias_mask(u) : u;
    Field nl(u.grid);
    if (params.mode == Mode::local_nls) {
        nl = detail::signed_power(v, 2.0 * params.p - 1.0);
    } else {
        Field conv = riesz_convolve(kernel, abs_power(v, params.p));
        Field sp = detail::signed_power(v, params.p - 1.0);
        for (std::size_t i = 0; i < nl.size(); ++i) nl[i] = conv[i] * sp[i];
    }
    if (params.dealias) nl = detail::dealias_mask(nl);
    for (std::size_t i = 0; i < linear.size(); ++i) linear[i] -= nl[i];
    return linear;
}

/// H^1 Riesz map (1 - Delta)^{-1}: the returned d satisfies
/// h1_inner(d, phi) = l2_inner(g, phi) for every grid field phi.
inline Field sobolev_precondition(const Field& g) {
    return apply_symbol(g, [](double k2) { return 1.0 / (1.0 + k2); });
}

inline ChoquardBrackets brackets(const Params& params, const RieszKernel& kernel, const Field& u) {
    auto [up, um] = split_signs(u);
    ChoquardBrackets b;

    // one pass over the two spectra for the three H^1 quadratics
    const Grid& g = u.grid;
    std::array<int, 3> dims{g.n, g.n, g.n};
    std::vector<std::complex<double>> sp(fft::spectrum_size(dims, g.dim));
    std::vector<std::complex<double>> sm(fft::spectrum_size(dims, g.dim));
    fft::r2c(dims, g.dim, up.v.data(), sp.data());
    fft::r2c(dims, g.dim, um.v.data(), sm.data());
    const double k0 = 2.0 * M_PI / g.extent;
    const double scale = g.cell_volume() / static_cast<double>(g.size());
    double qp = 0.0, qm = 0.0, qx = 0.0;
    fft::for_each_mode(g.n, g.dim, [&](std::size_t idx, const std::array<int, 3>& m) {
        double k2 = 0.0;
        for (int d = 0; d < g.dim; ++d) k2 += (k0 * m[d]) * (k0 * m[d]);
        double w = fft::hermitian_weight(m[g.dim - 1], g.n) * (1.0 + k2);
        qp += w * std::norm(sp[idx]);
        qm += w * std::norm(sm[idx]);
        qx += w * (sp[idx].real() * sm[idx].real() + sp[idx].imag() * sm[idx].imag());
    });
    b.q_plus = qp * scale;
    b.q_minus = qm * scale;
    b.h1_cross = qx * scale;

    // The cross term is a genuine interface quantity only when the sign
    // supports meet: either at adjacent nodes or across a single zero plane
    // (an exactly odd field vanishes on the reflection plane, so its parts
    // sit two nodes apart). For supports separated by a wider gap the
    // continuum value is exactly 0 and the spectral residue is aliasing
    // noise, which below p = 2 distorts the root structure of the
    // stationarity system; drop it there.
    bool touching = false;
    for (std::size_t idx = 0; idx < u.size() && !touching; ++idx) {
        if (!(up[idx] > 0.0)) continue;
        auto i = g.unindex(idx);
        for (int d = 0; d < g.dim && !touching; ++d) {
            for (int off : {-2, -1, 1, 2}) {
                auto j = i;
                j[d] = (i[d] + off + 2 * g.n) % g.n;
                if (um[g.index(j)] < 0.0) {
                    touching = true;
                    break;
                }
            }
        }
    }
    if (!touching) b.h1_cross = 0.0;

    if (params.mode == Mode::local_nls) {
        b.d_pp = integrate(abs_power(up, 2.0 * params.p));
        b.d_mm = integrate(abs_power(um, 2.0 * params.p));
        b.d_pm = 0.0;
        return b;
    }
    Field ap = abs_power(up, params.p);
    Field am = abs_power(um, params.p);
    Field cp = riesz_convolve(kernel, ap);
    Field cm = riesz_convolve(kernel, am);
    b.d_pp = l2_inner(cp, ap);
    b.d_pm = l2_inner(cp, am);
    b.d_mm = l2_inner(cm, am);
    return b;
}

} // namespace choquard
