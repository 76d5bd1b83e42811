#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "choquard/functional.hpp"
#include "choquard/grid_ops.hpp"
#include "choquard/manifold.hpp"
#include "choquard/params.hpp"
#include "choquard/riesz.hpp"

namespace choquard {

struct GluedFamilyParams {
    double separation = 4.0;    // R: eta = 1 inside R, support inside 2R, bumps at +/- 2R
    double cutoff_inner = 1.0;  // eta = 1 within cutoff_inner * R
    double cutoff_outer = 2.0;  // support within cutoff_outer * R

    void validate() const {
        if (!(separation > 0.0)) throw std::invalid_argument("glued: R must be positive");
        if (!(cutoff_inner > 0.0) || !(cutoff_inner < cutoff_outer))
            throw std::invalid_argument("glued: need 0 < cutoff_inner < cutoff_outer");
    }
};

/// The odd two-bump test function u_R(x) = (eta_R v)(x', x_N - 2R)
///                                        - (eta_R v)(x', -x_N - 2R).
/// The translation is snapped to whole nodes so the field is exactly odd and
/// the two supports are disjoint. v must be centered at the origin node.
inline Field glued_odd_function(const Field& v, const GluedFamilyParams& gp) {
    gp.validate();
    const Grid& g = v.grid;
    const double r_support = gp.cutoff_outer * gp.separation;
    if (2.0 * gp.separation + r_support > 0.5 * g.extent - g.spacing())
        throw std::invalid_argument("glued: bumps do not fit the box (needs 4R <= L/2)");

    Field cut(g);
    const double r_in = gp.cutoff_inner * gp.separation;
    for (std::size_t idx = 0; idx < v.size(); ++idx) {
        auto i = g.unindex(idx);
        double r2 = 0.0;
        for (int d = 0; d < g.dim; ++d) {
            double x = g.coord(i[d]);
            r2 += x * x;
        }
        cut[idx] = v[idx] * quintic_cutoff(std::sqrt(r2), r_in, r_support);
    }
    std::array<int, 3> sh{0, 0, 0};
    sh[g.dim - 1] = static_cast<int>(std::lround(2.0 * gp.separation / g.spacing()));
    Field upper = shift_nodes(cut, sh);
    return upper - reflect_last_axis(upper);
}

struct GapRow {
    double r_requested = 0.0;
    double r_effective = 0.0; // after snapping the 2R offset to whole nodes
    double t_scale = 0.0;     // Nehari scaling t_R
    double action = 0.0;      // A(t_R u_R)
    double gap = 0.0;         // 2 c_0 - A(t_R u_R)
    bool valid = false;
    std::string note;
};

struct GapCurve {
    std::vector<GapRow> rows;
    double fitted_exponent = 0.0; // log-log slope of the gap against R
    bool fit_valid = false;
    int embed_factor = 1;
};

/// Embeds a field into a box enlarged `factor` times at identical spacing
/// (zero extension; origins aligned on nodes).
inline Field embed_in_larger_box(const Field& u, int factor) {
    const Grid& g = u.grid;
    if (factor == 1) return u;
    Grid big{g.dim, g.n * factor, g.extent * factor};
    Field r(big);
    const int off = (big.n - g.n) / 2;
    for (std::size_t idx = 0; idx < u.size(); ++idx) {
        auto i = g.unindex(idx);
        std::array<int, 3> j{0, 0, 0};
        for (int d = 0; d < g.dim; ++d) j[d] = i[d] + off;
        r[big.index(j)] = u[idx];
    }
    return r;
}

/// Evaluates A(t_R u_R) along a list of separations and fits the power law of
/// the gap below 2 c_0. The box is enlarged (same spacing) when the requested
/// separations do not fit the groundstate's own box.
inline GapCurve strict_gap_curve(const Params& params, const Field& groundstate,
                                 const std::vector<double>& r_list, double c0) {
    params.validate();
    GapCurve out;
    if (r_list.empty()) return out;
    const Grid& g = groundstate.grid;
    double r_max = *std::max_element(r_list.begin(), r_list.end());
    int factor = 1;
    while (factor < 16 && 4.0 * r_max > 0.5 * factor * g.extent - 2.0 * g.spacing()) factor *= 2;
    out.embed_factor = factor;

    Field v = embed_in_larger_box(groundstate, factor);
    RieszKernel kernel = build_kernel(v.grid, params.alpha, KernelMode::truncated_kernel);

    for (double r : r_list) {
        GapRow row;
        row.r_requested = r;
        const double h = v.grid.spacing();
        int sh = static_cast<int>(std::lround(2.0 * r / h));
        row.r_effective = 0.5 * sh * h;
        GluedFamilyParams gp;
        gp.separation = row.r_effective;
        try {
            Field ur = glued_odd_function(v, gp);
            double q = h1_norm_sq(ur);
            double d = bracket_d(params, kernel, ur);
            row.t_scale = nehari_scale(params, q, d);
            row.action = nehari_projected_action(params, q, d);
            row.gap = 2.0 * c0 - row.action;
            row.valid = true;
        } catch (const std::exception& e) {
            row.note = e.what();
        }
        out.rows.push_back(row);
    }

    // least-squares slope of log(gap) vs log(R) over rows with a positive gap
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (const auto& row : out.rows) {
        if (!row.valid || !(row.gap > 0.0)) continue;
        double x = std::log(row.r_effective), y = std::log(row.gap);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++m;
    }
    if (m >= 2) {
        out.fitted_exponent = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        out.fit_valid = true;
    }
    return out;
}

struct DegeneracyFamilyParams {
    double delta = 1.0;              // bump scale
    std::array<int, 3> a_node{0, 0, 0}; // node index of the bump center
    double truncation_inner = 0.0;   // groundstate cutoff radii; 0 = auto
    double truncation_outer = 0.0;
};

struct DegeneracyPoint {
    Field projected;      // s+ u_delta^+ + s- u_delta^-
    FiberPoint fiber;
    double s_plus = 1.0;
    double s_minus = 1.0;
    double action = 0.0;
    double h1_distance = 0.0; // H^1 distance of the projected field to the truncated groundstate
    bool converged = false;
    double v_at_a = 0.0;      // (I_alpha * |u0|^p)(a), for the small-delta limit
};

/// The p < 2 perturbation u_delta = u0 - delta^{2/(2-p)} phi((x - a)/delta),
/// projected onto the Nehari nodal set by the same safeguarded Newton as
/// nodal_project, warm-started at the small-delta limit point. u0 is first
/// truncated by a quintic cutoff so its support stays clear of the bump
/// (the compact-support density step), then rescaled back onto the Nehari
/// manifold.
inline DegeneracyPoint degeneracy_family(const Params& params, const RieszKernel& kernel,
                                         const Field& u0, const DegeneracyFamilyParams& dp) {
    params.validate();
    if (!(params.p < 2.0))
        throw std::invalid_argument("degeneracy_family: requires the sublinear regime p < 2");
    const Grid& g = u0.grid;
    require_same_grid(kernel.grid, g);

    auto an = dp.a_node;
    double dist_a = 0.0;
    for (int d = 0; d < g.dim; ++d) dist_a += g.coord(an[d]) * g.coord(an[d]);
    dist_a = std::sqrt(dist_a);
    double r_out = dp.truncation_outer > 0.0 ? dp.truncation_outer : 0.80 * dist_a;
    double r_in = dp.truncation_inner > 0.0 ? dp.truncation_inner : 0.60 * dist_a;
    if (!(dp.delta > 0.0) || dp.delta + r_out >= dist_a)
        throw std::invalid_argument("degeneracy_family: bump overlaps the truncated groundstate");

    // compactly supported positive Nehari element close to u0
    Field uc(g);
    for (std::size_t idx = 0; idx < u0.size(); ++idx) {
        auto i = g.unindex(idx);
        double r2 = 0.0;
        for (int d = 0; d < g.dim; ++d) r2 += g.coord(i[d]) * g.coord(i[d]);
        uc[idx] = std::max(u0[idx], 0.0) * quintic_cutoff(std::sqrt(r2), r_in, r_out);
    }
    double t0 = nehari_scale(params, h1_norm_sq(uc), bracket_d(params, kernel, uc));
    uc = t0 * uc;

    DegeneracyPoint out;
    out.v_at_a = riesz_convolve(kernel, abs_power(uc, params.p))[g.index(an)];

    const double amp = std::pow(dp.delta, 2.0 / (2.0 - params.p));
    Field ud = uc;
    for (std::size_t idx = 0; idx < ud.size(); ++idx) {
        auto i = g.unindex(idx);
        double r2 = 0.0;
        for (int d = 0; d < g.dim; ++d) {
            double dx = g.coord(i[d]) - g.coord(an[d]);
            r2 += dx * dx;
        }
        ud[idx] -= amp * quartic_bump(std::sqrt(r2) / dp.delta);
    }

    ChoquardBrackets b = brackets(params, kernel, ud);
    if (!(b.q_minus > 0.0))
        throw std::invalid_argument("degeneracy_family: bump too small to create a negative part");

    // small-delta limit of the physical scalings: s+ -> 1,
    // s- -> (V(a) int phi^p / int |grad phi|^2)^{1/(2-p)}
    double s_minus_limit = 1.0;
    if (g.dim == 2) {
        double int_phi_p = M_PI / (2.0 * params.p + 1.0);
        double int_grad2 = 4.0 * M_PI / 3.0;
        s_minus_limit = std::pow(out.v_at_a * int_phi_p / int_grad2, 1.0 / (2.0 - params.p));
    }
    FiberPoint init{1.0, std::pow(s_minus_limit, params.p)};
    NodalProjection proj = nodal_project(params, b, 1e-11, &init);
    out.converged = proj.converged;
    out.fiber = proj.fiber;
    out.s_plus = proj.s_plus;
    out.s_minus = proj.s_minus;
    auto [up, um] = split_signs(ud);
    out.projected = proj.s_plus * up + proj.s_minus * um;
    out.action = fiber_value(params, b, proj.fiber);
    out.h1_distance = std::sqrt(std::max(h1_norm_sq(out.projected - uc), 0.0));
    return out;
}

/// Two-point rearrangement across the node hyperplane {x_axis = coord(plane)}:
/// each node pair (x, sigma_H x) is replaced by (max, min), with the max on
/// the H side. A permutation of sample pairs, idempotent.
inline Field polarize(const Field& u, int axis, int plane_node) {
    const Grid& g = u.grid;
    if (axis < 0 || axis >= g.dim) throw std::invalid_argument("polarize: axis out of range");
    if (plane_node < 0 || plane_node >= g.n)
        throw std::invalid_argument("polarize: hyperplane not on a node");
    Field r = u;
    for (std::size_t idx = 0; idx < u.size(); ++idx) {
        auto i = g.unindex(idx);
        int d = i[axis] - plane_node;
        d %= g.n;
        if (d < 0) d += g.n;
        if (d == 0 || 2 * d == g.n) continue; // fixed planes
        if (d > g.n / 2) continue;            // handled from the H side
        auto j = i;
        int mirrored = (2 * plane_node - i[axis]) % g.n;
        if (mirrored < 0) mirrored += g.n;
        j[axis] = mirrored;
        std::size_t jdx = g.index(j);
        r[idx] = std::max(u[idx], u[jdx]);
        r[jdx] = std::min(u[idx], u[jdx]);
    }
    return r;
}

struct DecayRow {
    double r_lo = 0.0, r_hi = 0.0;
    double ratio_mean = 0.0;  // mean of (I_alpha * |v|^p)(x) / I_alpha(x) over the annulus
    double dev_max = 0.0;     // sup |ratio / int |v|^p - 1| over the annulus
    double mean_log_v = 0.0;  // mean of log |v| (tail-decay diagnostic)
    int samples = 0;
};

struct DecayTable {
    std::vector<DecayRow> rows;
    double int_v_p = 0.0;       // int |v|^p, the predicted far-field ratio
    double sup_dev_quarter = 0.0; // sup deviation on the annulus [L/4, 3L/8]
    double log_slope = 0.0;     // least-squares slope of mean log|v| against r
};

/// Samples (I_alpha * |v|^p)/I_alpha on annuli; the ratio tends to int |v|^p
/// for decaying v.
inline DecayTable decay_diagnostic(const Params& params, const RieszKernel& kernel,
                                   const Field& v) {
    const Grid& g = v.grid;
    require_same_grid(kernel.grid, g);
    DecayTable out;
    Field conv = riesz_convolve(kernel, abs_power(v, params.p));
    out.int_v_p = integrate(abs_power(v, params.p));
    const double a_alpha = kernel.a_alpha;
    const double alpha = kernel.alpha;

    const int nbins = 8;
    const double r_max = 0.375 * g.extent; // 3L/8
    const double dr = r_max / nbins;
    out.rows.assign(nbins, DecayRow{});
    for (int bin = 0; bin < nbins; ++bin) {
        out.rows[bin].r_lo = bin * dr;
        out.rows[bin].r_hi = (bin + 1) * dr;
    }
    std::vector<double> sum_ratio(nbins, 0.0), sum_logv(nbins, 0.0);
    for (std::size_t idx = 0; idx < v.size(); ++idx) {
        auto i = g.unindex(idx);
        double r2 = 0.0;
        for (int d = 0; d < g.dim; ++d) r2 += g.coord(i[d]) * g.coord(i[d]);
        double r = std::sqrt(r2);
        if (r <= 0.0 || r >= r_max) continue;
        int bin = static_cast<int>(r / dr);
        double i_alpha = a_alpha * std::pow(r, alpha - g.dim);
        double ratio = conv[idx] / i_alpha;
        sum_ratio[bin] += ratio;
        sum_logv[bin] += std::log(std::max(std::abs(v[idx]), 1e-300));
        out.rows[bin].samples += 1;
        double dev = std::abs(ratio / out.int_v_p - 1.0);
        out.rows[bin].dev_max = std::max(out.rows[bin].dev_max, dev);
        if (r >= 0.25 * g.extent) out.sup_dev_quarter = std::max(out.sup_dev_quarter, dev);
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (int bin = 0; bin < nbins; ++bin) {
        if (out.rows[bin].samples == 0) continue;
        out.rows[bin].ratio_mean = sum_ratio[bin] / out.rows[bin].samples;
        out.rows[bin].mean_log_v = sum_logv[bin] / out.rows[bin].samples;
        double x = 0.5 * (out.rows[bin].r_lo + out.rows[bin].r_hi);
        double y = out.rows[bin].mean_log_v;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++m;
    }
    if (m >= 2) out.log_slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    return out;
}

} // namespace choquard
