#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "choquard/fft.hpp"
#include "choquard/field.hpp"

namespace choquard {

/// C^2 radial cutoff: 1 on [0, r_in], 0 on [r_out, inf), quintic smoothstep
/// between (vanishing first and second derivatives at both ends).
inline double quintic_cutoff(double r, double r_in, double r_out) {
    if (r <= r_in) return 1.0;
    if (r >= r_out) return 0.0;
    double s = (r - r_in) / (r_out - r_in);
    return 1.0 - s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
}

/// Quartic bump (1 - |x|^2)^2 on the unit ball, extended by 0. Nonnegative
/// and C^1 with closed-form integrals in 2-D:
/// int phi^p = pi/(2p+1), int |grad phi|^2 = 4 pi/3, int phi^2 = pi/5.
inline double quartic_bump(double r) {
    if (r >= 1.0) return 0.0;
    double w = 1.0 - r * r;
    return w * w;
}

/// Pointwise positive/negative parts: u = u_plus + u_minus exactly,
/// u_plus >= 0, u_minus <= 0, u_plus * u_minus = 0 at every node.
inline std::pair<Field, Field> split_signs(const Field& u) {
    Field up(u.grid), um(u.grid);
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (u[i] > 0.0) {
            up[i] = u[i];
        } else {
            um[i] = u[i];
        }
    }
    return {std::move(up), std::move(um)};
}

/// Node index of the mirror under x_d -> -x_d on the periodic grid: j -> (n-j) mod n.
/// Planes j = 0 and j = n/2 (x = -L/2 and x = 0) are fixed.
inline int mirror_index(int j, int n) { return j == 0 ? 0 : n - j; }

/// Reflection of the last axis, u(x', -x_N).
inline Field reflect_last_axis(const Field& u) {
    const Grid& g = u.grid;
    Field r(g);
    for (std::size_t idx = 0; idx < u.size(); ++idx) {
        auto i = g.unindex(idx);
        i[g.dim - 1] = mirror_index(i[g.dim - 1], g.n);
        r[g.index(i)] = u[idx];
    }
    return r;
}

/// Odd part under x_N -> -x_N: (u(x',x_N) - u(x',-x_N))/2. Idempotent, and
/// the output satisfies o(x',-x_N) = -o(x',x_N) exactly at every node pair.
inline Field antisymmetrize(const Field& u) {
    const Grid& g = u.grid;
    Field r(g);
    for (std::size_t idx = 0; idx < u.size(); ++idx) {
        auto i = g.unindex(idx);
        auto m = i;
        m[g.dim - 1] = mirror_index(i[g.dim - 1], g.n);
        r[idx] = 0.5 * (u[idx] - u[g.index(m)]);
    }
    return r;
}

/// Circular shift by whole nodes, r(i) = u(i - s mod n).
inline Field shift_nodes(const Field& u, const std::array<int, 3>& s) {
    const Grid& g = u.grid;
    Field r(g);
    for (std::size_t idx = 0; idx < u.size(); ++idx) {
        auto i = g.unindex(idx);
        for (int d = 0; d < g.dim; ++d) {
            int j = (i[d] - s[d]) % g.n;
            if (j < 0) j += g.n;
            i[d] = j;
        }
        r[idx] = u[g.index(i)];
    }
    return r;
}

enum class RecenterMode { abs_max, plus_max };

/// Circular node shift placing the maximizer of |u| (or of u_plus) at the
/// anchor node (the origin node by default). Shifts are whole nodes only, so
/// every periodic functional of the field is preserved exactly. `axis_enabled`
/// disables shifting along an axis (used to preserve oddness along the last
/// axis), and a custom anchor keeps two-bump nodal iterates interior.
inline Field recenter(const Field& u, RecenterMode mode = RecenterMode::abs_max,
                      const std::array<bool, 3>& axis_enabled = {true, true, true},
                      const std::array<int, 3>* anchor_node = nullptr) {
    const Grid& g = u.grid;
    std::size_t best = 0;
    double best_val = -1.0;
    for (std::size_t idx = 0; idx < u.size(); ++idx) {
        double val = mode == RecenterMode::abs_max ? std::abs(u[idx]) : std::max(u[idx], 0.0);
        if (val > best_val) {
            best_val = val;
            best = idx;
        }
    }
    if (best_val <= 0.0 && mode == RecenterMode::abs_max)
        throw std::invalid_argument("recenter: zero field");
    auto peak = g.unindex(best);
    std::array<int, 3> s{0, 0, 0};
    bool any = false;
    for (int d = 0; d < g.dim; ++d) {
        if (!axis_enabled[d]) continue;
        int anchor = anchor_node ? (*anchor_node)[d] : g.n / 2;
        s[d] = anchor - peak[d];
        if (s[d] != 0) any = true;
    }
    return any ? shift_nodes(u, s) : u;
}

/// Fraction of the H^1 density grad(u)^2 + u^2 carried by nodes within
/// h*ceil(0.05 n) of the box boundary on any axis.
inline double tail_mass(const Field& u) {
    const Grid& g = u.grid;
    const int band = (g.n * 5 + 99) / 100; // ceil(0.05 n) nodes
    Field dens(g);
    for (std::size_t i = 0; i < u.size(); ++i) dens[i] = u[i] * u[i];
    for (int d = 0; d < g.dim; ++d) {
        Field du = derivative(u, d);
        for (std::size_t i = 0; i < u.size(); ++i) dens[i] += du[i] * du[i];
    }
    double total = 0.0, edge = 0.0;
    for (std::size_t idx = 0; idx < u.size(); ++idx) {
        total += dens[idx];
        auto i = g.unindex(idx);
        for (int d = 0; d < g.dim; ++d) {
            int dist = std::min(i[d], g.n - i[d]); // node distance to boundary
            if (dist < band) {
                edge += dens[idx];
                break;
            }
        }
    }
    return total > 0.0 ? edge / total : 0.0;
}

} // namespace choquard
