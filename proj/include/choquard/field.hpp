#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "choquard/grid.hpp"

namespace choquard {

/// Real scalar sample values on a Grid, one per node. Plain value type;
/// every operation below returns a fresh field.
struct Field {
    Grid grid;
    std::vector<double> v;

    Field() = default;
    explicit Field(const Grid& g) : grid(g), v(g.size(), 0.0) {}
    Field(const Grid& g, std::vector<double> data) : grid(g), v(std::move(data)) {
        if (v.size() != g.size()) throw std::invalid_argument("field: size mismatch");
    }

    double& operator[](std::size_t i) { return v[i]; }
    double operator[](std::size_t i) const { return v[i]; }
    std::size_t size() const { return v.size(); }

    bool all_finite() const {
        for (double x : v)
            if (!std::isfinite(x)) return false;
        return true;
    }

    double max_abs() const {
        double m = 0.0;
        for (double x : v) m = std::max(m, std::abs(x));
        return m;
    }
};

inline Field operator+(const Field& a, const Field& b) {
    require_same_grid(a.grid, b.grid);
    Field r(a.grid);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

inline Field operator-(const Field& a, const Field& b) {
    require_same_grid(a.grid, b.grid);
    Field r(a.grid);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

inline Field operator*(double s, const Field& a) {
    Field r(a.grid);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = s * a[i];
    return r;
}

inline Field operator-(const Field& a) { return -1.0 * a; }

inline void axpy(double s, const Field& x, Field& y) {
    require_same_grid(x.grid, y.grid);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += s * x[i];
}

/// Trapezoid quadrature on the periodic box: h^N * sum of samples.
inline double integrate(const Field& u) {
    double s = 0.0;
    for (double x : u.v) s += x;
    return s * u.grid.cell_volume();
}

inline double l2_inner(const Field& a, const Field& b) {
    require_same_grid(a.grid, b.grid);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s * a.grid.cell_volume();
}

inline double l2_norm_sq(const Field& a) { return l2_inner(a, a); }

/// Samples f(x) at the grid nodes.
inline Field sample(const Grid& g, const std::function<double(const std::array<double, 3>&)>& f) {
    Field u(g);
    std::array<int, 3> i{0, 0, 0};
    for (std::size_t idx = 0; idx < u.size(); ++idx) {
        i = g.unindex(idx);
        std::array<double, 3> x{0.0, 0.0, 0.0};
        for (int d = 0; d < g.dim; ++d) x[d] = g.coord(i[d]);
        u[idx] = f(x);
    }
    return u;
}

/// Isotropic Gaussian exp(-|x - c|^2 / (2 sigma^2)).
inline Field gaussian(const Grid& g, const std::array<double, 3>& center, double sigma) {
    return sample(g, [&](const std::array<double, 3>& x) {
        double r2 = 0.0;
        for (int d = 0; d < g.dim; ++d) {
            double dx = x[d] - center[d];
            r2 += dx * dx;
        }
        return std::exp(-0.5 * r2 / (sigma * sigma));
    });
}

/// Deterministic smooth noise: independent N(0,1) node values damped by a
/// Gaussian spectral envelope would need an FFT; instead superpose a few
/// seeded random-phase plane waves, which is band-limited by construction.
inline Field smooth_noise(const Grid& g, std::uint64_t seed, int n_waves = 24, int k_max = 6) {
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
    std::uniform_int_distribution<int> ki(-k_max, k_max);
    std::uniform_real_distribution<double> ph(0.0, 2.0 * M_PI);
    std::normal_distribution<double> amp(0.0, 1.0);
    struct Wave {
        std::array<int, 3> k;
        double phase, a;
    };
    std::vector<Wave> waves(static_cast<std::size_t>(n_waves));
    for (auto& w : waves) {
        w.k = {ki(rng), ki(rng), ki(rng)};
        w.phase = ph(rng);
        w.a = amp(rng);
    }
    const double two_pi_over_l = 2.0 * M_PI / g.extent;
    Field u(g);
    for (std::size_t idx = 0; idx < u.size(); ++idx) {
        auto i = g.unindex(idx);
        double val = 0.0;
        for (const auto& w : waves) {
            double arg = w.phase;
            for (int d = 0; d < g.dim; ++d)
                arg += two_pi_over_l * w.k[d] * g.coord(i[d]);
            val += w.a * std::cos(arg);
        }
        u[idx] = val / std::sqrt(static_cast<double>(n_waves));
    }
    return u;
}

} // namespace choquard
