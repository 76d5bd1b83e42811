#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace choquard {

/// Cubic periodic box [-L/2, L/2)^N sampled on n nodes per axis,
/// x_j = -L/2 + j*h with h = L/n. The origin is always a node (j = n/2).
struct Grid {
    int dim = 2;
    int n = 64;          // nodes per axis, power of two
    double extent = 20;  // box length L

    double spacing() const { return extent / n; }

    std::size_t size() const {
        std::size_t s = 1;
        for (int d = 0; d < dim; ++d) s *= static_cast<std::size_t>(n);
        return s;
    }

    double coord(int j) const { return -0.5 * extent + j * spacing(); }

    // Row-major, last axis contiguous (FFTW convention).
    std::size_t index(const std::array<int, 3>& i) const {
        std::size_t idx = 0;
        for (int d = 0; d < dim; ++d)
            idx = idx * static_cast<std::size_t>(n) + static_cast<std::size_t>(i[d]);
        return idx;
    }

    std::array<int, 3> unindex(std::size_t idx) const {
        std::array<int, 3> i{0, 0, 0};
        for (int d = dim - 1; d >= 0; --d) {
            i[d] = static_cast<int>(idx % static_cast<std::size_t>(n));
            idx /= static_cast<std::size_t>(n);
        }
        return i;
    }

    double cell_volume() const {
        double v = 1.0;
        for (int d = 0; d < dim; ++d) v *= spacing();
        return v;
    }

    bool operator==(const Grid&) const = default;

    void validate() const {
        if (dim < 1 || dim > 3) throw std::invalid_argument("grid: dimension must be 1, 2 or 3");
        if (n < 4 || (n & (n - 1)) != 0)
            throw std::invalid_argument("grid: n must be a power of two >= 4");
        if (!(extent > 0)) throw std::invalid_argument("grid: extent must be positive");
    }
};

inline void require_same_grid(const Grid& a, const Grid& b) {
    if (!(a == b)) throw std::invalid_argument("grid mismatch");
}

} // namespace choquard
