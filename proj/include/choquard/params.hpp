#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace choquard {

enum class Mode { choquard, local_nls };

// Growth regime of the nonlinearity relative to the quadratic scaling p = 2.
enum class Regime { sublinear, boundary, superlinear };

/// Problem data for -Delta u + u = (I_alpha * |u|^p)|u|^{p-2}u on R^N,
/// or its local counterpart -Delta u + u = |u|^{2p-2}u.
struct Params {
    int dim = 2;          // N, spatial dimension (1, 2 or 3)
    double alpha = 1.0;   // Riesz potential order, 0 < alpha < N
    double p = 2.5;       // nonlinearity exponent
    Mode mode = Mode::choquard;
    bool dealias = false; // optional 2/3-rule filter on the nonlinear term

    Regime regime() const {
        if (p < 2.0) return Regime::sublinear;
        if (p > 2.0) return Regime::superlinear;
        return Regime::boundary;
    }

    // Admissible exponent window (N-2)/(N+alpha) < 1/p < N/(N+alpha).
    double p_min() const { return (dim + alpha) / dim; }
    bool has_p_max() const { return dim > 2; }
    double p_max() const { return (dim + alpha) / (dim - 2); }

    void validate() const {
        if (dim < 1 || dim > 3)
            throw std::invalid_argument("params: dimension must be 1, 2 or 3");
        if (p <= 1.0)
            throw std::invalid_argument("params: p must exceed 1");
        if (mode == Mode::choquard) {
            if (!(alpha > 0.0) || !(alpha < dim))
                throw std::invalid_argument("params: alpha must lie in (0, N)");
            if (!(p > p_min()))
                throw std::invalid_argument(
                    "params: p <= (N+alpha)/N is below the admissible range");
            if (has_p_max() && !(p < p_max()))
                throw std::invalid_argument(
                    "params: p >= (N+alpha)/(N-2) is supercritical");
        } else {
            // |u|^{2p} must be H^1-subcritical and p > 2 so the local
            // fiber algebra stays concave.
            if (!(p > 2.0))
                throw std::invalid_argument("params: local mode requires p > 2");
            if (dim > 2 && !(2.0 * p < 2.0 * dim / (dim - 2.0)))
                throw std::invalid_argument("params: 2p is supercritical for local mode");
        }
    }
};

inline const char* to_string(Mode m) {
    return m == Mode::choquard ? "choquard" : "local_nls";
}

inline const char* to_string(Regime r) {
    switch (r) {
        case Regime::sublinear: return "sublinear";
        case Regime::boundary: return "boundary";
        default: return "superlinear";
    }
}

inline Mode mode_from_string(const std::string& s) {
    if (s == "choquard") return Mode::choquard;
    if (s == "local_nls") return Mode::local_nls;
    throw std::invalid_argument("unknown mode: " + s);
}

} // namespace choquard
