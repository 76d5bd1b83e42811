#include <catch2/catch.hpp>

#include <cmath>

#include "choquard/fft.hpp"
#include "choquard/field.hpp"
#include "choquard/functional.hpp"
#include "choquard/grid_ops.hpp"
#include "choquard/riesz.hpp"

using namespace choquard;

namespace {
Grid grid2d() { return Grid{2, 64, 20.0}; }
}

TEST_CASE("h1_inner is zero on the zero field and symmetric") {
    Grid g = grid2d();
    Field zero(g);
    Field u = smooth_noise(g, 11);
    Field v = smooth_noise(g, 12);
    REQUIRE(h1_inner(zero, v) == 0.0);

    Field other(Grid{2, 32, 20.0});
    REQUIRE_THROWS_AS(h1_inner(u, other), std::invalid_argument);
    RieszKernel k = build_kernel(g, 1.0, KernelMode::spectral);
    REQUIRE_THROWS_AS(riesz_convolve(k, other), std::invalid_argument);
    double a = h1_inner(u, v), b = h1_inner(v, u);
    REQUIRE(a == Approx(b).epsilon(1e-13));

    // bilinearity spot check
    Field w = 2.0 * u + v;
    REQUIRE(h1_inner(w, v) == Approx(2.0 * a + h1_inner(v, v)).epsilon(1e-12));
}

TEST_CASE("h1_inner of a resolved Gaussian matches the closed form") {
    // u = exp(-|x|^2/2) in 2-D: int u^2 = pi, int |grad u|^2 = pi.
    Grid g = grid2d();
    Field u = gaussian(g, {0.0, 0.0, 0.0}, 1.0);
    REQUIRE(h1_norm_sq(u) == Approx(2.0 * M_PI).epsilon(1e-10));
}

TEST_CASE("spectral Plancherel identity against the physical-space sum") {
    Grid g = grid2d();
    Field u = smooth_noise(g, 21); // band-limited by construction
    double phys = l2_norm_sq(u);
    for (int d = 0; d < g.dim; ++d) phys += l2_norm_sq(derivative(u, d));
    REQUIRE(h1_norm_sq(u) == Approx(phys).epsilon(1e-10));
}

TEST_CASE("split_signs reassembles bit-exactly with disjoint signs") {
    Grid g = grid2d();
    Field u = smooth_noise(g, 31);
    auto [up, um] = split_signs(u);
    for (std::size_t i = 0; i < u.size(); ++i) {
        REQUIRE(up[i] >= 0.0);
        REQUIRE(um[i] <= 0.0);
        REQUIRE(up[i] * um[i] == 0.0);
        REQUIRE(up[i] + um[i] == u[i]);
    }
}

TEST_CASE("split_signs of a one-signed field") {
    Grid g = grid2d();
    Field u = gaussian(g, {0.0, 0.0, 0.0}, 2.0);
    auto [up, um] = split_signs(u);
    REQUIRE(um.max_abs() == 0.0);
    for (std::size_t i = 0; i < u.size(); ++i) REQUIRE(up[i] == u[i]);
}

TEST_CASE("split_signs of an odd dipole mirrors the parts") {
    Grid g = grid2d();
    Field u = antisymmetrize(smooth_noise(g, 32));
    auto [up, um] = split_signs(u);
    Field refl = reflect_last_axis(up);
    for (std::size_t i = 0; i < u.size(); ++i) REQUIRE(um[i] == -refl[i]);
}

TEST_CASE("antisymmetrize: defining property, idempotence, even kill") {
    Grid g = grid2d();
    Field u = smooth_noise(g, 41);
    Field o = antisymmetrize(u);

    Field refl = reflect_last_axis(o);
    for (std::size_t i = 0; i < o.size(); ++i) REQUIRE(refl[i] == -o[i]);

    Field oo = antisymmetrize(o);
    for (std::size_t i = 0; i < o.size(); ++i) REQUIRE(oo[i] == o[i]);

    Field even = u + reflect_last_axis(u);
    REQUIRE(antisymmetrize(even).max_abs() == 0.0);
}

TEST_CASE("recenter anchors the peak and is shift invariant") {
    Grid g = grid2d();
    Field u = gaussian(g, {3.0, -4.0, 0.0}, 1.5);
    Field r = recenter(u);
    auto peak = g.unindex(0);
    double best = -1.0;
    for (std::size_t i = 0; i < r.size(); ++i)
        if (std::abs(r[i]) > best) {
            best = std::abs(r[i]);
            peak = g.unindex(i);
        }
    for (int d = 0; d < g.dim; ++d) REQUIRE(peak[d] == g.n / 2);

    REQUIRE(recenter(r).v == r.v); // already anchored

    Field shifted = shift_nodes(u, {5, -7, 0});
    REQUIRE(recenter(shifted).v == recenter(u).v);

    REQUIRE_THROWS_AS(recenter(Field(g)), std::invalid_argument);
}

TEST_CASE("recenter preserves the H^1 norm and the Choquard brackets") {
    Grid g = grid2d();
    Params params{2, 1.0, 2.5, Mode::choquard};
    RieszKernel kernel = build_kernel(g, params.alpha, KernelMode::spectral);
    Field u = gaussian(g, {2.0, 1.0, 0.0}, 1.5) - gaussian(g, {-3.0, 2.0, 0.0}, 1.0);
    Field r = recenter(u);
    REQUIRE(h1_norm_sq(r) == Approx(h1_norm_sq(u)).epsilon(1e-12));
    ChoquardBrackets bu = brackets(params, kernel, u);
    ChoquardBrackets br = brackets(params, kernel, r);
    REQUIRE(br.q_plus == Approx(bu.q_plus).epsilon(1e-12));
    REQUIRE(br.q_minus == Approx(bu.q_minus).epsilon(1e-12));
    REQUIRE(br.d_pp == Approx(bu.d_pp).epsilon(1e-11));
    REQUIRE(br.d_mm == Approx(bu.d_mm).epsilon(1e-11));
    REQUIRE(br.d_pm == Approx(bu.d_pm).epsilon(1e-11).margin(1e-14));
    REQUIRE(action(params, kernel, r) == Approx(action(params, kernel, u)).epsilon(1e-12));
}

TEST_CASE("tail_mass flags boundary-heavy fields") {
    Grid g = grid2d();
    Field centered = gaussian(g, {0.0, 0.0, 0.0}, 1.0);
    Field edge = gaussian(g, {0.5 * g.extent - 1.0, 0.0, 0.0}, 1.0);
    REQUIRE(tail_mass(centered) < 1e-12);
    REQUIRE(tail_mass(edge) > 0.1);
}

TEST_CASE("params validation enforces the admissible exponent window") {
    Params ok{2, 1.0, 2.5, Mode::choquard};
    REQUIRE_NOTHROW(ok.validate());
    REQUIRE(ok.regime() == Regime::superlinear);

    Params sub{2, 1.0, 1.8, Mode::choquard};
    REQUIRE(sub.regime() == Regime::sublinear);
    REQUIRE_NOTHROW(sub.validate());

    Params boundary{2, 1.0, 2.0, Mode::choquard};
    REQUIRE(boundary.regime() == Regime::boundary);

    Params bad_alpha{2, 2.5, 2.5, Mode::choquard};
    REQUIRE_THROWS_AS(bad_alpha.validate(), std::invalid_argument);

    Params below{2, 1.0, 1.2, Mode::choquard}; // p <= (N+alpha)/N = 1.5
    REQUIRE_THROWS_AS(below.validate(), std::invalid_argument);

    Params super{3, 1.0, 4.5, Mode::choquard}; // p >= (N+alpha)/(N-2) = 4
    REQUIRE_THROWS_AS(super.validate(), std::invalid_argument);
}
