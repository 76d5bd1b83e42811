#include <catch2/catch.hpp>

#include <cmath>
#include <random>

#include "choquard/functional.hpp"
#include "choquard/grid_ops.hpp"
#include "choquard/manifold.hpp"

using namespace choquard;

namespace {

const Params kParams{2, 1.0, 2.5, Mode::choquard};

Grid grid2d() { return Grid{2, 64, 20.0}; }

// two sign-separated bumps with randomized centers, widths and amplitudes
Field two_bump_field(const Grid& g, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> amp(0.5, 2.0);
    std::uniform_real_distribution<double> width(0.6, 1.1);
    std::uniform_real_distribution<double> off(-1.5, 1.5);
    Field plus = gaussian(g, {off(rng), 5.0 + off(rng), 0.0}, width(rng));
    Field minus = gaussian(g, {off(rng), -5.0 + off(rng), 0.0}, width(rng));
    return amp(rng) * plus - amp(rng) * minus;
}

// 1-D bisection on phi(t) = t^2 q - t^{2p} d, the independent root oracle
double nehari_bisection(double p, double q, double d) {
    auto phi = [&](double t) { return t * t * q - std::pow(t, 2.0 * p) * d; };
    double lo = 1e-8, hi = 1e8;
    REQUIRE(phi(lo) > 0.0);
    REQUIRE(phi(hi) < 0.0);
    for (int it = 0; it < 200; ++it) {
        double mid = std::sqrt(lo * hi);
        (phi(mid) > 0.0 ? lo : hi) = mid;
    }
    return std::sqrt(lo * hi);
}

// exhaustive fiber maximization: coarse scan, then a 400 x 400 log-spaced
// refinement window around the coarse maximizer
FiberPoint fiber_grid_oracle(const Params& params, const ChoquardBrackets& b) {
    auto val = [&](double tp, double tm) { return fiber_value(params, b, {tp, tm}); };
    double bp = 0.0, bm = 0.0, best = -1e300;
    for (int i = 0; i < 400; ++i)
        for (int j = 0; j < 400; ++j) {
            double tp = std::pow(10.0, -3.0 + 6.0 * i / 399.0);
            double tm = std::pow(10.0, -3.0 + 6.0 * j / 399.0);
            double v = val(tp, tm);
            if (v > best) {
                best = v;
                bp = tp;
                bm = tm;
            }
        }
    double lp = std::log(bp), lm = std::log(bm);
    const double w = std::log(10.0) * 6.0 / 399.0; // one coarse cell
    best = -1e300;
    double rp = 0.0, rm = 0.0;
    for (int i = 0; i < 400; ++i)
        for (int j = 0; j < 400; ++j) {
            double tp = std::exp(lp - w + 2.0 * w * i / 399.0);
            double tm = std::exp(lm - w + 2.0 * w * j / 399.0);
            double v = val(tp, tm);
            if (v > best) {
                best = v;
                rp = tp;
                rm = tm;
            }
        }
    return {rp, rm};
}

} // namespace

TEST_CASE("nehari_scale closed form") {
    REQUIRE(nehari_scale(kParams, 3.7, 3.7) == Approx(1.0).epsilon(1e-14));
    REQUIRE_THROWS_AS(nehari_scale(kParams, 1.0, 0.0), std::invalid_argument);
    REQUIRE_THROWS_AS(nehari_scale(kParams, 1.0, -1.0), std::invalid_argument);

    // homogeneity: q ~ lambda^2, d ~ lambda^{2p}, so t(lambda u) = t(u)/lambda
    double q = 2.3, d = 0.7, lam = 1.9;
    double t1 = nehari_scale(kParams, q, d);
    double t2 = nehari_scale(kParams, lam * lam * q, std::pow(lam, 2.0 * kParams.p) * d);
    REQUIRE(t2 == Approx(t1 / lam).epsilon(1e-13));
}

TEST_CASE("nehari_scale agrees with a 1-D root finder") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> U(0.1, 10.0);
    for (int i = 0; i < 20; ++i) {
        double q = U(rng), d = U(rng);
        REQUIRE(nehari_scale(kParams, q, d) ==
                Approx(nehari_bisection(kParams.p, q, d)).epsilon(1e-10));
    }
}

TEST_CASE("fiber_value at small t tends to zero and matches the action on the nodal set") {
    Grid g = grid2d();
    RieszKernel k = build_kernel(g, kParams.alpha, KernelMode::truncated_kernel);
    Field u = two_bump_field(g, 1);
    ChoquardBrackets b = brackets(kParams, k, u);
    REQUIRE(std::abs(fiber_value(kParams, b, {1e-12, 1e-12})) < 1e-7);

    NodalProjection proj = nodal_project(kParams, b);
    REQUIRE(proj.converged);
    auto [up, um] = split_signs(u);
    Field w = proj.s_plus * up + proj.s_minus * um;
    ChoquardBrackets bw = brackets(kParams, k, w);
    double aw = action(kParams, k, w);
    REQUIRE(fiber_value(kParams, bw, {1.0, 1.0}) == Approx(aw).epsilon(1e-12));

    // (1,1) is the maximum over the fiber for p > 2
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int i = 0; i < 50; ++i) {
        FiberPoint fp{std::pow(10.0, U(rng)), std::pow(10.0, U(rng))};
        REQUIRE(fiber_value(kParams, bw, fp) <= aw * (1.0 + 1e-12));
    }
}

TEST_CASE("nodal_project: fixed point, odd symmetry, degenerate input") {
    Grid g = grid2d();
    RieszKernel k = build_kernel(g, kParams.alpha, KernelMode::truncated_kernel);

    Field u = two_bump_field(g, 2);
    ChoquardBrackets b = brackets(kParams, k, u);
    NodalProjection proj = nodal_project(kParams, b);
    REQUIRE(proj.converged);
    REQUIRE(proj.residual <= 1e-10);
    auto [up, um] = split_signs(u);
    Field w = proj.s_plus * up + proj.s_minus * um;
    NodalProjection again = nodal_project(kParams, brackets(kParams, k, w));
    REQUIRE(again.fiber.t_plus == Approx(1.0).margin(1e-8));
    REQUIRE(again.fiber.t_minus == Approx(1.0).margin(1e-8));

    Field odd = antisymmetrize(two_bump_field(g, 3));
    NodalProjection po = nodal_project(kParams, brackets(kParams, k, odd));
    REQUIRE(po.fiber.t_plus == Approx(po.fiber.t_minus).epsilon(1e-10));

    Field one_signed = gaussian(g, {0, 0, 0}, 1.0);
    REQUIRE_THROWS_AS(nodal_project(kParams, brackets(kParams, k, one_signed)),
                      std::invalid_argument);
}

TEST_CASE("nodal_project agrees with the exhaustive fiber grid oracle") {
    Grid g = grid2d();
    RieszKernel k = build_kernel(g, kParams.alpha, KernelMode::truncated_kernel);
    for (int s = 0; s < 5; ++s) {
        Field u = two_bump_field(g, 10 + s);
        ChoquardBrackets b = brackets(kParams, k, u);
        NodalProjection proj = nodal_project(kParams, b);
        FiberPoint oracle = fiber_grid_oracle(kParams, b);
        REQUIRE(proj.fiber.t_plus == Approx(oracle.t_plus).epsilon(1e-3));
        REQUIRE(proj.fiber.t_minus == Approx(oracle.t_minus).epsilon(1e-3));
    }
}

TEST_CASE("nodal_project scale invariance") {
    Grid g = grid2d();
    RieszKernel k = build_kernel(g, kParams.alpha, KernelMode::truncated_kernel);
    Field u = two_bump_field(g, 20);
    const double lam = 2.7;
    NodalProjection p1 = nodal_project(kParams, brackets(kParams, k, u));
    NodalProjection p2 = nodal_project(kParams, brackets(kParams, k, lam * u));
    REQUIRE(p2.s_plus == Approx(p1.s_plus / lam).epsilon(1e-9));
    REQUIRE(p2.s_minus == Approx(p1.s_minus / lam).epsilon(1e-9));
}

TEST_CASE("xi_map branches and zero set") {
    Grid g = grid2d();
    RieszKernel k = build_kernel(g, kParams.alpha, KernelMode::truncated_kernel);

    Field pos = gaussian(g, {0, 0, 0}, 1.5);
    auto [xp0, xm0] = xi_map(kParams, k, pos);
    REQUIRE(xm0 == -1.0);
    REQUIRE(xp0 > -1.0);

    Field u = two_bump_field(g, 30);
    ChoquardBrackets b = brackets(kParams, k, u);
    NodalProjection proj = nodal_project(kParams, b);
    auto [up, um] = split_signs(u);
    Field w = proj.s_plus * up + proj.s_minus * um;
    auto [xp, xm] = xi_map(kParams, k, w);
    REQUIRE(xp == Approx(0.0).margin(1e-8));
    REQUIRE(xm == Approx(0.0).margin(1e-8));

    auto [fp, fm] = xi_map(kParams, k, u);
    auto [gp, gm] = xi_map(kParams, k, -1.0 * u);
    REQUIRE(gp == Approx(fm).epsilon(1e-12));
    REQUIRE(gm == Approx(fp).epsilon(1e-12));
}

TEST_CASE("fiber map is concave for p > 2") {
    Grid g = grid2d();
    RieszKernel k = build_kernel(g, kParams.alpha, KernelMode::truncated_kernel);
    Field u = two_bump_field(g, 40);
    ChoquardBrackets b = brackets(kParams, k, u);
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> U(-1.5, 1.5);
    for (int i = 0; i < 100; ++i) {
        FiberPoint fp{std::pow(10.0, U(rng)), std::pow(10.0, U(rng))};
        auto h = fiber_hessian(kParams, b, fp);
        double tr = h[0] + h[2];
        double det = h[0] * h[2] - h[1] * h[1];
        double disc = std::sqrt(std::max(tr * tr / 4.0 - det, 0.0));
        double lam_max = tr / 2.0 + disc;
        REQUIRE(lam_max <= 1e-12);
        if (b.d_pp > 0.0 && b.d_mm > 0.0) REQUIRE(lam_max < 0.0);
    }
}

TEST_CASE("parts of nodal-set fields sit strictly below their own Nehari scale") {
    // q+ - d_pp = d_pm - h1_cross > 0 on the nodal set, so nehari_scale(u+) > 1
    Grid g = grid2d();
    RieszKernel k = build_kernel(g, kParams.alpha, KernelMode::truncated_kernel);
    for (int s = 0; s < 5; ++s) {
        Field u = two_bump_field(g, 50 + s);
        ChoquardBrackets b = brackets(kParams, k, u);
        NodalProjection proj = nodal_project(kParams, b);
        auto [up, um] = split_signs(u);
        Field w = proj.s_plus * up + proj.s_minus * um;
        ChoquardBrackets bw = brackets(kParams, k, w);
        REQUIRE(bw.d_pm > 0.0);
        REQUIRE(bw.q_plus - bw.d_pp == Approx(bw.d_pm - bw.h1_cross).epsilon(1e-8));
        REQUIRE(nehari_scale(kParams, bw.q_plus, bw.d_pp) > 1.0);
        REQUIRE(nehari_scale(kParams, bw.q_minus, bw.d_mm) > 1.0);
    }
}

TEST_CASE("splitting inequality on nodal-projected fields") {
    Grid g = grid2d();
    RieszKernel k = build_kernel(g, kParams.alpha, KernelMode::spectral);
    const double expo = (kParams.p - 1.0) / (kParams.p - 2.0);
    for (int s = 0; s < 20; ++s) {
        Field u = two_bump_field(g, 60 + s);
        ChoquardBrackets b = brackets(kParams, k, u);
        NodalProjection proj = nodal_project(kParams, b);
        auto [up, um] = split_signs(u);
        Field w = proj.s_plus * up + proj.s_minus * um;
        ChoquardBrackets bw = brackets(kParams, k, w);
        double a_tot = fiber_value(kParams, bw, {1.0, 1.0});
        double a_plus = nehari_projected_action(kParams, bw.q_plus, bw.d_pp);
        double a_minus = nehari_projected_action(kParams, bw.q_minus, bw.d_mm);
        double lhs = std::pow(a_plus, expo) + std::pow(a_minus, expo);
        double rhs = std::pow(a_tot, expo);
        REQUIRE(lhs <= rhs * (1.0 + 1e-9));
    }
}
