// Experiment runner: computes the three action levels of the Choquard
// equation on a periodic box, certifies their ordering, and drives the
// strict-gap, exponent-sweep and degeneracy experiments. Configuration is a
// single JSON document; flags override file values. Every run writes a
// manifest with the configuration echo and a content hash of its inputs.

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "choquard/choquard.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace choquard;

namespace {

constexpr const char* kVersion = "0.1.0";

struct RunConfig {
    Params params;
    Grid grid{2, 256, 40.0};
    KernelMode kernel_mode = KernelMode::truncated_kernel;
    SolveOptions solver;
    fs::path out_dir = "out";
    std::string config_text; // raw bytes for the manifest hash
    // experiment extras
    std::vector<double> r_list{4.0, 6.0, 8.0, 10.0, 12.0};
    std::vector<double> p_list;
    double delta_start = 0.0; // 0 = L/16
};

RunConfig load_config(const std::string& path) {
    RunConfig cfg;
    if (path.empty()) return cfg;
    cfg.config_text = read_file(path);
    json j = json::parse(cfg.config_text);
    if (j.contains("params")) {
        const auto& p = j["params"];
        cfg.params.dim = p.value("N", cfg.params.dim);
        cfg.params.alpha = p.value("alpha", cfg.params.alpha);
        cfg.params.p = p.value("p", cfg.params.p);
        if (p.contains("mode")) cfg.params.mode = mode_from_string(p["mode"].get<std::string>());
        cfg.params.dealias = p.value("dealias", cfg.params.dealias);
    }
    if (j.contains("grid")) {
        cfg.grid.n = j["grid"].value("n", cfg.grid.n);
        cfg.grid.extent = j["grid"].value("L", cfg.grid.extent);
    }
    cfg.grid.dim = cfg.params.dim;
    if (j.contains("kernel")) {
        std::string m = j["kernel"].get<std::string>();
        if (m == "truncated")
            cfg.kernel_mode = KernelMode::truncated_kernel;
        else if (m == "spectral")
            cfg.kernel_mode = KernelMode::spectral;
        else
            throw std::invalid_argument("unknown kernel mode: " + m);
    }
    if (j.contains("solver")) {
        const auto& s = j["solver"];
        cfg.solver.grad_tol = s.value("grad_tol", cfg.solver.grad_tol);
        cfg.solver.max_iter = s.value("max_iter", cfg.solver.max_iter);
        if (s.contains("step_rule"))
            cfg.solver.step_rule = step_rule_from_string(s["step_rule"].get<std::string>());
        cfg.solver.recenter_every = s.value("recenter_every", cfg.solver.recenter_every);
        cfg.solver.seed = s.value("seed", cfg.solver.seed);
        cfg.solver.tail_guard = s.value("tail_guard", cfg.solver.tail_guard);
    }
    if (j.contains("out")) cfg.out_dir = j["out"].get<std::string>();
    if (j.contains("experiment")) {
        const auto& e = j["experiment"];
        if (e.contains("R_list")) cfg.r_list = e["R_list"].get<std::vector<double>>();
        if (e.contains("p_list")) cfg.p_list = e["p_list"].get<std::vector<double>>();
        cfg.delta_start = e.value("delta_start", cfg.delta_start);
    }
    return cfg;
}

json config_echo(const RunConfig& cfg) {
    return {{"params", to_json(cfg.params)},
            {"grid", to_json(cfg.grid)},
            {"kernel", to_string(cfg.kernel_mode)},
            {"solver", to_json(cfg.solver)},
            {"out", cfg.out_dir.string()}};
}

void write_manifest(const RunConfig& cfg, const std::string& command, double wall_s) {
    json m;
    m["command"] = command;
    m["config"] = config_echo(cfg);
    m["versions"] = {{"choquard", std::string(kVersion)},
                     {"fftw", std::string(fftw_version)},
                     {"compiler", std::string(__VERSION__)}};
    m["wall_time_s"] = wall_s;
    m["input_hash"] = "sha1:" + git_blob_hash(cfg.config_text);
    write_file_atomic(cfg.out_dir / "manifest.json", m.dump(2) + "\n");
}

void write_error_report(const RunConfig& cfg, const std::string& command, const std::string& what) {
    json e;
    e["error"] = {{"command", command}, {"message", what}};
    fs::create_directories(cfg.out_dir);
    write_file_atomic(cfg.out_dir / "error.json", e.dump(2) + "\n");
    std::fprintf(stderr, "error: %s\n", what.c_str());
}

int worker_pool_size(std::size_t jobs) {
    unsigned n = std::thread::hardware_concurrency();
    if (const char* env = std::getenv("CHOQUARD_THREADS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v > 0) n = static_cast<unsigned>(v);
    }
    if (n == 0) n = 1;
    return static_cast<int>(std::min<std::size_t>(n, jobs));
}

int cmd_levels(const RunConfig& cfg) {
    auto t0 = std::chrono::steady_clock::now();
    cfg.params.validate();
    cfg.grid.validate();
    cfg.solver.validate();
    fs::create_directories(cfg.out_dir);
    RieszKernel kernel = build_kernel(cfg.grid, cfg.params.alpha, cfg.kernel_mode);
    LevelReport rep = level_report(cfg.params, kernel, cfg.solver);

    write_file_atomic(cfg.out_dir / "levels.json", to_json(rep).dump(2) + "\n");
    write_file_atomic(cfg.out_dir / "groundstate_history.csv", history_csv(rep.ground));
    write_file_atomic(cfg.out_dir / "odd_history.csv", history_csv(rep.odd));
    write_file_atomic(cfg.out_dir / "nodal_history.csv", history_csv(rep.nodal));
    save_field(rep.ground.minimizer, cfg.out_dir / "groundstate", &cfg.params);
    save_field(rep.odd.minimizer, cfg.out_dir / "odd_minimizer", &cfg.params);
    save_field(rep.nodal.minimizer, cfg.out_dir / "nodal_minimizer", &cfg.params);
    DecayTable decay = decay_diagnostic(cfg.params, kernel, rep.ground.minimizer);
    write_file_atomic(cfg.out_dir / "decay_diagnostic.csv", decay_csv(decay));

    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(cfg, "levels", wall);
    std::printf("c0      = %.10g\n", rep.c0);
    std::printf("c_nod   = %.10g\n", rep.c_nod);
    std::printf("c_odd   = %.10g\n", rep.c_odd);
    for (const auto& v : rep.verdicts)
        std::printf("%-28s %s (margin %.3e)\n", v.name.c_str(), v.holds ? "holds" : "FAILS",
                    v.margin);
    return rep.all_verdicts_hold ? 0 : 1;
}

int cmd_strict_gap(const RunConfig& cfg) {
    auto t0 = std::chrono::steady_clock::now();
    cfg.params.validate();
    fs::create_directories(cfg.out_dir);
    RieszKernel kernel = build_kernel(cfg.grid, cfg.params.alpha, cfg.kernel_mode);
    SolveResult ground = solve_groundstate(cfg.params, kernel, cfg.solver,
                                           groundstate_init(cfg.grid, cfg.solver.seed));
    if (!ground.converged) {
        write_error_report(cfg, "strict-gap", "groundstate solve did not converge");
        return 1;
    }
    GapCurve curve = strict_gap_curve(cfg.params, ground.minimizer, cfg.r_list, ground.level);
    write_file_atomic(cfg.out_dir / "strict_gap.csv", gap_curve_csv(curve));
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(cfg, "strict-gap", wall);

    std::printf("c0 = %.10g, embed factor %d\n", ground.level, curve.embed_factor);
    for (const auto& row : curve.rows)
        std::printf("R=%-6g t_R=%.6f action=%.8g gap=%+.5e %s\n", row.r_requested, row.t_scale,
                    row.action, row.gap, row.valid ? "" : row.note.c_str());
    if (curve.fit_valid) std::printf("fitted exponent: %.4f\n", curve.fitted_exponent);
    bool gap_positive = !curve.rows.empty();
    for (const auto& row : curve.rows)
        if (row.valid && !(row.gap > 0.0)) gap_positive = false;
    return gap_positive && curve.fit_valid ? 0 : 1;
}

int cmd_sweep_p(const RunConfig& cfg) {
    auto t0 = std::chrono::steady_clock::now();
    fs::create_directories(cfg.out_dir);
    std::vector<double> ps = cfg.p_list;
    if (ps.empty()) ps = {1.8, 2.0, 2.5};

    struct Row {
        double p = 0.0;
        bool ok = false;
        std::string err;
        double c0 = 0.0, c_odd = 0.0, c_nod = 0.0;
        bool collapsed = false, chain_ok = false;
        std::string regime;
    };
    std::vector<Row> rows(ps.size());
    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= ps.size()) return;
            Row& row = rows[i];
            row.p = ps[i];
            try {
                Params params = cfg.params;
                params.p = ps[i];
                params.validate();
                RieszKernel kernel = build_kernel(cfg.grid, params.alpha, cfg.kernel_mode);
                LevelReport rep = level_report(params, kernel, cfg.solver);
                row.c0 = rep.c0;
                row.c_odd = rep.c_odd;
                row.c_nod = rep.c_nod;
                row.collapsed = rep.nodal.sign_collapsed;
                row.chain_ok = rep.all_verdicts_hold;
                row.regime = to_string(params.regime());
                row.ok = true;
                // each point lands atomically as soon as it finishes
                write_file_atomic(cfg.out_dir / ("point_p" + fmt_g17(ps[i]) + ".json"),
                                  to_json(rep).dump(2) + "\n");
            } catch (const std::exception& e) {
                row.err = e.what(); // per-point failures recorded, sweep continues
            }
        }
    };
    int n_workers = worker_pool_size(ps.size());
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();

    std::string csv = "p,regime,c0,c_odd,c_nod,collapsed,chain_ok,error\n";
    for (const auto& row : rows) {
        if (row.ok)
            csv += fmt_g17(row.p) + "," + row.regime + "," + fmt_g17(row.c0) + "," +
                   fmt_g17(row.c_odd) + "," + fmt_g17(row.c_nod) + "," +
                   (row.collapsed ? "1" : "0") + "," + (row.chain_ok ? "1" : "0") + ",\n";
        else
            csv += fmt_g17(row.p) + ",,,,,,," + row.err + "\n";
        std::printf("p=%-5g %s\n", row.p,
                    row.ok ? (row.chain_ok ? "ok" : "verdict failure") : row.err.c_str());
    }
    write_file_atomic(cfg.out_dir / "sweep_p.csv", csv);
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(cfg, "sweep-p", wall);
    // p = 2 rows report the collapse flag without asserting a verdict
    for (const auto& row : rows)
        if (row.ok && row.p != 2.0 && !row.chain_ok) return 1;
    return 0;
}

int cmd_degeneracy(const RunConfig& cfg) {
    auto t0 = std::chrono::steady_clock::now();
    cfg.params.validate();
    if (cfg.params.regime() != Regime::sublinear) {
        write_error_report(cfg, "degeneracy", "degeneracy experiment requires p < 2");
        return 2;
    }
    fs::create_directories(cfg.out_dir);
    RieszKernel kernel = build_kernel(cfg.grid, cfg.params.alpha, cfg.kernel_mode);
    SolveResult ground = solve_groundstate(cfg.params, kernel, cfg.solver,
                                           groundstate_init(cfg.grid, cfg.solver.seed));

    // family on a refined grid: the smallest bumps need headroom below the
    // canonical 4h floor of the run grid
    int refine = cfg.grid.n < 1024 ? 1024 / cfg.grid.n : 1;
    Field fine_ground = fourier_upsample(ground.minimizer, refine);
    RieszKernel fine_kernel =
        refine == 1 ? kernel : build_kernel(fine_ground.grid, cfg.params.alpha, cfg.kernel_mode);
    if (refine > 1) {
        SolveOptions polish = cfg.solver;
        polish.max_iter = 400;
        SolveResult fine = solve_groundstate(cfg.params, fine_kernel, polish, fine_ground);
        fine_ground = fine.minimizer;
    }

    DegeneracyFamilyParams dp;
    dp.a_node = {fine_ground.grid.n / 2 + fine_ground.grid.n / 4, fine_ground.grid.n / 2,
                 fine_ground.grid.n / 2};
    double delta = cfg.delta_start > 0.0 ? cfg.delta_start : cfg.grid.extent / 16.0;
    const double floor = 4.0 * fine_ground.grid.spacing();

    std::string csv = "delta,s_plus,s_minus,s_minus_limit,action,h1_distance,converged,note\n";
    double min_action = 1e300;
    bool any = false;
    double last_s_minus = 0.0, last_limit = 0.0;
    for (; delta >= floor * (1.0 - 1e-12); delta *= 0.5) {
        dp.delta = delta;
        try {
            DegeneracyPoint pt = degeneracy_family(cfg.params, fine_kernel, fine_ground, dp);
            double s_limit =
                std::pow(pt.v_at_a * (M_PI / (2.0 * cfg.params.p + 1.0)) / (4.0 * M_PI / 3.0),
                         1.0 / (2.0 - cfg.params.p));
            csv += fmt_g17(delta) + "," + fmt_g17(pt.s_plus) + "," + fmt_g17(pt.s_minus) + "," +
                   fmt_g17(s_limit) + "," + fmt_g17(pt.action) + "," + fmt_g17(pt.h1_distance) +
                   "," + (pt.converged ? "1" : "0") + ",\n";
            if (pt.converged) {
                min_action = std::min(min_action, pt.action);
                any = true;
                last_s_minus = pt.s_minus;
                last_limit = s_limit;
            }
        } catch (const std::exception& e) {
            csv += fmt_g17(delta) + ",,,,,,0," + e.what() + "\n";
        }
    }
    write_file_atomic(cfg.out_dir / "degeneracy_family.csv", csv);

    SolveResult collapse = solve_nodal(cfg.params, kernel, cfg.solver,
                                       collapse_probe_init(ground.minimizer, cfg.solver.seed));
    json summary;
    summary["c0"] = ground.level;
    summary["family_min_action"] = min_action;
    summary["family_min_action_rel_gap"] = any ? (min_action - ground.level) / ground.level : -1.0;
    summary["s_minus_smallest_delta"] = last_s_minus;
    summary["s_minus_limit"] = last_limit;
    summary["collapse"] = solve_summary(collapse);
    write_file_atomic(cfg.out_dir / "degeneracy.json", summary.dump(2) + "\n");
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(cfg, "degeneracy", wall);

    bool level_ok = any && std::abs(min_action - ground.level) <= 0.01 * ground.level;
    std::printf("c0 = %.10g, family min action = %.10g (%s), collapse flag = %d\n", ground.level,
                min_action, level_ok ? "within 1%" : "OUT OF BAND", int(collapse.sign_collapsed));
    return level_ok && collapse.sign_collapsed ? 0 : 1;
}

int cmd_kernel_selftest(const RunConfig& cfg) {
    auto t0 = std::chrono::steady_clock::now();
    cfg.grid.validate();
    fs::create_directories(cfg.out_dir);
    bool ok = true;
    auto report = [&](const char* name, bool pass, double value) {
        std::printf("[%s] %-28s %.3e\n", pass ? "PASS" : "FAIL", name, value);
        ok = ok && pass;
    };

    // semigroup factorization, spectral mode
    RieszKernel ka = build_kernel(cfg.grid, cfg.params.alpha, KernelMode::spectral);
    RieszKernel kh = build_kernel(cfg.grid, cfg.params.alpha / 2.0, KernelMode::spectral);
    double worst = 0.0;
    for (int s = 0; s < 10; ++s) {
        Field f = smooth_noise(cfg.grid, 100 + s);
        Field once = riesz_convolve(ka, f);
        Field twice = riesz_convolve(kh, riesz_convolve(kh, f));
        for (std::size_t i = 0; i < f.size(); ++i)
            worst = std::max(worst, std::abs(once[i] - twice[i]));
    }
    report("semigroup max deviation", worst <= 1e-12, worst);

    // far-field of the free-space kernel
    RieszKernel kt = build_kernel(cfg.grid, cfg.params.alpha, KernelMode::truncated_kernel);
    double d = 0.35 * cfg.grid.extent;
    Field u = gaussian(cfg.grid, {-d / 2, 0, 0}, 0.02 * cfg.grid.extent);
    Field w = gaussian(cfg.grid, {d / 2, 0, 0}, 0.02 * cfg.grid.extent);
    double term = choquard_term(kt, cfg.params.p, u, w);
    double pred = kt.a_alpha * std::pow(d, cfg.params.alpha - cfg.grid.dim) *
                  integrate(abs_power(u, cfg.params.p)) * integrate(abs_power(w, cfg.params.p));
    double rel = std::abs(term - pred) / pred;
    report("far-field relative error", rel <= 0.05, rel);

    // positivity of the multipliers and of the quadratic bracket
    double min_mult = 0.0;
    for (double m : kt.multiplier) min_mult = std::min(min_mult, m);
    report("truncated multiplier min", min_mult >= 0.0, kt.min_multiplier_raw);
    Field r = smooth_noise(cfg.grid, 3);
    double quad = choquard_term(ka, cfg.params.p, r, r);
    report("spectral bracket positivity", quad >= 0.0, quad);

    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(cfg, "kernel-selftest", wall);
    return ok ? 0 : 1;
}

int cmd_gradcheck(const RunConfig& cfg) {
    auto t0 = std::chrono::steady_clock::now();
    cfg.params.validate();
    fs::create_directories(cfg.out_dir);
    RieszKernel kernel = build_kernel(cfg.grid, cfg.params.alpha, cfg.kernel_mode);

    double worst_rel = 0.0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (int s = 0; s < 20; ++s) {
        Field u = smooth_noise(cfg.grid, 1000 + 7 * s + static_cast<int>(cfg.solver.seed));
        Field phi = smooth_noise(cfg.grid, 2000 + 7 * s + static_cast<int>(cfg.solver.seed));
        Field grad = action_gradient(cfg.params, kernel, u);
        double exact = l2_inner(grad, phi);
        auto fd = [&](double eps) {
            Field up = u, um = u;
            axpy(eps, phi, up);
            axpy(-eps, phi, um);
            return (action(cfg.params, kernel, up) - action(cfg.params, kernel, um)) / (2.0 * eps);
        };
        worst_rel = std::max(worst_rel, std::abs(fd(1e-5) - exact) / std::abs(exact));
        if (s == 0) {
            for (double eps : {1e-2, 3.16e-3, 1e-3, 3.16e-4, 1e-4}) {
                double err = std::abs(fd(eps) - exact);
                sx += std::log(eps);
                sy += std::log(err);
                sxx += std::log(eps) * std::log(eps);
                sxy += std::log(eps) * std::log(err);
                ++m;
            }
        }
    }
    double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    bool ok = worst_rel <= 1e-6 && std::abs(slope - 2.0) <= 0.2;
    std::printf("[%s] central-difference max relative error %.3e (tolerance 1e-6)\n",
                worst_rel <= 1e-6 ? "PASS" : "FAIL", worst_rel);
    std::printf("[%s] log-log error slope %.3f (expect 2 +/- 0.2)\n",
                std::abs(slope - 2.0) <= 0.2 ? "PASS" : "FAIL", slope);
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(cfg, "gradcheck", wall);
    return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral action-level solver for the Choquard equation"};
    app.require_subcommand(1);
    app.fallthrough(); // global flags may follow the subcommand

    std::string config_path;
    std::string out_override, kernel_override;
    int grid_override = 0;
    double box_override = 0.0;
    long long seed_override = -1;
    app.add_option("--config", config_path, "JSON configuration file");
    app.add_option("--out", out_override, "output directory override");
    app.add_option("--seed", seed_override, "seed override");
    app.add_option("--kernel", kernel_override, "kernel mode override: truncated|spectral");
    app.add_option("--grid", grid_override, "nodes per axis override");
    app.add_option("--box", box_override, "box length override");

    auto* levels = app.add_subcommand("levels", "solve the three levels and check their ordering");
    auto* gap = app.add_subcommand("strict-gap", "glued two-bump curve A(t_R u_R) against 2 c0");
    auto* sweep = app.add_subcommand("sweep-p", "level report across a list of exponents");
    auto* degen = app.add_subcommand("degeneracy", "sublinear perturbation family and collapse run");
    auto* selftest = app.add_subcommand("kernel-selftest", "convolution-kernel invariants");
    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient consistency");

    CLI11_PARSE(app, argc, argv);

    RunConfig cfg;
    std::string command = app.get_subcommands().front()->get_name();
    try {
        cfg = load_config(config_path);
    } catch (const std::exception& e) {
        cfg.out_dir = out_override.empty() ? "out" : out_override;
        write_error_report(cfg, command, e.what());
        return 2;
    }
    if (!out_override.empty()) cfg.out_dir = out_override;
    if (seed_override >= 0) cfg.solver.seed = static_cast<std::uint64_t>(seed_override);
    if (!kernel_override.empty())
        cfg.kernel_mode =
            kernel_override == "spectral" ? KernelMode::spectral : KernelMode::truncated_kernel;
    if (grid_override > 0) cfg.grid.n = grid_override;
    if (box_override > 0.0) cfg.grid.extent = box_override;
    cfg.grid.dim = cfg.params.dim;

    try {
        if (levels->parsed()) return cmd_levels(cfg);
        if (gap->parsed()) return cmd_strict_gap(cfg);
        if (sweep->parsed()) return cmd_sweep_p(cfg);
        if (degen->parsed()) return cmd_degeneracy(cfg);
        if (selftest->parsed()) return cmd_kernel_selftest(cfg);
        if (gradcheck->parsed()) return cmd_gradcheck(cfg);
    } catch (const std::exception& e) {
        write_error_report(cfg, command, e.what());
        return 2;
    }
    return 2;
}
