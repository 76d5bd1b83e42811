#pragma once

#include <cstdio>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "choquard/constructions.hpp"
#include "choquard/field_io.hpp"
#include "choquard/solve.hpp"

namespace choquard {

inline std::string fmt_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline nlohmann::json to_json(const Params& p) {
    return {{"N", p.dim}, {"alpha", p.alpha}, {"p", p.p}, {"mode", to_string(p.mode)}};
}

inline nlohmann::json to_json(const Grid& g) { return {{"n", g.n}, {"L", g.extent}}; }

inline nlohmann::json to_json(const SolveOptions& o) {
    return {{"grad_tol", o.grad_tol},   {"max_iter", o.max_iter},
            {"step_rule", to_string(o.step_rule)}, {"recenter_every", o.recenter_every},
            {"seed", o.seed},           {"tail_guard", o.tail_guard}};
}

inline nlohmann::json solve_summary(const SolveResult& r) {
    return {{"level", r.level},
            {"residual", r.residual},
            {"iterations", r.iterations},
            {"converged", r.converged},
            {"sign_collapsed", r.sign_collapsed},
            {"tail_guard_tripped", r.tail_guard_tripped}};
}

inline nlohmann::json to_json(const LevelReport& rep) {
    nlohmann::json j;
    j["params"] = to_json(rep.params);
    j["grid"] = to_json(rep.grid);
    j["kernel_mode"] = to_string(rep.kernel_mode);
    j["solver"] = to_json(rep.opts);
    j["levels"] = {{"c0", rep.c0}, {"c_odd", rep.c_odd}, {"c_nod", rep.c_nod}};
    j["lower_bound_factor"] = rep.lower_bound_factor;
    j["solves"] = {{"groundstate", solve_summary(rep.ground)},
                   {"odd", solve_summary(rep.odd)},
                   {"nodal", solve_summary(rep.nodal)}};
    nlohmann::json verdicts = nlohmann::json::array();
    for (const auto& v : rep.verdicts)
        verdicts.push_back({{"name", v.name},
                            {"holds", v.holds},
                            {"margin", v.margin},
                            {"margin_in_tol", v.margin_in_tol}});
    j["verdicts"] = verdicts;
    j["all_verdicts_hold"] = rep.all_verdicts_hold;
    j["diagnostics"] = {{"odd_defect", rep.odd_defect},
                        {"axial_defect", rep.axial_defect},
                        {"collapse_ratio", rep.collapse_ratio},
                        {"regime", to_string(rep.params.regime())}};
    return j;
}

inline std::string history_csv(const SolveResult& r) {
    std::string out = "iteration,action,residual\n";
    for (std::size_t i = 0; i < r.history.size(); ++i)
        out += std::to_string(i) + "," + fmt_g17(r.history[i].action) + "," +
               fmt_g17(r.history[i].residual) + "\n";
    return out;
}

inline std::string gap_curve_csv(const GapCurve& curve) {
    std::string out = "R,R_effective,t_R,action,gap,valid,note\n";
    for (const auto& row : curve.rows)
        out += fmt_g17(row.r_requested) + "," + fmt_g17(row.r_effective) + "," +
               fmt_g17(row.t_scale) + "," + fmt_g17(row.action) + "," + fmt_g17(row.gap) + "," +
               (row.valid ? "1" : "0") + "," + row.note + "\n";
    if (curve.fit_valid)
        out += "# fitted_exponent," + fmt_g17(curve.fitted_exponent) + "\n";
    return out;
}

inline std::string decay_csv(const DecayTable& table) {
    std::string out = "r_lo,r_hi,ratio_mean,dev_max,mean_log_v,samples\n";
    for (const auto& row : table.rows)
        out += fmt_g17(row.r_lo) + "," + fmt_g17(row.r_hi) + "," + fmt_g17(row.ratio_mean) + "," +
               fmt_g17(row.dev_max) + "," + fmt_g17(row.mean_log_v) + "," +
               std::to_string(row.samples) + "\n";
    out += "# int_v_p," + fmt_g17(table.int_v_p) + "\n";
    out += "# sup_dev_quarter," + fmt_g17(table.sup_dev_quarter) + "\n";
    out += "# log_slope," + fmt_g17(table.log_slope) + "\n";
    return out;
}

} // namespace choquard
