#include <catch2/catch.hpp>

#include <cstdio>
#include <filesystem>

#include "choquard/field_io.hpp"
#include "choquard/report_io.hpp"

using namespace choquard;

namespace {
std::filesystem::path temp_dir() {
    auto dir = std::filesystem::temp_directory_path() / "choquard_io_test";
    std::filesystem::create_directories(dir);
    return dir;
}
} // namespace

TEST_CASE("field dump round trip is bit exact") {
    Grid g{2, 32, 12.0};
    Field u = smooth_noise(g, 5);
    Params p{2, 1.0, 2.5, Mode::choquard};
    auto base = temp_dir() / "field";
    save_field(u, base, &p);

    Field back = load_field(base);
    REQUIRE(back.grid == u.grid);
    REQUIRE(back.v == u.v);

    // sidecar carries dims, extent and params
    auto side = nlohmann::json::parse(read_file(base.string() + ".json"));
    REQUIRE(side["dims"] == nlohmann::json({32, 32}));
    REQUIRE(side["extent"].get<double>() == 12.0);
    REQUIRE(side["params"]["p"].get<double>() == 2.5);

    // payload is the raw doubles, row-major
    REQUIRE(std::filesystem::file_size(base.string() + ".f64") == u.size() * sizeof(double));
}

TEST_CASE("sha1 matches known vectors and the git blob framing") {
    REQUIRE(sha1_hex("") == "da39a3ee5e6b4b0d3255bfef95601890afd80709");
    REQUIRE(sha1_hex("abc") == "a9993e364706816aba3e25717850c26c9cd0d89d");
    // `echo -n 'hello' | git hash-object --stdin`
    REQUIRE(git_blob_hash("hello") == "b6fc4c620b67d95f953a5c1c1230aaab5db5a1b0");
}

TEST_CASE("atomic write replaces content completely") {
    auto path = temp_dir() / "atomic.txt";
    write_file_atomic(path, "first version, longer than the second\n");
    write_file_atomic(path, "second\n");
    REQUIRE(read_file(path) == "second\n");
    REQUIRE_FALSE(std::filesystem::exists(path.string() + ".tmp"));
}

TEST_CASE("report serialization is stable and carries the verdict fields") {
    LevelReport rep;
    rep.params = {2, 1.0, 2.5, Mode::choquard};
    rep.grid = {2, 64, 20.0};
    rep.kernel_mode = KernelMode::truncated_kernel;
    rep.c0 = 1.25;
    rep.c_odd = 2.0;
    rep.c_nod = 2.0;
    rep.verdicts.push_back({"codd_lt_2c0", true, 0.5, 5.0e6});
    nlohmann::json j = to_json(rep);
    REQUIRE(j["levels"]["c0"].get<double>() == 1.25);
    REQUIRE(j["verdicts"][0]["holds"].get<bool>());
    REQUIRE(j["kernel_mode"] == "truncated");
    // identical reports serialize to identical bytes
    REQUIRE(j.dump(2) == to_json(rep).dump(2));
}

TEST_CASE("history and table CSV writers") {
    SolveResult r;
    r.history = {{2.0, 0.5}, {1.5, 0.25}};
    std::string csv = history_csv(r);
    REQUIRE(csv == "iteration,action,residual\n0,2,0.5\n1,1.5,0.25\n");

    GapCurve curve;
    curve.rows.push_back({4.0, 4.0625, 0.98, 9.3, 0.33, true, ""});
    curve.fitted_exponent = -1.02;
    curve.fit_valid = true;
    std::string gap = gap_curve_csv(curve);
    REQUIRE(gap.find("R,R_effective,t_R,action,gap,valid,note\n") == 0);
    REQUIRE(gap.find("# fitted_exponent,-1.02") != std::string::npos);
}
