#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sys/wait.h>

#include <json.hpp>

#include "ioredux/artifacts.hpp"
#include "ioredux/model.hpp"
#include "ioredux/pipeline.hpp"
#include "ioredux/reduction.hpp"

using namespace ioredux;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CliDir {
    fs::path path;
    CliDir() {
        path = fs::temp_directory_path() /
               ("ioredux_cli_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~CliDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

int run_cli(const std::string& args) {
    const std::string cmd = std::string(IOREDUX_BIN_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

// Fast builtin-model configuration: short horizon, small design.
json fast_model_json() {
    json m;
    m["population"] = {3.0e6, 1.3e7, 1.3e7, 1.0e6};
    m["initial_undiagnosed"] = {1.0e5, 3.0e4, 3.0e4, 2.0e4};
    m["initial_diagnosed"] = {1.2e5, 6.0e4, 6.0e4, 3.5e4};
    m["initial_treated"] = {4.5e5, 1.8e5, 1.8e5, 7.0e4};
    m["beta"] = {0.16, 0.06, 0.06, 0.08};
    m["mixing"] = {{0.92, 0.02, 0.04, 0.02},
                   {0.06, 0.02, 0.86, 0.06},
                   {0.05, 0.87, 0.02, 0.06},
                   {0.05, 0.05, 0.05, 0.85}};
    m["costs"] = {{"prophylaxis_per_person_year", 1.0e-5},
                  {"care_diagnosed_per_person_year", 8.0e-6},
                  {"care_treated_per_person_year", 3.0e-5},
                  {"per_test", 1.5e-7},
                  {"per_diagnosis", 1.0e-6}};
    m["horizon_years"] = 2.0;
    m["step_years"] = 0.02;
    m["baselines"] = {{"prep_A", 0.012}, {"prep_B", 0.01},  {"prep_C", 0.01},
                      {"prep_D", 0.008}, {"art_A", 0.28},   {"art_BC", 0.25},
                      {"art_D", 0.22},   {"test_A", 0.22},  {"test_BC", 0.18},
                      {"test_D", 0.25}};
    m["box_factor"] = 3.0;
    return m;
}

json fast_config_json(int level) {
    json c;
    c["model"] = fast_model_json();
    c["design"] = {{"level", level}};
    c["reduce"] = {{"variance_threshold", 0.95}};
    // Wide-open tolerances; the tolerance gate itself is tested separately.
    c["verify"] = {{"delta", 1.0}, {"diag_low", -10.0}, {"diag_high", 10.0},
                   {"offdiag_max", 10.0}};
    c["runner"] = {{"type", "builtin"}, {"jobs", 1}};
    return c;
}

std::string write_config(const CliDir& dir, const json& j, const std::string& name = "config.json") {
    const std::string path = dir.file(name);
    write_file(path, j.dump(2) + "\n");
    return path;
}

}  // namespace

TEST_CASE("cli sample writes the expected design sizes deterministically") {
    CliDir dir;
    // One-dimensional explicit parameter space, level 0: single midpoint row.
    json c1;
    c1["parameters"] = {{"names", {"x"}}, {"lower", {0.0}}, {"upper", {1.0}}};
    c1["design"] = {{"level", 0}};
    c1["runner"] = {{"type", "external"}, {"command", "true"}};
    const std::string cfg1 = write_config(dir, c1, "c1.json");
    fs::create_directories(dir.file("d1"));
    REQUIRE(run_cli("sample --config " + cfg1 + " --out-dir " + dir.file("d1")) == 0);
    const DesignFile d1 = read_design_csv(dir.file("d1") + "/design.csv");
    REQUIRE(d1.points.size() == 1);
    CHECK(d1.points[0](0) == 0.5);

    // Builtin 10-parameter space at level 2: the 221-point design.
    const std::string cfg2 = write_config(dir, fast_config_json(2), "c2.json");
    REQUIRE(run_cli("sample --config " + cfg2 + " --out-dir " + dir.file("d2")) == 0);
    CHECK(read_design_csv(dir.file("d2") + "/design.csv").points.size() == 221);

    // Rerunning reproduces the design byte for byte.
    const std::string first = read_file(dir.file("d2") + "/design.csv");
    REQUIRE(run_cli("sample --config " + cfg2 + " --out-dir " + dir.file("d2")) == 0);
    CHECK(read_file(dir.file("d2") + "/design.csv") == first);
}

TEST_CASE("cli config errors exit with code 2") {
    CliDir dir;
    CHECK(run_cli("sample --config " + dir.file("missing.json") + " --out-dir " +
                  dir.file("out")) == 2);
    write_file(dir.file("broken.json"), "{ not json");
    CHECK(run_cli("sample --config " + dir.file("broken.json") + " --out-dir " +
                  dir.file("out")) == 2);
}

TEST_CASE("cli evaluate matches a direct library evaluation on one point") {
    CliDir dir;
    json cfg = fast_config_json(0);  // level 0: single design point
    const std::string cfg_path = write_config(dir, cfg);
    REQUIRE(run_cli("sample --config " + cfg_path + " --out-dir " + dir.path.string()) == 0);
    REQUIRE(run_cli("evaluate --config " + cfg_path + " --design " + dir.file("design.csv") +
                    " --out " + dir.file("snapshot.csv")) == 0);

    const SnapshotMatrix snap = read_snapshot_csv(dir.file("snapshot.csv"));
    REQUIRE(snap.data.cols() == 1);

    ModelConfig mc;
    {
        // Library route for the same point.
        BuiltinRunner runner(
            [&] {
                ModelConfig c;
                const json& m = cfg["model"];
                auto vec4 = [&](const char* key) {
                    Eigen::VectorXd v(4);
                    for (int i = 0; i < 4; ++i) v(i) = m[key][i].get<double>();
                    return v;
                };
                c.population = vec4("population");
                c.initial_undiagnosed = vec4("initial_undiagnosed");
                c.initial_diagnosed = vec4("initial_diagnosed");
                c.initial_treated = vec4("initial_treated");
                c.beta = vec4("beta");
                c.mixing.resize(4, 4);
                for (int g = 0; g < 4; ++g)
                    for (int h = 0; h < 4; ++h) c.mixing(g, h) = m["mixing"][g][h].get<double>();
                c.costs = {1.0e-5, 8.0e-6, 3.0e-5, 1.5e-7, 1.0e-6};
                c.horizon_years = 2.0;
                c.step_years = 0.02;
                c.baselines = (Eigen::VectorXd(10) << 0.012, 0.01, 0.01, 0.008, 0.28, 0.25,
                               0.22, 0.22, 0.18, 0.25)
                                  .finished();
                return c;
            }(),
            1);
        const SnapshotMatrix direct =
            runner.run({Eigen::VectorXd::Constant(10, 0.5)}, {"p0"});
        CHECK((snap.data.col(0) - direct.data.col(0)).cwiseAbs().maxCoeff() == 0.0);
    }
    (void)mc;
}

TEST_CASE("cli evaluate passes through an external batch command") {
    CliDir dir;
    json cfg;
    cfg["parameters"] = {{"names", {"u", "v"}}, {"lower", {0.0, 0.0}}, {"upper", {1.0, 1.0}}};
    cfg["design"] = {{"level", 1}};
    const std::string fixture = dir.file("fixture_out.csv");
    cfg["runner"] = {{"type", "external"},
                     {"command", "cp " + fixture + " batch_out.csv"},
                     {"workdir", dir.file("work")}};
    const std::string cfg_path = write_config(dir, cfg);

    REQUIRE(run_cli("sample --config " + cfg_path + " --out-dir " + dir.path.string()) == 0);
    const DesignFile design = read_design_csv(dir.file("design.csv"));
    REQUIRE(design.points.size() == 5);

    // Fixture answers keyed by point id, deliberately out of order.
    std::ostringstream os;
    os << "point_id,out_a,out_b\n";
    for (std::size_t j = design.point_ids.size(); j-- > 0;)
        os << design.point_ids[j] << "," << j << "," << 10.0 + j << "\n";
    write_file(fixture, os.str());

    REQUIRE(run_cli("evaluate --config " + cfg_path + " --design " + dir.file("design.csv") +
                    " --out " + dir.file("snapshot.csv")) == 0);
    const SnapshotMatrix snap = read_snapshot_csv(dir.file("snapshot.csv"));
    CHECK(snap.row_labels == std::vector<std::string>{"out_a", "out_b"});
    for (long j = 0; j < 5; ++j) {
        CHECK(snap.data(0, j) == static_cast<double>(j));
        CHECK(snap.data(1, j) == 10.0 + j);
    }

    // The batch protocol wrote physical parameters for every point.
    const CsvTable batch_in = read_csv(dir.file("work") + "/batch_in.csv");
    CHECK(batch_in.header ==
          std::vector<std::string>{"point_id", "theta_hat_1", "theta_hat_2"});
    CHECK(batch_in.rows.size() == 5);
}

TEST_CASE("cli evaluate is identical across --jobs settings") {
    CliDir dir;
    const std::string cfg_path = write_config(dir, fast_config_json(1));
    REQUIRE(run_cli("sample --config " + cfg_path + " --out-dir " + dir.path.string()) == 0);
    REQUIRE(run_cli("evaluate --config " + cfg_path + " --design " + dir.file("design.csv") +
                    " --out " + dir.file("s1.csv") + " --jobs 1") == 0);
    REQUIRE(run_cli("evaluate --config " + cfg_path + " --design " + dir.file("design.csv") +
                    " --out " + dir.file("s8.csv") + " --jobs 8") == 0);
    CHECK(read_file(dir.file("s1.csv")) == read_file(dir.file("s8.csv")));
}

TEST_CASE("cli pipeline chain with provenance, planning, and reporting") {
    CliDir dir;
    const std::string cfg_path = write_config(dir, fast_config_json(1));
    REQUIRE(run_cli("sample --config " + cfg_path + " --out-dir " + dir.path.string()) == 0);
    REQUIRE(run_cli("evaluate --config " + cfg_path + " --design " + dir.file("design.csv") +
                    " --out " + dir.file("snapshot.csv")) == 0);
    REQUIRE(run_cli("reduce --config " + cfg_path + " --design " + dir.file("design.csv") +
                    " --snapshot " + dir.file("snapshot.csv") + " --out " +
                    dir.file("rom.json")) == 0);

    // Idempotent: a second reduce writes the identical artifact.
    const std::string rom_text = read_file(dir.file("rom.json"));
    REQUIRE(run_cli("reduce --config " + cfg_path + " --design " + dir.file("design.csv") +
                    " --snapshot " + dir.file("snapshot.csv") + " --out " +
                    dir.file("rom.json")) == 0);
    CHECK(read_file(dir.file("rom.json")) == rom_text);

    // Wide-open tolerances pass; a hopeless tolerance exits 5.
    CHECK(run_cli("verify --config " + cfg_path + " --rom " + dir.file("rom.json") +
                  " --out " + dir.file("verification.csv")) == 0);
    json strict_cfg = fast_config_json(1);
    strict_cfg["verify"] = {{"delta", 1.0}, {"diag_low", 0.999999999}, {"diag_high", 1.0},
                            {"offdiag_max", 1e-15}};
    const std::string strict_path = write_config(dir, strict_cfg, "strict.json");
    CHECK(run_cli("verify --config " + strict_path + " --rom " + dir.file("rom.json") +
                  " --out " + dir.file("verification2.csv")) == 5);

    // Planning at the surrogate fixed point returns theta0 and exits 0.
    const ReducedRom rom = rom_from_json(rom_text);
    const Eigen::VectorXd fixed_point =
        reconstruct(rom.basis, eval_surrogate(rom.surrogate, rom.theta0));
    std::ostringstream targets;
    targets << "target_id";
    for (const auto& label : rom.row_labels) targets << "," << label;
    targets << "\nfixed";
    for (long i = 0; i < fixed_point.size(); ++i) targets << "," << format_full(fixed_point(i));
    targets << "\n";
    write_file(dir.file("targets.csv"), targets.str());
    REQUIRE(run_cli("plan --config " + cfg_path + " --rom " + dir.file("rom.json") +
                    " --targets " + dir.file("targets.csv") + " --out " + dir.file("plans.csv") +
                    " --evaluate") == 0);
    const CsvTable plans = read_csv(dir.file("plans.csv"));
    REQUIRE(plans.rows.size() == 1);
    for (int i = 0; i < 10; ++i) {
        std::size_t col = 0;
        while (plans.header[col] != "theta_" + std::to_string(i + 1)) ++col;
        CHECK(parse_double(plans.rows[0].fields[col]) == doctest::Approx(0.5).epsilon(1e-8));
    }

    // Unreachable target: warning flag set, exit 0 normally, 6 under --strict.
    std::ostringstream unreachable;
    unreachable << "target_id";
    for (const auto& label : rom.row_labels) unreachable << "," << label;
    unreachable << "\nimpossible";
    for (long i = 0; i < fixed_point.size(); ++i) unreachable << "," << -1.0e9;
    unreachable << "\n";
    write_file(dir.file("unreachable.csv"), unreachable.str());
    CHECK(run_cli("plan --rom " + dir.file("rom.json") + " --targets " +
                  dir.file("unreachable.csv") + " --out " + dir.file("plans2.csv")) == 0);
    CHECK(run_cli("plan --rom " + dir.file("rom.json") + " --targets " +
                  dir.file("unreachable.csv") + " --out " + dir.file("plans3.csv") +
                  " --strict") == 6);
    const CsvTable warn_plans = read_csv(dir.file("plans2.csv"));
    std::size_t warn_col = 0;
    while (warn_plans.header[warn_col] != "reachability_warning") ++warn_col;
    CHECK(warn_plans.rows[0].fields[warn_col] == "1");

    // Malformed targets exit 6.
    write_file(dir.file("bad_targets.csv"), "target_id,nope\nx,1\n");
    CHECK(run_cli("plan --rom " + dir.file("rom.json") + " --targets " +
                  dir.file("bad_targets.csv") + " --out " + dir.file("plans4.csv")) == 6);

    // Report: directions csv mirrors the ROM's tau columns.
    REQUIRE(run_cli("report --rom " + dir.file("rom.json") + " --out-dir " +
                    dir.file("report")) == 0);
    const CsvTable directions = read_csv(dir.file("report") + "/directions.csv");
    REQUIRE(directions.rows.size() == 10);
    for (int i = 0; i < 10; ++i) {
        for (int j = 0; j < rom.p(); ++j) {
            CHECK(parse_double(directions.rows[i].fields[j + 1]) == rom.directions(i, j));
        }
    }
    CHECK(fs::exists(dir.file("report") + "/loadings.csv"));

    // Tampered snapshot: downstream reduce refuses with exit 7.
    std::string snapshot_text = read_file(dir.file("snapshot.csv"));
    snapshot_text[snapshot_text.size() / 2] = '9';
    write_file(dir.file("snapshot.csv"), snapshot_text);
    CHECK(run_cli("reduce --config " + cfg_path + " --design " + dir.file("design.csv") +
                  " --snapshot " + dir.file("snapshot.csv") + " --out " +
                  dir.file("rom2.json")) == 7);
}

TEST_CASE("cli evaluation failures exit with code 3") {
    CliDir dir;
    json cfg;
    cfg["parameters"] = {{"names", {"u"}}, {"lower", {0.0}}, {"upper", {1.0}}};
    cfg["design"] = {{"level", 1}};
    cfg["runner"] = {{"type", "external"}, {"command", "false"},
                     {"workdir", dir.file("work")}};
    const std::string cfg_path = write_config(dir, cfg);
    REQUIRE(run_cli("sample --config " + cfg_path + " --out-dir " + dir.path.string()) == 0);
    CHECK(run_cli("evaluate --config " + cfg_path + " --design " + dir.file("design.csv") +
                  " --out " + dir.file("snapshot.csv")) == 3);
}

TEST_CASE("cli reduce exits with code 4 on degenerate snapshots") {
    CliDir dir;
    json cfg;
    cfg["parameters"] = {{"names", {"u", "v"}}, {"lower", {0.0, 0.0}}, {"upper", {1.0, 1.0}}};
    cfg["design"] = {{"level", 1}};
    const std::string fixture = dir.file("fixture_out.csv");
    cfg["runner"] = {{"type", "external"},
                     {"command", "cp " + fixture + " batch_out.csv"},
                     {"workdir", dir.file("work")}};
    const std::string cfg_path = write_config(dir, cfg);
    REQUIRE(run_cli("sample --config " + cfg_path + " --out-dir " + dir.path.string()) == 0);

    const DesignFile design = read_design_csv(dir.file("design.csv"));
    std::ostringstream os;
    os << "point_id,a,b\n";
    for (const auto& id : design.point_ids) os << id << ",1.0,2.0\n";  // constant outputs
    write_file(fixture, os.str());

    REQUIRE(run_cli("evaluate --config " + cfg_path + " --design " + dir.file("design.csv") +
                    " --out " + dir.file("snapshot.csv")) == 0);
    CHECK(run_cli("reduce --config " + cfg_path + " --design " + dir.file("design.csv") +
                  " --snapshot " + dir.file("snapshot.csv") + " --out " +
                  dir.file("rom.json")) == 4);
}

TEST_CASE("cli flags override config keys") {
    CliDir dir;
    const std::string cfg_path = write_config(dir, fast_config_json(1));
    REQUIRE(run_cli("sample --config " + cfg_path + " --out-dir " + dir.path.string()) == 0);
    REQUIRE(run_cli("evaluate --config " + cfg_path + " --design " + dir.file("design.csv") +
                    " --out " + dir.file("snapshot.csv")) == 0);

    REQUIRE(run_cli("reduce --config " + cfg_path + " --design " + dir.file("design.csv") +
                    " --snapshot " + dir.file("snapshot.csv") + " --out " +
                    dir.file("rom_default.json")) == 0);
    REQUIRE(run_cli("reduce --config " + cfg_path + " --design " + dir.file("design.csv") +
                    " --snapshot " + dir.file("snapshot.csv") + " --out " +
                    dir.file("rom_lo.json") + " --threshold 0.5") == 0);

    const ReducedRom rom_default = rom_from_json(read_file(dir.file("rom_default.json")));
    const ReducedRom rom_lo = rom_from_json(read_file(dir.file("rom_lo.json")));
    CHECK(rom_lo.basis.variance_threshold == 0.5);
    CHECK(rom_lo.p() <= rom_default.p());
    CHECK(rom_lo.p() < 5);

    // --level override shrinks the design.
    REQUIRE(run_cli("sample --config " + cfg_path + " --out-dir " + dir.file("small") +
                    " --level 0") == 0);
    CHECK(read_design_csv(dir.file("small") + "/design.csv").points.size() == 1);

    // --delta is honored (recorded in the verification manifest).
    REQUIRE(run_cli("verify --config " + cfg_path + " --rom " + dir.file("rom_default.json") +
                    " --out " + dir.file("v.csv") + " --delta 0.25") == 0);
    const RunManifest manifest = read_manifest(dir.file("v.csv"));
    CHECK(manifest.extra_json.find("0.25") != std::string::npos);
}

TEST_CASE("cli handles external models with a different output dimension end to end") {
    CliDir dir;
    json cfg;
    cfg["parameters"] = {{"names", {"u", "v"}}, {"lower", {2.0, 5.0}}, {"upper", {4.0, 9.0}}};
    cfg["design"] = {{"level", 2}};
    // Awk model: two outputs, linear in the physical parameters.
    cfg["runner"] = {
        {"type", "external"},
        {"command",
         "awk -F, 'NR==1{print \"point_id,load,cost\"} NR>1{print $1 \",\" $2+2*$3 \",\" "
         "3*$2-$3}' batch_in.csv > batch_out.csv"},
        {"workdir", dir.file("work")}};
    const std::string cfg_path = write_config(dir, cfg);

    REQUIRE(run_cli("sample --config " + cfg_path + " --out-dir " + dir.path.string()) == 0);
    REQUIRE(run_cli("evaluate --config " + cfg_path + " --design " + dir.file("design.csv") +
                    " --out " + dir.file("snapshot.csv")) == 0);
    REQUIRE(run_cli("reduce --config " + cfg_path + " --design " + dir.file("design.csv") +
                    " --snapshot " + dir.file("snapshot.csv") + " --out " +
                    dir.file("rom.json")) == 0);
    REQUIRE(run_cli("report --rom " + dir.file("rom.json") + " --out-dir " +
                    dir.file("report")) == 0);

    const ReducedRom rom = rom_from_json(read_file(dir.file("rom.json")));
    CHECK(rom.row_labels == std::vector<std::string>{"load", "cost"});
    CHECK(rom.m() == 2);
    CHECK(rom.p() == 2);  // two independent linear outputs
    CHECK(rom.diagnostics.eq_residual <= 1e-8);

    const CsvTable directions = read_csv(dir.file("report") + "/directions.csv");
    CHECK(directions.rows.size() == 2);
    CHECK(directions.rows[0].fields[0] == "u");
    CHECK(directions.rows[1].fields[0] == "v");
}
