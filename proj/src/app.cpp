#include "ioredux/app.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "ioredux/artifacts.hpp"
#include "ioredux/errors.hpp"
#include "ioredux/version.hpp"

namespace ioredux::app {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

Eigen::VectorXd vector_from_json(const json& a, const char* what) {
    if (!a.is_array()) throw ConfigError(std::string("config: ") + what + " must be an array");
    Eigen::VectorXd v(static_cast<long>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a[i].is_number()) throw ConfigError(std::string("config: ") + what + " must be numeric");
        v(static_cast<long>(i)) = a[i].get<double>();
    }
    return v;
}

ModelConfig model_config_from_json(const json& m) {
    ModelConfig c;
    if (m.contains("groups")) {
        const auto groups = m["groups"].get<std::vector<std::string>>();
        if (groups.size() != kGroups) throw ConfigError("config: model.groups must have 4 entries");
        for (int g = 0; g < kGroups; ++g) c.groups[static_cast<std::size_t>(g)] = groups[g];
    }
    c.population = vector_from_json(m.at("population"), "model.population");
    c.initial_undiagnosed = vector_from_json(m.at("initial_undiagnosed"), "model.initial_undiagnosed");
    c.initial_diagnosed = vector_from_json(m.at("initial_diagnosed"), "model.initial_diagnosed");
    c.initial_treated = vector_from_json(m.at("initial_treated"), "model.initial_treated");
    c.beta = vector_from_json(m.at("beta"), "model.beta");

    const json& mix = m.at("mixing");
    if (!mix.is_array() || mix.size() != kGroups)
        throw ConfigError("config: model.mixing must be a 4x4 array");
    c.mixing.resize(kGroups, kGroups);
    for (int g = 0; g < kGroups; ++g) {
        const json& row = mix[static_cast<std::size_t>(g)];
        if (!row.is_array() || row.size() != kGroups)
            throw ConfigError("config: model.mixing must be a 4x4 array");
        for (int h = 0; h < kGroups; ++h)
            c.mixing(g, h) = row[static_cast<std::size_t>(h)].get<double>();
    }

    if (m.contains("infectiousness")) {
        const json& w = m["infectiousness"];
        c.infectiousness_undiagnosed = w.value("undiagnosed", 1.0);
        c.infectiousness_diagnosed = w.value("diagnosed", 0.7);
        c.infectiousness_treated = w.value("treated", 0.1);
    }
    c.prophylaxis_efficacy = m.value("prophylaxis_efficacy", 0.99);

    const json& costs = m.at("costs");
    c.costs.prophylaxis_per_person_year = costs.at("prophylaxis_per_person_year").get<double>();
    c.costs.care_diagnosed_per_person_year = costs.at("care_diagnosed_per_person_year").get<double>();
    c.costs.care_treated_per_person_year = costs.at("care_treated_per_person_year").get<double>();
    c.costs.per_test = costs.at("per_test").get<double>();
    c.costs.per_diagnosis = costs.at("per_diagnosis").get<double>();

    c.horizon_years = m.value("horizon_years", 8.0);
    c.step_years = m.value("step_years", 0.01);

    const json& baselines = m.at("baselines");
    const auto& names = builtin_parameter_names();
    c.baselines.resize(kParams);
    for (int i = 0; i < kParams; ++i) {
        if (!baselines.contains(names[static_cast<std::size_t>(i)]))
            throw ConfigError("config: model.baselines missing '" +
                              names[static_cast<std::size_t>(i)] + "'");
        c.baselines(i) = baselines[names[static_cast<std::size_t>(i)]].get<double>();
    }
    c.box_factor = m.value("box_factor", 3.0);
    validate_model_config(c);
    return c;
}

}  // namespace

AppConfig load_config(const std::string& path) {
    AppConfig config;
    config.path = path;
    std::string text;
    try {
        text = read_file(path);
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    config.hash = hash_bytes(text);

    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw ConfigError(path + ": invalid json: " + std::string(e.what()));
    }

    try {
        if (j.contains("model")) config.model = model_config_from_json(j["model"]);
        if (j.contains("parameters")) {
            ParameterSpace space;
            space.names = j["parameters"].at("names").get<std::vector<std::string>>();
            space.lower = vector_from_json(j["parameters"].at("lower"), "parameters.lower");
            space.upper = vector_from_json(j["parameters"].at("upper"), "parameters.upper");
            if (j["parameters"].contains("density"))
                space.densities = j["parameters"]["density"].get<std::vector<std::string>>();
            validate_space(space);
            config.parameters = std::move(space);
        }
        if (j.contains("design")) {
            config.design_level = j["design"].value("level", 2);
            config.max_points = j["design"].value("max_points", kDefaultPointCap);
        }
        if (j.contains("reduce")) {
            config.variance_threshold = j["reduce"].value("variance_threshold", 0.95);
            config.surrogate_degree = j["reduce"].value("degree", -1);
            if (j["reduce"].contains("theta0")) {
                const json& t0 = j["reduce"]["theta0"];
                if (t0.is_number()) {
                    config.theta0 = Eigen::VectorXd();  // resolved once dim is known
                    config.theta0.resize(1);
                    config.theta0(0) = t0.get<double>();
                } else {
                    config.theta0 = vector_from_json(t0, "reduce.theta0");
                }
            }
        }
        if (j.contains("verify")) {
            config.verify_delta = j["verify"].value("delta", 1.0);
            config.verify_diag_low = j["verify"].value("diag_low", 0.9);
            config.verify_diag_high = j["verify"].value("diag_high", 1.1);
            config.verify_offdiag_max = j["verify"].value("offdiag_max", 0.05);
        }
        if (j.contains("runner")) {
            config.runner_type = j["runner"].value("type", "builtin");
            config.runner_command = j["runner"].value("command", "");
            config.runner_workdir = j["runner"].value("workdir", "");
            config.jobs = j["runner"].value("jobs", 1);
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(path + ": " + std::string(e.what()));
    }

    if (config.runner_type != "builtin" && config.runner_type != "external")
        throw ConfigError("config: runner.type must be 'builtin' or 'external'");
    if (config.runner_type == "builtin" && !config.model)
        throw ConfigError("config: builtin runner requires a model block");
    if (!(config.design_level >= 0)) throw ConfigError("config: design.level must be >= 0");
    if (!(config.variance_threshold > 0.0 && config.variance_threshold <= 1.0))
        throw ConfigError("config: reduce.variance_threshold must lie in (0, 1]");
    if (!(config.verify_delta > 0.0)) throw ConfigError("config: verify.delta must be positive");
    if (config.jobs < 1) throw ConfigError("config: runner.jobs must be >= 1");
    return config;
}

ParameterSpace config_space(const AppConfig& config) {
    if (config.parameters) return *config.parameters;
    if (config.model) return parameter_space(*config.model);
    throw ConfigError("config: needs a 'parameters' or 'model' block to define the space");
}

std::unique_ptr<ModelRunner> make_runner(const AppConfig& config, int jobs) {
    const int effective_jobs = jobs > 0 ? jobs : config.jobs;
    if (config.runner_type == "builtin") {
        return std::make_unique<BuiltinRunner>(*config.model, effective_jobs);
    }
    std::string command = config.runner_command;
    if (const char* env = std::getenv("IOREDUX_MODEL_COMMAND"); env && *env) command = env;
    if (command.empty())
        throw ConfigError("config: external runner requires runner.command or IOREDUX_MODEL_COMMAND");
    return std::make_unique<ExternalBatchRunner>(config_space(config), command,
                                                 config.runner_workdir);
}

namespace {

Eigen::VectorXd resolve_theta0(const AppConfig& config, int dim) {
    if (config.theta0.size() == 0) return Eigen::VectorXd::Constant(dim, 0.5);
    if (config.theta0.size() == 1) return Eigen::VectorXd::Constant(dim, config.theta0(0));
    if (config.theta0.size() != dim)
        throw ConfigError("config: reduce.theta0 length does not match the parameter dimension");
    return config.theta0;
}

struct GridFromManifest {
    SparseGrid grid;
    ArtifactRef design_ref;
};

// Rebuilds the grid recorded in the design manifest and checks both the file
// hash and the regenerated point ids.
GridFromManifest load_grid(const std::string& design_path) {
    GridFromManifest out;
    out.design_ref = verify_artifact(design_path, "design_csv");
    RunManifest manifest = read_manifest(design_path);
    if (manifest.extra_json.empty())
        throw ProvenanceError("design manifest lacks grid details: " + design_path);
    const json details = json::parse(manifest.extra_json);
    const int dim = details.at("dim").get<int>();
    const int level = details.at("level").get<int>();
    out.grid = smolyak_grid(dim, level, details.value("max_points", kDefaultPointCap));

    DesignFile file = read_design_csv(design_path);
    if (file.point_ids != out.grid.point_ids || file.dim != out.grid.dim)
        throw ProvenanceError("design file does not match the grid recorded in its manifest");
    return out;
}

void print_matrix_human(const Eigen::MatrixXd& m, const std::string& row_prefix) {
    for (long i = 0; i < m.rows(); ++i) {
        std::cout << "  " << row_prefix << (i + 1) << ":";
        for (long j = 0; j < m.cols(); ++j) std::cout << " " << format_human(m(i, j));
        std::cout << "\n";
    }
}

}  // namespace

void cmd_sample(const SampleOptions& opt) {
    AppConfig config = load_config(opt.config_path);
    const ParameterSpace space = config_space(config);
    const int level = opt.level >= 0 ? opt.level : config.design_level;

    SparseGrid grid;
    try {
        grid = smolyak_grid(space.dim(), level, config.max_points);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    fs::create_directories(opt.out_dir);
    const std::string design_path = (fs::path(opt.out_dir) / "design.csv").string();
    const std::string csv = design_csv(grid);
    write_file(design_path, csv);

    RunManifest manifest;
    manifest.command = "sample";
    manifest.config_path = opt.config_path;
    manifest.config_hash = config.hash;
    manifest.outputs.emplace_back("design_csv", ArtifactRef{design_path, hash_bytes(csv)});
    json details;
    details["dim"] = grid.dim;
    details["level"] = grid.level;
    details["point_count"] = grid.points.size();
    details["max_points"] = config.max_points;
    details["weights"] = grid.weights;
    manifest.extra_json = details.dump();
    write_manifest(manifest, design_path);

    std::cout << "sample: wrote " << grid.points.size() << " design points (dim=" << grid.dim
              << ", level=" << grid.level << ") to " << design_path << "\n";
}

void cmd_evaluate(const EvaluateOptions& opt) {
    AppConfig config = load_config(opt.config_path);
    const ArtifactRef design_ref = verify_artifact(opt.design_path, "design_csv");
    const DesignFile design = read_design_csv(opt.design_path);

    const ParameterSpace space = config_space(config);
    if (design.dim != space.dim())
        throw ConfigError("design dimension does not match the configured parameter space");

    auto runner = make_runner(config, opt.jobs);
    const SnapshotMatrix snap = evaluate_design(*runner, design.points, design.point_ids);

    const std::string csv = snapshot_csv(snap);
    write_file(opt.out_path, csv);

    RunManifest manifest;
    manifest.command = "evaluate";
    manifest.config_path = opt.config_path;
    manifest.config_hash = config.hash;
    manifest.inputs.emplace_back("design_csv", design_ref);
    manifest.outputs.emplace_back("snapshot_csv", ArtifactRef{opt.out_path, hash_bytes(csv)});
    json details;
    details["runner"] = config.runner_type;
    details["points"] = design.points.size();
    details["outputs"] = snap.row_labels;
    manifest.extra_json = details.dump();
    write_manifest(manifest, opt.out_path);

    std::cout << "evaluate: wrote " << snap.data.rows() << "x" << snap.data.cols()
              << " snapshot to " << opt.out_path << "\n";
}

void cmd_reduce(const ReduceOptions& opt) {
    AppConfig config = load_config(opt.config_path);

    GridFromManifest gm = load_grid(opt.design_path);
    const ArtifactRef snap_ref = verify_artifact(opt.snapshot_path, "snapshot_csv");

    // The snapshot must have been evaluated on exactly this design.
    RunManifest snap_manifest = read_manifest(opt.snapshot_path);
    bool linked = false;
    for (const auto& [name, ref] : snap_manifest.inputs) {
        if (name == "design_csv") {
            linked = true;
            if (ref.hash != gm.design_ref.hash)
                throw ProvenanceError("snapshot was evaluated on a different design (" + ref.hash +
                                      " != " + gm.design_ref.hash + ")");
        }
    }
    if (!linked) throw ProvenanceError("snapshot manifest does not record its design");

    const SnapshotMatrix snap = read_snapshot_csv(opt.snapshot_path);
    const ParameterSpace space = config_space(config);

    RomOptions rom_opt;
    rom_opt.variance_threshold = opt.threshold > 0.0 ? opt.threshold : config.variance_threshold;
    rom_opt.theta0 = resolve_theta0(config, space.dim());
    rom_opt.surrogate_degree = opt.degree >= -1 ? opt.degree : config.surrogate_degree;
    rom_opt.design_hash = gm.design_ref.hash;
    rom_opt.snapshot_hash = snap_ref.hash;

    ReducedRom rom;
    try {
        rom = build_rom(space, snap, gm.grid, rom_opt);
    } catch (const ReductionError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ReductionError(e.what());
    }

    const std::string rom_json = rom_to_json(rom);
    write_file(opt.out_path, rom_json);

    RunManifest manifest;
    manifest.command = "reduce";
    manifest.config_path = opt.config_path;
    manifest.config_hash = config.hash;
    manifest.inputs.emplace_back("design_csv", gm.design_ref);
    manifest.inputs.emplace_back("snapshot_csv", snap_ref);
    manifest.outputs.emplace_back("rom_json", ArtifactRef{opt.out_path, hash_bytes(rom_json)});
    write_manifest(manifest, opt.out_path);

    std::cout << "reduce: p = " << rom.p() << ", retained variance = "
              << format_human(rom.basis.retained_variance) << " (threshold "
              << format_human(rom_opt.variance_threshold) << ")\n";
    std::cout << "  singular values:";
    for (long i = 0; i < rom.basis.singular_values.size(); ++i)
        std::cout << " " << format_human(rom.basis.singular_values(i));
    std::cout << "\n  jacobian rank: " << rom.diagnostics.jacobian_rank
              << ", fit residual: " << format_human(rom.diagnostics.fit_residual)
              << ", eq residual: " << format_human(rom.diagnostics.eq_residual) << "\n";
    std::cout << "  |tau_j|_inf:";
    for (double v : rom.diagnostics.tau_norminf) std::cout << " " << format_human(v);
    std::cout << "\n";
    for (const auto& w : rom.diagnostics.warnings) std::cout << "  warning: " << w << "\n";
    std::cout << "  wrote " << opt.out_path << "\n";
}

bool cmd_verify(const VerifyOptions& opt) {
    AppConfig config = load_config(opt.config_path);
    const ArtifactRef rom_ref = verify_artifact(opt.rom_path, "rom_json");
    const ReducedRom rom = rom_from_json(read_file(opt.rom_path));

    auto runner = make_runner(config, opt.jobs);
    const double delta = opt.delta > 0.0 ? opt.delta : config.verify_delta;
    const Eigen::MatrixXd v = verify_directions(rom, *runner, delta);

    std::ostringstream csv;
    csv << "component";
    for (int j = 1; j <= rom.p(); ++j) csv << ",tau_" << j;
    csv << "\n";
    for (long i = 0; i < v.rows(); ++i) {
        csv << "pc_" << (i + 1);
        for (long j = 0; j < v.cols(); ++j) csv << "," << format_full(v(i, j));
        csv << "\n";
    }
    write_file(opt.out_path, csv.str());

    RunManifest manifest;
    manifest.command = "verify";
    manifest.config_path = opt.config_path;
    manifest.config_hash = config.hash;
    manifest.inputs.emplace_back("rom_json", rom_ref);
    manifest.outputs.emplace_back("verification_csv",
                                  ArtifactRef{opt.out_path, hash_bytes(csv.str())});
    json details;
    details["delta"] = delta;
    manifest.extra_json = details.dump();
    write_manifest(manifest, opt.out_path);

    bool pass = true;
    double worst_diag = 1.0, worst_off = 0.0;
    for (long i = 0; i < v.rows(); ++i) {
        for (long j = 0; j < v.cols(); ++j) {
            if (i == j) {
                if (v(i, j) < config.verify_diag_low || v(i, j) > config.verify_diag_high)
                    pass = false;
                if (std::abs(v(i, j) - 1.0) > std::abs(worst_diag - 1.0)) worst_diag = v(i, j);
            } else {
                if (std::abs(v(i, j)) > config.verify_offdiag_max) pass = false;
                worst_off = std::max(worst_off, std::abs(v(i, j)));
            }
        }
    }

    std::cout << "verify: delta = " << format_human(delta) << "\n";
    print_matrix_human(v, "pc_");
    std::cout << "  worst diagonal " << format_human(worst_diag) << " (tolerance ["
              << format_human(config.verify_diag_low) << ", "
              << format_human(config.verify_diag_high) << "]), worst off-diagonal "
              << format_human(worst_off) << " (tolerance "
              << format_human(config.verify_offdiag_max) << ")\n";
    std::cout << "  " << (pass ? "PASS" : "FAIL") << ", wrote " << opt.out_path << "\n";
    return pass;
}

bool cmd_plan(const PlanOptions& opt) {
    const ArtifactRef rom_ref = verify_artifact(opt.rom_path, "rom_json");
    const ReducedRom rom = rom_from_json(read_file(opt.rom_path));

    TargetSet targets = read_targets_csv(opt.targets_path);
    if (targets.labels != rom.row_labels) {
        std::ostringstream os;
        os << "targets columns do not match ROM outputs; expected";
        for (const auto& l : rom.row_labels) os << " " << l;
        throw TargetsError(os.str());
    }

    std::vector<PlanResult> plans;
    plans.reserve(targets.values.size());
    for (const auto& target : targets.values) plans.push_back(plan_for_target(rom, target));

    AppConfig config;
    std::unique_ptr<ModelRunner> runner;
    Eigen::MatrixXd achieved;
    if (opt.evaluate) {
        if (opt.config_path.empty())
            throw ConfigError("plan --evaluate requires --config for the model runner");
        config = load_config(opt.config_path);
        runner = make_runner(config, opt.jobs);
        std::vector<Eigen::VectorXd> points;
        std::vector<std::string> ids;
        for (std::size_t t = 0; t < plans.size(); ++t) {
            points.push_back(plans[t].theta_plan);
            ids.push_back(targets.target_ids[t]);
        }
        const SnapshotMatrix snap = evaluate_design(*runner, points, ids);
        if (snap.data.rows() != static_cast<long>(rom.row_labels.size()))
            throw EvaluationError("plan: runner output dimension does not match ROM");
        achieved = snap.data;
    }

    const int m = rom.m();
    const int p = rom.p();
    const long d = static_cast<long>(rom.row_labels.size());

    std::ostringstream csv;
    csv << "target_id";
    for (const auto& l : rom.row_labels) csv << ",target_" << l;
    for (int i = 1; i <= p; ++i) csv << ",a_" << i;
    for (int i = 1; i <= m; ++i) csv << ",theta_" << i;
    for (const auto& name : rom.space.names) csv << ",theta_hat_" << name;
    for (int i = 1; i <= m; ++i) csv << ",clamped_" << i;
    csv << ",reachability_warning";
    if (opt.evaluate) {
        for (const auto& l : rom.row_labels) csv << ",achieved_" << l;
        for (const auto& l : rom.row_labels) csv << ",relerr_" << l;
    }
    csv << "\n";

    bool any_warning = false;
    for (std::size_t t = 0; t < plans.size(); ++t) {
        const PlanResult& plan = plans[t];
        any_warning = any_warning || plan.reachability_warning;
        csv << targets.target_ids[t];
        for (long i = 0; i < d; ++i) csv << "," << format_full(plan.target(i));
        for (int i = 0; i < p; ++i) csv << "," << format_full(plan.coefficients(i));
        for (int i = 0; i < m; ++i) csv << "," << format_full(plan.theta_plan(i));
        const Eigen::VectorXd theta_hat = from_unit(rom.space, plan.theta_plan);
        for (int i = 0; i < m; ++i) csv << "," << format_full(theta_hat(i));
        for (int i = 0; i < m; ++i) csv << "," << (plan.clamped[static_cast<std::size_t>(i)] ? 1 : 0);
        csv << "," << (plan.reachability_warning ? 1 : 0);
        if (opt.evaluate) {
            for (long i = 0; i < d; ++i) csv << "," << format_full(achieved(i, static_cast<long>(t)));
            for (long i = 0; i < d; ++i) {
                const double target = plan.target(i);
                const double denom = std::abs(target) > 0.0 ? std::abs(target) : 1.0;
                csv << "," << format_full(std::abs(achieved(i, static_cast<long>(t)) - target) / denom);
            }
        }
        csv << "\n";

        std::cout << "plan " << targets.target_ids[t] << ":";
        bool clamped_any = false;
        for (bool c : plan.clamped) clamped_any = clamped_any || c;
        if (clamped_any) std::cout << " [clamped]";
        if (plan.reachability_warning) std::cout << " [reachability warning]";
        std::cout << " theta_plan =";
        for (int i = 0; i < m; ++i) std::cout << " " << format_human(plan.theta_plan(i));
        std::cout << "\n";
    }

    write_file(opt.out_path, csv.str());

    RunManifest manifest;
    manifest.command = "plan";
    manifest.config_path = opt.config_path;
    manifest.config_hash = config.hash;
    manifest.inputs.emplace_back("rom_json", rom_ref);
    manifest.inputs.emplace_back("targets_csv",
                                 ArtifactRef{opt.targets_path, hash_file(opt.targets_path)});
    manifest.outputs.emplace_back("plans_csv", ArtifactRef{opt.out_path, hash_bytes(csv.str())});
    write_manifest(manifest, opt.out_path);

    std::cout << "plan: wrote " << plans.size() << " plan(s) to " << opt.out_path << "\n";
    return !any_warning;
}

void cmd_report(const ReportOptions& opt) {
    const ArtifactRef rom_ref = verify_artifact(opt.rom_path, "rom_json");
    const ReducedRom rom = rom_from_json(read_file(opt.rom_path));

    fs::create_directories(opt.out_dir);
    const Eigen::MatrixXd loadings = export_loadings(rom);

    std::ostringstream lcsv;
    lcsv << "output";
    for (int j = 1; j <= rom.p(); ++j) lcsv << ",pc_" << j;
    lcsv << "\n";
    for (long i = 0; i < loadings.rows(); ++i) {
        lcsv << rom.row_labels[static_cast<std::size_t>(i)];
        for (long j = 0; j < loadings.cols(); ++j) lcsv << "," << format_full(loadings(i, j));
        lcsv << "\n";
    }
    const std::string loadings_path = (fs::path(opt.out_dir) / "loadings.csv").string();
    write_file(loadings_path, lcsv.str());

    std::ostringstream dcsv;
    dcsv << "parameter";
    for (int j = 1; j <= rom.p(); ++j) dcsv << ",tau_" << j;
    dcsv << "\n";
    for (int i = 0; i < rom.m(); ++i) {
        dcsv << rom.space.names[static_cast<std::size_t>(i)];
        for (int j = 0; j < rom.p(); ++j) dcsv << "," << format_full(rom.directions(i, j));
        dcsv << "\n";
    }
    const std::string directions_path = (fs::path(opt.out_dir) / "directions.csv").string();
    write_file(directions_path, dcsv.str());

    for (const auto& [name, path, content] :
         {std::make_tuple(std::string("loadings_csv"), loadings_path, lcsv.str()),
          std::make_tuple(std::string("directions_csv"), directions_path, dcsv.str())}) {
        RunManifest manifest;
        manifest.command = "report";
        manifest.inputs.emplace_back("rom_json", rom_ref);
        manifest.outputs.emplace_back(name, ArtifactRef{path, hash_bytes(content)});
        write_manifest(manifest, path);
    }

    std::cout << "report: wrote " << loadings_path << " and " << directions_path << "\n";
}

}  // namespace ioredux::app
