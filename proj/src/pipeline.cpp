#include "ioredux/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "ioredux/artifacts.hpp"
#include "ioredux/errors.hpp"

namespace ioredux {

using nlohmann::json;

DirectionSet directions_from_jacobian(const Eigen::MatrixXd& jacobian) {
    DirectionSet set;
    set.pinv = pseudoinverse(jacobian);
    set.directions = set.pinv;  // column j is exactly pinv * e_j
    set.rank = numerical_rank(jacobian);
    const Eigen::MatrixXd residual =
        jacobian * set.directions - Eigen::MatrixXd::Identity(jacobian.rows(), jacobian.rows());
    set.residual = residual.cwiseAbs().maxCoeff();
    return set;
}

ReducedRom build_rom(const ParameterSpace& space, const SnapshotMatrix& snapshots,
                     const SparseGrid& grid, const RomOptions& options) {
    validate_space(space);
    validate_snapshot(snapshots);
    if (space.dim() != grid.dim)
        throw std::invalid_argument("build_rom: parameter space dimension does not match grid");
    if (snapshots.design_ids.size() != grid.point_ids.size())
        throw std::invalid_argument("build_rom: snapshot column count does not match design");
    for (std::size_t j = 0; j < grid.point_ids.size(); ++j) {
        if (snapshots.design_ids[j] != grid.point_ids[j])
            throw std::invalid_argument("build_rom: snapshot columns are not aligned with the "
                                        "design (first mismatch at " + grid.point_ids[j] + ")");
    }

    ReducedRom rom;
    rom.space = space;
    rom.row_labels = snapshots.row_labels;
    rom.design_hash = options.design_hash;
    rom.snapshot_hash = options.snapshot_hash;

    rom.theta0 = options.theta0.size() == 0
                     ? Eigen::VectorXd::Constant(grid.dim, 0.5).eval()
                     : options.theta0;
    if (rom.theta0.size() != grid.dim)
        throw std::invalid_argument("build_rom: theta0 dimension mismatch");
    for (long i = 0; i < rom.theta0.size(); ++i) {
        if (!(rom.theta0(i) > 0.0 && rom.theta0(i) < 1.0))
            throw std::invalid_argument("build_rom: theta0 must lie strictly inside the cube");
    }

    auto [ystd, st] = standardize_rows(snapshots);
    rom.basis = truncated_pca(ystd, options.variance_threshold, st);

    const Eigen::MatrixXd reduced = rom.basis.u.transpose() * ystd;  // p x k

    const int degree = options.surrogate_degree >= 0 ? options.surrogate_degree : grid.level;
    const MultiIndexSet index_set = total_degree_set(grid.dim, degree);
    rom.surrogate = fit_gpce(grid, reduced, index_set);
    rom.surrogate.provenance.design_hash = options.design_hash;

    rom.jacobian = grad_surrogate(rom.surrogate, rom.theta0);
    const DirectionSet dirs = directions_from_jacobian(rom.jacobian);
    rom.jacobian_pinv = dirs.pinv;
    rom.directions = dirs.directions;

    rom.diagnostics.jacobian_rank = dirs.rank;
    rom.diagnostics.eq_residual = dirs.residual;
    rom.diagnostics.fit_residual = rom.surrogate.provenance.fit_residual;
    for (int j = 0; j < rom.p(); ++j) {
        rom.diagnostics.tau_norm2.push_back(rom.directions.col(j).norm());
        rom.diagnostics.tau_norminf.push_back(rom.directions.col(j).cwiseAbs().maxCoeff());
    }
    if (dirs.rank < rom.p()) {
        std::ostringstream os;
        os << "rank-deficient Jacobian: numerical rank " << dirs.rank << " < p = " << rom.p()
           << "; directions use the cutoff pseudoinverse";
        rom.diagnostics.warnings.push_back(os.str());
    }
    return rom;
}

Eigen::MatrixXd reduced_directions(const ReducedRom& rom) { return rom.directions; }

Eigen::MatrixXd verify_directions(const ReducedRom& rom, const ModelRunner& runner,
                                  double delta) {
    if (!(delta > 0.0)) throw std::invalid_argument("verify_directions: delta must be positive");
    const int p = rom.p();

    std::vector<Eigen::VectorXd> points;
    std::vector<std::string> ids;
    points.push_back(rom.theta0);
    ids.emplace_back("theta0");
    for (int j = 0; j < p; ++j) {
        Eigen::VectorXd pt = rom.theta0 + delta * rom.directions.col(j);
        for (long i = 0; i < pt.size(); ++i) {
            if (!(pt(i) >= 0.0 && pt(i) <= 1.0)) {
                std::ostringstream os;
                os << "verify_directions: theta0 + delta*tau_" << (j + 1)
                   << " leaves the unit cube at coordinate " << (i + 1) << " (value " << pt(i)
                   << "); rerun with a smaller delta";
                throw VerificationError(os.str());
            }
        }
        points.push_back(std::move(pt));
        ids.push_back("tau_" + std::to_string(j + 1));
    }

    const SnapshotMatrix snap = evaluate_design(runner, points, ids);
    if (snap.data.rows() != rom.basis.u.rows())
        throw EvaluationError("verify_directions: runner output dimension does not match ROM");

    const Eigen::VectorXd base = project(rom.basis, snap.data.col(0));
    Eigen::MatrixXd verification(p, p);
    for (int j = 0; j < p; ++j) {
        const Eigen::VectorXd response = project(rom.basis, snap.data.col(j + 1));
        verification.col(j) = (response - base) / delta;
    }
    return verification;
}

PlanResult plan_for_target(const ReducedRom& rom, const Eigen::VectorXd& y_target) {
    if (y_target.size() != rom.basis.u.rows())
        throw std::invalid_argument("plan_for_target: target length does not match outputs");
    if (!y_target.allFinite())
        throw std::invalid_argument("plan_for_target: non-finite target");

    PlanResult plan;
    plan.target = y_target;
    plan.coefficients = project(rom.basis, y_target) - eval_surrogate(rom.surrogate, rom.theta0);
    plan.theta_unclamped = rom.theta0 + rom.jacobian_pinv * plan.coefficients;

    plan.theta_plan = plan.theta_unclamped;
    plan.clamped.assign(static_cast<std::size_t>(plan.theta_plan.size()), false);
    double worst = 0.0;
    for (long i = 0; i < plan.theta_plan.size(); ++i) {
        const double v = plan.theta_plan(i);
        const double c = std::clamp(v, 0.0, 1.0);
        if (c != v) {
            plan.clamped[static_cast<std::size_t>(i)] = true;
            worst = std::max(worst, std::abs(v - c));
            plan.theta_plan(i) = c;
        }
    }
    plan.reachability_warning = worst > kReachabilityTol;
    plan.predicted_reduced = eval_surrogate(rom.surrogate, plan.theta_plan);
    return plan;
}

Eigen::MatrixXd export_loadings(const ReducedRom& rom) {
    Eigen::MatrixXd loadings = rom.basis.u;
    for (int j = 0; j < rom.p(); ++j) loadings.col(j) *= rom.basis.singular_values(j);
    return loadings;
}

SnapshotMatrix SurrogateReconstructionRunner::run(
    const std::vector<Eigen::VectorXd>& unit_points,
    const std::vector<std::string>& point_ids) const {
    SnapshotMatrix snap;
    snap.row_labels = rom_.row_labels;
    snap.design_ids = point_ids;
    snap.data.resize(rom_.basis.u.rows(), static_cast<long>(unit_points.size()));
    for (std::size_t j = 0; j < unit_points.size(); ++j) {
        const Eigen::VectorXd reduced = eval_surrogate(rom_.surrogate, unit_points[j]);
        snap.data.col(static_cast<long>(j)) = reconstruct(rom_.basis, reduced);
    }
    return snap;
}

// --- ROM artifact (JSON) ------------------------------------------------------

namespace {

json vector_to_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (long i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (long i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (long j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

Eigen::VectorXd vector_from_json(const json& a) {
    Eigen::VectorXd v(static_cast<long>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<long>(i)) = a[i].get<double>();
    return v;
}

Eigen::MatrixXd matrix_from_json(const json& rows) {
    const long r = static_cast<long>(rows.size());
    const long c = r > 0 ? static_cast<long>(rows[0].size()) : 0;
    Eigen::MatrixXd m(r, c);
    for (long i = 0; i < r; ++i) {
        const json& row = rows[static_cast<std::size_t>(i)];
        if (static_cast<long>(row.size()) != c)
            throw std::runtime_error("rom artifact: ragged matrix");
        for (long j = 0; j < c; ++j) m(i, j) = row[static_cast<std::size_t>(j)].get<double>();
    }
    return m;
}

}  // namespace

std::string rom_to_json(const ReducedRom& rom) {
    json j;
    j["format"] = "ioredux-rom";
    std::vector<std::string> densities = rom.space.densities;
    if (densities.empty()) densities.assign(rom.space.names.size(), "uniform");
    j["parameter_space"] = {{"names", rom.space.names},
                            {"lower", vector_to_json(rom.space.lower)},
                            {"upper", vector_to_json(rom.space.upper)},
                            {"density", densities}};
    j["row_labels"] = rom.row_labels;
    j["standardization"] = {{"means", vector_to_json(rom.basis.standardization.means)},
                            {"scales", vector_to_json(rom.basis.standardization.scales)}};
    j["basis"] = {{"u", matrix_to_json(rom.basis.u)},
                  {"singular_values", vector_to_json(rom.basis.singular_values)},
                  {"p", rom.basis.p},
                  {"retained_variance", rom.basis.retained_variance},
                  {"variance_threshold", rom.basis.variance_threshold}};
    j["surrogate"] = {{"dim", rom.surrogate.index_set.dim},
                      {"max_total_degree", rom.surrogate.index_set.max_total_degree},
                      {"indices", rom.surrogate.index_set.indices},
                      {"coeffs", matrix_to_json(rom.surrogate.coeffs)},
                      {"fit_residual", rom.surrogate.provenance.fit_residual},
                      {"grid_dim", rom.surrogate.provenance.grid_dim},
                      {"grid_level", rom.surrogate.provenance.grid_level},
                      {"index_degree", rom.surrogate.provenance.index_degree}};
    j["theta0"] = vector_to_json(rom.theta0);
    j["jacobian"] = matrix_to_json(rom.jacobian);
    j["jacobian_pinv"] = matrix_to_json(rom.jacobian_pinv);
    j["directions"] = matrix_to_json(rom.directions);
    j["design_hash"] = rom.design_hash;
    j["snapshot_hash"] = rom.snapshot_hash;
    j["diagnostics"] = {{"jacobian_rank", rom.diagnostics.jacobian_rank},
                        {"eq_residual", rom.diagnostics.eq_residual},
                        {"fit_residual", rom.diagnostics.fit_residual},
                        {"tau_norm2", rom.diagnostics.tau_norm2},
                        {"tau_norminf", rom.diagnostics.tau_norminf},
                        {"warnings", rom.diagnostics.warnings}};
    j["tool_version"] = "0.1.0";
    return j.dump(2) + "\n";
}

ReducedRom rom_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("rom artifact: invalid json: ") + e.what());
    }
    if (j.value("format", "") != "ioredux-rom")
        throw std::runtime_error("rom artifact: unrecognized format");

    ReducedRom rom;
    rom.space.names = j["parameter_space"]["names"].get<std::vector<std::string>>();
    rom.space.lower = vector_from_json(j["parameter_space"]["lower"]);
    rom.space.upper = vector_from_json(j["parameter_space"]["upper"]);
    if (j["parameter_space"].contains("density"))
        rom.space.densities =
            j["parameter_space"]["density"].get<std::vector<std::string>>();
    rom.row_labels = j["row_labels"].get<std::vector<std::string>>();
    rom.basis.standardization.means = vector_from_json(j["standardization"]["means"]);
    rom.basis.standardization.scales = vector_from_json(j["standardization"]["scales"]);
    rom.basis.u = matrix_from_json(j["basis"]["u"]);
    rom.basis.singular_values = vector_from_json(j["basis"]["singular_values"]);
    rom.basis.p = j["basis"]["p"].get<int>();
    rom.basis.retained_variance = j["basis"]["retained_variance"].get<double>();
    rom.basis.variance_threshold = j["basis"]["variance_threshold"].get<double>();
    rom.surrogate.index_set.dim = j["surrogate"]["dim"].get<int>();
    rom.surrogate.index_set.max_total_degree = j["surrogate"]["max_total_degree"].get<int>();
    rom.surrogate.index_set.indices =
        j["surrogate"]["indices"].get<std::vector<std::vector<int>>>();
    rom.surrogate.coeffs = matrix_from_json(j["surrogate"]["coeffs"]);
    rom.surrogate.p = static_cast<int>(rom.surrogate.coeffs.rows());
    rom.surrogate.provenance.fit_residual = j["surrogate"]["fit_residual"].get<double>();
    rom.surrogate.provenance.grid_dim = j["surrogate"]["grid_dim"].get<int>();
    rom.surrogate.provenance.grid_level = j["surrogate"]["grid_level"].get<int>();
    rom.surrogate.provenance.index_degree = j["surrogate"]["index_degree"].get<int>();
    rom.surrogate.provenance.design_hash = j.value("design_hash", "");
    rom.theta0 = vector_from_json(j["theta0"]);
    rom.jacobian = matrix_from_json(j["jacobian"]);
    rom.jacobian_pinv = matrix_from_json(j["jacobian_pinv"]);
    rom.directions = matrix_from_json(j["directions"]);
    rom.design_hash = j.value("design_hash", "");
    rom.snapshot_hash = j.value("snapshot_hash", "");
    const json& d = j["diagnostics"];
    rom.diagnostics.jacobian_rank = d.value("jacobian_rank", 0);
    rom.diagnostics.eq_residual = d.value("eq_residual", 0.0);
    rom.diagnostics.fit_residual = d.value("fit_residual", 0.0);
    rom.diagnostics.tau_norm2 = d.value("tau_norm2", std::vector<double>{});
    rom.diagnostics.tau_norminf = d.value("tau_norminf", std::vector<double>{});
    rom.diagnostics.warnings = d.value("warnings", std::vector<std::string>{});
    return rom;
}

}  // namespace ioredux
