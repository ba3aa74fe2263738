#include "ioredux/runner.hpp"

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "ioredux/artifacts.hpp"
#include "ioredux/errors.hpp"

namespace ioredux {

BuiltinRunner::BuiltinRunner(ModelConfig config, int jobs)
    : config_(std::move(config)), space_(parameter_space(config_)), jobs_(std::max(1, jobs)) {}

SnapshotMatrix BuiltinRunner::run(const std::vector<Eigen::VectorXd>& unit_points,
                                  const std::vector<std::string>& point_ids) const {
    const std::size_t k = unit_points.size();
    if (point_ids.size() != k)
        throw std::invalid_argument("runner: one point id per design point required");

    SnapshotMatrix snap;
    snap.row_labels = builtin_output_labels();
    snap.design_ids = point_ids;
    snap.data.resize(kOutputs, static_cast<long>(k));

    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::mutex error_mutex;
    std::string error_message;

    auto worker = [&]() {
        while (!failed.load()) {
            const std::size_t j = next.fetch_add(1);
            if (j >= k) break;
            try {
                const Eigen::VectorXd theta_hat = from_unit(space_, unit_points[j]);
                const OutcomeVector out = outcomes(simulate(config_, theta_hat));
                snap.data.col(static_cast<long>(j)) = out.values;
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!failed.exchange(true))
                    error_message = "evaluation failed at point " + point_ids[j] + ": " + e.what();
            }
        }
    };

    const int nthreads = std::min<std::size_t>(jobs_, std::max<std::size_t>(k, 1));
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(nthreads);
        for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failed.load()) throw EvaluationError(error_message);
    return snap;
}

ExternalBatchRunner::ExternalBatchRunner(ParameterSpace space, std::string command,
                                         std::string workdir)
    : space_(std::move(space)), command_(std::move(command)), workdir_(std::move(workdir)) {
    validate_space(space_);
    if (command_.empty()) throw ConfigError("external runner: empty command");
}

SnapshotMatrix ExternalBatchRunner::run(const std::vector<Eigen::VectorXd>& unit_points,
                                        const std::vector<std::string>& point_ids) const {
    const std::size_t k = unit_points.size();
    if (point_ids.size() != k)
        throw std::invalid_argument("runner: one point id per design point required");

    namespace fs = std::filesystem;
    const fs::path dir = workdir_.empty() ? fs::current_path() : fs::path(workdir_);
    fs::create_directories(dir);
    const fs::path in_path = dir / "batch_in.csv";
    const fs::path out_path = dir / "batch_out.csv";
    std::error_code ec;
    fs::remove(out_path, ec);

    {
        std::ofstream in(in_path);
        if (!in) throw EvaluationError("external runner: cannot write " + in_path.string());
        in << "point_id";
        for (int i = 1; i <= space_.dim(); ++i) in << ",theta_hat_" << i;
        in << "\n";
        for (std::size_t j = 0; j < k; ++j) {
            const Eigen::VectorXd theta_hat = from_unit(space_, unit_points[j]);
            in << point_ids[j];
            for (long i = 0; i < theta_hat.size(); ++i)
                in << "," << format_full(theta_hat(i));
            in << "\n";
        }
    }

    const std::string cmd = "cd \"" + dir.string() + "\" && " + command_;
    const int status = std::system(cmd.c_str());
    if (status != 0) {
        std::ostringstream os;
        os << "external model command failed with status " << status << ": " << command_;
        throw EvaluationError(os.str());
    }

    CsvTable table = read_csv(out_path.string());
    if (table.header.empty() || table.header[0] != "point_id")
        throw EvaluationError("batch_out.csv: first column must be point_id");
    const std::size_t d = table.header.size() - 1;
    if (d == 0) throw EvaluationError("batch_out.csv: no output columns");

    std::map<std::string, std::vector<double>> rows;
    for (const auto& row : table.rows) {
        if (row.fields.size() != table.header.size())
            throw EvaluationError("batch_out.csv: ragged row for point " +
                                  (row.fields.empty() ? std::string("?") : row.fields[0]));
        std::vector<double> vals(d);
        for (std::size_t i = 0; i < d; ++i) vals[i] = parse_double(row.fields[i + 1]);
        if (!rows.emplace(row.fields[0], std::move(vals)).second)
            throw EvaluationError("batch_out.csv: duplicate point_id " + row.fields[0]);
    }

    SnapshotMatrix snap;
    snap.row_labels.assign(table.header.begin() + 1, table.header.end());
    snap.design_ids = point_ids;
    snap.data.resize(static_cast<long>(d), static_cast<long>(k));
    for (std::size_t j = 0; j < k; ++j) {
        auto it = rows.find(point_ids[j]);
        if (it == rows.end())
            throw EvaluationError("batch_out.csv: missing point_id " + point_ids[j]);
        for (std::size_t i = 0; i < d; ++i)
            snap.data(static_cast<long>(i), static_cast<long>(j)) = it->second[i];
    }
    return snap;
}

SnapshotMatrix FunctionRunner::run(const std::vector<Eigen::VectorXd>& unit_points,
                                   const std::vector<std::string>& point_ids) const {
    if (point_ids.size() != unit_points.size())
        throw std::invalid_argument("runner: one point id per design point required");
    SnapshotMatrix snap;
    snap.row_labels = labels_;
    snap.design_ids = point_ids;
    snap.data.resize(static_cast<long>(labels_.size()), static_cast<long>(unit_points.size()));
    for (std::size_t j = 0; j < unit_points.size(); ++j) {
        Eigen::VectorXd v = fn_(unit_points[j]);
        if (v.size() != static_cast<long>(labels_.size()))
            throw EvaluationError("function runner: output length mismatch at " + point_ids[j]);
        snap.data.col(static_cast<long>(j)) = v;
    }
    return snap;
}

SnapshotMatrix evaluate_design(const ModelRunner& runner,
                               const std::vector<Eigen::VectorXd>& unit_points,
                               const std::vector<std::string>& point_ids) {
    SnapshotMatrix snap = runner.run(unit_points, point_ids);
    validate_snapshot(snap, 1);
    return snap;
}

}  // namespace ioredux
