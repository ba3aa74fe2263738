#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "ioredux/model.hpp"
#include "ioredux/reduction.hpp"

namespace ioredux {

// ============================================================================
// Model runners: everything downstream of the design treats the model as a
// black box mapping unit-cube points to outcome vectors. Runners must return
// columns in design order regardless of execution order and abort on the
// first failed evaluation.
// ============================================================================

class ModelRunner {
  public:
    virtual ~ModelRunner() = default;
    virtual SnapshotMatrix run(const std::vector<Eigen::VectorXd>& unit_points,
                               const std::vector<std::string>& point_ids) const = 0;
};

/// Runs the built-in transmission model, optionally across several threads.
class BuiltinRunner final : public ModelRunner {
  public:
    BuiltinRunner(ModelConfig config, int jobs = 1);

    SnapshotMatrix run(const std::vector<Eigen::VectorXd>& unit_points,
                       const std::vector<std::string>& point_ids) const override;

    const ParameterSpace& space() const { return space_; }
    const ModelConfig& config() const { return config_; }

  private:
    ModelConfig config_;
    ParameterSpace space_;
    int jobs_;
};

/// Batch protocol for attaching an external model: writes
/// `batch_in.csv` (point_id,theta_hat_1..theta_hat_m) into the work
/// directory, invokes the command once, and reads back `batch_out.csv`
/// (point_id,y_1..y_d). Missing or duplicate point ids are errors.
class ExternalBatchRunner final : public ModelRunner {
  public:
    ExternalBatchRunner(ParameterSpace space, std::string command, std::string workdir);

    SnapshotMatrix run(const std::vector<Eigen::VectorXd>& unit_points,
                       const std::vector<std::string>& point_ids) const override;

  private:
    ParameterSpace space_;
    std::string command_;
    std::string workdir_;
};

/// Wraps a plain function of the unit-cube point; used for analytic oracles.
class FunctionRunner final : public ModelRunner {
  public:
    FunctionRunner(std::function<Eigen::VectorXd(const Eigen::VectorXd&)> fn,
                   std::vector<std::string> labels)
        : fn_(std::move(fn)), labels_(std::move(labels)) {}

    SnapshotMatrix run(const std::vector<Eigen::VectorXd>& unit_points,
                       const std::vector<std::string>& point_ids) const override;

  private:
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> fn_;
    std::vector<std::string> labels_;
};

/// Evaluates the design: column j holds the outcomes at unit point j.
SnapshotMatrix evaluate_design(const ModelRunner& runner,
                               const std::vector<Eigen::VectorXd>& unit_points,
                               const std::vector<std::string>& point_ids);

}  // namespace ioredux
