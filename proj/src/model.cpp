#include "ioredux/model.hpp"

#include <cmath>
#include <sstream>

#include "ioredux/errors.hpp"

namespace ioredux {

namespace si = state_index;

void validate_space(const ParameterSpace& space) {
    const auto m = space.names.size();
    if (m == 0) throw ConfigError("parameter space is empty");
    if (space.lower.size() != static_cast<long>(m) || space.upper.size() != static_cast<long>(m))
        throw ConfigError("parameter space bound lengths do not match name count");
    for (std::size_t i = 0; i < m; ++i) {
        if (!(space.lower(i) < space.upper(i))) {
            std::ostringstream os;
            os << "parameter '" << space.names[i] << "': lower bound " << space.lower(i)
               << " must be below upper bound " << space.upper(i);
            throw ConfigError(os.str());
        }
    }
    if (!space.densities.empty()) {
        if (space.densities.size() != m)
            throw ConfigError("parameter space density tags do not match name count");
        for (const auto& tag : space.densities) {
            if (tag != "uniform")
                throw ConfigError("unsupported parameter density '" + tag +
                                  "' (only uniform is implemented)");
        }
    }
}

Eigen::VectorXd to_unit(const ParameterSpace& space, const Eigen::VectorXd& theta_hat) {
    if (theta_hat.size() != space.lower.size())
        throw std::invalid_argument("to_unit: vector length does not match parameter space");
    Eigen::VectorXd theta(theta_hat.size());
    for (long i = 0; i < theta_hat.size(); ++i) {
        if (!(theta_hat(i) >= space.lower(i) && theta_hat(i) <= space.upper(i))) {
            std::ostringstream os;
            os << "parameter '" << space.names[static_cast<std::size_t>(i)] << "' = "
               << theta_hat(i) << " outside its box [" << space.lower(i) << ", "
               << space.upper(i) << "]";
            throw std::invalid_argument(os.str());
        }
        theta(i) = (theta_hat(i) - space.lower(i)) / (space.upper(i) - space.lower(i));
    }
    return theta;
}

Eigen::VectorXd from_unit(const ParameterSpace& space, const Eigen::VectorXd& theta) {
    if (theta.size() != space.lower.size())
        throw std::invalid_argument("from_unit: vector length does not match parameter space");
    Eigen::VectorXd theta_hat(theta.size());
    for (long i = 0; i < theta.size(); ++i) {
        if (!(theta(i) >= 0.0 && theta(i) <= 1.0)) {
            std::ostringstream os;
            os << "theta_" << (i + 1) << " = " << theta(i) << " outside the unit cube";
            throw std::invalid_argument(os.str());
        }
        theta_hat(i) = space.lower(i) + theta(i) * (space.upper(i) - space.lower(i));
    }
    return theta_hat;
}

const std::vector<std::string>& builtin_parameter_names() {
    static const std::vector<std::string> names = {
        "prep_A", "prep_B", "prep_C", "prep_D", "art_A",
        "art_BC", "art_D",  "test_A", "test_BC", "test_D"};
    return names;
}

const std::vector<std::string>& builtin_output_labels() {
    static const std::vector<std::string> labels = {
        "new_infections_A", "new_infections_B",     "new_infections_C",
        "new_infections_D", "new_infections_total", "total_spending"};
    return labels;
}

void validate_model_config(const ModelConfig& c) {
    auto need4 = [](const Eigen::VectorXd& v, const char* what) {
        if (v.size() != kGroups) {
            std::ostringstream os;
            os << "model config: " << what << " must have " << kGroups << " entries";
            throw ConfigError(os.str());
        }
    };
    need4(c.population, "population");
    need4(c.initial_undiagnosed, "initial_undiagnosed");
    need4(c.initial_diagnosed, "initial_diagnosed");
    need4(c.initial_treated, "initial_treated");
    need4(c.beta, "beta");
    if (c.mixing.rows() != kGroups || c.mixing.cols() != kGroups)
        throw ConfigError("model config: mixing matrix must be 4x4");
    if (c.baselines.size() != kParams)
        throw ConfigError("model config: baselines must have 10 entries");
    for (int g = 0; g < kGroups; ++g) {
        if (c.population(g) <= 0.0) throw ConfigError("model config: populations must be positive");
        const double infected =
            c.initial_undiagnosed(g) + c.initial_diagnosed(g) + c.initial_treated(g);
        if (c.initial_undiagnosed(g) < 0 || c.initial_diagnosed(g) < 0 || c.initial_treated(g) < 0)
            throw ConfigError("model config: initial compartments must be nonnegative");
        if (infected > c.population(g))
            throw ConfigError("model config: initial infections exceed group population");
        if (c.beta(g) < 0.0) throw ConfigError("model config: beta must be nonnegative");
    }
    for (int i = 0; i < kParams; ++i)
        if (c.baselines(i) <= 0.0) throw ConfigError("model config: baselines must be positive");
    if (!(c.box_factor > 1.0)) throw ConfigError("model config: box_factor must exceed 1");
    if (!(c.horizon_years > 0.0) || !(c.step_years > 0.0))
        throw ConfigError("model config: horizon and step must be positive");
    if (!(c.prophylaxis_efficacy >= 0.0 && c.prophylaxis_efficacy <= 1.0))
        throw ConfigError("model config: prophylaxis_efficacy must lie in [0,1]");
}

ParameterSpace parameter_space(const ModelConfig& config) {
    validate_model_config(config);
    ParameterSpace space;
    space.names = builtin_parameter_names();
    space.lower = config.baselines;
    space.upper = config.box_factor * config.baselines;
    validate_space(space);
    return space;
}

double group_population(const Eigen::VectorXd& state, int g) {
    return state(si::susceptible(g)) + state(si::prophylaxis(g)) + state(si::undiagnosed(g)) +
           state(si::diagnosed(g)) + state(si::treated(g));
}

Eigen::VectorXd rk4_step(const OdeRhs& f, double t, const Eigen::VectorXd& y, double dt) {
    const Eigen::VectorXd k1 = f(t, y);
    const Eigen::VectorXd k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1);
    const Eigen::VectorXd k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2);
    const Eigen::VectorXd k4 = f(t + dt, y + dt * k3);
    return y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

namespace {

// Per-group intervention rates from the ten physical parameters. The two
// heterosexual groups B and C share the treatment and testing levers.
struct GroupRates {
    double prophylaxis_uptake[kGroups];
    double treatment_uptake[kGroups];
    double testing_rate[kGroups];
};

GroupRates split_rates(const Eigen::VectorXd& theta_hat) {
    GroupRates r{};
    for (int g = 0; g < kGroups; ++g) r.prophylaxis_uptake[g] = theta_hat(g);
    r.treatment_uptake[0] = theta_hat(4);
    r.treatment_uptake[1] = theta_hat(5);
    r.treatment_uptake[2] = theta_hat(5);
    r.treatment_uptake[3] = theta_hat(6);
    r.testing_rate[0] = theta_hat(7);
    r.testing_rate[1] = theta_hat(8);
    r.testing_rate[2] = theta_hat(8);
    r.testing_rate[3] = theta_hat(9);
    return r;
}

Eigen::VectorXd rhs(const ModelConfig& c, const GroupRates& r, const Eigen::VectorXd& y) {
    Eigen::VectorXd dy = Eigen::VectorXd::Zero(kStateSize);

    double lambda[kGroups];
    for (int g = 0; g < kGroups; ++g) {
        double force = 0.0;
        for (int h = 0; h < kGroups; ++h) {
            const double infectious = c.infectiousness_undiagnosed * y(si::undiagnosed(h)) +
                                      c.infectiousness_diagnosed * y(si::diagnosed(h)) +
                                      c.infectiousness_treated * y(si::treated(h));
            force += c.mixing(g, h) * infectious / c.population(h);
        }
        lambda[g] = c.beta(g) * force;
    }

    const double leak = 1.0 - c.prophylaxis_efficacy;
    double cost_rate = 0.0;
    for (int g = 0; g < kGroups; ++g) {
        const double s = y(si::susceptible(g));
        const double p = y(si::prophylaxis(g));
        const double iu = y(si::undiagnosed(g));
        const double id = y(si::diagnosed(g));
        const double it = y(si::treated(g));

        const double incidence = lambda[g] * s + leak * lambda[g] * p;
        const double diagnoses = r.testing_rate[g] * iu;
        const double initiations = r.treatment_uptake[g] * id;

        dy(si::susceptible(g)) = -lambda[g] * s - r.prophylaxis_uptake[g] * s;
        dy(si::prophylaxis(g)) = r.prophylaxis_uptake[g] * s - leak * lambda[g] * p;
        dy(si::undiagnosed(g)) = incidence - diagnoses;
        dy(si::diagnosed(g)) = diagnoses - initiations;
        dy(si::treated(g)) = initiations;
        dy(si::cumulative(g)) = incidence;

        cost_rate += c.costs.prophylaxis_per_person_year * p +
                     c.costs.care_diagnosed_per_person_year * id +
                     c.costs.care_treated_per_person_year * it +
                     c.costs.per_test * r.testing_rate[g] * (s + p + iu) +
                     c.costs.per_diagnosis * diagnoses;
    }
    dy(si::cost) = cost_rate;
    return dy;
}

}  // namespace

Trajectory simulate(const ModelConfig& config, const Eigen::VectorXd& theta_hat,
                    double horizon_years, double step_years) {
    validate_model_config(config);
    const ParameterSpace space = parameter_space(config);
    to_unit(space, theta_hat);  // box membership check, errors name the coordinate

    const double steps_exact = horizon_years / step_years;
    const long nsteps = std::lround(steps_exact);
    if (nsteps < 1 || std::abs(steps_exact - static_cast<double>(nsteps)) > 1e-9 * steps_exact)
        throw std::invalid_argument("simulate: step must divide horizon");

    const GroupRates rates = split_rates(theta_hat);
    OdeRhs f = [&config, &rates](double, const Eigen::VectorXd& y) {
        return rhs(config, rates, y);
    };

    Eigen::VectorXd y = Eigen::VectorXd::Zero(kStateSize);
    for (int g = 0; g < kGroups; ++g) {
        const double infected = config.initial_undiagnosed(g) + config.initial_diagnosed(g) +
                                config.initial_treated(g);
        y(si::susceptible(g)) = config.population(g) - infected;
        y(si::undiagnosed(g)) = config.initial_undiagnosed(g);
        y(si::diagnosed(g)) = config.initial_diagnosed(g);
        y(si::treated(g)) = config.initial_treated(g);
    }

    Trajectory traj;
    traj.states.reserve(static_cast<std::size_t>(nsteps) + 1);
    traj.states.push_back({0.0, y});

    for (long step = 0; step < nsteps; ++step) {
        const double t = static_cast<double>(step) * step_years;
        y = rk4_step(f, t, y, step_years);

        if (!y.allFinite()) {
            std::ostringstream os;
            os << "simulate: non-finite state at t = " << t + step_years;
            throw EvaluationError(os.str());
        }
        for (int i = 0; i < 5 * kGroups; ++i) {
            if (y(i) < 0.0) {
                if (y(i) < -kNegativityTol) {
                    std::ostringstream os;
                    os << "simulate: compartment " << i << " reached " << y(i) << " at t = "
                       << t + step_years << " (step too large)";
                    throw EvaluationError(os.str());
                }
                y(i) = 0.0;
            }
        }
        traj.states.push_back({t + step_years, y});
    }
    return traj;
}

Trajectory simulate(const ModelConfig& config, const Eigen::VectorXd& theta_hat) {
    return simulate(config, theta_hat, config.horizon_years, config.step_years);
}

OutcomeVector outcomes(const Trajectory& trajectory) {
    if (trajectory.states.empty()) throw std::invalid_argument("outcomes: empty trajectory");
    const Eigen::VectorXd& first = trajectory.states.front().y;
    const Eigen::VectorXd& last = trajectory.states.back().y;

    OutcomeVector out;
    out.labels = builtin_output_labels();
    out.values.resize(kOutputs);
    double total = 0.0;
    for (int g = 0; g < kGroups; ++g) {
        out.values(g) = last(si::cumulative(g)) - first(si::cumulative(g));
        total += out.values(g);
    }
    out.values(kGroups) = total;
    out.values(kGroups + 1) = last(si::cost) - first(si::cost);
    return out;
}

}  // namespace ioredux
