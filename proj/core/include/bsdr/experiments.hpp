#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "bsdr/dataset.hpp"
#include "bsdr/gridworld.hpp"
#include "bsdr/inference.hpp"

namespace bsdr {

// ---------------------------------------------------------------------------
// Synthetic populations

/// `count` agents whose theta_b is drawn uniformly from the box
/// [theta_b_lo, theta_b_hi] (a fixed vector when lo == hi).
struct AgentGroup {
    int count = 1;
    Eigen::VectorXd theta_b_lo;
    Eigen::VectorXd theta_b_hi;
};

struct PopulationConfig {
    Eigen::VectorXd theta_r;
    std::vector<AgentGroup> groups;
};

/// "agent_000", "agent_001", ...
std::string agent_name(std::size_t index);

/// Agents are numbered across groups in order.
JointParams draw_population(const PopulationConfig& population, std::uint64_t seed);

/// `per_agent` exact samples for every agent in `params`.
Dataset simulate_dataset(const GridSpec& spec, const JointParams& params, std::size_t per_agent,
                         std::uint64_t seed);

struct Split {
    Dataset train;
    Dataset held_out;
};

/// Seeded shuffle of [0, n); the first round(train_fraction * n) indices
/// (sorted) train, the rest (sorted) are held out.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n, std::uint64_t seed,
                                                                            double train_fraction);

/// split_indices per agent, seeded by derive_seed(seed, agent position).
Split split_dataset(const Dataset& data, std::uint64_t seed, double train_fraction = 0.75);

// ---------------------------------------------------------------------------
// Optimal control under a cost vector

/// action(t, s) for t in [0, horizon).
struct PolicyTable {
    int horizon = 0;
    int num_cells = 0;
    std::vector<int> actions;

    int action(int t, int cell_index) const {
        return actions[static_cast<std::size_t>(t) * static_cast<std::size_t>(num_cells) +
                       static_cast<std::size_t>(cell_index)];
    }
};

/// Finite-horizon value iteration minimizing the summed state cost
/// theta_r^T phi(s) over all horizon+1 states; ties go to the smallest
/// action index.
PolicyTable optimal_policy(const GridSpec& spec, const Eigen::VectorXd& theta_r);

/// Deterministic rollout of a policy from the start.
Trajectory rollout(const PolicyTable& policy, const GridSpec& spec);

/// sum over states of theta_r^T phi(s).
double trajectory_cost(const Trajectory& xi, const Eigen::VectorXd& theta_r, const GridSpec& spec);

// ---------------------------------------------------------------------------
// Experiment configuration and reports

struct ExperimentConfig {
    GridSpec spec;
    PopulationConfig population;
    int trajectories_per_agent = 8;
    /// Parameter recovery: dataset sizes per agent (defaults to
    /// {trajectories_per_agent}); larger sizes extend smaller ones.
    std::vector<int> dataset_sizes;
    std::vector<std::uint64_t> seeds{0};

    std::vector<GridAxis> grid_axes;
    Prior grid_prior = Prior::uniform_grid();
    GridOptions grid_options;

    std::vector<double> prefix_fractions{0.25, 0.50, 0.75, 1.00};
    std::vector<Cell> goal_candidates;
    std::vector<double> goal_prior;

    /// Fitted models; `uniform` and `bsdr_true` are always scored by action
    /// prediction.
    std::vector<std::string> roster{"br_aggregate", "br_per_agent", "bsdr"};
    Prior fit_prior = Prior::gaussian(10.0);
    MleConfig fit;
    double train_fraction = 0.75;
    int threads = 1;
};

/// Throws DomainError on counts < 1, fractions outside (0, 1], unknown
/// roster entries and similar.
void validate(const ExperimentConfig& cfg);

nlohmann::json to_json(const ExperimentConfig& cfg);
/// Hex FNV-1a of the canonical JSON form.
std::string config_fingerprint(const ExperimentConfig& cfg);

struct ReportRow {
    std::uint64_t seed = 0;
    std::string condition;
    std::vector<double> values;
};

struct Report {
    std::string name;
    std::string config_fingerprint;
    std::vector<std::string> metrics;
    std::vector<ReportRow> rows;
    /// Experiment-specific payload (marginals, fitted parameters, flags).
    nlohmann::json details = nlohmann::json::object();
    /// Measured but not serialized, so outputs stay byte-reproducible.
    double wall_clock_seconds = 0.0;

    std::vector<std::string> conditions() const;
    std::vector<double> column(const std::string& condition, const std::string& metric) const;
    double mean(const std::string& condition, const std::string& metric) const;

    /// Includes per-condition means under "summary".
    nlohmann::json to_json() const;
    /// One row per seed x condition: seed,condition,<metrics...>.
    std::string to_csv() const;
};

/// Shortest round-trip decimal form ("nan", "inf", "-inf" for non-finite).
std::string format_number(double v);
/// RFC-4180 field quoting.
std::string csv_field(const std::string& s);

Report run_parameter_recovery(const ExperimentConfig& cfg);
Report run_goal_inference(const ExperimentConfig& cfg);
Report run_generalization(const ExperimentConfig& cfg);
Report run_action_prediction(const ExperimentConfig& cfg);

/// Names: parameter_recovery, goal_inference, generalization, action_prediction.
Report run_experiment(const std::string& name, const ExperimentConfig& cfg);
const std::vector<std::string>& experiment_names();

// ---------------------------------------------------------------------------
// Model roster shared by the generalization and action-prediction harnesses

struct FittedModel {
    std::string name;
    JointParams params;
    /// br_aggregate stores one pooled theta_b under this key.
    bool pooled = false;
    MleDiagnostics diagnostics;

    BsdrParams for_agent(const std::string& agent) const;
};

/// Fits br_aggregate (pooled data, bias-only rationality), br_per_agent
/// (bias-only per agent) and bsdr (full per-agent rationality).
FittedModel fit_model(const std::string& name, const Dataset& train, const Prior& prior, const MleConfig& cfg);

/// Maximum-likelihood scalar beta >= 0 for known theta_r over trajectories
/// that may come from different goal variants of one layout.
double fit_br_beta(const std::vector<std::pair<const GridSpec*, const Trajectory*>>& data,
                   const Eigen::VectorXd& theta_r);

}  // namespace bsdr
