#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bsdr/gridworld.hpp"

namespace bsdr {

/// Shared reward weights and one agent's rationality weights. The
/// trajectory score is -theta_b^T Phi_xi theta_r, so theta_r weighs a cost.
struct BsdrParams {
    Eigen::VectorXd theta_r;
    Eigen::VectorXd theta_b;
};

/// Throws DomainError unless both vectors have the spec's feature dimension
/// and finite entries.
void validate_params(const BsdrParams& params, const GridSpec& spec);

/// Sum of phi(s) phi(s)^T over a trajectory or a corpus of trajectories.
struct FeatureCounts {
    Eigen::MatrixXd matrix;

    static FeatureCounts zero(int dim);

    /// Adds weight * phi phi^T, touching the upper triangle and mirroring,
    /// so the result is exactly symmetric.
    void add_outer(const Eigen::VectorXd& phi, double weight = 1.0);
    FeatureCounts& operator+=(const FeatureCounts& other);

    bool is_symmetric() const;
    /// Smallest eigenvalue >= floor (default -1e-10 scaled by the largest
    /// absolute entry).
    bool is_psd(double floor = -1e-10) const;
};

double state_cost(Cell s, const Eigen::VectorXd& theta_r, const GridSpec& spec);
double beta_of_state(Cell s, const Eigen::VectorXd& theta_b, const GridSpec& spec);

FeatureCounts feature_counts(std::span<const Cell> states, const GridSpec& spec);
FeatureCounts feature_counts(const Trajectory& xi, const GridSpec& spec);

/// The exponent -theta_b^T Phi_xi theta_r.
double traj_score(const Trajectory& xi, const BsdrParams& params, const GridSpec& spec);

/// Backward log-sum-exp tables for one (params, spec) pair. log_suffix(t, s)
/// is the log of the summed exponentiated score of states t..T over all
/// continuations from s at time t. Obstacle cells hold -inf.
class SoftBackup {
public:
    int horizon() const noexcept { return horizon_; }
    int num_cells() const noexcept { return num_cells_; }
    double log_z() const noexcept { return log_z_; }

    double log_suffix(int t, int cell_index) const {
        return log_suffix_[static_cast<std::size_t>(t) * static_cast<std::size_t>(num_cells_) +
                           static_cast<std::size_t>(cell_index)];
    }
    /// -beta(s) c(s) for each cell.
    double state_weight(int cell_index) const {
        return state_weight_[static_cast<std::size_t>(cell_index)];
    }

    /// log P(action leading to `next_index` | state at time t). Aliased
    /// actions each carry this same probability.
    double log_action_prob(int t, int cell_index, int next_index) const {
        return log_suffix(t + 1, next_index) - (log_suffix(t, cell_index) - state_weight(cell_index));
    }
    /// Log-probabilities of the five actions at (t, cell), in action order.
    std::array<double, kNumActions> action_log_probs(int t, int cell_index, const GridSpec& spec) const;

    const BsdrParams& params() const noexcept { return params_; }
    std::uint64_t spec_fingerprint() const noexcept { return spec_fingerprint_; }

    /// Throws ContractViolation unless this backup was built for exactly
    /// these params and spec.
    void check_matches(const BsdrParams& params, const GridSpec& spec) const;

private:
    friend SoftBackup log_partition(const BsdrParams& params, const GridSpec& spec);

    int horizon_ = 0;
    int num_cells_ = 0;
    std::vector<double> log_suffix_;
    std::vector<double> state_weight_;
    double log_z_ = 0.0;
    BsdrParams params_;
    std::uint64_t spec_fingerprint_ = 0;
};

/// Exact log-partition over all 5^T action sequences by backward recursion,
/// O(T |S| |A|).
SoftBackup log_partition(const BsdrParams& params, const GridSpec& spec);

/// Log-probability of the action sequence behind `xi` (score - log Z).
double traj_log_prob(const Trajectory& xi, const BsdrParams& params, const GridSpec& spec,
                     const SoftBackup& backup);

/// Log-probability of the state sequence: traj_log_prob plus the log of the
/// number of action sequences producing it.
double state_sequence_log_prob(const Trajectory& xi, const BsdrParams& params, const GridSpec& spec,
                               const SoftBackup& backup);

/// Exact ancestral sample; actions are recorded.
Trajectory sample_trajectory(const BsdrParams& params, const GridSpec& spec, const SoftBackup& backup,
                             std::uint64_t seed);

/// `count` samples; sample j uses derive_seed(seed, j).
std::vector<Trajectory> sample_trajectories(const BsdrParams& params, const GridSpec& spec,
                                            const SoftBackup& backup, std::size_t count,
                                            std::uint64_t seed,
                                            const std::optional<std::string>& agent_id = std::nullopt);

struct Visitation {
    FeatureCounts expected;                  ///< E[Phi_xi]
    std::vector<std::vector<double>> occupancy;  ///< occupancy[t][cell index]
};

Visitation expected_features(const BsdrParams& params, const GridSpec& spec, const SoftBackup& backup);

/// Constant-beta Boltzmann rationality, computed with its own scalar
/// recursion. Requires a feature map whose component 0 is the constant 1
/// (UnsupportedConfiguration otherwise) and beta >= 0.
double br_log_partition(const Eigen::VectorXd& theta_r, double beta, const GridSpec& spec);
double br_traj_log_prob(const Trajectory& xi, const Eigen::VectorXd& theta_r, double beta,
                        const GridSpec& spec);

/// [beta, 0, ..., 0]
Eigen::VectorXd bias_only(double beta, int dim);

}  // namespace bsdr
