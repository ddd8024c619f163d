#include "bsdr/model.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "bsdr/errors.hpp"
#include "bsdr/numeric.hpp"
#include "bsdr/rng.hpp"

namespace bsdr {

namespace {

void check_dim(const Eigen::VectorXd& v, const GridSpec& spec, const char* name) {
    if (v.size() != spec.feature_dim()) {
        throw DomainError(std::string(name) + " has dimension " + std::to_string(v.size()) +
                          ", feature map " + std::string(to_string(spec.feature_map())) + " has " +
                          std::to_string(spec.feature_dim()));
    }
}

bool same_vector(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return a.size() == b.size() && (a.array() == b.array()).all();
}

}  // namespace

void validate_params(const BsdrParams& params, const GridSpec& spec) {
    check_dim(params.theta_r, spec, "theta_r");
    check_dim(params.theta_b, spec, "theta_b");
    if (!params.theta_r.allFinite() || !params.theta_b.allFinite()) {
        throw DomainError("parameters must be finite");
    }
}

FeatureCounts FeatureCounts::zero(int dim) { return {Eigen::MatrixXd::Zero(dim, dim)}; }

void FeatureCounts::add_outer(const Eigen::VectorXd& phi, double weight) {
    const Eigen::Index d = phi.size();
    for (Eigen::Index j = 0; j < d; ++j) {
        if (phi[j] == 0.0) continue;
        const double wj = weight * phi[j];
        for (Eigen::Index i = 0; i <= j; ++i) matrix(i, j) += wj * phi[i];
    }
    matrix.template triangularView<Eigen::StrictlyLower>() = matrix.transpose();
}

FeatureCounts& FeatureCounts::operator+=(const FeatureCounts& other) {
    matrix += other.matrix;
    return *this;
}

bool FeatureCounts::is_symmetric() const {
    return matrix.rows() == matrix.cols() && matrix == matrix.transpose();
}

bool FeatureCounts::is_psd(double floor) const {
    if (!is_symmetric()) return false;
    if (matrix.size() == 0) return true;
    const double scale = std::max(1.0, matrix.cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(matrix, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff() >= floor * scale;
}

double state_cost(Cell s, const Eigen::VectorXd& theta_r, const GridSpec& spec) {
    check_dim(theta_r, spec, "theta_r");
    return theta_r.dot(featurize(s, spec));
}

double beta_of_state(Cell s, const Eigen::VectorXd& theta_b, const GridSpec& spec) {
    check_dim(theta_b, spec, "theta_b");
    return theta_b.dot(featurize(s, spec));
}

FeatureCounts feature_counts(std::span<const Cell> states, const GridSpec& spec) {
    auto fc = FeatureCounts::zero(spec.feature_dim());
    for (Cell s : states) fc.add_outer(featurize(s, spec));
    return fc;
}

FeatureCounts feature_counts(const Trajectory& xi, const GridSpec& spec) {
    validate_trajectory(xi, spec);
    return feature_counts(std::span<const Cell>(xi.states), spec);
}

double traj_score(const Trajectory& xi, const BsdrParams& params, const GridSpec& spec) {
    validate_params(params, spec);
    const FeatureCounts fc = feature_counts(xi, spec);
    return -params.theta_b.dot(fc.matrix * params.theta_r);
}

std::array<double, kNumActions> SoftBackup::action_log_probs(int t, int cell_index,
                                                             const GridSpec& spec) const {
    std::array<double, kNumActions> out{};
    const auto& succ = spec.successors(cell_index);
    for (std::size_t a = 0; a < out.size(); ++a) out[a] = log_action_prob(t, cell_index, succ[a]);
    return out;
}

void SoftBackup::check_matches(const BsdrParams& params, const GridSpec& spec) const {
    if (spec.fingerprint() != spec_fingerprint_ || spec.horizon() != horizon_ ||
        spec.num_cells() != num_cells_) {
        throw ContractViolation("soft backup was built for a different grid spec");
    }
    if (!same_vector(params.theta_r, params_.theta_r) || !same_vector(params.theta_b, params_.theta_b)) {
        throw ContractViolation("soft backup was built for different parameters");
    }
}

SoftBackup log_partition(const BsdrParams& params, const GridSpec& spec) {
    validate_params(params, spec);
    SoftBackup b;
    b.horizon_ = spec.horizon();
    b.num_cells_ = spec.num_cells();
    b.params_ = params;
    b.spec_fingerprint_ = spec.fingerprint();

    const auto n = static_cast<std::size_t>(spec.num_cells());
    b.state_weight_.assign(n, kNegInf);
    for (int s = 0; s < spec.num_cells(); ++s) {
        if (!spec.is_free_index(s)) continue;
        const auto& phi = spec.features(s);
        b.state_weight_[static_cast<std::size_t>(s)] = -params.theta_b.dot(phi) * params.theta_r.dot(phi);
    }

    const int horizon = spec.horizon();
    b.log_suffix_.assign((static_cast<std::size_t>(horizon) + 1) * n, kNegInf);
    auto at = [&](int t, int s) -> double& {
        return b.log_suffix_[static_cast<std::size_t>(t) * n + static_cast<std::size_t>(s)];
    };
    for (int s = 0; s < spec.num_cells(); ++s) {
        if (spec.is_free_index(s)) at(horizon, s) = b.state_weight_[static_cast<std::size_t>(s)];
    }
    std::array<double, kNumActions> terms{};
    for (int t = horizon - 1; t >= 0; --t) {
        for (int s = 0; s < spec.num_cells(); ++s) {
            if (!spec.is_free_index(s)) continue;
            const auto& succ = spec.successors(s);
            for (std::size_t a = 0; a < terms.size(); ++a) terms[a] = at(t + 1, succ[a]);
            at(t, s) = b.state_weight_[static_cast<std::size_t>(s)] + log_sum_exp(terms);
        }
    }
    b.log_z_ = at(0, spec.start_index());
    return b;
}

double traj_log_prob(const Trajectory& xi, const BsdrParams& params, const GridSpec& spec,
                     const SoftBackup& backup) {
    backup.check_matches(params, spec);
    return traj_score(xi, params, spec) - backup.log_z();
}

double state_sequence_log_prob(const Trajectory& xi, const BsdrParams& params, const GridSpec& spec,
                               const SoftBackup& backup) {
    double lp = traj_log_prob(xi, params, spec, backup);
    for (std::size_t t = 0; t + 1 < xi.states.size(); ++t) {
        lp += std::log(static_cast<double>(transition_multiplicity(xi.states[t], xi.states[t + 1], spec)));
    }
    return lp;
}

Trajectory sample_trajectory(const BsdrParams& params, const GridSpec& spec, const SoftBackup& backup,
                             std::uint64_t seed) {
    backup.check_matches(params, spec);
    Engine engine(seed);
    Trajectory xi;
    xi.states.reserve(static_cast<std::size_t>(spec.horizon()) + 1);
    xi.actions.reserve(static_cast<std::size_t>(spec.horizon()));
    int s = spec.start_index();
    xi.states.push_back(spec.cell(s));
    std::array<double, kNumActions> logits{};
    for (int t = 0; t < spec.horizon(); ++t) {
        const auto& succ = spec.successors(s);
        for (std::size_t a = 0; a < logits.size(); ++a) logits[a] = backup.log_suffix(t + 1, succ[a]);
        const double norm = log_sum_exp(logits);
        const double u = uniform01(engine);
        double cumulative = 0.0;
        int chosen = kNumActions - 1;
        for (int a = 0; a < kNumActions; ++a) {
            cumulative += std::exp(logits[static_cast<std::size_t>(a)] - norm);
            if (u < cumulative) {
                chosen = a;
                break;
            }
        }
        s = succ[static_cast<std::size_t>(chosen)];
        xi.actions.push_back(chosen);
        xi.states.push_back(spec.cell(s));
    }
    return xi;
}

std::vector<Trajectory> sample_trajectories(const BsdrParams& params, const GridSpec& spec,
                                            const SoftBackup& backup, std::size_t count,
                                            std::uint64_t seed,
                                            const std::optional<std::string>& agent_id) {
    std::vector<Trajectory> out;
    out.reserve(count);
    for (std::size_t j = 0; j < count; ++j) {
        Trajectory xi = sample_trajectory(params, spec, backup, derive_seed(seed, j));
        xi.agent_id = agent_id;
        out.push_back(std::move(xi));
    }
    return out;
}

Visitation expected_features(const BsdrParams& params, const GridSpec& spec, const SoftBackup& backup) {
    backup.check_matches(params, spec);
    const int horizon = spec.horizon();
    const auto n = static_cast<std::size_t>(spec.num_cells());
    Visitation v;
    v.occupancy.assign(static_cast<std::size_t>(horizon) + 1, std::vector<double>(n, 0.0));
    v.occupancy[0][static_cast<std::size_t>(spec.start_index())] = 1.0;
    for (int t = 0; t < horizon; ++t) {
        const auto& cur = v.occupancy[static_cast<std::size_t>(t)];
        auto& next = v.occupancy[static_cast<std::size_t>(t) + 1];
        for (int s = 0; s < spec.num_cells(); ++s) {
            const double mass = cur[static_cast<std::size_t>(s)];
            if (mass == 0.0) continue;
            const auto& succ = spec.successors(s);
            for (int s2 : succ) {
                next[static_cast<std::size_t>(s2)] += mass * std::exp(backup.log_action_prob(t, s, s2));
            }
        }
    }
    std::vector<double> total(n, 0.0);
    for (const auto& row : v.occupancy) {
        for (std::size_t s = 0; s < n; ++s) total[s] += row[s];
    }
    v.expected = FeatureCounts::zero(spec.feature_dim());
    for (int s = 0; s < spec.num_cells(); ++s) {
        if (total[static_cast<std::size_t>(s)] != 0.0) v.expected.add_outer(spec.features(s), total[static_cast<std::size_t>(s)]);
    }
    return v;
}

Eigen::VectorXd bias_only(double beta, int dim) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
    if (dim > 0) v[0] = beta;
    return v;
}

double br_log_partition(const Eigen::VectorXd& theta_r, double beta, const GridSpec& spec) {
    if (!spec.has_bias_feature()) {
        throw UnsupportedConfiguration("Boltzmann rationality needs a constant bias feature; " +
                                       std::string(to_string(spec.feature_map())) + " has none");
    }
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw DomainError("beta must be finite and non-negative");
    check_dim(theta_r, spec, "theta_r");

    const auto n = static_cast<std::size_t>(spec.num_cells());
    std::vector<double> weight(n, kNegInf);
    for (int s = 0; s < spec.num_cells(); ++s) {
        if (spec.is_free_index(s)) weight[static_cast<std::size_t>(s)] = -beta * theta_r.dot(spec.features(s));
    }
    std::vector<double> value = weight;
    std::vector<double> prev(n, kNegInf);
    std::array<double, kNumActions> terms{};
    for (int t = spec.horizon() - 1; t >= 0; --t) {
        prev.swap(value);
        for (int s = 0; s < spec.num_cells(); ++s) {
            if (!spec.is_free_index(s)) continue;
            const auto& succ = spec.successors(s);
            for (std::size_t a = 0; a < terms.size(); ++a) terms[a] = prev[static_cast<std::size_t>(succ[a])];
            value[static_cast<std::size_t>(s)] = weight[static_cast<std::size_t>(s)] + log_sum_exp(terms);
        }
    }
    return value[static_cast<std::size_t>(spec.start_index())];
}

double br_traj_log_prob(const Trajectory& xi, const Eigen::VectorXd& theta_r, double beta,
                        const GridSpec& spec) {
    const double log_z = br_log_partition(theta_r, beta, spec);
    validate_trajectory(xi, spec);
    double cost = 0.0;
    for (Cell s : xi.states) cost += -beta * theta_r.dot(featurize(s, spec));
    return cost - log_z;
}

}  // namespace bsdr
