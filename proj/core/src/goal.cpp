#include <cmath>

#include "bsdr/errors.hpp"
#include "bsdr/inference.hpp"
#include "bsdr/numeric.hpp"

namespace bsdr {

double prefix_log_likelihood(std::span<const Cell> prefix, const BsdrParams& params, const GridSpec& spec,
                             const SoftBackup& backup) {
    backup.check_matches(params, spec);
    validate_prefix(std::vector<Cell>(prefix.begin(), prefix.end()), spec);
    const std::size_t k = prefix.size() - 1;
    double score = 0.0;
    for (std::size_t t = 0; t < k; ++t) score += backup.state_weight(spec.index(prefix[t]));
    return score + backup.log_suffix(static_cast<int>(k), spec.index(prefix[k])) - backup.log_z();
}

std::vector<double> goal_posterior(std::span<const Cell> prefix, const std::vector<GridSpec>& goal_specs,
                                   const Eigen::VectorXd& theta_b, const Eigen::VectorXd& theta_r,
                                   std::span<const double> prior) {
    if (goal_specs.empty()) throw DomainError("goal posterior needs at least one candidate");
    if (!prior.empty() && prior.size() != goal_specs.size()) {
        throw DomainError("goal prior has " + std::to_string(prior.size()) + " weights for " +
                          std::to_string(goal_specs.size()) + " candidates");
    }
    const GridSpec& first = goal_specs.front();
    for (const auto& g : goal_specs) {
        if (g.width() != first.width() || g.height() != first.height() || g.obstacles() != first.obstacles() ||
            g.start() != first.start() || g.horizon() != first.horizon() ||
            g.feature_map() != first.feature_map()) {
            throw DomainError("goal candidates must differ only in goal placement");
        }
    }

    const BsdrParams params{theta_r, theta_b};
    std::vector<double> log_post(goal_specs.size());
    for (std::size_t g = 0; g < goal_specs.size(); ++g) {
        const SoftBackup backup = log_partition(params, goal_specs[g]);
        double lp = prefix_log_likelihood(prefix, params, goal_specs[g], backup);
        if (!prior.empty()) {
            if (prior[g] < 0.0) throw DomainError("goal prior weights must be non-negative");
            lp += std::log(prior[g]);
        }
        log_post[g] = lp;
    }
    const double norm = log_sum_exp(log_post);
    if (!std::isfinite(norm)) throw DomainError("goal prior assigns no mass to any candidate");
    std::vector<double> post(goal_specs.size());
    for (std::size_t g = 0; g < post.size(); ++g) post[g] = std::exp(log_post[g] - norm);
    return post;
}

}  // namespace bsdr
