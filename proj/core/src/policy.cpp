#include "bsdr/errors.hpp"
#include "bsdr/experiments.hpp"

namespace bsdr {

PolicyTable optimal_policy(const GridSpec& spec, const Eigen::VectorXd& theta_r) {
    if (theta_r.size() != spec.feature_dim()) throw DomainError("theta_r has the wrong dimension");
    const int n = spec.num_cells();
    const int horizon = spec.horizon();
    std::vector<double> cost(static_cast<std::size_t>(n), 0.0);
    for (int s = 0; s < n; ++s) {
        if (spec.is_free_index(s)) cost[static_cast<std::size_t>(s)] = theta_r.dot(spec.features(s));
    }

    PolicyTable policy;
    policy.horizon = horizon;
    policy.num_cells = n;
    policy.actions.assign(static_cast<std::size_t>(horizon) * static_cast<std::size_t>(n), 0);

    std::vector<double> next = cost;  // value at t = horizon
    std::vector<double> value(static_cast<std::size_t>(n), 0.0);
    for (int t = horizon - 1; t >= 0; --t) {
        for (int s = 0; s < n; ++s) {
            if (!spec.is_free_index(s)) continue;
            const auto& succ = spec.successors(s);
            int best = 0;
            for (int a = 1; a < kNumActions; ++a) {
                if (next[static_cast<std::size_t>(succ[static_cast<std::size_t>(a)])] <
                    next[static_cast<std::size_t>(succ[static_cast<std::size_t>(best)])]) {
                    best = a;
                }
            }
            value[static_cast<std::size_t>(s)] =
                cost[static_cast<std::size_t>(s)] + next[static_cast<std::size_t>(succ[static_cast<std::size_t>(best)])];
            policy.actions[static_cast<std::size_t>(t) * static_cast<std::size_t>(n) + static_cast<std::size_t>(s)] = best;
        }
        next.swap(value);
    }
    return policy;
}

Trajectory rollout(const PolicyTable& policy, const GridSpec& spec) {
    Trajectory xi;
    int s = spec.start_index();
    xi.states.push_back(spec.cell(s));
    for (int t = 0; t < policy.horizon; ++t) {
        const int a = policy.action(t, s);
        s = spec.successors(s)[static_cast<std::size_t>(a)];
        xi.actions.push_back(a);
        xi.states.push_back(spec.cell(s));
    }
    return xi;
}

double trajectory_cost(const Trajectory& xi, const Eigen::VectorXd& theta_r, const GridSpec& spec) {
    if (theta_r.size() != spec.feature_dim()) throw DomainError("theta_r has the wrong dimension");
    double c = 0.0;
    for (Cell s : xi.states) c += theta_r.dot(featurize(s, spec));
    return c;
}

}  // namespace bsdr
