#include <cmath>

#include "bsdr/errors.hpp"
#include "bsdr/inference.hpp"

namespace bsdr {

namespace {

void check_agents_match(const std::map<std::string, Eigen::VectorXd>& theta_b,
                        const std::vector<std::string>& agents) {
    if (theta_b.size() != agents.size()) {
        throw DomainError("parameters cover " + std::to_string(theta_b.size()) + " agents, dataset has " +
                          std::to_string(agents.size()));
    }
    for (const auto& id : agents) {
        if (!theta_b.contains(id)) throw DomainError("no rationality weights for agent '" + id + "'");
    }
}

}  // namespace

Prior Prior::gaussian(double sigma) {
    if (!(sigma > 0.0)) throw DomainError("gaussian prior needs sigma > 0");
    return {Kind::gaussian, sigma};
}

double Prior::log_density(const JointParams& params) const {
    switch (kind) {
        case Kind::uniform_grid: return 0.0;
        case Kind::gaussian: {
            const double d = static_cast<double>(params.theta_r.size());
            return -0.5 * params.theta_r.squaredNorm() / (sigma * sigma) -
                   d * std::log(sigma * std::sqrt(2.0 * M_PI));
        }
        case Kind::unit_sphere_uniform: {
            auto unit = [](const Eigen::VectorXd& v) { return std::abs(v.norm() - 1.0) <= 1e-9; };
            if (!unit(params.theta_r)) return -INFINITY;
            for (const auto& [_, b] : params.theta_b) {
                if (!unit(b)) return -INFINITY;
            }
            return 0.0;
        }
    }
    return 0.0;
}

Eigen::VectorXd Prior::grad_theta_r(const Eigen::VectorXd& theta_r) const {
    if (kind == Kind::gaussian) return -theta_r / (sigma * sigma);
    return Eigen::VectorXd::Zero(theta_r.size());
}

std::string to_string(Prior::Kind kind) {
    switch (kind) {
        case Prior::Kind::uniform_grid: return "uniform_grid";
        case Prior::Kind::unit_sphere_uniform: return "unit_sphere_uniform";
        case Prior::Kind::gaussian: return "gaussian";
    }
    return "?";
}

Prior::Kind prior_kind_from_string(const std::string& name) {
    for (auto k : {Prior::Kind::uniform_grid, Prior::Kind::unit_sphere_uniform, Prior::Kind::gaussian}) {
        if (to_string(k) == name) return k;
    }
    throw DomainError("unknown prior kind '" + name + "'");
}

double dataset_log_likelihood(const Dataset& data, const JointParams& params) {
    check_agents_match(params.theta_b, data.agents());
    double total = 0.0;
    for (const auto& [id, trajs] : data.by_agent) {
        const BsdrParams p = params.for_agent(id);
        const SoftBackup backup = log_partition(p, data.spec);
        for (const auto& xi : trajs) total += traj_log_prob(xi, p, data.spec, backup);
    }
    return total;
}

double dataset_log_likelihood(const DatasetSummary& summary, const GridSpec& spec,
                              const JointParams& params) {
    std::vector<std::string> agents;
    for (const auto& [id, _] : summary) agents.push_back(id);
    check_agents_match(params.theta_b, agents);
    double total = 0.0;
    for (const auto& [id, s] : summary) {
        const BsdrParams p = params.for_agent(id);
        const double log_z = log_partition(p, spec).log_z();
        total += -p.theta_b.dot(s.phi.matrix * p.theta_r) - s.count * log_z;
    }
    return total;
}

}  // namespace bsdr
