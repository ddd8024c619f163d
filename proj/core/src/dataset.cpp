#include "bsdr/dataset.hpp"

#include "bsdr/errors.hpp"

namespace bsdr {

void Dataset::add(const std::string& agent, Trajectory xi) {
    validate_trajectory(xi, spec);
    xi.agent_id = agent;
    by_agent[agent].push_back(std::move(xi));
}

std::size_t Dataset::num_trajectories() const noexcept {
    std::size_t n = 0;
    for (const auto& [_, trajs] : by_agent) n += trajs.size();
    return n;
}

std::vector<std::string> Dataset::agents() const {
    std::vector<std::string> out;
    out.reserve(by_agent.size());
    for (const auto& [id, _] : by_agent) out.push_back(id);
    return out;
}

void Dataset::validate() const {
    for (const auto& [id, trajs] : by_agent) {
        if (trajs.empty()) throw DomainError("agent '" + id + "' has no trajectories");
        for (std::size_t j = 0; j < trajs.size(); ++j) {
            try {
                validate_trajectory(trajs[j], spec);
            } catch (const DomainError& e) {
                throw DomainError("agent '" + id + "' trajectory " + std::to_string(j) + ": " + e.what());
            }
        }
    }
}

BsdrParams JointParams::for_agent(const std::string& agent) const {
    auto it = theta_b.find(agent);
    if (it == theta_b.end()) throw DomainError("no rationality weights for agent '" + agent + "'");
    return {theta_r, it->second};
}

DatasetSummary summarize(const Dataset& data) {
    DatasetSummary out;
    for (const auto& [id, trajs] : data.by_agent) {
        AgentSummary s{FeatureCounts::zero(data.spec.feature_dim()), 0};
        for (const auto& xi : trajs) {
            s.phi += feature_counts(xi, data.spec);
            ++s.count;
        }
        out.emplace(id, std::move(s));
    }
    return out;
}

Dataset pooled(const Dataset& data, const std::string& agent) {
    Dataset out(data.spec);
    for (const auto& [_, trajs] : data.by_agent) {
        for (const auto& xi : trajs) {
            Trajectory copy = xi;
            copy.agent_id = agent;
            out.by_agent[agent].push_back(std::move(copy));
        }
    }
    return out;
}

}  // namespace bsdr
