#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bsdr/gridworld.hpp"
#include "bsdr/model.hpp"

namespace bsdr {

/// Trajectories grouped by agent, all valid for one GridSpec.
struct Dataset {
    GridSpec spec;
    std::map<std::string, std::vector<Trajectory>> by_agent;

    Dataset() = default;
    explicit Dataset(GridSpec s) : spec(std::move(s)) {}

    /// Validates `xi` against the spec and appends it under `agent`.
    void add(const std::string& agent, Trajectory xi);

    std::size_t num_agents() const noexcept { return by_agent.size(); }
    std::size_t num_trajectories() const noexcept;
    std::vector<std::string> agents() const;
    bool empty() const noexcept { return by_agent.empty(); }

    /// Throws DomainError on any invalid trajectory or empty agent entry.
    void validate() const;

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Shared reward weights and per-agent rationality weights.
struct JointParams {
    Eigen::VectorXd theta_r;
    std::map<std::string, Eigen::VectorXd> theta_b;

    BsdrParams for_agent(const std::string& agent) const;
};

/// Per-agent sufficient statistics: Phi^i = sum_j Phi_{xi^i_j} and n_i.
struct AgentSummary {
    FeatureCounts phi;
    int count = 0;
};

using DatasetSummary = std::map<std::string, AgentSummary>;

DatasetSummary summarize(const Dataset& data);

/// Pools every agent's trajectories under a single agent id.
Dataset pooled(const Dataset& data, const std::string& agent = "pooled");

}  // namespace bsdr
