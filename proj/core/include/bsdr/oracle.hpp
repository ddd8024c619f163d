#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bsdr/gridworld.hpp"
#include "bsdr/model.hpp"
#include "bsdr/rng.hpp"

namespace bsdr {

/// Randomized comparison of the backward DP against brute-force enumeration.
struct OracleSuiteConfig {
    int num_specs = 20;
    int max_width = 3;
    int max_height = 3;
    int max_horizon = 4;
    std::uint64_t seed = 0;
    std::uint64_t cap = kDefaultOracleCap;
    double tolerance = 1e-9;
};

struct OracleCase {
    std::string description;
    double log_z_dp = 0.0;
    double log_z_enumeration = 0.0;
    /// |sum over action sequences of exp(traj_log_prob) - 1|.
    double normalization_error = 0.0;
    /// Largest |sum over length-k action prefixes of exp(prefix_log_likelihood) - 1|.
    double prefix_error = 0.0;
    bool passed = false;
};

/// Random layout (obstacle density 0.2, start and goal on free cells),
/// feature map and parameters with entries in [-2, 2].
GridSpec random_spec(Engine& engine, int max_width, int max_height, int max_horizon);
BsdrParams random_params(Engine& engine, const GridSpec& spec);

/// log of the sum of exp(-score) over every action sequence.
double enumerated_log_partition(const BsdrParams& params, const GridSpec& spec,
                                std::uint64_t cap = kDefaultOracleCap);

std::vector<OracleCase> run_oracle_suite(const OracleSuiteConfig& config);

nlohmann::json to_json(const OracleCase& c);

}  // namespace bsdr
