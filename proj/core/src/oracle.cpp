#include <algorithm>
#include <cmath>
#include <cstdio>

#include "bsdr/errors.hpp"
#include "bsdr/inference.hpp"
#include "bsdr/numeric.hpp"
#include "bsdr/oracle.hpp"

namespace bsdr {

namespace {

constexpr FeatureMap kMaps[] = {FeatureMap::bias_goal_dist, FeatureMap::one_hot, FeatureMap::goal_indicators,
                                FeatureMap::bias_goal_dist_side};

std::string describe(const GridSpec& spec) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%dx%d T=%d obstacles=%zu %s", spec.width(), spec.height(), spec.horizon(),
                  spec.obstacles().size(), std::string(to_string(spec.feature_map())).c_str());
    return buf;
}

}  // namespace

GridSpec random_spec(Engine& engine, int max_width, int max_height, int max_horizon) {
    if (max_width < 1 || max_height < 1 || max_horizon < 1) throw DomainError("oracle bounds must be at least 1");
    const int w = 1 + uniform_int(engine, max_width);
    const int h = 1 + uniform_int(engine, max_height);
    const int horizon = 1 + uniform_int(engine, max_horizon);
    const Cell start{uniform_int(engine, w), uniform_int(engine, h)};
    std::vector<Cell> obstacles;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const Cell c{x, y};
            if (c != start && uniform01(engine) < 0.2) obstacles.push_back(c);
        }
    }
    std::vector<Cell> free_cells;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const Cell c{x, y};
            if (std::find(obstacles.begin(), obstacles.end(), c) == obstacles.end()) free_cells.push_back(c);
        }
    }
    const Cell goal = free_cells[static_cast<std::size_t>(uniform_int(engine, static_cast<int>(free_cells.size())))];
    const FeatureMap fm = kMaps[uniform_int(engine, 4)];
    return GridSpec(w, h, std::move(obstacles), start, {goal}, horizon, fm);
}

BsdrParams random_params(Engine& engine, const GridSpec& spec) {
    const int dim = spec.feature_dim();
    BsdrParams p{Eigen::VectorXd(dim), Eigen::VectorXd(dim)};
    for (int d = 0; d < dim; ++d) {
        p.theta_r[d] = uniform(engine, -2.0, 2.0);
        p.theta_b[d] = uniform(engine, -2.0, 2.0);
    }
    return p;
}

double enumerated_log_partition(const BsdrParams& params, const GridSpec& spec, std::uint64_t cap) {
    const auto all = enumerate_trajectories(spec, cap);
    std::vector<double> scores;
    scores.reserve(all.size());
    for (const auto& xi : all) scores.push_back(traj_score(xi, params, spec));
    return log_sum_exp(scores);
}

std::vector<OracleCase> run_oracle_suite(const OracleSuiteConfig& config) {
    if (config.num_specs < 1) throw DomainError("oracle suite needs at least one spec");
    Engine engine(derive_seed(config.seed, 0x6f7261636c65ULL));
    std::vector<OracleCase> out;
    for (int k = 0; k < config.num_specs; ++k) {
        const GridSpec spec = random_spec(engine, config.max_width, config.max_height, config.max_horizon);
        const BsdrParams params = random_params(engine, spec);
        const SoftBackup backup = log_partition(params, spec);

        OracleCase c;
        c.description = describe(spec);
        c.log_z_dp = backup.log_z();
        c.log_z_enumeration = enumerated_log_partition(params, spec, config.cap);

        double total = 0.0;
        for (const auto& xi : enumerate_trajectories(spec, config.cap)) {
            total += std::exp(traj_log_prob(xi, params, spec, backup));
        }
        c.normalization_error = std::abs(total - 1.0);

        for (int len = 1; len <= spec.horizon(); ++len) {
            double mass = 0.0;
            for (const auto& xi : enumerate_trajectories(spec.with_horizon(len), config.cap)) {
                mass += std::exp(prefix_log_likelihood(xi.states, params, spec, backup));
            }
            c.prefix_error = std::max(c.prefix_error, std::abs(mass - 1.0));
        }
        c.passed = std::abs(c.log_z_dp - c.log_z_enumeration) < config.tolerance &&
                   c.normalization_error < config.tolerance && c.prefix_error < config.tolerance;
        out.push_back(std::move(c));
    }
    return out;
}

nlohmann::json to_json(const OracleCase& c) {
    return {{"description", c.description},
            {"log_z_dp", c.log_z_dp},
            {"log_z_enumeration", c.log_z_enumeration},
            {"normalization_error", c.normalization_error},
            {"prefix_error", c.prefix_error},
            {"passed", c.passed}};
}

}  // namespace bsdr
