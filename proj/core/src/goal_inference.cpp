#include <algorithm>
#include <chrono>
#include <cmath>

#include "bsdr/errors.hpp"
#include "bsdr/experiments.hpp"
#include "bsdr/parallel.hpp"
#include "bsdr/rng.hpp"

namespace bsdr {

namespace {

std::string condition_name(const std::string& model, double fraction) {
    return model + "@" + format_number(fraction);
}

}  // namespace

Report run_goal_inference(const ExperimentConfig& cfg) {
    const auto started = std::chrono::steady_clock::now();
    validate(cfg);
    const std::vector<Cell> candidates = cfg.goal_candidates.empty() ? cfg.spec.goals() : cfg.goal_candidates;
    if (candidates.size() < 2) throw DomainError("goal inference needs at least two goal candidates");
    if (!cfg.goal_prior.empty() && cfg.goal_prior.size() != candidates.size()) {
        throw DomainError("goal prior has " + std::to_string(cfg.goal_prior.size()) + " weights for " +
                          std::to_string(candidates.size()) + " candidates");
    }
    if (!cfg.spec.has_bias_feature()) {
        throw UnsupportedConfiguration("goal inference compares against a scalar-beta baseline, which needs a "
                                       "bias feature");
    }
    std::vector<GridSpec> goal_specs;
    for (Cell g : candidates) goal_specs.push_back(cfg.spec.with_goals({g}));

    // Normalized prior used both for sampling true goals and for inference.
    std::vector<double> prior(candidates.size(), 1.0 / static_cast<double>(candidates.size()));
    if (!cfg.goal_prior.empty()) {
        double total = 0.0;
        for (double w : cfg.goal_prior) {
            if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("goal prior weights must be finite and >= 0");
            total += w;
        }
        if (total <= 0.0) throw DomainError("goal prior has no mass");
        for (std::size_t g = 0; g < prior.size(); ++g) prior[g] = cfg.goal_prior[g] / total;
    }

    const int horizon = cfg.spec.horizon();
    const std::vector<std::string> models{"bsdr", "br"};

    Report report;
    report.name = "goal_inference";
    report.config_fingerprint = config_fingerprint(cfg);
    report.metrics = {"true_goal_probability", "prefixes"};

    struct SeedResult {
        std::vector<ReportRow> rows;
        double max_k0_deviation = 0.0;
        nlohmann::json br_beta = nlohmann::json::object();
    };
    std::vector<SeedResult> per_seed(cfg.seeds.size());

    parallel_for(cfg.seeds.size(), cfg.threads, [&](std::size_t k) {
        const std::uint64_t seed = cfg.seeds[k];
        SeedResult& out = per_seed[k];
        const JointParams truth = draw_population(cfg.population, seed);
        const auto dim = cfg.spec.feature_dim();

        // sums[model][fraction]
        std::vector<std::vector<double>> sums(models.size(), std::vector<double>(cfg.prefix_fractions.size(), 0.0));
        std::size_t prefixes = 0;
        std::uint64_t stream = 0;
        for (const auto& [id, theta_b] : truth.theta_b) {
            const std::uint64_t agent_seed = derive_seed(seed, stream++);
            const BsdrParams p{truth.theta_r, theta_b};
            std::vector<SoftBackup> backups;
            for (const auto& gs : goal_specs) backups.push_back(log_partition(p, gs));

            Engine goal_engine(derive_seed(agent_seed, 0x676f616cULL));
            std::vector<std::size_t> goal_of;
            std::vector<Trajectory> trajs;
            for (int j = 0; j < cfg.trajectories_per_agent; ++j) {
                const double u = uniform01(goal_engine);
                std::size_t g = 0;
                double acc = prior[0];
                while (u >= acc && g + 1 < prior.size()) acc += prior[++g];
                goal_of.push_back(g);
                trajs.push_back(sample_trajectory(p, goal_specs[g], backups[g],
                                                  derive_seed(agent_seed, static_cast<std::uint64_t>(j))));
                trajs.back().agent_id = id;
            }

            const auto [train, held] =
                split_indices(trajs.size(), derive_seed(agent_seed, 0x73706c6974ULL), cfg.train_fraction);
            std::vector<std::pair<const GridSpec*, const Trajectory*>> br_data;
            for (std::size_t i : train) br_data.emplace_back(&goal_specs[goal_of[i]], &trajs[i]);
            const double br_beta = br_data.empty() ? 0.0 : fit_br_beta(br_data, truth.theta_r);
            out.br_beta[id] = br_beta;
            const Eigen::VectorXd br_theta_b = bias_only(br_beta, dim);

            for (std::size_t i : held) {
                const auto& states = trajs[i].states;
                const std::size_t g_true = goal_of[i];
                for (std::size_t m = 0; m < models.size(); ++m) {
                    const Eigen::VectorXd& b = m == 0 ? theta_b : br_theta_b;
                    const std::span<const Cell> empty_prefix(states.data(), 1);
                    const auto at0 = goal_posterior(empty_prefix, goal_specs, b, truth.theta_r, prior);
                    for (std::size_t g = 0; g < prior.size(); ++g) {
                        out.max_k0_deviation = std::max(out.max_k0_deviation, std::abs(at0[g] - prior[g]));
                    }
                    for (std::size_t f = 0; f < cfg.prefix_fractions.size(); ++f) {
                        const auto len = static_cast<std::size_t>(
                            std::floor(cfg.prefix_fractions[f] * static_cast<double>(horizon) + 1e-9));
                        const std::span<const Cell> prefix(states.data(), len + 1);
                        sums[m][f] += goal_posterior(prefix, goal_specs, b, truth.theta_r, prior)[g_true];
                    }
                }
                ++prefixes;
            }
        }
        for (std::size_t m = 0; m < models.size(); ++m) {
            for (std::size_t f = 0; f < cfg.prefix_fractions.size(); ++f) {
                const double mean = prefixes == 0 ? std::nan("") : sums[m][f] / static_cast<double>(prefixes);
                out.rows.push_back({seed,
                                    condition_name(models[m], cfg.prefix_fractions[f]),
                                    {mean, static_cast<double>(prefixes)}});
            }
        }
    });

    double max_dev = 0.0;
    report.details["br_beta"] = nlohmann::json::object();
    for (std::size_t k = 0; k < per_seed.size(); ++k) {
        for (auto& row : per_seed[k].rows) report.rows.push_back(std::move(row));
        max_dev = std::max(max_dev, per_seed[k].max_k0_deviation);
        report.details["br_beta"][std::to_string(cfg.seeds[k])] = per_seed[k].br_beta;
    }
    report.details["max_empty_prefix_prior_deviation"] = max_dev;
    report.details["goal_candidates"] = nlohmann::json::array();
    for (Cell c : candidates) report.details["goal_candidates"].push_back({c.x, c.y});
    report.details["goal_prior"] = prior;
    report.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

}  // namespace bsdr
